//! Ground-state expectations of `N^m Ψ(N)` as an outer average over `W`
//! samples of an inner Poisson expectation at time `t = g²W`.
//!
//! For a power `k = m + α/2` the inner value is
//!
//! * `m ≥ 1`: `Σ_{r=1}^m S(m, r) t^r E_P[Ψ(N_t + r)]`, which reduces to the
//!   Poisson raw moment `Σ S(m, r) t^r` when `α = 0`;
//! * `m = 0`: `E_P[Ψ(N_t)]`;
//! * `m ≤ −1`: `E_P[(N_t + 1)^m Ψ(N_t + 1)]`.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use thiserror::Error;

use crate::bernstein::{fractional_power_spec, BernsteinError, BernsteinSpec};
use crate::combinatorics::{poisson_raw_moment_with, StirlingTable};
use crate::diagnostics::{batch_means, pooled_variance, CompensatedSum};
use crate::model::ModelSpec;
use crate::pair_potential::{self, w_infinity, InfraredDiagnostic, KernelError};
use crate::path_gibbs::{EnsembleMeta, PathEnsemble};
use crate::poisson::{Branch, PoissonError, PoissonFunctional, PoissonQuery};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ExpectationError {
    #[error("power k = {k} is not finite")]
    NonFinitePower { k: f64 },
    #[error("alpha = {alpha} must lie in [0, 2); fold alpha = 2 into m + 1")]
    AlphaOutOfRange { alpha: f64 },
    #[error("ensemble was sampled at g = {ensemble_g} but g = {g} was requested")]
    CouplingMismatch { ensemble_g: f64, g: f64 },
    #[error("ensemble is empty")]
    EmptyEnsemble,
    #[error("strong-coupling bounds need k >= 1, got {k}")]
    PowerBelowOne { k: f64 },
    #[error("strong-coupling bounds need a power k, not a general Bernstein weight")]
    NoPower,
    #[error("need 0 <= a < W∞ = {w_infinity}, got a = {a}")]
    InvalidOffset { a: f64, w_infinity: f64 },
    #[error(transparent)]
    Poisson(#[from] PoissonError),
    #[error(transparent)]
    Bernstein(#[from] BernsteinError),
    #[error(transparent)]
    Kernel(#[from] KernelError),
}

/// A requested weight `N^m Ψ(N)` (or `(N+1)^m Ψ(N+1)` for `m < 0`).
#[derive(Debug, Clone, PartialEq)]
pub struct PowerQuery {
    power: Option<f64>,
    m: i32,
    alpha: f64,
    psi: Option<BernsteinSpec>,
}

impl PowerQuery {
    /// `k = m + α/2` with `m = ⌊k⌋`, `α = 2(k − ⌊k⌋)`.
    pub fn from_k(k: f64) -> Result<Self, ExpectationError> {
        if !k.is_finite() || k.abs() > 1e6 {
            return Err(ExpectationError::NonFinitePower { k });
        }
        let m = k.floor();
        let alpha = 2.0 * (k - m);
        Self::from_parts(m as i32, alpha)
    }

    pub fn from_parts(m: i32, alpha: f64) -> Result<Self, ExpectationError> {
        if !(0.0..2.0).contains(&alpha) {
            return Err(ExpectationError::AlphaOutOfRange { alpha });
        }
        let psi = if alpha > 0.0 { Some(fractional_power_spec(alpha)?) } else { None };
        Ok(Self { power: Some(f64::from(m) + 0.5 * alpha), m, alpha, psi })
    }

    /// `N^m Ψ(N)` for an arbitrary Bernstein function `Ψ`.
    pub fn with_psi(m: i32, psi: BernsteinSpec) -> Self {
        Self { power: None, m, alpha: f64::NAN, psi: Some(psi) }
    }

    /// The power `k`, absent for a general `Ψ`.
    pub fn k(&self) -> Option<f64> {
        self.power
    }

    pub fn m(&self) -> i32 {
        self.m
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn psi(&self) -> Option<&BernsteinSpec> {
        self.psi.as_ref()
    }

    pub fn label(&self) -> String {
        match (self.power, &self.psi) {
            (Some(k), _) => format!("k={k}"),
            (None, Some(psi)) => format!("m={}:psi={}", self.m, psi.label),
            (None, None) => format!("m={}", self.m),
        }
    }

    fn branch_name(&self) -> &'static str {
        match (self.m, self.psi.is_some()) {
            (1.., false) => "poisson-moment",
            (1.., true) => "positive",
            (0, false) => "unit",
            (0, true) => "zero",
            (_, _) => "negative",
        }
    }
}

/// Where an estimate came from.
#[derive(Debug, Clone, PartialEq)]
pub struct Provenance {
    pub label: String,
    pub branch: &'static str,
    pub g: f64,
    pub samples: usize,
    pub chains: usize,
    pub window: f64,
    pub dt: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Estimate {
    pub value: f64,
    pub mc_stderr: f64,
    /// Series truncation, `Ψ` quadrature, and propagated `W` errors.
    pub deterministic_error: f64,
    pub n_effective: f64,
    pub provenance: Provenance,
}

/// Inner expectation as a function of `t = g²W`, reusing caches across samples.
pub struct InnerEvaluator {
    m: i32,
    stirling: StirlingTable,
    functionals: Vec<PoissonFunctional>,
    unit: bool,
}

impl InnerEvaluator {
    pub fn new(query: &PowerQuery) -> Result<Self, ExpectationError> {
        let m = query.m;
        let psi = query.psi.clone();
        let stirling = StirlingTable::new(m.max(0) as usize);
        let mut functionals = Vec::new();
        let mut unit = false;
        match m {
            1.. => {
                if psi.is_some() {
                    for r in 1..=m as u32 {
                        let q = PoissonQuery::new(Branch::PositivePower { m: m as u32, r }, psi.clone())?;
                        functionals.push(PoissonFunctional::new(q));
                    }
                }
            }
            0 => match psi {
                Some(_) => functionals.push(PoissonFunctional::new(PoissonQuery::new(Branch::Zero, psi)?)),
                None => unit = true,
            },
            _ => functionals.push(PoissonFunctional::new(PoissonQuery::new(Branch::NegativePower { m }, psi)?)),
        }
        Ok(Self { m, stirling, functionals, unit })
    }

    /// `(value, deterministic error)` at Poisson time `t`.
    pub fn eval(&mut self, t: f64) -> Result<(f64, f64), ExpectationError> {
        if self.unit {
            return Ok((1.0, 0.0));
        }
        if self.m >= 1 && self.functionals.is_empty() {
            return Ok((poisson_raw_moment_with(&self.stirling, self.m as usize, t), 0.0));
        }
        if self.m >= 1 {
            let m = self.m as usize;
            let (mut value, mut error) = (CompensatedSum::default(), 0.0);
            for (idx, f) in self.functionals.iter_mut().enumerate() {
                let r = idx + 1;
                let s = self.stirling.get_f64(m, r).unwrap_or(0.0);
                let inner = f.expect(t)?;
                let coeff = s * t.powi(r as i32);
                value.add(coeff * inner.value);
                error += coeff * inner.error;
            }
            return Ok((value.value(), error));
        }
        let inner = self.functionals[0].expect(t)?;
        Ok((inner.value, inner.error))
    }
}

/// `(φ_g, N^m Ψ(N) φ_g)` averaged over the ensemble.
pub fn ground_state_expectation(
    query: &PowerQuery,
    ensemble: &PathEnsemble,
    g: f64,
) -> Result<Estimate, ExpectationError> {
    if ensemble.is_empty() {
        return Err(ExpectationError::EmptyEnsemble);
    }
    let eg = ensemble.meta.g;
    if !ensemble.meta.frozen && (eg - g).abs() > 1e-12 * eg.abs().max(1.0) {
        return Err(ExpectationError::CouplingMismatch { ensemble_g: eg, g });
    }
    let g2 = g * g;
    let mut inner = InnerEvaluator::new(query)?;
    let mut values = Vec::with_capacity(ensemble.len());
    let mut series_err = CompensatedSum::default();
    for &w in &ensemble.w {
        let (v, e) = inner.eval(g2 * w)?;
        values.push(v);
        series_err.add(e);
    }
    let chains = ensemble.split(&values);
    let bm = batch_means(&chains);
    let n = values.len() as f64;
    // sensitivity of the average to the deterministic W error
    let w_err = ensemble.meta.w_error;
    let propagated = if w_err > 0.0 && g2 > 0.0 {
        let wbar = ensemble.mean_w();
        let lo = inner.eval(g2 * (wbar - w_err).max(0.0))?.0;
        let hi = inner.eval(g2 * (wbar + w_err))?.0;
        0.5 * (hi - lo).abs()
    } else {
        0.0
    };
    Ok(Estimate {
        value: bm.mean,
        mc_stderr: bm.stderr,
        deterministic_error: series_err.value() / n + propagated,
        n_effective: bm.n_effective(pooled_variance(&chains)),
        provenance: Provenance {
            label: query.label(),
            branch: query.branch_name(),
            g,
            samples: ensemble.len(),
            chains: ensemble.chain_lengths.len(),
            window: ensemble.meta.window,
            dt: ensemble.meta.dt,
        },
    })
}

/// `((W∞ − a)^k, W∞^k)` for a power `k ≥ 1`, given `W∞`.
pub fn corridor(query: &PowerQuery, w_inf: f64, a: f64) -> Result<(f64, f64), ExpectationError> {
    let k = query.power.ok_or(ExpectationError::NoPower)?;
    if k < 1.0 {
        return Err(ExpectationError::PowerBelowOne { k });
    }
    if !(a >= 0.0 && a < w_inf) {
        return Err(ExpectationError::InvalidOffset { a, w_infinity: w_inf });
    }
    Ok(((w_inf - a).powf(k), w_inf.powf(k)))
}

/// Strong-coupling corridor for `lim ⟨N^k⟩/g^{2k}` of the model.
pub fn strong_coupling_bounds(query: &PowerQuery, model: &ModelSpec, a: f64) -> Result<(f64, f64), ExpectationError> {
    if let Some(k) = query.power {
        if k < 1.0 {
            return Err(ExpectationError::PowerBelowOne { k });
        }
    }
    corridor(query, w_infinity(model)?.value, a)
}

/// `Ψ(g² W∞)`, an upper bound on `⟨Ψ(N)⟩` by concavity.
pub fn jensen_upper_bound(psi: &BernsteinSpec, model: &ModelSpec, g: f64) -> Result<f64, ExpectationError> {
    let w = w_infinity(model)?.value;
    Ok(psi.eval(g * g * w)?)
}

/// `½∫|φ̂|²/ω³ (1 − C|k|²) dk`, a candidate lower bound for `E[W]`.
pub fn infrared_diagnostic(model: &ModelSpec, c: f64) -> Result<InfraredDiagnostic, ExpectationError> {
    Ok(pair_potential::infrared_diagnostic(model, c)?)
}

/// The fixed-source limit: a one-sample ensemble with `W = W∞`.
pub fn frozen_particle_ensemble(model: &ModelSpec) -> Result<PathEnsemble, ExpectationError> {
    let w = w_infinity(model)?;
    Ok(PathEnsemble::deterministic(
        w.value,
        EnsembleMeta {
            g: model.g,
            window: f64::INFINITY,
            dt: 0.0,
            dimension: model.dimension,
            w_infinity: w.value,
            w_epsilon: w.error,
            w_error: w.error,
            truncation_bound: 0.0,
            frozen: true,
        },
    ))
}
