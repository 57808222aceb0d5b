//! Bernstein functions `Ψ(u) = b·u + ∫₀^∞ (1 − e^{−uy}) λ(dy)`.
//!
//! A [`BernsteinSpec`] stores the drift `b` and the Lévy measure `λ`; values
//! are always produced from that representation, never from a closed form, so
//! the closed forms remain available as independent checks.
//!
//! Quadrature layout for absolutely continuous measures: the integral is
//! split at `y = 1`. On `(0, 1)` the substitution `y = v^q` with
//! `q = 1/(1 − s)` absorbs the `y^{−1−s}` singularity of the fractional
//! density, leaving the bounded integrand `q·(1 − e^{−uy})/y`. On `(1, ∞)` the
//! algebraic tail is mapped onto `(0, 1)` through `y = v^{−1/s}`, and the
//! exponentially damped log-gamma tail is integrated on a semi-infinite map.

use alloc::string::String;
use alloc::vec::Vec;
use thiserror::Error;

use crate::quadrature::{integrate, integrate_to_infinity, QuadConfig, QuadError};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum BernsteinError {
    #[error("fractional exponent alpha = {alpha} outside (0, 2)")]
    AlphaOutOfRange { alpha: f64 },
    #[error("Bernstein argument u = {u} must be finite and nonnegative")]
    NegativeArgument { u: f64 },
    #[error("drift must be finite and nonnegative, got {drift}")]
    NegativeDrift { drift: f64 },
    #[error("Lévy atom at y = {y} is not in (0, ∞)")]
    NodeOutsideSupport { y: f64 },
    #[error("Lévy atom at y = {y} has negative or non-finite weight {weight}")]
    NegativeWeight { y: f64, weight: f64 },
    #[error("Lévy integral did not converge at u = {u}: {source}")]
    Quadrature { u: f64, source: QuadError },
}

/// A Lévy measure on `(0, ∞)` with `∫ (y ∧ 1) λ(dy) < ∞`.
#[derive(Debug, Clone, PartialEq)]
pub enum LevyKind {
    /// Density `s/Γ(1−s) · y^{−1−s}` with `s = α/2`; represents `u^{α/2}`.
    ClosedFormFractional { alpha: f64 },
    /// Density `e^{−y}/y`; represents `ln(1 + u)`.
    LogGamma,
    /// Point masses `(y, weight)`.
    Tabulated { nodes: Vec<(f64, f64)> },
}

#[derive(Debug, Clone, PartialEq)]
pub struct LevyMeasure {
    kind: LevyKind,
    integrability_bound: f64,
}

impl LevyMeasure {
    pub fn fractional(alpha: f64) -> Result<Self, BernsteinError> {
        if !(alpha > 0.0 && alpha < 2.0) {
            return Err(BernsteinError::AlphaOutOfRange { alpha });
        }
        let s = alpha / 2.0;
        let c = fractional_constant(s);
        Ok(Self {
            kind: LevyKind::ClosedFormFractional { alpha },
            integrability_bound: c / (1.0 - s) + c / s,
        })
    }

    pub fn log_gamma() -> Self {
        // (1 − e^{−1}) + E₁(1)
        #[allow(clippy::excessive_precision)]
        const E1_ONE: f64 = 0.219_383_934_395_520_273_677_163_775_46;
        Self { kind: LevyKind::LogGamma, integrability_bound: 1.0 - (-1.0f64).exp() + E1_ONE }
    }

    pub fn tabulated(nodes: Vec<(f64, f64)>) -> Result<Self, BernsteinError> {
        for &(y, w) in &nodes {
            if !(y > 0.0 && y.is_finite()) {
                return Err(BernsteinError::NodeOutsideSupport { y });
            }
            if !(w >= 0.0 && w.is_finite()) {
                return Err(BernsteinError::NegativeWeight { y, weight: w });
            }
        }
        Ok(Self::tabulated_unchecked(nodes))
    }

    /// Builds an atomic measure without validating the weights.
    ///
    /// Only meant for diagnostics that must see an invalid measure, such as
    /// exercising [`check_complete_monotonicity`].
    pub fn tabulated_unchecked(nodes: Vec<(f64, f64)>) -> Self {
        let integrability_bound = nodes.iter().map(|&(y, w)| w * y.min(1.0)).sum();
        Self { kind: LevyKind::Tabulated { nodes }, integrability_bound }
    }

    pub fn zero() -> Self {
        Self::tabulated_unchecked(Vec::new())
    }

    pub fn kind(&self) -> &LevyKind {
        &self.kind
    }

    /// Cached `∫ (y ∧ 1) λ(dy)`.
    pub fn integrability_bound(&self) -> f64 {
        self.integrability_bound
    }

    /// Recomputes `∫ (y ∧ 1) λ(dy)` by quadrature, independently of the cache.
    pub fn recompute_integrability(&self, cfg: &QuadConfig) -> Result<f64, QuadError> {
        match &self.kind {
            LevyKind::ClosedFormFractional { alpha } => {
                let s = alpha / 2.0;
                let c = fractional_constant(s);
                // y = e^{−x} on (0,1), y = e^{x} on (1,∞)
                let inner = integrate_to_infinity(|x| (-(1.0 - s) * x).exp(), 0.0, cfg)?;
                let outer = integrate_to_infinity(|x| (-s * x).exp(), 0.0, cfg)?;
                Ok(c * (inner.value + outer.value))
            }
            LevyKind::LogGamma => {
                let inner = integrate(|y| (-y).exp(), 0.0, 1.0, cfg)?;
                let outer = integrate_to_infinity(|y| (-y).exp() / y, 1.0, cfg)?;
                Ok(inner.value + outer.value)
            }
            LevyKind::Tabulated { nodes } => Ok(nodes.iter().map(|&(y, w)| w * y.min(1.0)).sum()),
        }
    }

    /// Whether every atom lies in `(0, ∞)` with a nonnegative weight.
    pub fn is_valid(&self) -> bool {
        match &self.kind {
            LevyKind::Tabulated { nodes } => nodes.iter().all(|&(y, w)| y > 0.0 && y.is_finite() && w >= 0.0),
            _ => true,
        }
    }
}

/// `s/Γ(1−s)`, the normalization making the fractional density produce `u^s`.
fn fractional_constant(s: f64) -> f64 {
    s / libm::tgamma(1.0 - s)
}

/// `(1 − e^{−z})/z`, continuous at zero.
fn one_minus_exp_over(z: f64) -> f64 {
    if z.abs() < 1e-8 {
        1.0 - 0.5 * z
    } else {
        -(-z).exp_m1() / z
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BernsteinSpec {
    pub drift: f64,
    pub levy: LevyMeasure,
    pub label: String,
    pub rel_tol: f64,
}

/// Default relative tolerance for Lévy-integral evaluation.
pub const DEFAULT_REL_TOL: f64 = 1e-10;

impl BernsteinSpec {
    pub fn new(drift: f64, levy: LevyMeasure, label: impl Into<String>) -> Result<Self, BernsteinError> {
        if !(drift >= 0.0 && drift.is_finite()) {
            return Err(BernsteinError::NegativeDrift { drift });
        }
        Ok(Self { drift, levy, label: label.into(), rel_tol: DEFAULT_REL_TOL })
    }

    /// `Ψ(u) = u`, the drift-only function. Not a member of the driftless class.
    pub fn identity() -> Self {
        Self { drift: 1.0, levy: LevyMeasure::zero(), label: String::from("identity"), rel_tol: DEFAULT_REL_TOL }
    }

    /// `Ψ(u) = ln(1 + u)`.
    pub fn log1p() -> Self {
        Self { drift: 0.0, levy: LevyMeasure::log_gamma(), label: String::from("log1p"), rel_tol: DEFAULT_REL_TOL }
    }

    pub fn with_tolerance(mut self, rel_tol: f64) -> Self {
        self.rel_tol = rel_tol;
        self
    }

    /// Whether this function belongs to the driftless class used by the moment formulas.
    pub fn is_driftless(&self) -> bool {
        self.drift == 0.0
    }

    /// `Ψ(u)` evaluated from the drift and Lévy measure.
    pub fn eval(&self, u: f64) -> Result<f64, BernsteinError> {
        self.eval_with_error(u).map(|(v, _)| v)
    }

    /// `Ψ(u)` together with the quadrature error estimate.
    pub fn eval_with_error(&self, u: f64) -> Result<(f64, f64), BernsteinError> {
        if !(u >= 0.0 && u.is_finite()) {
            return Err(BernsteinError::NegativeArgument { u });
        }
        if u == 0.0 {
            return Ok((0.0, 0.0));
        }
        let (levy, err) = self.levy_part(u)?;
        Ok((self.drift * u + levy, err))
    }

    fn levy_part(&self, u: f64) -> Result<(f64, f64), BernsteinError> {
        let wrap = |source| BernsteinError::Quadrature { u, source };
        match &self.levy.kind {
            LevyKind::ClosedFormFractional { alpha } => {
                let s = alpha / 2.0;
                let c = fractional_constant(s);
                let q = 1.0 / (1.0 - s);
                // split the tolerance between the two pieces
                let cfg = QuadConfig::with_rel(0.5 * self.rel_tol).with_abs(1e-300);
                let near = integrate(|v| q * u * one_minus_exp_over(u * v.powf(q)), 0.0, 1.0, &cfg).map_err(wrap)?;
                let far = integrate(
                    |v| {
                        let y = v.powf(-1.0 / s);
                        if y.is_infinite() {
                            1.0
                        } else {
                            -(-u * y).exp_m1()
                        }
                    },
                    0.0,
                    1.0,
                    &cfg,
                )
                .map_err(wrap)?;
                Ok((c * (near.value + far.value / s), c * (near.error + far.error / s)))
            }
            LevyKind::LogGamma => {
                let cfg = QuadConfig::with_rel(0.5 * self.rel_tol).with_abs(1e-300);
                let near = integrate(|y| u * one_minus_exp_over(u * y) * (-y).exp(), 0.0, 1.0, &cfg).map_err(wrap)?;
                let far =
                    integrate_to_infinity(|y| -(-u * y).exp_m1() * (-y).exp() / y, 1.0, &cfg).map_err(wrap)?;
                Ok((near.value + far.value, near.error + far.error))
            }
            LevyKind::Tabulated { nodes } => {
                let v = nodes.iter().map(|&(y, w)| -w * (-u * y).exp_m1()).sum::<f64>();
                Ok((v, 4.0 * f64::EPSILON * v.abs()))
            }
        }
    }

    /// Closed form of `Ψ`, when one is known for the stored measure.
    pub fn closed_form(&self, u: f64) -> Option<f64> {
        let levy = match &self.levy.kind {
            LevyKind::ClosedFormFractional { alpha } => u.powf(alpha / 2.0),
            LevyKind::LogGamma => u.ln_1p(),
            LevyKind::Tabulated { nodes } => nodes.iter().map(|&(y, w)| -w * (-u * y).exp_m1()).sum(),
        };
        Some(self.drift * u + levy)
    }
}

/// Evaluates `Ψ(u)` for `u ≥ 0`.
pub fn eval_bernstein(spec: &BernsteinSpec, u: f64) -> Result<f64, BernsteinError> {
    spec.eval(u)
}

/// The driftless Bernstein function `u ↦ u^{α/2}` for `0 < α < 2`.
pub fn fractional_power_spec(alpha: f64) -> Result<BernsteinSpec, BernsteinError> {
    let levy = LevyMeasure::fractional(alpha)?;
    BernsteinSpec::new(0.0, levy, alloc::format!("u^({alpha}/2)"))
}

/// Finite-difference estimate of one derivative together with its noise floor.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DerivativeSample {
    pub u: f64,
    pub order: u32,
    pub value: f64,
    /// Magnitude below which the sign of `value` is not resolved.
    pub noise: f64,
    /// Amount by which `(−1)^n Ψ^{(n)}(u) ≤ 0` is violated beyond the noise floor.
    pub violation: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct MonotonicityReport {
    pub samples: Vec<DerivativeSample>,
    /// Largest negative value of `Ψ` on the grid, reported as a positive number.
    pub negativity: f64,
}

impl MonotonicityReport {
    /// Maximal violation for derivative order `n` (`n = 0` reports negativity of `Ψ`).
    pub fn max_violation(&self, order: u32) -> f64 {
        if order == 0 {
            return self.negativity;
        }
        self.samples.iter().filter(|s| s.order == order).map(|s| s.violation).fold(0.0, f64::max)
    }

    pub fn worst(&self) -> f64 {
        self.samples.iter().map(|s| s.violation).fold(self.negativity, f64::max)
    }

    pub fn passes(&self, tol: f64) -> bool {
        self.worst() <= tol
    }
}

fn binomial(n: u32, k: u32) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * f64::from(n - i) / f64::from(i + 1))
}

/// Sign test of `(−1)^n dⁿΨ/duⁿ ≤ 0` for `1 ≤ n ≤ order` by central differences.
///
/// The step for order `n` at `u` is `min(u/n, u·τ^{1/(n+2)})` with `τ` the
/// evaluation tolerance, which balances truncation against amplified
/// evaluation noise. Violations smaller than that noise are not reported.
pub fn check_complete_monotonicity(
    spec: &BernsteinSpec,
    grid: &[f64],
    order: u32,
) -> Result<MonotonicityReport, BernsteinError> {
    let order = order.clamp(1, 6);
    let mut report = MonotonicityReport::default();
    let tol = spec.rel_tol.max(1e-15);
    for &u in grid {
        let psi = spec.eval(u)?;
        if psi < 0.0 {
            report.negativity = report.negativity.max(-psi);
        }
        for n in 1..=order {
            let h = (u / f64::from(n)).min(u.max(1e-3) * tol.powf(1.0 / f64::from(n + 2)));
            let mut acc = 0.0;
            let mut scale = 0.0;
            for j in 0..=n {
                let x = u + (f64::from(j) - 0.5 * f64::from(n)) * h;
                let v = spec.eval(x.max(0.0))?;
                let c = binomial(n, j) * if (n - j) % 2 == 0 { 1.0 } else { -1.0 };
                acc += c * v;
                scale += binomial(n, j) * v.abs();
            }
            let value = acc / h.powi(n as i32);
            let noise = 8.0 * (tol + f64::EPSILON) * (scale + 1e-300) / h.powi(n as i32);
            let signed = if n % 2 == 0 { value } else { -value };
            report.samples.push(DerivativeSample { u, order: n, value, noise, violation: (signed - noise).max(0.0) });
        }
    }
    Ok(report)
}
