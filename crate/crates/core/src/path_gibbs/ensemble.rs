//! Collections of `W` samples and the generating function `ρ(β)`.

use alloc::vec::Vec;
use num_complex::Complex64;

use super::SamplerError;
use crate::diagnostics::batch_means;

/// Which proposal a diagnostic refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MoveKind {
    Slice,
    WholePath,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SamplerWarning {
    /// Post burn-in acceptance outside `[0.05, 0.95]`.
    AcceptanceOutOfRange { kind: MoveKind, rate: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChainDiagnostics {
    pub chain: u64,
    pub slice_acceptance: f64,
    pub path_acceptance: f64,
    pub slice_step: f64,
    pub path_step: f64,
    /// Integrated autocorrelation time of `W` per sweep, before thinning.
    pub autocorrelation_time: f64,
    pub effective_samples: f64,
    pub thin: usize,
    pub retained: usize,
    pub warnings: Vec<SamplerWarning>,
}

/// Model and window data needed to interpret the samples.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnsembleMeta {
    pub g: f64,
    pub window: f64,
    pub dt: f64,
    pub dimension: u32,
    pub w_infinity: f64,
    /// Certified slack `ε` in `0 ≤ W ≤ W∞ + ε`.
    pub w_epsilon: f64,
    /// Deterministic error of each stored `W` (interpolation + quadrature).
    pub w_error: f64,
    /// `W∞ − W_T` of the constant path: mass cut off by the finite window.
    pub truncation_bound: f64,
    pub frozen: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PathEnsemble {
    /// Retained `W_T` values, chain after chain.
    pub w: Vec<f64>,
    pub chain_lengths: Vec<usize>,
    pub diagnostics: Vec<ChainDiagnostics>,
    pub meta: EnsembleMeta,
}

impl PathEnsemble {
    /// A one-sample ensemble with deterministic `W`.
    pub fn deterministic(w: f64, meta: EnsembleMeta) -> Self {
        Self { w: alloc::vec![w], chain_lengths: alloc::vec![1], diagnostics: Vec::new(), meta }
    }

    /// Concatenates chains; metadata must agree.
    pub fn merge(parts: Vec<PathEnsemble>) -> Result<Self, SamplerError> {
        let mut iter = parts.into_iter();
        let mut out = iter.next().ok_or(SamplerError::EmptyEnsemble)?;
        for p in iter {
            if p.meta != out.meta {
                return Err(SamplerError::IncompatibleEnsembles);
            }
            out.w.extend(p.w);
            out.chain_lengths.extend(p.chain_lengths);
            out.diagnostics.extend(p.diagnostics);
        }
        Ok(out)
    }

    pub fn len(&self) -> usize {
        self.w.len()
    }

    pub fn is_empty(&self) -> bool {
        self.w.is_empty()
    }

    /// Samples grouped by chain.
    pub fn chains(&self) -> Vec<&[f64]> {
        let mut out = Vec::with_capacity(self.chain_lengths.len());
        let mut start = 0;
        for &len in &self.chain_lengths {
            out.push(&self.w[start..start + len]);
            start += len;
        }
        out
    }

    /// Splits per-sample values of any statistic along the chain boundaries.
    pub fn split<'a>(&self, values: &'a [f64]) -> Vec<&'a [f64]> {
        let mut out = Vec::with_capacity(self.chain_lengths.len());
        let mut start = 0;
        for &len in &self.chain_lengths {
            out.push(&values[start..start + len]);
            start += len;
        }
        out
    }

    pub fn mean_w(&self) -> f64 {
        crate::diagnostics::mean(&self.w)
    }

    /// Largest stored `W` and whether all lie in `[0, W∞ + ε]`.
    pub fn range_ok(&self) -> bool {
        let upper = self.meta.w_infinity + self.meta.w_epsilon;
        self.w.iter().all(|&w| (0.0..=upper).contains(&w))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RhoEstimate {
    pub value: Complex64,
    /// Batch-means standard error of `|·|`, combined over real and imaginary parts.
    pub stderr: f64,
}

/// `ρ(β) = E[exp(−g²(1 − e^{−β}) W)]` over the ensemble.
pub fn rho_beta(ensemble: &PathEnsemble, g: f64, beta: Complex64) -> Result<RhoEstimate, SamplerError> {
    if ensemble.is_empty() {
        return Err(SamplerError::EmptyEnsemble);
    }
    let rate = (Complex64::new(1.0, 0.0) - (-beta).exp()) * (g * g);
    let terms: Vec<Complex64> = ensemble.w.iter().map(|&w| (-rate * w).exp()).collect();
    let re: Vec<f64> = terms.iter().map(|z| z.re).collect();
    let im: Vec<f64> = terms.iter().map(|z| z.im).collect();
    let bre = batch_means(&ensemble.split(&re));
    let bim = batch_means(&ensemble.split(&im));
    Ok(RhoEstimate { value: Complex64::new(bre.mean, bim.mean), stderr: bre.stderr.hypot(bim.stderr) })
}
