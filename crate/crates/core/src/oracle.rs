//! Single-mode fixed-source model `h = ω̄ a†a + (g/√2) λ̄ (a + a†)`, solved
//! by exact diagonalization in a truncated Fock basis.
//!
//! Its ground state is a coherent state whose number distribution is
//! Poisson with intensity `μ = g²λ̄²/(2ω̄²)`, the deterministic-`W` case of the
//! path representation with `g²W = μ`.

use alloc::vec;
use alloc::vec::Vec;
use thiserror::Error;

use crate::diagnostics::CompensatedSum;
use crate::expectations::PowerQuery;
use crate::path_gibbs::{EnsembleMeta, PathEnsemble};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum OracleError {
    #[error("Fock truncation n_max = {n_max} is below the required {required}")]
    TruncationTooSmall { n_max: usize, required: usize },
    #[error("ground state has weight {weight:e} in the top Fock states; increase n_max")]
    TailTooHeavy { weight: f64 },
    #[error("invalid single-mode parameter {name} = {value}")]
    InvalidParameter { name: &'static str, value: f64 },
    #[error("tridiagonal solve hit a zero pivot")]
    SingularSolve,
    #[error("Bernstein weight evaluation failed: {0}")]
    Weight(#[from] crate::bernstein::BernsteinError),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SingleModeModel {
    pub omega: f64,
    pub lambda: f64,
    pub g: f64,
    pub n_max: usize,
}

impl SingleModeModel {
    /// Truncation chosen from the minimum requirement.
    pub fn new(omega: f64, lambda: f64, g: f64) -> Self {
        let mut model = Self { omega, lambda, g, n_max: 0 };
        model.n_max = model.required_n_max();
        model
    }

    pub fn with_n_max(mut self, n_max: usize) -> Self {
        self.n_max = n_max;
        self
    }

    /// Poisson intensity `g²λ̄²/(2ω̄²)`.
    pub fn mu(&self) -> f64 {
        self.g * self.g * self.lambda * self.lambda / (2.0 * self.omega * self.omega)
    }

    /// `W` of the equivalent deterministic ensemble: `λ̄²/(2ω̄²)`.
    pub fn w(&self) -> f64 {
        self.lambda * self.lambda / (2.0 * self.omega * self.omega)
    }

    pub fn coherent_state(&self) -> CoherentState {
        CoherentState { mu: self.mu() }
    }

    /// `10 + ⌈10μ⌉`.
    pub fn required_n_max(&self) -> usize {
        10 + (10.0 * self.mu()).ceil() as usize
    }

    fn validate(&self) -> Result<(), OracleError> {
        if !(self.omega > 0.0 && self.omega.is_finite()) {
            return Err(OracleError::InvalidParameter { name: "omega", value: self.omega });
        }
        for (name, value) in [("lambda", self.lambda), ("g", self.g)] {
            if !value.is_finite() {
                return Err(OracleError::InvalidParameter { name, value });
            }
        }
        let required = self.required_n_max();
        if self.n_max < required {
            return Err(OracleError::TruncationTooSmall { n_max: self.n_max, required });
        }
        Ok(())
    }

    fn diagonal(&self, n: usize) -> f64 {
        self.omega * n as f64
    }

    /// Entry `(n, n+1)`.
    fn off_diagonal(&self, n: usize) -> f64 {
        self.g / 2f64.sqrt() * self.lambda * ((n + 1) as f64).sqrt()
    }

    /// A one-sample ensemble with `g²W = μ`.
    pub fn degenerate_ensemble(&self) -> PathEnsemble {
        let w = self.w();
        PathEnsemble::deterministic(
            w,
            EnsembleMeta {
                g: self.g,
                window: f64::INFINITY,
                dt: 0.0,
                dimension: 0,
                w_infinity: w,
                w_epsilon: 0.0,
                w_error: 0.0,
                truncation_bound: 0.0,
                frozen: true,
            },
        )
    }
}

/// A coherent state, characterized by its Poisson number intensity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoherentState {
    pub mu: f64,
}

impl CoherentState {
    /// `e^{−μ} μⁿ / n!`.
    pub fn number_probability(&self, n: usize) -> f64 {
        if self.mu == 0.0 {
            return if n == 0 { 1.0 } else { 0.0 };
        }
        let nf = n as f64;
        (-self.mu + nf * self.mu.ln() - libm::lgamma(nf + 1.0)).exp()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GroundState {
    pub energy: f64,
    /// Amplitudes in the Fock basis `|0⟩ … |n_max⟩`, normalized, first entry ≥ 0.
    pub state: Vec<f64>,
}

impl GroundState {
    pub fn number_distribution(&self) -> Vec<f64> {
        self.state.iter().map(|a| a * a).collect()
    }
}

/// Number of eigenvalues below `x` (Sturm sequence of the LDLᵀ pivots).
fn count_below(model: &SingleModeModel, x: f64) -> usize {
    let n = model.n_max + 1;
    let mut count = 0;
    let mut q = model.diagonal(0) - x;
    if q < 0.0 {
        count += 1;
    }
    for i in 1..n {
        let b = model.off_diagonal(i - 1);
        let prev = if q == 0.0 { f64::EPSILON * (b.abs() + 1.0) } else { q };
        q = model.diagonal(i) - x - b * b / prev;
        if q < 0.0 {
            count += 1;
        }
    }
    count
}

/// Solves the tridiagonal system `(H − σ) y = rhs` with partial pivoting.
fn solve_shifted(model: &SingleModeModel, sigma: f64, rhs: &[f64]) -> Result<Vec<f64>, OracleError> {
    let n = rhs.len();
    // rows stored as (sub, diag, sup, sup2) after elimination
    let mut dl: Vec<f64> = (0..n.saturating_sub(1)).map(|i| model.off_diagonal(i)).collect();
    let mut d: Vec<f64> = (0..n).map(|i| model.diagonal(i) - sigma).collect();
    let mut du: Vec<f64> = dl.clone();
    let mut du2 = vec![0.0; n.saturating_sub(2)];
    let mut b = rhs.to_vec();
    for i in 0..n.saturating_sub(1) {
        if d[i].abs() >= dl[i].abs() {
            if d[i] == 0.0 {
                return Err(OracleError::SingularSolve);
            }
            let f = dl[i] / d[i];
            d[i + 1] -= f * du[i];
            b[i + 1] -= f * b[i];
            dl[i] = 0.0;
        } else {
            // swap rows i and i+1
            let f = d[i] / dl[i];
            d[i] = dl[i];
            let tmp = d[i + 1];
            d[i + 1] = du[i] - f * tmp;
            if i + 1 < n - 1 {
                du2[i] = du[i + 1];
                du[i + 1] = -f * du2[i];
            }
            du[i] = tmp;
            b.swap(i, i + 1);
            b[i + 1] -= f * b[i];
        }
    }
    if d[n - 1] == 0.0 {
        return Err(OracleError::SingularSolve);
    }
    let mut y = vec![0.0; n];
    y[n - 1] = b[n - 1] / d[n - 1];
    if n > 1 {
        y[n - 2] = (b[n - 2] - du[n - 2] * y[n - 1]) / d[n - 2];
    }
    for i in (0..n.saturating_sub(2)).rev() {
        y[i] = (b[i] - du[i] * y[i + 1] - du2[i] * y[i + 2]) / d[i];
    }
    Ok(y)
}

/// Lowest eigenpair by bisection on the Sturm count and inverse iteration.
pub fn exact_diag_ground_state(model: &SingleModeModel) -> Result<GroundState, OracleError> {
    model.validate()?;
    let n = model.n_max + 1;
    if model.g == 0.0 || model.lambda == 0.0 {
        let mut state = vec![0.0; n];
        state[0] = 1.0;
        return Ok(GroundState { energy: 0.0, state });
    }
    // Gershgorin interval
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for i in 0..n {
        let left = if i > 0 { model.off_diagonal(i - 1).abs() } else { 0.0 };
        let right = if i + 1 < n { model.off_diagonal(i).abs() } else { 0.0 };
        lo = lo.min(model.diagonal(i) - left - right);
        hi = hi.max(model.diagonal(i) + left + right);
    }
    let scale = lo.abs().max(hi.abs()).max(1.0);
    while hi - lo > 4.0 * f64::EPSILON * scale {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if count_below(model, mid) >= 1 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    let energy = 0.5 * (lo + hi);
    let sigma = energy - 1e-10 * scale;
    let mut v: Vec<f64> = (0..n).map(|i| 1.0 / (1.0 + i as f64)).collect();
    for _ in 0..4 {
        let y = solve_shifted(model, sigma, &v)?;
        let norm = y.iter().map(|a| a * a).sum::<f64>().sqrt();
        v = y.iter().map(|a| a / norm).collect();
    }
    if v[0] < 0.0 {
        v.iter_mut().for_each(|a| *a = -*a);
    }
    // weight on the truncation boundary
    let tail = v[n - 1] * v[n - 1];
    if tail > 1e-12 {
        return Err(OracleError::TailTooHeavy { weight: tail });
    }
    // Rayleigh quotient refines the energy
    let mut num = CompensatedSum::default();
    for i in 0..n {
        let mut hv = model.diagonal(i) * v[i];
        if i > 0 {
            hv += model.off_diagonal(i - 1) * v[i - 1];
        }
        if i + 1 < n {
            hv += model.off_diagonal(i) * v[i + 1];
        }
        num.add(v[i] * hv);
    }
    Ok(GroundState { energy: num.value(), state: v })
}

/// The branch weight as an independent closed form: `nᵏ` for `k ≥ 0`,
/// `(n+1)ᵏ` for `k < 0`, or `n^m Ψ(n)` / `(n+1)^m Ψ(n+1)` for a general `Ψ`.
fn weight(query: &PowerQuery, n: usize) -> Result<f64, OracleError> {
    let nf = n as f64;
    match (query.k(), query.psi()) {
        (Some(k), _) if k >= 0.0 => Ok(if k == 0.0 { 1.0 } else { nf.powf(k) }),
        (Some(k), _) => Ok((nf + 1.0).powf(k)),
        (None, Some(psi)) => {
            let m = query.m();
            if m >= 0 {
                Ok(nf.powi(m) * psi.eval(nf)?)
            } else {
                Ok((nf + 1.0).powi(m) * psi.eval(nf + 1.0)?)
            }
        }
        (None, None) => Ok(nf.powi(query.m())),
    }
}

/// `Σ_n f(n) |ψ_n|²` over the exact ground state.
pub fn oracle_expectation(model: &SingleModeModel, query: &PowerQuery) -> Result<f64, OracleError> {
    let gs = exact_diag_ground_state(model)?;
    let mut acc = CompensatedSum::default();
    for (n, a) in gs.state.iter().enumerate() {
        acc.add(weight(query, n)? * a * a);
    }
    Ok(acc.value())
}

/// `(Σ e^{−βn}|ψ_n|², e^{−μ(1−e^{−β})})`.
pub fn mgf_crosscheck(model: &SingleModeModel, beta: f64) -> Result<(f64, f64), OracleError> {
    let gs = exact_diag_ground_state(model)?;
    let mut acc = CompensatedSum::default();
    for (n, a) in gs.state.iter().enumerate() {
        acc.add((-beta * n as f64).exp() * a * a);
    }
    let formula = (-model.mu() * -(-beta).exp_m1()).exp();
    Ok((acc.value(), formula))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expectations::ground_state_expectation;

    #[test]
    fn vacuum_at_zero_coupling() {
        let gs = exact_diag_ground_state(&SingleModeModel::new(1.0, 1.0, 0.0)).unwrap();
        assert_eq!(gs.energy, 0.0);
        assert_eq!(gs.state[0], 1.0);
        assert!(gs.state[1..].iter().all(|&a| a == 0.0));
    }

    #[test]
    fn displaced_oscillator() {
        let model = SingleModeModel::new(1.0, 2f64.sqrt(), 1.0);
        assert!((model.mu() - 1.0).abs() < 1e-15);
        let gs = exact_diag_ground_state(&model).unwrap();
        assert!((gs.energy + 1.0).abs() < 1e-10);
        let mut closed = (-0.5f64).exp();
        for (n, &a) in gs.state.iter().enumerate() {
            if n > 0 {
                closed *= -1.0 / (n as f64).sqrt();
            }
            assert!((a - closed).abs() < 1e-10, "n {n}: {a} vs {closed}");
        }
    }

    #[test]
    fn energy_identity_and_poisson_law() {
        for &(omega, lambda, g) in &[(0.7, 1.3, 2.0), (2.0, 1.0, 3.0), (1.0, 0.5, 8.0)] {
            let model = SingleModeModel::new(omega, lambda, g);
            let gs = exact_diag_ground_state(&model).unwrap();
            assert!((gs.energy + model.mu() * omega).abs() < 1e-9 * (1.0 + model.mu()));
            let coh = model.coherent_state();
            let tv: f64 =
                gs.number_distribution().iter().enumerate().map(|(n, p)| (p - coh.number_probability(n)).abs()).sum();
            assert!(0.5 * tv < 1e-10, "tv {tv}");
        }
    }

    #[test]
    fn truncation_errors() {
        let model = SingleModeModel::new(1.0, 1.0, 18f64.sqrt());
        assert!((model.mu() - 9.0).abs() < 1e-14);
        let required = model.required_n_max();
        assert!(required == 100 || required == 101);
        assert!(matches!(
            exact_diag_ground_state(&model.with_n_max(20)),
            Err(OracleError::TruncationTooSmall { required: r, n_max: 20 }) if r == required
        ));
        let tail = model.coherent_state().number_probability(model.n_max - 5);
        assert!(tail < 1e-30);
    }

    #[test]
    fn oracle_examples() {
        let k1 = PowerQuery::from_k(1.0).unwrap();
        let m1 = SingleModeModel::new(1.0, 2f64.sqrt(), 1.0);
        assert!((oracle_expectation(&m1, &k1).unwrap() - 1.0).abs() < 1e-10);
        let m2 = SingleModeModel::new(1.0, 2f64.sqrt(), 2f64.sqrt());
        assert!((oracle_expectation(&m2, &PowerQuery::from_k(2.0).unwrap()).unwrap() - 6.0).abs() < 1e-9);
        let m4 = SingleModeModel::new(1.0, 2f64.sqrt(), 2.0);
        assert!((m4.mu() - 4.0).abs() < 1e-15);
        let half = oracle_expectation(&m4, &PowerQuery::from_k(0.5).unwrap()).unwrap();
        assert!((half - 1.922_075_726_630_217_1).abs() < 1e-10);
    }

    #[test]
    fn pipeline_agrees_with_oracle() {
        for &mu in &[0.5f64, 2.0, 10.0] {
            let model = SingleModeModel::new(1.0, 1.0, (2.0 * mu).sqrt());
            let ens = model.degenerate_ensemble();
            for k in [-2.0, -1.0, -0.5, 0.5, 1.0, 1.5, 2.0, 3.0, 3.5] {
                let q = PowerQuery::from_k(k).unwrap();
                let exact = oracle_expectation(&model, &q).unwrap();
                let pipe = ground_state_expectation(&q, &ens, model.g).unwrap().value;
                assert!((pipe - exact).abs() <= 1e-9 * exact.abs(), "mu {mu} k {k}: {pipe} vs {exact}");
            }
        }
    }

    #[test]
    fn mgf_examples() {
        let m = SingleModeModel::new(1.0, 2f64.sqrt(), 1.0);
        assert_eq!(mgf_crosscheck(&m, 0.0).unwrap().1, 1.0);
        assert!((mgf_crosscheck(&m, 0.0).unwrap().0 - 1.0).abs() < 1e-14);
        let (exact, formula) = mgf_crosscheck(&m, 1.0).unwrap();
        let want = (-(1.0 - (-1.0f64).exp())).exp();
        assert!((exact - want).abs() < 1e-12 && (formula - want).abs() < 1e-15);
        let free = SingleModeModel::new(1.0, 1.0, 0.0);
        assert_eq!(mgf_crosscheck(&free, 2.0).unwrap(), (1.0, 1.0));
    }
}
