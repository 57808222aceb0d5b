//! Functionals of a rate-one Poisson process at a fixed time `t`.
//!
//! `E_P[f(N_t)] = Σ_n f(n) e^{−t} tⁿ/n!` is summed outward from the mode with
//! compensated summation. The sum runs to
//! `n* = max(⌈t⌉ + ⌈12√(t+1)⌉ + 40, shift + 10)` and the discarded tail is
//! bounded through a linear majorant `|f(n)| ≤ a + b·n` and the Chernoff bound
//! `P(N_t ≥ k) ≤ e^{−t} (e·t/k)^k`. If the bound misses the tolerance the
//! window is widened until it does or the term budget runs out.

use alloc::vec::Vec;
use rand::Rng;
use rand_distr::{Distribution, Poisson};
use thiserror::Error;

use crate::bernstein::{BernsteinError, BernsteinSpec};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PoissonError {
    #[error("Poisson time t = {t} must be finite and nonnegative")]
    InvalidTime { t: f64 },
    #[error("series tail bound {achieved:e} still above tolerance {target:e} after {terms} terms")]
    TruncationNotMet { achieved: f64, target: f64, terms: u64 },
    #[error("negative branch needs m ≤ −1, got {m}")]
    InvalidNegativePower { m: i32 },
    #[error("positive branch needs m ≥ 1 and 1 ≤ r ≤ m, got m = {m}, r = {r}")]
    InvalidPositivePower { m: u32, r: u32 },
    #[error(transparent)]
    Bernstein(#[from] BernsteinError),
}

/// `E_P[e^{−u N_t}] = exp(t (e^{−u} − 1))`; `u = ∞` gives `e^{−t}`.
pub fn poisson_mgf(u: f64, t: f64) -> f64 {
    if u.is_infinite() {
        return (-t).exp();
    }
    (t * (-u).exp_m1()).exp()
}

/// `|f(n)| ≤ constant + slope·n` for all `n ≥ 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearMajorant {
    pub constant: f64,
    pub slope: f64,
}

impl LinearMajorant {
    pub const BOUNDED_BY_ONE: Self = Self { constant: 1.0, slope: 0.0 };

    fn at(&self, n: f64) -> f64 {
        self.constant + self.slope * n
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeriesConfig {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_terms: u64,
}

impl Default for SeriesConfig {
    fn default() -> Self {
        Self { rel_tol: 1e-14, abs_tol: 1e-300, max_terms: 50_000_000 }
    }
}

/// A truncated series value with a rigorous bound on the discarded mass.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeriesValue {
    pub value: f64,
    pub tail_bound: f64,
    pub terms: u64,
}

/// `ln P(N_t ≥ k)` bound for `k > t` (Chernoff); `0` otherwise.
fn log_upper_tail(t: f64, k: f64) -> f64 {
    if k <= t {
        return 0.0;
    }
    if t == 0.0 {
        return f64::NEG_INFINITY;
    }
    -t + k - k * (k / t).ln()
}

/// Default upper truncation index.
pub fn truncation_index(t: f64, shift: u64) -> u64 {
    let base = t.ceil() + (12.0 * (t + 1.0).sqrt()).ceil() + 40.0;
    (base as u64).max(shift + 10)
}

#[derive(Default)]
struct Neumaier {
    sum: f64,
    comp: f64,
}

impl Neumaier {
    fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    fn total(&self) -> f64 {
        self.sum + self.comp
    }
}

/// Sums `E[f(N_t)]` with a certified truncation bound.
pub fn poisson_series<F, E>(
    t: f64,
    mut f: F,
    majorant: LinearMajorant,
    shift: u64,
    cfg: &SeriesConfig,
) -> Result<SeriesValue, E>
where
    F: FnMut(u64) -> Result<f64, E>,
    E: From<PoissonError>,
{
    if !(t >= 0.0 && t.is_finite()) {
        return Err(PoissonError::InvalidTime { t }.into());
    }
    if t == 0.0 {
        return Ok(SeriesValue { value: f(0)?, tail_bound: 0.0, terms: 1 });
    }
    let mode = t.floor() as u64;
    let log_p_mode = -t + mode as f64 * t.ln() - libm::lgamma(mode as f64 + 1.0);
    let p_mode = log_p_mode.exp();

    // downward from the mode, stopping once the rest is provably negligible
    let mut acc = Neumaier::default();
    let mut lower_bound = 0.0;
    let mut p = p_mode;
    let mut n = mode;
    let f_cap = majorant.at(mode as f64);
    loop {
        acc.add(f(n)? * p);
        if n == 0 {
            break;
        }
        p *= n as f64 / t;
        n -= 1;
        // remaining n+1 terms each have probability ≤ p and |f| ≤ f_cap
        let rest = (n + 1) as f64 * p * f_cap;
        if rest <= 1e-3 * cfg.rel_tol * acc.total().abs() || rest < 1e-300 {
            lower_bound = rest;
            break;
        }
    }

    let mut upper = truncation_index(t, shift);
    let mut p = p_mode;
    let mut next = mode + 1;
    loop {
        while next <= upper {
            p *= t / next as f64;
            acc.add(f(next)? * p);
            next += 1;
        }
        let k = upper as f64 + 1.0;
        // E[(a + bN) 1{N ≥ k}] ≤ a P(N ≥ k) + b t P(N ≥ k − 1)
        let tail = majorant.constant * log_upper_tail(t, k).exp()
            + majorant.slope * t * log_upper_tail(t, k - 1.0).exp()
            + lower_bound;
        let value = acc.total();
        let target = cfg.abs_tol.max(cfg.rel_tol * value.abs());
        let terms = upper - n + 1;
        if tail <= target {
            return Ok(SeriesValue { value, tail_bound: tail, terms });
        }
        if terms >= cfg.max_terms {
            return Err(PoissonError::TruncationNotMet { achieved: tail, target, terms }.into());
        }
        upper += 4 * ((t + 1.0).sqrt().ceil() as u64) + 10;
    }
}

/// Which of the three weightings is being averaged.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Branch {
    /// `E_P[Ψ(N_t + r)]`, the inner factor of the `m ≥ 1` formula.
    PositivePower { m: u32, r: u32 },
    /// `E_P[Ψ(N_t)]`.
    Zero,
    /// `E_P[(N_t + 1)^m Ψ(N_t + 1)]` with `m ≤ −1`.
    NegativePower { m: i32 },
}

/// A request for one inner Poisson expectation.
///
/// `psi = None` stands for the unit weight (the Bernstein factor is absent).
#[derive(Debug, Clone, PartialEq)]
pub struct PoissonQuery {
    pub branch: Branch,
    pub psi: Option<BernsteinSpec>,
}

impl PoissonQuery {
    pub fn new(branch: Branch, psi: Option<BernsteinSpec>) -> Result<Self, PoissonError> {
        match branch {
            Branch::PositivePower { m, r } if m == 0 || r == 0 || r > m => {
                return Err(PoissonError::InvalidPositivePower { m, r })
            }
            Branch::NegativePower { m } if m > -1 => return Err(PoissonError::InvalidNegativePower { m }),
            _ => {}
        }
        Ok(Self { branch, psi })
    }

    /// Integer shift applied inside `Ψ`: `r`, `0`, or `1`.
    pub fn shift(&self) -> u64 {
        match self.branch {
            Branch::PositivePower { r, .. } => u64::from(r),
            Branch::Zero => 0,
            Branch::NegativePower { .. } => 1,
        }
    }
}

/// Memoized `Ψ(n)` on the integers.
#[derive(Debug, Clone)]
pub struct IntegerPsi {
    psi: Option<BernsteinSpec>,
    values: Vec<f64>,
    max_rel_err: f64,
}

impl IntegerPsi {
    pub fn new(psi: Option<BernsteinSpec>) -> Self {
        Self { psi, values: Vec::new(), max_rel_err: 0.0 }
    }

    pub fn spec(&self) -> Option<&BernsteinSpec> {
        self.psi.as_ref()
    }

    pub fn get(&mut self, n: u64) -> Result<f64, BernsteinError> {
        let Some(spec) = &self.psi else { return Ok(1.0) };
        let idx = n as usize;
        while self.values.len() <= idx {
            let k = self.values.len() as f64;
            let (v, e) = spec.eval_with_error(k)?;
            if v > 0.0 {
                self.max_rel_err = self.max_rel_err.max(e / v);
            }
            self.values.push(v);
        }
        Ok(self.values[idx])
    }

    /// Largest relative quadrature error among cached values.
    pub fn max_rel_err(&self) -> f64 {
        self.max_rel_err
    }

    /// `Ψ(1)`, the slope of the linear majorant `Ψ(x) ≤ Ψ(1)·max(x, 1)`.
    fn unit_value(&mut self) -> Result<f64, BernsteinError> {
        self.get(1)
    }
}

/// A [`PoissonQuery`] bound to a cache of `Ψ` on the integers.
#[derive(Debug, Clone)]
pub struct PoissonFunctional {
    branch: Branch,
    cache: IntegerPsi,
    cfg: SeriesConfig,
}

/// Value of an inner expectation with its deterministic error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InnerValue {
    pub value: f64,
    /// Series tail bound plus the propagated `Ψ` quadrature error.
    pub error: f64,
}

impl PoissonFunctional {
    pub fn new(query: PoissonQuery) -> Self {
        Self { branch: query.branch, cache: IntegerPsi::new(query.psi), cfg: SeriesConfig::default() }
    }

    pub fn with_config(mut self, cfg: SeriesConfig) -> Self {
        self.cfg = cfg;
        self
    }

    pub fn expect(&mut self, t: f64) -> Result<InnerValue, PoissonError> {
        let shift = match self.branch {
            Branch::PositivePower { r, .. } => u64::from(r),
            Branch::Zero => 0,
            Branch::NegativePower { .. } => 1,
        };
        let psi_one = self.cache.unit_value()?;
        let unit = self.cache.spec().is_none();
        // Ψ(x) ≤ Ψ(1)·max(x, 1) by concavity and Ψ(0) = 0
        let majorant = if unit {
            LinearMajorant::BOUNDED_BY_ONE
        } else {
            LinearMajorant { constant: psi_one * shift.max(1) as f64, slope: psi_one }
        };
        let cache = &mut self.cache;
        let series = match self.branch {
            Branch::PositivePower { .. } | Branch::Zero => poisson_series::<_, PoissonError>(
                t,
                |n| Ok(cache.get(n + shift)?),
                majorant,
                shift,
                &self.cfg,
            )?,
            Branch::NegativePower { m } => poisson_series::<_, PoissonError>(
                t,
                |n| {
                    let base = (n + 1) as f64;
                    Ok(base.powi(m) * cache.get(n + 1)?)
                },
                majorant,
                shift,
                &self.cfg,
            )?,
        };
        let psi_err = self.cache.max_rel_err() * series.value.abs();
        Ok(InnerValue { value: series.value, error: series.tail_bound + psi_err })
    }
}

/// One-shot `E_P[f(N_t + shift)]` for the branch encoded in `query`.
pub fn expect_functional(query: &PoissonQuery, t: f64) -> Result<f64, PoissonError> {
    PoissonFunctional::new(query.clone()).expect(t).map(|v| v.value)
}

/// One Poisson(`t`) draw.
pub fn simulate_poisson_at<R: Rng + ?Sized>(t: f64, rng: &mut R) -> u64 {
    if t <= 0.0 {
        return 0;
    }
    let dist = Poisson::new(t).expect("positive finite rate");
    let x: f64 = dist.sample(rng);
    x as u64
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bernstein::fractional_power_spec;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    // Independent oracle: plain forward pmf recursion from n = 0.
    // term-wise in log space so large t does not underflow e^{−t}
    fn pmf_sum(t: f64, n_max: u64, f: impl Fn(u64) -> f64) -> f64 {
        let mut total = if t == 0.0 { f(0) } else { 0.0 };
        if t > 0.0 {
            for n in 0..=n_max {
                let nf = n as f64;
                total += f(n) * (-t + nf * t.ln() - libm::lgamma(nf + 1.0)).exp();
            }
        }
        total
    }

    #[test]
    fn mgf_closed_form() {
        assert_eq!(poisson_mgf(0.0, 5.0), 1.0);
        assert!((poisson_mgf(f64::INFINITY, 2.0) - (-2.0f64).exp()).abs() < 1e-16);
        let oracle = pmf_sum(1.0, 40, |n| (-(n as f64)).exp());
        assert!((poisson_mgf(1.0, 1.0) - oracle).abs() < 1e-15);
        assert!((poisson_mgf(1.0, 1.0) - 0.531_463_605_386_615_7).abs() < 1e-15);
    }

    #[test]
    fn mean_via_identity_weight() {
        let q = PoissonQuery::new(Branch::Zero, Some(BernsteinSpec::identity())).unwrap();
        assert!((expect_functional(&q, 3.0).unwrap() - 3.0).abs() < 1e-13);
    }

    #[test]
    fn zero_time_square_root() {
        let q = PoissonQuery::new(Branch::Zero, Some(fractional_power_spec(1.0).unwrap())).unwrap();
        assert_eq!(expect_functional(&q, 0.0).unwrap(), 0.0);
    }

    #[test]
    fn negative_branch_weights_cancel() {
        let q = PoissonQuery::new(Branch::NegativePower { m: -1 }, Some(BernsteinSpec::identity())).unwrap();
        assert!((expect_functional(&q, 2.0).unwrap() - 1.0).abs() < 1e-13);
    }

    #[test]
    fn square_root_matches_independent_summation() {
        let q = PoissonQuery::new(Branch::Zero, Some(fractional_power_spec(1.0).unwrap())).unwrap();
        let oracle = pmf_sum(4.0, 120, |n| (n as f64).sqrt());
        assert!((oracle - 1.922_075_726_630_217_1).abs() < 1e-14);
        let got = expect_functional(&q, 4.0).unwrap();
        // Ψ(n) itself is a quadrature value at rel 1e-10
        assert!((got - oracle).abs() < 1e-9 * oracle, "{got} vs {oracle}");
        let exact = PoissonQuery::new(Branch::Zero, None).unwrap();
        let got = poisson_series::<_, PoissonError>(4.0, |n| Ok((n as f64).sqrt()), LinearMajorant { constant: 1.0, slope: 1.0 }, 0, &SeriesConfig::default()).unwrap();
        assert!((got.value - oracle).abs() < 1e-12, "{}", got.value);
        assert!((expect_functional(&exact, 4.0).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn mgf_consistency_grid() {
        for &t in &[0.0, 0.3, 1.0, 7.0, 55.0, 400.0, 2500.0] {
            for &u in &[0.0, 0.1, 1.0, 3.0] {
                let s = poisson_series::<_, PoissonError>(
                    t,
                    |n| Ok((-u * n as f64).exp()),
                    LinearMajorant::BOUNDED_BY_ONE,
                    0,
                    &SeriesConfig::default(),
                )
                .unwrap();
                let want = poisson_mgf(u, t);
                assert!((s.value - want).abs() <= 1e-12 * want.max(1e-300) + 1e-300, "t {t} u {u}: {} vs {want}", s.value);
            }
        }
    }

    #[test]
    fn truncation_certificate_is_an_upper_bound() {
        for &t in &[0.5, 5.0, 80.0, 1000.0] {
            let f = |n: u64| Ok::<_, PoissonError>(n as f64 + 2.0);
            let cfg = SeriesConfig { rel_tol: 1e-6, ..SeriesConfig::default() };
            let s = poisson_series(t, f, LinearMajorant { constant: 2.0, slope: 1.0 }, 0, &cfg).unwrap();
            let long = pmf_sum(t, 2 * truncation_index(t, 0) + 50, |n| n as f64 + 2.0);
            let change = (long - s.value).abs();
            assert!(change <= s.tail_bound + 1e-12 * long, "t {t}: change {change:e} bound {:e}", s.tail_bound);
        }
    }

    #[test]
    fn jensen_direction_and_monotonicity() {
        let spec = fractional_power_spec(1.0).unwrap();
        for r in 1..=3u32 {
            let mut f = PoissonFunctional::new(PoissonQuery::new(Branch::PositivePower { m: 3, r }, Some(spec.clone())).unwrap());
            let mut last = 0.0;
            for &t in &[0.0, 0.5, 1.0, 2.0, 5.0, 20.0, 100.0] {
                let v = f.expect(t).unwrap().value;
                assert!(v <= (t + f64::from(r)).sqrt() + 1e-9);
                assert!(v + 1e-12 >= last);
                last = v;
            }
        }
    }

    #[test]
    fn invalid_queries() {
        assert!(PoissonQuery::new(Branch::NegativePower { m: 0 }, None).is_err());
        assert!(PoissonQuery::new(Branch::PositivePower { m: 2, r: 3 }, None).is_err());
        let q = PoissonQuery::new(Branch::Zero, None).unwrap();
        assert!(matches!(expect_functional(&q, -1.0), Err(PoissonError::InvalidTime { .. })));
    }

    #[test]
    fn budget_exhaustion_is_reported() {
        let cfg = SeriesConfig { rel_tol: 0.0, abs_tol: 0.0, max_terms: 100 };
        let err = poisson_series::<_, PoissonError>(50.0, |_| Ok(1.0), LinearMajorant::BOUNDED_BY_ONE, 0, &cfg).unwrap_err();
        assert!(matches!(err, PoissonError::TruncationNotMet { .. }));
    }

    #[test]
    fn simulation_agrees_with_series() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        assert_eq!(simulate_poisson_at(0.0, &mut rng), 0);
        let n = 200_000;
        let mean = (0..n).map(|_| simulate_poisson_at(10.0, &mut rng) as f64).sum::<f64>() / n as f64;
        assert!((mean - 10.0).abs() < 3.0 * (10.0 / n as f64).sqrt());
    }
}
