//! Invariant and oracle checks run by the `validate` command.
//!
//! Each check reports the module it covers, a stable name, and observed vs
//! expected values. The components most worth mutating (the derivative
//! coefficient and the pair kernel) are injected through [`Components`] so
//! that a deliberately broken implementation can be shown to fail.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use num_bigint::BigInt;
use num_traits::Zero;

use crate::bernstein::{check_complete_monotonicity, fractional_power_spec};
use crate::combinatorics::{a_coefficient, stirling2};
use crate::expectations::{frozen_particle_ensemble, ground_state_expectation, PowerQuery};
use crate::model::{CutoffFunction, ModelSpec};
use crate::oracle::{mgf_crosscheck, oracle_expectation, SingleModeModel};
use crate::pair_potential::{KernelTable, KernelTableConfig, PairKernel};
use crate::path_gibbs::{chain_rng, GibbsSampler, MCMCConfig, QuadratureRule, ReferenceProcess, Thinning, TimeGrid};
use crate::poisson::{poisson_mgf, poisson_series, LinearMajorant, SeriesConfig};

#[derive(Debug, Clone, PartialEq)]
pub struct CheckOutcome {
    pub module: &'static str,
    pub name: &'static str,
    pub passed: bool,
    pub observed: String,
    pub expected: String,
}

impl CheckOutcome {
    fn new(module: &'static str, name: &'static str, passed: bool, observed: String, expected: String) -> Self {
        Self { module, name, passed, observed, expected }
    }
}

/// Implementations under test.
pub struct Components<'a> {
    pub a_coefficient: &'a dyn Fn(u32, u32) -> BigInt,
    /// Overrides `𝒲(r, t)` when set; otherwise the tabulated kernel is used.
    pub kernel: Option<&'a dyn Fn(f64, f64) -> f64>,
}

impl Default for Components<'_> {
    fn default() -> Self {
        Self { a_coefficient: &a_coefficient, kernel: None }
    }
}

pub fn reference_model() -> ModelSpec {
    ModelSpec::nelson(3, 1.0, 1.0, CutoffFunction::gaussian(2f64.sqrt()), 1.0)
}

/// `a_r(m) = S(m, r)` for `m ≥ r`, zero otherwise, `1 ≤ r, m ≤ max`.
pub fn check_stirling_identity(a_fn: &dyn Fn(u32, u32) -> BigInt, max: u32) -> CheckOutcome {
    let mut first_bad = None;
    'outer: for m in 1..=max {
        for r in 1..=max {
            let want = if m >= r { BigInt::from(stirling2(m as usize, r as usize)) } else { BigInt::zero() };
            let got = a_fn(m, r);
            if got != want {
                first_bad = Some((m, r, got, want));
                break 'outer;
            }
        }
    }
    match first_bad {
        None => CheckOutcome::new(
            "combinatorics",
            "stirling_identity",
            true,
            format!("all {} pairs equal", max * max),
            String::from("a_r(m) = S(m,r)"),
        ),
        Some((m, r, got, want)) => CheckOutcome::new(
            "combinatorics",
            "stirling_identity",
            false,
            format!("a_{r}({m}) = {got}"),
            format!("{want}"),
        ),
    }
}

/// Kernel nonnegativity and monotonicity in `|t|` at the given radii.
pub fn check_kernel_positivity(kernel: &dyn Fn(f64, f64) -> f64, radii: &[f64], times: &[f64], tol: f64) -> CheckOutcome {
    let mut worst = (0.0f64, 0.0, 0.0);
    for &r in radii {
        for &t in times {
            let v = kernel(r, t);
            if v < worst.0 {
                worst = (v, r, t);
            }
        }
    }
    let passed = worst.0 >= -tol;
    CheckOutcome::new(
        "pair_potential",
        "kernel_positivity",
        passed,
        format!("min W(r,t) = {:e} at r = {}, t = {}", worst.0, worst.1, worst.2),
        format!(">= -{tol:e}"),
    )
}

fn check_bernstein() -> CheckOutcome {
    let mut worst = 0.0f64;
    for alpha in [0.25, 0.5, 1.0, 1.5, 1.9] {
        let spec = fractional_power_spec(alpha).expect("alpha in range");
        for u in [0.0, 0.1, 1.0, 4.0, 9.0, 100.0, 1000.0] {
            let exact = libm::pow(u, alpha / 2.0);
            let got = spec.eval(u).unwrap_or(f64::NAN);
            worst = worst.max((got - exact).abs() / (1.0 + exact));
        }
    }
    let spec = fractional_power_spec(1.0).expect("alpha in range");
    let mono = check_complete_monotonicity(&spec, &[0.5, 1.0, 2.0, 4.0], 3).map(|m| m.worst()).unwrap_or(f64::NAN);
    let passed = worst <= 1e-8 && mono <= 1e-6;
    CheckOutcome::new(
        "bernstein",
        "fractional_round_trip",
        passed,
        format!("max rel dev {worst:e}, monotonicity violation {mono:e}"),
        String::from("<= 1e-8, <= 1e-6"),
    )
}

fn check_poisson_mgf() -> CheckOutcome {
    let mut worst = 0.0f64;
    for &u in &[0.0, 0.1, 0.5, 1.0, 3.0] {
        for &t in &[0.0, 0.5, 4.0, 25.0] {
            let series = poisson_series::<_, crate::poisson::PoissonError>(
                t,
                |n| Ok(libm::exp(-u * n as f64)),
                LinearMajorant::BOUNDED_BY_ONE,
                0,
                &SeriesConfig::default(),
            );
            let got = series.map(|s| s.value).unwrap_or(f64::NAN);
            worst = worst.max((got - poisson_mgf(u, t)).abs());
        }
    }
    CheckOutcome::new("poisson_functionals", "mgf_identity", worst <= 1e-12, format!("{worst:e}"), String::from("<= 1e-12"))
}

fn check_oracle_pipeline() -> Vec<CheckOutcome> {
    let mut worst = 0.0f64;
    let mut failure = None;
    for &mu in &[0.5, 2.0, 10.0] {
        let model = SingleModeModel::new(1.0, 1.0, libm::sqrt(2.0 * mu));
        let ens = model.degenerate_ensemble();
        for k in [-2.0, -1.0, -0.5, 0.5, 1.0, 1.5, 2.0, 3.0, 3.5] {
            let q = PowerQuery::from_k(k).expect("finite k");
            let result = oracle_expectation(&model, &q)
                .map_err(|e| format!("{e}"))
                .and_then(|exact| ground_state_expectation(&q, &ens, model.g).map(|p| (exact, p.value)).map_err(|e| format!("{e}")));
            match result {
                Ok((exact, pipe)) => worst = worst.max((pipe - exact).abs() / exact.abs()),
                Err(e) => failure = Some(e),
            }
        }
    }
    let mut rho_worst = 0.0f64;
    for &mu in &[1.0, 5.0] {
        let model = SingleModeModel::new(1.0, 1.0, libm::sqrt(2.0 * mu));
        for beta in [0.0, 0.5, 1.0, 3.0] {
            match mgf_crosscheck(&model, beta) {
                Ok((a, b)) => rho_worst = rho_worst.max((a - b).abs()),
                Err(e) => failure = Some(format!("{e}")),
            }
        }
    }
    let observed = |v: f64| match &failure {
        Some(e) => format!("error: {e}"),
        None => format!("{v:e}"),
    };
    alloc::vec![
        CheckOutcome::new(
            "oracle",
            "pipeline_vs_exact_diagonalization",
            failure.is_none() && worst <= 1e-9,
            observed(worst),
            String::from("relative <= 1e-9"),
        ),
        CheckOutcome::new(
            "oracle",
            "rho_identity",
            failure.is_none() && rho_worst <= 1e-10,
            observed(rho_worst),
            String::from("<= 1e-10"),
        ),
    ]
}

fn check_frozen_corridor() -> CheckOutcome {
    let model = reference_model();
    let ens = match frozen_particle_ensemble(&model) {
        Ok(e) => e,
        Err(e) => {
            return CheckOutcome::new("expectations", "frozen_corridor", false, format!("error: {e}"), String::new())
        }
    };
    let w_inf = ens.meta.w_infinity;
    let mut worst = 0.0f64;
    let mut passed = true;
    for k in [1.0, 2.0, 3.0] {
        for mu in [1e2, 1e3, 1e4] {
            let g = libm::sqrt(mu / w_inf);
            let v = ground_state_expectation(&PowerQuery::from_k(k).expect("finite"), &ens, g)
                .map(|e| e.value)
                .unwrap_or(f64::NAN);
            let dev = (v / libm::pow(g, 2.0 * k) / libm::pow(w_inf, k) - 1.0).abs();
            let delta = 10.0 * k * k / mu;
            passed &= dev <= delta;
            worst = worst.max(dev / delta);
        }
    }
    CheckOutcome::new(
        "expectations",
        "frozen_corridor",
        passed,
        format!("max deviation / delta = {worst:.3e}"),
        String::from("<= 1"),
    )
}

fn check_sampler(kernel: &dyn PairKernel) -> Vec<CheckOutcome> {
    let model = reference_model().with_coupling(1.0);
    let grid = TimeGrid::new(1.0, 0.1, QuadratureRule::Simpson).expect("valid grid");
    let mcmc = MCMCConfig { sweeps: 300, burn_in: 100, thinning: Thinning::Every(1), ..MCMCConfig::default() };
    let table_cfg = KernelTableConfig { r_nodes: 96, t_nodes: 48, t_max: 2.0, r_max: None, certify: true };
    let mut out = Vec::new();
    let sampler = KernelTable::build(&model, &table_cfg)
        .map_err(crate::path_gibbs::SamplerError::from)
        .and_then(|t| GibbsSampler::with_table(&model, ReferenceProcess::for_model(&model), grid, MCMCConfig { table: Some(table_cfg), ..mcmc }, t));
    let sampler = match sampler {
        Ok(s) => s,
        Err(e) => {
            out.push(CheckOutcome::new("path_gibbs", "w_range", false, format!("error: {e}"), String::new()));
            return out;
        }
    };
    // W of random reference paths under the kernel under test
    let mut rng = chain_rng(7, 0);
    let bound = sampler.w_bound();
    let mut min_w = f64::INFINITY;
    let mut max_w = f64::NEG_INFINITY;
    for _ in 0..200 {
        let path = crate::path_gibbs::sample_reference(sampler.reference(), &grid, 3, &mut rng);
        let w = crate::pair_potential::double_time_integral(kernel, &path, 1.0).unwrap_or(f64::NAN);
        min_w = min_w.min(w);
        max_w = max_w.max(w);
    }
    out.push(CheckOutcome::new(
        "pair_potential",
        "w_range_reference_paths",
        min_w >= 0.0 && max_w <= bound,
        format!("[{min_w:.6}, {max_w:.6}]"),
        format!("[0, {bound:.6}]"),
    ));
    let chain = sampler.run_chain(0, &mut chain_rng(7, 1));
    out.push(match chain {
        Ok(ens) => CheckOutcome::new(
            "path_gibbs",
            "w_range_chain",
            ens.range_ok(),
            format!("{} samples, max {:.6}", ens.len(), ens.w.iter().copied().fold(0.0, f64::max)),
            format!("<= {bound:.6}"),
        ),
        Err(e) => CheckOutcome::new("path_gibbs", "w_range_chain", false, format!("error: {e}"), String::new()),
    });
    out
}

/// Runs every check against the given components.
pub fn run_suite(components: &Components<'_>) -> Vec<CheckOutcome> {
    let mut out = Vec::new();
    out.push(check_stirling_identity(components.a_coefficient, 20));
    out.push(check_bernstein());
    out.push(check_poisson_mgf());
    out.extend(check_oracle_pipeline());
    out.push(check_frozen_corridor());

    let model = reference_model();
    let radii = [0.0, 0.25, 0.5, 1.0, 2.0, 4.0, 8.0];
    let times = [0.0, 0.1, 0.5, 1.0, 2.0];
    match components.kernel {
        Some(k) => {
            out.push(check_kernel_positivity(k, &radii, &times, 0.0));
            out.extend(check_sampler(&|r: f64, t: f64| k(r, t)));
        }
        None => {
            let cfg = KernelTableConfig { r_nodes: 96, t_nodes: 48, t_max: 2.0, r_max: None, certify: false };
            match KernelTable::build(&model, &cfg) {
                Ok(table) => {
                    let min_node = table.min_node_value();
                    out.push(CheckOutcome::new(
                        "pair_potential",
                        "table_node_positivity",
                        min_node >= 0.0,
                        format!("{min_node:e}"),
                        String::from(">= 0"),
                    ));
                    out.push(check_kernel_positivity(&|r, t| table.value(r, t), &radii, &times, 0.0));
                    out.extend(check_sampler(&table));
                }
                Err(e) => out.push(CheckOutcome::new(
                    "pair_potential",
                    "table_build",
                    false,
                    format!("error: {e}"),
                    String::new(),
                )),
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fresh_suite_passes() {
        let report = run_suite(&Components::default());
        for c in &report {
            assert!(c.passed, "{c:?}");
        }
        assert!(report.len() >= 8);
    }

    #[test]
    fn sign_flip_in_a_coefficient_is_caught() {
        let flipped = |m: u32, r: u32| -a_coefficient(m, r);
        let c = check_stirling_identity(&flipped, 20);
        assert!(!c.passed);
        assert_eq!((c.module, c.name), ("combinatorics", "stirling_identity"));
    }

    #[test]
    fn negative_kernel_is_caught() {
        let bad = |r: f64, t: f64| 1.0 - r * libm::exp(-t);
        let report = run_suite(&Components { kernel: Some(&bad), ..Components::default() });
        let failed: Vec<_> = report.iter().filter(|c| !c.passed).map(|c| c.name).collect();
        assert!(failed.contains(&"kernel_positivity"), "{failed:?}");
    }
}
