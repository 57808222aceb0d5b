use std::sync::OnceLock;

use fracnum_core::combinatorics::{a_coefficient, poisson_raw_moment, stirling2};
use fracnum_core::expectations::{ground_state_expectation, PowerQuery};
use fracnum_core::model::{CutoffFunction, ModelSpec};
use fracnum_core::oracle::{exact_diag_ground_state, mgf_crosscheck, SingleModeModel};
use fracnum_core::pair_potential::kernel_direct;
use fracnum_core::path_gibbs::{
    chain_rng, sample_reference, EnsembleMeta, GibbsSampler, MCMCConfig, PathEnsemble, QuadratureRule,
    ReferenceProcess, TimeGrid,
};
use fracnum_core::poisson::{poisson_mgf, poisson_series, LinearMajorant, PoissonError, SeriesConfig};
use num_bigint::BigInt;
use proptest::prelude::*;

fn nelson3() -> ModelSpec {
    ModelSpec::nelson(3, 1.0, 1.0, CutoffFunction::gaussian(2f64.sqrt()), 1.0)
}

fn small_sampler() -> &'static GibbsSampler {
    static SAMPLER: OnceLock<GibbsSampler> = OnceLock::new();
    SAMPLER.get_or_init(|| {
        let model = nelson3();
        let grid = TimeGrid::new(1.0, 0.1, QuadratureRule::Simpson).unwrap();
        GibbsSampler::new(&model, ReferenceProcess::for_model(&model), grid, MCMCConfig::default()).unwrap()
    })
}

fn ensemble_of(w: Vec<f64>, g: f64) -> PathEnsemble {
    let mut ens = PathEnsemble::deterministic(
        w[0],
        EnsembleMeta {
            g,
            window: 1.0,
            dt: 0.1,
            dimension: 3,
            w_infinity: 10.0,
            w_epsilon: 0.0,
            w_error: 0.0,
            truncation_bound: 0.0,
            frozen: false,
        },
    );
    ens.chain_lengths = vec![w.len()];
    ens.w = w;
    ens
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 64, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn stirling_recurrence(m in 1usize..40, r in 1usize..40) {
        let lhs = stirling2(m + 1, r);
        let rhs = stirling2(m, r) * r + stirling2(m, r - 1);
        prop_assert_eq!(lhs, rhs);
    }

    #[test]
    fn a_coefficient_is_stirling(m in 0u32..28, r in 0u32..28) {
        prop_assert_eq!(a_coefficient(m, r), BigInt::from(stirling2(m as usize, r as usize)));
    }

    #[test]
    fn raw_moment_matches_pmf(m in 1usize..6, mu in 0.01f64..8.0) {
        let mut p = (-mu).exp();
        let mut direct = 0.0;
        for n in 0..200u32 {
            if n > 0 {
                p *= mu / f64::from(n);
            }
            direct += f64::from(n).powi(m as i32) * p;
        }
        let got = poisson_raw_moment(m, mu);
        prop_assert!((got - direct).abs() <= 1e-12 * direct.max(1.0), "{} vs {}", got, direct);
    }

    #[test]
    fn series_reproduces_mgf(u in 0.0f64..4.0, t in 0.0f64..300.0) {
        let s = poisson_series::<_, PoissonError>(
            t,
            |n| Ok((-u * n as f64).exp()),
            LinearMajorant::BOUNDED_BY_ONE,
            0,
            &SeriesConfig::default(),
        )
        .unwrap();
        let want = poisson_mgf(u, t);
        prop_assert!((s.value - want).abs() <= 1e-12 * want + 1e-300);
        prop_assert!(s.tail_bound >= 0.0);
    }

    #[test]
    fn kernel_is_positive_and_maximal_at_origin(r in 0.0f64..6.0, t in 0.0f64..6.0) {
        let m = nelson3();
        let v = kernel_direct(&m, r, t).unwrap();
        let top = kernel_direct(&m, 0.0, t).unwrap();
        prop_assert!(v.value >= -v.error);
        prop_assert!(v.value <= top.value + v.error + top.error);
    }

    #[test]
    fn reference_paths_respect_w_range(seed in any::<u64>()) {
        let sampler = small_sampler();
        let mut rng = chain_rng(seed, 0);
        let path = sample_reference(sampler.reference(), sampler.grid(), 3, &mut rng);
        let (_, w) = sampler.interaction(&path);
        prop_assert!(w >= 0.0 && w <= sampler.w_bound(), "{} > {}", w, sampler.w_bound());
        prop_assert!(w <= sampler.frozen_w() + 2.0 * sampler.meta().w_epsilon);
    }

    #[test]
    fn mean_number_is_coupling_times_mean_w(
        w in proptest::collection::vec(0.0f64..5.0, 1..40),
        g in 0.0f64..4.0,
    ) {
        let ens = ensemble_of(w.clone(), g);
        let est = ground_state_expectation(&PowerQuery::from_k(1.0).unwrap(), &ens, g).unwrap();
        let want = g * g * w.iter().sum::<f64>() / w.len() as f64;
        prop_assert!((est.value - want).abs() <= 4.0 * f64::EPSILON * want.max(f64::MIN_POSITIVE));
    }

    #[test]
    fn lyapunov_ordering_of_fractional_moments(
        w in proptest::collection::vec(0.1f64..3.0, 1..10),
        g in 0.5f64..3.0,
    ) {
        // ⟨N^a⟩^{1/a} is nondecreasing in a > 0
        let ens = ensemble_of(w, g);
        let mut last = 0.0;
        for a in [0.5, 1.0, 1.5, 2.0, 3.0] {
            let v = ground_state_expectation(&PowerQuery::from_k(a).unwrap(), &ens, g).unwrap().value;
            let norm = v.powf(1.0 / a);
            prop_assert!(norm >= last * (1.0 - 1e-9), "a {}: {} < {}", a, norm, last);
            last = norm;
        }
    }

    #[test]
    fn exact_diagonalization_is_poisson(mu in 0.0f64..6.0, omega in 0.3f64..3.0) {
        let lambda = 1.0;
        let g = omega * (2.0 * mu).sqrt();
        let model = SingleModeModel::new(omega, lambda, g);
        let gs = exact_diag_ground_state(&model).unwrap();
        prop_assert!((gs.energy + model.mu() * omega).abs() < 1e-9 * (1.0 + model.mu()));
        let coh = model.coherent_state();
        let tv: f64 = gs
            .number_distribution()
            .iter()
            .enumerate()
            .map(|(n, p)| (p - coh.number_probability(n)).abs())
            .sum();
        prop_assert!(0.5 * tv < 1e-10, "tv {}", tv);
    }

    #[test]
    fn mgf_sides_agree(mu in 0.0f64..6.0, beta in 0.0f64..4.0) {
        let model = SingleModeModel::new(1.0, 1.0, (2.0 * mu).sqrt());
        let (exact, formula) = mgf_crosscheck(&model, beta).unwrap();
        prop_assert!((exact - formula).abs() < 1e-10);
    }

    #[test]
    fn grid_weights_integrate_constants(half_steps in 1usize..60, dt in 0.01f64..0.5) {
        let window = half_steps as f64 * dt;
        let grid = TimeGrid::new(window, dt, QuadratureRule::Trapezoid).unwrap();
        let w = grid.weights();
        let full: f64 = w.full.iter().sum();
        let left: f64 = w.left.iter().sum();
        prop_assert!((full - 2.0 * window).abs() < 1e-12 * window.max(1.0));
        prop_assert!((left - window).abs() < 1e-12 * window.max(1.0));
    }
}
