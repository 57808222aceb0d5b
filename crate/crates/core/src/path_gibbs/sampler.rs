//! Metropolis–Hastings sampler for the finite-window Gibbs measure.
//!
//! A sweep visits every free time slice once with a preconditioned
//! Crank–Nicolson move against the reference conditional of that slice; every
//! `path_move_every` sweeps a whole-path move `X' = √(1−β²)X + βΞ` with a
//! fresh reference path `Ξ` follows. The kernel values of the current path
//! are cached as an `n × n` matrix so a slice move costs `O(n)` lookups.

use alloc::vec;
use alloc::vec::Vec;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::ensemble::{ChainDiagnostics, EnsembleMeta, MoveKind, PathEnsemble, SamplerWarning};
use super::grid::{distance, DiscretePath, TimeGrid, TimeWeights};
use super::reference::{fill_reference, Conditional, ReferenceProcess};
use super::SamplerError;
use crate::diagnostics::integrated_autocorrelation_time;
use crate::model::ModelSpec;
use crate::pair_potential::{
    constant_path_window, w_infinity, KernelTable, KernelTableConfig, PairKernel, TimeStencil,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Thinning {
    /// Keep every `⌈τ⌉`-th sweep, `τ` the integrated autocorrelation time of `W`.
    Auto,
    Every(usize),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MCMCConfig {
    /// Sweeps after burn-in.
    pub sweeps: usize,
    pub burn_in: usize,
    pub thinning: Thinning,
    /// Hold the path at the origin; every `W` is then the constant-path value.
    pub frozen: bool,
    /// Whole-path move after every this many sweeps (0 disables it).
    pub path_move_every: usize,
    /// Full recomputation of the cached sums every this many sweeps.
    pub recompute_every: usize,
    /// Initial Crank–Nicolson `β` of slice moves.
    pub slice_step: f64,
    /// Initial Crank–Nicolson `β` of whole-path moves.
    pub path_step: f64,
    /// Tune both steps during burn-in toward the middle of `target_acceptance`.
    pub adapt: bool,
    pub target_acceptance: (f64, f64),
    pub table: Option<KernelTableConfig>,
}

impl Default for MCMCConfig {
    fn default() -> Self {
        Self {
            sweeps: 10_000,
            burn_in: 10_000,
            thinning: Thinning::Auto,
            frozen: false,
            path_move_every: 4,
            recompute_every: 100,
            slice_step: 0.5,
            path_step: 0.1,
            adapt: true,
            target_acceptance: (0.3, 0.5),
            table: None,
        }
    }
}

impl MCMCConfig {
    pub fn validate(&self) -> Result<(), SamplerError> {
        let bad = |name, value: f64| Err(SamplerError::InvalidConfig { name, value });
        if self.sweeps == 0 {
            return bad("sweeps", 0.0);
        }
        if self.recompute_every == 0 {
            return bad("recompute_every", 0.0);
        }
        if let Thinning::Every(0) = self.thinning {
            return bad("thin", 0.0);
        }
        for (name, v) in [("slice_step", self.slice_step), ("path_step", self.path_step)] {
            if !(v > 0.0 && v <= 1.0) {
                return bad(name, v);
            }
        }
        let (lo, hi) = self.target_acceptance;
        if !(0.0 < lo && lo < hi && hi < 1.0) {
            return bad("target_acceptance", lo);
        }
        Ok(())
    }
}

/// Independent stream `chain` of the generator seeded with `seed`.
pub fn chain_rng(seed: u64, chain: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(chain);
    rng
}

/// Proposal law of one coordinate of slice `i` under a Crank–Nicolson step `β`.
pub(crate) fn slice_proposal(
    reference: &ReferenceProcess,
    path: &DiscretePath,
    i: usize,
    k: usize,
    beta: f64,
) -> Conditional {
    let dim = path.dim;
    let n = path.len();
    let prev = (i > 0).then(|| path.positions[(i - 1) * dim + k]);
    let next = (i + 1 < n).then(|| path.positions[(i + 1) * dim + k]);
    let c = reference.conditional(&path.grid, prev, next);
    let a = (1.0 - beta * beta).max(0.0).sqrt();
    Conditional { mean: c.mean + a * (path.positions[i * dim + k] - c.mean), sd: beta * c.sd }
}

/// A sampler bound to one model, reference process, grid and kernel table.
#[derive(Debug, Clone)]
pub struct GibbsSampler {
    model: ModelSpec,
    reference: ReferenceProcess,
    grid: TimeGrid,
    mcmc: MCMCConfig,
    table: KernelTable,
    weights: TimeWeights,
    stencils: Vec<TimeStencil>,
    meta: EnsembleMeta,
    frozen_w: f64,
}

impl GibbsSampler {
    pub fn new(
        model: &ModelSpec,
        reference: ReferenceProcess,
        grid: TimeGrid,
        mcmc: MCMCConfig,
    ) -> Result<Self, SamplerError> {
        model.check_integrability()?;
        mcmc.validate()?;
        let window = grid.half_window();
        let mut table_cfg = mcmc.table.unwrap_or_else(|| KernelTableConfig::for_window(window));
        table_cfg.t_max = table_cfg.t_max.max(2.0 * window);
        let table = KernelTable::build(model, &table_cfg)?;
        Self::with_table(model, reference, grid, mcmc, table)
    }

    /// Reuses a prebuilt table (it must belong to the same model).
    pub fn with_table(
        model: &ModelSpec,
        reference: ReferenceProcess,
        grid: TimeGrid,
        mcmc: MCMCConfig,
        table: KernelTable,
    ) -> Result<Self, SamplerError> {
        model.check_integrability()?;
        mcmc.validate()?;
        let window = grid.half_window();
        let stencils = (0..grid.len()).map(|lag| table.time_stencil(lag as f64 * grid.dt())).collect();
        let w_inf = w_infinity(model)?;
        let frozen_cont = constant_path_window(model, window)?;
        let mut sampler = Self {
            model: *model,
            reference,
            grid,
            mcmc,
            table,
            weights: grid.weights(),
            stencils,
            meta: EnsembleMeta {
                g: model.g,
                window,
                dt: grid.dt(),
                dimension: model.dimension,
                w_infinity: w_inf.value,
                w_epsilon: 0.0,
                w_error: 0.0,
                truncation_bound: (w_inf.value - frozen_cont.value).max(0.0),
                frozen: mcmc.frozen,
            },
            frozen_w: 0.0,
        };
        let zero = DiscretePath::zeros(grid, model.dimension as usize);
        sampler.frozen_w = sampler.interaction(&zero).1;
        // 𝒲(x, t) ≤ 𝒲(0, t): any path's discrete W is below the frozen one
        let interp = sampler.table.max_error() * window * window;
        sampler.meta.w_epsilon =
            (sampler.frozen_w - w_inf.value).max(0.0) + 2.0 * interp + w_inf.error + 1e-12 * w_inf.value;
        sampler.meta.w_error = interp + (sampler.frozen_w - frozen_cont.value).abs() + frozen_cont.error;
        Ok(sampler)
    }

    pub fn model(&self) -> &ModelSpec {
        &self.model
    }

    pub fn reference(&self) -> &ReferenceProcess {
        &self.reference
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn table(&self) -> &KernelTable {
        &self.table
    }

    pub fn meta(&self) -> &EnsembleMeta {
        &self.meta
    }

    pub fn config(&self) -> &MCMCConfig {
        &self.mcmc
    }

    /// Discrete `W_T` of the constant path.
    pub fn frozen_w(&self) -> f64 {
        self.frozen_w
    }

    /// Upper end of the admissible `W` range.
    pub fn w_bound(&self) -> f64 {
        self.meta.w_infinity + self.meta.w_epsilon
    }

    fn kernel_at(&self, r: f64, lag: usize) -> f64 {
        self.table.value_with(r, &self.stencils[lag])
    }

    /// `(S, W)`: the full-square integral and the past–future integral of a path.
    pub fn interaction(&self, path: &DiscretePath) -> (f64, f64) {
        let n = path.len();
        let TimeWeights { full, left, right } = &self.weights;
        let diag = self.kernel_at(0.0, 0);
        let c = self.grid.center();
        let (mut s, mut w) = (0.0, left[c] * right[c] * diag);
        for i in 0..n {
            let mut row_s = 0.0;
            for j in i + 1..n {
                let k = self.kernel_at(path.distance(i, j), j - i);
                row_s += full[j] * k;
                w += (left[i] * right[j] + left[j] * right[i]) * k;
            }
            s += full[i] * (full[i] * diag + 2.0 * row_s);
        }
        (s, w)
    }

    fn fill_matrix(&self, path: &DiscretePath, kmat: &mut [f64]) {
        let n = path.len();
        let diag = self.kernel_at(0.0, 0);
        for i in 0..n {
            kmat[i * n + i] = diag;
            for j in i + 1..n {
                let k = self.kernel_at(path.distance(i, j), j - i);
                kmat[i * n + j] = k;
                kmat[j * n + i] = k;
            }
        }
    }

    fn sums(&self, kmat: &[f64]) -> (f64, f64) {
        let n = self.grid.len();
        let TimeWeights { full, left, right } = &self.weights;
        let c = self.grid.center();
        let (mut s, mut w) = (0.0, left[c] * right[c] * kmat[c * n + c]);
        for i in 0..n {
            let row = &kmat[i * n..(i + 1) * n];
            let mut row_s = 0.0;
            for j in i + 1..n {
                row_s += full[j] * row[j];
                w += (left[i] * right[j] + left[j] * right[i]) * row[j];
            }
            s += full[i] * (full[i] * row[i] + 2.0 * row_s);
        }
        (s, w)
    }

    /// Changes `(ΔS, ΔW)` when slice `i` moves to `new`; fills `row` with the new kernel row.
    fn slice_delta(&self, path: &DiscretePath, kmat: &[f64], i: usize, new: &[f64], row: &mut [f64]) -> (f64, f64) {
        let n = path.len();
        let TimeWeights { full, left, right } = &self.weights;
        let (mut ds, mut dw) = (0.0, 0.0);
        for j in 0..n {
            if j == i {
                continue;
            }
            let k = self.kernel_at(distance(new, path.at(j)), i.abs_diff(j));
            row[j] = k;
            let dk = k - kmat[i * n + j];
            ds += full[j] * dk;
            dw += (left[i] * right[j] + left[j] * right[i]) * dk;
        }
        (2.0 * full[i] * ds, dw)
    }

    fn coupling(&self) -> f64 {
        0.5 * self.model.g * self.model.g
    }

    /// One chain. `chain` only labels the diagnostics; independence comes from `rng`.
    pub fn run_chain<R: Rng + ?Sized>(&self, chain: u64, rng: &mut R) -> Result<PathEnsemble, SamplerError> {
        let cfg = &self.mcmc;
        if cfg.frozen {
            return self.frozen_chain(chain);
        }
        let n = self.grid.len();
        let dim = self.model.dimension as usize;
        let coupling = self.coupling();
        let bound = self.w_bound();
        let target = 0.5 * (cfg.target_acceptance.0 + cfg.target_acceptance.1);

        let mut path = DiscretePath::zeros(self.grid, dim);
        fill_reference(&self.reference, &mut path, rng);
        let mut proposal = path.clone();
        let mut kmat = vec![0.0; n * n];
        let mut kprop = vec![0.0; n * n];
        self.fill_matrix(&path, &mut kmat);
        let (mut s, mut w) = self.sums(&kmat);
        if !(coupling * s).is_finite() {
            return Err(SamplerError::NonFiniteDensity { sweep: 0 });
        }

        let mut row = vec![0.0; n];
        let mut new = [0.0; 3];
        let (mut slice_beta, mut path_beta) = (cfg.slice_step, cfg.path_step);
        let (mut slice_tries, mut slice_acc, mut path_tries, mut path_acc) = (0usize, 0usize, 0usize, 0usize);
        let mut path_moves_seen = 0usize;
        let mut recorded = Vec::with_capacity(cfg.sweeps);
        let total = cfg.burn_in + cfg.sweeps;

        for sweep in 0..total {
            let burning = sweep < cfg.burn_in;
            let mut sweep_tries = 0usize;
            let mut sweep_acc = 0usize;
            for i in 0..n {
                if self.reference.is_pinned(&self.grid, i) {
                    continue;
                }
                for (k, slot) in new.iter_mut().enumerate().take(dim) {
                    let law = slice_proposal(&self.reference, &path, i, k, slice_beta);
                    let z: f64 = StandardNormal.sample(rng);
                    *slot = law.mean + law.sd * z;
                }
                let (ds, dw) = self.slice_delta(&path, &kmat, i, &new[..dim], &mut row);
                let log_a = coupling * ds;
                if !log_a.is_finite() {
                    return Err(SamplerError::NonFiniteDensity { sweep });
                }
                let accept = log_a >= 0.0 || rng.random::<f64>() < log_a.exp();
                sweep_tries += 1;
                if accept {
                    sweep_acc += 1;
                    path.at_mut(i).copy_from_slice(&new[..dim]);
                    for j in (0..n).filter(|&j| j != i) {
                        kmat[i * n + j] = row[j];
                        kmat[j * n + i] = row[j];
                    }
                    s += ds;
                    w += dw;
                }
            }
            if burning {
                if cfg.adapt && sweep_tries > 0 {
                    let rate = sweep_acc as f64 / sweep_tries as f64;
                    slice_beta = adapt_step(slice_beta, rate - target, sweep);
                }
            } else {
                slice_tries += sweep_tries;
                slice_acc += sweep_acc;
            }

            if cfg.path_move_every > 0 && (sweep + 1) % cfg.path_move_every == 0 {
                fill_reference(&self.reference, &mut proposal, rng);
                let a = (1.0 - path_beta * path_beta).max(0.0).sqrt();
                for (p, &x) in proposal.positions.iter_mut().zip(&path.positions) {
                    *p = a * x + path_beta * *p;
                }
                self.fill_matrix(&proposal, &mut kprop);
                let (s2, w2) = self.sums(&kprop);
                let log_a = coupling * (s2 - s);
                if !log_a.is_finite() {
                    return Err(SamplerError::NonFiniteDensity { sweep });
                }
                let accept = log_a >= 0.0 || rng.random::<f64>() < log_a.exp();
                if accept {
                    core::mem::swap(&mut path, &mut proposal);
                    core::mem::swap(&mut kmat, &mut kprop);
                    s = s2;
                    w = w2;
                }
                if burning {
                    if cfg.adapt {
                        let hit = if accept { 1.0 } else { 0.0 };
                        path_beta = adapt_step(path_beta, hit - target, path_moves_seen);
                    }
                    path_moves_seen += 1;
                } else {
                    path_tries += 1;
                    path_acc += usize::from(accept);
                }
            }

            if (sweep + 1) % cfg.recompute_every == 0 {
                (s, w) = self.sums(&kmat);
            }
            if !(w >= -1e-12 * bound && w <= bound) {
                return Err(SamplerError::WRangeViolation { w, bound, sweep });
            }
            if !burning {
                recorded.push(w.max(0.0));
            }
        }

        let rate = |acc: usize, tries: usize| if tries == 0 { f64::NAN } else { acc as f64 / tries as f64 };
        let slice_rate = rate(slice_acc, slice_tries);
        let path_rate = rate(path_acc, path_tries);
        let mut warnings = Vec::new();
        for (kind, r) in [(MoveKind::Slice, slice_rate), (MoveKind::WholePath, path_rate)] {
            if r.is_finite() && !(0.05..=0.95).contains(&r) {
                warnings.push(SamplerWarning::AcceptanceOutOfRange { kind, rate: r });
            }
        }
        Ok(self.finish(chain, recorded, slice_rate, path_rate, slice_beta, path_beta, warnings))
    }

    fn frozen_chain(&self, chain: u64) -> Result<PathEnsemble, SamplerError> {
        let bound = self.w_bound();
        if !(self.frozen_w >= 0.0 && self.frozen_w <= bound) {
            return Err(SamplerError::WRangeViolation { w: self.frozen_w, bound, sweep: 0 });
        }
        let recorded = vec![self.frozen_w; self.mcmc.sweeps];
        Ok(self.finish(chain, recorded, f64::NAN, f64::NAN, 0.0, 0.0, Vec::new()))
    }

    #[allow(clippy::too_many_arguments)]
    fn finish(
        &self,
        chain: u64,
        recorded: Vec<f64>,
        slice_rate: f64,
        path_rate: f64,
        slice_beta: f64,
        path_beta: f64,
        warnings: Vec<SamplerWarning>,
    ) -> PathEnsemble {
        let tau = integrated_autocorrelation_time(&recorded);
        let thin = match self.mcmc.thinning {
            Thinning::Auto => tau.ceil().max(1.0) as usize,
            Thinning::Every(k) => k,
        };
        let kept: Vec<f64> = recorded.iter().copied().step_by(thin).collect();
        let diagnostics = ChainDiagnostics {
            chain,
            slice_acceptance: slice_rate,
            path_acceptance: path_rate,
            slice_step: slice_beta,
            path_step: path_beta,
            autocorrelation_time: tau,
            effective_samples: recorded.len() as f64 / tau,
            thin,
            retained: kept.len(),
            warnings,
        };
        PathEnsemble { chain_lengths: vec![kept.len()], w: kept, diagnostics: vec![diagnostics], meta: self.meta }
    }
}

/// Robbins–Monro update of a Crank–Nicolson step on the log scale.
fn adapt_step(beta: f64, error: f64, count: usize) -> f64 {
    let gain = 1.0 / (1.0 + count as f64).sqrt();
    (beta.ln() + gain * error).exp().clamp(1e-3, 1.0)
}

/// Builds a sampler and runs one chain.
pub fn run_gibbs_chain<R: Rng + ?Sized>(
    model: &ModelSpec,
    reference: ReferenceProcess,
    grid: TimeGrid,
    mcmc: MCMCConfig,
    rng: &mut R,
) -> Result<PathEnsemble, SamplerError> {
    GibbsSampler::new(model, reference, grid, mcmc)?.run_chain(0, rng)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diagnostics::{batch_means, ks_two_sample};
    use crate::model::CutoffFunction;
    use crate::path_gibbs::grid::QuadratureRule;
    use crate::path_gibbs::reference::sample_reference;
    use crate::path_gibbs::rho_beta;
    use num_complex::Complex64;

    fn nelson(d: u32, g: f64) -> ModelSpec {
        ModelSpec::nelson(d, 1.0, 1.0, CutoffFunction::gaussian(2f64.sqrt()), g)
    }

    fn quick(sweeps: usize, burn_in: usize) -> MCMCConfig {
        MCMCConfig { sweeps, burn_in, thinning: Thinning::Every(1), ..MCMCConfig::default() }
    }

    fn gaussian_logpdf(x: f64, c: Conditional) -> f64 {
        let z = (x - c.mean) / c.sd;
        -0.5 * z * z - c.sd.ln()
    }

    #[test]
    fn incremental_delta_matches_full_recompute() {
        let model = nelson(3, 1.0);
        let grid = TimeGrid::new(1.0, 0.25, QuadratureRule::Simpson).unwrap();
        let sampler = GibbsSampler::new(&model, ReferenceProcess::for_model(&model), grid, quick(1, 0)).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let path = sample_reference(sampler.reference(), &grid, 3, &mut rng);
        let n = grid.len();
        let mut kmat = vec![0.0; n * n];
        sampler.fill_matrix(&path, &mut kmat);
        let (s0, w0) = sampler.sums(&kmat);
        let (s1, w1) = sampler.interaction(&path);
        assert!((s0 - s1).abs() < 1e-12 * s0 && (w0 - w1).abs() < 1e-12 * w0);
        for i in [0, 3, grid.center(), n - 1] {
            let new = [0.3, -0.7, 1.1];
            let mut row = vec![0.0; n];
            let (ds, dw) = sampler.slice_delta(&path, &kmat, i, &new, &mut row);
            let mut moved = path.clone();
            moved.at_mut(i).copy_from_slice(&new);
            let (s2, w2) = sampler.interaction(&moved);
            assert!((s2 - s0 - ds).abs() < 1e-11, "slice {i}");
            assert!((w2 - w0 - dw).abs() < 1e-11, "slice {i}");
        }
    }

    // Three time slices, each restricted to a five-point lattice; proposals
    // draw slice i from the reference conditional normalized on the lattice.
    #[test]
    fn detailed_balance_on_three_site_grid() {
        let model = nelson(1, 1.5);
        let grid = TimeGrid::new(0.5, 0.5, QuadratureRule::Trapezoid).unwrap();
        assert_eq!(grid.len(), 3);
        let reference = ReferenceProcess::for_model(&model);
        let sampler = GibbsSampler::new(&model, reference, grid, quick(1, 0)).unwrap();
        let lattice = [-1.0, -0.4, 0.0, 0.5, 1.2];
        let m = lattice.len();
        let states: Vec<[usize; 3]> =
            (0..m * m * m).map(|s| [s / (m * m), (s / m) % m, s % m]).collect();
        let to_path = |st: &[usize; 3]| {
            let mut p = DiscretePath::zeros(grid, 1);
            for (i, &l) in st.iter().enumerate() {
                p.positions[i] = lattice[l];
            }
            p
        };
        let coupling = sampler.coupling();
        let log_pi: Vec<f64> = states
            .iter()
            .map(|st| {
                let p = to_path(st);
                reference.log_density(&p) + coupling * sampler.interaction(&p).0
            })
            .collect();
        let ns = states.len();
        let mut p_mat = vec![0.0; ns * ns];
        for (a, st) in states.iter().enumerate() {
            let path = to_path(st);
            let mut kmat = vec![0.0; 9];
            sampler.fill_matrix(&path, &mut kmat);
            for i in 0..3 {
                let law = slice_proposal(&reference, &path, i, 0, 1.0);
                let weights: Vec<f64> = lattice.iter().map(|&y| gaussian_logpdf(y, law).exp()).collect();
                let z: f64 = weights.iter().sum();
                for (l, wl) in weights.iter().enumerate() {
                    let mut next = *st;
                    next[i] = l;
                    let b = next[0] * m * m + next[1] * m + next[2];
                    let mut row = [0.0; 3];
                    let (ds, _) = sampler.slice_delta(&path, &kmat, i, &[lattice[l]], &mut row);
                    let accept = (coupling * ds).exp().min(1.0);
                    p_mat[a * ns + b] += wl / z / 3.0 * accept;
                }
            }
            let out: f64 = p_mat[a * ns..(a + 1) * ns].iter().sum();
            p_mat[a * ns + a] += 1.0 - out;
        }
        let max_lp = log_pi.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let pi: Vec<f64> = log_pi.iter().map(|l| (l - max_lp).exp()).collect();
        for a in 0..ns {
            for b in 0..ns {
                let lhs = pi[a] * p_mat[a * ns + b];
                let rhs = pi[b] * p_mat[b * ns + a];
                assert!((lhs - rhs).abs() <= 1e-12 * (lhs.abs() + rhs.abs() + 1e-300), "{a} -> {b}");
            }
        }
        // stationarity
        for b in 0..ns {
            let flow: f64 = (0..ns).map(|a| pi[a] * p_mat[a * ns + b]).sum();
            assert!((flow - pi[b]).abs() < 1e-12 * pi.iter().sum::<f64>());
        }
    }

    #[test]
    fn crank_nicolson_slice_moves_are_reversible() {
        let model = nelson(1, 2.0);
        let grid = TimeGrid::new(0.5, 0.5, QuadratureRule::Trapezoid).unwrap();
        let reference = ReferenceProcess::for_model(&model);
        let sampler = GibbsSampler::new(&model, reference, grid, quick(1, 0)).unwrap();
        let coupling = sampler.coupling();
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for trial in 0..50 {
            let x = sample_reference(&reference, &grid, 1, &mut rng);
            let i = trial % 3;
            let beta = 0.3;
            let mut y = x.clone();
            let z: f64 = StandardNormal.sample(&mut rng);
            y.positions[i] += 0.4 * z;
            let target = |p: &DiscretePath| reference.log_density(p) + coupling * sampler.interaction(p).0;
            let log_q = |from: &DiscretePath, to: &DiscretePath| {
                gaussian_logpdf(to.positions[i], slice_proposal(&reference, from, i, 0, beta))
            };
            let mut kmat = vec![0.0; 9];
            let mut row = [0.0; 3];
            sampler.fill_matrix(&x, &mut kmat);
            let (ds, _) = sampler.slice_delta(&x, &kmat, i, &y.positions[i..=i], &mut row);
            let fwd = target(&x) + log_q(&x, &y) + (coupling * ds).min(0.0);
            let bwd = target(&y) + log_q(&y, &x) + (-coupling * ds).min(0.0);
            assert!((fwd - bwd).abs() < 1e-9, "trial {trial}: {fwd} vs {bwd}");
        }
    }

    #[test]
    fn frozen_chain_is_constant_path() {
        let model = nelson(3, 1.0);
        let grid = TimeGrid::new(2.0, 0.05, QuadratureRule::Simpson).unwrap();
        let cfg = MCMCConfig { frozen: true, sweeps: 20, ..MCMCConfig::default() };
        let ens = run_gibbs_chain(&model, ReferenceProcess::for_model(&model), grid, cfg, &mut chain_rng(1, 0)).unwrap();
        let closed = constant_path_window(&model, 2.0).unwrap().value;
        assert_eq!(ens.len(), 20);
        // grid quadrature error at Δt = 0.05 is reported in the metadata
        assert!(ens.meta.w_error < 1e-5);
        assert!(ens.w.iter().all(|&w| (w - closed).abs() <= ens.meta.w_error), "{} vs {closed}", ens.w[0]);
        let rho = rho_beta(&ens, 1.0, Complex64::new(1.0, 0.0)).unwrap().value.re;
        assert!((rho - (-ens.w[0] * (1.0 - (-1.0f64).exp())).exp()).abs() < 1e-14);
    }

    #[test]
    fn zero_coupling_matches_reference_law() {
        let model = nelson(3, 0.0);
        let grid = TimeGrid::new(2.0, 0.2, QuadratureRule::Simpson).unwrap();
        let reference = ReferenceProcess::for_model(&model);
        let cfg = MCMCConfig { sweeps: 2000, burn_in: 50, thinning: Thinning::Every(4), ..MCMCConfig::default() };
        let sampler = GibbsSampler::new(&model, reference, grid, cfg).unwrap();
        let ens = sampler.run_chain(0, &mut chain_rng(3, 0)).unwrap();
        let mut rng = chain_rng(3, 99);
        let direct: Vec<f64> =
            (0..ens.len()).map(|_| sampler.interaction(&sample_reference(&reference, &grid, 3, &mut rng)).1).collect();
        let ks = ks_two_sample(&ens.w, &direct);
        assert!(ks.accepts(0.01), "{ks:?}");
        assert!(ens.range_ok());
        assert_eq!(ens.diagnostics[0].slice_acceptance, 1.0);
    }

    #[test]
    fn deterministic_replay() {
        let model = nelson(1, 1.0);
        let grid = TimeGrid::new(1.0, 0.1, QuadratureRule::Simpson).unwrap();
        let sampler = GibbsSampler::new(&model, ReferenceProcess::for_model(&model), grid, quick(50, 20)).unwrap();
        let a = sampler.run_chain(0, &mut chain_rng(42, 2)).unwrap();
        let b = sampler.run_chain(0, &mut chain_rng(42, 2)).unwrap();
        let c = sampler.run_chain(0, &mut chain_rng(42, 3)).unwrap();
        assert_eq!(a, b);
        assert_ne!(a.w, c.w);
    }

    #[test]
    fn zero_momentum_chain_pins_origin_and_stays_in_range() {
        let model = ModelSpec::zero_momentum(3, 1.0, CutoffFunction::gaussian(2f64.sqrt()), 1.0);
        let grid = TimeGrid::new(2.0, 0.1, QuadratureRule::Simpson).unwrap();
        let sampler = GibbsSampler::new(&model, ReferenceProcess::TwoSidedBrownian, grid, quick(300, 100)).unwrap();
        let ens = sampler.run_chain(0, &mut chain_rng(5, 0)).unwrap();
        assert!(ens.range_ok());
        assert!(ens.mean_w() > 0.0);
    }

    #[test]
    fn small_coupling_agrees_with_importance_sampling() {
        let model = nelson(3, 0.6);
        let grid = TimeGrid::new(1.0, 0.1, QuadratureRule::Simpson).unwrap();
        let reference = ReferenceProcess::for_model(&model);
        let cfg = MCMCConfig { sweeps: 6000, burn_in: 500, thinning: Thinning::Every(1), ..MCMCConfig::default() };
        let sampler = GibbsSampler::new(&model, reference, grid, cfg).unwrap();
        let ens = PathEnsemble::merge(
            (0..2).map(|c| sampler.run_chain(c, &mut chain_rng(17, c)).unwrap()).collect(),
        )
        .unwrap();
        let bm = batch_means(&ens.chains());
        // self-normalized importance sampling from the reference
        let mut rng = chain_rng(17, 100);
        let coupling = sampler.coupling();
        let draws: Vec<(f64, f64)> = (0..20_000)
            .map(|_| sampler.interaction(&sample_reference(&reference, &grid, 3, &mut rng)))
            .collect();
        let max_s = draws.iter().map(|d| d.0).fold(f64::NEG_INFINITY, f64::max);
        let wts: Vec<f64> = draws.iter().map(|d| (coupling * (d.0 - max_s)).exp()).collect();
        let z: f64 = wts.iter().sum();
        let est: f64 = wts.iter().zip(&draws).map(|(a, d)| a * d.1).sum::<f64>() / z;
        let var: f64 = wts.iter().zip(&draws).map(|(a, d)| (a / z).powi(2) * (d.1 - est).powi(2)).sum();
        let combined = (bm.stderr.powi(2) + var).sqrt();
        assert!((bm.mean - est).abs() < 3.0 * combined, "{} vs {est} ± {combined}", bm.mean);
    }

    #[test]
    fn config_validation() {
        assert!(MCMCConfig { sweeps: 0, ..MCMCConfig::default() }.validate().is_err());
        assert!(MCMCConfig { slice_step: 1.5, ..MCMCConfig::default() }.validate().is_err());
        assert!(MCMCConfig { thinning: Thinning::Every(0), ..MCMCConfig::default() }.validate().is_err());
        assert!(MCMCConfig::default().validate().is_ok());
    }
}
