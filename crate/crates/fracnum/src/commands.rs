//! The `sample`, `expect`, `sweep-g` and `validate` subcommands.

use std::path::{Path, PathBuf};

use fracnum_core::bernstein::BernsteinSpec;
use fracnum_core::expectations::{corridor, ground_state_expectation, jensen_upper_bound, PowerQuery};
use fracnum_core::pair_potential::{w_infinity, KernelTable, KernelTableConfig};
use fracnum_core::path_gibbs::{GibbsSampler, PathEnsemble, SamplerWarning};
use fracnum_core::validation::{run_suite, CheckOutcome, Components};
use serde::Serialize;
use thiserror::Error;

use crate::config::{ConfigError, RunConfig};
use crate::io::{self, IoError, ResultRow, Stamp, SweepRow};
use crate::parallel::run_chains;

#[derive(Debug, Error)]
pub enum CommandError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Io(#[from] IoError),
    #[error(transparent)]
    Numerics(#[from] fracnum_core::Error),
    #[error("{path}: ensemble was sampled under model hash {found}, configuration has {expected}")]
    HashMismatch { path: PathBuf, expected: String, found: String },
    #[error("{path}: ensemble coupling g = {found} does not match requested g = {expected}")]
    CouplingMismatch { path: PathBuf, expected: f64, found: f64 },
    #[error("no ensemble for g = {g} at {path}; run `sample` first")]
    MissingEnsemble { g: f64, path: PathBuf },
}

impl CommandError {
    pub fn is_config(&self) -> bool {
        matches!(self, Self::Config(_))
    }
}

fn numerics<E: Into<fracnum_core::Error>>(e: E) -> CommandError {
    CommandError::Numerics(e.into())
}

/// Per-coupling outcome of `sample`.
#[derive(Debug, Clone)]
pub struct SampleSummary {
    pub g: f64,
    pub ensemble_path: PathBuf,
    pub samples: usize,
    pub mean_w: f64,
    pub w_infinity: f64,
    pub w_epsilon: f64,
    pub warnings: Vec<SamplerWarning>,
}

fn rule_name(cfg: &RunConfig) -> String {
    format!("{:?}", cfg.sampler.grid.rule()).to_ascii_lowercase()
}

fn build_table(cfg: &RunConfig) -> Result<KernelTable, CommandError> {
    let window = cfg.sampler.grid.half_window();
    let mut table_cfg = cfg.sampler.mcmc.table.unwrap_or_else(|| KernelTableConfig::for_window(window));
    table_cfg.t_max = table_cfg.t_max.max(2.0 * window);
    log::info!("tabulating kernel on {}×{} nodes", table_cfg.r_nodes, table_cfg.t_nodes);
    KernelTable::build(&cfg.model, &table_cfg).map_err(numerics)
}

fn sample_one(
    cfg: &RunConfig,
    table: &KernelTable,
    g_index: usize,
    g: f64,
) -> Result<(PathEnsemble, SampleSummary), CommandError> {
    let s = &cfg.sampler;
    let model = cfg.model_at(g);
    let sampler = GibbsSampler::with_table(&model, s.reference, s.grid, s.mcmc, table.clone()).map_err(numerics)?;
    let first_stream = (g_index * s.chains) as u64;
    let ens = run_chains(&sampler, s.chains, s.seed, first_stream).map_err(numerics)?;
    let warnings: Vec<SamplerWarning> = ens.diagnostics.iter().flat_map(|d| d.warnings.iter().copied()).collect();
    for w in &warnings {
        let SamplerWarning::AcceptanceOutOfRange { kind, rate } = w;
        log::warn!("g = {g}: {kind:?} acceptance {rate:.3} outside [0.05, 0.95]");
    }
    let stamp = Stamp {
        model_hash: &cfg.model_hash(),
        config_hash: &cfg.config_hash(),
        seed: s.seed,
        rule: &rule_name(cfg),
    };
    let (ensemble_path, _) = io::write_ensemble(&cfg.output.dir, &ens, stamp)?;
    let summary = SampleSummary {
        g,
        ensemble_path,
        samples: ens.len(),
        mean_w: ens.mean_w(),
        w_infinity: ens.meta.w_infinity,
        w_epsilon: ens.meta.w_epsilon,
        warnings,
    };
    Ok((ens, summary))
}

/// Samples and stores one ensemble per configured coupling.
pub fn sample(cfg: &RunConfig) -> Result<Vec<SampleSummary>, CommandError> {
    let table = build_table(cfg)?;
    if cfg.output.kernel_table {
        io::write_kernel_table(&cfg.output.dir.join("kernel.csv"), table.nodes(), &cfg.config_hash())?;
    }
    let mut out = Vec::with_capacity(cfg.couplings.len());
    for (i, &g) in cfg.couplings.iter().enumerate() {
        log::info!("sampling g = {g}");
        out.push(sample_one(cfg, &table, i, g)?.1);
    }
    Ok(out)
}

/// Loads the stored ensemble for `g`, refusing one sampled under other settings.
pub fn load_ensemble(cfg: &RunConfig, dir: &Path, g: f64) -> Result<PathEnsemble, CommandError> {
    let (csv_path, meta_path) = io::ensemble_paths(dir, g);
    if !meta_path.exists() || !csv_path.exists() {
        return Err(CommandError::MissingEnsemble { g, path: csv_path });
    }
    let (ens, sidecar) = io::read_ensemble(&csv_path, &meta_path)?;
    let expected = cfg.model_hash();
    if sidecar.model_hash != expected {
        return Err(CommandError::HashMismatch { path: meta_path, expected, found: sidecar.model_hash });
    }
    if sidecar.g != g {
        return Err(CommandError::CouplingMismatch { path: meta_path, expected: g, found: sidecar.g });
    }
    Ok(ens)
}

/// `Ψ(g²W∞)` when the query is `⟨Ψ(N)⟩` with `Ψ` concave, i.e. `k ∈ (0, 1]`
/// or a general `Ψ` with `m = 0`.
fn jensen_column(q: &PowerQuery, cfg: &RunConfig, g: f64) -> Result<Option<f64>, CommandError> {
    let model = cfg.model_at(g);
    let psi = match (q.k(), q.psi()) {
        (Some(1.0), _) => BernsteinSpec::identity(),
        (_, Some(psi)) if q.m() == 0 => psi.clone(),
        _ => return Ok(None),
    };
    Ok(Some(jensen_upper_bound(&psi, &model, g).map_err(numerics)?))
}

fn corridor_column(q: &PowerQuery, cfg: &RunConfig, w_inf: f64) -> Result<Option<(f64, f64)>, CommandError> {
    match q.k() {
        Some(k) if k >= 1.0 => {
            let a = cfg.query.corridor_offset;
            corridor(q, w_inf, a).map(Some).map_err(|e| {
                ConfigError::Invalid { field: "query.corridor_offset".into(), value: a.to_string(), reason: e.to_string() }
                    .into()
            })
        }
        _ => Ok(None),
    }
}

fn rows_for(cfg: &RunConfig, ens: &PathEnsemble, g: f64, w_inf: f64) -> Result<Vec<ResultRow>, CommandError> {
    let model_hash = cfg.model_hash();
    let mut rows = Vec::new();
    for q in cfg.query.queries() {
        let est = ground_state_expectation(&q, ens, g).map_err(numerics)?;
        rows.push(ResultRow {
            model_hash: model_hash.clone(),
            query: q.label(),
            g,
            value: est.value,
            mc_stderr: est.mc_stderr,
            det_error: est.deterministic_error,
            n_eff: est.n_effective,
            jensen_bound: jensen_column(&q, cfg, g)?,
            corridor: corridor_column(&q, cfg, w_inf)?,
            mean_w: ens.mean_w(),
        });
    }
    Ok(rows)
}

/// Estimates every query from the stored ensembles and writes `results.csv`.
pub fn expect(cfg: &RunConfig, ensemble_dir: Option<&Path>) -> Result<(PathBuf, Vec<ResultRow>), CommandError> {
    let dir = ensemble_dir.unwrap_or(&cfg.output.dir);
    let w_inf = w_infinity(&cfg.model).map_err(numerics)?.value;
    let mut rows = Vec::new();
    for &g in &cfg.couplings {
        let ens = load_ensemble(cfg, dir, g)?;
        rows.extend(rows_for(cfg, &ens, g, w_inf)?);
    }
    let path = cfg.output.dir.join("results.csv");
    io::write_results(&path, &rows, &cfg.config_hash())?;
    Ok((path, rows))
}

fn reject(field: &str, value: impl ToString, reason: &str) -> CommandError {
    ConfigError::Invalid { field: field.into(), value: value.to_string(), reason: reason.into() }.into()
}

/// Samples every coupling and tabulates `⟨N^k⟩/g^{2k}`.
pub fn sweep_g(cfg: &RunConfig) -> Result<(PathBuf, Vec<SweepRow>), CommandError> {
    if cfg.query.powers.is_empty() {
        return Err(ConfigError::Missing { field: "query.k".into() }.into());
    }
    if let Some(&k) = cfg.query.powers.iter().find(|&&k| k < 1.0) {
        return Err(reject("query.k", k, "the strong-coupling normalization needs k >= 1; use `expect` for smaller powers"));
    }
    if cfg.query.psi.is_some() {
        return Err(reject("query.psi_kind", "set", "sweeps take plain powers k only"));
    }
    if let Some(&g) = cfg.couplings.iter().find(|&&g| g == 0.0) {
        return Err(reject("model.g", g, "g = 0 cannot be normalized by g^(2k)"));
    }
    let w_inf = w_infinity(&cfg.model).map_err(numerics)?.value;
    let table = build_table(cfg)?;
    let mut rows = Vec::new();
    for (i, &g) in cfg.couplings.iter().enumerate() {
        log::info!("sweep: g = {g}");
        let (ens, _) = sample_one(cfg, &table, i, g)?;
        for (result, &k) in rows_for(cfg, &ens, g, w_inf)?.into_iter().zip(&cfg.query.powers) {
            let scale = (g * g).powf(k);
            rows.push(SweepRow {
                normalized: result.value / scale,
                normalized_stderr: result.mc_stderr / scale,
                delta: 10.0 * k * k / (g * g * w_inf),
                result,
            });
        }
    }
    let path = cfg.output.dir.join("sweep.csv");
    io::write_sweep(&path, &rows, &cfg.config_hash())?;
    Ok((path, rows))
}

#[derive(Debug, Clone, Serialize)]
pub struct CheckRecord {
    pub module: &'static str,
    pub invariant: &'static str,
    pub passed: bool,
    pub observed: String,
    pub expected: String,
}

impl From<CheckOutcome> for CheckRecord {
    fn from(c: CheckOutcome) -> Self {
        Self { module: c.module, invariant: c.name, passed: c.passed, observed: c.observed, expected: c.expected }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ValidationReport {
    pub passed: bool,
    pub checks: Vec<CheckRecord>,
}

pub fn validate_with(components: &Components<'_>) -> ValidationReport {
    let checks: Vec<CheckRecord> = run_suite(components).into_iter().map(CheckRecord::from).collect();
    ValidationReport { passed: checks.iter().all(|c| c.passed), checks }
}

/// Runs the invariant suite and writes `validation.json` into `out`.
pub fn validate(out: &Path) -> Result<ValidationReport, CommandError> {
    let report = validate_with(&Components::default());
    std::fs::create_dir_all(out).map_err(|source| IoError::Io { path: out.to_path_buf(), source })?;
    let path = out.join("validation.json");
    let text = serde_json::to_string_pretty(&report).expect("report is plain data");
    std::fs::write(&path, text + "\n").map_err(|source| IoError::Io { path, source })?;
    Ok(report)
}
