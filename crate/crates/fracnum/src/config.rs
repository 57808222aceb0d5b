//! Run configuration.
//!
//! The file format is INI-like:
//!
//! ```text
//! # comment            ; also a comment
//! [section]
//! key = value
//! list_key = 0.5, 1, 2
//! ```
//!
//! Section and key names are case-insensitive, blank lines are ignored, and a
//! key may appear only once per file. Values are layered: the file first, then
//! environment variables `FRACNUM_<SECTION>__<KEY>` (for example
//! `FRACNUM_SAMPLER__BURN_IN=500`), then command-line overrides.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use fracnum_core::bernstein::{fractional_power_spec, BernsteinSpec, LevyMeasure};
use fracnum_core::expectations::PowerQuery;
use fracnum_core::model::{CutoffFunction, ModelError, ModelSpec};
use fracnum_core::path_gibbs::{MCMCConfig, QuadratureRule, ReferenceProcess, SamplerError, Thinning, TimeGrid};
use sha2::{Digest, Sha256};
use thiserror::Error;

pub const ENV_PREFIX: &str = "FRACNUM_";

const KNOWN_KEYS: &[(&str, &[&str])] = &[
    (
        "model",
        &[
            "variant",
            "dimension",
            "nu",
            "omega0",
            "cutoff",
            "cutoff_width",
            "cutoff_kmax",
            "normalization",
            "allow_nonpositive",
            "g",
            "frozen",
        ],
    ),
    (
        "sampler",
        &[
            "window",
            "dt",
            "rule",
            "chains",
            "sweeps",
            "burn_in",
            "thin",
            "seed",
            "path_move_every",
            "recompute_every",
            "adapt",
        ],
    ),
    ("query", &["k", "psi_kind", "psi_alpha", "psi_drift", "psi_nodes", "psi_m", "corridor_offset"]),
    ("output", &["dir", "kernel_table"]),
];

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("{field}: required but missing")]
    Missing { field: String },
    #[error("{field} = {value:?}: {reason}")]
    Invalid { field: String, value: String, reason: String },
    #[error("{field}: unknown setting")]
    Unknown { field: String },
}

impl ConfigError {
    fn invalid(field: &str, value: impl ToString, reason: impl ToString) -> Self {
        Self::Invalid { field: field.to_string(), value: value.to_string(), reason: reason.to_string() }
    }

    /// Dotted name of the offending setting, when there is one.
    pub fn field(&self) -> Option<&str> {
        match self {
            Self::Missing { field } | Self::Invalid { field, .. } | Self::Unknown { field } => Some(field),
            _ => None,
        }
    }
}

/// Untyped `section.key → value` settings.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RawConfig {
    entries: BTreeMap<String, String>,
}

fn check_known(field: &str) -> Result<(), ConfigError> {
    let (section, key) = field.split_once('.').ok_or_else(|| ConfigError::Unknown { field: field.to_string() })?;
    let known = KNOWN_KEYS.iter().any(|(s, keys)| *s == section && keys.contains(&key));
    if known {
        Ok(())
    } else {
        Err(ConfigError::Unknown { field: field.to_string() })
    }
}

impl RawConfig {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut entries = BTreeMap::new();
        let mut section: Option<String> = None;
        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = raw.split(['#', ';']).next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            if let Some(rest) = line.strip_prefix('[') {
                let name = rest
                    .strip_suffix(']')
                    .ok_or_else(|| ConfigError::Syntax { line: line_no, message: "unterminated section header".into() })?
                    .trim()
                    .to_ascii_lowercase();
                if !KNOWN_KEYS.iter().any(|(s, _)| *s == name) {
                    return Err(ConfigError::Unknown { field: name });
                }
                section = Some(name);
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| ConfigError::Syntax { line: line_no, message: format!("expected key = value, got {line:?}") })?;
            let section = section
                .as_deref()
                .ok_or_else(|| ConfigError::Syntax { line: line_no, message: "setting before any [section]".into() })?;
            let field = format!("{section}.{}", key.trim().to_ascii_lowercase());
            check_known(&field)?;
            if entries.insert(field.clone(), value.trim().to_string()).is_some() {
                return Err(ConfigError::Syntax { line: line_no, message: format!("{field} set twice") });
            }
        }
        Ok(Self { entries })
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io { path: path.to_path_buf(), source })?;
        Self::parse(&text)
    }

    /// Applies `FRACNUM_<SECTION>__<KEY>` variables; other variables are ignored.
    pub fn apply_env<I: IntoIterator<Item = (String, String)>>(&mut self, vars: I) -> Result<(), ConfigError> {
        for (name, value) in vars {
            let Some(rest) = name.strip_prefix(ENV_PREFIX) else { continue };
            let Some((section, key)) = rest.split_once("__") else { continue };
            let field = format!("{}.{}", section.to_ascii_lowercase(), key.to_ascii_lowercase());
            check_known(&field)?;
            self.entries.insert(field, value.trim().to_string());
        }
        Ok(())
    }

    /// Sets `section.key`, overriding earlier layers.
    pub fn set(&mut self, field: &str, value: &str) -> Result<(), ConfigError> {
        let field = field.trim().to_ascii_lowercase();
        check_known(&field)?;
        self.entries.insert(field, value.trim().to_string());
        Ok(())
    }

    /// Parses a `section.key=value` override.
    pub fn set_assignment(&mut self, assignment: &str) -> Result<(), ConfigError> {
        let (field, value) = assignment
            .split_once('=')
            .ok_or_else(|| ConfigError::Syntax { line: 0, message: format!("expected section.key=value, got {assignment:?}") })?;
        self.set(field, value)
    }

    pub fn get(&self, field: &str) -> Option<&str> {
        self.entries.get(field).map(String::as_str)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &str)> {
        self.entries.iter().map(|(k, v)| (k.as_str(), v.as_str()))
    }

    fn require(&self, field: &str) -> Result<&str, ConfigError> {
        self.get(field).ok_or_else(|| ConfigError::Missing { field: field.to_string() })
    }

    fn real(&self, field: &str) -> Result<Option<f64>, ConfigError> {
        self.get(field).map(|v| parse_real(field, v)).transpose()
    }

    fn count(&self, field: &str) -> Result<Option<usize>, ConfigError> {
        self.get(field)
            .map(|v| v.parse::<usize>().map_err(|_| ConfigError::invalid(field, v, "expected a nonnegative integer")))
            .transpose()
    }

    fn flag(&self, field: &str) -> Result<Option<bool>, ConfigError> {
        self.get(field)
            .map(|v| match v.to_ascii_lowercase().as_str() {
                "true" | "yes" | "on" | "1" => Ok(true),
                "false" | "no" | "off" | "0" => Ok(false),
                _ => Err(ConfigError::invalid(field, v, "expected true or false")),
            })
            .transpose()
    }

    fn reals(&self, field: &str) -> Result<Option<Vec<f64>>, ConfigError> {
        self.get(field)
            .map(|v| {
                v.split(',').map(str::trim).filter(|s| !s.is_empty()).map(|s| parse_real(field, s)).collect()
            })
            .transpose()
    }
}

fn parse_real(field: &str, value: &str) -> Result<f64, ConfigError> {
    let x: f64 = value.trim().parse().map_err(|_| ConfigError::invalid(field, value, "expected a real number"))?;
    if x.is_finite() {
        Ok(x)
    } else {
        Err(ConfigError::invalid(field, value, "must be finite"))
    }
}

/// A Bernstein function named in the query section.
#[derive(Debug, Clone, PartialEq)]
pub struct PsiSetting {
    pub spec: BernsteinSpec,
    pub m: i32,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SamplerSettings {
    pub grid: TimeGrid,
    pub reference: ReferenceProcess,
    pub chains: usize,
    pub seed: u64,
    pub mcmc: MCMCConfig,
}

#[derive(Debug, Clone, PartialEq)]
pub struct QuerySettings {
    /// Distinct powers in first-seen order.
    pub powers: Vec<f64>,
    pub psi: Option<PsiSetting>,
    pub corridor_offset: f64,
}

impl QuerySettings {
    pub fn queries(&self) -> Vec<PowerQuery> {
        let mut out: Vec<PowerQuery> =
            self.powers.iter().map(|&k| PowerQuery::from_k(k).expect("validated at load time")).collect();
        if let Some(psi) = &self.psi {
            out.push(PowerQuery::with_psi(psi.m, psi.spec.clone()));
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OutputSettings {
    pub dir: PathBuf,
    pub kernel_table: bool,
}

/// A validated configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    /// The model at the first coupling of `couplings`.
    pub model: ModelSpec,
    pub couplings: Vec<f64>,
    /// Hold the particle at the origin (fixed-source limit).
    pub frozen: bool,
    pub sampler: SamplerSettings,
    pub query: QuerySettings,
    pub output: OutputSettings,
    /// Non-fatal remarks raised during validation.
    pub warnings: Vec<String>,
}

fn model_field(err: &ModelError) -> &'static str {
    match err {
        ModelError::NonPositiveMass { .. } => "model.nu",
        ModelError::UnsupportedDimension { .. } => "model.dimension",
        ModelError::InvalidCutoff { name: "width", .. } => "model.cutoff_width",
        ModelError::InvalidCutoff { name: "k_max", .. } => "model.cutoff_kmax",
        ModelError::InvalidCutoff { name: "normalization", .. } => "model.normalization",
        ModelError::NonPositiveCharge => "model.allow_nonpositive",
        ModelError::NonPositiveFrequency { .. } => "model.omega0",
        ModelError::InvalidCoupling { .. } => "model.g",
        _ => "model.cutoff",
    }
}

fn model_error(raw: &RawConfig, err: ModelError) -> ConfigError {
    let field = model_field(&err);
    ConfigError::invalid(field, raw.get(field).unwrap_or(""), err)
}

fn sampler_error(raw: &RawConfig, err: SamplerError) -> ConfigError {
    let field = match &err {
        SamplerError::InvalidConfig { name: "slice_step" | "path_step" | "target_acceptance", .. } => "sampler.adapt",
        SamplerError::InvalidConfig { name: "thin", .. } => "sampler.thin",
        SamplerError::InvalidConfig { name: "sweeps", .. } => "sampler.sweeps",
        SamplerError::InvalidConfig { name: "recompute_every", .. } => "sampler.recompute_every",
        _ => "sampler.window",
    };
    ConfigError::invalid(field, raw.get(field).unwrap_or(""), err)
}

impl RunConfig {
    pub fn from_raw(raw: &RawConfig) -> Result<Self, ConfigError> {
        let mut warnings = Vec::new();
        let (model, couplings, frozen) = model_section(raw)?;
        let sampler = sampler_section(raw, &model, frozen)?;
        let query = query_section(raw, &mut warnings)?;
        let output = OutputSettings {
            dir: PathBuf::from(raw.get("output.dir").unwrap_or("out")),
            kernel_table: raw.flag("output.kernel_table")?.unwrap_or(false),
        };
        Ok(Self { model, couplings, frozen, sampler, query, output, warnings })
    }

    /// Reads `path` (if any), then the process environment, then `overrides`.
    pub fn load(path: Option<&Path>, overrides: &[(String, String)]) -> Result<Self, ConfigError> {
        let mut raw = match path {
            Some(p) => RawConfig::load(p)?,
            None => RawConfig::default(),
        };
        raw.apply_env(std::env::vars())?;
        for (field, value) in overrides {
            raw.set(field, value)?;
        }
        Self::from_raw(&raw)
    }

    pub fn model_at(&self, g: f64) -> ModelSpec {
        self.model.with_coupling(g)
    }

    /// Identifies the physics and discretization an ensemble was sampled
    /// under; the coupling is checked separately.
    pub fn model_hash(&self) -> String {
        let model = self.model.with_coupling(0.0);
        let grid = &self.sampler.grid;
        digest(&format!(
            "{model:?}|frozen={}|T={:?}|dt={:?}|rule={:?}|ref={:?}",
            self.frozen,
            grid.half_window(),
            grid.dt(),
            grid.rule(),
            self.sampler.reference
        ))
    }

    /// Identifies every setting that influences numerical output.
    pub fn config_hash(&self) -> String {
        let mut text = self.model_hash();
        let s = &self.sampler;
        let _ = write!(text, "|g={:?}|chains={}|seed={}|mcmc={:?}", self.couplings, s.chains, s.seed, s.mcmc);
        let labels: Vec<String> = self.query.queries().iter().map(PowerQuery::label).collect();
        let _ = write!(text, "|queries={labels:?}|a={:?}", self.query.corridor_offset);
        digest(&text)
    }
}

/// First 16 hex digits of SHA-256.
pub fn digest(text: &str) -> String {
    let full = Sha256::digest(text.as_bytes());
    hex::encode(&full[..8])
}

fn model_section(raw: &RawConfig) -> Result<(ModelSpec, Vec<f64>, bool), ConfigError> {
    let variant = raw.require("model.variant")?.to_ascii_lowercase();
    let dimension = match raw.get("model.dimension") {
        Some(v) => v.parse::<u32>().map_err(|_| ConfigError::invalid("model.dimension", v, "expected 1 or 3"))?,
        None => 3,
    };
    let omega0 = raw.real("model.omega0")?.unwrap_or(1.0);
    let cutoff_kind = raw.get("model.cutoff").unwrap_or("gaussian").to_ascii_lowercase();
    let mut cutoff = match cutoff_kind.as_str() {
        "gaussian" => {
            let width = raw.real("model.cutoff_width")?.ok_or_else(|| ConfigError::Missing {
                field: "model.cutoff_width".into(),
            })?;
            CutoffFunction::gaussian(width)
        }
        "sharp" => {
            let k_max = raw
                .real("model.cutoff_kmax")?
                .ok_or_else(|| ConfigError::Missing { field: "model.cutoff_kmax".into() })?;
            CutoffFunction::sharp_uv(k_max)
        }
        "point" => CutoffFunction::point_charge(),
        other => return Err(ConfigError::invalid("model.cutoff", other, "expected gaussian, sharp or point")),
    };
    if let Some(n) = raw.real("model.normalization")? {
        cutoff = cutoff.with_normalization(n);
    }
    cutoff = cutoff.with_override(raw.flag("model.allow_nonpositive")?.unwrap_or(false));

    let couplings = raw.reals("model.g")?.ok_or_else(|| ConfigError::Missing { field: "model.g".into() })?;
    if couplings.is_empty() {
        return Err(ConfigError::invalid("model.g", raw.get("model.g").unwrap_or(""), "coupling list is empty"));
    }
    let g = couplings[0];
    let model = match variant.as_str() {
        "nelson" | "zero-momentum" => {
            let nu = raw.real("model.nu")?.ok_or_else(|| ConfigError::Missing { field: "model.nu".into() })?;
            if variant == "nelson" {
                ModelSpec::nelson(dimension, nu, omega0, cutoff, g)
            } else {
                if raw.get("model.omega0").is_some() {
                    return Err(ConfigError::invalid(
                        "model.omega0",
                        raw.get("model.omega0").unwrap_or(""),
                        "the zero-momentum variant has no confining potential",
                    ));
                }
                ModelSpec::zero_momentum(dimension, nu, cutoff, g)
            }
        }
        "polaron" => {
            if let Some(v) = raw.get("model.nu") {
                return Err(ConfigError::invalid("model.nu", v, "the polaron dispersion is fixed to 1"));
            }
            ModelSpec::polaron(dimension, omega0, cutoff, g)
        }
        other => {
            return Err(ConfigError::invalid("model.variant", other, "expected nelson, polaron or zero-momentum"))
        }
    };
    for &gi in &couplings {
        model.with_coupling(gi).check_integrability().map_err(|e| model_error(raw, e))?;
    }
    let frozen = raw.flag("model.frozen")?.unwrap_or(false);
    Ok((model, couplings, frozen))
}

fn sampler_section(raw: &RawConfig, model: &ModelSpec, frozen: bool) -> Result<SamplerSettings, ConfigError> {
    let dt = raw.real("sampler.dt")?.unwrap_or(0.05);
    if dt <= 0.0 {
        return Err(ConfigError::invalid("sampler.dt", dt, "must be positive"));
    }
    let rule = match raw.get("sampler.rule").map(str::to_ascii_lowercase).as_deref() {
        None | Some("simpson") => QuadratureRule::Simpson,
        Some("trapezoid") => QuadratureRule::Trapezoid,
        Some(other) => return Err(ConfigError::invalid("sampler.rule", other, "expected simpson or trapezoid")),
    };
    let window = match raw.real("sampler.window")? {
        Some(t) => t,
        None => {
            // default 8/ν rounded up to a whole number of (Simpson-compatible) steps
            let step = if rule == QuadratureRule::Simpson { 2.0 * dt } else { dt };
            (model.default_window() / step).ceil() * step
        }
    };
    let grid = TimeGrid::new(window, dt, rule).map_err(|e| {
        let field = if raw.get("sampler.window").is_some() { "sampler.window" } else { "sampler.dt" };
        ConfigError::invalid(field, raw.get(field).unwrap_or(""), e)
    })?;
    let chains = raw.count("sampler.chains")?.unwrap_or(1);
    if chains == 0 {
        return Err(ConfigError::invalid("sampler.chains", 0, "need at least one chain"));
    }
    let seed = match raw.get("sampler.seed") {
        Some(v) => v.parse::<u64>().map_err(|_| ConfigError::invalid("sampler.seed", v, "expected an unsigned 64-bit integer"))?,
        None => 0,
    };
    let defaults = MCMCConfig::default();
    let thinning = match raw.get("sampler.thin") {
        None => defaults.thinning,
        Some(v) if v.eq_ignore_ascii_case("auto") => Thinning::Auto,
        Some(v) => Thinning::Every(
            v.parse::<usize>().map_err(|_| ConfigError::invalid("sampler.thin", v, "expected auto or a positive integer"))?,
        ),
    };
    let mcmc = MCMCConfig {
        sweeps: raw.count("sampler.sweeps")?.unwrap_or(defaults.sweeps),
        burn_in: raw.count("sampler.burn_in")?.unwrap_or(defaults.burn_in),
        thinning,
        frozen,
        path_move_every: raw.count("sampler.path_move_every")?.unwrap_or(defaults.path_move_every),
        recompute_every: raw.count("sampler.recompute_every")?.unwrap_or(defaults.recompute_every),
        adapt: raw.flag("sampler.adapt")?.unwrap_or(defaults.adapt),
        ..defaults
    };
    mcmc.validate().map_err(|e| sampler_error(raw, e))?;
    Ok(SamplerSettings { grid, reference: ReferenceProcess::for_model(model), chains, seed, mcmc })
}

fn query_section(raw: &RawConfig, warnings: &mut Vec<String>) -> Result<QuerySettings, ConfigError> {
    let mut powers = Vec::new();
    let mut seen = BTreeSet::new();
    for k in raw.reals("query.k")?.unwrap_or_default() {
        PowerQuery::from_k(k).map_err(|e| ConfigError::invalid("query.k", k, e))?;
        // -0.0 and 0.0 are the same power
        if seen.insert((k + 0.0).to_bits()) {
            powers.push(k);
        } else {
            let note = format!("query.k: duplicate entry {k} ignored");
            log::warn!("{note}");
            warnings.push(note);
        }
    }
    let psi = psi_setting(raw)?;
    if powers.is_empty() && psi.is_none() {
        return Err(ConfigError::Missing { field: "query.k".into() });
    }
    let corridor_offset = raw.real("query.corridor_offset")?.unwrap_or(0.0);
    if corridor_offset < 0.0 {
        return Err(ConfigError::invalid("query.corridor_offset", corridor_offset, "must be nonnegative"));
    }
    Ok(QuerySettings { powers, psi, corridor_offset })
}

fn psi_setting(raw: &RawConfig) -> Result<Option<PsiSetting>, ConfigError> {
    let kind = match raw.get("query.psi_kind") {
        None => return Ok(None),
        Some(k) => k.to_ascii_lowercase(),
    };
    let drift = raw.real("query.psi_drift")?.unwrap_or(0.0);
    let spec = match kind.as_str() {
        "none" => return Ok(None),
        "fractional" => {
            let alpha = raw.real("query.psi_alpha")?.ok_or_else(|| ConfigError::Missing { field: "query.psi_alpha".into() })?;
            let spec = fractional_power_spec(alpha).map_err(|e| ConfigError::invalid("query.psi_alpha", alpha, e))?;
            if drift != 0.0 {
                BernsteinSpec::new(drift, spec.levy.clone(), format!("{drift}u+{}", spec.label))
                    .map_err(|e| ConfigError::invalid("query.psi_drift", drift, e))?
            } else {
                spec
            }
        }
        "log1p" => {
            let spec = BernsteinSpec::log1p();
            if drift != 0.0 {
                BernsteinSpec::new(drift, spec.levy.clone(), format!("{drift}u+log1p"))
                    .map_err(|e| ConfigError::invalid("query.psi_drift", drift, e))?
            } else {
                spec
            }
        }
        "tabulated" => {
            let text = raw.require("query.psi_nodes")?;
            let mut nodes = Vec::new();
            for item in text.split(',').map(str::trim).filter(|s| !s.is_empty()) {
                let (y, w) = item
                    .split_once(':')
                    .ok_or_else(|| ConfigError::invalid("query.psi_nodes", item, "expected y:weight pairs"))?;
                nodes.push((parse_real("query.psi_nodes", y)?, parse_real("query.psi_nodes", w)?));
            }
            let levy = LevyMeasure::tabulated(nodes).map_err(|e| ConfigError::invalid("query.psi_nodes", text, e))?;
            BernsteinSpec::new(drift, levy, format!("tabulated[{text}]"))
                .map_err(|e| ConfigError::invalid("query.psi_drift", drift, e))?
        }
        other => {
            return Err(ConfigError::invalid("query.psi_kind", other, "expected none, fractional, log1p or tabulated"))
        }
    };
    let m = match raw.get("query.psi_m") {
        Some(v) => v.parse::<i32>().map_err(|_| ConfigError::invalid("query.psi_m", v, "expected an integer"))?,
        None => 0,
    };
    Ok(Some(PsiSetting { spec, m }))
}

#[cfg(test)]
mod tests {
    use super::*;

    const BASE: &str = "
        [model]
        variant = nelson
        nu = 1.0
        cutoff_width = 1.4142135623730951
        g = 0.5, 2
        [sampler]
        window = 2
        dt = 0.1
        [query]
        k = 0.5, 1
    ";

    #[test]
    fn parses_sections_and_lists() {
        let raw = RawConfig::parse(BASE).unwrap();
        assert_eq!(raw.get("model.g"), Some("0.5, 2"));
        let cfg = RunConfig::from_raw(&raw).unwrap();
        assert_eq!(cfg.couplings, vec![0.5, 2.0]);
        assert_eq!(cfg.sampler.grid.len(), 41);
        assert_eq!(cfg.query.powers, vec![0.5, 1.0]);
        assert_eq!(cfg.output.dir, PathBuf::from("out"));
    }

    #[test]
    fn comments_and_case() {
        let raw = RawConfig::parse("[MODEL] ; section\nVariant = Polaron # trailing\n").unwrap();
        assert_eq!(raw.get("model.variant"), Some("Polaron"));
    }

    #[test]
    fn syntax_errors_carry_line_numbers() {
        assert!(matches!(RawConfig::parse("g = 1"), Err(ConfigError::Syntax { line: 1, .. })));
        assert!(matches!(RawConfig::parse("[model]\n\ng 1"), Err(ConfigError::Syntax { line: 3, .. })));
        assert!(matches!(RawConfig::parse("[model]\ng=1\ng=2"), Err(ConfigError::Syntax { line: 3, .. })));
        assert!(matches!(RawConfig::parse("[model"), Err(ConfigError::Syntax { line: 1, .. })));
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let err = RawConfig::parse("[model]\nmass = 1").unwrap_err();
        assert_eq!(err.field(), Some("model.mass"));
        assert!(matches!(RawConfig::parse("[extras]\n"), Err(ConfigError::Unknown { .. })));
    }

    #[test]
    fn env_overrides_file_and_cli_overrides_env() {
        let mut raw = RawConfig::parse(BASE).unwrap();
        raw.apply_env([
            ("FRACNUM_SAMPLER__BURN_IN".to_string(), "7".to_string()),
            ("FRACNUM_MODEL__G".to_string(), "3".to_string()),
            ("PATH".to_string(), "/bin".to_string()),
        ])
        .unwrap();
        assert_eq!(raw.get("sampler.burn_in"), Some("7"));
        raw.set_assignment("model.g=4").unwrap();
        let cfg = RunConfig::from_raw(&raw).unwrap();
        assert_eq!(cfg.couplings, vec![4.0]);
        assert_eq!(cfg.sampler.mcmc.burn_in, 7);
        let bad = raw.apply_env([("FRACNUM_MODEL__MASS".to_string(), "1".to_string())]);
        assert!(matches!(bad, Err(ConfigError::Unknown { .. })));
    }

    #[test]
    fn missing_nu_names_the_field() {
        let text = BASE.replace("nu = 1.0", "");
        let err = RunConfig::from_raw(&RawConfig::parse(&text).unwrap()).unwrap_err();
        assert_eq!(err.field(), Some("model.nu"));
        assert!(err.to_string().contains("model.nu"));
    }

    #[test]
    fn invalid_values_name_the_field() {
        for (from, to, field) in [
            ("nu = 1.0", "nu = -1", "model.nu"),
            ("nu = 1.0", "nu = 1.0\ndimension = 2", "model.dimension"),
            ("g = 0.5, 2", "g = ", "model.g"),
            ("g = 0.5, 2", "g = 1, x", "model.g"),
            ("dt = 0.1", "dt = 0.3", "sampler.window"),
            ("k = 0.5, 1", "k = inf", "query.k"),
            ("variant = nelson", "variant = fermion", "model.variant"),
            ("window = 2", "window = 2\nthin = 0", "sampler.thin"),
        ] {
            let text = BASE.replace(from, to);
            let err = RunConfig::from_raw(&RawConfig::parse(&text).unwrap()).unwrap_err();
            assert_eq!(err.field(), Some(field), "{to}: {err}");
        }
    }

    #[test]
    fn duplicate_powers_warn() {
        let text = BASE.replace("k = 0.5, 1", "k = 1, 0.5, 1, 1");
        let cfg = RunConfig::from_raw(&RawConfig::parse(&text).unwrap()).unwrap();
        assert_eq!(cfg.query.powers, vec![1.0, 0.5]);
        assert_eq!(cfg.warnings.len(), 2);
    }

    #[test]
    fn default_window_is_eight_over_nu() {
        let text = BASE.replace("window = 2", "").replace("dt = 0.1", "").replace("nu = 1.0", "nu = 0.7");
        let cfg = RunConfig::from_raw(&RawConfig::parse(&text).unwrap()).unwrap();
        let t = cfg.sampler.grid.half_window();
        assert!(t >= 8.0 / 0.7 && t < 8.0 / 0.7 + 0.1 + 1e-9, "{t}");
        assert_eq!(cfg.sampler.grid.dt(), 0.05);
    }

    #[test]
    fn polaron_rejects_nu_and_point_charge_diverges() {
        let text = BASE.replace("variant = nelson", "variant = polaron");
        let err = RunConfig::from_raw(&RawConfig::parse(&text).unwrap()).unwrap_err();
        assert_eq!(err.field(), Some("model.nu"));
        let text = text.replace("nu = 1.0", "").replace("cutoff_width = 1.4142135623730951", "cutoff = point");
        let err = RunConfig::from_raw(&RawConfig::parse(&text).unwrap()).unwrap_err();
        assert_eq!(err.field(), Some("model.cutoff"));
    }

    #[test]
    fn psi_settings() {
        let text = format!("{BASE}\npsi_kind = tabulated\npsi_nodes = 0.5:1, 2:0.25\npsi_m = -1");
        let cfg = RunConfig::from_raw(&RawConfig::parse(&text).unwrap()).unwrap();
        let psi = cfg.query.psi.as_ref().unwrap();
        assert_eq!(psi.m, -1);
        assert_eq!(cfg.query.queries().len(), 3);
        let bad = format!("{BASE}\npsi_kind = fractional\npsi_alpha = 2.5");
        let err = RunConfig::from_raw(&RawConfig::parse(&bad).unwrap()).unwrap_err();
        assert_eq!(err.field(), Some("query.psi_alpha"));
        let bad = format!("{BASE}\npsi_kind = tabulated\npsi_nodes = 1:-1");
        assert_eq!(RunConfig::from_raw(&RawConfig::parse(&bad).unwrap()).unwrap_err().field(), Some("query.psi_nodes"));
    }

    #[test]
    fn hashes_track_relevant_settings() {
        let a = RunConfig::from_raw(&RawConfig::parse(BASE).unwrap()).unwrap();
        let mut raw = RawConfig::parse(BASE).unwrap();
        raw.set("model.g", "7").unwrap();
        raw.set("sampler.seed", "9").unwrap();
        let b = RunConfig::from_raw(&raw).unwrap();
        assert_eq!(a.model_hash(), b.model_hash());
        assert_ne!(a.config_hash(), b.config_hash());
        raw.set("model.nu", "2").unwrap();
        let c = RunConfig::from_raw(&raw).unwrap();
        assert_ne!(a.model_hash(), c.model_hash());
        assert_eq!(a.model_hash().len(), 16);
    }
}
