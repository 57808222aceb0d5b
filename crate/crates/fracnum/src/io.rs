//! On-disk formats.
//!
//! Every CSV starts with a `# fracnum-<kind> v1 config=<hash>` schema line
//! followed by a fixed header row. Ensembles are stored as
//! `ensemble_g<g>.csv` (columns `chain,index,w`) with a JSON sidecar
//! `ensemble_g<g>.meta.json`. Nothing time-dependent is written, so equal
//! inputs give byte-identical files.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use fracnum_core::path_gibbs::{ChainDiagnostics, EnsembleMeta, MoveKind, PathEnsemble, SamplerWarning};
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const ENSEMBLE_SCHEMA: &str = "fracnum-ensemble v1";
pub const RESULTS_SCHEMA: &str = "fracnum-results v1";
pub const SWEEP_SCHEMA: &str = "fracnum-sweep v1";
pub const KERNEL_SCHEMA: &str = "fracnum-kernel v1";

const RESULTS_HEADER: [&str; 11] = [
    "model_hash",
    "query",
    "g",
    "value",
    "mc_stderr",
    "det_error",
    "n_eff",
    "jensen_bound",
    "corridor_lower",
    "corridor_upper",
    "mean_w",
];

#[derive(Debug, Error)]
pub enum IoError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}: {source}")]
    Csv { path: PathBuf, source: csv::Error },
    #[error("{path}: {source}")]
    Json { path: PathBuf, source: serde_json::Error },
    #[error("{path}: {message}")]
    Format { path: PathBuf, message: String },
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> IoError + '_ {
    move |source| IoError::Io { path: path.to_path_buf(), source }
}

fn csv_err(path: &Path) -> impl FnOnce(csv::Error) -> IoError + '_ {
    move |source| IoError::Csv { path: path.to_path_buf(), source }
}

fn format_err(path: &Path, message: impl Into<String>) -> IoError {
    IoError::Format { path: path.to_path_buf(), message: message.into() }
}

/// Shortest round-trip decimal, `nan`/`inf` spelled out.
pub fn fmt_real(x: f64) -> String {
    if x.is_nan() {
        "nan".into()
    } else if x.is_infinite() {
        if x > 0.0 { "inf".into() } else { "-inf".into() }
    } else {
        format!("{x:?}")
    }
}

fn finite(x: f64) -> Option<f64> {
    x.is_finite().then_some(x)
}

/// File stem for the ensemble at coupling `g`.
pub fn ensemble_stem(g: f64) -> String {
    format!("ensemble_g{}", fmt_real(g))
}

pub fn ensemble_paths(dir: &Path, g: f64) -> (PathBuf, PathBuf) {
    let stem = ensemble_stem(g);
    (dir.join(format!("{stem}.csv")), dir.join(format!("{stem}.meta.json")))
}

fn create(path: &Path) -> Result<BufWriter<File>, IoError> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent).map_err(io_err(parent))?;
        }
    }
    Ok(BufWriter::new(File::create(path).map_err(io_err(path))?))
}

/// Opens a CSV writer after writing the schema line.
fn csv_writer(path: &Path, schema: &str, config_hash: &str) -> Result<csv::Writer<BufWriter<File>>, IoError> {
    let mut out = create(path)?;
    writeln!(out, "# {schema} config={config_hash}").map_err(io_err(path))?;
    Ok(csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out))
}

fn finish(mut w: csv::Writer<BufWriter<File>>, path: &Path) -> Result<(), IoError> {
    w.flush().map_err(io_err(path))?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WarningRecord {
    pub kind: String,
    pub rate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticsRecord {
    pub chain: u64,
    /// Absent when no move of that kind was attempted.
    pub slice_acceptance: Option<f64>,
    pub path_acceptance: Option<f64>,
    pub slice_step: f64,
    pub path_step: f64,
    pub autocorrelation_time: Option<f64>,
    pub effective_samples: Option<f64>,
    pub thin: usize,
    pub retained: usize,
    pub warnings: Vec<WarningRecord>,
}

impl From<&ChainDiagnostics> for DiagnosticsRecord {
    fn from(d: &ChainDiagnostics) -> Self {
        Self {
            chain: d.chain,
            slice_acceptance: finite(d.slice_acceptance),
            path_acceptance: finite(d.path_acceptance),
            slice_step: d.slice_step,
            path_step: d.path_step,
            autocorrelation_time: finite(d.autocorrelation_time),
            effective_samples: finite(d.effective_samples),
            thin: d.thin,
            retained: d.retained,
            warnings: d
                .warnings
                .iter()
                .map(|w| match *w {
                    SamplerWarning::AcceptanceOutOfRange { kind, rate } => WarningRecord {
                        kind: match kind {
                            MoveKind::Slice => "slice_acceptance".into(),
                            MoveKind::WholePath => "path_acceptance".into(),
                        },
                        rate,
                    },
                })
                .collect(),
        }
    }
}

impl DiagnosticsRecord {
    fn to_core(&self) -> ChainDiagnostics {
        ChainDiagnostics {
            chain: self.chain,
            slice_acceptance: self.slice_acceptance.unwrap_or(f64::NAN),
            path_acceptance: self.path_acceptance.unwrap_or(f64::NAN),
            slice_step: self.slice_step,
            path_step: self.path_step,
            autocorrelation_time: self.autocorrelation_time.unwrap_or(f64::NAN),
            effective_samples: self.effective_samples.unwrap_or(f64::NAN),
            thin: self.thin,
            retained: self.retained,
            warnings: self
                .warnings
                .iter()
                .map(|w| SamplerWarning::AcceptanceOutOfRange {
                    kind: if w.kind == "path_acceptance" { MoveKind::WholePath } else { MoveKind::Slice },
                    rate: w.rate,
                })
                .collect(),
        }
    }
}

/// Sidecar metadata of a stored ensemble.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleSidecar {
    pub schema: String,
    pub model_hash: String,
    pub config_hash: String,
    pub seed: u64,
    pub g: f64,
    pub window: Option<f64>,
    pub dt: f64,
    pub rule: String,
    pub dimension: u32,
    pub w_infinity: f64,
    pub w_epsilon: f64,
    pub w_error: f64,
    pub truncation_bound: f64,
    pub frozen: bool,
    pub chain_lengths: Vec<usize>,
    pub mean_w: f64,
    pub diagnostics: Vec<DiagnosticsRecord>,
}

impl EnsembleSidecar {
    pub fn meta(&self) -> EnsembleMeta {
        EnsembleMeta {
            g: self.g,
            window: self.window.unwrap_or(f64::INFINITY),
            dt: self.dt,
            dimension: self.dimension,
            w_infinity: self.w_infinity,
            w_epsilon: self.w_epsilon,
            w_error: self.w_error,
            truncation_bound: self.truncation_bound,
            frozen: self.frozen,
        }
    }
}

/// Provenance stamped into the sidecar.
#[derive(Debug, Clone, Copy)]
pub struct Stamp<'a> {
    pub model_hash: &'a str,
    pub config_hash: &'a str,
    pub seed: u64,
    pub rule: &'a str,
}

pub fn write_ensemble(dir: &Path, ens: &PathEnsemble, stamp: Stamp<'_>) -> Result<(PathBuf, PathBuf), IoError> {
    let (csv_path, meta_path) = ensemble_paths(dir, ens.meta.g);
    let mut w = csv_writer(&csv_path, ENSEMBLE_SCHEMA, stamp.config_hash)?;
    w.write_record(["chain", "index", "w"]).map_err(csv_err(&csv_path))?;
    for (chain, samples) in ens.chains().iter().enumerate() {
        for (i, &x) in samples.iter().enumerate() {
            w.write_record([chain.to_string(), i.to_string(), fmt_real(x)]).map_err(csv_err(&csv_path))?;
        }
    }
    finish(w, &csv_path)?;

    let m = &ens.meta;
    let sidecar = EnsembleSidecar {
        schema: ENSEMBLE_SCHEMA.into(),
        model_hash: stamp.model_hash.into(),
        config_hash: stamp.config_hash.into(),
        seed: stamp.seed,
        g: m.g,
        window: finite(m.window),
        dt: m.dt,
        rule: stamp.rule.into(),
        dimension: m.dimension,
        w_infinity: m.w_infinity,
        w_epsilon: m.w_epsilon,
        w_error: m.w_error,
        truncation_bound: m.truncation_bound,
        frozen: m.frozen,
        chain_lengths: ens.chain_lengths.clone(),
        mean_w: ens.mean_w(),
        diagnostics: ens.diagnostics.iter().map(DiagnosticsRecord::from).collect(),
    };
    let mut out = create(&meta_path)?;
    serde_json::to_writer_pretty(&mut out, &sidecar).map_err(|source| IoError::Json { path: meta_path.clone(), source })?;
    writeln!(out).map_err(io_err(&meta_path))?;
    out.flush().map_err(io_err(&meta_path))?;
    Ok((csv_path, meta_path))
}

pub fn read_sidecar(path: &Path) -> Result<EnsembleSidecar, IoError> {
    let text = std::fs::read_to_string(path).map_err(io_err(path))?;
    let sidecar: EnsembleSidecar =
        serde_json::from_str(&text).map_err(|source| IoError::Json { path: path.to_path_buf(), source })?;
    if sidecar.schema != ENSEMBLE_SCHEMA {
        return Err(format_err(path, format!("unsupported schema {:?}", sidecar.schema)));
    }
    Ok(sidecar)
}

/// Checks the schema line and strips it, returning the remaining text.
fn strip_schema<'a>(path: &Path, text: &'a str, schema: &str) -> Result<&'a str, IoError> {
    let (first, rest) = text.split_once('\n').unwrap_or((text, ""));
    let want = format!("# {schema}");
    if first == want || first.starts_with(&format!("{want} ")) {
        Ok(rest)
    } else {
        Err(format_err(path, format!("expected schema line {want:?}, found {first:?}")))
    }
}

/// Loads an ensemble CSV together with its sidecar.
pub fn read_ensemble(csv_path: &Path, meta_path: &Path) -> Result<(PathEnsemble, EnsembleSidecar), IoError> {
    let sidecar = read_sidecar(meta_path)?;
    let text = std::fs::read_to_string(csv_path).map_err(io_err(csv_path))?;
    let body = strip_schema(csv_path, &text, ENSEMBLE_SCHEMA)?;
    let mut reader = csv::Reader::from_reader(body.as_bytes());
    let headers = reader.headers().map_err(csv_err(csv_path))?.clone();
    if headers.iter().collect::<Vec<_>>() != ["chain", "index", "w"] {
        return Err(format_err(csv_path, format!("unexpected columns {headers:?}")));
    }
    let mut w = Vec::new();
    let mut lengths: Vec<usize> = Vec::new();
    for (row, record) in reader.records().enumerate() {
        let record = record.map_err(csv_err(csv_path))?;
        let bad = |what: &str| format_err(csv_path, format!("row {}: bad {what}", row + 1));
        let chain: usize = record[0].parse().map_err(|_| bad("chain"))?;
        let index: usize = record[1].parse().map_err(|_| bad("index"))?;
        let value: f64 = record[2].parse().map_err(|_| bad("w"))?;
        if chain == lengths.len() {
            lengths.push(0);
        }
        if chain + 1 != lengths.len() || index != lengths[chain] {
            return Err(bad("ordering"));
        }
        lengths[chain] += 1;
        w.push(value);
    }
    if lengths != sidecar.chain_lengths {
        return Err(format_err(csv_path, "chain lengths disagree with the metadata file"));
    }
    let ens = PathEnsemble {
        w,
        chain_lengths: lengths,
        diagnostics: sidecar.diagnostics.iter().map(DiagnosticsRecord::to_core).collect(),
        meta: sidecar.meta(),
    };
    Ok((ens, sidecar))
}

/// One row of an expectation table.
#[derive(Debug, Clone, PartialEq)]
pub struct ResultRow {
    pub model_hash: String,
    pub query: String,
    pub g: f64,
    pub value: f64,
    pub mc_stderr: f64,
    pub det_error: f64,
    pub n_eff: f64,
    pub jensen_bound: Option<f64>,
    pub corridor: Option<(f64, f64)>,
    pub mean_w: f64,
}

impl ResultRow {
    fn fields(&self) -> Vec<String> {
        let opt = |x: Option<f64>| x.map(fmt_real).unwrap_or_default();
        vec![
            self.model_hash.clone(),
            self.query.clone(),
            fmt_real(self.g),
            fmt_real(self.value),
            fmt_real(self.mc_stderr),
            fmt_real(self.det_error),
            fmt_real(self.n_eff),
            opt(self.jensen_bound),
            opt(self.corridor.map(|c| c.0)),
            opt(self.corridor.map(|c| c.1)),
            fmt_real(self.mean_w),
        ]
    }
}

pub fn write_results(path: &Path, rows: &[ResultRow], config_hash: &str) -> Result<(), IoError> {
    let mut w = csv_writer(path, RESULTS_SCHEMA, config_hash)?;
    w.write_record(RESULTS_HEADER).map_err(csv_err(path))?;
    for row in rows {
        w.write_record(row.fields()).map_err(csv_err(path))?;
    }
    finish(w, path)
}

/// A results row plus the strong-coupling normalization `value / g^{2k}`.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub result: ResultRow,
    pub normalized: f64,
    pub normalized_stderr: f64,
    /// Relative distance `10k²/(g²W∞)` within which the normalized value is
    /// expected to sit from `W∞^k` in the frozen-particle limit.
    pub delta: f64,
}

pub fn write_sweep(path: &Path, rows: &[SweepRow], config_hash: &str) -> Result<(), IoError> {
    let mut w = csv_writer(path, SWEEP_SCHEMA, config_hash)?;
    let header: Vec<&str> =
        RESULTS_HEADER.iter().copied().chain(["normalized", "normalized_stderr", "delta"]).collect();
    w.write_record(&header).map_err(csv_err(path))?;
    for row in rows {
        let mut fields = row.result.fields();
        fields.extend([fmt_real(row.normalized), fmt_real(row.normalized_stderr), fmt_real(row.delta)]);
        w.write_record(fields).map_err(csv_err(path))?;
    }
    finish(w, path)
}

pub fn write_kernel_table<I: IntoIterator<Item = (f64, f64, f64)>>(
    path: &Path,
    nodes: I,
    config_hash: &str,
) -> Result<(), IoError> {
    let mut w = csv_writer(path, KERNEL_SCHEMA, config_hash)?;
    w.write_record(["abs_x", "abs_t", "w"]).map_err(csv_err(path))?;
    for (r, t, v) in nodes {
        w.write_record([fmt_real(r), fmt_real(t), fmt_real(v)]).map_err(csv_err(path))?;
    }
    finish(w, path)
}

/// Reads a results or sweep CSV as header plus string rows.
pub fn read_table(path: &Path, schema: &str) -> Result<(Vec<String>, Vec<Vec<String>>), IoError> {
    let text = std::fs::read_to_string(path).map_err(io_err(path))?;
    let body = strip_schema(path, &text, schema)?;
    let mut reader = csv::Reader::from_reader(body.as_bytes());
    let header = reader.headers().map_err(csv_err(path))?.iter().map(String::from).collect();
    let mut rows = Vec::new();
    for record in reader.records() {
        rows.push(record.map_err(csv_err(path))?.iter().map(String::from).collect());
    }
    Ok((header, rows))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample_ensemble() -> PathEnsemble {
        let meta = EnsembleMeta {
            g: 0.5,
            window: 2.0,
            dt: 0.1,
            dimension: 3,
            w_infinity: 1.77,
            w_epsilon: 1e-7,
            w_error: 2e-7,
            truncation_bound: 0.01,
            frozen: false,
        };
        PathEnsemble {
            w: vec![0.1, 0.2, 1.0 / 3.0, 0.4, 0.5],
            chain_lengths: vec![3, 2],
            diagnostics: vec![ChainDiagnostics {
                chain: 0,
                slice_acceptance: 0.97,
                path_acceptance: f64::NAN,
                slice_step: 1.0,
                path_step: 0.2,
                autocorrelation_time: 3.5,
                effective_samples: 10.0,
                thin: 4,
                retained: 3,
                warnings: vec![SamplerWarning::AcceptanceOutOfRange { kind: MoveKind::Slice, rate: 0.97 }],
            }],
            meta,
        }
    }

    #[test]
    fn ensemble_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let ens = sample_ensemble();
        let stamp = Stamp { model_hash: "abc", config_hash: "def", seed: 7, rule: "Simpson" };
        let (csv_path, meta_path) = write_ensemble(dir.path(), &ens, stamp).unwrap();
        assert!(csv_path.ends_with("ensemble_g0.5.csv"));
        let (back, sidecar) = read_ensemble(&csv_path, &meta_path).unwrap();
        assert_eq!(back.w, ens.w);
        assert_eq!(back.chain_lengths, ens.chain_lengths);
        assert_eq!(back.meta, ens.meta);
        assert!(back.diagnostics[0].path_acceptance.is_nan());
        assert_eq!(back.diagnostics[0].warnings, ens.diagnostics[0].warnings);
        assert_eq!(sidecar.model_hash, "abc");
        let text = std::fs::read_to_string(&csv_path).unwrap();
        assert!(text.starts_with("# fracnum-ensemble v1 config=def\nchain,index,w\n0,0,0.1\n"));
    }

    #[test]
    fn rejects_wrong_schema() {
        let dir = tempfile::tempdir().unwrap();
        let ens = sample_ensemble();
        let stamp = Stamp { model_hash: "abc", config_hash: "def", seed: 7, rule: "Simpson" };
        let (csv_path, meta_path) = write_ensemble(dir.path(), &ens, stamp).unwrap();
        std::fs::write(&csv_path, "chain,index,w\n0,0,1\n").unwrap();
        assert!(matches!(read_ensemble(&csv_path, &meta_path), Err(IoError::Format { .. })));
    }

    #[test]
    fn results_layout() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("r.csv");
        let row = ResultRow {
            model_hash: "h".into(),
            query: "k=1".into(),
            g: 2.0,
            value: 4.0,
            mc_stderr: 0.1,
            det_error: 0.0,
            n_eff: 100.0,
            jensen_bound: None,
            corridor: Some((1.0, 2.0)),
            mean_w: 1.0,
        };
        write_results(&path, &[row], "c").unwrap();
        let (header, rows) = read_table(&path, RESULTS_SCHEMA).unwrap();
        assert_eq!(header.len(), 11);
        assert_eq!(rows[0][7], "");
        assert_eq!(rows[0][8], "1.0");
    }

    #[test]
    fn real_formatting() {
        assert_eq!(fmt_real(0.1), "0.1");
        assert_eq!(fmt_real(f64::INFINITY), "inf");
        assert_eq!(fmt_real(f64::NAN), "nan");
        assert_eq!("1e-300".parse::<f64>().unwrap().to_string().parse::<f64>().unwrap(), 1e-300);
    }
}
