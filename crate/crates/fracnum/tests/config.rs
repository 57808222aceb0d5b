use std::path::PathBuf;

use fracnum::config::{ConfigError, RawConfig, RunConfig};

fn shipped(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs").join(name)
}

#[test]
fn shipped_configs_load() {
    for name in ["nelson.ini", "polaron.ini", "frozen_sweep.ini"] {
        let raw = RawConfig::load(&shipped(name)).unwrap();
        let cfg = RunConfig::from_raw(&raw).unwrap_or_else(|e| panic!("{name}: {e}"));
        assert!(!cfg.couplings.is_empty());
        assert!(!cfg.query.queries().is_empty());
    }
}

#[test]
fn file_errors_point_at_the_line() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.ini");
    std::fs::write(&path, "[model]\nvariant = nelson\n\nnu 1\n").unwrap();
    let err = RawConfig::load(&path).unwrap_err();
    assert!(matches!(err, ConfigError::Syntax { line: 4, .. }), "{err}");
    assert!(matches!(RawConfig::load(&dir.path().join("absent.ini")), Err(ConfigError::Io { .. })));
}

#[test]
fn layering_order() {
    let mut raw = RawConfig::load(&shipped("nelson.ini")).unwrap();
    raw.apply_env([("FRACNUM_SAMPLER__SEED".into(), "11".into())]).unwrap();
    assert_eq!(RunConfig::from_raw(&raw).unwrap().sampler.seed, 11);
    raw.set("sampler.seed", "12").unwrap();
    let cfg = RunConfig::from_raw(&raw).unwrap();
    assert_eq!(cfg.sampler.seed, 12);
    assert_eq!(cfg.couplings, vec![0.5, 2.0]);
}

#[test]
fn model_hash_ignores_sampling_controls() {
    let base = RawConfig::load(&shipped("nelson.ini")).unwrap();
    let a = RunConfig::from_raw(&base).unwrap();
    let mut raw = base.clone();
    for (k, v) in [("sampler.chains", "7"), ("sampler.sweeps", "10"), ("output.dir", "elsewhere"), ("query.k", "3")] {
        raw.set(k, v).unwrap();
    }
    let b = RunConfig::from_raw(&raw).unwrap();
    assert_eq!(a.model_hash(), b.model_hash());
    assert_ne!(a.config_hash(), b.config_hash());
    let mut raw = base;
    raw.set("sampler.dt", "0.05").unwrap();
    assert_ne!(a.model_hash(), RunConfig::from_raw(&raw).unwrap().model_hash());
}
