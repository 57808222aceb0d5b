//! Path-space Gibbs measure at finite window.
//!
//! The target law on paths `X` over `[−T, T]` is the reference process
//! reweighted by `exp((g²/2) ∫∫ 𝒲(X_t − X_s, t − s) ds dt)`. Both proposal
//! moves leave the reference law invariant, so the Metropolis–Hastings ratio
//! is just the exponential of the change in the interaction term.

pub mod ensemble;
pub mod grid;
pub mod reference;
pub mod sampler;

pub use ensemble::{rho_beta, ChainDiagnostics, EnsembleMeta, MoveKind, PathEnsemble, RhoEstimate, SamplerWarning};
pub use grid::{DiscretePath, QuadratureRule, TimeGrid, TimeWeights};
pub use reference::{sample_reference, ReferenceProcess};
pub use sampler::{chain_rng, run_gibbs_chain, GibbsSampler, MCMCConfig, Thinning};

use thiserror::Error;

use crate::model::ModelError;
use crate::pair_potential::KernelError;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SamplerError {
    #[error("window T = {window} is not an integer multiple of dt = {dt}")]
    InvalidGrid { window: f64, dt: f64 },
    #[error("Simpson weights need an even number of steps per half window, got {half_steps}")]
    OddSimpsonGrid { half_steps: usize },
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Kernel(#[from] KernelError),
    #[error("non-finite Gibbs exponent at sweep {sweep}; reduce g or the window T")]
    NonFiniteDensity { sweep: usize },
    #[error("W = {w} outside [0, {bound}] at sweep {sweep}")]
    WRangeViolation { w: f64, bound: f64, sweep: usize },
    #[error("invalid sampler setting {name} = {value}")]
    InvalidConfig { name: &'static str, value: f64 },
    #[error("ensemble is empty")]
    EmptyEnsemble,
    #[error("cannot merge ensembles with different metadata")]
    IncompatibleEnsembles,
}
