use thiserror::Error;

use crate::bernstein::BernsteinError;
use crate::expectations::ExpectationError;
use crate::model::ModelError;
use crate::oracle::OracleError;
use crate::pair_potential::KernelError;
use crate::path_gibbs::SamplerError;
use crate::poisson::PoissonError;
use crate::quadrature::QuadError;

/// Umbrella error for callers that chain several stages together.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error(transparent)]
    Quadrature(#[from] QuadError),
    #[error(transparent)]
    Bernstein(#[from] BernsteinError),
    #[error(transparent)]
    Poisson(#[from] PoissonError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Kernel(#[from] KernelError),
    #[error(transparent)]
    Sampler(#[from] SamplerError),
    #[error(transparent)]
    Expectation(#[from] ExpectationError),
    #[error(transparent)]
    Oracle(#[from] OracleError),
}
