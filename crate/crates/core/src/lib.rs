//! Ground-state expectations of real powers of the boson number operator.
//!
//! The number statistics of the Nelson-type ground state are expressed as a
//! double expectation: an outer average over a path-space Gibbs measure and an
//! inner average over a rate-one Poisson process evaluated at the random time
//! `g² W`, where `W` is the double time integral of a pair interaction along
//! the path. This crate provides every piece of that pipeline without `std`:
//!
//! * [`bernstein`]: Bernstein functions through their Lévy representation.
//! * [`combinatorics`]: exact Stirling numbers and Poisson raw moments.
//! * [`poisson`]: certified series for Poisson functionals at fixed time.
//! * [`pair_potential`]: the pair kernel, `W∞`, and discrete double integrals.
//! * [`path_gibbs`]: reference diffusions and a Metropolis–Hastings sampler.
//! * [`expectations`]: assembly of the moment formulas and bounds.
//! * [`oracle`]: a single-mode coherent-state model solved exactly.
//! * [`validation`]: the invariant suite used by the `validate` command.
//!
//! IO, threads, and the command line live in the companion `fracnum` crate.

#![no_std]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod bernstein;
pub mod combinatorics;
pub mod diagnostics;
pub mod error;
pub mod expectations;
pub mod model;
pub mod oracle;
pub mod pair_potential;
pub mod path_gibbs;
pub mod poisson;
pub mod quadrature;
pub mod validation;

pub use error::Error;
