//! Command-line front end, configuration and file formats for `fracnum-core`.

pub mod commands;
pub mod config;
pub mod io;
pub mod parallel;

pub use fracnum_core as core;
