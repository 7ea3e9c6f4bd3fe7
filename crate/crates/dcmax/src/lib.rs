//! Experiments, file formats and the command-line interface for
//! [`dcmax_core`].
//!
//! - [`experiments`]: the synthetic phase retrieval generator, Monte-Carlo
//!   population risks, the replication harness and its rate and normality
//!   summaries;
//! - [`config`]: run configuration loaded from JSON and overridden by flags;
//! - [`io`]: CSV and JSON readers and writers;
//! - [`cli`]: the `dcmax` subcommands.

pub mod cli;
pub mod config;
mod error;
pub mod experiments;
pub mod io;

pub use error::{Error, Result};
