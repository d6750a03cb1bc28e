//! Pipeline driver for probabilistic ampacity ratings: synthesize or
//! ingest weather, fit forecast-error distributions, precompute the
//! Monte Carlo rating database, and query or serve it.
//!
//! The binary lives in `main.rs`; this library carries the command
//! implementations and the CSV table formats so tests can parse what
//! the commands emit.

pub mod commands;
pub mod config;
pub mod fail;
pub mod io_util;
pub mod tables;
