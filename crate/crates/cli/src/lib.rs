//! Batch front end: run configuration, fixtures, reference validation and
//! the subcommand bodies behind the `wecarray` binary.

pub mod commands;
pub mod config;
pub mod fixtures;
pub mod validation;
