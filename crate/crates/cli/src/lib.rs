//! Command-line front end: job configuration, artifact writers and the
//! subcommand pipelines.

pub mod commands;
pub mod config;
pub mod io;
