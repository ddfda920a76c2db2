//! Library surface of the `balderdash` binary: experiment configuration and
//! the subcommand implementations, importable by integration tests.

pub mod commands;
pub mod config;
