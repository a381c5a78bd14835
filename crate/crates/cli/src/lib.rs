//! Library side of the `eigenacs` binary: configuration, commands, and
//! report writers, exposed so integration tests can drive them directly.

pub mod commands;
pub mod config;
pub mod report;

pub use commands::{compare, oracle, solve, with_threads, CompareReport, SolveReport};
pub use config::RunConfig;
