//! Library surface of the runner so integration tests can drive config
//! parsing, experiment execution, and artifact writing directly.

pub mod config;
pub mod output;
pub mod runner;
