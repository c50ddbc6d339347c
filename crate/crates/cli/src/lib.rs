//! Configuration, orchestration, and report emission for probe runs.

pub mod config;
pub mod emit;
pub mod run;

pub use config::{ConfigError, RunConfig};
pub use emit::{emit_report, Format};
pub use run::{run_probe, RunError, RunReport};
