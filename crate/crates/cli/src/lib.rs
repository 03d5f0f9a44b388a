//! Command-line orchestration: scenario simulation, estimation dispatch,
//! Monte Carlo replication runs, placebo testing, CSV ingestion and report
//! emission. The binary in `main.rs` is a thin wrapper over this library so
//! the workflows stay testable in-process.

pub mod error;
pub mod ingest;
pub mod io;
pub mod manifest;
pub mod methods;
pub mod placebo;
pub mod report;
pub mod runner;

pub use error::CliError;
pub use methods::{Method, MethodOptions, MethodOutput, PropensitySource};
