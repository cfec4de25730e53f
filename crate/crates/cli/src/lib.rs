//! Instance files, experiment suites and the `nash-stream` command line.

pub mod app;
pub mod error;
pub mod io;
pub mod report;
pub mod suite;

pub use error::{CliError, CliResult};
pub use suite::{run_suite, AlgorithmKind, SuiteConfig, SuiteOutcome};
