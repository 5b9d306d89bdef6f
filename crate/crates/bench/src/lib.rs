//! Monte-Carlo harness for the Pareto route optimizer: seeded experiments,
//! accuracy against the exhaustive oracle, and CSV output.

pub mod error;
pub mod experiment;
pub mod oracle;

pub use error::{HarnessError, Result};
pub use experiment::{default_variants, run_experiment, ExperimentSpec, ExperimentTable, RunRow, Stat, CSV_COLUMNS};
pub use oracle::{oracle_check, oracle_check_with, OracleReport};
