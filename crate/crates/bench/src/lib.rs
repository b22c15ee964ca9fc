//! Experiment harness for the `attribench-core` benchmark: file formats,
//! TOML experiment configs, a parallel deterministic runner and result
//! tables. The `attribench` binary wraps it in a command line.

pub mod config;
pub mod error;
pub mod io;
pub mod runner;
pub mod table;

pub use config::{Arm, DatasetEntry, ExperimentConfig, MethodEntry};
pub use error::{BenchError, Result};
pub use runner::{run_experiment, RunOptions};
pub use table::{render_table, CellValue, RenderOptions, ResultRow, ResultTable, TableFormat};
