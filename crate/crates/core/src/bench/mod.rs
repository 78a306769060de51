//! Manufactured-solution convergence study: exact solution and forcing,
//! error quantities, EOC computation and table output.

pub mod errors;
pub mod experiment;
pub mod manufactured;

pub use errors::{eoc, error_quantities, ErrorQuantities};
pub use experiment::{
    markdown_tables, run_case, run_experiment, run_level, steps_at_level, write_csv, ErrorReport, ExperimentConfig,
    LevelRecord, LevelRun,
};
pub use manufactured::{pressure_mean, BoundaryData, ManufacturedCase};
