//! Driver for the space-time VEM solver: convergence studies, the rotating
//! body benchmark, single configured runs and mesh utilities.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod error;
pub mod output;
pub mod study;

pub use config::{load_config, run_single, Config, SingleSummary};
pub use error::{CliError, Result};
pub use study::{
    check_rates, run_benchmark_rotating, run_converge, CaseId, ConvergeOutput, MeshFamily, RotatingReport,
    RotatingSpec, StudySpec,
};
