//! Experiment drivers for shuttling-based EDSR gate studies.
//!
//! Each experiment expands its config into independent tasks, runs them on a
//! worker pool and writes per-task records plus aggregate summaries. A record
//! carries the config digest and seed, which is enough to re-run it exactly.

// `!(x > 0.0)` style checks reject NaN along with the out-of-range values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod error;
pub mod experiments;
pub mod fixtures;
pub mod output;
pub mod record;
pub mod runner;
pub mod summary;

pub use config::{ExperimentConfig, ExperimentKind};
pub use error::{RunError, RunResult};
pub use record::ResultRecord;
pub use runner::{rerun_record, resolve_workers, run_experiment, RunOutput};
