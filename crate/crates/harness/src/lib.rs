//! Experiment harness: configuration, single-run pipeline, parallel sweeps
//! and the JSON-lines result format.

pub mod calibration;
pub mod certificates;
pub mod config;
pub mod error;
pub mod pipeline;
pub mod record;
pub mod sweep;

pub use config::{ExperimentConfig, GridAxes, XiSource};
pub use error::{HarnessError, Result};
pub use pipeline::{execute, run_pipeline, PipelineRun};
pub use record::{aggregate, ResultRecord, RunStatus, SweepSummary};
pub use sweep::{run_sweep, SweepOutcome};
