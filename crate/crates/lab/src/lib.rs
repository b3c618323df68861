//! Experiment runner for the self-financing laboratory: configuration,
//! registry, report emission and the experiment implementations behind the
//! `sfc-lab` binary.

pub mod config;
pub mod error;
pub mod experiments;
pub mod registry;
pub mod report;

pub use config::Config;
pub use error::LabError;
pub use experiments::run_experiment;
pub use registry::{lookup, Experiment, REGISTRY};
pub use report::{emit_report, Report};
