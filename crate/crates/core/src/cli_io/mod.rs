//! Command-line front end: experiment configuration, artifact formats, run manifests and the
//! acceptance suite.

pub mod acceptance;
pub mod commands;
pub mod config;
pub mod format;
pub mod manifest;

pub use acceptance::{run_criterion, run_suite, CriterionReport, CRITERIA};
pub use config::ExperimentConfig;
pub use format::{Array, Table};
pub use manifest::{Check, RunManifest};
