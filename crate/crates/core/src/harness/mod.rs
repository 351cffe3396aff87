//! Experiment configuration, presets, deterministic ensemble execution and
//! report generation.

mod config;
mod presets;
mod run;

pub use config::{
    parse_config, AnalysisRequest, Band, ExperimentConfig, GridParams, HoelderTarget, SCHEMA_VERSION,
};
pub use presets::{preset, PRESET_NAMES};
pub use run::{run_and_write, run_experiment, AnalysisOutcome, Metric, Provenance, Report, Status, Summary};
