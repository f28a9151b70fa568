//! Config-driven experiments: synthesize a truth, fit a candidate kernel,
//! validate it on held-out points, and write CSV, text and SVG artifacts.

pub mod commands;
mod config;
pub mod io;
mod kv;
mod runner;
pub mod svg;

pub use config::{ExperimentConfig, TrainMode, CONFIG_KEYS};
pub use runner::{
    file_header, fit_candidate, persist_replicate, persist_report, replicate_dir, replicate_results,
    replicate_study, run_experiment, run_replicate, write_metadata, CandidateModel, ReplicateResult,
    ReplicateRun, RunSummary,
};
