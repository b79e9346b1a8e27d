//! Experiment orchestration: plans over seeds and topology sizes, parallel
//! independent runs, aggregate statistics and persisted artifacts
//! (`metrics/*.csv`, `reports/*.json`, `plots/*.svg`, `summary.md`,
//! `history.jsonl`, `manifest.json`).

mod artifacts;
mod experiments;
mod plan;
mod stats;
pub mod svg;

pub use artifacts::{foreign_files, sha256_hex, ArtifactSet, Manifest, ManifestEntry, MANIFEST_FILE, RUN_INFO_FILE};
pub use experiments::{
    config_hash, make_backend, run_experiment, throughput_spec, RunOutcome, PTR_BINS, PTR_SIDE, PTR_TRUCK_CAPACITY,
};
pub use plan::{parse_seeds, parse_sizes, throughput_load, ExperimentKind, ExperimentPlan};
pub use stats::{mean_ci95, MeanCi};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum HarnessError {
    /// The plan or spec is unusable; nothing was written.
    #[error("config error: {0}")]
    Config(String),
    #[error("io error: {0}")]
    Io(String),
}
