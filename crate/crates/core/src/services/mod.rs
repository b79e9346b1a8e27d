//! Services evaluated on scenario twins: mMTC load sweeps, time-critical
//! scheduling (TIC), right-time synchronisation and planned truck routing.

mod capture;
mod mmtc;
mod ptr;
mod report;
mod sync;
mod tic;

pub use capture::{capture_data, ServiceDataset};
pub use mmtc::{prepare_network, run_mmtc, MmtcPoint, MmtcResult, UL_SWEEP};
pub use ptr::{random_instance, route_length, run_ptr, Bin, FillPredictor, PtrConfig, PtrInstance, PtrResult};
pub use report::{ServiceReport, Table};
pub use sync::{run_right_time_sync, write_sync_csv, RoundRecord, SyncResult, World, WorldConfig};
pub use tic::{evaluate_policy, run_tic, EpisodeStats, Policy, QTable, TicAction, TicConfig, TicEval, TicResult};

use thiserror::Error;

use crate::scenario::ScenarioError;
use crate::sim::SimError;
use crate::twin::TwinError;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ServiceError {
    #[error("insufficient history: need {need} snapshot(s), have {have}")]
    InsufficientHistory { need: usize, have: usize },
    #[error("invalid input: {0}")]
    Invalid(String),
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    Twin(#[from] TwinError),
}
