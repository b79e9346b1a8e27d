//! Scenario-twin generation.
//!
//! A scenario spec, the history store and the realtime twin graph go in; a
//! validated [`GeneratedScenario`] (predicted graph, simulator config and
//! KPI weights) comes out. Generation is delegated to a pluggable backend
//! and falls back to the deterministic rule backend whenever the backend
//! fails or returns something invalid.

mod backend;
mod generate;
mod network;
mod predict;
mod remote;
mod spec;

pub use backend::{parse_candidate, GenerationRequest, MockBackend, MockReply, RuleBackend, ScenarioBackend};
pub use generate::{generate, validate_scenario, FALLBACK_ID};
pub use network::{measure_realtime, network_graph, network_models, observe_network};
pub use predict::{predict_next_state, Prediction, Strategy, DEFAULT_DAMPING};
pub use remote::{RemoteBackend, ENV_KEY, ENV_URL};
pub use spec::{
    BackendConfig, BackendKind, EvalTarget, KpiTargets, ScenarioKind, ScenarioSpec, ServiceKind, SyncSettings,
};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::kpi::{KpiError, PriorityPair, WeightVector};
use crate::sim::{SimConfig, SimError};
use crate::twin::{TwinError, TwinGraph};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ScenarioError {
    #[error("config error: {0}")]
    Config(String),
    #[error("history is empty")]
    EmptyHistory,
    #[error(transparent)]
    Kpi(#[from] KpiError),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    Twin(#[from] TwinError),
    #[error("backend: {0}")]
    Backend(String),
}

/// A generated scenario twin.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeneratedScenario {
    pub predicted_graph: TwinGraph,
    pub sim_config: SimConfig,
    pub weights: WeightVector,
    pub priority: Option<PriorityPair>,
    pub provenance: Strategy,
    pub backend_id: String,
}
