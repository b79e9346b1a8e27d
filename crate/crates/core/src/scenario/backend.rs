use std::sync::atomic::{AtomicUsize, Ordering};

use serde_json::Value as Json;

use super::predict::{predict_next_state, Strategy, DEFAULT_DAMPING};
use super::spec::ScenarioSpec;
use super::{GeneratedScenario, ScenarioError};
use crate::kpi::{PriorityPair, RawMeasurements, WeightVector};
use crate::sim::SimConfig;
use crate::twin::TwinGraph;

/// Everything a backend sees when asked for a scenario.
#[derive(Debug, Clone)]
pub struct GenerationRequest<'a> {
    pub spec: &'a ScenarioSpec,
    pub history: &'a [&'a TwinGraph],
    pub realtime: &'a TwinGraph,
    pub raw: RawMeasurements,
    pub priority: Option<PriorityPair>,
    pub weights: WeightVector,
    /// Preset config with `weights` applied.
    pub sim_config: SimConfig,
}

pub trait ScenarioBackend: Send + Sync {
    fn id(&self) -> String;
    fn propose(&self, req: &GenerationRequest<'_>) -> Result<GeneratedScenario, ScenarioError>;
}

/// Deterministic generator: the damped-trend prediction plus the request's
/// own weights and config.
#[derive(Debug, Clone, Default)]
pub struct RuleBackend;

impl RuleBackend {
    pub fn propose_as(&self, req: &GenerationRequest<'_>, id: &str) -> Result<GeneratedScenario, ScenarioError> {
        let p = predict_next_state(
            req.history,
            req.realtime,
            Strategy::Generative,
            req.spec.sync.twinning_rate,
            DEFAULT_DAMPING,
            req.spec.seed,
        )?;
        Ok(GeneratedScenario {
            predicted_graph: p.graph,
            sim_config: req.sim_config.clone(),
            weights: req.weights,
            priority: req.priority,
            provenance: Strategy::Generative,
            backend_id: id.to_string(),
        })
    }
}

impl ScenarioBackend for RuleBackend {
    fn id(&self) -> String {
        "rule".into()
    }

    fn propose(&self, req: &GenerationRequest<'_>) -> Result<GeneratedScenario, ScenarioError> {
        self.propose_as(req, "rule")
    }
}

#[derive(Debug, Clone)]
pub enum MockReply {
    Scenario(Box<GeneratedScenario>),
    /// Raw response text, parsed like a remote reply.
    Raw(String),
    Unavailable,
}

/// Replays canned replies in order, cycling.
#[derive(Debug)]
pub struct MockBackend {
    replies: Vec<MockReply>,
    cursor: AtomicUsize,
}

impl MockBackend {
    pub fn new(replies: Vec<MockReply>) -> Self {
        MockBackend { replies, cursor: AtomicUsize::new(0) }
    }

    pub fn unavailable() -> Self {
        Self::new(vec![MockReply::Unavailable])
    }

    /// Loads a JSON array of raw reply strings.
    pub fn from_fixture(text: &str) -> Result<Self, ScenarioError> {
        let raw: Vec<Json> =
            serde_json::from_str(text).map_err(|e| ScenarioError::Config(format!("mock fixture: {e}")))?;
        let replies = raw
            .into_iter()
            .map(|v| match v {
                Json::String(s) => MockReply::Raw(s),
                Json::Null => MockReply::Unavailable,
                other => MockReply::Raw(other.to_string()),
            })
            .collect();
        Ok(Self::new(replies))
    }
}

impl ScenarioBackend for MockBackend {
    fn id(&self) -> String {
        "mock".into()
    }

    fn propose(&self, _req: &GenerationRequest<'_>) -> Result<GeneratedScenario, ScenarioError> {
        if self.replies.is_empty() {
            return Err(ScenarioError::Backend("mock has no replies".into()));
        }
        let i = self.cursor.fetch_add(1, Ordering::Relaxed) % self.replies.len();
        match &self.replies[i] {
            MockReply::Scenario(s) => Ok((**s).clone()),
            MockReply::Raw(text) => parse_candidate(text),
            MockReply::Unavailable => Err(ScenarioError::Backend("mock unavailable".into())),
        }
    }
}

/// Extracts exactly one JSON object from a model reply and decodes it as a
/// scenario. Chat-completion envelopes (`choices[0].message.content`) and
/// surrounding prose or code fences are tolerated.
pub fn parse_candidate(text: &str) -> Result<GeneratedScenario, ScenarioError> {
    let mut v = single_object(text)?;
    if let Some(content) = v.pointer("/choices/0/message/content").and_then(Json::as_str) {
        v = single_object(content)?;
    }
    serde_json::from_value(v).map_err(|e| ScenarioError::Backend(format!("schema: {e}")))
}

fn single_object(text: &str) -> Result<Json, ScenarioError> {
    let t = text.trim();
    if let Ok(v @ Json::Object(_)) = serde_json::from_str::<Json>(t) {
        return Ok(v);
    }
    let (Some(a), Some(b)) = (t.find('{'), t.rfind('}')) else {
        return Err(ScenarioError::Backend("no JSON object in reply".into()));
    };
    if b < a {
        return Err(ScenarioError::Backend("no JSON object in reply".into()));
    }
    match serde_json::from_str::<Json>(&t[a..=b]) {
        Ok(v @ Json::Object(_)) => Ok(v),
        Ok(_) => Err(ScenarioError::Backend("reply is not a JSON object".into())),
        Err(e) => Err(ScenarioError::Backend(format!("malformed JSON: {e}"))),
    }
}
