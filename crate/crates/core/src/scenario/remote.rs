use std::fmt;
use std::time::{Duration, Instant};

use serde_json::json;

use super::backend::{parse_candidate, GenerationRequest, ScenarioBackend};
use super::spec::BackendConfig;
use super::{GeneratedScenario, ScenarioError};

pub const ENV_URL: &str = "TWINFORGE_LLM_URL";
pub const ENV_KEY: &str = "TWINFORGE_LLM_KEY";

const SYSTEM_PROMPT: &str = "You generate scenario twins for an IoT network digital twin. \
Reply with exactly one JSON object with the fields predicted_graph, sim_config, weights, \
priority, provenance and backend_id, using the same schema as the objects in the request. \
Weights over rho, d, l, alpha must be positive, at least the floor w_min, sum to 1, and the \
prioritised pair must strictly outweigh the other two.";

/// Chat-style HTTP backend. The endpoint and key come from the environment;
/// the key is sent as a bearer token and never logged.
pub struct RemoteBackend {
    url: String,
    key: Option<String>,
    model: String,
    retries: u32,
    budget: Duration,
}

impl fmt::Debug for RemoteBackend {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("RemoteBackend")
            .field("url", &self.url)
            .field("key", &self.key.as_ref().map(|_| "<redacted>"))
            .field("model", &self.model)
            .field("retries", &self.retries)
            .field("budget", &self.budget)
            .finish()
    }
}

impl RemoteBackend {
    pub fn new(url: impl Into<String>, key: Option<String>, cfg: &BackendConfig) -> Self {
        RemoteBackend {
            url: url.into(),
            key,
            model: cfg.model.clone(),
            retries: cfg.retries,
            budget: Duration::from_secs_f64(cfg.timeout_secs),
        }
    }

    pub fn from_env(cfg: &BackendConfig) -> Result<Self, ScenarioError> {
        let url = std::env::var(ENV_URL).map_err(|_| ScenarioError::Config(format!("{ENV_URL} is not set")))?;
        let key = std::env::var(ENV_KEY).ok().filter(|k| !k.is_empty());
        Ok(Self::new(url, key, cfg))
    }

    fn body(&self, req: &GenerationRequest<'_>) -> serde_json::Value {
        let history: Vec<_> = req.history.iter().map(|g| json!({"timestamp": g.timestamp, "twins": g.len()})).collect();
        let context = json!({
            "scenario": {
                "name": req.spec.name,
                "kind": req.spec.kind,
                "service": req.spec.service,
                "size_class": req.spec.size_class,
                "twinning_rate": req.spec.sync.twinning_rate,
            },
            "measurements": req.raw,
            "priority": req.priority,
            "weights": req.weights,
            "w_min": req.spec.optimizer.w_min,
            "sim_config": req.sim_config,
            "history": history,
            "realtime_graph": req.realtime,
        });
        json!({
            "model": self.model,
            "messages": [
                {"role": "system", "content": SYSTEM_PROMPT},
                {"role": "user", "content": context.to_string()},
            ],
            "response_format": "json",
        })
    }

    fn attempt(&self, body: &serde_json::Value, timeout: Duration) -> Result<String, String> {
        let agent: ureq::Agent = ureq::Agent::config_builder().timeout_global(Some(timeout)).build().into();
        let mut r = agent.post(&self.url).header("Content-Type", "application/json");
        if let Some(k) = &self.key {
            r = r.header("Authorization", format!("Bearer {k}"));
        }
        let resp = r.send_json(body).map_err(|e| e.to_string())?;
        resp.into_body().read_to_string().map_err(|e| e.to_string())
    }
}

impl ScenarioBackend for RemoteBackend {
    fn id(&self) -> String {
        format!("remote:{}", self.model)
    }

    fn propose(&self, req: &GenerationRequest<'_>) -> Result<GeneratedScenario, ScenarioError> {
        let body = self.body(req);
        let start = Instant::now();
        let mut last = String::from("no attempt made");
        for attempt in 0..=self.retries {
            let Some(left) = self.budget.checked_sub(start.elapsed()).filter(|d| !d.is_zero()) else {
                break;
            };
            match self.attempt(&body, left).map_err(ScenarioError::Backend).and_then(|t| parse_candidate(&t)) {
                Ok(s) => return Ok(s),
                Err(e) => {
                    log::warn!("remote attempt {} failed: {e}", attempt + 1);
                    last = e.to_string();
                }
            }
        }
        Err(ScenarioError::Backend(format!("remote gave up: {last}")))
    }
}
