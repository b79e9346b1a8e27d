use std::path::Path;

use serde::{Deserialize, Serialize};

use super::predict::Strategy;
use super::ScenarioError;
use crate::kpi::{OptimizerParams, RawMeasurements, Thresholds, WeightMode};
use crate::sim::{build_topology, SimOverrides, SizeClass};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScenarioKind {
    Base,
    HighDensity,
    Synchronization,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ServiceKind {
    Mmtc,
    Tic,
    Sync,
    Ptr,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BackendKind {
    Rule,
    Remote,
    Mock,
}

impl std::str::FromStr for BackendKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "rule" => Ok(BackendKind::Rule),
            "remote" => Ok(BackendKind::Remote),
            "mock" => Ok(BackendKind::Mock),
            other => Err(format!("unknown backend `{other}`")),
        }
    }
}

/// Target measurements. Set fields replace the values measured on the
/// realtime graph before priority selection.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KpiTargets {
    pub device_density: Option<f64>,
    pub mean_latency_ms: Option<f64>,
    pub accuracy: Option<f64>,
    pub mean_buffer_occupancy: Option<f64>,
}

impl KpiTargets {
    pub fn apply(&self, raw: &mut RawMeasurements) {
        if let Some(v) = self.device_density {
            raw.device_density = v;
        }
        if let Some(v) = self.mean_latency_ms {
            raw.mean_latency_ms = v;
        }
        if let Some(v) = self.accuracy {
            raw.accuracy = v;
        }
        if let Some(v) = self.mean_buffer_occupancy {
            raw.mean_buffer_occupancy = v;
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BackendConfig {
    pub kind: BackendKind,
    /// Model name sent to the remote endpoint.
    pub model: String,
    pub retries: u32,
    pub timeout_secs: f64,
    /// JSON array of canned replies for the mock backend.
    pub fixture: Option<String>,
}

impl Default for BackendConfig {
    fn default() -> Self {
        BackendConfig {
            kind: BackendKind::Rule,
            model: "scenario-gen".into(),
            retries: 2,
            timeout_secs: 10.0,
            fixture: None,
        }
    }
}

/// What a prediction is scored against in the synchronisation service.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EvalTarget {
    /// The physical state one round later.
    NextRound,
    /// The physical state of the same round.
    SameRound,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SyncSettings {
    pub rounds: u32,
    pub twinning_rate: f64,
    pub strategies: Vec<Strategy>,
    pub tolerance: f64,
    pub target_accuracy: Option<f64>,
    pub eval: EvalTarget,
    pub n_twins: usize,
}

impl Default for SyncSettings {
    fn default() -> Self {
        SyncSettings {
            rounds: 12,
            twinning_rate: 0.8,
            strategies: Strategy::ALL.to_vec(),
            tolerance: 0.02,
            target_accuracy: None,
            eval: EvalTarget::NextRound,
            n_twins: 40,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioSpec {
    pub name: String,
    pub kind: ScenarioKind,
    pub size_class: SizeClass,
    pub service: ServiceKind,
    pub weight_mode: WeightMode,
    pub seed: u64,
    pub kpi_targets: KpiTargets,
    pub thresholds: Thresholds,
    pub optimizer: OptimizerParams,
    pub sim: SimOverrides,
    pub backend: BackendConfig,
    pub sync: SyncSettings,
}

impl ScenarioSpec {
    pub fn new(kind: ScenarioKind, size_class: SizeClass, service: ServiceKind, weight_mode: WeightMode) -> Self {
        ScenarioSpec {
            name: format!("{kind:?}").to_lowercase(),
            kind,
            size_class,
            service,
            weight_mode,
            seed: 1,
            kpi_targets: KpiTargets::default(),
            thresholds: Thresholds::default(),
            optimizer: OptimizerParams::default(),
            sim: SimOverrides::default(),
            backend: BackendConfig::default(),
            sync: SyncSettings::default(),
        }
    }

    pub fn validate(&self) -> Result<(), ScenarioError> {
        let bad = |m: String| Err(ScenarioError::Config(m));
        if self.kind == ScenarioKind::Base && self.weight_mode != WeightMode::Random {
            return bad("a base scenario uses random weights".into());
        }
        let th = &self.thresholds;
        if !(th.d_th > 0.0 && th.l_th > 0.0 && (0.0..=1.0).contains(&th.a_th)) {
            return bad(format!("invalid thresholds {th:?}"));
        }
        let o = &self.optimizer;
        if !(o.w_min > 0.0 && o.w_pmin > o.w_min && 2.0 * o.w_min + 2.0 * o.w_pmin < 1.0) {
            return bad(format!("infeasible weight floors w_min={} w_pmin={}", o.w_min, o.w_pmin));
        }
        if !(o.priority_share > 0.5 && o.priority_share <= 1.0 - 2.0 * o.w_min) {
            return bad(format!("priority_share {} must lie in (0.5, {}]", o.priority_share, 1.0 - 2.0 * o.w_min));
        }
        let s = &self.sync;
        if s.rounds == 0 || s.n_twins == 0 {
            return bad("sync rounds and n_twins must be positive".into());
        }
        if !(0.0..=1.0).contains(&s.twinning_rate) {
            return bad(format!("twinning_rate {} outside [0, 1]", s.twinning_rate));
        }
        if s.strategies.is_empty() {
            return bad("no sync strategies".into());
        }
        if !(s.tolerance >= 0.0) {
            return bad(format!("tolerance {}", s.tolerance));
        }
        if let Some(a) = s.target_accuracy {
            if !(0.0..=1.0).contains(&a) {
                return bad(format!("target_accuracy {a}"));
            }
        }
        if !(self.backend.timeout_secs > 0.0) {
            return bad("backend timeout must be positive".into());
        }
        build_topology(self.size_class, &self.sim, self.seed).map_err(|e| ScenarioError::Config(e.to_string()))?;
        Ok(())
    }

    /// Parses a TOML or JSON spec file (chosen by extension, TOML otherwise).
    pub fn from_path(path: &Path) -> Result<Self, ScenarioError> {
        let text =
            std::fs::read_to_string(path).map_err(|e| ScenarioError::Config(format!("{}: {e}", path.display())))?;
        let is_json = path.extension().is_some_and(|e| e.eq_ignore_ascii_case("json"));
        let spec = if is_json { Self::from_json(&text) } else { Self::from_toml(&text) }
            .map_err(|e| ScenarioError::Config(format!("{}: {e}", path.display())))?;
        Ok(spec)
    }

    pub fn from_toml(text: &str) -> Result<Self, ScenarioError> {
        let f: SpecFile = toml::from_str(text).map_err(|e| ScenarioError::Config(e.to_string()))?;
        f.into_spec()
    }

    pub fn from_json(text: &str) -> Result<Self, ScenarioError> {
        let f: SpecFile = serde_json::from_str(text).map_err(|e| ScenarioError::Config(e.to_string()))?;
        f.into_spec()
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(&SpecFile::from_spec(self)).expect("spec serialises")
    }
}

/// On-disk layout: `[scenario]`, `[thresholds]`, `[optimizer]`, `[sim]`,
/// `[backend]` and an optional `[sync]`.
#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SpecFile {
    scenario: ScenarioSection,
    #[serde(default)]
    thresholds: Thresholds,
    #[serde(default)]
    optimizer: OptimizerParams,
    #[serde(default)]
    sim: SimOverrides,
    #[serde(default)]
    backend: BackendConfig,
    #[serde(default)]
    sync: SyncSettings,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScenarioSection {
    #[serde(default)]
    name: Option<String>,
    kind: ScenarioKind,
    size_class: SizeClass,
    service: ServiceKind,
    #[serde(default)]
    weight_mode: Option<WeightMode>,
    #[serde(default = "default_seed")]
    seed: u64,
    #[serde(default)]
    targets: KpiTargets,
}

fn default_seed() -> u64 {
    1
}

impl SpecFile {
    fn into_spec(self) -> Result<ScenarioSpec, ScenarioError> {
        let s = self.scenario;
        let weight_mode = s.weight_mode.unwrap_or(match s.kind {
            ScenarioKind::Base => WeightMode::Random,
            _ => WeightMode::Split,
        });
        let mut spec = ScenarioSpec::new(s.kind, s.size_class, s.service, weight_mode);
        if let Some(name) = s.name {
            spec.name = name;
        }
        spec.seed = s.seed;
        spec.kpi_targets = s.targets;
        spec.thresholds = self.thresholds;
        spec.optimizer = self.optimizer;
        spec.sim = self.sim;
        spec.backend = self.backend;
        spec.sync = self.sync;
        spec.validate()?;
        Ok(spec)
    }

    fn from_spec(spec: &ScenarioSpec) -> Self {
        SpecFile {
            scenario: ScenarioSection {
                name: Some(spec.name.clone()),
                kind: spec.kind,
                size_class: spec.size_class,
                service: spec.service,
                weight_mode: Some(spec.weight_mode),
                seed: spec.seed,
                targets: spec.kpi_targets,
            },
            thresholds: spec.thresholds,
            optimizer: spec.optimizer,
            sim: spec.sim.clone(),
            backend: spec.backend.clone(),
            sync: spec.sync.clone(),
        }
    }
}
