use super::backend::{GenerationRequest, RuleBackend, ScenarioBackend};
use super::network::measure_realtime;
use super::spec::ScenarioSpec;
use super::{GeneratedScenario, ScenarioError};
use crate::kpi::{assign_weights, normalize_kpis, select_priority, KpiVector, WeightMode};
use crate::sim::build_topology;
use crate::twin::TwinGraph;

/// Backend id recorded when the rule backend stood in for another one.
pub const FALLBACK_ID: &str = "rule(fallback)";

/// Builds a scenario twin: measurements, priority case, weights, then the
/// backend's proposal, validated. A failed or invalid proposal is replaced
/// by the rule backend's output.
pub fn generate(
    spec: &ScenarioSpec,
    history: &[&TwinGraph],
    realtime: &TwinGraph,
    backend: &dyn ScenarioBackend,
) -> Result<GeneratedScenario, ScenarioError> {
    spec.validate()?;
    if history.is_empty() {
        return Err(ScenarioError::EmptyHistory);
    }
    let mut sim_config = build_topology(spec.size_class, &spec.sim, spec.seed)?;
    let mut raw = measure_realtime(realtime, sim_config.area_units, spec.thresholds.default_latency_budget_ms());
    spec.kpi_targets.apply(&mut raw);
    raw.check()?;
    let priority = select_priority(&raw, &spec.thresholds);
    let kpis = match spec.weight_mode {
        WeightMode::Optimize if priority.is_some() => normalize_kpis(&raw)?,
        _ => normalize_kpis(&raw).unwrap_or(KpiVector::new(0.5, 0.5, 0.5, 0.5)),
    };
    let weights = assign_weights(priority, spec.weight_mode, &kpis, spec.seed, &spec.optimizer)?;
    sim_config.weights = weights;

    let req = GenerationRequest { spec, history, realtime, raw, priority, weights, sim_config };
    let w_min = spec.optimizer.w_min;
    match backend.propose(&req) {
        Ok(candidate) => {
            let problems = validate_scenario(&candidate, w_min);
            if problems.is_empty() {
                return Ok(candidate);
            }
            log::warn!("backend `{}` proposal rejected: {}", backend.id(), problems.join("; "));
        }
        Err(e) => log::warn!("backend `{}` failed: {e}", backend.id()),
    }
    let fallback = RuleBackend.propose_as(&req, FALLBACK_ID)?;
    let problems = validate_scenario(&fallback, w_min);
    if !problems.is_empty() {
        return Err(ScenarioError::Backend(format!("fallback invalid: {}", problems.join("; "))));
    }
    Ok(fallback)
}

/// Every problem with a candidate scenario; empty when valid.
pub fn validate_scenario(s: &GeneratedScenario, w_min: f64) -> Vec<String> {
    let mut out = s.weights.violations(w_min);
    if let Some(p) = s.weights.prioritized {
        if s.priority != Some(p) {
            out.push(format!("weights prioritise {p} but scenario priority is {:?}", s.priority));
        }
    }
    if s.sim_config.weights != s.weights {
        out.push("sim_config.weights differ from scenario weights".into());
    }
    if let Err(e) = s.sim_config.validate() {
        out.push(e.to_string());
    }
    out.extend(s.predicted_graph.structural_problems());
    if s.backend_id.trim().is_empty() {
        out.push("empty backend_id".into());
    }
    out
}
