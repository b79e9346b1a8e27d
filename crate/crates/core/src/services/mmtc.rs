use serde::{Deserialize, Serialize};

use super::report::{ServiceReport, Table};
use super::ServiceError;
use crate::kpi::normalize_kpis;
use crate::scenario::{generate, network_graph, observe_network, ScenarioBackend, ScenarioSpec, ServiceKind};
use crate::sim::{build_topology, extract_raw_measurements, run_sim, stability, SimConfig};
use crate::twin::{HistoryStore, TwinGraph};

/// Uplink fractions swept by the mMTC service.
pub const UL_SWEEP: [f64; 3] = [0.20, 0.45, 0.70];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MmtcPoint {
    pub ul_fraction: f64,
    pub generated: u64,
    pub delivered: u64,
    pub hit_rate: f64,
    /// Share of uplink sensors with at least one delivery.
    pub coverage: f64,
    pub mean_throughput: f64,
    pub throughput_cov: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MmtcResult {
    pub seed: u64,
    pub backend_id: String,
    pub points: Vec<MmtcPoint>,
}

/// Twin graph and two-snapshot history of the deployed network: the empty
/// graph, then the graph after observing one run of `deployed`.
pub fn prepare_network(deployed: &SimConfig) -> Result<(HistoryStore, TwinGraph), ServiceError> {
    let mut g = network_graph(deployed, 0)?;
    let mut h = HistoryStore::default();
    g.timestamp = 1;
    h.snapshot(&g)?;
    observe_network(&mut g, deployed)?;
    h.snapshot(&g)?;
    Ok((h, g))
}

pub fn run_mmtc(spec: &ScenarioSpec, seed: u64, backend: &dyn ScenarioBackend) -> Result<MmtcResult, ServiceError> {
    let spec = ScenarioSpec { seed, ..spec.clone() };
    let deployed = build_topology(spec.size_class, &spec.sim, seed)?;
    let (history, realtime) = prepare_network(&deployed)?;
    let window = history.window(history.len())?;
    let scenario = generate(&spec, &window, &realtime, backend)?;
    let mut points = Vec::with_capacity(UL_SWEEP.len());
    for ul in UL_SWEEP {
        let cfg = SimConfig { ul_fraction: ul, seed, ..scenario.sim_config.clone() };
        let m = run_sim(&cfg)?;
        let series: Vec<f64> = m.throughput_series.iter().map(|&x| x as f64).collect();
        let raw = extract_raw_measurements(&m, &cfg, 0.0, spec.thresholds.default_latency_budget_ms());
        let coverage = normalize_kpis(&raw).map(|k| k.rho).unwrap_or(0.0);
        points.push(MmtcPoint {
            ul_fraction: ul,
            generated: m.generated,
            delivered: m.delivered,
            hit_rate: m.hit_rate(),
            coverage,
            mean_throughput: series.iter().sum::<f64>() / series.len() as f64,
            throughput_cov: stability(&series).ok(),
        });
    }
    Ok(MmtcResult { seed, backend_id: scenario.backend_id, points })
}

impl MmtcResult {
    pub fn report(&self) -> ServiceReport {
        let mut r = ServiceReport::new(ServiceKind::Mmtc, "mMTC uplink sweep", self.seed);
        for p in &self.points {
            r.metrics.insert(format!("hit_rate@{:.2}", p.ul_fraction), p.hit_rate);
            r.metrics.insert(format!("coverage@{:.2}", p.ul_fraction), p.coverage);
        }
        r.flags.push(format!("backend={}", self.backend_id));
        r.table = Some(Table {
            columns: ["ul_fraction", "generated", "delivered", "hit_rate", "coverage", "throughput_cov"]
                .map(String::from)
                .to_vec(),
            rows: self
                .points
                .iter()
                .map(|p| {
                    vec![
                        format!("{:.2}", p.ul_fraction),
                        p.generated.to_string(),
                        p.delivered.to_string(),
                        format!("{:.4}", p.hit_rate),
                        format!("{:.4}", p.coverage),
                        p.throughput_cov.map_or("n/a".into(), |c| format!("{c:.4}")),
                    ]
                })
                .collect(),
        });
        r
    }
}
