use std::io::Write;

use serde::{Deserialize, Serialize};

use super::config::SimConfig;
use super::engine::SimMetrics;
use super::SimError;
use crate::kpi::RawMeasurements;

/// Coefficient of variation (population std over mean) of a series.
pub fn stability(series: &[f64]) -> Result<f64, SimError> {
    if series.is_empty() {
        return Err(SimError::EmptySeries);
    }
    let n = series.len() as f64;
    let mean = series.iter().sum::<f64>() / n;
    if mean == 0.0 {
        return Err(SimError::ZeroMean);
    }
    let var = series.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
    Ok(var.sqrt() / mean)
}

/// Maps simulator output onto the raw KPI measurements.
///
/// Density is sensors per area unit, latency converts slots to ms and
/// coverage counts distinct uplink sensors with at least one delivery.
pub fn extract_raw_measurements(
    m: &SimMetrics,
    cfg: &SimConfig,
    accuracy: f64,
    latency_budget_ms: f64,
) -> RawMeasurements {
    RawMeasurements {
        device_density: cfg.n_sensors as f64 / cfg.area_units,
        served_devices: m.sensors_served,
        total_devices: m.sensors_requesting,
        deadline_hits: m.deadline_hits(),
        deadline_total: m.deadline_total(),
        mean_latency_ms: m.mean_latency_slots() * cfg.slot_ms,
        latency_budget_ms,
        mean_buffer_occupancy: m.mean_buffer_occupancy().clamp(0.0, 1.0),
        accuracy: accuracy.clamp(0.0, 1.0),
    }
}

/// Per-run summary written next to the slot CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimSummary {
    pub seed: u64,
    pub generated: u64,
    pub delivered: u64,
    pub dropped: u64,
    pub hit_rate: f64,
    pub mean_throughput: f64,
    /// `None` when nothing was delivered.
    pub throughput_cov: Option<f64>,
    pub mean_latency_ms: f64,
    pub mean_buffer_occupancy: f64,
}

impl SimSummary {
    pub fn new(m: &SimMetrics, cfg: &SimConfig) -> Self {
        let series: Vec<f64> = m.throughput_series.iter().map(|&x| x as f64).collect();
        SimSummary {
            seed: cfg.seed,
            generated: m.generated,
            delivered: m.delivered,
            dropped: m.dropped(),
            hit_rate: m.hit_rate(),
            mean_throughput: series.iter().sum::<f64>() / series.len().max(1) as f64,
            throughput_cov: stability(&series).ok(),
            mean_latency_ms: m.mean_latency_slots() * cfg.slot_ms,
            mean_buffer_occupancy: m.mean_buffer_occupancy(),
        }
    }
}

/// Writes `slot,delivered,queue_occupancy` rows.
pub fn write_series_csv<W: Write>(m: &SimMetrics, out: &mut W) -> Result<(), SimError> {
    writeln!(out, "slot,delivered,queue_occupancy")?;
    for (t, (d, q)) in m.throughput_series.iter().zip(&m.occupancy_series).enumerate() {
        writeln!(out, "{t},{d},{q:.6}")?;
    }
    Ok(())
}
