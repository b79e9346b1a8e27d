use std::fmt;

use serde::{Deserialize, Serialize};

use super::KpiError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum KpiId {
    #[serde(rename = "rho")]
    DeviceDensity,
    #[serde(rename = "d")]
    PacketDeadline,
    #[serde(rename = "l")]
    Latency,
    #[serde(rename = "alpha")]
    BufferSize,
}

impl KpiId {
    pub const ALL: [KpiId; 4] = [KpiId::DeviceDensity, KpiId::PacketDeadline, KpiId::Latency, KpiId::BufferSize];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn key(self) -> &'static str {
        ["rho", "d", "l", "alpha"][self.index()]
    }
}

/// Normalised KPI values, each in [0, 1].
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct KpiVector {
    pub rho: f64,
    pub d: f64,
    pub l: f64,
    pub alpha: f64,
}

impl KpiVector {
    pub fn new(rho: f64, d: f64, l: f64, alpha: f64) -> Self {
        KpiVector { rho, d, l, alpha }
    }

    pub fn from_array(a: [f64; 4]) -> Self {
        KpiVector { rho: a[0], d: a[1], l: a[2], alpha: a[3] }
    }

    pub fn to_array(self) -> [f64; 4] {
        [self.rho, self.d, self.l, self.alpha]
    }

    pub fn get(&self, id: KpiId) -> f64 {
        self.to_array()[id.index()]
    }

    pub fn check(&self) -> Result<(), KpiError> {
        for v in self.to_array() {
            if !(0.0..=1.0).contains(&v) {
                return Err(KpiError::KpiOutOfRange(v));
            }
        }
        Ok(())
    }
}

/// The prioritised KPI pair picked by the priority cases.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum PriorityPair {
    /// (ρ, d): dense deployments.
    DensityDeadline,
    /// (l, d): latency-critical services.
    LatencyDeadline,
    /// (ρ, α): accuracy-critical services.
    DensityBuffer,
}

impl PriorityPair {
    pub fn kpis(self) -> [KpiId; 2] {
        match self {
            PriorityPair::DensityDeadline => [KpiId::DeviceDensity, KpiId::PacketDeadline],
            PriorityPair::LatencyDeadline => [KpiId::Latency, KpiId::PacketDeadline],
            PriorityPair::DensityBuffer => [KpiId::DeviceDensity, KpiId::BufferSize],
        }
    }

    pub fn contains(self, id: KpiId) -> bool {
        self.kpis().contains(&id)
    }
}

impl fmt::Display for PriorityPair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let [a, b] = self.kpis();
        write!(f, "({},{})", a.key(), b.key())
    }
}

/// KPI weights. Serialises as a flat object with keys rho, d, l, alpha and
/// an optional `prioritized` pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeightVector {
    pub rho: f64,
    pub d: f64,
    pub l: f64,
    pub alpha: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub prioritized: Option<PriorityPair>,
}

impl WeightVector {
    pub const SUM_TOLERANCE: f64 = 1e-9;

    pub fn new(w: [f64; 4], prioritized: Option<PriorityPair>) -> Self {
        WeightVector { rho: w[0], d: w[1], l: w[2], alpha: w[3], prioritized }
    }

    pub fn uniform() -> Self {
        Self::new([0.25; 4], None)
    }

    pub fn to_array(self) -> [f64; 4] {
        [self.rho, self.d, self.l, self.alpha]
    }

    pub fn get(&self, id: KpiId) -> f64 {
        self.to_array()[id.index()]
    }

    /// Every broken invariant, as short labelled messages. `w_min` is the
    /// per-weight floor (strictly positive weights are always required).
    pub fn violations(&self, w_min: f64) -> Vec<String> {
        let w = self.to_array();
        let mut out = Vec::new();
        let sum: f64 = w.iter().sum();
        if !sum.is_finite() || (sum - 1.0).abs() > Self::SUM_TOLERANCE {
            out.push(format!("weight sum: sum={}", round_for_display(sum)));
        }
        for id in KpiId::ALL {
            let v = w[id.index()];
            if !(v > 0.0) {
                out.push(format!("weight floor: w_{} = {} is not positive", id.key(), v));
            } else if v < w_min - 1e-12 {
                out.push(format!("weight floor: w_{} = {} below {}", id.key(), v, w_min));
            }
        }
        if let Some(pair) = self.prioritized {
            let [a, b] = pair.kpis();
            let low_prio = w[a.index()].min(w[b.index()]);
            let high_other = KpiId::ALL
                .iter()
                .filter(|k| !pair.contains(**k))
                .map(|k| w[k.index()])
                .fold(f64::NEG_INFINITY, f64::max);
            if !(low_prio > high_other) {
                out.push("dominance broken".to_string());
            }
        }
        out
    }
}

fn round_for_display(x: f64) -> f64 {
    (x * 1e9).round() / 1e9
}

/// Raw network measurements feeding KPI normalisation and priority selection.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RawMeasurements {
    /// Devices per area unit.
    pub device_density: f64,
    pub served_devices: u64,
    pub total_devices: u64,
    pub deadline_hits: u64,
    pub deadline_total: u64,
    pub mean_latency_ms: f64,
    /// Latency at which the latency KPI reaches zero.
    pub latency_budget_ms: f64,
    /// Mean buffer occupancy in [0, 1].
    pub mean_buffer_occupancy: f64,
    /// Twin accuracy in [0, 1].
    pub accuracy: f64,
}

impl RawMeasurements {
    pub fn check(&self) -> Result<(), KpiError> {
        let bad = |m: String| Err(KpiError::InvalidMeasurement(m));
        if !(self.device_density >= 0.0) {
            return bad(format!("device_density {}", self.device_density));
        }
        if self.served_devices > self.total_devices {
            return bad("served_devices > total_devices".into());
        }
        if self.deadline_hits > self.deadline_total {
            return bad("deadline_hits > deadline_total".into());
        }
        if !(self.mean_latency_ms >= 0.0) {
            return bad(format!("mean_latency_ms {}", self.mean_latency_ms));
        }
        if !(self.latency_budget_ms > 0.0) {
            return bad(format!("latency_budget_ms {}", self.latency_budget_ms));
        }
        if !(0.0..=1.0).contains(&self.mean_buffer_occupancy) {
            return bad(format!("mean_buffer_occupancy {}", self.mean_buffer_occupancy));
        }
        if !(0.0..=1.0).contains(&self.accuracy) {
            return bad(format!("accuracy {}", self.accuracy));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Thresholds {
    /// Device density threshold (devices per area unit).
    pub d_th: f64,
    /// Latency threshold in ms.
    pub l_th: f64,
    /// Accuracy threshold.
    pub a_th: f64,
}

impl Default for Thresholds {
    fn default() -> Self {
        Thresholds { d_th: 50.0, l_th: 0.9, a_th: 0.97 }
    }
}

impl Thresholds {
    /// Latency budget used when none is measured: ten times `l_th`.
    pub fn default_latency_budget_ms(&self) -> f64 {
        10.0 * self.l_th
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WeightMode {
    Split,
    Optimize,
    Random,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct OptimizerParams {
    pub w_min: f64,
    pub w_pmin: f64,
    pub priority_share: f64,
}

impl Default for OptimizerParams {
    fn default() -> Self {
        OptimizerParams { w_min: 0.05, w_pmin: 0.10, priority_share: 0.7 }
    }
}

pub fn normalize_kpis(raw: &RawMeasurements) -> Result<KpiVector, KpiError> {
    raw.check()?;
    if raw.total_devices == 0 {
        return Err(KpiError::EmptyDenominator("total_devices"));
    }
    if raw.deadline_total == 0 {
        return Err(KpiError::EmptyDenominator("deadline_total"));
    }
    Ok(KpiVector {
        rho: raw.served_devices as f64 / raw.total_devices as f64,
        d: raw.deadline_hits as f64 / raw.deadline_total as f64,
        l: (1.0 - raw.mean_latency_ms / raw.latency_budget_ms).clamp(0.0, 1.0),
        alpha: 1.0 - raw.mean_buffer_occupancy,
    })
}

/// Priority cases, first match wins: density, then latency, then accuracy.
pub fn select_priority(raw: &RawMeasurements, th: &Thresholds) -> Option<PriorityPair> {
    if raw.device_density > th.d_th {
        Some(PriorityPair::DensityDeadline)
    } else if raw.mean_latency_ms < th.l_th {
        Some(PriorityPair::LatencyDeadline)
    } else if raw.accuracy > th.a_th {
        Some(PriorityPair::DensityBuffer)
    } else {
        None
    }
}

/// Weighted KPI sum. Both arguments must satisfy their invariants.
pub fn objective(w: &WeightVector, t: &KpiVector) -> Result<f64, KpiError> {
    let v = w.violations(0.0);
    if !v.is_empty() {
        return Err(KpiError::InvariantViolation(v));
    }
    t.check()?;
    Ok(w.to_array().iter().zip(t.to_array()).map(|(a, b)| a * b).sum())
}
