//! KPI normalisation, priority selection and weight assignment.
//!
//! Four KPIs are tracked in the fixed order (ρ, d, l, α): device density
//! coverage, packet-deadline hit rate, latency headroom and free buffer.
//! The scenario objective is the weighted sum of their normalised values.

mod solver;
mod types;
mod weights;

pub use solver::{solve_max_weights, LATTICE_STEP};
pub use types::{
    normalize_kpis, objective, select_priority, KpiId, KpiVector, OptimizerParams, PriorityPair, RawMeasurements,
    Thresholds, WeightMode, WeightVector,
};
pub use weights::{assign_weights, random_weights, split_weights};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum KpiError {
    #[error("empty denominator: {0}")]
    EmptyDenominator(&'static str),
    #[error("invalid measurement: {0}")]
    InvalidMeasurement(String),
    #[error("priority share {0} must lie in (0.5, {1}]")]
    InvalidShare(f64, f64),
    #[error("weight invariants violated: {}", .0.join("; "))]
    InvariantViolation(Vec<String>),
    #[error("weight floors infeasible: w_min={w_min}, w_pmin={w_pmin}")]
    InfeasibleFloors { w_min: f64, w_pmin: f64 },
    #[error("kpi value {0} outside [0, 1]")]
    KpiOutOfRange(f64),
}
