//! Slotted discrete-event simulator of sensors, gateways and queues.
//!
//! Each slot: arrivals are enqueued at the sensor's gateway (overflow is
//! dropped), every gateway serves up to its capacity in weighted-schedule
//! order, then packets that can no longer meet their deadline are dropped.
//! Packets still queued at the horizon count as dropped, so
//! `generated = delivered + dropped` always holds.

mod config;
mod engine;
mod measure;
mod schedule;

pub use config::{build_topology, SimConfig, SimOverrides, SizeClass};
pub use engine::{run_sim, GatewayStats, SimMetrics};
pub use measure::{extract_raw_measurements, stability, write_series_csv, SimSummary};
pub use schedule::{weighted_schedule, Packet};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SimError {
    #[error("invalid sim config: {0}")]
    InvalidConfig(String),
    #[error("empty series")]
    EmptySeries,
    #[error("series mean is zero")]
    ZeroMean,
    #[error("io: {0}")]
    Io(String),
}

impl From<std::io::Error> for SimError {
    fn from(e: std::io::Error) -> Self {
        SimError::Io(e.to_string())
    }
}
