//! Scenario-twin engine for IoT/6G network digital twins.
//!
//! The crate is organised around the three layers of a twin-managed network:
//!
//! - [`twin`]: the digital-twin data model, the live twin graph, telemetry
//!   routing, the historical snapshot store and the twin-accuracy metric.
//! - [`kpi`]: KPI normalisation, priority-case selection and the weight
//!   assignment / maximisation that differentiates scenarios.
//! - [`sim`]: a seeded, slotted discrete-event simulator of stationary
//!   sensors attached to gateways (the physical layer replica).
//! - [`scenario`]: scenario-twin generation through pluggable generative
//!   backends with validation and fallback.
//! - [`services`]: mMTC, TIC, right-time synchronisation and planned truck
//!   routing services evaluated on generated scenarios.
//! - [`harness`]: experiment orchestration, persisted artifacts and plots.

pub mod harness;
pub mod kpi;
pub mod rng;
pub mod scenario;
pub mod services;
pub mod sim;
pub mod twin;

pub use kpi::{KpiId, KpiVector, PriorityPair, RawMeasurements, Thresholds, WeightVector};
pub use scenario::{GeneratedScenario, ScenarioSpec, Strategy};
pub use sim::{SimConfig, SimMetrics, SizeClass};
pub use twin::{DigitalTwin, HistoryStore, TwinGraph, TwinModel};
