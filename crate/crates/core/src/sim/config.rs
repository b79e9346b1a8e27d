use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::SimError;
use crate::kpi::WeightVector;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SizeClass {
    Small,
    Medium,
    Large,
}

impl SizeClass {
    pub const ALL: [SizeClass; 3] = [SizeClass::Small, SizeClass::Medium, SizeClass::Large];

    /// (sensors, gateways)
    pub fn dims(self) -> (usize, usize) {
        match self {
            SizeClass::Small => (50, 2),
            SizeClass::Medium => (250, 8),
            SizeClass::Large => (1000, 20),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            SizeClass::Small => "small",
            SizeClass::Medium => "medium",
            SizeClass::Large => "large",
        }
    }
}

impl fmt::Display for SizeClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SizeClass {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "small" => Ok(SizeClass::Small),
            "medium" => Ok(SizeClass::Medium),
            "large" => Ok(SizeClass::Large),
            other => Err(format!("unknown size class `{other}`")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub n_sensors: usize,
    pub n_gateways: usize,
    /// Fraction of sensors with uplink traffic.
    pub ul_fraction: f64,
    pub payload_limit_bits: u32,
    /// Packets served per gateway per slot.
    pub gateway_capacity: usize,
    /// Queue slots per gateway.
    pub buffer_capacity: usize,
    pub deadline_slots: u32,
    pub duration_slots: u32,
    pub seed: u64,
    pub weights: WeightVector,
    /// Per-slot probability that an uplink sensor sends again after slot 0.
    /// Zero gives one-shot traffic.
    pub rearrival_prob: f64,
    pub slot_ms: f64,
    /// Deployment area; device density is sensors per area unit.
    pub area_units: f64,
}

impl SimConfig {
    pub fn validate(&self) -> Result<(), SimError> {
        let bad = |m: String| Err(SimError::InvalidConfig(m));
        if self.n_sensors == 0 {
            return bad("n_sensors must be positive".into());
        }
        if self.n_gateways == 0 {
            return bad("n_gateways must be positive".into());
        }
        if !(0.0..=1.0).contains(&self.ul_fraction) {
            return bad(format!("ul_fraction {} outside [0, 1]", self.ul_fraction));
        }
        if self.payload_limit_bits == 0 {
            return bad("payload_limit_bits must be positive".into());
        }
        if self.gateway_capacity == 0 {
            return bad("gateway_capacity must be positive".into());
        }
        if self.buffer_capacity == 0 {
            return bad("buffer_capacity must be positive".into());
        }
        if self.deadline_slots == 0 {
            return bad("deadline_slots must be positive".into());
        }
        if self.duration_slots == 0 {
            return bad("duration_slots must be positive".into());
        }
        if !(0.0..=1.0).contains(&self.rearrival_prob) {
            return bad(format!("rearrival_prob {} outside [0, 1]", self.rearrival_prob));
        }
        if !(self.slot_ms > 0.0 && self.slot_ms.is_finite()) {
            return bad(format!("slot_ms {}", self.slot_ms));
        }
        if !(self.area_units > 0.0 && self.area_units.is_finite()) {
            return bad(format!("area_units {}", self.area_units));
        }
        let v = self.weights.violations(0.0);
        if !v.is_empty() {
            return bad(format!("weights: {}", v.join("; ")));
        }
        Ok(())
    }

    /// Gateway serving sensor `i`.
    pub fn gateway_of(&self, sensor: usize) -> usize {
        sensor % self.n_gateways
    }

    pub fn apply(&mut self, o: &SimOverrides) {
        macro_rules! set {
            ($($f:ident),*) => { $( if let Some(v) = o.$f { self.$f = v; } )* };
        }
        set!(
            n_sensors,
            n_gateways,
            ul_fraction,
            payload_limit_bits,
            gateway_capacity,
            buffer_capacity,
            deadline_slots,
            duration_slots,
            rearrival_prob,
            slot_ms,
            area_units
        );
    }
}

/// Optional per-field replacements for a topology preset.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimOverrides {
    pub n_sensors: Option<usize>,
    pub n_gateways: Option<usize>,
    pub ul_fraction: Option<f64>,
    pub payload_limit_bits: Option<u32>,
    pub gateway_capacity: Option<usize>,
    pub buffer_capacity: Option<usize>,
    pub deadline_slots: Option<u32>,
    pub duration_slots: Option<u32>,
    pub rearrival_prob: Option<f64>,
    pub slot_ms: Option<f64>,
    pub area_units: Option<f64>,
}

impl SimOverrides {
    /// Field-wise `self`, falling back to `base` where unset.
    pub fn or(&self, base: &SimOverrides) -> SimOverrides {
        macro_rules! pick {
            ($($f:ident),*) => { SimOverrides { $( $f: self.$f.or(base.$f), )* } };
        }
        pick!(
            n_sensors,
            n_gateways,
            ul_fraction,
            payload_limit_bits,
            gateway_capacity,
            buffer_capacity,
            deadline_slots,
            duration_slots,
            rearrival_prob,
            slot_ms,
            area_units
        )
    }
}

/// Preset topology for a size class with overrides applied. Weights start
/// uniform; scenario generation replaces them.
pub fn build_topology(size: SizeClass, overrides: &SimOverrides, seed: u64) -> Result<SimConfig, SimError> {
    let (n_sensors, n_gateways) = size.dims();
    let mut cfg = SimConfig {
        n_sensors,
        n_gateways,
        ul_fraction: 0.45,
        payload_limit_bits: 2000,
        gateway_capacity: 4,
        buffer_capacity: 16,
        deadline_slots: 10,
        duration_slots: 200,
        seed,
        weights: WeightVector::uniform(),
        rearrival_prob: 0.5,
        slot_ms: 0.1,
        area_units: 1.0,
    };
    cfg.apply(overrides);
    cfg.validate()?;
    Ok(cfg)
}
