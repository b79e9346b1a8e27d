use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::config::SimConfig;
use super::schedule::{weighted_schedule, Packet};
use super::SimError;
use crate::rng::{seeded, stream};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimMetrics {
    /// Packets delivered per slot, all gateways.
    pub throughput_series: Vec<u32>,
    /// Queued packets over total buffer space, sampled at the end of each slot.
    pub occupancy_series: Vec<f64>,
    pub generated: u64,
    pub delivered: u64,
    /// Arrivals rejected by a full buffer.
    pub dropped_overflow: u64,
    /// Packets whose deadline passed while queued.
    pub dropped_expired: u64,
    /// Packets still queued when the run ended.
    pub dropped_horizon: u64,
    /// Delivery latency in slots, one sample per delivered packet.
    pub latency_samples: Vec<u32>,
    pub sensors_requesting: u64,
    pub sensors_served: u64,
    /// Largest queue length seen at any gateway.
    pub max_queue_len: usize,
    /// Largest number of packets one gateway served in one slot.
    pub max_served_per_slot: usize,
    pub per_gateway: Vec<GatewayStats>,
    /// Deliveries per sensor id.
    pub sensor_delivered: Vec<u32>,
    /// Whether each sensor carries uplink traffic.
    pub sensor_uplink: Vec<bool>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct GatewayStats {
    pub generated: u64,
    pub delivered: u64,
    pub latency_slots_sum: u64,
    /// Mean of queue length over buffer capacity across slots.
    pub mean_occupancy: f64,
}

impl SimMetrics {
    pub fn dropped(&self) -> u64 {
        self.dropped_overflow + self.dropped_expired + self.dropped_horizon
    }

    /// Every delivery happens no later than its deadline.
    pub fn deadline_hits(&self) -> u64 {
        self.delivered
    }

    pub fn deadline_total(&self) -> u64 {
        self.generated
    }

    pub fn hit_rate(&self) -> f64 {
        if self.generated == 0 {
            0.0
        } else {
            self.delivered as f64 / self.generated as f64
        }
    }

    pub fn mean_buffer_occupancy(&self) -> f64 {
        if self.occupancy_series.is_empty() {
            0.0
        } else {
            self.occupancy_series.iter().sum::<f64>() / self.occupancy_series.len() as f64
        }
    }

    pub fn mean_latency_slots(&self) -> f64 {
        if self.latency_samples.is_empty() {
            0.0
        } else {
            self.latency_samples.iter().map(|&x| x as f64).sum::<f64>() / self.latency_samples.len() as f64
        }
    }
}

/// Runs one seeded simulation. Identical configs give identical metrics.
pub fn run_sim(cfg: &SimConfig) -> Result<SimMetrics, SimError> {
    cfg.validate()?;
    let n = cfg.n_sensors;
    let active = uplink_sensors(cfg);
    let mut sensor_rngs: Vec<_> = active.iter().map(|&s| seeded(cfg.seed, stream::SENSOR_BASE + s as u64)).collect();

    let mut queues: Vec<Vec<Packet>> = vec![Vec::with_capacity(cfg.buffer_capacity); cfg.n_gateways];
    let mut served = vec![false; n];
    let slots = cfg.duration_slots as usize;
    let mut m = SimMetrics {
        throughput_series: vec![0; slots],
        occupancy_series: Vec::with_capacity(slots),
        generated: 0,
        delivered: 0,
        dropped_overflow: 0,
        dropped_expired: 0,
        dropped_horizon: 0,
        latency_samples: Vec::new(),
        sensors_requesting: active.len() as u64,
        sensors_served: 0,
        max_queue_len: 0,
        max_served_per_slot: 0,
        per_gateway: vec![GatewayStats::default(); cfg.n_gateways],
        sensor_delivered: vec![0; n],
        sensor_uplink: (0..n).map(|s| active.binary_search(&s).is_ok()).collect(),
    };
    let buffer_total = (cfg.buffer_capacity * cfg.n_gateways) as f64;

    for t in 0..cfg.duration_slots {
        for (k, &s) in active.iter().enumerate() {
            let rng = &mut sensor_rngs[k];
            let arrives = t == 0 || (cfg.rearrival_prob > 0.0 && rng.random_bool(cfg.rearrival_prob));
            if !arrives {
                continue;
            }
            let size_bits = rng.random_range(1..=cfg.payload_limit_bits);
            m.generated += 1;
            let g = cfg.gateway_of(s);
            m.per_gateway[g].generated += 1;
            let q = &mut queues[g];
            if q.len() >= cfg.buffer_capacity {
                m.dropped_overflow += 1;
            } else {
                q.push(Packet { src: s, created_at: t, deadline: t + cfg.deadline_slots, size_bits });
            }
        }

        for (g, q) in queues.iter_mut().enumerate() {
            m.max_queue_len = m.max_queue_len.max(q.len());
            let take = cfg.gateway_capacity.min(q.len());
            if take == 0 {
                continue;
            }
            let order = weighted_schedule(q, &cfg.weights, t, &served, cfg.payload_limit_bits);
            let mut chosen: Vec<usize> = order[..take].to_vec();
            for &i in &chosen {
                let p = q[i];
                m.latency_samples.push(t - p.created_at);
                m.per_gateway[g].latency_slots_sum += (t - p.created_at) as u64;
                m.sensor_delivered[p.src] += 1;
                served[p.src] = true;
            }
            m.per_gateway[g].delivered += take as u64;
            m.delivered += take as u64;
            m.throughput_series[t as usize] += take as u32;
            m.max_served_per_slot = m.max_served_per_slot.max(take);
            chosen.sort_unstable_by(|a, b| b.cmp(a));
            for i in chosen {
                q.remove(i);
            }
        }

        let mut queued = 0usize;
        for (g, q) in queues.iter_mut().enumerate() {
            let before = q.len();
            q.retain(|p| p.deadline > t);
            m.dropped_expired += (before - q.len()) as u64;
            queued += q.len();
            m.per_gateway[g].mean_occupancy += q.len() as f64 / cfg.buffer_capacity as f64;
        }
        m.occupancy_series.push(queued as f64 / buffer_total);
    }

    for g in m.per_gateway.iter_mut() {
        g.mean_occupancy /= slots as f64;
    }
    m.dropped_horizon = queues.iter().map(|q| q.len() as u64).sum();
    m.sensors_served = served.iter().filter(|&&b| b).count() as u64;
    debug_assert_eq!(m.generated, m.delivered + m.dropped());
    Ok(m)
}

/// Seeded uplink subset of `round(ul_fraction * n)` sensors, ascending ids.
/// Subsets for increasing fractions are nested under the same seed.
fn uplink_sensors(cfg: &SimConfig) -> Vec<usize> {
    let k = (cfg.ul_fraction * cfg.n_sensors as f64).round() as usize;
    let mut ids: Vec<usize> = (0..cfg.n_sensors).collect();
    ids.shuffle(&mut seeded(cfg.seed, stream::UL_SELECTION));
    let mut active = ids[..k.min(cfg.n_sensors)].to_vec();
    active.sort_unstable();
    active
}
