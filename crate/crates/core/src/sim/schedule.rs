use serde::{Deserialize, Serialize};

use crate::kpi::WeightVector;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Packet {
    pub src: usize,
    pub created_at: u32,
    /// Last slot in which the packet may still be served.
    pub deadline: u32,
    pub size_bits: u32,
}

/// Orders `queue` for service at slot `now`, best first, by the weighted
/// per-packet score
///
/// `w_d / (1 + slack) + w_rho * [src never served] + w_l * age + w_alpha * size / payload_limit`
///
/// where `age` is the elapsed share of the packet's deadline window. Ties
/// break on `(created_at, src)`.
pub fn weighted_schedule(
    queue: &[Packet],
    w: &WeightVector,
    now: u32,
    served_before: &[bool],
    payload_limit_bits: u32,
) -> Vec<usize> {
    let scores: Vec<f64> = queue
        .iter()
        .map(|p| {
            let slack = p.deadline.saturating_sub(now) as f64;
            let urgency = 1.0 / (1.0 + slack);
            let fairness = if served_before.get(p.src).copied().unwrap_or(false) { 0.0 } else { 1.0 };
            let window = p.deadline.saturating_sub(p.created_at).max(1) as f64;
            let age = (now.saturating_sub(p.created_at) as f64 / window).min(1.0);
            let relief = p.size_bits as f64 / payload_limit_bits as f64;
            w.d * urgency + w.rho * fairness + w.l * age + w.alpha * relief
        })
        .collect();
    let mut order: Vec<usize> = (0..queue.len()).collect();
    order.sort_by(|&a, &b| {
        scores[b]
            .total_cmp(&scores[a])
            .then(queue[a].created_at.cmp(&queue[b].created_at))
            .then(queue[a].src.cmp(&queue[b].src))
    });
    order
}
