use rand::Rng;
use rand_distr::Exp1;

use super::solver::solve_max_weights;
use super::types::{KpiVector, OptimizerParams, PriorityPair, WeightMode, WeightVector};
use super::KpiError;
use crate::rng::{seeded, stream};

/// Uniform random point on the simplex with every weight at least `w_min`.
pub fn random_weights(seed: u64, w_min: f64) -> Result<WeightVector, KpiError> {
    if !(w_min >= 0.0 && 4.0 * w_min < 1.0) {
        return Err(KpiError::InfeasibleFloors { w_min, w_pmin: w_min });
    }
    let mut rng = seeded(seed, stream::WEIGHTS);
    let e: [f64; 4] = std::array::from_fn(|_| rng.sample::<f64, _>(Exp1) + f64::MIN_POSITIVE);
    let total: f64 = e.iter().sum();
    let free = 1.0 - 4.0 * w_min;
    let mut w = e.map(|x| w_min + free * x / total);
    // absorb rounding in the largest component so the sum is 1 to the ulp
    let drift: f64 = 1.0 - w.iter().sum::<f64>();
    let max_i = (0..4).max_by(|&a, &b| w[a].total_cmp(&w[b])).unwrap_or(0);
    w[max_i] += drift;
    Ok(WeightVector::new(w, None))
}

/// Splits `share` equally over the prioritised pair and the remainder over
/// the other two KPIs.
pub fn split_weights(pair: PriorityPair, share: f64, w_min: f64) -> Result<WeightVector, KpiError> {
    let max_share = 1.0 - 2.0 * w_min;
    if !(share > 0.5 && share <= max_share + 1e-12 && share < 1.0) {
        return Err(KpiError::InvalidShare(share, max_share.min(1.0)));
    }
    let mut w = [(1.0 - share) / 2.0; 4];
    for k in pair.kpis() {
        w[k.index()] = share / 2.0;
    }
    Ok(WeightVector::new(w, Some(pair)))
}

/// Weights for one scenario. Without a priority pair, or in random mode,
/// a seeded random point is drawn.
pub fn assign_weights(
    pair: Option<PriorityPair>,
    mode: WeightMode,
    kpis: &KpiVector,
    seed: u64,
    params: &OptimizerParams,
) -> Result<WeightVector, KpiError> {
    match (pair, mode) {
        (None, _) | (_, WeightMode::Random) => random_weights(seed, params.w_min),
        (Some(p), WeightMode::Split) => split_weights(p, params.priority_share, params.w_min),
        (Some(p), WeightMode::Optimize) => solve_max_weights(kpis, p, params.w_min, params.w_pmin),
    }
}
