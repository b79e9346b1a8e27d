use super::types::{KpiId, KpiVector, PriorityPair, WeightVector};
use super::KpiError;

/// Weights are solved on a lattice of this resolution.
pub const LATTICE_STEP: f64 = 0.01;

const UNITS: i64 = 100;

/// Maximises the weighted KPI sum over the constrained simplex: sum 1,
/// non-prioritised weights at least `w_min`, prioritised weights at least
/// `w_pmin`, and every prioritised weight strictly above every other one.
///
/// Weights live on a 0.01 lattice. When the prioritised KPIs have the two
/// largest values the optimum puts the other two at `w_min`, the weaker
/// prioritised one at `w_pmin` and the rest on the stronger one (split
/// evenly on a tie). Otherwise a strong non-prioritised KPI is raised as far
/// as dominance allows.
///
/// The search fixes `m`, the largest non-prioritised weight, which turns the
/// problem into a box-bounded fractional knapsack that a greedy fill solves
/// exactly; the best `m` wins.
pub fn solve_max_weights(t: &KpiVector, pair: PriorityPair, w_min: f64, w_pmin: f64) -> Result<WeightVector, KpiError> {
    let infeasible = KpiError::InfeasibleFloors { w_min, w_pmin };
    if !(w_min > 0.0 && w_pmin > w_min && 2.0 * w_min + 2.0 * w_pmin < 1.0) {
        return Err(infeasible);
    }
    t.check()?;
    let a = to_units(w_min);
    let b = to_units(w_pmin);
    if 2 * a + 2 * b > UNITS {
        return Err(infeasible);
    }
    let values = t.to_array();
    let prio = |i: usize| pair.contains(KpiId::ALL[i]);

    // variables sorted by value, descending; canonical order breaks ties
    let mut order: Vec<usize> = (0..4).collect();
    order.sort_by(|&x, &y| values[y].total_cmp(&values[x]).then(x.cmp(&y)));

    let mut best: Option<([i64; 4], f64)> = None;
    for m in a..=UNITS {
        let p_lo = b.max(m + 1);
        let lo: [i64; 4] = std::array::from_fn(|i| if prio(i) { p_lo } else { a });
        let hi: [i64; 4] = std::array::from_fn(|i| if prio(i) { UNITS } else { m });
        let base: i64 = lo.iter().sum();
        if base > UNITS {
            break;
        }
        let w = greedy_fill(&values, &order, lo, hi, UNITS - base);
        let obj: f64 = (0..4).map(|i| w[i] as f64 * values[i]).sum();
        if best.is_none_or(|(_, o)| obj > o + 1e-15) {
            best = Some((w, obj));
        }
    }
    let (w, _) = best.ok_or(infeasible)?;
    Ok(WeightVector::new(w.map(|u| u as f64 / UNITS as f64), Some(pair)))
}

fn to_units(w: f64) -> i64 {
    (w * UNITS as f64 - 1e-9).ceil() as i64
}

/// Hands out `rest` units, best value first. Values equal within 1e-12 form
/// a group that receives units round-robin.
fn greedy_fill(values: &[f64; 4], order: &[usize], mut w: [i64; 4], hi: [i64; 4], mut rest: i64) -> [i64; 4] {
    let mut g = 0;
    while rest > 0 && g < order.len() {
        let mut end = g + 1;
        while end < order.len() && (values[order[g]] - values[order[end]]).abs() <= 1e-12 {
            end += 1;
        }
        let mut group: Vec<usize> = order[g..end].to_vec();
        group.sort_unstable();
        loop {
            let mut gave = false;
            for &i in &group {
                if rest > 0 && w[i] < hi[i] {
                    w[i] += 1;
                    rest -= 1;
                    gave = true;
                }
            }
            if !gave || rest == 0 {
                break;
            }
        }
        g = end;
    }
    w
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kpi::objective;

    fn close(a: [f64; 4], b: [f64; 4]) -> bool {
        a.iter().zip(b).all(|(x, y)| (x - y).abs() < 1e-12)
    }

    #[test]
    fn prioritised_kpis_on_top() {
        let t = KpiVector::new(0.9, 0.8, 0.5, 0.6);
        let w = solve_max_weights(&t, PriorityPair::DensityDeadline, 0.05, 0.10).unwrap();
        assert!(close(w.to_array(), [0.80, 0.10, 0.05, 0.05]), "{w:?}");
        assert!((objective(&w, &t).unwrap() - 0.855).abs() < 1e-12);
    }

    #[test]
    fn tie_splits_leftover() {
        let t = KpiVector::new(0.8, 0.8, 0.5, 0.6);
        let w = solve_max_weights(&t, PriorityPair::DensityDeadline, 0.05, 0.10).unwrap();
        assert!(close(w.to_array(), [0.45, 0.45, 0.05, 0.05]), "{w:?}");
    }

    #[test]
    fn strong_unprioritised_kpi_rises_under_dominance() {
        let t = KpiVector::new(0.1, 0.1, 1.0, 0.1);
        let w = solve_max_weights(&t, PriorityPair::DensityDeadline, 0.05, 0.10).unwrap();
        assert!(w.violations(0.05).is_empty(), "{w:?}");
        assert!(w.l > 0.25, "{w:?}");
        let o = objective(&w, &t).unwrap();
        // (0.32, 0.32, 0.31, 0.05) beats leaving latency on its floor
        assert!((o - 0.379).abs() < 1e-9, "{o}");
    }

    #[test]
    fn infeasible_floors() {
        let t = KpiVector::new(0.5, 0.5, 0.5, 0.5);
        for (a, b) in [(0.3, 0.3), (0.1, 0.05), (0.0, 0.1), (0.2, 0.31)] {
            assert!(matches!(
                solve_max_weights(&t, PriorityPair::LatencyDeadline, a, b),
                Err(KpiError::InfeasibleFloors { .. })
            ));
        }
    }
}
