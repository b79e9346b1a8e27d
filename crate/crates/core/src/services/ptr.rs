use rand::Rng;
use serde::{Deserialize, Serialize};

use super::capture::ServiceDataset;
use super::report::{ServiceReport, Table};
use super::ServiceError;
use crate::rng::{seeded, stream};
use crate::scenario::ServiceKind;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Bin {
    pub id: String,
    pub x: f64,
    pub y: f64,
    /// Current fill in [0, 1].
    pub fill_level: f64,
    /// Expected fill increase per planning period.
    pub fill_rate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PtrInstance {
    pub depot: (f64, f64),
    pub bins: Vec<Bin>,
    /// Bins per trip before returning to the depot.
    pub truck_capacity: usize,
}

/// Linear fill predictor `a * fill_level + b * fill_rate`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FillPredictor {
    pub a: f64,
    pub b: f64,
}

impl Default for FillPredictor {
    fn default() -> Self {
        FillPredictor { a: 1.0, b: 1.0 }
    }
}

impl FillPredictor {
    pub fn score(&self, bin: &Bin) -> f64 {
        self.a * bin.fill_level + self.b * bin.fill_rate
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PtrConfig {
    pub predictor: FillPredictor,
    /// Bins scoring at least this are collected.
    pub threshold: f64,
}

impl Default for PtrConfig {
    fn default() -> Self {
        PtrConfig { predictor: FillPredictor::default(), threshold: 0.8 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PtrResult {
    pub selected: Vec<usize>,
    /// Bin indices per trip; every trip starts and ends at the depot.
    pub trips: Vec<Vec<usize>>,
    pub route_length: f64,
    /// Unselected bins that overflow within the period.
    pub missed: Vec<usize>,
    pub missed_bin_rate: f64,
}

fn dist(a: (f64, f64), b: (f64, f64)) -> f64 {
    ((a.0 - b.0).powi(2) + (a.1 - b.1).powi(2)).sqrt()
}

impl PtrInstance {
    pub fn point(&self, i: usize) -> (f64, f64) {
        (self.bins[i].x, self.bins[i].y)
    }

    /// Bins and an optional depot from captured twins: `bin` twins need
    /// static `x`, `y`; a `depot` twin supplies the depot position.
    pub fn from_dataset(d: &ServiceDataset, truck_capacity: usize) -> Result<Self, ServiceError> {
        let mut depot = (0.0, 0.0);
        let mut bins = Vec::new();
        for t in &d.twins {
            let pos = (t.number("x"), t.number("y"));
            match (t.model_id.as_str(), pos) {
                ("depot", (Some(x), Some(y))) => depot = (x, y),
                ("bin", (Some(x), Some(y))) => bins.push(Bin {
                    id: t.twin_id.clone(),
                    x,
                    y,
                    fill_level: t.number("fill_level").unwrap_or(0.0),
                    fill_rate: t.number("fill_rate").unwrap_or(0.0),
                }),
                ("bin", _) => return Err(ServiceError::Invalid(format!("bin `{}` has no position", t.twin_id))),
                _ => {}
            }
        }
        Ok(PtrInstance { depot, bins, truck_capacity })
    }
}

/// Length of depot-to-depot trips over the given bins.
pub fn route_length(inst: &PtrInstance, trips: &[Vec<usize>]) -> f64 {
    let mut total = 0.0;
    for trip in trips {
        let mut at = inst.depot;
        for &i in trip {
            total += dist(at, inst.point(i));
            at = inst.point(i);
        }
        total += dist(at, inst.depot);
    }
    total
}

/// Selects bins by predicted fill and routes them greedily: from the depot
/// (or the last bin) always to the nearest unvisited selected bin, back to
/// the depot when the truck is full and at the end.
pub fn run_ptr(inst: &PtrInstance, cfg: &PtrConfig) -> Result<PtrResult, ServiceError> {
    if inst.truck_capacity == 0 {
        return Err(ServiceError::Invalid("truck_capacity must be positive".into()));
    }
    for b in &inst.bins {
        if !(b.x.is_finite() && b.y.is_finite() && b.fill_level.is_finite() && b.fill_rate.is_finite()) {
            return Err(ServiceError::Invalid(format!("bin `{}` has non-finite data", b.id)));
        }
    }
    let selected: Vec<usize> =
        (0..inst.bins.len()).filter(|&i| cfg.predictor.score(&inst.bins[i]) >= cfg.threshold).collect();
    let mut left = selected.clone();
    let mut trips = Vec::new();
    while !left.is_empty() {
        let mut trip = Vec::new();
        let mut at = inst.depot;
        while trip.len() < inst.truck_capacity && !left.is_empty() {
            let k = (0..left.len())
                .min_by(|&a, &b| {
                    dist(at, inst.point(left[a])).total_cmp(&dist(at, inst.point(left[b]))).then(left[a].cmp(&left[b]))
                })
                .expect("non-empty");
            let i = left.swap_remove(k);
            at = inst.point(i);
            trip.push(i);
        }
        trips.push(trip);
    }
    let route_length = route_length(inst, &trips);
    let unselected: Vec<usize> = (0..inst.bins.len()).filter(|i| !selected.contains(i)).collect();
    let missed: Vec<usize> =
        unselected.iter().copied().filter(|&i| inst.bins[i].fill_level + inst.bins[i].fill_rate > 1.0).collect();
    let missed_bin_rate = if unselected.is_empty() { 0.0 } else { missed.len() as f64 / unselected.len() as f64 };
    Ok(PtrResult { selected, trips, route_length, missed, missed_bin_rate })
}

/// Random instance: bins uniform in a `side` x `side` square, depot at the
/// origin, fill uniform in [0, 1), rate uniform in [0, 0.4).
pub fn random_instance(seed: u64, n_bins: usize, side: f64, truck_capacity: usize) -> PtrInstance {
    let mut rng = seeded(seed, stream::PTR_INSTANCE);
    let bins = (0..n_bins)
        .map(|i| Bin {
            id: format!("bin-{i:03}"),
            x: rng.random_range(0.0..side),
            y: rng.random_range(0.0..side),
            fill_level: rng.random_range(0.0..1.0),
            fill_rate: rng.random_range(0.0..0.4),
        })
        .collect();
    PtrInstance { depot: (0.0, 0.0), bins, truck_capacity }
}

impl PtrResult {
    pub fn report(&self, inst: &PtrInstance, seed: u64) -> ServiceReport {
        let mut r = ServiceReport::new(ServiceKind::Ptr, "planned truck routing", seed)
            .metric("bins", inst.bins.len() as f64)
            .metric("selected", self.selected.len() as f64)
            .metric("route_length", self.route_length)
            .metric("missed_bin_rate", self.missed_bin_rate);
        r.table = Some(Table {
            columns: vec!["trip".into(), "stops".into()],
            rows: self
                .trips
                .iter()
                .enumerate()
                .map(|(k, t)| {
                    let stops: Vec<&str> = t.iter().map(|&i| inst.bins[i].id.as_str()).collect();
                    vec![(k + 1).to_string(), format!("depot > {} > depot", stops.join(" > "))]
                })
                .collect(),
        });
        r
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bin(id: &str, x: f64, y: f64, fill: f64, rate: f64) -> Bin {
        Bin { id: id.into(), x, y, fill_level: fill, fill_rate: rate }
    }

    #[test]
    fn two_bins_on_a_line() {
        let inst = PtrInstance {
            depot: (0.0, 0.0),
            bins: vec![bin("a", 3.0, 0.0, 0.9, 0.1), bin("b", 1.0, 0.0, 0.9, 0.1)],
            truck_capacity: 10,
        };
        let r = run_ptr(&inst, &PtrConfig::default()).unwrap();
        assert_eq!(r.trips, vec![vec![1, 0]]);
        assert!((r.route_length - 6.0).abs() < 1e-12);
    }

    #[test]
    fn selection_and_missed_rate() {
        let inst = PtrInstance {
            depot: (0.0, 0.0),
            bins: vec![
                bin("full", 1.0, 1.0, 0.98, 0.1),
                bin("overflows", 2.0, 2.0, 0.7, 0.35),
                bin("fine", 3.0, 3.0, 0.1, 0.1),
            ],
            truck_capacity: 10,
        };
        let cfg = PtrConfig { threshold: 1.06, ..Default::default() };
        let r = run_ptr(&inst, &cfg).unwrap();
        assert_eq!(r.selected, vec![0]);
        assert_eq!(r.missed, vec![1]);
        assert_eq!(r.missed_bin_rate, 0.5);
    }

    #[test]
    fn capacity_splits_trips() {
        let inst = random_instance(3, 12, 10.0, 3);
        let cfg = PtrConfig { threshold: 0.0, ..Default::default() };
        let r = run_ptr(&inst, &cfg).unwrap();
        assert_eq!(r.trips.len(), 4);
        assert!(r.trips.iter().all(|t| t.len() <= 3));
        let mut seen: Vec<usize> = r.trips.concat();
        seen.sort_unstable();
        assert_eq!(seen, (0..12).collect::<Vec<_>>());
    }

    #[test]
    fn nothing_selected_means_empty_route() {
        let inst = random_instance(1, 5, 10.0, 4);
        let r = run_ptr(&inst, &PtrConfig { threshold: 10.0, ..Default::default() }).unwrap();
        assert!(r.trips.is_empty());
        assert_eq!(r.route_length, 0.0);
    }
}
