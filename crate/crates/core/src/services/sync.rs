use std::collections::BTreeMap;
use std::io::Write;

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::report::{ServiceReport, Table};
use super::ServiceError;
use crate::rng::{seeded, stream};
use crate::scenario::{predict_next_state, EvalTarget, ServiceKind, Strategy, SyncSettings, DEFAULT_DAMPING};
use crate::twin::{twin_accuracy, DigitalTwin, TwinGraph, Value};

/// Synthetic physical world for synchronisation experiments.
///
/// Twins were recorded around `base_level`. Then a topology change moves
/// every dynamic value to `base_level + shift + U(-shock, shock)`, after
/// which each value relaxes toward the new equilibrium
/// `base_level + shift` at rate `reversion` per round with Gaussian noise
/// `drift_sigma`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct WorldConfig {
    pub n_twins: usize,
    pub properties: usize,
    pub base_level: f64,
    pub shift: f64,
    pub shock: f64,
    pub reversion: f64,
    pub drift_sigma: f64,
    /// Noise of the recorded history around `base_level`.
    pub history_noise: f64,
}

impl Default for WorldConfig {
    fn default() -> Self {
        WorldConfig {
            n_twins: 40,
            properties: 2,
            base_level: 10.0,
            shift: 0.3,
            shock: 5.0,
            reversion: 0.35,
            drift_sigma: 0.05,
            history_noise: 0.01,
        }
    }
}

impl WorldConfig {
    /// A world that never changes.
    pub fn frozen(n_twins: usize) -> Self {
        WorldConfig { n_twins, shift: 0.0, shock: 0.0, drift_sigma: 0.0, history_noise: 0.0, ..Default::default() }
    }
}

/// Recorded history plus the physical truth for each round.
#[derive(Debug, Clone, PartialEq)]
pub struct World {
    pub history: Vec<TwinGraph>,
    /// `truth[r]` is the physical state at round `r`; one extra round is
    /// kept for next-round scoring.
    pub truth: Vec<TwinGraph>,
}

impl World {
    pub fn generate(cfg: &WorldConfig, rounds: u32, seed: u64) -> Result<World, ServiceError> {
        if cfg.n_twins == 0 || cfg.properties == 0 {
            return Err(ServiceError::Invalid("world needs twins and properties".into()));
        }
        let positive = |x: f64| x >= 0.0 && x.is_finite();
        if !(positive(cfg.shock) && positive(cfg.drift_sigma) && positive(cfg.history_noise))
            || !(0.0..=1.0).contains(&cfg.reversion)
        {
            return Err(ServiceError::Invalid(format!("world config {cfg:?}")));
        }
        let mut rng = seeded(seed, stream::WORLD);
        let gauss = |rng: &mut rand_chacha::ChaCha8Rng, sd: f64| -> f64 {
            if sd == 0.0 {
                0.0
            } else {
                Normal::new(0.0, sd).expect("finite sd").sample(rng)
            }
        };
        let n = cfg.n_twins;
        let k = cfg.properties;
        let base: Vec<Vec<f64>> =
            (0..n).map(|_| (0..k).map(|_| cfg.base_level + gauss(&mut rng, cfg.history_noise)).collect()).collect();
        let second: Vec<Vec<f64>> =
            base.iter().map(|row| row.iter().map(|v| v + gauss(&mut rng, cfg.history_noise)).collect()).collect();
        let history = vec![graph(1, &base), graph(2, &second)];

        let eq = cfg.base_level + cfg.shift;
        let mut x: Vec<Vec<f64>> = (0..n)
            .map(|_| {
                (0..k)
                    .map(|_| if cfg.shock > 0.0 { eq + rng.random_range(-cfg.shock..=cfg.shock) } else { eq })
                    .collect()
            })
            .collect();
        let mut truth = vec![graph(3, &x)];
        for r in 0..rounds {
            for row in x.iter_mut() {
                for v in row.iter_mut() {
                    *v += cfg.reversion * (eq - *v) + gauss(&mut rng, cfg.drift_sigma);
                }
            }
            truth.push(graph(4 + r as u64, &x));
        }
        Ok(World { history, truth })
    }
}

fn graph(ts: u64, values: &[Vec<f64>]) -> TwinGraph {
    let mut g = TwinGraph::new(ts);
    for (i, row) in values.iter().enumerate() {
        let mut t = DigitalTwin::new(format!("node-{i:03}"), "node");
        for (j, v) in row.iter().enumerate() {
            t = t.with_dynamic(&format!("m{j}"), *v, ts);
        }
        g.twins.insert(t.twin_id.clone(), t);
    }
    g
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoundRecord {
    /// 1-based.
    pub round: u32,
    pub strategy: Strategy,
    pub accuracy: f64,
    /// Realtime reads spent this round.
    pub realtime_reads: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyncResult {
    pub seed: u64,
    pub records: Vec<RoundRecord>,
}

impl SyncResult {
    pub fn curve(&self, s: Strategy) -> Vec<f64> {
        self.records.iter().filter(|r| r.strategy == s).map(|r| r.accuracy).collect()
    }

    pub fn report(&self) -> ServiceReport {
        let mut r = ServiceReport::new(ServiceKind::Sync, "right-time synchronisation", self.seed);
        let mut by: BTreeMap<Strategy, (f64, u64)> = BTreeMap::new();
        for rec in &self.records {
            let e = by.entry(rec.strategy).or_default();
            e.0 = rec.accuracy;
            e.1 += rec.realtime_reads;
        }
        for (s, (acc, reads)) in &by {
            r.metrics.insert(format!("final_accuracy[{s}]"), *acc);
            r.metrics.insert(format!("realtime_reads[{s}]"), *reads as f64);
        }
        r.table = Some(Table {
            columns: ["round", "strategy", "accuracy", "realtime_reads"].map(String::from).to_vec(),
            rows: self
                .records
                .iter()
                .map(|x| {
                    vec![
                        x.round.to_string(),
                        x.strategy.to_string(),
                        format!("{:.4}", x.accuracy),
                        x.realtime_reads.to_string(),
                    ]
                })
                .collect(),
        });
        r
    }
}

fn round_seed(seed: u64, round: u32) -> u64 {
    seed.wrapping_mul(0x9E37_79B9_7F4A_7C15).wrapping_add(round as u64 + 1)
}

/// Accuracy curves of each strategy over the synchronisation rounds.
///
/// In round `r` the realtime strategies read `ceil(rate * N)` twins (the
/// same seeded subset for every strategy). A read is charged only when the
/// twin has moved beyond tolerance since its last read, so settled twins
/// stay fresh for free. Predictions are scored against the next round's
/// physical state by default.
pub fn run_right_time_sync(settings: &SyncSettings, world: &World, seed: u64) -> Result<SyncResult, ServiceError> {
    if !(0.0..=1.0).contains(&settings.twinning_rate) {
        return Err(ServiceError::Invalid(format!("twinning_rate {}", settings.twinning_rate)));
    }
    if world.truth.len() < settings.rounds as usize + 1 {
        return Err(ServiceError::Invalid("world shorter than the requested rounds".into()));
    }
    if world.history.is_empty() {
        return Err(ServiceError::InsufficientHistory { need: 1, have: 0 });
    }
    let history: Vec<&TwinGraph> = world.history.iter().collect();
    let mut records = Vec::new();
    for &strategy in &settings.strategies {
        let mut last_read: BTreeMap<String, BTreeMap<String, f64>> = BTreeMap::new();
        for r in 0..settings.rounds {
            let realtime = &world.truth[r as usize];
            let target = match settings.eval {
                EvalTarget::NextRound => &world.truth[r as usize + 1],
                EvalTarget::SameRound => realtime,
            };
            let p = predict_next_state(
                &history,
                realtime,
                strategy,
                settings.twinning_rate,
                DEFAULT_DAMPING,
                round_seed(seed, r),
            )?;
            let mut reads = 0;
            for id in &p.synced {
                let now = numeric(realtime, id);
                let stale = match last_read.get(id) {
                    None => true,
                    Some(prev) => now.iter().any(|(k, v)| {
                        prev.get(k).is_none_or(|old| (v - old).abs() > settings.tolerance * v.abs().max(1.0))
                    }),
                };
                if stale {
                    reads += 1;
                    last_read.insert(id.clone(), now);
                }
            }
            let accuracy = twin_accuracy(&p.graph, target, settings.tolerance);
            records.push(RoundRecord { round: r + 1, strategy, accuracy, realtime_reads: reads });
            if settings.target_accuracy.is_some_and(|a| accuracy >= a) {
                break;
            }
        }
    }
    Ok(SyncResult { seed, records })
}

fn numeric(g: &TwinGraph, id: &str) -> BTreeMap<String, f64> {
    g.twins
        .get(id)
        .map(|t| {
            t.dynamic_values()
                .into_iter()
                .filter_map(|(k, v)| match v {
                    Value::Number(x) => Some((k, *x)),
                    _ => None,
                })
                .collect()
        })
        .unwrap_or_default()
}

/// Writes `round,strategy,accuracy,realtime_reads` rows.
pub fn write_sync_csv<W: Write>(records: &[RoundRecord], out: &mut W) -> std::io::Result<()> {
    writeln!(out, "round,strategy,accuracy,realtime_reads")?;
    for r in records {
        writeln!(out, "{},{},{:.6},{}", r.round, r.strategy, r.accuracy, r.realtime_reads)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn thirty_six_rows_for_default_plan() {
        let s = SyncSettings::default();
        let w = World::generate(&WorldConfig::default(), s.rounds, 1).unwrap();
        let r = run_right_time_sync(&s, &w, 1).unwrap();
        assert_eq!(r.records.len(), 36);
        let mut buf = Vec::new();
        write_sync_csv(&r.records, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 37);
        assert!(text.starts_with("round,strategy,accuracy,realtime_reads\n1,H,"));
    }

    #[test]
    fn frozen_world_is_tracked_exactly() {
        let s = SyncSettings::default();
        let w = World::generate(&WorldConfig::frozen(20), s.rounds, 2).unwrap();
        let r = run_right_time_sync(&s, &w, 2).unwrap();
        assert!(r.records.iter().all(|x| x.accuracy == 1.0));
    }

    #[test]
    fn full_rate_same_round_is_exact() {
        let s = SyncSettings { twinning_rate: 1.0, eval: EvalTarget::SameRound, ..Default::default() };
        let w = World::generate(&WorldConfig::default(), s.rounds, 3).unwrap();
        let r = run_right_time_sync(&s, &w, 3).unwrap();
        assert!(r.curve(Strategy::HistoricalRealtime).iter().all(|&a| a == 1.0));
        assert!(r.curve(Strategy::Generative).iter().all(|&a| a == 1.0));
    }

    #[test]
    fn reads_only_for_realtime_strategies() {
        let s = SyncSettings::default();
        let w = World::generate(&WorldConfig::default(), s.rounds, 4).unwrap();
        let r = run_right_time_sync(&s, &w, 4).unwrap();
        let reads = |st| r.records.iter().filter(|x| x.strategy == st).map(|x| x.realtime_reads).sum::<u64>();
        assert_eq!(reads(Strategy::Historical), 0);
        assert!(reads(Strategy::HistoricalRealtime) > 0);
        assert_eq!(r.records.iter().find(|x| x.strategy == Strategy::Generative).unwrap().realtime_reads, 32);
    }

    #[test]
    fn stops_at_target_accuracy() {
        let s = SyncSettings { target_accuracy: Some(0.5), ..Default::default() };
        let w = World::generate(&WorldConfig::default(), s.rounds, 5).unwrap();
        let r = run_right_time_sync(&s, &w, 5).unwrap();
        let g = r.curve(Strategy::Generative);
        assert!(g.len() < 12);
        assert!(*g.last().unwrap() >= 0.5);
    }
}
