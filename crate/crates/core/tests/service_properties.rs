use proptest::prelude::*;
use twinforge::kpi::WeightMode;
use twinforge::scenario::{
    EvalTarget, RuleBackend, ScenarioKind, ScenarioSpec, ServiceKind, Strategy as Sync, SyncSettings,
};
use twinforge::services::{
    random_instance, run_mmtc, run_ptr, run_right_time_sync, run_tic, PtrConfig, PtrInstance, TicConfig, World,
    WorldConfig,
};
use twinforge::sim::{build_topology, SimOverrides, SizeClass};

fn hop(a: (f64, f64), b: (f64, f64)) -> f64 {
    (a.0 - b.0).hypot(a.1 - b.1)
}

/// Shortest depot-to-depot tour over `stops`, by enumerating permutations.
fn brute_force_tour(inst: &PtrInstance, stops: &[usize]) -> f64 {
    fn go(inst: &PtrInstance, at: (f64, f64), left: &mut Vec<usize>, acc: f64, best: &mut f64) {
        if acc >= *best {
            return;
        }
        if left.is_empty() {
            *best = best.min(acc + hop(at, inst.depot));
            return;
        }
        for k in 0..left.len() {
            let i = left.remove(k);
            let p = inst.point(i);
            go(inst, p, left, acc + hop(at, p), best);
            left.insert(k, i);
        }
    }
    let mut best = f64::INFINITY;
    go(inst, inst.depot, &mut stops.to_vec(), 0.0, &mut best);
    best
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]
    #[test]
    fn zero_drift_worlds_never_lose_accuracy(
        n in 1usize..30, props in 1usize..4, base in -100.0..100.0f64, rate in 0.0..=1.0f64, rounds in 1u32..12,
        tol in 0.0..0.1f64, seed in any::<u64>(), same_round in any::<bool>(),
    ) {
        let cfg = WorldConfig { properties: props, base_level: base, ..WorldConfig::frozen(n) };
        let world = World::generate(&cfg, rounds, seed).unwrap();
        let eval = if same_round { EvalTarget::SameRound } else { EvalTarget::NextRound };
        let s = SyncSettings { rounds, twinning_rate: rate, eval, tolerance: tol, ..SyncSettings::default() };
        let r = run_right_time_sync(&s, &world, seed).unwrap();
        for st in Sync::ALL {
            let c = r.curve(st);
            prop_assert_eq!(c.len(), rounds as usize);
            prop_assert!(c.windows(2).all(|w| w[1] >= w[0]), "{st}: {c:?}");
        }
    }

    #[test]
    fn routes_are_valid(seed in any::<u64>(), n in 0usize..25, cap in 1usize..6, side in 1.0..50.0f64) {
        let inst = random_instance(seed, n, side, cap);
        let r = run_ptr(&inst, &PtrConfig::default()).unwrap();
        let mut visited: Vec<usize> = r.trips.iter().flatten().copied().collect();
        visited.sort_unstable();
        prop_assert_eq!(&visited, &r.selected);
        prop_assert!(r.trips.iter().all(|t| !t.is_empty() && t.len() <= cap));
        let mut total = 0.0;
        for trip in &r.trips {
            let mut at = inst.depot;
            for &i in trip {
                total += hop(at, inst.point(i));
                at = inst.point(i);
            }
            total += hop(at, inst.depot);
        }
        prop_assert!((total - r.route_length).abs() <= 1e-9 * total.max(1.0));
        prop_assert!(r.missed.iter().all(|i| !r.selected.contains(i)));
        for &i in &r.selected {
            prop_assert!(inst.bins[i].fill_level + inst.bins[i].fill_rate >= 0.8);
        }
    }

    #[test]
    fn greedy_within_twice_optimal(seed in any::<u64>(), n in 1usize..12) {
        let inst = random_instance(seed, n, 10.0, 8);
        let r = run_ptr(&inst, &PtrConfig::default()).unwrap();
        prop_assume!(!r.selected.is_empty() && r.selected.len() <= 8);
        prop_assert_eq!(r.trips.len(), 1);
        let opt = brute_force_tour(&inst, &r.selected);
        prop_assert!(r.route_length >= opt - 1e-9);
        prop_assert!(r.route_length <= 2.0 * opt + 1e-9, "{} vs {}", r.route_length, opt);
    }
}

#[test]
fn brute_force_oracle_on_a_square() {
    let inst = PtrInstance {
        depot: (0.0, 0.0),
        bins: [(0.0, 1.0), (1.0, 1.0), (1.0, 0.0)]
            .iter()
            .enumerate()
            .map(|(i, &(x, y))| twinforge::services::Bin { id: i.to_string(), x, y, fill_level: 1.0, fill_rate: 0.0 })
            .collect(),
        truck_capacity: 8,
    };
    assert!((brute_force_tour(&inst, &[0, 1, 2]) - 4.0).abs() < 1e-12);
}

#[test]
fn tic_reward_ledger_balances() {
    let topo = build_topology(SizeClass::Small, &SimOverrides::default(), 3).unwrap();
    let tc = TicConfig { episodes: 40, ..TicConfig::default() };
    let r = run_tic(&topo, &tc, 3).unwrap();
    assert_eq!(r.training_returns.len(), 40);
    assert_eq!(r.credited_rewards.len(), 40);
    for (ret, credited) in r.training_returns.iter().zip(&r.credited_rewards) {
        assert_eq!(*ret as f64, *credited);
    }
    for e in &r.evals {
        assert_eq!(e.trained.episode_return(), e.trained.hits as i64 - e.trained.drops as i64);
        assert!(e.trained.hits + e.trained.drops <= e.trained.generated);
    }
}

#[test]
fn untrained_tic_matches_fifo() {
    let topo = build_topology(SizeClass::Small, &SimOverrides::default(), 4).unwrap();
    let r = run_tic(&topo, &TicConfig { episodes: 0, ..TicConfig::default() }, 4).unwrap();
    assert!(r.untrained);
    assert_eq!(r.trained_loss(), r.fifo_loss());
}

#[test]
fn mmtc_sweeps_exactly_three_levels() {
    let spec = ScenarioSpec::new(ScenarioKind::HighDensity, SizeClass::Small, ServiceKind::Mmtc, WeightMode::Split);
    let r = run_mmtc(&spec, 5, &RuleBackend).unwrap();
    let levels: Vec<f64> = r.points.iter().map(|p| p.ul_fraction).collect();
    assert_eq!(levels, vec![0.20, 0.45, 0.70]);
    let rep = r.report();
    let keys: Vec<&String> = rep.metrics.keys().filter(|k| k.starts_with("hit_rate@")).collect();
    assert_eq!(keys, ["hit_rate@0.20", "hit_rate@0.45", "hit_rate@0.70"]);
}
