//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero when any criterion fails. Tolerances are the constants below.

use std::collections::BTreeMap;
use std::fs;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value as Json};
use twinforge::harness::{run_experiment, ExperimentKind, ExperimentPlan, Manifest};
use twinforge::kpi::{
    assign_weights, random_weights, solve_max_weights, split_weights, KpiId, KpiVector, OptimizerParams, PriorityPair,
    WeightMode, WeightVector,
};
use twinforge::scenario::{
    generate, validate_scenario, GeneratedScenario, KpiTargets, MockBackend, MockReply, RuleBackend, ScenarioKind,
    ScenarioSpec, ServiceKind, Strategy, SyncSettings, FALLBACK_ID,
};
use twinforge::services::{prepare_network, random_instance, run_ptr, run_right_time_sync, run_tic, PtrConfig};
use twinforge::services::{PtrInstance, TicConfig, World, WorldConfig};
use twinforge::sim::{build_topology, run_sim, SimConfig, SimOverrides, SizeClass};
use twinforge::twin::{HistoryStore, TwinGraph};

// criterion 1
const C1_SEEDS: u64 = 10;
const C1_MIN_REDUCTION: f64 = 0.20;
const C1_BUDGET: Duration = Duration::from_secs(300);
// criterion 2
const C2_WORLDS: u64 = 20;
const C2_ROUNDS: u32 = 12;
const C2_RATE: f64 = 0.8;
const C2_FINAL_MIN: f64 = 0.90;
const C2_ROUND5_CENTRE: f64 = 0.50;
const C2_ROUND5_TOL: f64 = 0.15;
const C2_LATE_GAP: f64 = 0.10;
const C2_BUDGET: Duration = Duration::from_secs(120);
// criterion 3
const C3_VECTORS: usize = 100;
const C3_GAP: f64 = 1e-6;
const C3_BUDGET: Duration = Duration::from_secs(30);
// criterion 4
const C4_SPECS: usize = 1000;
const W_FLOOR: f64 = 0.05;
const SUM_TOL: f64 = 1e-9;
// criterion 5
const C5_CONFIGS: usize = 1000;
// criterion 7
const C7_SEEDS: u64 = 10;
const C7_MIN_WINS: usize = 8;
const C7_MAX_EPISODES: u32 = 2000;
const C7_BUDGET: Duration = Duration::from_secs(120);
// criterion 8
const C8_REPLIES: usize = 500;
// criterion 9
const C9_INSTANCES: usize = 50;
const C9_MAX_SELECTED: usize = 8;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn main() -> ExitCode {
    let criteria: [Criterion; 9] = [
        ("1 throughput stability", throughput_stability),
        ("2 synchronisation accuracy", sync_accuracy),
        ("3 optimizer oracle", optimizer_oracle),
        ("4 weight constraints", weight_constraints),
        ("5 simulator micro-oracle", simulator_oracle),
        ("6 determinism", determinism),
        ("7 TIC improvement", tic_improvement),
        ("8 backend resilience", backend_resilience),
        ("9 PTR oracle", ptr_oracle),
    ];
    let only: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = 0;
    for (name, f) in criteria {
        if !only.is_empty() && !only.iter().any(|o| name.contains(o.as_str())) {
            continue;
        }
        let t = Instant::now();
        let r = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|p| {
            let msg = p.downcast_ref::<String>().cloned().or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()));
            Err(format!("panicked: {}", msg.unwrap_or_default()))
        });
        let secs = t.elapsed().as_secs_f64();
        match r {
            Ok(detail) => println!("PASS criterion {name}: {detail} [{secs:.1}s]"),
            Err(detail) => {
                failed += 1;
                println!("FAIL criterion {name}: {detail} [{secs:.1}s]");
            }
        }
    }
    if failed > 0 {
        println!("{failed} acceptance criterion/criteria failed");
        ExitCode::FAILURE
    } else {
        ExitCode::SUCCESS
    }
}

fn within(t: Instant, budget: Duration, what: &str) -> Result<(), String> {
    let e = t.elapsed();
    if e <= budget {
        Ok(())
    } else {
        Err(format!("{what} took {:.1}s, budget {}s", e.as_secs_f64(), budget.as_secs()))
    }
}

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

/// Count of problems plus the first one, for the detail line.
fn problems(bad: &[String]) -> String {
    match bad.first() {
        None => "0 problems".into(),
        Some(f) => format!("{} problems, first: {f}", bad.len()),
    }
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

/// Population std / mean, or None for an empty or zero-mean series.
fn cov(series: &[f64]) -> Option<f64> {
    if series.is_empty() {
        return None;
    }
    let m = mean(series);
    if m == 0.0 {
        return None;
    }
    let var = series.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / series.len() as f64;
    Some(var.sqrt() / m)
}

/// Weight constraint violations, checked independently of the library.
fn weight_errors(w: &WeightVector) -> Vec<String> {
    let a = w.to_array();
    let mut out = Vec::new();
    let sum: f64 = a.iter().sum();
    if (sum - 1.0).abs() > SUM_TOL {
        out.push(format!("sum {sum}"));
    }
    if let Some((i, x)) = a.iter().enumerate().find(|(_, x)| !(**x >= W_FLOOR)) {
        out.push(format!("w[{i}] = {x}"));
    }
    if let Some(p) = w.prioritized {
        let idx: Vec<usize> = p.kpis().iter().map(|k| k.index()).collect();
        let lo = idx.iter().map(|&i| a[i]).fold(f64::INFINITY, f64::min);
        let hi = (0..4).filter(|i| !idx.contains(i)).map(|i| a[i]).fold(f64::NEG_INFINITY, f64::max);
        if !(lo > hi) {
            out.push(format!("dominance {lo} vs {hi}"));
        }
    }
    out
}

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_twinforge"));
    c.env_remove("TWINFORGE_LLM_URL").env_remove("TWINFORGE_LLM_KEY");
    c
}

fn specs_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../specs")
}

fn throughput_stability() -> Outcome {
    let t = Instant::now();
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let out = tmp.path().join("tp");
    let spec = ScenarioSpec::from_path(&specs_dir().join("throughput.toml")).map_err(|e| e.to_string())?;
    let mut plan = ExperimentPlan::new(spec, &out);
    plan.experiment = ExperimentKind::Throughput;
    plan.sizes = vec![SizeClass::Medium, SizeClass::Large];
    plan.seeds = (1..=C1_SEEDS).collect();
    let o = run_experiment(&plan).map_err(|e| e.to_string())?;
    if !o.success() {
        return Err(format!("runs failed: {:?}", o.failures));
    }
    // recompute every CoV from the per-slot series on disk
    let mut covs: BTreeMap<(&str, &str), Vec<f64>> = BTreeMap::new();
    for size in ["medium", "large"] {
        for kind in ["base", "high_density"] {
            for seed in &plan.seeds {
                let csv = fs::read_to_string(out.join(format!("metrics/throughput_{size}_{kind}_s{seed}.csv")))
                    .map_err(|e| e.to_string())?;
                let series: Vec<f64> =
                    csv.lines().skip(1).map(|l| l.split(',').nth(1).unwrap().parse::<f64>().unwrap()).collect();
                let c = cov(&series).ok_or(format!("{size}/{kind}/s{seed}: degenerate series"))?;
                covs.entry((size, kind)).or_default().push(c);
            }
        }
    }
    let reduction = |size| {
        let random = mean(&covs[&(size, "base")]);
        let prioritized = mean(&covs[&(size, "high_density")]);
        (random, prioritized, 1.0 - prioritized / random)
    };
    let (lr, lp, lred) = reduction("large");
    let (mr, mp, mred) = reduction("medium");
    within(t, C1_BUDGET, "throughput runs")?;
    check(
        lred >= C1_MIN_REDUCTION && mp < mr,
        format!(
            "large CoV random {lr:.4} vs prioritized {lp:.4} ({:.1}% lower, need >= {:.0}%); \
             medium {mr:.4} vs {mp:.4} ({:.1}% lower, need > 0%); {C1_SEEDS} seeds",
            100.0 * lred,
            100.0 * C1_MIN_REDUCTION,
            100.0 * mred
        ),
    )
}

fn sync_accuracy() -> Outcome {
    let t = Instant::now();
    let settings = SyncSettings { rounds: C2_ROUNDS, twinning_rate: C2_RATE, ..SyncSettings::default() };
    let world_cfg = WorldConfig { n_twins: settings.n_twins, ..WorldConfig::default() };
    let mut curves: BTreeMap<Strategy, Vec<Vec<f64>>> = BTreeMap::new();
    for seed in 1..=C2_WORLDS {
        let world = World::generate(&world_cfg, C2_ROUNDS, seed).map_err(|e| e.to_string())?;
        let r = run_right_time_sync(&settings, &world, seed).map_err(|e| e.to_string())?;
        for s in Strategy::ALL {
            curves.entry(s).or_default().push(r.curve(s));
        }
    }
    let at = |s: Strategy, round: usize| mean(&curves[&s].iter().map(|c| c[round - 1]).collect::<Vec<_>>());
    let last = C2_ROUNDS as usize;
    let late_from = last - last / 3 + 1;
    let late = |s: Strategy| mean(&(late_from..=last).map(|r| at(s, r)).collect::<Vec<_>>());
    let (h, hr, gai) = (Strategy::Historical, Strategy::HistoricalRealtime, Strategy::Generative);
    let f = [at(h, last), at(hr, last), at(gai, last)];
    let r5 = [at(hr, 5), at(gai, 5)];
    let gap = late(gai) - late(h).max(late(hr));
    within(t, C2_BUDGET, "sync runs")?;
    let ordered = f[2] >= f[1] && f[1] >= f[0];
    let round5_ok = r5.iter().all(|a| (a - C2_ROUND5_CENTRE).abs() <= C2_ROUND5_TOL);
    check(
        ordered && f[2] >= C2_FINAL_MIN && round5_ok && gap >= C2_LATE_GAP,
        format!(
            "final H {:.3}, H+R {:.3}, H+R+GAI {:.3} (need ordered, GAI >= {C2_FINAL_MIN}); round 5 H+R {:.3}, \
             H+R+GAI {:.3} (need {C2_ROUND5_CENTRE} +- {C2_ROUND5_TOL}); rounds {late_from}-{last} gap {gap:.3} \
             (need >= {C2_LATE_GAP}); {C2_WORLDS} worlds",
            f[0], f[1], f[2], r5[0], r5[1]
        ),
    )
}

/// Best objective over the 0.01 grid of the constrained simplex.
fn grid_best(t: &KpiVector, pair: PriorityPair, w_min: f64, w_pmin: f64) -> f64 {
    let v = t.to_array();
    let a = (w_min * 100.0).round() as i64;
    let b = (w_pmin * 100.0).round() as i64;
    let prio: Vec<bool> = KpiId::ALL.iter().map(|k| pair.contains(*k)).collect();
    let mut best = f64::NEG_INFINITY;
    for x0 in a..=100 {
        for x1 in a..=100 - x0 {
            for x2 in a..=100 - x0 - x1 {
                let x = [x0, x1, x2, 100 - x0 - x1 - x2];
                if x[3] < a || (0..4).any(|i| prio[i] && x[i] < b) {
                    continue;
                }
                let lo = (0..4).filter(|&i| prio[i]).map(|i| x[i]).min().unwrap();
                let hi = (0..4).filter(|&i| !prio[i]).map(|i| x[i]).max().unwrap();
                if lo > hi {
                    best = best.max((0..4).map(|i| x[i] as f64 / 100.0 * v[i]).sum());
                }
            }
        }
    }
    best
}

fn optimizer_oracle() -> Outcome {
    let t = Instant::now();
    let p = OptimizerParams::default();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut worst: f64 = 0.0;
    let mut bad = Vec::new();
    for _ in 0..C3_VECTORS {
        let kv = KpiVector::from_array(std::array::from_fn(|_| rng.random::<f64>()));
        for pair in [PriorityPair::DensityDeadline, PriorityPair::LatencyDeadline, PriorityPair::DensityBuffer] {
            let w = solve_max_weights(&kv, pair, p.w_min, p.w_pmin).map_err(|e| e.to_string())?;
            let got: f64 = w.to_array().iter().zip(kv.to_array()).map(|(a, b)| a * b).sum();
            let gap = (got - grid_best(&kv, pair, p.w_min, p.w_pmin)).abs();
            worst = worst.max(gap);
            let errs = weight_errors(&w);
            if gap > C3_GAP || !errs.is_empty() || w.prioritized != Some(pair) {
                bad.push(format!("{kv:?} {pair:?}: gap {gap:e} {errs:?}"));
            }
        }
    }
    within(t, C3_BUDGET, "oracle comparison")?;
    check(
        bad.is_empty(),
        format!("{} cases, worst objective gap {worst:.1e} (limit {C3_GAP:e}); {}", 3 * C3_VECTORS, problems(&bad)),
    )
}

fn random_spec(rng: &mut ChaCha8Rng) -> ScenarioSpec {
    let kind = [ScenarioKind::Base, ScenarioKind::HighDensity, ScenarioKind::Synchronization][rng.random_range(0..3)];
    let mode = if kind == ScenarioKind::Base {
        WeightMode::Random
    } else {
        [WeightMode::Split, WeightMode::Optimize, WeightMode::Random][rng.random_range(0..3)]
    };
    let mut s = ScenarioSpec::new(kind, SizeClass::Small, ServiceKind::Mmtc, mode);
    s.seed = rng.random();
    s.thresholds.d_th = rng.random_range(1.0..100.0);
    s.thresholds.l_th = rng.random_range(0.01..5.0);
    s.thresholds.a_th = rng.random_range(0.0..=1.0);
    let w_min = rng.random_range(W_FLOOR..0.12);
    let w_pmin = rng.random_range(w_min + 0.005..0.2);
    let share = rng.random_range(0.51..=1.0 - 2.0 * w_min);
    s.optimizer = OptimizerParams { w_min, w_pmin, priority_share: share };
    let maybe = |rng: &mut ChaCha8Rng, lo: f64, hi: f64| rng.random_bool(0.5).then(|| rng.random_range(lo..hi));
    s.kpi_targets = KpiTargets {
        device_density: maybe(rng, 0.0, 200.0),
        mean_latency_ms: maybe(rng, 0.0, 5.0),
        accuracy: maybe(rng, 0.0, 1.0),
        mean_buffer_occupancy: maybe(rng, 0.0, 1.0),
    };
    s
}

fn small_networks(n: u64) -> Vec<(HistoryStore, TwinGraph)> {
    (1..=n)
        .map(|seed| {
            prepare_network(&build_topology(SizeClass::Small, &SimOverrides::default(), seed).unwrap()).unwrap()
        })
        .collect()
}

fn weight_constraints() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let nets = small_networks(4);
    let unavailable = MockBackend::unavailable();
    let mut checked = 0usize;
    let mut paths: BTreeMap<&str, usize> = BTreeMap::new();
    let mut bad = Vec::new();
    let mut record = |bad: &mut Vec<String>, path: &'static str, w: &WeightVector, ctx: &dyn Fn() -> String| {
        *paths.entry(path).or_default() += 1;
        let e = weight_errors(w);
        if !e.is_empty() {
            bad.push(format!("{path} {}: {e:?}", ctx()));
        }
    };
    for i in 0..C4_SPECS {
        let spec = random_spec(&mut rng);
        spec.validate().map_err(|e| format!("spec {i} invalid: {e}"))?;
        let o = &spec.optimizer;
        let ctx = || format!("spec {i} {:?}", spec.optimizer);
        let kv = KpiVector::from_array(std::array::from_fn(|_| rng.random::<f64>()));
        let pair = [PriorityPair::DensityDeadline, PriorityPair::LatencyDeadline, PriorityPair::DensityBuffer][i % 3];

        record(&mut bad, "random", &random_weights(spec.seed, o.w_min).map_err(|e| e.to_string())?, &ctx);
        record(&mut bad, "split", &split_weights(pair, o.priority_share, o.w_min).map_err(|e| e.to_string())?, &ctx);
        record(
            &mut bad,
            "optimize",
            &solve_max_weights(&kv, pair, o.w_min, o.w_pmin).map_err(|e| e.to_string())?,
            &ctx,
        );
        let w = assign_weights(Some(pair), spec.weight_mode, &kv, spec.seed, o).map_err(|e| e.to_string())?;
        record(&mut bad, "assign", &w, &ctx);

        let (h, rt) = &nets[i % nets.len()];
        let window = h.window(h.len()).map_err(|e| e.to_string())?;
        for (path, backend) in [
            ("generate", &RuleBackend as &dyn twinforge::scenario::ScenarioBackend),
            ("generate fallback", &unavailable),
        ] {
            let g = generate(&spec, &window, rt, backend).map_err(|e| format!("spec {i}: {e}"))?;
            if path == "generate fallback" && g.backend_id != FALLBACK_ID {
                bad.push(format!("spec {i}: backend_id {}", g.backend_id));
            }
            if g.sim_config.weights != g.weights {
                bad.push(format!("spec {i}: sim weights differ from scenario weights"));
            }
            record(&mut bad, path, &g.weights, &ctx);
        }
        checked += 1;
    }
    let total: usize = paths.values().sum();
    check(bad.is_empty(), format!("{checked} specs, {total} weight vectors over {paths:?}, {}", problems(&bad)))
}

fn simulator_oracle() -> Outcome {
    // 2 sensors, 1 gateway, capacity 1, both enqueue at slot 0, deadline 2
    let trace = SimConfig {
        n_sensors: 2,
        n_gateways: 1,
        ul_fraction: 1.0,
        payload_limit_bits: 2000,
        gateway_capacity: 1,
        buffer_capacity: 4,
        deadline_slots: 2,
        duration_slots: 6,
        seed: 1,
        weights: WeightVector::new([0.25; 4], None),
        rearrival_prob: 0.0,
        slot_ms: 0.1,
        area_units: 1.0,
    };
    let m = run_sim(&trace).map_err(|e| e.to_string())?;
    let want = vec![1, 1, 0, 0, 0, 0];
    if m.throughput_series != want || m.delivered != 2 || m.dropped() != 0 || m.generated != 2 {
        return Err(format!(
            "hand trace: series {:?} delivered {} dropped {} (want {want:?}, 2, 0)",
            m.throughput_series,
            m.delivered,
            m.dropped()
        ));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut bad = Vec::new();
    let mut generated = 0u64;
    for i in 0..C5_CONFIGS {
        let w = random_weights(rng.random(), W_FLOOR).map_err(|e| e.to_string())?;
        let cfg = SimConfig {
            n_sensors: rng.random_range(1..120),
            n_gateways: rng.random_range(1..6),
            ul_fraction: rng.random_range(0.0..=1.0),
            payload_limit_bits: rng.random_range(100..4000),
            gateway_capacity: rng.random_range(1..8),
            buffer_capacity: rng.random_range(1..30),
            deadline_slots: rng.random_range(1..12),
            duration_slots: rng.random_range(1..80),
            seed: rng.random(),
            weights: w,
            rearrival_prob: rng.random_range(0.0..=1.0),
            slot_ms: 0.1,
            area_units: 1.0,
        };
        let m = run_sim(&cfg).map_err(|e| format!("config {i}: {e}"))?;
        generated += m.generated;
        let cap = (cfg.n_gateways * cfg.gateway_capacity) as u32;
        let delivered_sum: u64 = m.throughput_series.iter().map(|&x| x as u64).sum();
        if m.delivered + m.dropped() != m.generated || delivered_sum != m.delivered {
            bad.push(format!("config {i}: {} + {} != {}", m.delivered, m.dropped(), m.generated));
        }
        if m.throughput_series.iter().any(|&x| x > cap) {
            bad.push(format!("config {i}: capacity {cap} exceeded"));
        }
    }
    check(
        bad.is_empty(),
        format!(
            "hand trace series {want:?} delivered 2 dropped 0 matches; conservation on {C5_CONFIGS} configs \
             ({generated} packets), {}",
            problems(&bad)
        ),
    )
}

fn determinism() -> Outcome {
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let spec = specs_dir().join("throughput.toml");
    let mut dirs = Vec::new();
    for run in ["a", "b"] {
        let out = tmp.path().join(run);
        let o = bin()
            .args([
                "run",
                spec.to_str().unwrap(),
                "--experiment",
                "all",
                "--sizes",
                "small,medium",
                "--seeds",
                "1..3",
                "--out",
            ])
            .arg(&out)
            .output()
            .map_err(|e| e.to_string())?;
        if !o.status.success() {
            return Err(format!("run {run} failed: {}", String::from_utf8_lossy(&o.stderr)));
        }
        dirs.push(out);
    }
    let m = Manifest::load(&dirs[0]).map_err(|e| e.to_string())?.ok_or("no manifest")?;
    let mut diffs = Vec::new();
    let mut csvs = 0;
    for f in &m.files {
        let a = fs::read(dirs[0].join(&f.path)).map_err(|e| e.to_string())?;
        let b = fs::read(dirs[1].join(&f.path)).map_err(|e| format!("{}: {e}", f.path))?;
        csvs += f.path.ends_with(".csv") as usize;
        if a != b {
            diffs.push(f.path.clone());
        }
    }
    let manifests_equal = fs::read(dirs[0].join("manifest.json")).ok() == fs::read(dirs[1].join("manifest.json")).ok();
    check(
        diffs.is_empty() && manifests_equal && csvs > 0,
        format!("{} files ({csvs} metric CSVs) compared byte for byte; differing: {diffs:?}", m.files.len()),
    )
}

fn tic_improvement() -> Outcome {
    let t = Instant::now();
    let tc = TicConfig::default();
    if tc.episodes > C7_MAX_EPISODES {
        return Err(format!("{} training episodes exceed {C7_MAX_EPISODES}", tc.episodes));
    }
    let mut wins = 0;
    let mut rows = Vec::new();
    for seed in 1..=C7_SEEDS {
        let topo = build_topology(SizeClass::Medium, &SimOverrides::default(), seed).map_err(|e| e.to_string())?;
        let r = run_tic(&topo, &tc, seed).map_err(|e| e.to_string())?;
        // loss from the raw counters of the held-out episodes
        let loss = |f: fn(&twinforge::services::TicEval) -> &twinforge::services::EpisodeStats| {
            let (gen, hit) = r.evals.iter().map(f).fold((0u64, 0u64), |(g, h), s| (g + s.generated, h + s.hits));
            1.0 - hit as f64 / gen as f64
        };
        let (trained, fifo) = (loss(|e| &e.trained), loss(|e| &e.fifo));
        wins += (trained <= fifo) as usize;
        rows.push(format!("{trained:.3}/{fifo:.3}"));
    }
    within(t, C7_BUDGET, "TIC training")?;
    check(
        wins >= C7_MIN_WINS,
        format!(
            "learned <= FIFO loss on {wins}/{C7_SEEDS} seeds (need {C7_MIN_WINS}), {} episodes; learned/FIFO {rows:?}",
            tc.episodes
        ),
    )
}

/// True when `text` decodes to a scenario that passes the independent checks.
fn well_formed(text: &str) -> bool {
    match serde_json::from_str::<GeneratedScenario>(text) {
        Ok(s) => weight_errors(&s.weights).is_empty() && s.sim_config.validate().is_ok(),
        Err(_) => false,
    }
}

fn malformed_reply(rng: &mut ChaCha8Rng, base: &Json) -> String {
    let mut v = base.clone();
    match rng.random_range(0..10) {
        0 => {
            let t = v.to_string();
            return t[..rng.random_range(0..t.len())].to_string();
        }
        1 => v["weights"]["rho"] = json!(rng.random_range(-1.0..0.04)),
        2 => v["weights"]["d"] = json!(rng.random_range(1.0..3.0)),
        3 => {
            let key = ["weights", "sim_config", "predicted_graph", "backend_id"][rng.random_range(0..4)];
            v.as_object_mut().unwrap().remove(key);
        }
        4 => v["weights"]["prioritized"] = json!("Everything"),
        5 => v["surprise"] = json!(rng.random::<u32>()),
        6 => v["sim_config"][["n_sensors", "n_gateways", "gateway_capacity"][rng.random_range(0..3)]] = json!(0),
        7 => {
            // equal weights everywhere break dominance
            for k in ["rho", "d", "l", "alpha"] {
                v["weights"][k] = json!(0.25);
            }
        }
        8 => return format!("Here are two options: {v} or {v}"),
        _ => {
            let len = rng.random_range(0..60);
            return (0..len).map(|_| rng.random_range(' '..='~')).collect();
        }
    }
    v.to_string()
}

fn backend_resilience() -> Outcome {
    let spec = ScenarioSpec::new(ScenarioKind::HighDensity, SizeClass::Small, ServiceKind::Mmtc, WeightMode::Split);
    let (h, rt) = small_networks(1).pop().unwrap();
    let window = h.window(h.len()).map_err(|e| e.to_string())?;
    let good = generate(&spec, &window, &rt, &RuleBackend).map_err(|e| e.to_string())?;
    let base = serde_json::to_value(&good).map_err(|e| e.to_string())?;
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut bad = Vec::new();
    let mut sent = 0;
    while sent < C8_REPLIES {
        let text = malformed_reply(&mut rng, &base);
        if well_formed(&text) {
            continue;
        }
        sent += 1;
        let out = generate(&spec, &window, &rt, &MockBackend::new(vec![MockReply::Raw(text.clone())]));
        match out {
            Ok(s) => {
                let problems = [weight_errors(&s.weights), validate_scenario(&s, W_FLOOR)].concat();
                if s.backend_id != FALLBACK_ID || !problems.is_empty() || s.sim_config.validate().is_err() {
                    bad.push(format!("{} {problems:?} from {text:.80}", s.backend_id));
                }
            }
            Err(e) => bad.push(format!("error {e} from {text:.80}")),
        }
    }
    check(
        bad.is_empty(),
        format!("{sent} malformed replies, expecting `{FALLBACK_ID}` and a valid scenario; {}", problems(&bad)),
    )
}

fn hop(a: (f64, f64), b: (f64, f64)) -> f64 {
    (a.0 - b.0).hypot(a.1 - b.1)
}

/// Shortest closed tour from the depot through `stops`, over all orders.
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

fn ptr_oracle() -> Outcome {
    let cfg = PtrConfig::default();
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let (mut oracle_cases, mut total, mut worst_ratio) = (0, 0, 0.0f64);
    let mut bad = Vec::new();
    while oracle_cases < C9_INSTANCES {
        total += 1;
        let seed = rng.random();
        let inst = random_instance(seed, rng.random_range(1..=14), 10.0, C9_MAX_SELECTED);
        let r = run_ptr(&inst, &cfg).map_err(|e| e.to_string())?;
        let mut visited: Vec<usize> = r.trips.iter().flatten().copied().collect();
        visited.sort_unstable();
        let mut length = 0.0;
        for trip in &r.trips {
            let mut at = inst.depot;
            for &i in trip {
                length += hop(at, inst.point(i));
                at = inst.point(i);
            }
            length += hop(at, inst.depot);
        }
        let valid = visited == r.selected
            && r.trips.iter().all(|t| !t.is_empty() && t.len() <= inst.truck_capacity)
            && (length - r.route_length).abs() <= 1e-9 * length.max(1.0);
        if !valid {
            bad.push(format!("seed {seed}: invalid route"));
        }
        if r.selected.is_empty() || r.selected.len() > C9_MAX_SELECTED {
            continue;
        }
        oracle_cases += 1;
        let opt = brute_force_tour(&inst, &r.selected);
        let ratio = r.route_length / opt;
        worst_ratio = worst_ratio.max(ratio);
        if r.route_length > 2.0 * opt + 1e-9 {
            bad.push(format!("seed {seed}: greedy {} > 2 x {opt}", r.route_length));
        }
    }
    check(
        bad.is_empty(),
        format!(
            "{oracle_cases} instances with 1..={C9_MAX_SELECTED} selected bins, worst greedy/optimal {worst_ratio:.3} \
             (limit 2); routes checked on all {total}; {}",
            problems(&bad)
        ),
    )
}
