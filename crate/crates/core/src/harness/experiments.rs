use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::time::{SystemTime, UNIX_EPOCH};

use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value as Json};

use super::artifacts::{foreign_files, sha256_hex, ArtifactSet, Manifest};
use super::plan::{throughput_load, ExperimentKind, ExperimentPlan};
use super::stats::{mean_ci95, MeanCi};
use super::svg::{bar_chart, line_chart, BarSeries, LineSeries};
use super::HarnessError;
use crate::kpi::{PriorityPair, WeightMode, WeightVector};
use crate::scenario::{
    generate, BackendConfig, BackendKind, MockBackend, RemoteBackend, RuleBackend, ScenarioBackend, ScenarioError,
    ScenarioKind, ScenarioSpec, Strategy,
};
use crate::services::{
    prepare_network, random_instance, run_mmtc, run_ptr, run_right_time_sync, run_tic, write_sync_csv, MmtcResult,
    PtrConfig, ServiceError, SyncResult, TicConfig, TicResult, World, WorldConfig, UL_SWEEP,
};
use crate::sim::{build_topology, run_sim, write_series_csv, SimSummary, SizeClass};
use crate::twin::TwinGraph;

/// Bins per planned-truck-routing instance.
pub const PTR_BINS: usize = 30;
pub const PTR_SIDE: f64 = 10.0;
pub const PTR_TRUCK_CAPACITY: usize = 8;

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub config_hash: String,
    pub manifest: Manifest,
    /// One line per failed run; the other runs' artifacts are still written.
    pub failures: Vec<String>,
}

impl RunOutcome {
    pub fn success(&self) -> bool {
        self.failures.is_empty()
    }
}

/// Backend named by the config. Each run builds its own so that a cycling
/// mock replays identically regardless of scheduling.
pub fn make_backend(cfg: &BackendConfig) -> Result<Box<dyn ScenarioBackend>, ScenarioError> {
    Ok(match cfg.kind {
        BackendKind::Rule => Box::new(RuleBackend),
        BackendKind::Mock => match &cfg.fixture {
            Some(f) => Box::new(MockBackend::from_fixture(f)?),
            None => Box::new(MockBackend::unavailable()),
        },
        BackendKind::Remote => Box::new(RemoteBackend::from_env(cfg)?),
    })
}

/// Hash of everything that determines the run's outputs.
pub fn config_hash(plan: &ExperimentPlan) -> String {
    let doc = json!({
        "spec": plan.spec,
        "seeds": plan.seeds,
        "sizes": plan.sizes,
        "experiment": plan.experiment,
        "throughput_load": throughput_load(),
        "version": env!("CARGO_PKG_VERSION"),
    });
    sha256_hex(&serde_json::to_vec(&doc).expect("plan serialises"))
}

/// Runs every experiment in the plan and writes its artifacts.
///
/// Config problems are reported before anything touches the output
/// directory. A failing seed is recorded in the outcome and the reports;
/// the remaining seeds are still aggregated.
pub fn run_experiment(plan: &ExperimentPlan) -> Result<RunOutcome, HarnessError> {
    plan.validate()?;
    let foreign = foreign_files(&plan.out_dir)?;
    if !foreign.is_empty() {
        let shown: Vec<&str> = foreign.iter().take(5).map(String::as_str).collect();
        return Err(HarnessError::Config(format!(
            "{} holds {} file(s) from elsewhere ({}); choose an empty output directory",
            plan.out_dir.display(),
            foreign.len(),
            shown.join(", ")
        )));
    }
    let started = unix_now();
    let hash = config_hash(plan);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(plan.parallelism)
        .build()
        .map_err(|e| HarnessError::Config(format!("thread pool: {e}")))?;

    let mut ctx = Ctx { plan, files: ArtifactSet::default(), failures: Vec::new(), summary: String::new() };
    pool.install(|| {
        for kind in plan.experiment.expand() {
            log::info!("experiment {kind}: {} seed(s)", plan.seeds.len());
            match kind {
                ExperimentKind::Throughput => ctx.throughput(),
                ExperimentKind::Sync => ctx.sync(),
                ExperimentKind::Mmtc => ctx.mmtc(),
                ExperimentKind::Tic => ctx.tic(),
                ExperimentKind::Ptr => ctx.ptr(),
                ExperimentKind::All => unreachable!("expanded"),
            }
        }
    });

    let Ctx { mut files, failures, summary, .. } = ctx;
    let mut md = String::new();
    let _ = writeln!(md, "# twinforge run summary\n");
    let _ = writeln!(md, "- scenario: `{}`", plan.spec.name);
    let _ = writeln!(md, "- experiment: {}", plan.experiment);
    let _ = writeln!(md, "- seeds: {}", seed_list(&plan.seeds));
    let _ = writeln!(md, "- config hash: `{hash}`");
    let _ = writeln!(
        md,
        "- status: {}\n",
        if failures.is_empty() { "ok".to_string() } else { format!("{} failed run(s)", failures.len()) }
    );
    md.push_str(&summary);
    if !failures.is_empty() {
        let _ = writeln!(md, "## Failures\n");
        for f in &failures {
            let _ = writeln!(md, "- {f}");
        }
    }
    files.put("summary.md", md);

    let run_info = json!({
        "started_unix": started,
        "finished_unix": unix_now(),
        "parallelism": plan.parallelism,
        "out_dir": plan.out_dir.display().to_string(),
        "config_hash": hash,
    });
    let manifest = files.commit(&plan.out_dir, &hash, &(serde_json::to_string_pretty(&run_info).unwrap() + "\n"))?;
    Ok(RunOutcome { config_hash: hash, manifest, failures })
}

fn unix_now() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0)
}

fn seed_list(seeds: &[u64]) -> String {
    let contiguous = seeds.windows(2).all(|w| w[1] == w[0] + 1);
    if contiguous && seeds.len() > 2 {
        format!("{}..{}", seeds[0], seeds[seeds.len() - 1])
    } else {
        seeds.iter().map(u64::to_string).collect::<Vec<_>>().join(",")
    }
}

/// Serde name of a unit enum value.
fn label<T: Serialize>(t: &T) -> String {
    match serde_json::to_value(t) {
        Ok(Json::String(s)) => s,
        Ok(Json::Null) => "none".into(),
        Ok(v) => v.to_string(),
        Err(_) => "?".into(),
    }
}

fn f6(x: f64) -> String {
    format!("{x:.6}")
}

fn opt6(x: Option<f64>) -> String {
    x.map(f6).unwrap_or_default()
}

fn ci_cell(c: &MeanCi) -> String {
    match c.half_width {
        Some(h) => format!("{:.4} ± {:.4}", c.mean, h),
        None => format!("{:.4}", c.mean),
    }
}

fn graphs_jsonl<'a>(graphs: impl IntoIterator<Item = &'a TwinGraph>) -> String {
    graphs.into_iter().map(|g| serde_json::to_string(g).expect("graph serialises") + "\n").collect()
}

struct Ctx<'a> {
    plan: &'a ExperimentPlan,
    files: ArtifactSet,
    failures: Vec<String>,
    summary: String,
}

impl Ctx<'_> {
    /// Runs `job` for each item in parallel, in item order, recording failures.
    fn fan_out<I, T, E, F>(&mut self, what: &str, items: &[I], job: F) -> Vec<(I, T)>
    where
        I: Clone + Send + Sync + std::fmt::Display,
        T: Send,
        E: std::fmt::Display + Send,
        F: Fn(&I) -> Result<T, E> + Sync + Send,
    {
        let results: Vec<Result<T, E>> = items.par_iter().map(&job).collect();
        let mut ok = Vec::with_capacity(items.len());
        for (item, r) in items.iter().zip(results) {
            match r {
                Ok(v) => ok.push((item.clone(), v)),
                Err(e) => {
                    log::error!("{what} {item}: {e}");
                    self.failures.push(format!("{what} {item}: {e}"));
                }
            }
        }
        ok
    }

    /// `history.jsonl` holds the first experiment's history; later ones get
    /// their own file so each stays a valid increasing sequence.
    fn put_history(&mut self, exp: &str, text: String) {
        let primary = "history.jsonl";
        if self.files.paths().any(|p| p == primary) {
            self.files.put(format!("history_{exp}.jsonl"), text);
        } else {
            self.files.put(primary, text);
        }
    }

    fn throughput(&mut self) {
        let plan = self.plan;
        let mut jobs = Vec::new();
        for &size in &plan.sizes {
            for kind in [ScenarioKind::Base, ScenarioKind::HighDensity] {
                for &seed in &plan.seeds {
                    jobs.push(ThroughputJob { size, kind, seed });
                }
            }
        }
        let runs = self.fan_out("throughput", &jobs, |j| throughput_run(&plan.spec, j));

        let mut runs_csv = String::from(
            "size,scenario,seed,priority,generated,delivered,dropped,hit_rate,mean_throughput,throughput_cov\n",
        );
        let mut history = None;
        let mut per_run = Vec::new();
        for (job, out) in runs {
            let s = &out.summary;
            let _ = writeln!(
                runs_csv,
                "{},{},{},{},{},{},{},{},{},{}",
                job.size,
                label(&job.kind),
                job.seed,
                label(&out.priority),
                s.generated,
                s.delivered,
                s.dropped,
                f6(s.hit_rate),
                f6(s.mean_throughput),
                opt6(s.throughput_cov)
            );
            self.files
                .put(format!("metrics/throughput_{}_{}_s{}.csv", job.size, label(&job.kind), job.seed), out.series_csv);
            if history.is_none() {
                history = Some(out.history);
            }
            per_run.push(json!({
                "size": job.size,
                "scenario": job.kind,
                "seed": job.seed,
                "backend_id": out.backend_id,
                "priority": out.priority,
                "weights": out.weights,
                "summary": out.summary,
            }));
        }
        self.files.put("metrics/throughput_runs.csv", runs_csv);

        let mut agg_csv =
            String::from("size,scenario,runs,mean_cov,cov_ci95,mean_throughput,throughput_ci95,mean_hit_rate\n");
        let mut aggregates = Vec::new();
        let mut table = String::from(
            "| size | random CoV | prioritized CoV | CoV reduction | random throughput | prioritized throughput |\n|---|---|---|---|---|---|\n",
        );
        let mut cov_bars: BTreeMap<ScenarioKind, (Vec<f64>, Vec<f64>)> = BTreeMap::new();
        for &size in &plan.sizes {
            let mut by_kind = BTreeMap::new();
            for kind in [ScenarioKind::Base, ScenarioKind::HighDensity] {
                let sel: Vec<&Json> =
                    per_run.iter().filter(|r| r["size"] == json!(size) && r["scenario"] == json!(kind)).collect();
                let covs: Vec<f64> = sel.iter().filter_map(|r| r["summary"]["throughput_cov"].as_f64()).collect();
                let thr: Vec<f64> = sel.iter().filter_map(|r| r["summary"]["mean_throughput"].as_f64()).collect();
                let hits: Vec<f64> = sel.iter().filter_map(|r| r["summary"]["hit_rate"].as_f64()).collect();
                let cov = mean_ci95(&covs);
                let tp = mean_ci95(&thr);
                let hit = mean_ci95(&hits);
                let _ = writeln!(
                    agg_csv,
                    "{},{},{},{},{},{},{},{}",
                    size,
                    label(&kind),
                    sel.len(),
                    f6(cov.mean),
                    opt6(cov.half_width),
                    f6(tp.mean),
                    opt6(tp.half_width),
                    f6(hit.mean)
                );
                let bars = cov_bars.entry(kind).or_default();
                bars.0.push(cov.mean);
                bars.1.push(cov.half_width.unwrap_or(0.0));
                aggregates.push(json!({ "size": size, "scenario": kind, "runs": sel.len(), "cov": cov, "throughput": tp, "hit_rate": hit }));
                by_kind.insert(kind, (cov, tp));
            }
            let (rc, rt) = by_kind[&ScenarioKind::Base];
            let (pc, pt) = by_kind[&ScenarioKind::HighDensity];
            let reduction =
                if rc.mean > 0.0 { format!("{:.1}%", 100.0 * (1.0 - pc.mean / rc.mean)) } else { "n/a".into() };
            let _ = writeln!(
                table,
                "| {size} | {} | {} | {reduction} | {} | {} |",
                ci_cell(&rc),
                ci_cell(&pc),
                ci_cell(&rt),
                ci_cell(&pt)
            );
        }
        self.files.put("metrics/throughput_cov.csv", agg_csv);
        self.files.put(
            "reports/throughput.json",
            serde_json::to_string_pretty(&json!({
                "experiment": "throughput",
                "seeds": plan.seeds,
                "traffic": plan.spec.sim.or(&throughput_load()),
                "aggregates": aggregates,
                "runs": per_run,
            }))
            .unwrap()
                + "\n",
        );
        let categories: Vec<String> = plan.sizes.iter().map(|s| s.to_string()).collect();
        let series: Vec<BarSeries> = cov_bars
            .into_iter()
            .map(|(k, (v, e))| BarSeries {
                name: if k == ScenarioKind::Base { "random weights".into() } else { "prioritized weights".into() },
                values: v,
                errors: Some(e),
            })
            .collect();
        self.files.put(
            "plots/throughput_cov.svg",
            bar_chart("Throughput CoV by topology size", "CoV of per-slot throughput", &categories, &series),
        );
        if let Some(h) = history {
            self.put_history("throughput", h);
        }
        let _ = writeln!(self.summary, "## Throughput stability\n");
        let _ = writeln!(
            self.summary,
            "Mean coefficient of variation of per-slot throughput with 95% confidence intervals.\n"
        );
        let _ = writeln!(self.summary, "{table}");
    }

    fn sync(&mut self) {
        let plan = self.plan;
        let settings = &plan.spec.sync;
        let world_cfg = WorldConfig { n_twins: settings.n_twins, ..WorldConfig::default() };
        let runs: Vec<(u64, (SyncResult, Option<String>))> = {
            let first = plan.seeds[0];
            self.fan_out("sync seed", &plan.seeds, |&seed| -> Result<_, ServiceError> {
                let world = World::generate(&world_cfg, settings.rounds, seed)?;
                let r = run_right_time_sync(settings, &world, seed)?;
                let h = (seed == first).then(|| graphs_jsonl(world.history.iter().chain(&world.truth)));
                Ok((r, h))
            })
        };
        let mut acc: BTreeMap<(Strategy, u32), (Vec<f64>, Vec<f64>)> = BTreeMap::new();
        let mut reports = Vec::new();
        for (seed, (r, h)) in &runs {
            let mut csv = Vec::new();
            write_sync_csv(&r.records, &mut csv).expect("in-memory write");
            self.files.put(format!("metrics/sync_s{seed}.csv"), csv);
            for rec in &r.records {
                let e = acc.entry((rec.strategy, rec.round)).or_default();
                e.0.push(rec.accuracy);
                e.1.push(rec.realtime_reads as f64);
            }
            if let Some(h) = h {
                self.put_history("sync", h.clone());
            }
            reports.push(r.report());
        }
        let mut csv = String::from("round,strategy,accuracy,accuracy_ci95,realtime_reads\n");
        let mut lines = Vec::new();
        let mut table = String::from(
            "| strategy | round 5 accuracy | final accuracy | realtime reads per seed |\n|---|---|---|---|\n",
        );
        let mut finals = Vec::new();
        for &s in &settings.strategies {
            let mut pts = Vec::new();
            let mut last = None;
            let mut at5 = None;
            let mut reads = 0.0;
            for round in 1..=settings.rounds {
                let Some((a, r)) = acc.get(&(s, round)) else { continue };
                let ci = mean_ci95(a);
                let mean_reads = r.iter().sum::<f64>() / r.len() as f64;
                reads += mean_reads;
                let _ = writeln!(csv, "{round},{s},{},{},{:.3}", f6(ci.mean), opt6(ci.half_width), mean_reads);
                pts.push((round as f64, ci.mean));
                if round == 5 {
                    at5 = Some(ci);
                }
                last = Some(ci);
            }
            let cell = |c: Option<MeanCi>| c.map(|c| ci_cell(&c)).unwrap_or_else(|| "n/a".into());
            let _ = writeln!(table, "| {s} | {} | {} | {reads:.1} |", cell(at5), cell(last));
            finals.push(json!({ "strategy": s, "round5": at5, "final": last, "realtime_reads": reads }));
            lines.push(LineSeries { name: s.to_string(), points: pts });
        }
        self.files.put("metrics/sync_accuracy.csv", csv);
        self.files.put(
            "plots/sync_accuracy.svg",
            line_chart("Twin accuracy per synchronisation round", "round", "accuracy", 1.0, &lines),
        );
        self.files.put(
            "reports/sync.json",
            serde_json::to_string_pretty(&json!({
                "experiment": "sync",
                "seeds": plan.seeds,
                "settings": settings,
                "world": world_cfg,
                "aggregates": finals,
                "runs": reports,
            }))
            .unwrap()
                + "\n",
        );
        let _ = writeln!(self.summary, "## Right-time synchronisation\n");
        let _ = writeln!(
            self.summary,
            "{} rounds at twinning rate {}, mean over {} world(s) with 95% confidence intervals.\n",
            settings.rounds,
            settings.twinning_rate,
            runs.len()
        );
        let _ = writeln!(self.summary, "{table}");
    }

    fn mmtc(&mut self) {
        let plan = self.plan;
        let runs: Vec<(u64, MmtcResult)> = self.fan_out("mmtc seed", &plan.seeds, |&seed| -> Result<_, ServiceError> {
            let backend = make_backend(&plan.spec.backend)?;
            run_mmtc(&plan.spec, seed, backend.as_ref())
        });
        let mut csv =
            String::from("seed,ul_fraction,generated,delivered,hit_rate,coverage,mean_throughput,throughput_cov\n");
        let mut hit: Vec<Vec<f64>> = vec![Vec::new(); UL_SWEEP.len()];
        let mut cov: Vec<Vec<f64>> = vec![Vec::new(); UL_SWEEP.len()];
        for (seed, r) in &runs {
            for (i, p) in r.points.iter().enumerate() {
                let _ = writeln!(
                    csv,
                    "{seed},{:.2},{},{},{},{},{},{}",
                    p.ul_fraction,
                    p.generated,
                    p.delivered,
                    f6(p.hit_rate),
                    f6(p.coverage),
                    f6(p.mean_throughput),
                    opt6(p.throughput_cov)
                );
                hit[i].push(p.hit_rate);
                cov[i].push(p.coverage);
            }
        }
        self.files.put("metrics/mmtc.csv", csv);
        let mut table = String::from("| uplink fraction | deadline hit rate | coverage |\n|---|---|---|\n");
        let mut agg = Vec::new();
        let (mut hv, mut he, mut cv, mut ce) = (Vec::new(), Vec::new(), Vec::new(), Vec::new());
        for (i, ul) in UL_SWEEP.iter().enumerate() {
            let h = mean_ci95(&hit[i]);
            let c = mean_ci95(&cov[i]);
            let _ = writeln!(table, "| {ul:.2} | {} | {} |", ci_cell(&h), ci_cell(&c));
            agg.push(json!({ "ul_fraction": ul, "hit_rate": h, "coverage": c }));
            hv.push(h.mean);
            he.push(h.half_width.unwrap_or(0.0));
            cv.push(c.mean);
            ce.push(c.half_width.unwrap_or(0.0));
        }
        let categories: Vec<String> = UL_SWEEP.iter().map(|u| format!("UL {u:.2}")).collect();
        self.files.put(
            "plots/mmtc.svg",
            bar_chart(
                "mMTC service under uplink load",
                "share",
                &categories,
                &[
                    BarSeries { name: "deadline hit rate".into(), values: hv, errors: Some(he) },
                    BarSeries { name: "coverage".into(), values: cv, errors: Some(ce) },
                ],
            ),
        );
        let reports: Vec<Json> =
            runs.iter().map(|(_, r)| serde_json::to_value(r.report()).expect("report serialises")).collect();
        self.files.put(
            "reports/mmtc.json",
            serde_json::to_string_pretty(
                &json!({ "experiment": "mmtc", "seeds": plan.seeds, "aggregates": agg, "runs": reports }),
            )
            .unwrap()
                + "\n",
        );
        if let Ok(h) = build_topology(plan.spec.size_class, &plan.spec.sim, plan.seeds[0])
            .map_err(ServiceError::from)
            .and_then(|c| prepare_network(&c))
        {
            self.put_history("mmtc", graphs_jsonl(h.0.iter()));
        }
        let _ = writeln!(self.summary, "## mMTC\n");
        let _ = writeln!(self.summary, "{} topology, mean over {} seed(s).\n", plan.spec.size_class, runs.len());
        let _ = writeln!(self.summary, "{table}");
    }

    fn tic(&mut self) {
        let plan = self.plan;
        let tc = TicConfig::default();
        let runs: Vec<(u64, TicResult)> = self.fan_out("tic seed", &plan.seeds, |&seed| -> Result<_, ServiceError> {
            let topo = build_topology(plan.spec.size_class, &plan.spec.sim, seed)?;
            run_tic(&topo, &tc, seed)
        });
        let mut csv = String::from("seed,episodes,trained_loss,fifo_loss\n");
        let mut training = String::from("seed,episode,return\n");
        let (mut tl, mut fl) = (Vec::new(), Vec::new());
        let mut wins = 0;
        for (seed, r) in &runs {
            let _ = writeln!(csv, "{seed},{},{},{}", r.episodes, f6(r.trained_loss()), f6(r.fifo_loss()));
            for (e, ret) in r.training_returns.iter().enumerate() {
                let _ = writeln!(training, "{seed},{e},{ret}");
            }
            tl.push(r.trained_loss());
            fl.push(r.fifo_loss());
            if r.trained_loss() <= r.fifo_loss() {
                wins += 1;
            }
        }
        self.files.put("metrics/tic.csv", csv);
        self.files.put("metrics/tic_training.csv", training);
        let t = mean_ci95(&tl);
        let f = mean_ci95(&fl);
        let categories: Vec<String> = runs.iter().map(|(s, _)| format!("seed {s}")).collect();
        self.files.put(
            "plots/tic_loss.svg",
            bar_chart(
                "Packet loss: learned scheduler vs FIFO",
                "loss rate",
                &categories,
                &[
                    BarSeries { name: "learned".into(), values: tl, errors: None },
                    BarSeries { name: "FIFO".into(), values: fl, errors: None },
                ],
            ),
        );
        let reports: Vec<Json> =
            runs.iter().map(|(_, r)| serde_json::to_value(r.report()).expect("report serialises")).collect();
        self.files.put(
            "reports/tic.json",
            serde_json::to_string_pretty(&json!({
                "experiment": "tic",
                "seeds": plan.seeds,
                "config": tc,
                "aggregates": { "trained_loss": t, "fifo_loss": f, "wins": wins },
                "runs": reports,
            }))
            .unwrap()
                + "\n",
        );
        let _ = writeln!(self.summary, "## TIC scheduling\n");
        let _ = writeln!(self.summary, "| policy | packet loss |\n|---|---|");
        let _ = writeln!(self.summary, "| learned | {} |\n| FIFO | {} |\n", ci_cell(&t), ci_cell(&f));
        let _ = writeln!(self.summary, "Learned policy at or below FIFO on {wins} of {} seed(s).\n", runs.len());
    }

    fn ptr(&mut self) {
        let plan = self.plan;
        let cfg = PtrConfig::default();
        let runs = self.fan_out("ptr seed", &plan.seeds, |&seed| -> Result<_, ServiceError> {
            let inst = random_instance(seed, PTR_BINS, PTR_SIDE, PTR_TRUCK_CAPACITY);
            let r = run_ptr(&inst, &cfg)?;
            Ok((r.report(&inst, seed), r))
        });
        let mut csv = String::from("seed,bins,selected,trips,route_length,missed,missed_bin_rate\n");
        let (mut len, mut miss) = (Vec::new(), Vec::new());
        for (seed, (_, r)) in &runs {
            let _ = writeln!(
                csv,
                "{seed},{PTR_BINS},{},{},{},{},{}",
                r.selected.len(),
                r.trips.len(),
                f6(r.route_length),
                r.missed.len(),
                f6(r.missed_bin_rate)
            );
            len.push(r.route_length);
            miss.push(r.missed_bin_rate);
        }
        self.files.put("metrics/ptr.csv", csv);
        let l = mean_ci95(&len);
        let m = mean_ci95(&miss);
        let categories: Vec<String> = runs.iter().map(|(s, _)| format!("seed {s}")).collect();
        self.files.put(
            "plots/ptr_route_length.svg",
            bar_chart(
                "Planned truck route length",
                "route length",
                &categories,
                &[BarSeries { name: "greedy route".into(), values: len, errors: None }],
            ),
        );
        let reports: Vec<Json> =
            runs.iter().map(|(_, (rep, _))| serde_json::to_value(rep).expect("report serialises")).collect();
        self.files.put(
            "reports/ptr.json",
            serde_json::to_string_pretty(&json!({
                "experiment": "ptr",
                "seeds": plan.seeds,
                "config": cfg,
                "aggregates": { "route_length": l, "missed_bin_rate": m },
                "runs": reports,
            }))
            .unwrap()
                + "\n",
        );
        let _ = writeln!(self.summary, "## Planned truck routing\n");
        let _ = writeln!(self.summary, "| metric | mean (95% CI) |\n|---|---|");
        let _ = writeln!(self.summary, "| route length | {} |\n| missed-bin rate | {} |\n", ci_cell(&l), ci_cell(&m));
    }
}

#[derive(Debug, Clone, Copy)]
struct ThroughputJob {
    size: SizeClass,
    kind: ScenarioKind,
    seed: u64,
}

impl std::fmt::Display for ThroughputJob {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}/{} seed {}", self.size, label(&self.kind), self.seed)
    }
}

struct ThroughputOut {
    backend_id: String,
    priority: Option<PriorityPair>,
    weights: WeightVector,
    summary: SimSummary,
    series_csv: Vec<u8>,
    history: String,
}

/// The scenario for one arm of the throughput comparison: random weights for
/// the base scenario, the scenario's prioritised mode (split by default) for
/// the high-density one.
pub fn throughput_spec(base: &ScenarioSpec, size: SizeClass, kind: ScenarioKind, seed: u64) -> ScenarioSpec {
    let weight_mode = match (kind, base.weight_mode) {
        (ScenarioKind::Base, _) => WeightMode::Random,
        (_, WeightMode::Random) => WeightMode::Split,
        (_, m) => m,
    };
    ScenarioSpec {
        name: format!("{}-{size}", label(&kind)),
        kind,
        size_class: size,
        weight_mode,
        seed,
        sim: base.sim.or(&throughput_load()),
        ..base.clone()
    }
}

fn throughput_run(base: &ScenarioSpec, job: &ThroughputJob) -> Result<ThroughputOut, ServiceError> {
    let spec = throughput_spec(base, job.size, job.kind, job.seed);
    let deployed = build_topology(spec.size_class, &spec.sim, spec.seed)?;
    let (history, realtime) = prepare_network(&deployed)?;
    let backend = make_backend(&spec.backend)?;
    let window = history.window(history.len())?;
    let scenario = generate(&spec, &window, &realtime, backend.as_ref())?;
    let m = run_sim(&scenario.sim_config)?;
    let mut series_csv = Vec::new();
    write_series_csv(&m, &mut series_csv)?;
    Ok(ThroughputOut {
        backend_id: scenario.backend_id,
        priority: scenario.priority,
        weights: scenario.weights,
        summary: SimSummary::new(&m, &scenario.sim_config),
        series_csv,
        history: graphs_jsonl(history.iter()),
    })
}
