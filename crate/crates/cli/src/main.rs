//! `twinforge`: run scenario-twin experiments from spec files.
//!
//! Exit status: 0 on success, 1 when some runs failed (artifacts for the
//! rest are still written), 2 on a config error (nothing written).

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};
use twinforge::harness::{
    parse_seeds, parse_sizes, run_experiment, ExperimentKind, ExperimentPlan, HarnessError, RunOutcome,
};
use twinforge::kpi::WeightMode;
use twinforge::scenario::{BackendKind, ScenarioKind, ScenarioSpec, ServiceKind, Strategy};
use twinforge::sim::SizeClass;

#[derive(Parser, Debug)]
#[command(name = "twinforge", version, about = "Scenario-twin experiments for IoT network digital twins")]
struct Cli {
    /// More log output (-v info, -vv debug). RUST_LOG takes precedence.
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run the experiment a spec file describes.
    Run {
        spec: PathBuf,
        /// Experiment to run; defaults to the scenario's service.
        #[arg(long)]
        experiment: Option<String>,
        /// Topology sizes for the throughput experiment, e.g. small,large.
        #[arg(long)]
        sizes: Option<String>,
        #[command(flatten)]
        common: Common,
    },
    /// Throughput stability of base vs high-density scenarios across sizes.
    Sweep {
        #[arg(long)]
        spec: Option<PathBuf>,
        #[arg(long, default_value = "small,medium,large")]
        sizes: String,
        #[command(flatten)]
        common: Common,
    },
    /// Right-time synchronisation accuracy per round and strategy.
    Sync {
        #[arg(long)]
        spec: Option<PathBuf>,
        #[arg(long)]
        rounds: Option<u32>,
        /// Twinning rate: share of twins read from the network per round.
        #[arg(long)]
        rate: Option<f64>,
        /// Comma list of H, H+R, H+R+GAI.
        #[arg(long)]
        strategies: Option<String>,
        #[command(flatten)]
        common: Common,
    },
    /// Parse and validate a spec file without running anything.
    Validate { spec: PathBuf },
}

#[derive(Args, Debug)]
struct Common {
    /// Single seed; overrides --seeds and the scenario's seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Seed list, e.g. 1..10 or 1,4,9.
    #[arg(long)]
    seeds: Option<String>,
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// rule | mock | remote
    #[arg(long)]
    backend: Option<String>,
    /// Concurrent runs; 0 uses every core.
    #[arg(long, default_value_t = 0)]
    parallelism: usize,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match dispatch(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            let config = e.downcast_ref::<HarnessError>().is_some_and(|h| matches!(h, HarnessError::Config(_)));
            ExitCode::from(if config { 2 } else { 1 })
        }
    }
}

fn config_err(msg: impl Into<String>) -> anyhow::Error {
    HarnessError::Config(msg.into()).into()
}

fn load_spec(path: &Path) -> anyhow::Result<ScenarioSpec> {
    ScenarioSpec::from_path(path).map_err(|e| config_err(e.to_string()))
}

fn dispatch(cmd: Command) -> anyhow::Result<ExitCode> {
    match cmd {
        Command::Validate { spec } => {
            let s = load_spec(&spec)?;
            s.validate().map_err(|e| config_err(format!("{}: {e}", spec.display())))?;
            println!(
                "{}: ok ({} scenario `{}`, {} topology, {} service)",
                spec.display(),
                kind_name(s.kind),
                s.name,
                s.size_class,
                service_name(s.service)
            );
            Ok(ExitCode::SUCCESS)
        }
        Command::Run { spec, experiment, sizes, common } => {
            let s = load_spec(&spec)?;
            let mut plan = ExperimentPlan::new(s, &common.out);
            if let Some(e) = experiment {
                plan.experiment = e.parse()?;
            }
            if let Some(sz) = sizes {
                plan.sizes = parse_sizes(&sz)?;
            }
            execute(plan, &common, None)
        }
        Command::Sweep { spec, sizes, common } => {
            let s = match spec {
                Some(p) => load_spec(&p)?,
                None => {
                    ScenarioSpec::new(ScenarioKind::HighDensity, SizeClass::Large, ServiceKind::Mmtc, WeightMode::Split)
                }
            };
            let mut plan = ExperimentPlan::new(s, &common.out);
            plan.experiment = ExperimentKind::Throughput;
            plan.sizes = parse_sizes(&sizes)?;
            execute(plan, &common, Some("1..10"))
        }
        Command::Sync { spec, rounds, rate, strategies, common } => {
            let mut s = match spec {
                Some(p) => load_spec(&p)?,
                None => ScenarioSpec::new(
                    ScenarioKind::Synchronization,
                    SizeClass::Medium,
                    ServiceKind::Sync,
                    WeightMode::Random,
                ),
            };
            if let Some(r) = rounds {
                s.sync.rounds = r;
            }
            if let Some(r) = rate {
                s.sync.twinning_rate = r;
            }
            if let Some(list) = strategies {
                s.sync.strategies = list
                    .split(',')
                    .map(|x| x.trim().parse::<Strategy>().map_err(|e| config_err(e.to_string())))
                    .collect::<anyhow::Result<_>>()?;
            }
            let mut plan = ExperimentPlan::new(s, &common.out);
            plan.experiment = ExperimentKind::Sync;
            execute(plan, &common, Some("1..20"))
        }
    }
}

fn kind_name(k: ScenarioKind) -> &'static str {
    match k {
        ScenarioKind::Base => "base",
        ScenarioKind::HighDensity => "high-density",
        ScenarioKind::Synchronization => "synchronization",
    }
}

fn service_name(s: ServiceKind) -> &'static str {
    match s {
        ServiceKind::Mmtc => "mMTC",
        ServiceKind::Tic => "TIC",
        ServiceKind::Sync => "sync",
        ServiceKind::Ptr => "PTR",
    }
}

fn execute(mut plan: ExperimentPlan, common: &Common, default_seeds: Option<&str>) -> anyhow::Result<ExitCode> {
    if let Some(b) = &common.backend {
        plan.spec.backend.kind = b.parse::<BackendKind>().map_err(|e| config_err(e.to_string()))?;
    }
    plan.parallelism = common.parallelism;
    plan.seeds = match (common.seed, &common.seeds, default_seeds) {
        (Some(s), _, _) => {
            plan.spec.seed = s;
            vec![s]
        }
        (None, Some(list), _) => parse_seeds(list)?,
        (None, None, Some(d)) => parse_seeds(d)?,
        (None, None, None) => plan.seeds,
    };
    let outcome = run_experiment(&plan).context("experiment failed")?;
    report(&plan, &outcome);
    Ok(if outcome.success() { ExitCode::SUCCESS } else { ExitCode::from(1) })
}

fn report(plan: &ExperimentPlan, o: &RunOutcome) {
    println!(
        "{} experiment, {} seed(s): {} file(s) in {} (config {})",
        plan.experiment,
        plan.seeds.len(),
        o.manifest.files.len(),
        plan.out_dir.display(),
        &o.config_hash[..12]
    );
    for f in &o.failures {
        eprintln!("failed: {f}");
    }
}
