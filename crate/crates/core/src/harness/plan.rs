use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::HarnessError;
use crate::scenario::{BackendKind, ScenarioSpec, ServiceKind};
use crate::sim::{SimOverrides, SizeClass};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ExperimentKind {
    /// Base vs high-density throughput stability across topology sizes.
    Throughput,
    Sync,
    Mmtc,
    Tic,
    Ptr,
    All,
}

impl ExperimentKind {
    /// The experiment a spec's service maps to when none is requested.
    pub fn for_service(s: ServiceKind) -> Self {
        match s {
            ServiceKind::Mmtc => ExperimentKind::Mmtc,
            ServiceKind::Tic => ExperimentKind::Tic,
            ServiceKind::Sync => ExperimentKind::Sync,
            ServiceKind::Ptr => ExperimentKind::Ptr,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::Throughput => "throughput",
            ExperimentKind::Sync => "sync",
            ExperimentKind::Mmtc => "mmtc",
            ExperimentKind::Tic => "tic",
            ExperimentKind::Ptr => "ptr",
            ExperimentKind::All => "all",
        }
    }

    /// Concrete experiments, expanding `All`.
    pub fn expand(self) -> Vec<ExperimentKind> {
        use ExperimentKind::*;
        match self {
            All => vec![Throughput, Sync, Mmtc, Tic, Ptr],
            k => vec![k],
        }
    }
}

impl fmt::Display for ExperimentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ExperimentKind {
    type Err = HarnessError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        use ExperimentKind::*;
        [Throughput, Sync, Mmtc, Tic, Ptr, All]
            .into_iter()
            .find(|k| k.name().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| HarnessError::Config(format!("unknown experiment `{s}`")))
    }
}

/// Traffic used by the throughput experiment where the scenario's `[sim]`
/// section is silent: offered load above gateway capacity on the large
/// preset with two-slot deadlines, so scheduling order decides which
/// packets expire.
pub fn throughput_load() -> SimOverrides {
    SimOverrides { rearrival_prob: Some(0.25), deadline_slots: Some(2), ..SimOverrides::default() }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentPlan {
    pub spec: ScenarioSpec,
    pub seeds: Vec<u64>,
    /// Topology sizes for the throughput experiment.
    pub sizes: Vec<SizeClass>,
    pub out_dir: PathBuf,
    /// Maximum concurrent runs; 0 uses every core.
    pub parallelism: usize,
    pub experiment: ExperimentKind,
}

impl ExperimentPlan {
    /// A plan over the scenario's own seed, size and service.
    pub fn new(spec: ScenarioSpec, out_dir: impl Into<PathBuf>) -> Self {
        ExperimentPlan {
            seeds: vec![spec.seed],
            sizes: vec![spec.size_class],
            experiment: ExperimentKind::for_service(spec.service),
            spec,
            out_dir: out_dir.into(),
            parallelism: 0,
        }
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        if self.seeds.is_empty() {
            return Err(HarnessError::Config("no seeds".into()));
        }
        let mut seen = self.seeds.clone();
        seen.sort_unstable();
        seen.dedup();
        if seen.len() != self.seeds.len() {
            return Err(HarnessError::Config("duplicate seeds".into()));
        }
        if self.sizes.is_empty() && self.experiment.expand().contains(&ExperimentKind::Throughput) {
            return Err(HarnessError::Config("no topology sizes".into()));
        }
        self.spec.validate().map_err(|e| HarnessError::Config(e.to_string()))?;
        if self.spec.backend.kind == BackendKind::Remote {
            crate::scenario::RemoteBackend::from_env(&self.spec.backend)
                .map_err(|e| HarnessError::Config(e.to_string()))?;
        }
        if let Some(f) = &self.spec.backend.fixture {
            crate::scenario::MockBackend::from_fixture(f).map_err(|e| HarnessError::Config(e.to_string()))?;
        }
        Ok(())
    }
}

/// Parses `1..10` (inclusive), `3`, or a comma list mixing both.
pub fn parse_seeds(s: &str) -> Result<Vec<u64>, HarnessError> {
    let bad = || HarnessError::Config(format!("invalid seed list `{s}`"));
    let mut out = Vec::new();
    for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        if let Some((a, b)) = part.split_once("..") {
            let b = b.strip_prefix('=').unwrap_or(b);
            let a: u64 = a.trim().parse().map_err(|_| bad())?;
            let b: u64 = b.trim().parse().map_err(|_| bad())?;
            if b < a {
                return Err(bad());
            }
            out.extend(a..=b);
        } else {
            out.push(part.parse().map_err(|_| bad())?);
        }
    }
    if out.is_empty() {
        return Err(bad());
    }
    Ok(out)
}

pub fn parse_sizes(s: &str) -> Result<Vec<SizeClass>, HarnessError> {
    let sizes: Vec<SizeClass> = s
        .split(',')
        .map(str::trim)
        .filter(|p| !p.is_empty())
        .map(|p| p.parse::<SizeClass>().map_err(HarnessError::Config))
        .collect::<Result<_, _>>()?;
    if sizes.is_empty() {
        return Err(HarnessError::Config(format!("invalid size list `{s}`")));
    }
    Ok(sizes)
}
