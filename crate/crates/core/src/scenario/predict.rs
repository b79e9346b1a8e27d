use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::ScenarioError;
use crate::rng::{seeded, stream};
use crate::twin::{DigitalTwin, Mutability, TwinGraph, Value};

/// Damping of the rule generator toward the population mean of the
/// synchronised twins.
pub const DEFAULT_DAMPING: f64 = 0.5;

/// How the next twin state is predicted; also recorded as provenance.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Strategy {
    /// Historical twins only.
    #[serde(rename = "H")]
    Historical,
    /// Historical twins plus a synchronised realtime subset.
    #[serde(rename = "H+R")]
    HistoricalRealtime,
    /// As above, with generated states for the unsynchronised twins.
    #[serde(rename = "H+R+GAI")]
    Generative,
}

impl Strategy {
    pub const ALL: [Strategy; 3] = [Strategy::Historical, Strategy::HistoricalRealtime, Strategy::Generative];

    pub fn label(self) -> &'static str {
        match self {
            Strategy::Historical => "H",
            Strategy::HistoricalRealtime => "H+R",
            Strategy::Generative => "H+R+GAI",
        }
    }

    pub fn uses_realtime(self) -> bool {
        self != Strategy::Historical
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for Strategy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_uppercase().as_str() {
            "H" => Ok(Strategy::Historical),
            "H+R" => Ok(Strategy::HistoricalRealtime),
            "H+R+GAI" => Ok(Strategy::Generative),
            other => Err(format!("unknown strategy `{other}`")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Prediction {
    pub graph: TwinGraph,
    /// Twins that took exact realtime values.
    pub synced: BTreeSet<String>,
}

/// Predicts the next twin graph.
///
/// - `H`: every dynamic numeric property follows the linear trend of the
///   last two snapshots (last value with a single snapshot).
/// - `H+R`: a seeded choice of `ceil(synced_fraction * N)` twins copies the
///   realtime graph; the rest follow the trend.
/// - `H+R+GAI`: as `H+R`, but unsynchronised twins take the trend damped
///   toward the mean of the synchronised twins' realtime values:
///   `trend + damping * (mean - trend)`.
///
/// Realtime structure is used for the realtime strategies; twins or
/// properties with no history keep their realtime value.
pub fn predict_next_state(
    history: &[&TwinGraph],
    realtime: &TwinGraph,
    strategy: Strategy,
    synced_fraction: f64,
    damping: f64,
    seed: u64,
) -> Result<Prediction, ScenarioError> {
    let last = *history.last().ok_or(ScenarioError::EmptyHistory)?;
    let prev = history.len().checked_sub(2).map(|i| history[i]);
    let step = prev.map_or(1, |p| last.timestamp.saturating_sub(p.timestamp).max(1));

    if strategy == Strategy::Historical {
        let mut graph = last.clone();
        for twin in graph.twins.values_mut() {
            let id = twin.twin_id.clone();
            for_each_dynamic(twin, "", &mut |path, v| {
                if let Some(t) = trend(last, prev, &id, path) {
                    *v = Value::Number(t);
                }
            });
        }
        graph.timestamp = last.timestamp + step;
        return Ok(Prediction { graph, synced: BTreeSet::new() });
    }

    if !(0.0..=1.0).contains(&synced_fraction) {
        return Err(ScenarioError::Config(format!("synced_fraction {synced_fraction} outside [0, 1]")));
    }
    let ids: Vec<&String> = realtime.twins.keys().collect();
    let k = ((synced_fraction * ids.len() as f64) - 1e-9).ceil().max(0.0) as usize;
    let mut shuffled = ids.clone();
    shuffled.shuffle(&mut seeded(seed, stream::SYNC_SELECTION));
    let synced: BTreeSet<String> = shuffled.into_iter().take(k.min(ids.len())).cloned().collect();

    let means = if strategy == Strategy::Generative { synced_means(realtime, &synced) } else { BTreeMap::new() };

    let mut graph = realtime.clone();
    for twin in graph.twins.values_mut() {
        if synced.contains(&twin.twin_id) {
            continue;
        }
        let id = twin.twin_id.clone();
        for_each_dynamic(twin, "", &mut |path, v| {
            if let Some(t) = trend(last, prev, &id, path) {
                let p = match means.get(path) {
                    Some(m) => t + damping * (m - t),
                    None => t,
                };
                *v = Value::Number(p);
            }
        });
    }
    graph.timestamp = realtime.timestamp.max(last.timestamp + step);
    Ok(Prediction { graph, synced })
}

/// Linear trend of a numeric dynamic property, `None` when the last
/// snapshot has no numeric value for it.
fn trend(last: &TwinGraph, prev: Option<&TwinGraph>, twin: &str, path: &str) -> Option<f64> {
    let l = lookup(last, twin, path)?;
    match prev.and_then(|p| lookup(p, twin, path)) {
        Some(p) => Some(l + (l - p)),
        None => Some(l),
    }
}

fn lookup(g: &TwinGraph, twin: &str, path: &str) -> Option<f64> {
    let mut t: &DigitalTwin = g.twins.get(twin)?;
    let mut parts: Vec<&str> = path.split('/').collect();
    let prop = parts.pop()?;
    for c in parts {
        t = t.components.iter().find(|x| x.twin_id == c)?;
    }
    let p = t.properties.get(prop)?;
    if p.mutability != Mutability::Dynamic {
        return None;
    }
    p.value.as_f64()
}

fn synced_means(realtime: &TwinGraph, synced: &BTreeSet<String>) -> BTreeMap<String, f64> {
    let mut acc: BTreeMap<String, (f64, usize)> = BTreeMap::new();
    for id in synced {
        if let Some(t) = realtime.twins.get(id) {
            for (path, v) in t.dynamic_values() {
                if let Some(x) = v.as_f64() {
                    let e = acc.entry(path).or_insert((0.0, 0));
                    e.0 += x;
                    e.1 += 1;
                }
            }
        }
    }
    acc.into_iter().map(|(k, (s, n))| (k, s / n as f64)).collect()
}

fn for_each_dynamic(twin: &mut DigitalTwin, prefix: &str, f: &mut impl FnMut(&str, &mut Value)) {
    for (name, p) in twin.properties.iter_mut() {
        if p.mutability == Mutability::Dynamic && matches!(p.value, Value::Number(_)) {
            f(&format!("{prefix}{name}"), &mut p.value);
        }
    }
    for c in twin.components.iter_mut() {
        let sub = format!("{prefix}{}/", c.twin_id);
        for_each_dynamic(c, &sub, f);
    }
}
