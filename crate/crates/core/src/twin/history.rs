use std::collections::VecDeque;
use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use super::graph::TwinGraph;
use super::TwinError;

pub const DEFAULT_HISTORY_CAPACITY: usize = 64;

/// Bounded ring of deep-copied graph snapshots with strictly increasing
/// timestamps. The oldest snapshot is evicted first.
#[derive(Debug, Clone, PartialEq)]
pub struct HistoryStore {
    capacity: usize,
    snapshots: VecDeque<TwinGraph>,
}

impl Default for HistoryStore {
    fn default() -> Self {
        HistoryStore { capacity: DEFAULT_HISTORY_CAPACITY, snapshots: VecDeque::new() }
    }
}

impl HistoryStore {
    pub fn with_capacity(capacity: usize) -> Result<Self, TwinError> {
        if capacity == 0 {
            return Err(TwinError::ZeroCapacity);
        }
        Ok(HistoryStore { capacity, snapshots: VecDeque::with_capacity(capacity) })
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn len(&self) -> usize {
        self.snapshots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.snapshots.is_empty()
    }

    pub fn latest(&self) -> Option<&TwinGraph> {
        self.snapshots.back()
    }

    pub fn snapshot(&mut self, graph: &TwinGraph) -> Result<(), TwinError> {
        if let Some(last) = self.snapshots.back() {
            if graph.timestamp <= last.timestamp {
                return Err(TwinError::NonMonotoneTimestamp { last: last.timestamp, got: graph.timestamp });
            }
        }
        if self.snapshots.len() == self.capacity {
            self.snapshots.pop_front();
        }
        self.snapshots.push_back(graph.clone());
        Ok(())
    }

    /// The `k` most recent snapshots, oldest first.
    pub fn window(&self, k: usize) -> Result<Vec<&TwinGraph>, TwinError> {
        let len = self.snapshots.len();
        if k == 0 || k > len {
            return Err(TwinError::OutOfRange { k, len });
        }
        Ok(self.snapshots.range(len - k..).collect())
    }

    pub fn iter(&self) -> impl Iterator<Item = &TwinGraph> {
        self.snapshots.iter()
    }

    /// Copies of all snapshots, oldest first.
    pub fn to_vec(&self) -> Vec<TwinGraph> {
        self.snapshots.iter().cloned().collect()
    }
}

/// Appends one graph as a single JSON line.
pub fn append_jsonl(path: &Path, graph: &TwinGraph) -> Result<(), TwinError> {
    let mut f = OpenOptions::new().create(true).append(true).open(path)?;
    let line = serde_json::to_string(graph)?;
    writeln!(f, "{line}")?;
    Ok(())
}

/// Rebuilds a store from a JSON-lines file, keeping the newest `capacity`.
pub fn load_jsonl(path: &Path, capacity: usize) -> Result<HistoryStore, TwinError> {
    let mut store = HistoryStore::with_capacity(capacity)?;
    let reader = BufReader::new(File::open(path)?);
    for line in reader.lines() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let g: TwinGraph = serde_json::from_str(&line)?;
        store.snapshot(&g)?;
    }
    Ok(store)
}
