use std::collections::BTreeMap;
use std::fmt::Write;

use serde::{Deserialize, Serialize};

use crate::scenario::ServiceKind;

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

/// Service outcome, serialisable to JSON and rendered as Markdown.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ServiceReport {
    pub service: ServiceKind,
    pub title: String,
    pub seed: u64,
    pub metrics: BTreeMap<String, f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub flags: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub table: Option<Table>,
}

impl ServiceReport {
    pub fn new(service: ServiceKind, title: impl Into<String>, seed: u64) -> Self {
        ServiceReport { service, title: title.into(), seed, metrics: BTreeMap::new(), flags: Vec::new(), table: None }
    }

    pub fn metric(mut self, name: &str, value: f64) -> Self {
        self.metrics.insert(name.into(), value);
        self
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serialises")
    }

    pub fn to_markdown(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "## {} (seed {})\n", self.title, self.seed);
        if !self.flags.is_empty() {
            let _ = writeln!(s, "Flags: {}\n", self.flags.join(", "));
        }
        if !self.metrics.is_empty() {
            let _ = writeln!(s, "| metric | value |\n|---|---|");
            for (k, v) in &self.metrics {
                let _ = writeln!(s, "| {k} | {v:.4} |");
            }
            s.push('\n');
        }
        if let Some(t) = &self.table {
            let _ = writeln!(s, "| {} |", t.columns.join(" | "));
            let _ = writeln!(s, "|{}", "---|".repeat(t.columns.len()));
            for r in &t.rows {
                let _ = writeln!(s, "| {} |", r.join(" | "));
            }
            s.push('\n');
        }
        s
    }
}
