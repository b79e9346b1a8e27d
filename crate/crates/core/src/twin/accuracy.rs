use std::collections::BTreeSet;

use super::graph::{TwinGraph, Value};

pub const DEFAULT_TOLERANCE: f64 = 0.02;

/// Fraction of dynamic properties in `twin` that match `reference`.
///
/// The denominator runs over the union of twin ids and, per twin, the union
/// of dynamic property paths (components included). A property missing on
/// either side is a mismatch. Numbers match when
/// `|a - b| <= tol * max(1, |b|)`; other values must be equal.
///
/// Graphs without any dynamic property score 1.0 when their twin id sets
/// agree and 0.0 otherwise.
pub fn twin_accuracy(twin: &TwinGraph, reference: &TwinGraph, tol: f64) -> f64 {
    let ids: BTreeSet<&String> = twin.twins.keys().chain(reference.twins.keys()).collect();
    let mut total = 0usize;
    let mut matched = 0usize;
    for id in &ids {
        let a = twin.twins.get(*id).map(|t| t.dynamic_values()).unwrap_or_default();
        let b = reference.twins.get(*id).map(|t| t.dynamic_values()).unwrap_or_default();
        let names: BTreeSet<&String> = a.keys().chain(b.keys()).collect();
        for name in names {
            total += 1;
            if let (Some(x), Some(y)) = (a.get(name), b.get(name)) {
                if values_match(x, y, tol) {
                    matched += 1;
                }
            }
        }
    }
    if total == 0 {
        let same = twin.twins.keys().eq(reference.twins.keys());
        return if same { 1.0 } else { 0.0 };
    }
    matched as f64 / total as f64
}

fn values_match(a: &Value, b: &Value, tol: f64) -> bool {
    match (a, b) {
        (Value::Number(x), Value::Number(y)) => (x - y).abs() <= tol * y.abs().max(1.0),
        _ => a == b,
    }
}
