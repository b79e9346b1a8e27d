use crate::scenario::ServiceKind;
use crate::twin::{DigitalTwin, HistoryStore, TwinGraph};

use super::ServiceError;

/// Cleaned service input: the history window and the realtime twins that
/// carry every property the service needs.
#[derive(Debug, Clone, PartialEq)]
pub struct ServiceDataset {
    pub service: ServiceKind,
    pub history: Vec<TwinGraph>,
    pub twins: Vec<DigitalTwin>,
    /// Ids of twins removed for missing required properties.
    pub dropped: Vec<String>,
}

/// Required dynamic properties per (service, model).
fn required(service: ServiceKind, model: &str) -> &'static [&'static str] {
    match (service, model) {
        (ServiceKind::Ptr, "bin") => &["fill_level", "fill_rate"],
        (ServiceKind::Mmtc | ServiceKind::Tic, "gateway") => &["generated", "delivered"],
        (ServiceKind::Mmtc | ServiceKind::Tic, "sensor") => &["uplink"],
        _ => &[],
    }
}

fn min_history(service: ServiceKind) -> usize {
    match service {
        ServiceKind::Sync => 1,
        _ => 0,
    }
}

pub fn capture_data(
    history: &HistoryStore,
    realtime: &TwinGraph,
    service: ServiceKind,
) -> Result<ServiceDataset, ServiceError> {
    let need = min_history(service);
    if history.len() < need {
        return Err(ServiceError::InsufficientHistory { need, have: history.len() });
    }
    let mut twins = Vec::with_capacity(realtime.len());
    let mut dropped = Vec::new();
    for t in realtime.twins.values() {
        let complete = required(service, &t.model_id).iter().all(|p| t.properties.contains_key(*p));
        if complete {
            twins.push(t.clone());
        } else {
            dropped.push(t.twin_id.clone());
        }
    }
    Ok(ServiceDataset { service, history: history.to_vec(), twins, dropped })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ptr_drops_bins_missing_fill_level() {
        let mut g = TwinGraph::new(1);
        for i in 0..10 {
            let mut t = DigitalTwin::new(format!("bin-{i}"), "bin").with_dynamic("fill_rate", 0.1, 1);
            if i != 3 {
                t = t.with_dynamic("fill_level", 0.5, 1);
            }
            g.twins.insert(t.twin_id.clone(), t);
        }
        let d = capture_data(&HistoryStore::default(), &g, ServiceKind::Ptr).unwrap();
        assert_eq!(d.twins.len(), 9);
        assert_eq!(d.dropped, vec!["bin-3".to_string()]);
    }

    #[test]
    fn sync_needs_history() {
        let g = TwinGraph::new(1);
        assert_eq!(
            capture_data(&HistoryStore::default(), &g, ServiceKind::Sync),
            Err(ServiceError::InsufficientHistory { need: 1, have: 0 })
        );
        let mut h = HistoryStore::default();
        h.snapshot(&g).unwrap();
        assert!(capture_data(&h, &g, ServiceKind::Sync).is_ok());
    }
}
