use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::graph::{DigitalTwin, TwinGraph, Value};
use super::model::{ModelRegistry, Mutability};
use super::TwinError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TelemetryEvent {
    pub twin_id: String,
    pub channel: String,
    #[serde(default)]
    pub payload: BTreeMap<String, Value>,
    pub timestamp: u64,
}

impl TelemetryEvent {
    pub fn new(twin_id: &str, channel: &str, timestamp: u64) -> Self {
        TelemetryEvent { twin_id: twin_id.into(), channel: channel.into(), payload: BTreeMap::new(), timestamp }
    }

    pub fn with(mut self, key: &str, value: impl Into<Value>) -> Self {
        self.payload.insert(key.into(), value.into());
        self
    }
}

/// A property update requested by a telemetry handler.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Action {
    pub twin_id: String,
    pub property: String,
    pub value: Value,
}

pub type TelemetryHandler = Box<dyn Fn(&DigitalTwin, &TelemetryEvent) -> Vec<Action> + Send + Sync>;

/// Channel name to handler.
#[derive(Default)]
pub struct TelemetryRoutes {
    handlers: BTreeMap<String, TelemetryHandler>,
}

impl TelemetryRoutes {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn route(
        mut self,
        channel: &str,
        handler: impl Fn(&DigitalTwin, &TelemetryEvent) -> Vec<Action> + Send + Sync + 'static,
    ) -> Self {
        self.handlers.insert(channel.into(), Box::new(handler));
        self
    }

    /// Handler that copies every payload entry onto the same-named property
    /// of the emitting twin.
    pub fn mirror(channel: &str) -> Self {
        Self::new().route(channel, |twin, ev| {
            ev.payload
                .iter()
                .map(|(k, v)| Action { twin_id: twin.twin_id.clone(), property: k.clone(), value: v.clone() })
                .collect()
        })
    }
}

/// Delivers `event` to its routed handler and applies the returned updates
/// synchronously. Returns the actions that were applied.
///
/// Updates aimed at static, missing or mistyped properties are skipped.
/// A declared channel without a registered handler is a no-op.
pub fn emit_telemetry(
    graph: &mut TwinGraph,
    event: &TelemetryEvent,
    routes: &TelemetryRoutes,
    registry: &ModelRegistry,
) -> Result<Vec<Action>, TwinError> {
    let twin = graph.twins.get(&event.twin_id).ok_or_else(|| TwinError::UnknownTwin(event.twin_id.clone()))?;
    let declared = registry.get(&twin.model_id).is_some_and(|m| m.telemetry.contains(&event.channel));
    if !declared {
        return Err(TwinError::UnknownChannel { channel: event.channel.clone(), model: twin.model_id.clone() });
    }
    let Some(handler) = routes.handlers.get(&event.channel) else {
        return Ok(Vec::new());
    };
    let requested = handler(twin, event);
    let mut applied = Vec::with_capacity(requested.len());
    for action in requested {
        let Some(target) = graph.twins.get_mut(&action.twin_id) else {
            log::warn!("telemetry action for unknown twin `{}` skipped", action.twin_id);
            continue;
        };
        let dynamic = target.properties.get(&action.property).is_some_and(|p| p.mutability == Mutability::Dynamic);
        if !dynamic {
            log::warn!("telemetry action on `{}.{}` skipped", action.twin_id, action.property);
            continue;
        }
        match target.set_dynamic(&action.property, action.value.clone(), event.timestamp) {
            Ok(()) => applied.push(action),
            Err(e) => log::warn!("telemetry action skipped: {e}"),
        }
    }
    graph.timestamp = graph.timestamp.max(event.timestamp);
    Ok(applied)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::twin::{TwinModel, ValueKind};

    fn setup() -> (TwinGraph, ModelRegistry) {
        let reg = ModelRegistry::from_models([TwinModel::new("bin")
            .with_property("fill_level", Mutability::Dynamic, ValueKind::Number)
            .with_property("volume", Mutability::Static, ValueKind::Number)
            .with_telemetry("fill")
            .with_telemetry("door")])
        .unwrap();
        let mut g = TwinGraph::new(0);
        for id in ["b1", "b2"] {
            g.add_twin(
                DigitalTwin::new(id, "bin").with_dynamic("fill_level", 0.1, 0).with_static("volume", 240.0),
                &reg,
            )
            .unwrap();
        }
        (g, reg)
    }

    #[test]
    fn routed_event_updates_dynamic_property() {
        let (mut g, reg) = setup();
        let routes = TelemetryRoutes::mirror("fill");
        let ev = TelemetryEvent::new("b1", "fill", 10).with("fill_level", 0.6).with("volume", 1.0);
        let applied = emit_telemetry(&mut g, &ev, &routes, &reg).unwrap();
        assert_eq!(applied.len(), 1);
        assert_eq!(g.twins["b1"].number("fill_level"), Some(0.6));
        assert_eq!(g.twins["b1"].properties["fill_level"].last_updated, 10);
        assert_eq!(g.twins["b1"].number("volume"), Some(240.0));
        assert_eq!(g.twins["b2"].number("fill_level"), Some(0.1));
        assert_eq!(g.timestamp, 10);
    }

    #[test]
    fn unregistered_channel_is_noop() {
        let (mut g, reg) = setup();
        let before = g.clone();
        let ev = TelemetryEvent::new("b1", "door", 3).with("fill_level", 0.9);
        let applied = emit_telemetry(&mut g, &ev, &TelemetryRoutes::mirror("fill"), &reg).unwrap();
        assert!(applied.is_empty());
        assert_eq!(g.twins, before.twins);
    }

    #[test]
    fn unknown_twin_and_channel() {
        let (mut g, reg) = setup();
        let routes = TelemetryRoutes::mirror("fill");
        assert_eq!(
            emit_telemetry(&mut g, &TelemetryEvent::new("zz", "fill", 1), &routes, &reg),
            Err(TwinError::UnknownTwin("zz".into()))
        );
        assert!(matches!(
            emit_telemetry(&mut g, &TelemetryEvent::new("b1", "smoke", 1), &routes, &reg),
            Err(TwinError::UnknownChannel { .. })
        ));
    }
}
