//! Digital-twin data model, live graph, telemetry routing, history and accuracy.

mod accuracy;
mod graph;
mod history;
mod model;
mod telemetry;

pub use accuracy::{twin_accuracy, DEFAULT_TOLERANCE};
pub use graph::{DigitalTwin, Property, Relationship, TwinGraph, Value};
pub use history::{append_jsonl, load_jsonl, HistoryStore, DEFAULT_HISTORY_CAPACITY};
pub use model::{ModelRegistry, Mutability, PropertySchema, TwinModel, ValueKind};
pub use telemetry::{emit_telemetry, Action, TelemetryEvent, TelemetryHandler, TelemetryRoutes};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TwinError {
    #[error("duplicate id `{0}`")]
    DuplicateId(String),
    #[error("schema violation on `{twin}`: {reason}")]
    SchemaViolation { twin: String, reason: String },
    #[error("invalid model `{model}`: {reason}")]
    InvalidModel { model: String, reason: String },
    #[error("unknown model `{0}`")]
    UnknownModel(String),
    #[error("unknown relationship endpoint `{0}`")]
    UnknownEndpoint(String),
    #[error("relationship `{name}` not permitted by model `{model}`")]
    NameNotPermitted { name: String, model: String },
    #[error("relationship {source_id} -[{name}]-> {target_id} already exists")]
    DuplicateRelationship { source_id: String, target_id: String, name: String },
    #[error("relationship source and target are both `{0}`")]
    SelfLoop(String),
    #[error("unknown twin `{0}`")]
    UnknownTwin(String),
    #[error("channel `{channel}` is not declared by model `{model}`")]
    UnknownChannel { channel: String, model: String },
    #[error("property `{property}` of `{twin}` is static")]
    StaticProperty { twin: String, property: String },
    #[error("snapshot timestamp {got} is not after {last}")]
    NonMonotoneTimestamp { last: u64, got: u64 },
    #[error("window {k} out of range for {len} snapshots")]
    OutOfRange { k: usize, len: usize },
    #[error("history capacity must be positive")]
    ZeroCapacity,
    #[error("io: {0}")]
    Io(String),
    #[error("json: {0}")]
    Json(String),
}

impl From<std::io::Error> for TwinError {
    fn from(e: std::io::Error) -> Self {
        TwinError::Io(e.to_string())
    }
}

impl From<serde_json::Error> for TwinError {
    fn from(e: serde_json::Error) -> Self {
        TwinError::Json(e.to_string())
    }
}
