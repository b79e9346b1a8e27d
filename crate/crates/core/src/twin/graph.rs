use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use super::model::{ModelRegistry, Mutability, TwinModel, ValueKind};
use super::TwinError;

/// A property value. Serialised untagged, so JSON numbers, strings and
/// booleans map directly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Value {
    Bool(bool),
    Number(f64),
    Text(String),
}

impl Value {
    pub fn as_f64(&self) -> Option<f64> {
        match self {
            Value::Number(x) => Some(*x),
            _ => None,
        }
    }

    pub fn kind(&self) -> ValueKind {
        match self {
            Value::Bool(_) => ValueKind::Boolean,
            Value::Number(_) => ValueKind::Number,
            Value::Text(_) => ValueKind::Text,
        }
    }
}

impl From<f64> for Value {
    fn from(x: f64) -> Self {
        Value::Number(x)
    }
}

impl From<bool> for Value {
    fn from(b: bool) -> Self {
        Value::Bool(b)
    }
}

impl From<&str> for Value {
    fn from(s: &str) -> Self {
        Value::Text(s.to_string())
    }
}

impl From<String> for Value {
    fn from(s: String) -> Self {
        Value::Text(s)
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Bool(b) => write!(f, "{b}"),
            Value::Number(x) => write!(f, "{x}"),
            Value::Text(s) => write!(f, "{s}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Property {
    pub value: Value,
    pub mutability: Mutability,
    /// Milliseconds; never decreases.
    pub last_updated: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DigitalTwin {
    pub twin_id: String,
    pub model_id: String,
    #[serde(default)]
    pub properties: BTreeMap<String, Property>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub components: Vec<DigitalTwin>,
}

impl DigitalTwin {
    pub fn new(twin_id: impl Into<String>, model_id: impl Into<String>) -> Self {
        DigitalTwin {
            twin_id: twin_id.into(),
            model_id: model_id.into(),
            properties: BTreeMap::new(),
            components: Vec::new(),
        }
    }

    pub fn with_static(mut self, name: &str, value: impl Into<Value>) -> Self {
        self.properties
            .insert(name.into(), Property { value: value.into(), mutability: Mutability::Static, last_updated: 0 });
        self
    }

    pub fn with_dynamic(mut self, name: &str, value: impl Into<Value>, ts: u64) -> Self {
        self.properties
            .insert(name.into(), Property { value: value.into(), mutability: Mutability::Dynamic, last_updated: ts });
        self
    }

    pub fn with_component(mut self, twin: DigitalTwin) -> Self {
        self.components.push(twin);
        self
    }

    pub fn value(&self, name: &str) -> Option<&Value> {
        self.properties.get(name).map(|p| &p.value)
    }

    pub fn number(&self, name: &str) -> Option<f64> {
        self.value(name).and_then(Value::as_f64)
    }

    /// Dynamic properties of this twin and its embedded components, keyed
    /// by a path (`prop`, `component/prop`, ...).
    pub fn dynamic_values(&self) -> BTreeMap<String, &Value> {
        let mut out = BTreeMap::new();
        self.collect_dynamic("", &mut out);
        out
    }

    fn collect_dynamic<'a>(&'a self, prefix: &str, out: &mut BTreeMap<String, &'a Value>) {
        for (name, p) in &self.properties {
            if p.mutability == Mutability::Dynamic {
                out.insert(format!("{prefix}{name}"), &p.value);
            }
        }
        for c in &self.components {
            c.collect_dynamic(&format!("{prefix}{}/", c.twin_id), out);
        }
    }

    /// Updates an existing dynamic property. `last_updated` becomes
    /// `max(previous, ts)`.
    pub fn set_dynamic(&mut self, name: &str, value: Value, ts: u64) -> Result<(), TwinError> {
        let twin = self.twin_id.clone();
        let p = self.properties.get_mut(name).ok_or_else(|| TwinError::SchemaViolation {
            twin: twin.clone(),
            reason: format!("no property `{name}`"),
        })?;
        if p.mutability == Mutability::Static {
            return Err(TwinError::StaticProperty { twin, property: name.into() });
        }
        if p.value.kind() != value.kind() {
            return Err(TwinError::SchemaViolation {
                twin,
                reason: format!("property `{name}` expects {:?}", p.value.kind()),
            });
        }
        p.value = value;
        p.last_updated = p.last_updated.max(ts);
        Ok(())
    }

    /// Checks that this twin conforms to `model` (and its components to
    /// their component models).
    pub fn conforms(&self, model: &TwinModel, registry: &ModelRegistry) -> Result<(), TwinError> {
        let violation = |reason: String| TwinError::SchemaViolation { twin: self.twin_id.clone(), reason };
        if self.twin_id.trim().is_empty() {
            return Err(violation("empty twin id".into()));
        }
        if self.model_id != model.model_id {
            return Err(violation(format!("model `{}` != `{}`", self.model_id, model.model_id)));
        }
        for (name, p) in &self.properties {
            let schema = model.property(name).ok_or_else(|| violation(format!("property `{name}` not in model")))?;
            if schema.mutability != p.mutability {
                return Err(violation(format!("property `{name}` mutability mismatch")));
            }
            if schema.kind != p.value.kind() {
                return Err(violation(format!("property `{name}` expects {:?}", schema.kind)));
            }
        }
        let mut seen = BTreeSet::new();
        for c in &self.components {
            if !seen.insert(c.twin_id.as_str()) {
                return Err(violation(format!("duplicate component `{}`", c.twin_id)));
            }
            let def = model
                .components
                .iter()
                .find(|d| d.model == c.model_id)
                .ok_or_else(|| violation(format!("component model `{}` not allowed", c.model_id)))?;
            let cm = registry.get(&def.model).ok_or_else(|| TwinError::UnknownModel(def.model.clone()))?;
            c.conforms(cm, registry)?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Relationship {
    pub source: String,
    pub target: String,
    pub name: String,
}

impl Relationship {
    pub fn new(source: &str, target: &str, name: &str) -> Self {
        Relationship { source: source.into(), target: target.into(), name: name.into() }
    }
}

/// The live twin graph at one instant.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct TwinGraph {
    pub timestamp: u64,
    pub twins: BTreeMap<String, DigitalTwin>,
    #[serde(default)]
    pub relationships: Vec<Relationship>,
}

impl TwinGraph {
    pub fn new(timestamp: u64) -> Self {
        TwinGraph { timestamp, ..Default::default() }
    }

    pub fn twin(&self, id: &str) -> Option<&DigitalTwin> {
        self.twins.get(id)
    }

    pub fn len(&self) -> usize {
        self.twins.len()
    }

    pub fn is_empty(&self) -> bool {
        self.twins.is_empty()
    }

    /// Adds a twin after checking it against its model. The graph is left
    /// untouched on error.
    pub fn add_twin(&mut self, twin: DigitalTwin, registry: &ModelRegistry) -> Result<(), TwinError> {
        if self.twins.contains_key(&twin.twin_id) {
            return Err(TwinError::DuplicateId(twin.twin_id));
        }
        let model = registry.get(&twin.model_id).ok_or_else(|| TwinError::SchemaViolation {
            twin: twin.twin_id.clone(),
            reason: format!("unknown model `{}`", twin.model_id),
        })?;
        twin.conforms(model, registry)?;
        self.twins.insert(twin.twin_id.clone(), twin);
        Ok(())
    }

    pub fn add_relationship(&mut self, rel: Relationship, registry: &ModelRegistry) -> Result<(), TwinError> {
        let source = self.twins.get(&rel.source).ok_or_else(|| TwinError::UnknownEndpoint(rel.source.clone()))?;
        if !self.twins.contains_key(&rel.target) {
            return Err(TwinError::UnknownEndpoint(rel.target));
        }
        if rel.source == rel.target {
            return Err(TwinError::SelfLoop(rel.source));
        }
        let permitted = registry.get(&source.model_id).is_some_and(|m| m.relationships.contains(&rel.name));
        if !permitted {
            return Err(TwinError::NameNotPermitted { name: rel.name, model: source.model_id.clone() });
        }
        if self.relationships.contains(&rel) {
            return Err(TwinError::DuplicateRelationship {
                source_id: rel.source,
                target_id: rel.target,
                name: rel.name,
            });
        }
        self.relationships.push(rel);
        Ok(())
    }

    /// Model-free structural checks, used on graphs that arrive from
    /// outside (files, generative backends). Returns every problem found.
    pub fn structural_problems(&self) -> Vec<String> {
        let mut out = Vec::new();
        for (key, t) in &self.twins {
            if *key != t.twin_id {
                out.push(format!("twin key `{key}` != twin_id `{}`", t.twin_id));
            }
            for (name, p) in &t.properties {
                if let Value::Number(x) = p.value {
                    if !x.is_finite() {
                        out.push(format!("{key}.{name} is not finite"));
                    }
                }
            }
        }
        let mut seen = BTreeSet::new();
        for r in &self.relationships {
            for end in [&r.source, &r.target] {
                if !self.twins.contains_key(end) {
                    out.push(format!("relationship endpoint `{end}` missing"));
                }
            }
            if r.source == r.target {
                out.push(format!("self relationship on `{}`", r.source));
            }
            if !seen.insert(r) {
                out.push(format!("duplicate relationship {} -[{}]-> {}", r.source, r.name, r.target));
            }
        }
        out
    }
}
