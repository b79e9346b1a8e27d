use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::TwinError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mutability {
    Static,
    Dynamic,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ValueKind {
    Number,
    Text,
    Boolean,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PropertySchema {
    pub name: String,
    pub mutability: Mutability,
    pub kind: ValueKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub unit: Option<String>,
}

/// An embedded sub-twin slot: `name` is the slot, `model` the model id it uses.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComponentDef {
    pub name: String,
    pub model: String,
}

/// Type definition of a class of twins, loadable from a JSON model file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct TwinModel {
    pub model_id: String,
    #[serde(default)]
    pub properties: Vec<PropertySchema>,
    #[serde(default)]
    pub telemetry: Vec<String>,
    #[serde(default)]
    pub components: Vec<ComponentDef>,
    #[serde(default)]
    pub relationships: Vec<String>,
}

impl TwinModel {
    pub fn new(model_id: impl Into<String>) -> Self {
        TwinModel {
            model_id: model_id.into(),
            properties: Vec::new(),
            telemetry: Vec::new(),
            components: Vec::new(),
            relationships: Vec::new(),
        }
    }

    pub fn with_property(mut self, name: &str, mutability: Mutability, kind: ValueKind) -> Self {
        self.properties.push(PropertySchema { name: name.into(), mutability, kind, unit: None });
        self
    }

    pub fn with_telemetry(mut self, channel: &str) -> Self {
        self.telemetry.push(channel.into());
        self
    }

    pub fn with_relationship(mut self, name: &str) -> Self {
        self.relationships.push(name.into());
        self
    }

    pub fn with_component(mut self, name: &str, model: &str) -> Self {
        self.components.push(ComponentDef { name: name.into(), model: model.into() });
        self
    }

    pub fn property(&self, name: &str) -> Option<&PropertySchema> {
        self.properties.iter().find(|p| p.name == name)
    }

    pub fn dynamic_properties(&self) -> impl Iterator<Item = &PropertySchema> {
        self.properties.iter().filter(|p| p.mutability == Mutability::Dynamic)
    }

    /// Checks the model in isolation: non-empty id, unique property,
    /// channel, component and relationship names.
    pub fn check(&self) -> Result<(), TwinError> {
        let bad = |reason: String| TwinError::InvalidModel { model: self.model_id.clone(), reason };
        if self.model_id.trim().is_empty() {
            return Err(bad("empty model id".into()));
        }
        unique(self.properties.iter().map(|p| p.name.as_str()), "property").map_err(bad)?;
        unique(self.telemetry.iter().map(String::as_str), "telemetry channel").map_err(bad)?;
        unique(self.components.iter().map(|c| c.name.as_str()), "component").map_err(bad)?;
        unique(self.relationships.iter().map(String::as_str), "relationship").map_err(bad)?;
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self, TwinError> {
        let model: TwinModel = serde_json::from_str(text)?;
        model.check()?;
        Ok(model)
    }
}

fn unique<'a>(names: impl Iterator<Item = &'a str>, what: &str) -> Result<(), String> {
    let mut seen = BTreeSet::new();
    for n in names {
        if n.is_empty() {
            return Err(format!("empty {what} name"));
        }
        if !seen.insert(n) {
            return Err(format!("duplicate {what} `{n}`"));
        }
    }
    Ok(())
}

/// The set of known models. Component references must resolve and the
/// component nesting must be acyclic.
#[derive(Debug, Clone, Default)]
pub struct ModelRegistry {
    models: BTreeMap<String, TwinModel>,
}

impl ModelRegistry {
    pub fn new() -> Self {
        Self::default()
    }

    /// Builds a registry from models given in any order.
    pub fn from_models(models: impl IntoIterator<Item = TwinModel>) -> Result<Self, TwinError> {
        let mut reg = ModelRegistry::new();
        for m in models {
            m.check()?;
            if reg.models.contains_key(&m.model_id) {
                return Err(TwinError::DuplicateId(m.model_id));
            }
            reg.models.insert(m.model_id.clone(), m);
        }
        reg.check_components()?;
        Ok(reg)
    }

    /// Loads every `*.json` model file in `dir`.
    pub fn load_dir(dir: &Path) -> Result<Self, TwinError> {
        let mut paths: Vec<_> = std::fs::read_dir(dir)?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|x| x == "json"))
            .collect();
        paths.sort();
        let mut models = Vec::with_capacity(paths.len());
        for p in paths {
            models.push(TwinModel::from_json(&std::fs::read_to_string(&p)?)?);
        }
        Self::from_models(models)
    }

    /// Registers one model whose components are already registered.
    pub fn register(&mut self, model: TwinModel) -> Result<(), TwinError> {
        model.check()?;
        if self.models.contains_key(&model.model_id) {
            return Err(TwinError::DuplicateId(model.model_id));
        }
        for c in &model.components {
            if !self.models.contains_key(&c.model) {
                return Err(TwinError::InvalidModel {
                    model: model.model_id.clone(),
                    reason: format!("component `{}` uses unknown model `{}`", c.name, c.model),
                });
            }
        }
        self.models.insert(model.model_id.clone(), model);
        Ok(())
    }

    pub fn get(&self, model_id: &str) -> Option<&TwinModel> {
        self.models.get(model_id)
    }

    pub fn models(&self) -> impl Iterator<Item = &TwinModel> {
        self.models.values()
    }

    fn check_components(&self) -> Result<(), TwinError> {
        // 0 = unvisited, 1 = on stack, 2 = done
        let mut state: BTreeMap<&str, u8> = BTreeMap::new();
        for id in self.models.keys() {
            self.visit(id, &mut state)?;
        }
        Ok(())
    }

    fn visit<'a>(&'a self, id: &'a str, state: &mut BTreeMap<&'a str, u8>) -> Result<(), TwinError> {
        match state.get(id) {
            Some(2) => return Ok(()),
            Some(1) => {
                return Err(TwinError::InvalidModel {
                    model: id.to_string(),
                    reason: "component nesting is cyclic".into(),
                })
            }
            _ => {}
        }
        state.insert(id, 1);
        let model = &self.models[id];
        for c in &model.components {
            if !self.models.contains_key(&c.model) {
                return Err(TwinError::InvalidModel {
                    model: id.to_string(),
                    reason: format!("component `{}` uses unknown model `{}`", c.name, c.model),
                });
            }
            self.visit(&c.model, state)?;
        }
        state.insert(id, 2);
        Ok(())
    }
}
