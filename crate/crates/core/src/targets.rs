//! Target and cue object vocabularies with importance weights.

use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const DEFAULT_TARGET_WEIGHT: f64 = 1.0;
pub const DEFAULT_CUE_WEIGHT: f64 = 0.5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightedObject {
    pub name: String,
    pub weight: f64,
}

impl WeightedObject {
    pub fn new(name: impl Into<String>, weight: f64) -> Self {
        Self {
            name: name.into(),
            weight,
        }
    }
}

/// Target objects answer the query directly; cue objects are contextual hints.
///
/// Names are unique across both lists and every weight lies in `(0, 1]`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SemanticTargets {
    targets: Vec<WeightedObject>,
    cues: Vec<WeightedObject>,
}

impl SemanticTargets {
    pub fn new(targets: Vec<WeightedObject>, cues: Vec<WeightedObject>) -> Result<Self> {
        let mut seen = HashSet::new();
        for obj in targets.iter().chain(&cues) {
            if obj.name.trim().is_empty() {
                return Err(Error::Validation("object names must be non-empty".into()));
            }
            if !seen.insert(obj.name.as_str()) {
                return Err(Error::Validation(format!(
                    "duplicate object name `{}`",
                    obj.name
                )));
            }
            if !(obj.weight > 0.0 && obj.weight <= 1.0) {
                return Err(Error::Validation(format!(
                    "weight of `{}` must lie in (0, 1], got {}",
                    obj.name, obj.weight
                )));
            }
        }
        Ok(Self { targets, cues })
    }

    pub fn targets(&self) -> &[WeightedObject] {
        &self.targets
    }

    pub fn cues(&self) -> &[WeightedObject] {
        &self.cues
    }

    /// The union of targets and cues, targets first.
    pub fn all(&self) -> impl Iterator<Item = &WeightedObject> {
        self.targets.iter().chain(&self.cues)
    }

    pub fn vocabulary(&self) -> Vec<String> {
        self.all().map(|o| o.name.clone()).collect()
    }

    pub fn weight_of(&self, name: &str) -> Option<f64> {
        self.all().find(|o| o.name == name).map(|o| o.weight)
    }

    /// Parse the targets file format: `targets` and `cues` arrays whose
    /// entries are bare names or `{name, weight}` objects. At least one
    /// target is required.
    pub fn from_json_str(raw: &str) -> Result<Self> {
        let file: TargetsFile = serde_json::from_str(raw)
            .map_err(|e| Error::Validation(format!("targets file: {e}")))?;
        file.into_targets()
    }
}

impl<'de> Deserialize<'de> for SemanticTargets {
    fn deserialize<D: serde::Deserializer<'de>>(de: D) -> std::result::Result<Self, D::Error> {
        let file = TargetsFile::deserialize(de)?;
        file.into_targets().map_err(serde::de::Error::custom)
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct TargetsFile {
    #[serde(default)]
    targets: Vec<ObjectEntry>,
    #[serde(default)]
    cues: Vec<ObjectEntry>,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum ObjectEntry {
    Bare(String),
    Weighted { name: String, weight: Option<f64> },
}

impl ObjectEntry {
    fn resolve(self, default_weight: f64) -> WeightedObject {
        match self {
            ObjectEntry::Bare(name) => WeightedObject::new(name, default_weight),
            ObjectEntry::Weighted { name, weight } => {
                WeightedObject::new(name, weight.unwrap_or(default_weight))
            }
        }
    }
}

impl TargetsFile {
    fn into_targets(self) -> Result<SemanticTargets> {
        if self.targets.is_empty() {
            return Err(Error::Validation(
                "at least one target object is required".into(),
            ));
        }
        let targets = self
            .targets
            .into_iter()
            .map(|e| e.resolve(DEFAULT_TARGET_WEIGHT))
            .collect();
        let cues = self
            .cues
            .into_iter()
            .map(|e| e.resolve(DEFAULT_CUE_WEIGHT))
            .collect();
        SemanticTargets::new(targets, cues)
    }
}
