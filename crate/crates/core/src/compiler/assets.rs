//! Actor type → simulator asset catalog.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::CompileError;
use crate::scene::{ActorType, SceneDoc};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AssetEntry {
    #[serde(rename = "type")]
    pub actor_type: ActorType,
    pub asset: String,
    /// OpenSCENARIO object category (`car`, `pedestrian`, `obstacle`, ...).
    pub category: String,
    pub length: f64,
    pub width: f64,
    pub height: f64,
    /// km/h.
    pub default_speed: f64,
    #[serde(default)]
    pub attributes: BTreeMap<String, String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AssetCatalog {
    entries: Vec<AssetEntry>,
}

impl AssetCatalog {
    pub fn new(entries: Vec<AssetEntry>) -> Self {
        AssetCatalog { entries }
    }

    pub fn parse(text: &str) -> Result<Self, CompileError> {
        serde_yaml::from_str(text).map(Self::new).map_err(|e| CompileError::Catalog(e.to_string()))
    }

    pub fn entries(&self) -> &[AssetEntry] {
        &self.entries
    }

    /// First entry for the type.
    pub fn lookup(&self, t: ActorType) -> Option<&AssetEntry> {
        self.entries.iter().find(|e| e.actor_type == t)
    }
}

impl Default for AssetCatalog {
    fn default() -> Self {
        Self::parse(include_str!("../../data/assets.yaml")).expect("bundled catalog is valid")
    }
}

/// Asset for every actor, keyed by actor id.
pub fn resolve_assets<'c>(doc: &SceneDoc, catalog: &'c AssetCatalog) -> Result<BTreeMap<String, &'c AssetEntry>, CompileError> {
    doc.actors
        .iter()
        .map(|a| {
            catalog
                .lookup(a.actor_type)
                .map(|e| (a.id.clone(), e))
                .ok_or(CompileError::UncoveredActorType(a.actor_type.to_string()))
        })
        .collect()
}
