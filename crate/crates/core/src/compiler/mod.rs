//! Scene documents → executable OpenSCENARIO scenarios.
//!
//! [`compile_scene`] runs the whole chain: asset resolution, static
//! placement with legality resampling, an independent relation re-check,
//! trajectory synthesis, weather mapping and XML emission followed by
//! structural validation.

mod assets;
mod geometry;
mod map;
mod placement;
mod trajectory;
mod verify;
mod weather;
mod xosc;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::scene::SceneDoc;

pub use assets::{resolve_assets, AssetCatalog, AssetEntry};
pub use geometry::{OrientedBox, Polyline, Projection, Vec2};
pub use map::{Intersection, Landmark, Road, RoadNetwork};
pub use placement::{instantiate_static_scene, legality_violations, LaneRef, ScenePose};
pub use trajectory::{check_trajectory, generate_trajectories, Sample, Strategy, StrategyTable, Trajectory};
pub use verify::verify_scene;
pub use weather::{map_weather, WeatherParams, WeatherTable};
pub use xosc::{
    emit_openscenario, parse_xml, validate_openscenario, OpenScenarioDoc, ScenarioSummary, XmlElement,
    COORDINATE_NOTE,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CompileError {
    #[error("map: {0}")]
    Map(String),
    #[error("asset catalog: {0}")]
    Catalog(String),
    #[error("scene: {0}")]
    Scene(String),
    #[error("no catalog asset for actor type {0}")]
    UncoveredActorType(String),
    #[error("actor {actor} references landmark {landmark}, which the map does not define")]
    UnknownLandmark { actor: String, landmark: String },
    #[error("placement unsatisfiable after {rounds} rounds: {}", violations.join("; "))]
    Unsatisfiable { rounds: u32, violations: Vec<String> },
    #[error("actor {actor}: {reason}")]
    TopologyGap { actor: String, reason: String },
    #[error("actor sets disagree: {0}")]
    ActorMismatch(String),
    #[error("options: {0}")]
    Options(String),
    #[error("placed scene fails re-check: {}", .0.join("; "))]
    Verification(Vec<String>),
    #[error("trajectory invariant violated: {0}")]
    Trajectory(String),
    #[error("emitted scenario fails validation: {0}")]
    InvalidScenario(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CompileOptions {
    /// Sampling step, seconds.
    pub dt: f64,
    /// Trajectory length, seconds.
    pub horizon: f64,
    pub seed: u64,
    /// Default front/behind gap, metres.
    pub front_gap: f64,
    /// Default lateral offset when no adjacent lane exists, metres.
    pub lateral_gap: f64,
    pub max_rounds: u32,
    /// Upper bound of the jitter added to undeclared front/behind gaps.
    pub jitter: f64,
    /// Minimum footprint separation, metres.
    pub clearance: f64,
    /// Drivable margin beyond the outer lane edges, metres.
    pub shoulder: f64,
    pub lane_change_length: f64,
}

impl Default for CompileOptions {
    fn default() -> Self {
        CompileOptions {
            dt: 0.1,
            horizon: 10.0,
            seed: 0,
            front_gap: 15.0,
            lateral_gap: 3.0,
            max_rounds: 50,
            jitter: 5.0,
            clearance: 0.5,
            shoulder: 2.5,
            lane_change_length: 30.0,
        }
    }
}

/// Data tables the compiler consults.
#[derive(Debug, Clone, Default)]
pub struct CompilerTables {
    pub catalog: AssetCatalog,
    pub weather: WeatherTable,
    pub strategies: StrategyTable,
}

#[derive(Debug, Clone)]
pub struct CompiledScenario {
    pub map: String,
    pub poses: Vec<ScenePose>,
    pub trajectories: Vec<Trajectory>,
    pub weather: WeatherParams,
    pub scenario: OpenScenarioDoc,
}

impl CompiledScenario {
    pub fn xml(&self) -> &str {
        &self.scenario.xml
    }
}

/// Compiles a document on the given map. The document should already have
/// passed [`crate::scene::self_check`].
pub fn compile_scene(
    doc: &SceneDoc,
    map: &RoadNetwork,
    tables: &CompilerTables,
    opts: &CompileOptions,
) -> Result<CompiledScenario, CompileError> {
    if !(opts.dt > 0.0 && opts.horizon > 0.0 && opts.front_gap > 0.0 && opts.lateral_gap > 0.0) {
        return Err(CompileError::Options("dt, horizon and gaps must be positive".into()));
    }
    for a in &doc.actors {
        let r = &a.position.reference;
        if doc.actor(r).is_none() && map.landmark(r).is_none() {
            return Err(CompileError::UnknownLandmark { actor: a.id.clone(), landmark: r.clone() });
        }
    }
    let assets = resolve_assets(doc, &tables.catalog)?;
    let poses = instantiate_static_scene(doc, map, &assets, opts)?;
    let problems = verify_scene(doc, map, &assets, &poses, opts.clearance);
    if !problems.is_empty() {
        return Err(CompileError::Verification(problems));
    }
    let trajectories = generate_trajectories(&poses, doc, map, &tables.strategies, opts)?;
    let speeds: BTreeMap<&str, f64> = poses.iter().map(|p| (p.actor.as_str(), p.speed)).collect();
    for t in &trajectories {
        check_trajectory(t, speeds[t.actor.as_str()], opts.dt).map_err(CompileError::Trajectory)?;
    }
    let weather = map_weather(&doc.environment, &tables.weather);
    let scenario = emit_openscenario(doc, &map.name, &assets, &poses, &trajectories, &weather)?;
    validate_openscenario(&scenario.xml).map_err(CompileError::InvalidScenario)?;
    Ok(CompiledScenario { map: map.name.clone(), poses, trajectories, weather, scenario })
}

#[cfg(test)]
mod tests;
