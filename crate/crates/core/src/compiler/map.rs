//! Synthetic road networks loaded from map files.

use std::collections::BTreeSet;
use std::path::Path;

use serde::Deserialize;

use super::geometry::{Polyline, Vec2};
use super::CompileError;
use crate::scene::RoadType;

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct RoadFile {
    id: String,
    lanes: u32,
    lane_width: f64,
    centerline: Vec<Vec2>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct IntersectionFile {
    id: String,
    roads: Vec<String>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct LandmarkFile {
    name: String,
    road: String,
    s: f64,
    #[serde(default)]
    lane: u32,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct MapFile {
    name: String,
    roads: Vec<RoadFile>,
    #[serde(default)]
    intersections: Vec<IntersectionFile>,
    #[serde(default)]
    landmarks: Vec<LandmarkFile>,
}

/// One-way road. `centerline` is the centre of lane 0 (the rightmost lane);
/// lane `i` lies `i · lane_width` to its left.
#[derive(Debug, Clone)]
pub struct Road {
    pub id: String,
    pub lanes: u32,
    pub lane_width: f64,
    pub centerline: Polyline,
}

impl Road {
    pub fn lane_offset(&self, lane: u32) -> f64 {
        lane as f64 * self.lane_width
    }

    pub fn lane_line(&self, lane: u32) -> Polyline {
        self.centerline.offset(self.lane_offset(lane))
    }

    /// Lateral extent of the paved surface, in offsets from the reference line.
    pub fn paved(&self) -> (f64, f64) {
        (-self.lane_width / 2.0, self.lane_offset(self.lanes - 1) + self.lane_width / 2.0)
    }

    /// Lane whose centre is closest to offset `d`.
    pub fn nearest_lane(&self, d: f64) -> u32 {
        ((d / self.lane_width).round().max(0.0) as u32).min(self.lanes - 1)
    }
}

#[derive(Debug, Clone)]
pub struct Intersection {
    pub id: String,
    pub roads: Vec<String>,
}

#[derive(Debug, Clone)]
pub struct Landmark {
    pub name: String,
    pub road: String,
    pub s: f64,
    pub lane: u32,
}

#[derive(Debug, Clone)]
pub struct RoadNetwork {
    pub name: String,
    pub roads: Vec<Road>,
    pub intersections: Vec<Intersection>,
    pub landmarks: Vec<Landmark>,
}

const BUNDLED: [(&str, &str); 5] = [
    ("straight_road", include_str!("../../data/maps/straight_road.yaml")),
    ("highway_3lane", include_str!("../../data/maps/highway_3lane.yaml")),
    ("four_way_intersection", include_str!("../../data/maps/four_way_intersection.yaml")),
    ("narrow_bridge", include_str!("../../data/maps/narrow_bridge.yaml")),
    ("ramp", include_str!("../../data/maps/ramp.yaml")),
];

impl RoadNetwork {
    pub fn parse(text: &str) -> Result<Self, CompileError> {
        let file: MapFile = serde_yaml::from_str(text).map_err(|e| CompileError::Map(e.to_string()))?;
        let mut roads = Vec::new();
        for r in file.roads {
            let centerline = Polyline::new(r.centerline)
                .ok_or_else(|| CompileError::Map(format!("road {}: centerline needs two distinct points", r.id)))?;
            roads.push(Road { id: r.id, lanes: r.lanes, lane_width: r.lane_width, centerline });
        }
        let net = RoadNetwork {
            name: file.name,
            roads,
            intersections: file.intersections.into_iter().map(|i| Intersection { id: i.id, roads: i.roads }).collect(),
            landmarks: file
                .landmarks
                .into_iter()
                .map(|l| Landmark { name: l.name, road: l.road, s: l.s, lane: l.lane })
                .collect(),
        };
        net.validate()?;
        Ok(net)
    }

    pub fn load(path: &Path) -> Result<Self, CompileError> {
        let text = std::fs::read_to_string(path).map_err(|e| CompileError::Map(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    /// One of the maps shipped with the crate.
    pub fn bundled(name: &str) -> Option<Self> {
        BUNDLED.iter().find(|(n, _)| *n == name).map(|(_, text)| Self::parse(text).expect("bundled map is valid"))
    }

    pub fn bundled_names() -> impl Iterator<Item = &'static str> {
        BUNDLED.iter().map(|(n, _)| *n)
    }

    /// Name of the bundled map used for a road type.
    pub fn name_for(road_type: RoadType) -> &'static str {
        match road_type {
            RoadType::Intersection | RoadType::TJunction | RoadType::Roundabout => "four_way_intersection",
            RoadType::Highway | RoadType::Expressway => "highway_3lane",
            RoadType::Ramp => "ramp",
            RoadType::NarrowBridge => "narrow_bridge",
            _ => "straight_road",
        }
    }

    pub fn for_road_type(road_type: RoadType) -> Self {
        Self::bundled(Self::name_for(road_type)).expect("every road type maps to a bundled map")
    }

    pub fn validate(&self) -> Result<(), CompileError> {
        let err = |m: String| Err(CompileError::Map(format!("{}: {m}", self.name)));
        let mut ids = BTreeSet::new();
        for r in &self.roads {
            if !ids.insert(r.id.as_str()) {
                return err(format!("duplicate road {}", r.id));
            }
            if r.lanes == 0 {
                return err(format!("road {} has no lanes", r.id));
            }
            if !(r.lane_width > 0.0) {
                return err(format!("road {} has non-positive lane width", r.id));
            }
            for lane in 0..r.lanes {
                if !r.lane_line(lane).is_simple() {
                    return err(format!("road {} lane {lane} centerline self-intersects", r.id));
                }
            }
        }
        for i in &self.intersections {
            if let Some(bad) = i.roads.iter().find(|r| !ids.contains(r.as_str())) {
                return err(format!("intersection {} references unknown road {bad}", i.id));
            }
        }
        for l in &self.landmarks {
            let Some(road) = self.road(&l.road) else {
                return err(format!("landmark {} on unknown road {}", l.name, l.road));
            };
            if l.lane >= road.lanes || !(0.0..=road.centerline.length()).contains(&l.s) {
                return err(format!("landmark {} lies off road {}", l.name, l.road));
            }
        }
        Ok(())
    }

    pub fn road(&self, id: &str) -> Option<&Road> {
        self.roads.iter().find(|r| r.id == id)
    }

    pub fn landmark(&self, name: &str) -> Option<&Landmark> {
        self.landmarks.iter().find(|l| l.name == name)
    }

    /// Landmarks by road, sorted by arc length.
    pub fn landmarks_on(&self, road: &str) -> Vec<&Landmark> {
        let mut v: Vec<&Landmark> = self.landmarks.iter().filter(|l| l.road == road).collect();
        v.sort_by(|a, b| a.s.total_cmp(&b.s));
        v
    }

    /// Roads sharing an intersection with `road`.
    pub fn connected(&self, road: &str) -> Vec<&Road> {
        let ids: BTreeSet<&str> = self
            .intersections
            .iter()
            .filter(|i| i.roads.iter().any(|r| r == road))
            .flat_map(|i| i.roads.iter().map(String::as_str))
            .filter(|r| *r != road)
            .collect();
        self.roads.iter().filter(|r| ids.contains(r.id.as_str())).collect()
    }

    /// Lane centred within `tol` of `p` whose direction is within 30° of `heading`.
    pub fn lane_at(&self, p: Vec2, heading: f64, tol: f64) -> Option<(&Road, u32)> {
        let mut best: Option<(f64, &Road, u32)> = None;
        for r in &self.roads {
            let pr = r.centerline.project(p);
            if super::geometry::wrap_angle(pr.heading - heading).abs() > 30f64.to_radians() {
                continue;
            }
            let lane = r.nearest_lane(pr.d);
            let off = (pr.d - r.lane_offset(lane)).abs();
            let inside = pr.s > 1e-6 && pr.s < r.centerline.length() - 1e-6;
            if inside && off <= tol && best.is_none_or(|(b, _, _)| off < b) {
                best = Some((off, r, lane));
            }
        }
        best.map(|(_, r, l)| (r, l))
    }
}
