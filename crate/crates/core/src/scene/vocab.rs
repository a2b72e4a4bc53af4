//! Closed token vocabularies of the scene DSL.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

macro_rules! vocabulary {
    ($(#[$meta:meta])* $name:ident { $( $variant:ident => $token:literal, )* }) => {
        $(#[$meta])*
        #[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
        pub enum $name {
            $( #[serde(rename = $token)] $variant, )*
        }

        impl $name {
            pub const ALL: &'static [$name] = &[$( $name::$variant, )*];

            pub fn as_str(self) -> &'static str {
                match self {
                    $( $name::$variant => $token, )*
                }
            }
        }

        impl FromStr for $name {
            type Err = String;
            fn from_str(s: &str) -> Result<Self, String> {
                match s {
                    $( $token => Ok($name::$variant), )*
                    other => Err(other.to_string()),
                }
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(self.as_str())
            }
        }
    };
}

vocabulary! {
    Weather {
        Sunny => "sunny",
        Cloudy => "cloudy",
        Rain => "rain",
        Storm => "storm",
        Fog => "fog",
        Snow => "snow",
        Night => "night",
        RainyNight => "rainy_night",
    }
}

vocabulary! {
    TimeOfDay {
        Daytime => "daytime",
        Dawn => "dawn",
        Dusk => "dusk",
        Night => "night",
    }
}

vocabulary! {
    RoadType {
        Intersection => "intersection",
        TJunction => "t_junction",
        Roundabout => "roundabout",
        Highway => "highway",
        Expressway => "expressway",
        Ramp => "ramp",
        NarrowBridge => "narrow_bridge",
        UrbanRoad => "urban_road",
        RuralRoad => "rural_road",
        Residential => "residential",
        SchoolZone => "school_zone",
        Tunnel => "tunnel",
    }
}

vocabulary! {
    RoadMarker {
        SolidLine => "solid_line",
        DashedLine => "dashed_line",
        DoubleSolidLine => "double_solid_line",
        SolidDashedLine => "solid_dashed_line",
        ZebraCrossing => "zebra_crossing",
        HatchedArea => "hatched_area",
        None => "none",
    }
}

vocabulary! {
    TrafficSign {
        TrafficLight => "traffic_light",
        StopSign => "stop_sign",
        YieldSign => "yield_sign",
        SpeedLimitSign => "speed_limit_sign",
        NoOvertaking => "no_overtaking",
        NoEntry => "no_entry",
        NoMerging => "no_merging",
        NoUTurn => "no_u_turn",
        NoLeftTurn => "no_left_turn",
        NoRightTurn => "no_right_turn",
        NoParking => "no_parking",
        NoHonking => "no_honking",
        PedestrianCrossing => "pedestrian_crossing",
        SchoolZoneSign => "school_zone_sign",
        Construction => "construction",
        OneWay => "one_way",
    }
}

vocabulary! {
    ActorType {
        Car => "car",
        Truck => "truck",
        Bus => "bus",
        Motorcycle => "motorcycle",
        Bicycle => "bicycle",
        Pedestrian => "pedestrian",
        Ambulance => "ambulance",
        FireTruck => "fire_truck",
        PoliceCar => "police_car",
        TrafficCone => "traffic_cone",
        Barrier => "barrier",
    }
}

vocabulary! {
    Behavior {
        GoForward => "go_forward",
        TurnLeft => "turn_left",
        TurnRight => "turn_right",
        LaneChangeLeft => "lane_change_left",
        LaneChangeRight => "lane_change_right",
        Follow => "follow",
        Stop => "stop",
        Yield => "yield",
        WalkCross => "walk_cross",
    }
}

vocabulary! {
    Relation {
        Front => "front",
        Behind => "behind",
        Left => "left",
        Right => "right",
        At => "at",
    }
}

vocabulary! {
    Longitudinal {
        GoForward => "go_forward",
        Accelerate => "accelerate",
        Decelerate => "decelerate",
        KeepSpeed => "keep_speed",
        Stop => "stop",
    }
}

vocabulary! {
    Lateral {
        KeepLane => "keep_lane",
        LaneChangeLeft => "lane_change_left",
        LaneChangeRight => "lane_change_right",
        TurnLeft => "turn_left",
        TurnRight => "turn_right",
        PullOver => "pull_over",
    }
}

impl Relation {
    /// Relation seen from the other side: `front` ↔ `behind`, `left` ↔ `right`.
    pub fn inverse(self) -> Relation {
        match self {
            Relation::Front => Relation::Behind,
            Relation::Behind => Relation::Front,
            Relation::Left => Relation::Right,
            Relation::Right => Relation::Left,
            Relation::At => Relation::At,
        }
    }
}

impl ActorType {
    pub fn is_vehicle(self) -> bool {
        !matches!(self, ActorType::Pedestrian | ActorType::TrafficCone | ActorType::Barrier)
    }

    pub fn is_static_object(self) -> bool {
        matches!(self, ActorType::TrafficCone | ActorType::Barrier)
    }

    pub fn is_emergency(self) -> bool {
        matches!(self, ActorType::Ambulance | ActorType::FireTruck | ActorType::PoliceCar)
    }
}

impl RoadType {
    /// Named places a position may reference on this kind of road.
    pub fn landmarks(self) -> &'static [&'static str] {
        match self {
            RoadType::Intersection | RoadType::TJunction | RoadType::Roundabout => {
                &["intersection", "stop_line", "crosswalk"]
            }
            RoadType::Highway | RoadType::Expressway => &["exit", "emergency_lane"],
            RoadType::Ramp => &["ramp", "merge_point"],
            RoadType::NarrowBridge => &["bridge"],
            RoadType::UrbanRoad
            | RoadType::RuralRoad
            | RoadType::Residential
            | RoadType::SchoolZone
            | RoadType::Tunnel => &["crosswalk", "stop_line", "bus_stop"],
        }
    }
}
