use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

/// Arbitration classes for conflicting rules.
///
/// Declaration order is priority order: `PedestrianSafety` outranks every
/// other class and `EmergencyExceptions` is outranked by all of them.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PriorityClass {
    PedestrianSafety,
    EmergencyVehicleAvoidance,
    OnSiteCommand,
    TrafficLights,
    TrafficSigns,
    RoadMarkings,
    InteractiveRightOfWay,
    DefensiveDriving,
    EmergencyExceptions,
}

impl PriorityClass {
    pub const ALL: [PriorityClass; 9] = [
        PriorityClass::PedestrianSafety,
        PriorityClass::EmergencyVehicleAvoidance,
        PriorityClass::OnSiteCommand,
        PriorityClass::TrafficLights,
        PriorityClass::TrafficSigns,
        PriorityClass::RoadMarkings,
        PriorityClass::InteractiveRightOfWay,
        PriorityClass::DefensiveDriving,
        PriorityClass::EmergencyExceptions,
    ];

    /// 1 for the highest class, 9 for the lowest.
    pub fn rank(self) -> u8 {
        self as u8 + 1
    }

    pub fn from_rank(rank: u8) -> Option<Self> {
        Self::ALL.get(usize::from(rank).checked_sub(1)?).copied()
    }

    /// Strictly higher priority than `other`.
    pub fn outranks(self, other: PriorityClass) -> bool {
        self.rank() < other.rank()
    }

    /// Compare by priority: `Greater` means `self` wins arbitration.
    pub fn cmp_priority(self, other: PriorityClass) -> Ordering {
        other.rank().cmp(&self.rank())
    }

    pub fn as_str(self) -> &'static str {
        match self {
            PriorityClass::PedestrianSafety => "pedestrian_safety",
            PriorityClass::EmergencyVehicleAvoidance => "emergency_vehicle_avoidance",
            PriorityClass::OnSiteCommand => "on_site_command",
            PriorityClass::TrafficLights => "traffic_lights",
            PriorityClass::TrafficSigns => "traffic_signs",
            PriorityClass::RoadMarkings => "road_markings",
            PriorityClass::InteractiveRightOfWay => "interactive_right_of_way",
            PriorityClass::DefensiveDriving => "defensive_driving",
            PriorityClass::EmergencyExceptions => "emergency_exceptions",
        }
    }
}

impl FromStr for PriorityClass {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .iter()
            .copied()
            .find(|c| c.as_str() == s)
            .ok_or_else(|| s.to_string())
    }
}

impl fmt::Display for PriorityClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}
