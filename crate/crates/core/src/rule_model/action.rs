use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

/// The three behavioural categories of the action space.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ActionCategory {
    DrivingManeuver,
    LightingSignaling,
    ParkingYielding,
}

macro_rules! action_types {
    ($( $variant:ident => $token:literal, $category:ident; )*) => {
        /// Closed action space. Every atomic rule governs exactly one of these.
        ///
        /// `SpeedLimit` is the numeric-rule action; it is routed to the
        /// interval-based pairing instead of the deontic one.
        #[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
        #[serde(rename_all = "snake_case")]
        pub enum ActionType {
            $( $variant, )*
        }

        impl ActionType {
            pub const ALL: &'static [ActionType] = &[$( ActionType::$variant, )*];

            pub fn as_str(self) -> &'static str {
                match self {
                    $( ActionType::$variant => $token, )*
                }
            }

            pub fn category(self) -> ActionCategory {
                match self {
                    $( ActionType::$variant => ActionCategory::$category, )*
                }
            }
        }

        impl FromStr for ActionType {
            type Err = String;

            fn from_str(s: &str) -> Result<Self, Self::Err> {
                match s {
                    $( $token => Ok(ActionType::$variant), )*
                    other => Err(other.to_string()),
                }
            }
        }
    };
}

action_types! {
    Overtake => "overtake", DrivingManeuver;
    LeftTurn => "left_turn", DrivingManeuver;
    RightTurn => "right_turn", DrivingManeuver;
    UTurn => "u_turn", DrivingManeuver;
    LaneChange => "lane_change", DrivingManeuver;
    MergeMainRoad => "merge_main_road", DrivingManeuver;
    EnterRamp => "enter_ramp", DrivingManeuver;
    Acceleration => "acceleration", DrivingManeuver;
    Deceleration => "deceleration", DrivingManeuver;
    Reverse => "reverse", DrivingManeuver;
    EmergencyLaneUsage => "emergency_lane_usage", DrivingManeuver;
    LeftTurnSignal => "left_turn_signal", LightingSignaling;
    RightTurnSignal => "right_turn_signal", LightingSignaling;
    LowBeam => "low_beam", LightingSignaling;
    HighBeam => "high_beam", LightingSignaling;
    FlashingHeadlights => "flashing_headlights", LightingSignaling;
    DoubleFlashers => "double_flashers", LightingSignaling;
    FogLights => "fog_lights", LightingSignaling;
    PositionLights => "position_lights", LightingSignaling;
    HonkHorn => "honk_horn", LightingSignaling;
    TemporaryParking => "temporary_parking", ParkingYielding;
    PullOver => "pull_over", ParkingYielding;
    Yield => "yield", ParkingYielding;
    SpeedLimit => "speed_limit", DrivingManeuver;
}

impl ActionType {
    pub fn is_speed(self) -> bool {
        self == ActionType::SpeedLimit
    }

    /// Imperative phrase for the action, e.g. "overtake the vehicle ahead".
    pub fn phrase(self) -> &'static str {
        match self {
            ActionType::Overtake => "overtake the vehicle ahead",
            ActionType::LeftTurn => "turn left at the junction",
            ActionType::RightTurn => "turn right at the junction",
            ActionType::UTurn => "make a u-turn",
            ActionType::LaneChange => "change lanes",
            ActionType::MergeMainRoad => "merge into the main road",
            ActionType::EnterRamp => "enter the ramp",
            ActionType::Acceleration => "accelerate",
            ActionType::Deceleration => "slow down",
            ActionType::Reverse => "reverse the vehicle",
            ActionType::EmergencyLaneUsage => "drive in the emergency lane",
            ActionType::LeftTurnSignal => "switch on the left turn signal",
            ActionType::RightTurnSignal => "switch on the right turn signal",
            ActionType::LowBeam => "use the low beam",
            ActionType::HighBeam => "use the high beam",
            ActionType::FlashingHeadlights => "flash the headlights",
            ActionType::DoubleFlashers => "switch on the hazard lights",
            ActionType::FogLights => "switch on the fog lights",
            ActionType::PositionLights => "switch on the position lights",
            ActionType::HonkHorn => "honk the horn",
            ActionType::TemporaryParking => "park temporarily at the roadside",
            ActionType::PullOver => "pull over",
            ActionType::Yield => "yield to the other road user",
            ActionType::SpeedLimit => "adjust the speed",
        }
    }

    /// Lower-case surface forms used to recognise the action in free text.
    pub fn keywords(self) -> &'static [&'static str] {
        match self {
            ActionType::Overtake => &["overtake", "overtaking", "pass the vehicle"],
            ActionType::LeftTurn => &["turn left", "left turn", "turning left"],
            ActionType::RightTurn => &["turn right", "right turn", "turning right"],
            ActionType::UTurn => &["u-turn", "u turn"],
            ActionType::LaneChange => &["change lanes", "change lane", "changing lanes", "lane change"],
            ActionType::MergeMainRoad => &["merge", "merging"],
            ActionType::EnterRamp => &["enter the ramp", "on-ramp", "off-ramp", "take the ramp"],
            ActionType::Acceleration => &["accelerate", "accelerating", "speed up"],
            ActionType::Deceleration => &["slow down", "decelerate", "reduce speed", "reduce your speed"],
            ActionType::Reverse => &["reverse", "back up"],
            ActionType::EmergencyLaneUsage => &["emergency lane"],
            ActionType::LeftTurnSignal => &["left turn signal", "left indicator", "signal left"],
            ActionType::RightTurnSignal => &["right turn signal", "right indicator", "signal right"],
            ActionType::LowBeam => &["low beam", "dipped headlights"],
            ActionType::HighBeam => &["high beam"],
            ActionType::FlashingHeadlights => &["flash the headlights", "flash headlights", "flashing headlights"],
            ActionType::DoubleFlashers => &["hazard lights", "double flashers", "hazard warning"],
            ActionType::FogLights => &["fog lights", "fog light"],
            ActionType::PositionLights => &["position lights", "parking lights"],
            ActionType::HonkHorn => &["honk", "horn"],
            ActionType::TemporaryParking => &["park temporarily", "temporary parking", "park at the roadside"],
            ActionType::PullOver => &["pull over"],
            ActionType::Yield => &["yield", "give way"],
            ActionType::SpeedLimit => &["km/h"],
        }
    }
}

impl fmt::Display for ActionType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}
