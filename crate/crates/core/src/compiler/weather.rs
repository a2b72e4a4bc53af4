//! Weather and time-of-day → simulator environment parameters.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::scene::{Environment, TimeOfDay, Weather};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WeatherParams {
    pub cloudiness: f64,
    pub precipitation: f64,
    pub wetness: f64,
    pub fog_density: f64,
    /// Metres.
    pub visibility: f64,
    /// Degrees above the horizon.
    pub sun_altitude: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct WeatherTable(BTreeMap<Weather, WeatherParams>);

impl WeatherTable {
    pub fn parse(text: &str) -> Result<Self, String> {
        let rows: BTreeMap<Weather, WeatherParams> = serde_yaml::from_str(text).map_err(|e| e.to_string())?;
        if let Some(missing) = Weather::ALL.iter().find(|w| !rows.contains_key(w)) {
            return Err(format!("weather table lacks {missing}"));
        }
        Ok(WeatherTable(rows))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn get(&self, w: Weather) -> WeatherParams {
        self.0[&w]
    }
}

impl Default for WeatherTable {
    fn default() -> Self {
        Self::parse(include_str!("../../data/weather.yaml")).expect("bundled weather table is valid")
    }
}

fn time_altitude(t: TimeOfDay) -> f64 {
    match t {
        TimeOfDay::Daytime => 70.0,
        TimeOfDay::Dawn | TimeOfDay::Dusk => 5.0,
        TimeOfDay::Night => -30.0,
    }
}

/// Local time used for the scenario clock.
pub fn clock_time(t: TimeOfDay) -> &'static str {
    match t {
        TimeOfDay::Daytime => "12:00:00",
        TimeOfDay::Dawn => "06:00:00",
        TimeOfDay::Dusk => "19:00:00",
        TimeOfDay::Night => "23:00:00",
    }
}

pub fn map_weather(env: &Environment, table: &WeatherTable) -> WeatherParams {
    let mut p = table.get(env.weather);
    p.sun_altitude = p.sun_altitude.min(time_altitude(env.time));
    p
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn table_rows() {
        let t = WeatherTable::default();
        assert_eq!(t.len(), Weather::ALL.len());
        let sunny = map_weather(&Environment { weather: Weather::Sunny, time: TimeOfDay::Daytime }, &t);
        assert_eq!((sunny.fog_density, sunny.precipitation), (0.0, 0.0));
        assert!(sunny.sun_altitude >= 45.0);
        let fog = map_weather(&Environment { weather: Weather::Fog, time: TimeOfDay::Daytime }, &t);
        assert!(fog.fog_density > 0.0 && fog.visibility < sunny.visibility);
        let dusk = map_weather(&Environment { weather: Weather::Sunny, time: TimeOfDay::Dusk }, &t);
        assert_eq!(dusk.sun_altitude, 5.0);
    }

    #[test]
    fn incomplete_table_rejected() {
        assert!(WeatherTable::parse("sunny: {cloudiness: 0, precipitation: 0, wetness: 0, fog_density: 0, visibility: 1, sun_altitude: 1}").is_err());
    }
}
