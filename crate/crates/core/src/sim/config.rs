use serde::{Deserialize, Serialize};

use super::{Result, SimError};
use crate::driver::DriverOptions;
use crate::extract::RoadClass;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Scenario {
    /// Poisson arrivals at the corridor entrance plus injected cut-ins.
    Corridor,
    /// One constant-speed leader and one sampled follower; no pulses or cut-ins.
    LeaderFollower { leader_speed: f64, initial_range: f64 },
}

/// Simulation settings. Missing keys in a config file take the defaults of
/// [`SimConfig::for_road_class`] with highway as the road class.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SimConfig {
    pub road_class: RoadClass,
    /// m
    pub corridor_length: f64,
    /// Upper bound on simulated time, s. The run stops earlier once every
    /// spawned vehicle has left the corridor.
    pub duration: f64,
    pub dt: f64,
    /// Entrance arrivals, veh/s.
    pub spawn_rate: f64,
    /// Injected cut-ins, events/s.
    pub cut_in_rate: f64,
    pub seed: u64,
    /// Builtin profile name or path to a profile file.
    pub profile: String,
    /// Mean distance an injected vehicle stays on the corridor before it
    /// changes out again, m. Keeps the density from growing with every cut-in.
    pub cut_in_stay: f64,
    /// Cap on entrance arrivals.
    pub max_vehicles: usize,
    /// Forward sensor horizon, m.
    pub sensor_range: f64,
    pub vehicle_length: f64,
    /// Posted limit written to the log, m/s.
    pub posted_limit: Option<f64>,
    /// Latitude and longitude of the corridor entrance; the corridor runs north.
    pub origin: (f64, f64),
    /// Rate of full-throttle and full-brake episodes per vehicle and kind, 1/s.
    pub pulse_rate: f64,
    /// Speed change that ends a pulse, m/s.
    pub pulse_delta_v: f64,
    /// Hardest deceleration of the collision-avoidance override, m/s^2 (positive).
    pub emergency_decel: f64,
    pub scenario: Scenario,
    /// Driver sampling settings; road-class defaults when absent.
    pub driver: Option<DriverOptions>,
    /// Keep per-step samples. Disable for runs that only need statistics.
    pub record: bool,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self::for_road_class(RoadClass::Highway, 0)
    }
}

impl SimConfig {
    pub fn for_road_class(road_class: RoadClass, seed: u64) -> Self {
        let posted = match road_class {
            RoadClass::Highway => 29.06,
            RoadClass::Local => 17.88,
        };
        Self {
            road_class,
            corridor_length: 20_000.0,
            duration: 7200.0,
            dt: 0.1,
            spawn_rate: 0.03,
            cut_in_rate: 0.1,
            seed,
            profile: "spmd-2018".into(),
            cut_in_stay: 5000.0,
            max_vehicles: 200,
            sensor_range: 90.0,
            vehicle_length: 4.5,
            posted_limit: Some(posted),
            origin: (42.0, -83.7),
            pulse_rate: 0.1,
            pulse_delta_v: 1.0,
            emergency_decel: 9.0,
            scenario: Scenario::Corridor,
            driver: None,
            record: true,
        }
    }

    pub fn leader_follower(road_class: RoadClass, seed: u64, leader_speed: f64, initial_range: f64) -> Self {
        Self {
            duration: 300.0,
            spawn_rate: 0.0,
            cut_in_rate: 0.0,
            scenario: Scenario::LeaderFollower {
                leader_speed,
                initial_range,
            },
            ..Self::for_road_class(road_class, seed)
        }
    }

    pub fn driver_options(&self) -> DriverOptions {
        self.driver
            .clone()
            .unwrap_or_else(|| DriverOptions::for_road_class(self.road_class))
    }

    pub fn validate(&self) -> Result<()> {
        let mut bad = Vec::new();
        let mut positive = |name: &str, v: f64| {
            if !(v > 0.0 && v.is_finite()) {
                bad.push(format!("{name} must be positive and finite, got {v}"));
            }
        };
        positive("corridor_length", self.corridor_length);
        positive("duration", self.duration);
        positive("dt", self.dt);
        positive("sensor_range", self.sensor_range);
        positive("vehicle_length", self.vehicle_length);
        positive("pulse_delta_v", self.pulse_delta_v);
        positive("cut_in_stay", self.cut_in_stay);
        positive("emergency_decel", self.emergency_decel);
        for (name, v) in [
            ("spawn_rate", self.spawn_rate),
            ("cut_in_rate", self.cut_in_rate),
            ("pulse_rate", self.pulse_rate),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                bad.push(format!("{name} must be non-negative and finite, got {v}"));
            }
        }
        if let Scenario::LeaderFollower {
            leader_speed,
            initial_range,
        } = self.scenario
        {
            if !(leader_speed > 0.0) {
                bad.push(format!("leader_speed must be positive, got {leader_speed}"));
            }
            if !(initial_range > 0.0) {
                bad.push(format!("initial_range must be positive, got {initial_range}"));
            }
        }
        if bad.is_empty() {
            Ok(())
        } else {
            Err(SimError::InvalidConfig(bad))
        }
    }
}
