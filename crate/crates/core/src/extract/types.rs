use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RoadClass {
    Highway,
    Local,
}

impl RoadClass {
    pub const ALL: [RoadClass; 2] = [RoadClass::Highway, RoadClass::Local];

    pub fn as_str(&self) -> &'static str {
        match self {
            RoadClass::Highway => "highway",
            RoadClass::Local => "local",
        }
    }
}

impl fmt::Display for RoadClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for RoadClass {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "highway" => Ok(RoadClass::Highway),
            "local" => Ok(RoadClass::Local),
            other => Err(format!("unknown road class '{other}' (expected highway or local)")),
        }
    }
}

/// One 10 Hz record: host motion plus the forward-target measurements.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectorySample {
    /// Seconds; strictly increasing within a trip.
    pub t: f64,
    pub lat_deg: f64,
    pub lon_deg: f64,
    /// Host speed, m/s.
    pub v: f64,
    /// Host longitudinal acceleration, m/s^2.
    pub a: f64,
    pub brake: bool,
    /// Range to the forward target, m.
    pub range: Option<f64>,
    /// Range rate, m/s; negative when closing.
    pub range_rate: Option<f64>,
    /// Target lateral offset, m. Positive means the target is to the left.
    pub target_offset: Option<f64>,
    /// Host offset from its lane center, m.
    pub lane_offset: f64,
    pub link_id: Option<String>,
    pub road_class: RoadClass,
    /// Posted speed limit, m/s.
    pub posted_limit: Option<f64>,
}

impl TrajectorySample {
    pub fn has_target(&self) -> bool {
        self.range.is_some() && self.range_rate.is_some() && self.target_offset.is_some()
    }

    /// Lead vehicle speed `v + range_rate`.
    pub fn leader_speed(&self) -> Option<f64> {
        self.range_rate.map(|rr| self.v + rr)
    }

    /// Lead vehicle lane offset `Y + d_lat`.
    pub fn leader_lane_offset(&self) -> Option<f64> {
        self.target_offset.map(|d| self.lane_offset + d)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trip {
    pub trip_id: String,
    pub driver_id: String,
    pub samples: Vec<TrajectorySample>,
}

impl Trip {
    pub fn duration(&self) -> f64 {
        match (self.samples.first(), self.samples.last()) {
            (Some(a), Some(b)) => b.t - a.t,
            _ => 0.0,
        }
    }

    /// Distance travelled, trapezoidal integration of speed over time.
    pub fn length(&self) -> f64 {
        self.samples
            .windows(2)
            .map(|w| 0.5 * (w[0].v + w[1].v) * (w[1].t - w[0].t))
            .sum()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CarFollowingEpisode {
    pub driver_id: String,
    pub trip_id: String,
    pub road_class: RoadClass,
    pub samples: Vec<TrajectorySample>,
}

impl CarFollowingEpisode {
    pub fn duration(&self) -> f64 {
        match (self.samples.first(), self.samples.last()) {
            (Some(a), Some(b)) => b.t - a.t,
            _ => 0.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CutInDirection {
    LeftToRight,
    RightToLeft,
}

/// Per-sample lateral record of a cut-in, used for yaw-rate estimation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LateralSample {
    pub t: f64,
    pub target_offset: f64,
    /// Host speed.
    pub v: f64,
    pub range_rate: Option<f64>,
}

impl LateralSample {
    /// Lane-changing vehicle speed, falling back to host speed when the range rate is absent.
    pub fn target_speed(&self) -> f64 {
        self.v + self.range_rate.unwrap_or(0.0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LaneChangeEvent {
    pub driver_id: String,
    pub trip_id: String,
    pub road_class: RoadClass,
    pub direction: CutInDirection,
    pub t_start: f64,
    pub t_end: f64,
    /// `t_end - t_start`, s.
    pub duration: f64,
    /// Range to the lane-changing vehicle at `t_start`, m.
    pub initial_range: f64,
    /// `R / -range_rate` at `t_start`; positive when the host is closing.
    /// `None` when the range rate is exactly zero.
    pub initial_ttc: Option<f64>,
    /// `-range_rate / R` at `t_start`, 1/s.
    pub initial_ttc_recip: f64,
    /// Host speed at `t_start`, m/s.
    pub initial_speed: f64,
    pub lateral: Vec<LateralSample>,
    /// Maximum absolute yaw rate, deg/s; filled by yaw-rate estimation.
    pub r_max: Option<f64>,
}
