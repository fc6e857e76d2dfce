//! Etiquette profiles: named bundles of behavior distributions per road class.

mod builtin;
mod fit;
mod io;
mod report;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dist::{DistError, ExponentialParams, GevParams, LaplaceParams, LognormalParams};
use crate::estimate::EstimateError;
use crate::extract::RoadClass;

pub use builtin::{builtin_empirical, builtin_profile, EmpiricalPercentile, BUILTIN_NAMES};
pub use fit::{
    collect_population, fit_population, fit_profile, synthesize, FieldNote, FieldStatus, PopulationOptions,
    PopulationSamples, ProfileFit, MIN_POPULATION,
};
pub use io::{load_profile, parse_profile, profile_to_json, save_profile, SCHEMA_VERSION};
pub use report::{profile_report, ProfileReport, ReportRow};

#[derive(Debug, Error)]
pub enum ProfileError {
    #[error("unknown profile '{name}'; available: {}", available.join(", "))]
    UnknownProfile { name: String, available: Vec<String> },
    #[error("unsupported profile schema_version {found:?}; expected {expected}")]
    SchemaVersion { found: Option<u64>, expected: u64 },
    #[error("malformed profile JSON at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("invalid profile: {0}")]
    Invalid(String),
    #[error("no profile field could be fitted")]
    Empty,
    #[error("profile has no {road_class} scenario field '{field}'")]
    MissingField { road_class: RoadClass, field: String },
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Dist(#[from] DistError),
    #[error(transparent)]
    Estimate(#[from] EstimateError),
}

pub type Result<T> = std::result::Result<T, ProfileError>;

/// Population mean gain curves at one range.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GainCurvePoint {
    pub range: f64,
    pub kd_mean: f64,
    pub kd_p25: f64,
    pub kd_p75: f64,
    pub kp_mean: f64,
    pub kp_p25: f64,
    pub kp_p75: f64,
}

/// Behavior distributions for one road class. Every field is optional so
/// partially fitted profiles can be stored.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ScenarioProfile {
    /// Per-driver acceleration limit, m/s^2.
    pub accel_limit: Option<GevParams>,
    /// Per-driver deceleration limit stored as a positive magnitude, m/s^2.
    /// Negate on use.
    pub decel_limit: Option<GevParams>,
    /// Per-driver mean time headway, s.
    pub mean_headway: Option<LognormalParams>,
    /// Per-driver 2.5th-percentile time headway, s.
    pub extreme_headway: Option<GevParams>,
    /// TTC at brake onset, s.
    pub brake_ttc: Option<GevParams>,
    /// Maximum yaw rate of a lane change, deg/s.
    pub max_yaw_rate: Option<GevParams>,
    /// Reciprocal of the range at lane-change start, 1/m.
    pub init_range_recip: Option<GevParams>,
    /// Signed reciprocal TTC at lane-change start, 1/s.
    pub init_ttc_recip: Option<LaplaceParams>,
    /// Positive (closing) reciprocal TTC at lane-change start, 1/s.
    pub pos_init_ttc_recip: Option<ExponentialParams>,
    /// Lane-change duration, s.
    pub lc_duration: Option<GevParams>,
    pub gain_mean_curves: Option<Vec<GainCurvePoint>>,
}

impl ScenarioProfile {
    pub const FIELDS: [&'static str; 10] = [
        "accel_limit",
        "decel_limit",
        "mean_headway",
        "extreme_headway",
        "brake_ttc",
        "max_yaw_rate",
        "init_range_recip",
        "init_ttc_recip",
        "pos_init_ttc_recip",
        "lc_duration",
    ];

    pub fn units(field: &str) -> &'static str {
        match field {
            "accel_limit" | "decel_limit" => "m/s^2",
            "mean_headway" | "extreme_headway" | "brake_ttc" | "lc_duration" => "s",
            "max_yaw_rate" => "deg/s",
            "init_range_recip" => "1/m",
            "init_ttc_recip" | "pos_init_ttc_recip" => "1/s",
            _ => "",
        }
    }

    pub fn gev_field(&self, field: &str) -> Option<&GevParams> {
        match field {
            "accel_limit" => self.accel_limit.as_ref(),
            "decel_limit" => self.decel_limit.as_ref(),
            "extreme_headway" => self.extreme_headway.as_ref(),
            "brake_ttc" => self.brake_ttc.as_ref(),
            "max_yaw_rate" => self.max_yaw_rate.as_ref(),
            "init_range_recip" => self.init_range_recip.as_ref(),
            "lc_duration" => self.lc_duration.as_ref(),
            _ => None,
        }
    }

    /// Number of distribution fields present.
    pub fn field_count(&self) -> usize {
        let gev = Self::FIELDS.iter().filter(|f| self.gev_field(f).is_some()).count();
        gev + self.mean_headway.is_some() as usize
            + self.init_ttc_recip.is_some() as usize
            + self.pos_init_ttc_recip.is_some() as usize
    }

    pub fn validate(&self) -> Result<()> {
        for f in Self::FIELDS {
            if let Some(g) = self.gev_field(f) {
                g.validate().map_err(|e| ProfileError::Invalid(format!("{f}: {e}")))?;
            }
        }
        if let Some(p) = &self.mean_headway {
            p.validate()
                .map_err(|e| ProfileError::Invalid(format!("mean_headway: {e}")))?;
        }
        if let Some(p) = &self.init_ttc_recip {
            p.validate()
                .map_err(|e| ProfileError::Invalid(format!("init_ttc_recip: {e}")))?;
        }
        if let Some(p) = &self.pos_init_ttc_recip {
            p.validate()
                .map_err(|e| ProfileError::Invalid(format!("pos_init_ttc_recip: {e}")))?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EtiquetteProfile {
    pub name: String,
    pub highway: Option<ScenarioProfile>,
    pub local: Option<ScenarioProfile>,
}

impl EtiquetteProfile {
    pub fn scenario(&self, road_class: RoadClass) -> Option<&ScenarioProfile> {
        match road_class {
            RoadClass::Highway => self.highway.as_ref(),
            RoadClass::Local => self.local.as_ref(),
        }
    }

    pub fn scenario_mut(&mut self, road_class: RoadClass) -> &mut Option<ScenarioProfile> {
        match road_class {
            RoadClass::Highway => &mut self.highway,
            RoadClass::Local => &mut self.local,
        }
    }

    pub fn validate(&self) -> Result<()> {
        for rc in RoadClass::ALL {
            if let Some(s) = self.scenario(rc) {
                s.validate()?;
            }
        }
        Ok(())
    }
}
