//! Stochastic human-driver agent sampled from an etiquette profile.

mod lane_change;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dist::{derive_seed, DistError, GevParams, SeededUniform};
use crate::extract::RoadClass;
use crate::profile::{EtiquetteProfile, GainCurvePoint};

pub use lane_change::{
    lateral_offset, plan_lane_change, quintic_fraction, quintic_peak_rate, Gap, LaneChangeDecision, LaneChangePlan,
    LateralState, QUINTIC_PEAK,
};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DriverError {
    #[error("profile has no {road_class} field '{field}'")]
    MissingField { road_class: RoadClass, field: String },
    #[error("domain error: {0}")]
    Domain(String),
    #[error(transparent)]
    Dist(#[from] DistError),
}

pub type Result<T> = std::result::Result<T, DriverError>;

/// Feedback gains of the car-following law.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum GainModel {
    /// Range-independent gains, 1/s and 1/s^2.
    Constant { kd: f64, kp: f64 },
    /// Population mean curves, linearly interpolated in range and held
    /// constant outside the tabulated interval.
    Tabulated { curve: Vec<GainCurvePoint> },
}

impl GainModel {
    /// `(K_D, K_P)` at `range`.
    pub fn at(&self, range: f64) -> (f64, f64) {
        match self {
            GainModel::Constant { kd, kp } => (*kd, *kp),
            GainModel::Tabulated { curve } => {
                let first = &curve[0];
                let last = &curve[curve.len() - 1];
                if range <= first.range {
                    return (first.kd_mean, first.kp_mean);
                }
                if range >= last.range {
                    return (last.kd_mean, last.kp_mean);
                }
                let i = curve.partition_point(|p| p.range <= range);
                let (a, b) = (&curve[i - 1], &curve[i]);
                let w = (range - a.range) / (b.range - a.range);
                (
                    a.kd_mean + w * (b.kd_mean - a.kd_mean),
                    a.kp_mean + w * (b.kp_mean - a.kp_mean),
                )
            }
        }
    }
}

/// Free-flow speed distribution, normal truncated to at least 1 m/s.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpeedDistribution {
    pub mean: f64,
    pub sd: f64,
}

/// Settings used when realizing a driver from a profile.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DriverOptions {
    /// Quantile of the initial-range reciprocal used as the gap-acceptance ceiling.
    pub gap_quantile: f64,
    /// Quantile of the positive initial-TTC reciprocal used as the TTC ceiling.
    pub ttc_quantile: f64,
    /// Bounds on the sampled lane-change duration, s.
    pub lc_duration_bounds: (f64, f64),
    /// Bounds on the sampled yaw-rate cap, deg/s.
    pub yaw_cap_bounds: (f64, f64),
    /// Bounds on the sampled acceleration limit, m/s^2.
    pub accel_bounds: (f64, f64),
    /// Bounds on the sampled deceleration magnitude, m/s^2.
    pub decel_bounds: (f64, f64),
    /// Gains used when the profile carries no gain curves.
    pub fallback_kd: f64,
    pub fallback_kp: f64,
    /// Free-flow speed controller gain, 1/s.
    pub k_ff: f64,
    pub lane_width: f64,
    pub free_flow_speed: SpeedDistribution,
}

impl DriverOptions {
    pub fn for_road_class(road_class: RoadClass) -> Self {
        Self {
            gap_quantile: 0.9,
            ttc_quantile: 0.9,
            lc_duration_bounds: (0.5, 15.0),
            yaw_cap_bounds: (0.05, 50.0),
            accel_bounds: (0.1, 6.0),
            decel_bounds: (0.1, 9.0),
            fallback_kd: 0.2,
            fallback_kp: 0.05,
            k_ff: 0.3,
            lane_width: 3.5,
            free_flow_speed: match road_class {
                RoadClass::Highway => SpeedDistribution { mean: 31.3, sd: 2.0 },
                RoadClass::Local => SpeedDistribution { mean: 17.9, sd: 1.5 },
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DriverParams {
    /// The seed the driver was drawn with.
    pub id: u64,
    pub road_class: RoadClass,
    /// Desired time headway, s.
    pub desired_headway: f64,
    /// Acceleration limit, m/s^2 (positive).
    pub a_max: f64,
    /// Deceleration limit, m/s^2 (negative).
    pub a_min: f64,
    /// Free-flow target speed, m/s.
    pub v_ff: f64,
    pub gains: GainModel,
    /// Largest accepted reciprocal initial range, 1/m.
    pub gap_accept_recip: f64,
    /// Largest accepted closing reciprocal TTC, 1/s.
    pub ttc_accept_recip: f64,
    /// Lane-change duration, s.
    pub lc_duration: f64,
    /// Yaw-rate cap, deg/s.
    pub r_cap: f64,
    pub k_ff: f64,
    pub lane_width: f64,
}

/// Inputs of the car-following law.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LongitudinalState {
    pub v: f64,
    pub range: f64,
    pub range_rate: f64,
    pub has_leader: bool,
}

impl LongitudinalState {
    pub fn free(v: f64) -> Self {
        Self {
            v,
            range: f64::INFINITY,
            range_rate: 0.0,
            has_leader: false,
        }
    }

    pub fn following(v: f64, range: f64, range_rate: f64) -> Self {
        Self {
            v,
            range,
            range_rate,
            has_leader: true,
        }
    }
}

/// Inverse-transform draw from a GEV truncated to `[lo, hi]`.
fn truncated_gev(g: &GevParams, u: f64, (lo, hi): (f64, f64)) -> Result<f64> {
    let f_lo = g.cdf(lo)?;
    let f_hi = g.cdf(hi)?;
    if !(f_hi > f_lo) {
        return Err(DriverError::Domain(format!(
            "distribution {g:?} has no mass in [{lo}, {hi}]"
        )));
    }
    let p = f_lo + u * (f_hi - f_lo);
    let p = p.clamp(f64::MIN_POSITIVE, 1.0 - f64::EPSILON);
    Ok(g.quantile(p)?.clamp(lo, hi))
}

fn required<T: Copy>(v: Option<T>, road_class: RoadClass, field: &str) -> Result<T> {
    v.ok_or_else(|| DriverError::MissingField {
        road_class,
        field: field.to_string(),
    })
}

/// Realizes one driver. Every random quantity comes from a stream derived
/// from `seed`, so the result depends only on `(profile, road_class, seed, opts)`.
pub fn sample_driver(
    profile: &EtiquetteProfile,
    road_class: RoadClass,
    seed: u64,
    opts: &DriverOptions,
) -> Result<DriverParams> {
    let s = profile.scenario(road_class).ok_or_else(|| DriverError::MissingField {
        road_class,
        field: "scenario".into(),
    })?;
    let headway = required(s.mean_headway, road_class, "mean_headway")?;
    let accel = required(s.accel_limit, road_class, "accel_limit")?;
    let decel = required(s.decel_limit, road_class, "decel_limit")?;
    let duration = required(s.lc_duration, road_class, "lc_duration")?;
    let yaw = required(s.max_yaw_rate, road_class, "max_yaw_rate")?;
    let range_recip = required(s.init_range_recip, road_class, "init_range_recip")?;
    let ttc_recip = required(s.pos_init_ttc_recip, road_class, "pos_init_ttc_recip")?;

    let mut u = SeededUniform::new(derive_seed(seed, 0xD21E));
    let desired_headway = headway.sample(1, derive_seed(seed, 1))[0];
    let a_max = truncated_gev(&accel, u.next_open01(), opts.accel_bounds)?;
    let a_min = -truncated_gev(&decel, u.next_open01(), opts.decel_bounds)?;
    let lc_duration = truncated_gev(&duration, u.next_open01(), opts.lc_duration_bounds)?;
    let r_cap = truncated_gev(&yaw, u.next_open01(), opts.yaw_cap_bounds)?;
    let z =
        statrs::distribution::ContinuousCDF::inverse_cdf(&statrs::distribution::Normal::standard(), u.next_open01());
    let v_ff = (opts.free_flow_speed.mean + opts.free_flow_speed.sd * z).max(1.0);

    let gains = match &s.gain_mean_curves {
        Some(curve) if !curve.is_empty() => GainModel::Tabulated { curve: curve.clone() },
        _ => GainModel::Constant {
            kd: opts.fallback_kd,
            kp: opts.fallback_kp,
        },
    };
    Ok(DriverParams {
        id: seed,
        road_class,
        desired_headway,
        a_max,
        a_min,
        v_ff,
        gains,
        gap_accept_recip: range_recip.quantile(opts.gap_quantile)?,
        ttc_accept_recip: ttc_recip.quantile(opts.ttc_quantile)?,
        lc_duration,
        r_cap,
        k_ff: opts.k_ff,
        lane_width: opts.lane_width,
    })
}

impl DriverParams {
    pub fn clip(&self, a: f64) -> f64 {
        a.clamp(self.a_min, self.a_max)
    }
}

/// `K_D(R) Rdot + K_P(R) (R - Th_d v)`, clipped to the driver's limits.
/// Without a leader the law has no input and returns zero.
pub fn car_following_accel(driver: &DriverParams, state: &LongitudinalState) -> f64 {
    if !state.has_leader {
        return 0.0;
    }
    let (kd, kp) = driver.gains.at(state.range);
    let raw = kd * state.range_rate + kp * (state.range - driver.desired_headway * state.v);
    driver.clip(raw)
}

/// Proportional speed tracking toward the free-flow speed, clipped.
pub fn free_flow_accel(driver: &DriverParams, v: f64) -> f64 {
    driver.clip(driver.k_ff * (driver.v_ff - v))
}
