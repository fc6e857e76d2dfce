//! Reference profile transcribed from published naturalistic-driving tables.

use serde::{Deserialize, Serialize};

use super::{EtiquetteProfile, ProfileError, Result, ScenarioProfile};
use crate::dist::{ExponentialParams, GevParams, LaplaceParams, LognormalParams};
use crate::extract::RoadClass;

pub const BUILTIN_NAMES: [&str; 1] = ["spmd-2018"];

const fn gev(k: f64, sigma: f64, mu: f64) -> Option<GevParams> {
    Some(GevParams { k, sigma, mu })
}

fn headway(mean: f64, var: f64) -> Option<LognormalParams> {
    Some(LognormalParams::from_arith_moments(mean, var).expect("reference headway moments are valid"))
}

fn spmd_2018() -> EtiquetteProfile {
    EtiquetteProfile {
        name: "spmd-2018".into(),
        highway: Some(ScenarioProfile {
            accel_limit: gev(0.3711, 0.1628, 0.5314),
            decel_limit: gev(0.1669, 0.4722, 2.4461),
            mean_headway: headway(1.42, 0.08),
            extreme_headway: gev(0.0415, 0.1058, 0.3720),
            brake_ttc: gev(0.4006, 7.1869, 13.1760),
            max_yaw_rate: gev(-0.0083, 0.2325, 0.5900),
            init_range_recip: gev(0.8429, 0.0049, 0.0132),
            init_ttc_recip: Some(LaplaceParams {
                lambda: 16.5370,
                mu: -0.0120,
            }),
            pos_init_ttc_recip: Some(ExponentialParams { mu: 0.0376 }),
            lc_duration: gev(0.2675, 2.6435, 4.3243),
            gain_mean_curves: None,
        }),
        local: Some(ScenarioProfile {
            accel_limit: gev(0.1426, 0.1930, 1.0457),
            decel_limit: gev(0.1649, 0.3289, 2.3865),
            mean_headway: headway(2.07, 0.18),
            extreme_headway: gev(-0.0737, 0.2267, 0.6880),
            brake_ttc: gev(0.3989, 7.6780, 13.2650),
            max_yaw_rate: gev(0.1525, 0.7381, 1.3953),
            init_range_recip: gev(0.4495, 0.0069, 0.0166),
            init_ttc_recip: Some(LaplaceParams {
                lambda: 14.0112,
                mu: -0.0185,
            }),
            pos_init_ttc_recip: Some(ExponentialParams { mu: 0.0619 }),
            lc_duration: gev(0.6585, 1.1138, 2.0052),
            gain_mean_curves: None,
        }),
    }
}

/// Looks up a built-in profile by name.
pub fn builtin_profile(name: &str) -> Result<EtiquetteProfile> {
    match name {
        "spmd-2018" => Ok(spmd_2018()),
        _ => Err(ProfileError::UnknownProfile {
            name: name.to_string(),
            available: BUILTIN_NAMES.iter().map(|s| s.to_string()).collect(),
        }),
    }
}

/// A percentile of the underlying data published alongside a built-in
/// profile. These are empirical values, not quantiles of the fitted model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmpiricalPercentile {
    pub road_class: RoadClass,
    pub field: String,
    /// Probability level in (0, 1).
    pub level: f64,
    pub value: f64,
}

/// Published empirical percentiles for a built-in profile.
///
/// The initial-range-reciprocal row lists three values under a single
/// heading; they are read as the 10%, 50% and 90% levels.
pub fn builtin_empirical(name: &str) -> Option<Vec<EmpiricalPercentile>> {
    if name != "spmd-2018" {
        return None;
    }
    let mut out = Vec::new();
    let mut push = |rc: RoadClass, field: &str, rows: &[(f64, f64)]| {
        for &(level, value) in rows {
            out.push(EmpiricalPercentile {
                road_class: rc,
                field: field.to_string(),
                level,
                value,
            });
        }
    };
    use RoadClass::{Highway, Local};
    push(Highway, "mean_headway", &[(0.25, 1.21), (0.50, 1.39), (0.75, 1.60)]);
    push(Local, "mean_headway", &[(0.25, 1.77), (0.50, 2.03), (0.75, 2.33)]);
    push(
        Highway,
        "init_range_recip",
        &[(0.10, 1.0 / 82.3), (0.50, 1.0 / 44.8), (0.90, 1.0 / 17.0)],
    );
    push(
        Local,
        "init_range_recip",
        &[(0.10, 1.0 / 66.5), (0.50, 1.0 / 36.8), (0.90, 1.0 / 21.8)],
    );
    push(
        Highway,
        "pos_init_ttc_recip",
        &[
            (0.10, 1.0 / 219.7),
            (0.30, 1.0 / 68.0),
            (0.70, 1.0 / 22.5),
            (0.90, 1.0 / 12.1),
        ],
    );
    push(
        Local,
        "pos_init_ttc_recip",
        &[
            (0.10, 1.0 / 148.5),
            (0.30, 1.0 / 45.0),
            (0.70, 1.0 / 13.4),
            (0.90, 1.0 / 6.95),
        ],
    );
    push(
        Highway,
        "lc_duration",
        &[(0.10, 2.2), (0.30, 3.6), (0.70, 8.1), (0.90, 13.1)],
    );
    push(
        Local,
        "lc_duration",
        &[(0.10, 1.2), (0.30, 1.8), (0.70, 4.0), (0.90, 7.8)],
    );
    Some(out)
}
