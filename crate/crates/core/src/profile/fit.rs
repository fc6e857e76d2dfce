//! Population statistics and profile fitting.

use std::collections::BTreeMap;

use log::{debug, warn};
use serde::{Deserialize, Serialize};

use super::{EtiquetteProfile, GainCurvePoint, ProfileError, Result, ScenarioProfile};
use crate::dist::{derive_seed, ExponentialParams, GevParams, LaplaceParams, LognormalParams};
use crate::estimate::{
    default_range_grid, driver_extremes, fit_gain_polynomials, gain_population_stats, group_by_driver,
    start_to_brake_ttc, yaw_rate_kalman, ExtremesOptions, GainFitOptions, GainPolynomials, GainStat, GridOutcome,
    KalmanOptions,
};
use crate::extract::{CarFollowingEpisode, LaneChangeEvent, RoadClass};

/// Smallest population any profile field is fitted from.
pub const MIN_POPULATION: usize = 20;

/// Raw population values behind each profile field, for one road class.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct PopulationSamples {
    /// Per-driver acceleration limits, m/s^2.
    pub accel_limits: Vec<f64>,
    /// Per-driver deceleration limits as positive magnitudes, m/s^2.
    pub decel_limits: Vec<f64>,
    pub mean_headways: Vec<f64>,
    pub headway_limits: Vec<f64>,
    pub brake_ttc: Vec<f64>,
    pub max_yaw_rates: Vec<f64>,
    pub init_range_recip: Vec<f64>,
    /// Signed reciprocal initial TTC, 1/s.
    pub init_ttc_recip: Vec<f64>,
    /// Positive reciprocal initial TTC, 1/s.
    pub pos_init_ttc_recip: Vec<f64>,
    pub lc_durations: Vec<f64>,
    #[serde(default)]
    pub gains: Vec<GainPolynomials>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PopulationOptions {
    pub extremes: ExtremesOptions,
    /// Gain fitting per driver; `None` skips gain curves.
    pub gains: Option<GainFitOptions>,
    pub kalman: KalmanOptions,
    pub min_population: usize,
    pub range_grid: Vec<f64>,
}

impl Default for PopulationOptions {
    fn default() -> Self {
        Self {
            extremes: ExtremesOptions::default(),
            gains: None,
            kalman: KalmanOptions::default(),
            min_population: MIN_POPULATION,
            range_grid: default_range_grid(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum FieldStatus {
    Fitted,
    Absent { reason: String },
}

/// Outcome of fitting one profile field.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FieldNote {
    pub road_class: RoadClass,
    pub field: String,
    pub samples: usize,
    #[serde(flatten)]
    pub status: FieldStatus,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProfileFit {
    pub profile: EtiquetteProfile,
    pub notes: Vec<FieldNote>,
    pub warnings: Vec<String>,
}

impl ProfileFit {
    pub fn absent(&self) -> impl Iterator<Item = &FieldNote> {
        self.notes
            .iter()
            .filter(|n| matches!(n.status, FieldStatus::Absent { .. }))
    }
}

/// Reduces extracted events to the per-road-class population values.
///
/// Drivers below the sample floor are skipped with a warning. Events without
/// a yaw rate are run through the lateral filter at their own sample step.
pub fn collect_population(
    episodes: &[CarFollowingEpisode],
    events: &[LaneChangeEvent],
    opts: &PopulationOptions,
) -> (BTreeMap<RoadClass, PopulationSamples>, Vec<String>) {
    let mut pops: BTreeMap<RoadClass, PopulationSamples> = BTreeMap::new();
    let mut warnings = Vec::new();

    for ((driver, rc), eps) in group_by_driver(episodes) {
        let pop = pops.entry(rc).or_default();
        for ep in &eps {
            pop.brake_ttc.extend(start_to_brake_ttc(ep));
        }
        match driver_extremes(eps.iter().copied(), &opts.extremes) {
            Ok(ex) => {
                pop.mean_headways.push(ex.mean_headway);
                pop.headway_limits.push(ex.headway_limit);
                if let Some(a) = ex.accel_limit {
                    pop.accel_limits.push(a);
                }
                if let Some(d) = ex.decel_limit {
                    pop.decel_limits.push(-d);
                }
            }
            Err(e) => warnings.push(format!("driver {driver} ({rc}) skipped: {e}")),
        }
        if let Some(gopts) = &opts.gains {
            match fit_gain_polynomials(eps.iter().copied(), gopts) {
                Ok(fit) => pop.gains.push(fit.gains),
                Err(e) => warnings.push(format!("driver {driver} ({rc}) gains skipped: {e}")),
            }
        }
    }

    for ev in events {
        let pop = pops.entry(ev.road_class).or_default();
        pop.init_range_recip.push(1.0 / ev.initial_range);
        pop.init_ttc_recip.push(ev.initial_ttc_recip);
        if ev.initial_ttc_recip > 0.0 {
            pop.pos_init_ttc_recip.push(ev.initial_ttc_recip);
        }
        pop.lc_durations.push(ev.duration);
        let r_max = match ev.r_max {
            Some(r) => Some(r),
            None if ev.lateral.len() >= 2 => {
                let dt = ev.lateral[1].t - ev.lateral[0].t;
                match yaw_rate_kalman(ev, dt, &opts.kalman) {
                    Ok(est) => Some(est.r_max),
                    Err(e) => {
                        warnings.push(format!("cut-in at t={} in trip {}: {e}", ev.t_start, ev.trip_id));
                        None
                    }
                }
            }
            None => None,
        };
        if let Some(r) = r_max {
            pop.max_yaw_rates.push(r);
        }
    }
    for w in &warnings {
        debug!("{w}");
    }
    (pops, warnings)
}

fn fit_field<T>(
    notes: &mut Vec<FieldNote>,
    rc: RoadClass,
    field: &str,
    values: &[f64],
    min: usize,
    fit: impl FnOnce(&[f64]) -> std::result::Result<T, String>,
) -> Option<T> {
    let mut note = FieldNote {
        road_class: rc,
        field: field.to_string(),
        samples: values.len(),
        status: FieldStatus::Fitted,
    };
    let out = if values.len() < min {
        note.status = FieldStatus::Absent {
            reason: format!("{} values, need {min}", values.len()),
        };
        None
    } else {
        match fit(values) {
            Ok(v) => Some(v),
            Err(reason) => {
                note.status = FieldStatus::Absent { reason };
                None
            }
        }
    };
    if let FieldStatus::Absent { reason } = &note.status {
        warn!("{rc} {field} left absent: {reason}");
    }
    notes.push(note);
    out
}

fn gain_curves(gains: &[GainPolynomials], grid: &[f64], min: usize) -> Option<Vec<GainCurvePoint>> {
    if gains.len() < min {
        return None;
    }
    let summary = |s: &GainStat| match s {
        GainStat::Fitted(g) => (g.mean, g.p25, g.p75),
        GainStat::ZeroSpread { value } => (*value, *value, *value),
    };
    let points: Vec<GainCurvePoint> = gain_population_stats(gains, grid, min)
        .into_iter()
        .filter_map(|p| match &p.outcome {
            GridOutcome::Evaluated { kd, kp } => {
                let (kd_mean, kd_p25, kd_p75) = summary(kd);
                let (kp_mean, kp_p25, kp_p75) = summary(kp);
                Some(GainCurvePoint {
                    range: p.range,
                    kd_mean,
                    kd_p25,
                    kd_p75,
                    kp_mean,
                    kp_p25,
                    kp_p75,
                })
            }
            GridOutcome::Omitted => None,
        })
        .collect();
    (!points.is_empty()).then_some(points)
}

/// Fits every profile field from population values. Fields with fewer than
/// `min_population` values, or whose fit fails, are left absent and noted.
pub fn fit_population(
    name: &str,
    pops: &BTreeMap<RoadClass, PopulationSamples>,
    min_population: usize,
    range_grid: &[f64],
) -> Result<ProfileFit> {
    let mut profile = EtiquetteProfile {
        name: name.to_string(),
        highway: None,
        local: None,
    };
    let mut notes = Vec::new();
    let gev = |v: &[f64]| GevParams::fit(v).map_err(|e| e.to_string());
    for (&rc, pop) in pops {
        let n = &mut notes;
        let m = min_population;
        let s = ScenarioProfile {
            accel_limit: fit_field(n, rc, "accel_limit", &pop.accel_limits, m, gev),
            decel_limit: fit_field(n, rc, "decel_limit", &pop.decel_limits, m, gev),
            mean_headway: fit_field(n, rc, "mean_headway", &pop.mean_headways, m, |v| {
                LognormalParams::fit(v).map_err(|e| e.to_string())
            }),
            extreme_headway: fit_field(n, rc, "extreme_headway", &pop.headway_limits, m, gev),
            brake_ttc: fit_field(n, rc, "brake_ttc", &pop.brake_ttc, m, gev),
            max_yaw_rate: fit_field(n, rc, "max_yaw_rate", &pop.max_yaw_rates, m, gev),
            init_range_recip: fit_field(n, rc, "init_range_recip", &pop.init_range_recip, m, gev),
            init_ttc_recip: fit_field(n, rc, "init_ttc_recip", &pop.init_ttc_recip, m, |v| {
                LaplaceParams::fit(v).map_err(|e| e.to_string())
            }),
            pos_init_ttc_recip: fit_field(n, rc, "pos_init_ttc_recip", &pop.pos_init_ttc_recip, m, |v| {
                ExponentialParams::fit(v).map_err(|e| e.to_string())
            }),
            lc_duration: fit_field(n, rc, "lc_duration", &pop.lc_durations, m, gev),
            gain_mean_curves: gain_curves(&pop.gains, range_grid, m),
        };
        if s.field_count() > 0 || s.gain_mean_curves.is_some() {
            *profile.scenario_mut(rc) = Some(s);
        }
    }
    if profile.highway.is_none() && profile.local.is_none() {
        return Err(ProfileError::Empty);
    }
    Ok(ProfileFit {
        profile,
        notes,
        warnings: Vec::new(),
    })
}

/// Extracted events to a fitted profile.
pub fn fit_profile(
    name: &str,
    episodes: &[CarFollowingEpisode],
    events: &[LaneChangeEvent],
    opts: &PopulationOptions,
) -> Result<ProfileFit> {
    let (pops, warnings) = collect_population(episodes, events, opts);
    let mut fit = fit_population(name, &pops, opts.min_population, &opts.range_grid)?;
    fit.warnings = warnings;
    Ok(fit)
}

/// Draws `n` values for every field present in the profile, each field from
/// its own sub-stream of `seed`.
pub fn synthesize(profile: &EtiquetteProfile, n: usize, seed: u64) -> Result<BTreeMap<RoadClass, PopulationSamples>> {
    let mut out = BTreeMap::new();
    for (ci, rc) in RoadClass::ALL.into_iter().enumerate() {
        let Some(s) = profile.scenario(rc) else { continue };
        let stream = |f: u64| derive_seed(seed, 100 * ci as u64 + f);
        let gev = |g: &Option<GevParams>, f: u64| -> Result<Vec<f64>> {
            Ok(match g {
                Some(g) => g.sample(n, stream(f))?,
                None => Vec::new(),
            })
        };
        let pop = PopulationSamples {
            accel_limits: gev(&s.accel_limit, 1)?,
            decel_limits: gev(&s.decel_limit, 2)?,
            mean_headways: s.mean_headway.map(|p| p.sample(n, stream(3))).unwrap_or_default(),
            headway_limits: gev(&s.extreme_headway, 4)?,
            brake_ttc: gev(&s.brake_ttc, 5)?,
            max_yaw_rates: gev(&s.max_yaw_rate, 6)?,
            init_range_recip: gev(&s.init_range_recip, 7)?,
            init_ttc_recip: s.init_ttc_recip.map(|p| p.sample(n, stream(8))).unwrap_or_default(),
            pos_init_ttc_recip: s.pos_init_ttc_recip.map(|p| p.sample(n, stream(9))).unwrap_or_default(),
            lc_durations: gev(&s.lc_duration, 10)?,
            gains: Vec::new(),
        };
        out.insert(rc, pop);
    }
    Ok(out)
}
