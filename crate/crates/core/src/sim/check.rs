use serde::{Deserialize, Serialize};

use super::Result;
use crate::estimate::yaw_rate_kalman;
use crate::extract::{detect_cut_ins, segment_car_following, CfCriteria, CutInCriteria, RoadClass, Trip};
use crate::profile::{fit_profile, EtiquetteProfile, PopulationOptions, ProfileError, ScenarioProfile};

/// One distribution parameter of the source profile next to its refit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParameterComparison {
    pub road_class: RoadClass,
    pub field: String,
    pub parameter: String,
    pub source: f64,
    pub refit: Option<f64>,
    /// `|refit - source| / |source|`.
    pub relative_error: Option<f64>,
    /// Population size the field was fitted from.
    pub samples: usize,
    /// Why the field could not be refitted.
    pub note: Option<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ConsistencyReport {
    pub episodes: usize,
    pub cut_ins: usize,
    pub rows: Vec<ParameterComparison>,
    pub warnings: Vec<String>,
}

impl ConsistencyReport {
    pub fn find(&self, road_class: RoadClass, field: &str, parameter: &str) -> Option<&ParameterComparison> {
        self.rows
            .iter()
            .find(|r| r.road_class == road_class && r.field == field && r.parameter == parameter)
    }

    pub fn to_text(&self) -> String {
        let mut out = format!("episodes: {}, cut-ins: {}\n", self.episodes, self.cut_ins);
        out.push_str(&format!(
            "{:<8} {:<20} {:<10} {:>12} {:>12} {:>9} {:>8}\n",
            "class", "field", "param", "source", "refit", "rel.err", "n"
        ));
        for r in &self.rows {
            let refit = r.refit.map(|v| format!("{v:.5}")).unwrap_or_else(|| "-".into());
            let err = r
                .relative_error
                .map(|v| format!("{:.2}%", 100.0 * v))
                .unwrap_or_else(|| "-".into());
            out.push_str(&format!(
                "{:<8} {:<20} {:<10} {:>12.5} {:>12} {:>9} {:>8}",
                r.road_class.as_str(),
                r.field,
                r.parameter,
                r.source,
                refit,
                err,
                r.samples
            ));
            if let Some(n) = &r.note {
                out.push_str(&format!("  {n}"));
            }
            out.push('\n');
        }
        out
    }
}

/// Named parameters of every distribution field present in a scenario.
pub fn scenario_parameters(s: &ScenarioProfile) -> Vec<(&'static str, &'static str, f64)> {
    let mut out = Vec::new();
    let gev = [
        ("accel_limit", s.accel_limit),
        ("decel_limit", s.decel_limit),
        ("extreme_headway", s.extreme_headway),
        ("brake_ttc", s.brake_ttc),
        ("max_yaw_rate", s.max_yaw_rate),
        ("init_range_recip", s.init_range_recip),
        ("lc_duration", s.lc_duration),
    ];
    for (field, g) in gev {
        if let Some(g) = g {
            out.extend([(field, "k", g.k), (field, "sigma", g.sigma), (field, "mu", g.mu)]);
        }
    }
    if let Some(l) = s.mean_headway {
        out.extend([
            ("mean_headway", "mean", l.arith_mean),
            ("mean_headway", "variance", l.arith_var),
        ]);
    }
    if let Some(l) = s.init_ttc_recip {
        out.extend([("init_ttc_recip", "lambda", l.lambda), ("init_ttc_recip", "mu", l.mu)]);
    }
    if let Some(e) = s.pos_init_ttc_recip {
        out.push(("pos_init_ttc_recip", "mu", e.mu));
    }
    out
}

/// Re-extracts events from a log, refits a profile and compares every
/// parameter with `profile`. Fields that cannot be refitted are reported
/// with the reason instead of failing the check.
pub fn self_consistency_check(
    trips: &[Trip],
    profile: &EtiquetteProfile,
    opts: &PopulationOptions,
) -> Result<ConsistencyReport> {
    let cf = CfCriteria::default();
    let ci = CutInCriteria::default();
    let episodes: Vec<_> = trips.iter().flat_map(|t| segment_car_following(t, &cf)).collect();
    let mut events: Vec<_> = trips.iter().flat_map(|t| detect_cut_ins(t, &ci)).collect();
    let mut warnings = Vec::new();
    for ev in &mut events {
        let dt = match ev.lateral.as_slice() {
            [a, b, ..] => b.t - a.t,
            _ => continue,
        };
        match yaw_rate_kalman(ev, dt, &opts.kalman) {
            Ok(est) => ev.r_max = Some(est.r_max),
            Err(e) => warnings.push(format!("cut-in in {} at t = {:.1}: {e}", ev.trip_id, ev.t_start)),
        }
    }

    let fitted = match fit_profile(&format!("{}-refit", profile.name), &episodes, &events, opts) {
        Ok(f) => Some(f),
        Err(ProfileError::Empty) => None,
        Err(e) => return Err(e.into()),
    };
    let mut report = ConsistencyReport {
        episodes: episodes.len(),
        cut_ins: events.len(),
        rows: Vec::new(),
        warnings,
    };
    if let Some(f) = &fitted {
        report.warnings.extend(f.warnings.iter().cloned());
    }

    for rc in RoadClass::ALL {
        let Some(source) = profile.scenario(rc) else { continue };
        let refit = fitted.as_ref().and_then(|f| f.profile.scenario(rc));
        let refit_params = refit.map(scenario_parameters).unwrap_or_default();
        for (field, parameter, value) in scenario_parameters(source) {
            let note = fitted
                .as_ref()
                .and_then(|f| f.notes.iter().find(|n| n.road_class == rc && n.field == field));
            let refit_value = refit_params
                .iter()
                .find(|(f, p, _)| *f == field && *p == parameter)
                .map(|x| x.2);
            let reason = match (refit_value, note) {
                (Some(_), _) => None,
                (None, Some(n)) => match &n.status {
                    crate::profile::FieldStatus::Absent { reason } => Some(reason.clone()),
                    crate::profile::FieldStatus::Fitted => None,
                },
                (None, None) => Some("insufficient data: no events for this road class".into()),
            };
            report.rows.push(ParameterComparison {
                road_class: rc,
                field: field.to_string(),
                parameter: parameter.to_string(),
                source: value,
                refit: refit_value,
                relative_error: refit_value.map(|r| (r - value).abs() / value.abs()),
                samples: note.map(|n| n.samples).unwrap_or(0),
                note: reason,
            });
        }
    }
    Ok(report)
}
