//! Model-implied summary statistics of a profile.

use std::fmt::Write as _;
use std::io::Write;

use serde::{Deserialize, Serialize};

use super::{builtin_empirical, builtin_profile, EtiquetteProfile, ScenarioProfile};
use crate::dist::GevParams;
use crate::extract::RoadClass;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub road_class: RoadClass,
    pub field: String,
    /// `mean`, `mode`, `median`, or a level such as `q25`.
    pub statistic: String,
    pub value: f64,
    pub units: String,
    /// Reciprocal of `value` for reciprocal-space fields (range in m, TTC in s).
    pub inverted: Option<f64>,
    /// Published empirical percentile at the same level (built-in profile only).
    pub empirical: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProfileReport {
    pub name: String,
    pub rows: Vec<ReportRow>,
    pub footnotes: Vec<String>,
}

const GEV_LEVELS: [f64; 5] = [0.10, 0.30, 0.50, 0.70, 0.90];

fn level_label(p: f64) -> String {
    format!("q{:02}", (p * 100.0).round() as u32)
}

fn is_reciprocal(field: &str) -> bool {
    matches!(field, "init_range_recip" | "init_ttc_recip" | "pos_init_ttc_recip")
}

struct Builder<'a> {
    rc: RoadClass,
    rows: Vec<ReportRow>,
    empirical: &'a [super::EmpiricalPercentile],
}

impl Builder<'_> {
    fn push(&mut self, field: &str, statistic: String, value: f64, level: Option<f64>) {
        let empirical = level.and_then(|p| {
            self.empirical
                .iter()
                .find(|e| e.road_class == self.rc && e.field == field && (e.level - p).abs() < 1e-12)
                .map(|e| e.value)
        });
        self.rows.push(ReportRow {
            road_class: self.rc,
            field: field.to_string(),
            statistic,
            value,
            units: ScenarioProfile::units(field).to_string(),
            inverted: (is_reciprocal(field) && value != 0.0).then(|| 1.0 / value),
            empirical,
        });
    }

    fn gev(&mut self, field: &str, g: &GevParams) {
        if let Ok(m) = g.mean() {
            self.push(field, "mean".into(), m, None);
        }
        if let Ok(m) = g.mode() {
            self.push(field, "mode".into(), m, None);
        }
        let mut levels = GEV_LEVELS.to_vec();
        levels.extend(
            self.empirical
                .iter()
                .filter(|e| e.road_class == self.rc && e.field == field)
                .map(|e| e.level),
        );
        levels.sort_by(f64::total_cmp);
        levels.dedup_by(|a, b| (*a - *b).abs() < 1e-12);
        for p in levels {
            if let Ok(q) = g.quantile(p) {
                self.push(field, level_label(p), q, Some(p));
            }
        }
    }

    fn quantiles(&mut self, field: &str, levels: &[f64], q: impl Fn(f64) -> Option<f64>) {
        for &p in levels {
            if let Some(v) = q(p) {
                self.push(field, level_label(p), v, Some(p));
            }
        }
    }
}

/// Summarizes every distribution in the profile: GEV means, modes and
/// quantiles, lognormal quartiles, and reciprocal fields also as ranges or
/// TTCs. The empirical column is filled only for an unmodified built-in
/// profile.
pub fn profile_report(profile: &EtiquetteProfile) -> ProfileReport {
    let empirical = builtin_profile(&profile.name)
        .ok()
        .filter(|b| b == profile)
        .and_then(|_| builtin_empirical(&profile.name))
        .unwrap_or_default();
    let mut rows = Vec::new();
    for rc in RoadClass::ALL {
        let Some(s) = profile.scenario(rc) else { continue };
        let mut b = Builder {
            rc,
            rows: Vec::new(),
            empirical: &empirical,
        };
        for field in ["accel_limit", "decel_limit"] {
            if let Some(g) = s.gev_field(field) {
                b.gev(field, g);
            }
        }
        if let Some(h) = &s.mean_headway {
            b.push("mean_headway", "mean".into(), h.arith_mean, None);
            b.quantiles("mean_headway", &[0.25, 0.50, 0.75], |p| h.quantile(p).ok());
        }
        for field in ["extreme_headway", "brake_ttc", "max_yaw_rate", "init_range_recip"] {
            if let Some(g) = s.gev_field(field) {
                b.gev(field, g);
            }
        }
        if let Some(l) = &s.init_ttc_recip {
            b.push("init_ttc_recip", "median".into(), l.mu, None);
            b.quantiles("init_ttc_recip", &GEV_LEVELS, |p| l.quantile(p).ok());
        }
        if let Some(e) = &s.pos_init_ttc_recip {
            b.push("pos_init_ttc_recip", "mean".into(), e.mu, None);
            b.quantiles("pos_init_ttc_recip", &GEV_LEVELS, |p| e.quantile(p).ok());
        }
        if let Some(g) = &s.lc_duration {
            b.gev("lc_duration", g);
        }
        rows.extend(b.rows);
    }
    let mut footnotes = vec![
        "decel_limit is reported as a positive magnitude; the limit itself is its negative.".to_string(),
        "Quantiles (qNN) are model-implied; reciprocal fields also list their inverse (range in m, TTC in s)."
            .to_string(),
    ];
    if !empirical.is_empty() {
        footnotes.push(
            "The empirical column holds published data percentiles, not model quantiles; the three \
             initial-range values are read as the 10%, 50% and 90% levels."
                .to_string(),
        );
    }
    ProfileReport {
        name: profile.name.clone(),
        rows,
        footnotes,
    }
}

fn fmt_num(v: f64) -> String {
    if v != 0.0 && (v.abs() < 1e-3 || v.abs() >= 1e5) {
        format!("{v:.4e}")
    } else {
        format!("{v:.4}")
    }
}

impl ProfileReport {
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "Profile: {}", self.name);
        let mut current: Option<(RoadClass, &str)> = None;
        for r in &self.rows {
            if current.map(|c| c.0) != Some(r.road_class) {
                let _ = writeln!(out, "\n[{}]", r.road_class);
            }
            if current != Some((r.road_class, r.field.as_str())) {
                let _ = writeln!(out, "  {} ({})", r.field, r.units);
                current = Some((r.road_class, r.field.as_str()));
            }
            let _ = write!(out, "    {:<7}{:>12}", r.statistic, fmt_num(r.value));
            if let Some(inv) = r.inverted {
                let _ = write!(out, "   inverse {:>10}", fmt_num(inv));
            }
            if let Some(e) = r.empirical {
                let _ = write!(out, "   empirical {:>10}", fmt_num(e));
            }
            out.push('\n');
        }
        if !self.footnotes.is_empty() {
            out.push('\n');
            for f in &self.footnotes {
                let _ = writeln!(out, "* {f}");
            }
        }
        out
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> csv::Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record([
            "road_class",
            "field",
            "statistic",
            "value",
            "units",
            "inverted",
            "empirical",
        ])?;
        let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
        for r in &self.rows {
            w.write_record([
                r.road_class.to_string(),
                r.field.clone(),
                r.statistic.clone(),
                r.value.to_string(),
                r.units.clone(),
                opt(r.inverted),
                opt(r.empirical),
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn find(&self, road_class: RoadClass, field: &str, statistic: &str) -> Option<&ReportRow> {
        self.rows
            .iter()
            .find(|r| r.road_class == road_class && r.field == field && r.statistic == statistic)
    }
}
