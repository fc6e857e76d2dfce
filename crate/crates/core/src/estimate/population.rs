//! Cross-driver gain statistics on a range grid.

use log::warn;
use serde::{Deserialize, Serialize};

use super::GainPolynomials;
use crate::dist::{percentile_sorted, DistError, GevParams};

/// 5 m to 90 m in 5 m steps.
pub fn default_range_grid() -> Vec<f64> {
    (1..=18).map(|i| 5.0 * i as f64).collect()
}

/// Population summary of one gain at one range.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GainSummary {
    /// GEV fitted to the cross-driver sample; `None` when the fit failed.
    pub gev: Option<GevParams>,
    /// Model mean of the GEV, or the sample mean when the GEV is missing or
    /// has no finite mean.
    pub mean: f64,
    pub p25: f64,
    pub p75: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum GainStat {
    Fitted(GainSummary),
    /// Every contributing driver has the same gain value.
    ZeroSpread {
        value: f64,
    },
}

impl GainStat {
    pub fn mean(&self) -> f64 {
        match self {
            GainStat::Fitted(s) => s.mean,
            GainStat::ZeroSpread { value } => *value,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum GridOutcome {
    Evaluated {
        kd: GainStat,
        kp: GainStat,
    },
    /// Too few drivers cover this range.
    Omitted,
}

impl GridOutcome {
    /// Both gains have zero spread across drivers.
    pub fn is_degenerate(&self) -> bool {
        matches!(
            self,
            GridOutcome::Evaluated {
                kd: GainStat::ZeroSpread { .. },
                kp: GainStat::ZeroSpread { .. }
            }
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GainGridPoint {
    pub range: f64,
    pub drivers: usize,
    pub outcome: GridOutcome,
}

fn summarize(values: &[f64]) -> Result<GainStat, DistError> {
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let sample_mean = values.iter().sum::<f64>() / values.len() as f64;
    let gev = match GevParams::fit(values) {
        Ok(g) => Some(g),
        Err(DistError::DegenerateData(_)) => return Ok(GainStat::ZeroSpread { value: values[0] }),
        Err(e) => {
            warn!("GEV fit of gain sample failed: {e}");
            None
        }
    };
    Ok(GainStat::Fitted(GainSummary {
        mean: gev.and_then(|g| g.mean().ok()).unwrap_or(sample_mean),
        gev,
        p25: percentile_sorted(&sorted, 0.25)?,
        p75: percentile_sorted(&sorted, 0.75)?,
    }))
}

/// Evaluates every driver's gains on the grid, skipping drivers whose fit
/// range does not cover the grid point, and fits a GEV to each cross-driver
/// sample. Points with fewer than `min_drivers` contributors are omitted.
pub fn gain_population_stats(gains: &[GainPolynomials], grid: &[f64], min_drivers: usize) -> Vec<GainGridPoint> {
    grid.iter()
        .map(|&range| {
            let covering: Vec<&GainPolynomials> = gains.iter().filter(|g| g.in_fit_range(range)).collect();
            let drivers = covering.len();
            if drivers < min_drivers.max(1) {
                warn!("range {range} m: {drivers} drivers, need {min_drivers}; point omitted");
                return GainGridPoint {
                    range,
                    drivers,
                    outcome: GridOutcome::Omitted,
                };
            }
            let kd: Vec<f64> = covering.iter().map(|g| g.kd_at(range)).collect();
            let kp: Vec<f64> = covering.iter().map(|g| g.kp_at(range)).collect();
            let stat = |values: &[f64], name: &str| {
                summarize(values).unwrap_or_else(|e| {
                    warn!("range {range} m: {name} summary failed: {e}");
                    GainStat::ZeroSpread { value: values[0] }
                })
            };
            let outcome = GridOutcome::Evaluated {
                kd: stat(&kd, "K_D"),
                kp: stat(&kp, "K_P"),
            };
            if outcome.is_degenerate() {
                warn!("range {range} m: gains have zero spread across drivers");
            }
            GainGridPoint {
                range,
                drivers,
                outcome,
            }
        })
        .collect()
}
