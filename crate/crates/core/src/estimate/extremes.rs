use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{EstimateError, Result};
use crate::dist::percentile_sorted;
use crate::extract::{CarFollowingEpisode, RoadClass};

/// Per-driver extreme behavior within one road class.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DriverExtremes {
    pub driver_id: String,
    pub road_class: RoadClass,
    /// 97.5th percentile of throttle-phase acceleration, m/s^2.
    /// `None` when the driver never accelerates without braking.
    pub accel_limit: Option<f64>,
    /// 2.5th percentile of braking acceleration (negative), m/s^2.
    /// `None` when the driver never brakes.
    pub decel_limit: Option<f64>,
    /// 2.5th percentile of time headway, s.
    pub headway_limit: f64,
    /// Mean time headway, s.
    pub mean_headway: f64,
    /// TTC at every brake onset while closing, s, in time order.
    pub brake_ttc: Vec<f64>,
    pub sample_count: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExtremesOptions {
    /// Minimum pooled samples per driver and road class.
    pub min_samples: usize,
}

impl Default for ExtremesOptions {
    fn default() -> Self {
        Self { min_samples: 1000 }
    }
}

/// `R / v` for every sample.
pub fn time_headway_series(episode: &CarFollowingEpisode) -> Vec<f64> {
    episode
        .samples
        .iter()
        .filter_map(|s| s.range.map(|r| r / s.v))
        .collect()
}

pub fn mean_headway<'a>(episodes: impl IntoIterator<Item = &'a CarFollowingEpisode>) -> Option<f64> {
    let (sum, n) = episodes
        .into_iter()
        .flat_map(time_headway_series)
        .fold((0.0, 0usize), |(s, n), h| (s + h, n + 1));
    (n > 0).then(|| sum / n as f64)
}

/// TTC `R / |Rdot|` at each rising edge of the brake flag where the range
/// is closing. A brake already applied on the first sample has no observed
/// onset and is not counted.
pub fn start_to_brake_ttc(episode: &CarFollowingEpisode) -> Vec<f64> {
    episode
        .samples
        .windows(2)
        .filter(|w| w[1].brake && !w[0].brake)
        .filter_map(|w| match (w[1].range, w[1].range_rate) {
            (Some(r), Some(rr)) if rr < 0.0 => Some(r / -rr),
            _ => None,
        })
        .collect()
}

/// Groups episodes by driver and road class, preserving input order within a group.
pub fn group_by_driver(episodes: &[CarFollowingEpisode]) -> BTreeMap<(String, RoadClass), Vec<&CarFollowingEpisode>> {
    let mut out: BTreeMap<(String, RoadClass), Vec<&CarFollowingEpisode>> = BTreeMap::new();
    for ep in episodes {
        out.entry((ep.driver_id.clone(), ep.road_class)).or_default().push(ep);
    }
    out
}

/// Acceleration, deceleration and headway limits of one driver in one road class.
///
/// Throttle samples are those with the brake released and positive
/// acceleration; brake samples are those with the brake applied. Coasting
/// samples only enter the headway pool.
pub fn driver_extremes<'a>(
    episodes: impl IntoIterator<Item = &'a CarFollowingEpisode>,
    opts: &ExtremesOptions,
) -> Result<DriverExtremes> {
    let episodes: Vec<&CarFollowingEpisode> = episodes.into_iter().collect();
    let first = episodes.first().ok_or_else(|| EstimateError::InsufficientData {
        what: "driver extremes".into(),
        needed: opts.min_samples,
        got: 0,
    })?;
    if let Some(ep) = episodes
        .iter()
        .find(|e| e.driver_id != first.driver_id || e.road_class != first.road_class)
    {
        return Err(EstimateError::InvalidInput(format!(
            "episodes mix driver/road class ({} {} vs {} {})",
            first.driver_id, first.road_class, ep.driver_id, ep.road_class
        )));
    }

    let mut throttle = Vec::new();
    let mut brake = Vec::new();
    let mut headway = Vec::new();
    let mut brake_ttc = Vec::new();
    for ep in &episodes {
        for s in &ep.samples {
            if s.brake {
                brake.push(s.a);
            } else if s.a > 0.0 {
                throttle.push(s.a);
            }
            if let Some(r) = s.range {
                headway.push(r / s.v);
            }
        }
        brake_ttc.extend(start_to_brake_ttc(ep));
    }
    let n: usize = episodes.iter().map(|e| e.samples.len()).sum();
    if n < opts.min_samples || headway.is_empty() {
        return Err(EstimateError::InsufficientData {
            what: format!("driver {} ({})", first.driver_id, first.road_class),
            needed: opts.min_samples,
            got: n,
        });
    }

    let pct = |mut v: Vec<f64>, p: f64| -> Option<f64> {
        if v.is_empty() {
            return None;
        }
        v.sort_by(f64::total_cmp);
        percentile_sorted(&v, p).ok()
    };
    let mean_headway = headway.iter().sum::<f64>() / headway.len() as f64;
    Ok(DriverExtremes {
        driver_id: first.driver_id.clone(),
        road_class: first.road_class,
        accel_limit: pct(throttle, 0.975),
        decel_limit: pct(brake, 0.025),
        headway_limit: pct(headway, 0.025).unwrap_or(mean_headway),
        mean_headway,
        brake_ttc,
        sample_count: n,
    })
}
