use serde::{Deserialize, Serialize};

use super::{CarFollowingEpisode, TrajectorySample, Trip};

/// Axis-aligned latitude/longitude box, inclusive bounds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeoBox {
    pub lat_min: f64,
    pub lat_max: f64,
    pub lon_min: f64,
    pub lon_max: f64,
}

impl GeoBox {
    /// Michigan-wide box used for car-following queries.
    pub const MICHIGAN: GeoBox = GeoBox {
        lat_min: 41.0,
        lat_max: 44.5,
        lon_min: -88.2,
        lon_max: -82.0,
    };

    /// Ann Arbor box used for free-flow trips.
    pub const ANN_ARBOR: GeoBox = GeoBox {
        lat_min: 42.18,
        lat_max: 42.34,
        lon_min: -83.85,
        lon_max: -83.55,
    };

    pub fn contains(&self, lat: f64, lon: f64) -> bool {
        (self.lat_min..=self.lat_max).contains(&lat) && (self.lon_min..=self.lon_max).contains(&lon)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CfCriteria {
    pub range_min: f64,
    pub range_max: f64,
    /// Range-rate bound, applied as `|Rdot| <= max_range_rate`.
    pub max_range_rate: f64,
    /// Host speed must be strictly above this.
    pub min_speed: f64,
    pub region: GeoBox,
    /// Target lateral offset bound while following.
    pub max_target_offset: f64,
    /// Lane offset bound for host and leader.
    pub max_lane_offset: f64,
    /// Sample-to-sample range jump that signals a target switch.
    pub max_range_jump: f64,
    /// Runs must last strictly longer than this.
    pub min_duration: f64,
    /// Longest sensor dropout bridged by interpolation.
    pub max_gap: f64,
}

impl Default for CfCriteria {
    fn default() -> Self {
        Self {
            range_min: 0.1,
            range_max: 90.0,
            max_range_rate: 10.0,
            min_speed: 10.0,
            region: GeoBox::MICHIGAN,
            max_target_offset: 0.5,
            max_lane_offset: 0.5,
            max_range_jump: 10.0,
            min_duration: 50.0,
            max_gap: 0.3,
        }
    }
}

const TIME_EPS: f64 = 1e-6;

impl CfCriteria {
    fn host_ok(&self, s: &TrajectorySample) -> bool {
        s.v > self.min_speed && self.region.contains(s.lat_deg, s.lon_deg) && s.lane_offset.abs() < self.max_lane_offset
    }

    fn target_ok(&self, s: &TrajectorySample) -> bool {
        match (s.range, s.range_rate, s.target_offset) {
            (Some(r), Some(rr), Some(d)) => {
                (self.range_min..=self.range_max).contains(&r)
                    && rr.abs() <= self.max_range_rate
                    && d.abs() <= self.max_target_offset
                    && (s.lane_offset + d).abs() < self.max_lane_offset
            }
            _ => false,
        }
    }

    /// Checks one episode against every per-sample criterion, independently of
    /// how it was built. Returns a description of the first violation.
    pub fn validate_episode(&self, ep: &CarFollowingEpisode) -> Result<(), String> {
        if ep.duration() <= self.min_duration {
            return Err(format!(
                "duration {} s is not above {} s",
                ep.duration(),
                self.min_duration
            ));
        }
        for (i, s) in ep.samples.iter().enumerate() {
            if !self.host_ok(s) || !self.target_ok(s) {
                return Err(format!("sample {i} at t={} violates the following criteria", s.t));
            }
            if s.road_class != ep.road_class {
                return Err(format!("sample {i} changes road class"));
            }
        }
        for w in ep.samples.windows(2) {
            if w[1].t <= w[0].t {
                return Err(format!("time not increasing at t={}", w[1].t));
            }
            let jump = (w[1].range.unwrap_or(0.0) - w[0].range.unwrap_or(0.0)).abs();
            if jump > self.max_range_jump {
                return Err(format!("range jumps by {jump} m at t={}", w[1].t));
            }
        }
        Ok(())
    }
}

/// Splits a trip into maximal car-following runs.
///
/// A run continues while every sample satisfies the host and target criteria.
/// Samples where the host is fine but the target fields are missing are held
/// back; if a valid sample follows within `max_gap` seconds of the last valid
/// one, the missing target fields are filled by linear interpolation,
/// otherwise the run ends at the last valid sample.
pub fn segment_car_following(trip: &Trip, criteria: &CfCriteria) -> Vec<CarFollowingEpisode> {
    let mut episodes = Vec::new();
    let mut run: Vec<TrajectorySample> = Vec::new();
    let mut pending: Vec<TrajectorySample> = Vec::new();

    let mut close_run = |run: &mut Vec<TrajectorySample>| {
        if let (Some(first), Some(last)) = (run.first(), run.last()) {
            if last.t - first.t > criteria.min_duration + TIME_EPS {
                episodes.push(CarFollowingEpisode {
                    driver_id: trip.driver_id.clone(),
                    trip_id: trip.trip_id.clone(),
                    road_class: first.road_class,
                    samples: std::mem::take(run),
                });
            }
        }
        run.clear();
    };

    for s in &trip.samples {
        let host = criteria.host_ok(s);
        let missing = s.range.is_none() || s.range_rate.is_none() || s.target_offset.is_none();
        let same_class = run.last().is_none_or(|l| l.road_class == s.road_class);

        if host && missing && !run.is_empty() && same_class {
            pending.push(s.clone());
            continue;
        }
        if !(host && criteria.target_ok(s)) || !same_class {
            close_run(&mut run);
            pending.clear();
            continue;
        }
        if let Some(last) = run.last() {
            let jump = (s.range.unwrap() - last.range.unwrap()).abs();
            let gap = s.t - last.t;
            if jump > criteria.max_range_jump || (!pending.is_empty() && gap > criteria.max_gap + 1e-9) {
                close_run(&mut run);
                pending.clear();
            } else if !pending.is_empty() {
                let last = last.clone();
                for mut p in pending.drain(..) {
                    let w = (p.t - last.t) / gap;
                    let lerp = |a: Option<f64>, b: Option<f64>| Some(a.unwrap() + w * (b.unwrap() - a.unwrap()));
                    p.range = lerp(last.range, s.range);
                    p.range_rate = lerp(last.range_rate, s.range_rate);
                    p.target_offset = lerp(last.target_offset, s.target_offset);
                    run.push(p);
                }
            }
        }
        run.push(s.clone());
    }
    close_run(&mut run);
    episodes
}
