use serde::{Deserialize, Serialize};

use super::{CutInDirection, LaneChangeEvent, LateralSample, TrajectorySample, Trip};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CutInCriteria {
    /// A crossing starts from a target offset strictly above this, m.
    pub outer_offset: f64,
    /// A crossing ends at the first target offset strictly below this, m.
    pub inner_offset: f64,
    /// Host lane offset bound while the crossing is in progress, m.
    pub max_host_lane_offset: f64,
    /// Sample-to-sample range jump that signals a different target, m.
    pub max_range_jump: f64,
}

impl Default for CutInCriteria {
    fn default() -> Self {
        Self {
            outer_offset: 3.0,
            inner_offset: 0.3,
            max_host_lane_offset: 0.5,
            max_range_jump: 10.0,
        }
    }
}

impl CutInCriteria {
    /// Re-checks an event's invariants independently of how it was built.
    pub fn validate_event(&self, ev: &LaneChangeEvent) -> Result<(), String> {
        if !(ev.duration > 0.0) {
            return Err(format!("non-positive duration {}", ev.duration));
        }
        if (ev.duration - (ev.t_end - ev.t_start)).abs() > 1e-9 {
            return Err("duration differs from t_end - t_start".into());
        }
        if !(ev.initial_range > 0.0) {
            return Err(format!("non-positive initial range {}", ev.initial_range));
        }
        let (first, last) = match (ev.lateral.first(), ev.lateral.last()) {
            (Some(f), Some(l)) => (f, l),
            _ => return Err("empty lateral series".into()),
        };
        if !(first.target_offset.abs() > self.outer_offset) {
            return Err(format!("starts at offset {}", first.target_offset));
        }
        if !(last.target_offset.abs() < self.inner_offset) {
            return Err(format!("ends at offset {}", last.target_offset));
        }
        Ok(())
    }
}

/// Finds targets that move from an adjacent lane into the host lane.
///
/// An event runs from the last sample with `|d_lat| > outer_offset` to the
/// first later sample with `|d_lat| < inner_offset`, provided the target is
/// tracked on every sample in between (no missing offset, no range jump) and
/// the host stays inside its lane. A target starting on the left (positive
/// offset) moves left-to-right.
pub fn detect_cut_ins(trip: &Trip, criteria: &CutInCriteria) -> Vec<LaneChangeEvent> {
    let s = &trip.samples;
    let mut events = Vec::new();
    let mut anchor: Option<usize> = None;

    for i in 0..s.len() {
        let Some(d) = s[i].target_offset else {
            anchor = None;
            continue;
        };
        if let Some(a) = anchor {
            let jump = match (s[i].range, s[i - 1].range) {
                (Some(r1), Some(r0)) => (r1 - r0).abs() > criteria.max_range_jump,
                _ => true,
            };
            let flipped = s[a].target_offset.unwrap().signum() != d.signum() && d.abs() >= criteria.inner_offset;
            if jump || flipped {
                anchor = None;
            }
        }
        if d.abs() > criteria.outer_offset {
            anchor = Some(i);
            continue;
        }
        if d.abs() < criteria.inner_offset {
            if let Some(a) = anchor.take() {
                let window = &s[a..=i];
                if window
                    .iter()
                    .all(|x| x.lane_offset.abs() < criteria.max_host_lane_offset)
                {
                    if let Some(ev) = build_event(trip, window) {
                        events.push(ev);
                    }
                }
            }
        }
    }
    events
}

fn build_event(trip: &Trip, window: &[TrajectorySample]) -> Option<LaneChangeEvent> {
    let start = window.first()?;
    let end = window.last()?;
    let r0 = start.range.filter(|r| *r > 0.0)?;
    let rr0 = start.range_rate.unwrap_or(0.0);
    let d0 = start.target_offset?;
    Some(LaneChangeEvent {
        driver_id: trip.driver_id.clone(),
        trip_id: trip.trip_id.clone(),
        road_class: start.road_class,
        direction: if d0 > 0.0 {
            CutInDirection::LeftToRight
        } else {
            CutInDirection::RightToLeft
        },
        t_start: start.t,
        t_end: end.t,
        duration: end.t - start.t,
        initial_range: r0,
        initial_ttc: (rr0 != 0.0).then(|| r0 / -rr0),
        initial_ttc_recip: -rr0 / r0,
        initial_speed: start.v,
        lateral: window
            .iter()
            .map(|x| LateralSample {
                t: x.t,
                target_offset: x.target_offset.unwrap_or(0.0),
                v: x.v,
                range_rate: x.range_rate,
            })
            .collect(),
        r_max: None,
    })
}
