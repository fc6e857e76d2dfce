use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{GeoBox, Trip};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FreeFlowCriteria {
    /// Trips must last strictly longer than this, s.
    pub min_duration: f64,
    /// Trips must cover strictly more than this, m.
    pub min_length: f64,
    /// Every sample must lie inside this box.
    pub region: GeoBox,
}

impl Default for FreeFlowCriteria {
    fn default() -> Self {
        Self {
            min_duration: 600.0,
            min_length: 300.0,
            region: GeoBox::ANN_ARBOR,
        }
    }
}

pub fn select_free_flow_trips<'a>(trips: &'a [Trip], criteria: &FreeFlowCriteria) -> Vec<&'a Trip> {
    trips
        .iter()
        .filter(|trip| {
            trip.duration() > criteria.min_duration
                && trip.length() > criteria.min_length
                && trip
                    .samples
                    .iter()
                    .all(|s| criteria.region.contains(s.lat_deg, s.lon_deg))
        })
        .collect()
}

/// Speeds observed on one road link across the selected trips.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct LinkSpeeds {
    pub speeds: Vec<f64>,
    /// Most recent posted limit seen on the link, m/s.
    pub posted_limit: Option<f64>,
}

/// Pools per-sample speeds by link id. Samples without a link id are skipped.
pub fn link_speed_samples<'a>(trips: impl IntoIterator<Item = &'a Trip>) -> BTreeMap<String, LinkSpeeds> {
    let mut out: BTreeMap<String, LinkSpeeds> = BTreeMap::new();
    for trip in trips {
        for s in &trip.samples {
            if let Some(link) = &s.link_id {
                let entry = out.entry(link.clone()).or_default();
                entry.speeds.push(s.v);
                if s.posted_limit.is_some() {
                    entry.posted_limit = s.posted_limit;
                }
            }
        }
    }
    out
}
