//! Deterministic inputs shared by the benchmarks.

use etiquette_core::estimate::GainSample;
use etiquette_core::extract::{detect_cut_ins, CutInCriteria, LaneChangeEvent};
use etiquette_core::profile::builtin_profile;
use etiquette_core::sim::{simulate, SimConfig};
use etiquette_core::{EtiquetteProfile, GevParams, RoadClass, Trip};

pub fn profile() -> EtiquetteProfile {
    builtin_profile("spmd-2018").expect("builtin profile")
}

/// `n` draws from the highway acceleration-limit distribution.
pub fn gev_sample(n: usize, seed: u64) -> Vec<f64> {
    accel_limit().sample(n, seed).expect("valid parameters")
}

pub fn accel_limit() -> GevParams {
    profile()
        .highway
        .and_then(|s| s.accel_limit)
        .expect("highway accel_limit")
}

/// A short busy highway corridor, recorded at 10 Hz.
pub fn corridor_config(duration: f64, seed: u64) -> SimConfig {
    SimConfig {
        duration,
        corridor_length: 5000.0,
        spawn_rate: 0.15,
        cut_in_rate: 0.2,
        ..SimConfig::for_road_class(RoadClass::Highway, seed)
    }
}

pub fn corridor_log(duration: f64, seed: u64) -> Vec<Trip> {
    simulate(&corridor_config(duration, seed), &profile())
        .expect("simulation runs")
        .trips
}

pub fn cut_ins(trips: &[Trip]) -> Vec<LaneChangeEvent> {
    let c = CutInCriteria::default();
    trips.iter().flat_map(|t| detect_cut_ins(t, &c)).collect()
}

/// Car-following samples on a grid, with accelerations from fixed gains.
pub fn gain_samples(n: usize) -> Vec<GainSample> {
    (0..n)
        .map(|i| {
            let u = i as f64 / n as f64;
            let range = 5.0 + 85.0 * ((i * 7919) % n) as f64 / n as f64;
            let range_rate = -4.0 + 8.0 * ((i * 104_729) % n) as f64 / n as f64;
            let v = 10.0 + 22.0 * u;
            let a = 0.25 * range_rate + 0.05 * (range - 1.4 * v);
            GainSample {
                range,
                range_rate,
                v,
                a,
            }
        })
        .collect()
}
