mod common;

use std::collections::HashSet;

use proptest::prelude::*;

use etiquette_core::dist::LognormalParams;
use etiquette_core::extract::{load_trajectory_csv, write_trajectory_csv, RoadClass};
use etiquette_core::profile::{builtin_profile, EtiquetteProfile, PopulationOptions};
use etiquette_core::sim::{self_consistency_check, simulate, SimConfig, SimError, SimOutput};

use common::rel_err;

fn builtin() -> EtiquetteProfile {
    builtin_profile("spmd-2018").unwrap()
}

fn short_corridor(rc: RoadClass, seed: u64) -> SimConfig {
    SimConfig {
        corridor_length: 3000.0,
        duration: 300.0,
        spawn_rate: 0.2,
        cut_in_rate: 0.1,
        ..SimConfig::for_road_class(rc, seed)
    }
}

fn assert_log_invariants(out: &SimOutput, dt: f64) {
    let ids: HashSet<_> = out.trips.iter().map(|t| t.trip_id.as_str()).collect();
    assert_eq!(ids.len(), out.trips.len(), "duplicate trip ids");
    assert!(out.trips.len() <= out.drivers.len());
    assert!(out.stats.min_gap > 0.0);
    for trip in &out.trips {
        for w in trip.samples.windows(2) {
            assert!(
                (w[1].t - w[0].t - dt).abs() < 1e-6,
                "{}: step {} -> {}",
                trip.trip_id,
                w[0].t,
                w[1].t
            );
            assert!(
                w[1].lat_deg >= w[0].lat_deg,
                "{} moved backwards at {}",
                trip.trip_id,
                w[1].t
            );
        }
        for s in &trip.samples {
            assert!(s.v >= 0.0 && s.v.is_finite());
            assert!(s.lane_offset.abs() <= 3.5 / 2.0 + 1e-9, "lane offset {}", s.lane_offset);
            if let Some(r) = s.range {
                assert!(r > 0.0);
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn random_corridors_keep_their_invariants(
        seed in any::<u64>(),
        highway in any::<bool>(),
        spawn_rate in 0.02..0.4_f64,
        cut_in_rate in 0.0..0.4_f64,
    ) {
        let rc = if highway { RoadClass::Highway } else { RoadClass::Local };
        let c = SimConfig { spawn_rate, cut_in_rate, ..short_corridor(rc, seed) };
        let out = simulate(&c, &builtin()).unwrap();
        assert_log_invariants(&out, c.dt);
    }
}

#[test]
fn repeat_runs_are_bitwise_identical() {
    let c = short_corridor(RoadClass::Local, 17);
    let a = simulate(&c, &builtin()).unwrap();
    let b = simulate(&c, &builtin()).unwrap();
    assert!(!a.trips.is_empty());
    assert_eq!(a.trips, b.trips);
    assert_eq!(a.drivers, b.drivers);
    let bits = |o: &SimOutput| -> Vec<u64> {
        o.trips
            .iter()
            .flat_map(|t| {
                t.samples
                    .iter()
                    .flat_map(|s| [s.v.to_bits(), s.a.to_bits(), s.lat_deg.to_bits()])
            })
            .collect()
    };
    assert_eq!(bits(&a), bits(&b));
    let other = simulate(&SimConfig { seed: 18, ..c }, &builtin()).unwrap();
    assert_ne!(a.trips, other.trips);
}

/// Halving the step moves the whole leader-follower trajectory only slightly.
#[test]
fn halving_the_step_changes_little() {
    let run = |dt: f64| {
        let c = SimConfig {
            dt,
            ..SimConfig::leader_follower(RoadClass::Highway, 3, 25.0, 60.0)
        };
        simulate(&c, &builtin()).unwrap().trips.remove(1)
    };
    let (coarse, fine) = (run(0.1), run(0.05));
    assert_eq!(fine.samples.len(), 2 * coarse.samples.len() - 1);
    let (mut range_drift, mut speed_drift) = (0.0_f64, 0.0_f64);
    for (k, c) in coarse.samples.iter().enumerate() {
        let f = &fine.samples[2 * k];
        assert!((f.t - c.t).abs() < 1e-9);
        range_drift = range_drift.max((f.range.unwrap() - c.range.unwrap()).abs());
        speed_drift = speed_drift.max((f.v - c.v).abs());
    }
    assert!(range_drift < 0.5, "range drift {range_drift} m");
    assert!(speed_drift < 0.05, "speed drift {speed_drift} m/s");
}

#[test]
fn log_survives_a_csv_round_trip() {
    let out = simulate(&short_corridor(RoadClass::Highway, 5), &builtin()).unwrap();
    assert_log_invariants(&out, 0.1);
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("sim.csv");
    write_trajectory_csv(&path, &out.trips).unwrap();
    assert_eq!(load_trajectory_csv(&path).unwrap(), out.trips);
}

/// A log checked against the profile that produced it agrees; checked
/// against a shifted profile it does not.
#[test]
fn check_separates_matching_from_mismatched_profiles() {
    let truth = builtin();
    let c = SimConfig::for_road_class(RoadClass::Highway, 11);
    let out = simulate(&c, &truth).unwrap();
    let opts = PopulationOptions::default();

    let mut shifted = truth.clone();
    let hw = shifted.highway.as_mut().unwrap();
    hw.mean_headway = Some(LognormalParams::from_arith_moments(2.2, 0.08).unwrap());
    hw.accel_limit.as_mut().unwrap().mu += 0.5;

    let err = |p: &EtiquetteProfile, field: &str, param: &str| {
        let report = self_consistency_check(&out.trips, p, &opts).unwrap();
        report
            .find(RoadClass::Highway, field, param)
            .and_then(|r| r.relative_error)
            .unwrap()
    };
    assert!(err(&truth, "mean_headway", "mean") < 0.08);
    assert!(err(&truth, "accel_limit", "mu") < 0.15);
    assert!(err(&shifted, "mean_headway", "mean") > 0.3);
    assert!(err(&shifted, "accel_limit", "mu") > 0.3);
}

#[test]
fn short_log_reports_missing_fields() {
    let c = SimConfig {
        duration: 60.0,
        ..SimConfig::for_road_class(RoadClass::Highway, 2)
    };
    let out = simulate(&c, &builtin()).unwrap();
    let report = self_consistency_check(&out.trips, &builtin(), &PopulationOptions::default()).unwrap();
    assert!(!report.rows.is_empty());
    for row in report.rows.iter().filter(|r| r.road_class == RoadClass::Highway) {
        assert!(row.refit.is_none() && row.relative_error.is_none(), "{row:?}");
        assert!(row.note.as_deref().is_some_and(|n| !n.is_empty()), "{row:?}");
    }
}

#[test]
fn invalid_config_names_every_bad_field() {
    let c = SimConfig {
        dt: -0.1,
        corridor_length: 0.0,
        cut_in_rate: f64::INFINITY,
        ..SimConfig::default()
    };
    match simulate(&c, &builtin()) {
        Err(SimError::InvalidConfig(msgs)) => {
            let text = msgs.join("\n");
            for field in ["dt", "corridor_length", "cut_in_rate"] {
                assert!(text.contains(field), "{field} missing from {text}");
            }
            assert_eq!(msgs.len(), 3);
        }
        other => panic!("unexpected {other:?}"),
    }
    let mut no_local = builtin();
    no_local.local = None;
    assert!(matches!(
        simulate(&SimConfig::for_road_class(RoadClass::Local, 1), &no_local),
        Err(SimError::InvalidConfig(_))
    ));
}

#[test]
fn follower_keeps_its_headway_after_dt_halving() {
    let c = SimConfig {
        dt: 0.05,
        ..SimConfig::leader_follower(RoadClass::Local, 8, 15.0, 40.0)
    };
    let out = simulate(&c, &builtin()).unwrap();
    let last = out.trips[1].samples.last().unwrap();
    let want = out.drivers[1].desired_headway * last.v;
    assert!(
        rel_err(last.range.unwrap(), want) < 0.01,
        "{} vs {want}",
        last.range.unwrap()
    );
}
