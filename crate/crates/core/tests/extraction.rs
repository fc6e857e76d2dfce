mod common;

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use etiquette_core::extract::{
    detect_cut_ins, load_trajectory_csv, read_trajectory_csv, segment_car_following, select_free_flow_trips,
    write_trajectory_csv, write_trajectory_csv_to, CfCriteria, CutInCriteria, FreeFlowCriteria, TrajectorySample, Trip,
};

use common::trip_from;

/// A noisy 10 Hz trip that drifts in and out of every criterion: speed
/// around the 10 m/s floor, range near both bounds, occasional dropouts,
/// lateral wander of the host and target.
fn random_trip(seed: u64, n: usize, dropout: f64) -> Trip {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut v: f64 = rng.random_range(8.0..25.0);
    let mut range: f64 = rng.random_range(5.0..85.0);
    let mut d_lat: f64 = rng.random_range(-4.0..4.0);
    let mut y: f64 = 0.0;
    let mut samples = Vec::with_capacity(n);
    for i in 0..n {
        v = (v + rng.random_range(-0.3..0.3)).clamp(0.0, 35.0);
        let rr: f64 = rng.random_range(-11.0..11.0) * if rng.random_bool(0.95) { 0.1 } else { 1.0 };
        range = (range + rr * 0.1).clamp(0.05, 95.0);
        if rng.random_bool(0.005) {
            range = rng.random_range(1.0..95.0);
        }
        d_lat = (d_lat + rng.random_range(-0.15..0.15)).clamp(-4.5, 4.5);
        if rng.random_bool(0.01) {
            d_lat = rng.random_range(-0.2..0.2);
        }
        y = (y + rng.random_range(-0.05..0.05)).clamp(-0.8, 0.8);
        let present = !rng.random_bool(dropout);
        samples.push(TrajectorySample {
            t: i as f64 / 10.0,
            lat_deg: 42.3,
            lon_deg: -83.7,
            v,
            a: rng.random_range(-3.0..2.0),
            brake: rng.random_bool(0.2),
            range: present.then_some(range),
            range_rate: present.then_some(rr),
            target_offset: present.then_some(d_lat),
            lane_offset: y,
            link_id: Some(format!("L{}", i / 3000)),
            road_class: etiquette_core::RoadClass::Highway,
            posted_limit: Some(29.06),
        });
    }
    Trip {
        trip_id: format!("trip{seed}"),
        driver_id: format!("drv{}", seed % 7),
        samples,
    }
}

/// A trip that satisfies every car-following criterion with smooth fields,
/// so long episodes actually occur.
fn calm_trip(seed: u64, n: usize) -> Trip {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    trip_from(n, |i, s| {
        s.range = Some(30.0 + 10.0 * (i as f64 / 300.0).sin());
        s.range_rate = Some(rng.random_range(-2.0..2.0));
        s.target_offset = Some(rng.random_range(-0.2..0.2));
        s.lane_offset = rng.random_range(-0.2..0.2);
        if rng.random_bool(0.002) {
            s.v = 9.0;
        }
        if rng.random_bool(0.003) {
            s.range = None;
            s.range_rate = None;
            s.target_offset = None;
        }
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn episodes_satisfy_criteria(seed in any::<u64>(), dropout in 0.0..0.05_f64) {
        let c = CfCriteria::default();
        for trip in [random_trip(seed, 3000, dropout), calm_trip(seed, 3000)] {
            let eps = segment_car_following(&trip, &c);
            for ep in &eps {
                prop_assert_eq!(&ep.driver_id, &trip.driver_id);
                if let Err(e) = c.validate_episode(ep) {
                    return Err(TestCaseError::fail(e));
                }
            }
            // Order-preserving and disjoint.
            for w in eps.windows(2) {
                prop_assert!(w[0].samples.last().unwrap().t < w[1].samples[0].t);
            }
        }
    }

    #[test]
    fn cut_ins_satisfy_criteria(seed in any::<u64>(), dropout in 0.0..0.05_f64) {
        let trip = random_trip(seed, 3000, dropout);
        let c = CutInCriteria::default();
        let evs = detect_cut_ins(&trip, &c);
        for ev in &evs {
            if let Err(e) = c.validate_event(ev) {
                return Err(TestCaseError::fail(e));
            }
        }
        for w in evs.windows(2) {
            prop_assert!(w[0].t_end <= w[1].t_start);
        }
    }

    #[test]
    fn segmentation_is_deterministic(seed in any::<u64>()) {
        let trip = calm_trip(seed, 2000);
        let c = CfCriteria::default();
        prop_assert_eq!(segment_car_following(&trip, &c), segment_car_following(&trip, &c));
        let trip = random_trip(seed, 2000, 0.01);
        prop_assert_eq!(detect_cut_ins(&trip, &CutInCriteria::default()), detect_cut_ins(&trip, &CutInCriteria::default()));
    }

    #[test]
    fn trips_never_merge(seed in any::<u64>()) {
        // Two compliant trips whose clocks continue one another.
        let a = calm_trip(seed, 800);
        let mut b = calm_trip(seed.wrapping_add(1), 800);
        b.trip_id = "second".into();
        for s in &mut b.samples {
            s.t += 80.0;
        }
        let c = CfCriteria::default();
        let separate: usize = [&a, &b].iter().map(|t| segment_car_following(t, &c).len()).sum();
        let trips = [a.clone(), b.clone()];
        let together: Vec<_> = trips.iter().flat_map(|t| segment_car_following(t, &c)).collect();
        prop_assert_eq!(together.len(), separate);
        for ep in &together {
            prop_assert!(ep.samples.iter().all(|s| s.t < 80.0) || ep.samples.iter().all(|s| s.t >= 80.0));
        }
    }

    #[test]
    fn csv_round_trip_is_lossless(seed in any::<u64>()) {
        let trips = vec![random_trip(seed, 200, 0.1), random_trip(seed ^ 1, 50, 0.5)];
        let mut buf = Vec::new();
        write_trajectory_csv_to(&mut buf, &trips).unwrap();
        let back = read_trajectory_csv(buf.as_slice()).unwrap();
        prop_assert_eq!(back, trips);
    }
}

#[test]
fn episode_boundaries_are_exact() {
    // 120 s compliant, speed drop to 9 m/s over [40, 41) s, dropout of 0.2 s at 90 s.
    let trip = trip_from(1201, |i, s| {
        if (400..410).contains(&i) {
            s.v = 9.0;
        }
        if i == 900 || i == 901 {
            s.range = None;
            s.range_rate = None;
            s.target_offset = None;
        }
    });
    let eps = segment_car_following(&trip, &CfCriteria::default());
    // The head [0, 39.9] is under 50 s and dropped; the tail bridges the dropout.
    assert_eq!(eps.len(), 1);
    assert!((eps[0].samples[0].t - 41.0).abs() < 1e-9);
    assert!((eps[0].duration() - 79.0).abs() < 1e-9);
    assert_eq!(eps[0].samples.len(), 791);
}

#[test]
fn dropout_just_over_the_bridge_limit_splits() {
    // Three missing samples leave 0.4 s between valid ones.
    let trip = trip_from(1201, |i, s| {
        if (600..603).contains(&i) {
            s.range = None;
        }
    });
    let eps = segment_car_following(&trip, &CfCriteria::default());
    assert_eq!(eps.len(), 2);
    assert!((eps[0].samples.last().unwrap().t - 59.9).abs() < 1e-9);
    assert!((eps[1].samples[0].t - 60.3).abs() < 1e-9);
}

#[test]
fn region_box_is_enforced() {
    let trip = trip_from(1201, |i, s| {
        if i == 600 {
            s.lon_deg = -81.9;
        }
    });
    assert_eq!(segment_car_following(&trip, &CfCriteria::default()).len(), 2);
}

#[test]
fn free_flow_trip_boundaries() {
    let c = FreeFlowCriteria::default();
    let long = trip_from(6002, |_, s| s.lat_deg = 42.25);
    let short = trip_from(6001, |_, s| s.lat_deg = 42.25);
    let trips = [long, short];
    let kept = select_free_flow_trips(&trips, &c);
    assert_eq!(kept.len(), 1);
    assert!((kept[0].duration() - 600.1).abs() < 1e-9);
}

#[test]
fn csv_file_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("log.csv");
    let trips = vec![random_trip(3, 500, 0.05)];
    write_trajectory_csv(&path, &trips).unwrap();
    assert_eq!(load_trajectory_csv(&path).unwrap(), trips);
}

#[test]
fn generators_produce_events() {
    let (mut episodes, mut cut_ins) = (0, 0);
    for seed in 0..20 {
        episodes += segment_car_following(&calm_trip(seed, 3000), &CfCriteria::default()).len();
        episodes += segment_car_following(&random_trip(seed, 3000, 0.01), &CfCriteria::default()).len();
        cut_ins += detect_cut_ins(&random_trip(seed, 3000, 0.01), &CutInCriteria::default()).len();
    }
    assert!(episodes >= 20, "{episodes} episodes");
    assert!(cut_ins >= 5, "{cut_ins} cut-ins");
}
