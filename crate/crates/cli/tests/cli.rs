use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

fn etiquette(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_etiquette"))
        .args(args)
        .current_dir(dir)
        .env_remove("ETIQUETTE_SEED")
        .env_remove("RUST_LOG")
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn ok(args: &[&str], dir: &Path) -> String {
    let out = etiquette(args, dir);
    assert_eq!(code(&out), 0, "{args:?} failed: {}", stderr(&out));
    stdout(&out)
}

const SHORT_RUN: [&str; 6] = [
    "--set",
    "duration=900",
    "--set",
    "corridor_length=6000",
    "--set",
    "spawn_rate=0.1",
];

fn simulate(dir: &Path, out: &str, extra: &[&str]) -> PathBuf {
    let mut args = vec!["simulate", "--profile", "spmd-2018", "--out", out];
    args.extend(SHORT_RUN);
    args.extend(extra);
    ok(&args, dir);
    dir.join(out)
}

#[test]
fn report_prints_headway_quartiles() {
    let dir = TempDir::new().unwrap();
    let text = ok(&["report", "spmd-2018", "--table", "table.csv"], dir.path());
    assert!(text.contains("mean_headway"));
    let mut rdr = csv::Reader::from_path(dir.path().join("table.csv")).unwrap();
    let rows: Vec<csv::StringRecord> = rdr.records().map(Result::unwrap).collect();
    let value = |rc: &str, stat: &str| -> f64 {
        rows.iter()
            .find(|r| &r[0] == rc && &r[1] == "mean_headway" && &r[2] == stat)
            .unwrap_or_else(|| panic!("no {rc} {stat} row"))[3]
            .parse()
            .unwrap()
    };
    for (rc, want) in [("highway", [1.21, 1.39, 1.60]), ("local", [1.77, 2.03, 2.33])] {
        for (stat, w) in ["q25", "q50", "q75"].into_iter().zip(want) {
            let got = value(rc, stat);
            assert!((got - w).abs() <= 0.01, "{rc} {stat}: {got} vs {w}");
        }
    }
}

#[test]
fn simulate_then_check_reports_every_field() {
    let dir = TempDir::new().unwrap();
    simulate(dir.path(), "log.csv", &["--seed", "3"]);
    let out = etiquette(&["check", "--log", "log.csv", "--profile", "spmd-2018"], dir.path());
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let text = stdout(&out);
    for field in [
        "accel_limit",
        "decel_limit",
        "mean_headway",
        "extreme_headway",
        "brake_ttc",
        "max_yaw_rate",
        "init_range_recip",
        "init_ttc_recip",
        "pos_init_ttc_recip",
        "lc_duration",
    ] {
        for rc in ["highway", "local"] {
            assert!(
                text.lines().any(|l| l.starts_with(rc) && l.contains(field)),
                "{rc} {field} missing from\n{text}"
            );
        }
    }
}

#[test]
fn full_pipeline_is_idempotent() {
    let dir = TempDir::new().unwrap();
    let d = dir.path();
    let log = simulate(d, "a.csv", &["--seed", "9"]);
    simulate(d, "b.csv", &["--seed", "9"]);
    assert_eq!(fs::read(&log).unwrap(), fs::read(d.join("b.csv")).unwrap());

    let before = fs::read(&log).unwrap();
    ok(&["extract", "a.csv", "--out", "e1.json"], d);
    ok(&["extract", "a.csv", "--out", "e2.json"], d);
    assert_eq!(fs::read(&log).unwrap(), before, "extract modified its input");
    assert_eq!(
        fs::read(d.join("e1.json")).unwrap(),
        fs::read(d.join("e2.json")).unwrap()
    );

    let store: serde_json::Value = serde_json::from_slice(&fs::read(d.join("e1.json")).unwrap()).unwrap();
    assert_eq!(store["schema_version"], 1);
    assert_eq!(store["kind"], "etiquette-events");
    assert!(!store["episodes"].as_array().unwrap().is_empty());

    ok(&["fit", "e1.json", "--out", "p1.json"], d);
    ok(&["fit", "e1.json", "--out", "p2.json"], d);
    assert_eq!(
        fs::read(d.join("p1.json")).unwrap(),
        fs::read(d.join("p2.json")).unwrap()
    );
    assert!(ok(&["report", "p1.json"], d).contains("[highway]"));

    for input in ["e1.json", "p1.json", "spmd-2018"] {
        ok(&["plot-data", input, "--figure", "fig26", "--out", "f1.csv"], d);
        ok(&["plot-data", input, "--figure", "fig26", "--out", "f2.csv"], d);
        assert_eq!(fs::read(d.join("f1.csv")).unwrap(), fs::read(d.join("f2.csv")).unwrap());
    }

    ok(
        &[
            "synth",
            "--profile",
            "spmd-2018",
            "--out",
            "s1",
            "--n",
            "50",
            "--seed",
            "4",
        ],
        d,
    );
    ok(
        &[
            "synth",
            "--profile",
            "spmd-2018",
            "--out",
            "s2",
            "--n",
            "50",
            "--seed",
            "4",
        ],
        d,
    );
    for f in ["profile.json", "population.csv", "drivers.csv"] {
        assert_eq!(
            fs::read(d.join("s1").join(f)).unwrap(),
            fs::read(d.join("s2").join(f)).unwrap(),
            "{f}"
        );
    }
}

#[test]
fn seed_falls_back_to_the_environment() {
    let dir = TempDir::new().unwrap();
    let d = dir.path();
    let run_env = |seed: &str, out: &str| {
        let mut args = vec!["simulate", "--out", out];
        args.extend(SHORT_RUN);
        let run = Command::new(env!("CARGO_BIN_EXE_etiquette"))
            .args(&args)
            .current_dir(d)
            .env("ETIQUETTE_SEED", seed)
            .output()
            .unwrap();
        assert_eq!(code(&run), 0, "{}", stderr(&run));
        fs::read(d.join(out)).unwrap()
    };
    let env5 = run_env("5", "env5.csv");
    let flag5 = fs::read(simulate(d, "flag5.csv", &["--seed", "5"])).unwrap();
    assert_eq!(env5, flag5);
    assert_ne!(env5, run_env("6", "env6.csv"));
}

#[test]
fn config_file_is_layered_and_left_untouched() {
    let dir = TempDir::new().unwrap();
    let d = dir.path();
    let config = r#"{"road_class": "local", "duration": 300, "corridor_length": 3000, "spawn_rate": 0.1, "seed": 2}"#;
    fs::write(d.join("sim.json"), config).unwrap();
    ok(&["simulate", "--config", "sim.json", "--out", "a.csv"], d);
    ok(
        &["simulate", "--config", "sim.json", "--set", "seed=2", "--out", "b.csv"],
        d,
    );
    assert_eq!(fs::read_to_string(d.join("sim.json")).unwrap(), config);
    let a = fs::read_to_string(d.join("a.csv")).unwrap();
    assert_eq!(a, fs::read_to_string(d.join("b.csv")).unwrap());
    assert!(a.lines().nth(1).unwrap().contains(",local,"));
}

#[test]
fn usage_errors_exit_with_1() {
    let dir = TempDir::new().unwrap();
    let d = dir.path();
    let cases: [&[&str]; 8] = [
        &["report", "spmd-2018", "--bogus"],
        &["frobnicate"],
        &[],
        &["report", "no-such-profile"],
        &["extract", "missing.csv", "--out", "e.json"],
        &["report", "spmd-2018", "--table", "no/such/dir/t.csv"],
        &["simulate", "--out", "x.csv", "--set", "durration=5"],
        &["plot-data", "spmd-2018", "--figure", "fig99", "--out", "x.csv"],
    ];
    for args in cases {
        let out = etiquette(args, d);
        assert_eq!(code(&out), 1, "{args:?}: {}", stderr(&out));
        assert!(!stderr(&out).is_empty());
    }
    let out = etiquette(&["report", "spmd-2018", "--bogus"], d);
    assert!(stderr(&out).contains("Usage"), "{}", stderr(&out));
    assert!(!d.join("x.csv").exists(), "work started before validation");
}

#[test]
fn data_errors_exit_with_2() {
    let dir = TempDir::new().unwrap();
    let d = dir.path();
    fs::write(d.join("bad.json"), "{ not json").unwrap();
    fs::write(
        d.join("old.json"),
        r#"{"schema_version": 7, "kind": "etiquette-events"}"#,
    )
    .unwrap();
    fs::write(d.join("bad.csv"), "trip_id,t\nx,1\n").unwrap();
    fs::write(d.join("sim.json"), r#"{"dt": -1}"#).unwrap();
    let cases: [&[&str]; 5] = [
        &["report", "bad.json"],
        &["fit", "old.json", "--out", "p.json"],
        &["extract", "bad.csv", "--out", "e.json"],
        &["simulate", "--config", "sim.json", "--out", "x.csv"],
        &["fit", "bad.json", "--out", "p.json"],
    ];
    for args in cases {
        let out = etiquette(args, d);
        assert_eq!(code(&out), 2, "{args:?}: {}", stderr(&out));
    }
}

#[test]
fn help_and_version_exit_with_0() {
    let dir = TempDir::new().unwrap();
    for args in [&["--help"][..], &["--version"], &["simulate", "--help"]] {
        assert_eq!(code(&etiquette(args, dir.path())), 0);
    }
}

#[test]
fn plot_data_from_a_profile_covers_both_road_classes() {
    let dir = TempDir::new().unwrap();
    ok(
        &[
            "plot-data",
            "spmd-2018",
            "--figure",
            "fig13",
            "--out",
            "fig13.csv",
            "--points",
            "101",
        ],
        dir.path(),
    );
    let mut rdr = csv::Reader::from_path(dir.path().join("fig13.csv")).unwrap();
    assert_eq!(rdr.headers().unwrap(), vec!["road_class", "series", "x", "y"]);
    let rows: Vec<(String, String, f64, f64)> = rdr.deserialize().map(Result::unwrap).collect();
    for rc in ["highway", "local"] {
        let curve: Vec<_> = rows.iter().filter(|r| r.0 == rc && r.1 == "model").collect();
        assert_eq!(curve.len(), 101);
        let width = curve[1].2 - curve[0].2;
        let mass: f64 = curve.iter().map(|r| r.3 * width).sum();
        assert!((mass - 0.99).abs() < 0.01, "{rc}: {mass}");
    }
}
