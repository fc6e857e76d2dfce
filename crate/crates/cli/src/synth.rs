//! Oracle fixtures: the source profile, raw population draws per field and
//! sampled drivers, all reproducible from `(profile, n, drivers, seed)`.

use std::fs::{self, File};
use std::io::BufWriter;
use std::path::Path;

use serde::Serialize;

use etiquette_core::driver::{sample_driver, DriverOptions};
use etiquette_core::profile::{profile_to_json, synthesize, PopulationSamples};
use etiquette_core::{dist::derive_seed, RoadClass};

use crate::error::{CliError, CliResult, ResultExt};
use crate::inputs::{resolve_profile, write_text};
use crate::SynthArgs;

#[derive(Serialize)]
struct PopulationRow<'a> {
    road_class: RoadClass,
    field: &'a str,
    value: f64,
}

#[derive(Serialize)]
struct DriverRow {
    road_class: RoadClass,
    seed: u64,
    desired_headway: f64,
    a_max: f64,
    a_min: f64,
    v_ff: f64,
    gap_accept_recip: f64,
    ttc_accept_recip: f64,
    lc_duration: f64,
    r_cap: f64,
}

fn fields(p: &PopulationSamples) -> [(&'static str, &Vec<f64>); 10] {
    [
        ("accel_limit", &p.accel_limits),
        ("decel_limit", &p.decel_limits),
        ("mean_headway", &p.mean_headways),
        ("extreme_headway", &p.headway_limits),
        ("brake_ttc", &p.brake_ttc),
        ("max_yaw_rate", &p.max_yaw_rates),
        ("init_range_recip", &p.init_range_recip),
        ("init_ttc_recip", &p.init_ttc_recip),
        ("pos_init_ttc_recip", &p.pos_init_ttc_recip),
        ("lc_duration", &p.lc_durations),
    ]
}

fn csv_writer(path: &Path) -> CliResult<csv::Writer<BufWriter<File>>> {
    let file = File::create(path).internal(format!("creating '{}'", path.display()))?;
    Ok(csv::Writer::from_writer(BufWriter::new(file)))
}

pub fn run(args: &SynthArgs) -> CliResult<()> {
    if args.out.exists() && !args.out.is_dir() {
        return Err(CliError::Usage(format!(
            "output '{}' is not a directory",
            args.out.display()
        )));
    }
    if args.n == 0 && args.drivers == 0 {
        return Err(CliError::Usage("nothing to write: --n and --drivers are both 0".into()));
    }
    let profile = resolve_profile(&args.profile)?;
    fs::create_dir_all(&args.out).internal(format!("creating '{}'", args.out.display()))?;

    write_text(&args.out.join("profile.json"), &profile_to_json(&profile))?;

    let pops = synthesize(&profile, args.n, args.seed).data("sampling population")?;
    let path = args.out.join("population.csv");
    let mut w = csv_writer(&path)?;
    let mut rows = 0usize;
    for (&road_class, pop) in &pops {
        for (field, values) in fields(pop) {
            for &value in values {
                w.serialize(PopulationRow {
                    road_class,
                    field,
                    value,
                })
                .internal("writing population")?;
                rows += 1;
            }
        }
    }
    w.flush().internal(format!("writing '{}'", path.display()))?;

    let path = args.out.join("drivers.csv");
    let mut w = csv_writer(&path)?;
    let mut drivers = 0usize;
    for (ci, road_class) in RoadClass::ALL.into_iter().enumerate() {
        if profile.scenario(road_class).is_none() {
            continue;
        }
        let opts = DriverOptions::for_road_class(road_class);
        for i in 0..args.drivers as u64 {
            let seed = derive_seed(args.seed, 1_000_000 * ci as u64 + i);
            let d = sample_driver(&profile, road_class, seed, &opts).data(format!("sampling {road_class} driver"))?;
            w.serialize(DriverRow {
                road_class,
                seed,
                desired_headway: d.desired_headway,
                a_max: d.a_max,
                a_min: d.a_min,
                v_ff: d.v_ff,
                gap_accept_recip: d.gap_accept_recip,
                ttc_accept_recip: d.ttc_accept_recip,
                lc_duration: d.lc_duration,
                r_cap: d.r_cap,
            })
            .internal("writing drivers")?;
            drivers += 1;
        }
    }
    w.flush().internal(format!("writing '{}'", path.display()))?;

    println!(
        "wrote profile.json, population.csv ({rows} values) and drivers.csv ({drivers} drivers) to {}",
        args.out.display()
    );
    Ok(())
}
