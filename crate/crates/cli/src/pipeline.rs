use std::fs::File;
use std::io::BufWriter;

use log::{info, warn};

use etiquette_core::estimate::{yaw_rate_kalman, GainFitOptions, KalmanOptions};
use etiquette_core::extract::{
    detect_cut_ins, load_trajectory_csv, segment_car_following, CfCriteria, CutInCriteria, LaneChangeEvent,
};
use etiquette_core::profile::{
    fit_profile, profile_report, save_profile, FieldStatus, PopulationOptions, ProfileError,
};
use etiquette_core::sim::self_consistency_check;

use crate::error::{CliError, CliResult, ResultExt};
use crate::events::EventStore;
use crate::inputs::{read_text, require_file, require_output, resolve_profile};
use crate::{CheckArgs, ExtractArgs, FitArgs, ReportArgs};

/// Fills in the peak yaw rate of every cut-in from its lateral trace.
fn estimate_yaw_rates(events: &mut [LaneChangeEvent], opts: &KalmanOptions) {
    for ev in events {
        let dt = match ev.lateral.as_slice() {
            [a, b, ..] => b.t - a.t,
            _ => continue,
        };
        match yaw_rate_kalman(ev, dt, opts) {
            Ok(est) => ev.r_max = Some(est.r_max),
            Err(e) => warn!("cut-in in trip {} at t = {:.1}: {e}", ev.trip_id, ev.t_start),
        }
    }
}

pub fn extract(args: &ExtractArgs) -> CliResult<()> {
    require_file(&args.input)?;
    require_output(&args.out)?;
    let trips = load_trajectory_csv(&args.input).data(format!("reading '{}'", args.input.display()))?;
    let cf = CfCriteria::default();
    let ci = CutInCriteria::default();
    let episodes: Vec<_> = trips.iter().flat_map(|t| segment_car_following(t, &cf)).collect();
    let mut cut_ins: Vec<_> = trips.iter().flat_map(|t| detect_cut_ins(t, &ci)).collect();
    estimate_yaw_rates(&mut cut_ins, &KalmanOptions::default());
    info!("{} trips read from {}", trips.len(), args.input.display());
    println!(
        "{} trips: {} car-following episodes, {} cut-ins",
        trips.len(),
        episodes.len(),
        cut_ins.len()
    );
    EventStore::new(trips.len(), episodes, cut_ins).save(&args.out)
}

/// One stderr line for the drivers and events the fit had to skip; the
/// individual reasons are logged at debug level.
fn report_skipped(warnings: &[String]) {
    if !warnings.is_empty() {
        eprintln!("{} drivers or events skipped (-vv lists the reasons)", warnings.len());
    }
}

fn population_options(gains: bool) -> PopulationOptions {
    PopulationOptions {
        gains: gains.then(GainFitOptions::default),
        ..PopulationOptions::default()
    }
}

pub fn fit(args: &FitArgs) -> CliResult<()> {
    require_output(&args.out)?;
    let store = EventStore::parse(&read_text(&args.input)?)?;
    let fit = match fit_profile(
        &args.name,
        &store.episodes,
        &store.cut_ins,
        &population_options(args.gains),
    ) {
        Ok(f) => f,
        Err(ProfileError::Empty) => {
            return Err(CliError::data(format!(
                "no profile field could be fitted from {} episodes and {} cut-ins",
                store.episodes.len(),
                store.cut_ins.len()
            )))
        }
        Err(e) => return Err(e).data("fitting profile"),
    };
    report_skipped(&fit.warnings);
    for note in &fit.notes {
        match &note.status {
            FieldStatus::Fitted => println!("{:<8} {:<20} fitted from {}", note.road_class, note.field, note.samples),
            FieldStatus::Absent { reason } => println!("{:<8} {:<20} absent: {reason}", note.road_class, note.field),
        }
    }
    save_profile(&fit.profile, &args.out).internal(format!("writing '{}'", args.out.display()))
}

pub fn report(args: &ReportArgs) -> CliResult<()> {
    if let Some(table) = &args.table {
        require_output(table)?;
    }
    let profile = resolve_profile(&args.profile)?;
    let report = profile_report(&profile);
    print!("{}", report.to_text());
    if let Some(table) = &args.table {
        let file = File::create(table).internal(format!("creating '{}'", table.display()))?;
        report
            .write_csv(BufWriter::new(file))
            .internal(format!("writing '{}'", table.display()))?;
    }
    Ok(())
}

pub fn check(args: &CheckArgs) -> CliResult<()> {
    require_file(&args.log)?;
    let profile = resolve_profile(&args.profile)?;
    let trips = load_trajectory_csv(&args.log).data(format!("reading '{}'", args.log.display()))?;
    let report = self_consistency_check(&trips, &profile, &population_options(args.gains)).data("checking log")?;
    report_skipped(&report.warnings);
    print!("{}", report.to_text());
    Ok(())
}
