//! Figure data as long-format CSV: `road_class,series,x,y`.
//!
//! A profile yields one `model` density curve per road class. An event store
//! yields a density-normalized `histogram` of the per-driver or per-event
//! values plus the `fit` curve estimated from those same values.

use std::fs::File;
use std::io::BufWriter;
use std::path::Path;

use clap::ValueEnum;
use log::warn;
use serde::Serialize;
use serde_json::Value;

use etiquette_core::dist::{GevParams, LaplaceParams, LognormalParams};
use etiquette_core::profile::{
    collect_population, parse_profile, PopulationOptions, PopulationSamples, MIN_POPULATION,
};
use etiquette_core::{EtiquetteProfile, RoadClass, ScenarioProfile};

use crate::error::{CliError, CliResult, ResultExt};
use crate::events::EventStore;
use crate::inputs::{is_builtin, read_text, require_output, resolve_profile};
use crate::PlotArgs;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Figure {
    /// Per-driver acceleration limit.
    #[value(name = "fig5")]
    Fig5,
    /// Per-driver mean time headway.
    #[value(name = "fig13")]
    Fig13,
    /// TTC at brake onset.
    #[value(name = "fig15")]
    Fig15,
    /// Reciprocal range at lane-change start.
    #[value(name = "fig23")]
    Fig23,
    /// Reciprocal TTC at lane-change start.
    #[value(name = "fig24")]
    Fig24,
    /// Lane-change duration.
    #[value(name = "fig26")]
    Fig26,
}

impl Figure {
    pub fn field(self) -> &'static str {
        match self {
            Figure::Fig5 => "accel_limit",
            Figure::Fig13 => "mean_headway",
            Figure::Fig15 => "brake_ttc",
            Figure::Fig23 => "init_range_recip",
            Figure::Fig24 => "init_ttc_recip",
            Figure::Fig26 => "lc_duration",
        }
    }

    fn values(self, p: &PopulationSamples) -> &[f64] {
        match self {
            Figure::Fig5 => &p.accel_limits,
            Figure::Fig13 => &p.mean_headways,
            Figure::Fig15 => &p.brake_ttc,
            Figure::Fig23 => &p.init_range_recip,
            Figure::Fig24 => &p.init_ttc_recip,
            Figure::Fig26 => &p.lc_durations,
        }
    }
}

enum Density {
    Gev(GevParams),
    Lognormal(LognormalParams),
    Laplace(LaplaceParams),
}

impl Density {
    fn from_scenario(s: &ScenarioProfile, fig: Figure) -> Option<Density> {
        match fig {
            Figure::Fig13 => s.mean_headway.map(Density::Lognormal),
            Figure::Fig24 => s.init_ttc_recip.map(Density::Laplace),
            _ => s.gev_field(fig.field()).copied().map(Density::Gev),
        }
    }

    fn fit(values: &[f64], fig: Figure) -> Result<Density, String> {
        let r = match fig {
            Figure::Fig13 => LognormalParams::fit(values).map(Density::Lognormal),
            Figure::Fig24 => LaplaceParams::fit(values).map(Density::Laplace),
            _ => GevParams::fit(values).map(Density::Gev),
        };
        r.map_err(|e| e.to_string())
    }

    fn pdf(&self, x: f64) -> f64 {
        match self {
            Density::Gev(g) => g.pdf(x).unwrap_or(0.0),
            Density::Lognormal(l) => l.pdf(x),
            Density::Laplace(l) => l.pdf(x),
        }
    }

    fn quantile(&self, p: f64) -> Option<f64> {
        match self {
            Density::Gev(g) => g.quantile(p).ok(),
            Density::Lognormal(l) => l.quantile(p).ok(),
            Density::Laplace(l) => l.quantile(p).ok(),
        }
    }

    /// `points` evenly spaced pairs across the central 99% of the mass.
    fn curve(&self, points: usize) -> Vec<(f64, f64)> {
        let (Some(lo), Some(hi)) = (self.quantile(0.005), self.quantile(0.995)) else {
            return Vec::new();
        };
        let step = if points > 1 {
            (hi - lo) / (points - 1) as f64
        } else {
            0.0
        };
        (0..points)
            .map(|i| {
                let x = lo + step * i as f64;
                (x, self.pdf(x))
            })
            .collect()
    }
}

/// Bin centers and densities over `[min, max]`; the densities integrate to 1.
fn histogram(values: &[f64], bins: usize) -> Vec<(f64, f64)> {
    if values.is_empty() || bins == 0 {
        return Vec::new();
    }
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if hi <= lo {
        return vec![(lo, 1.0)];
    }
    let width = (hi - lo) / bins as f64;
    let mut counts = vec![0usize; bins];
    for &v in values {
        let i = (((v - lo) / width) as usize).min(bins - 1);
        counts[i] += 1;
    }
    let n = values.len() as f64;
    counts
        .iter()
        .enumerate()
        .map(|(i, &c)| (lo + width * (i as f64 + 0.5), c as f64 / (n * width)))
        .collect()
}

#[derive(Serialize)]
struct Row {
    road_class: RoadClass,
    series: &'static str,
    x: f64,
    y: f64,
}

fn push(rows: &mut Vec<Row>, road_class: RoadClass, series: &'static str, pts: Vec<(f64, f64)>) {
    rows.extend(pts.into_iter().map(|(x, y)| Row {
        road_class,
        series,
        x,
        y,
    }));
}

fn profile_rows(profile: &EtiquetteProfile, args: &PlotArgs) -> Vec<Row> {
    let mut rows = Vec::new();
    for rc in RoadClass::ALL {
        if let Some(d) = profile
            .scenario(rc)
            .and_then(|s| Density::from_scenario(s, args.figure))
        {
            push(&mut rows, rc, "model", d.curve(args.points));
        }
    }
    rows
}

fn event_rows(store: &EventStore, args: &PlotArgs) -> Vec<Row> {
    let (pops, _) = collect_population(&store.episodes, &store.cut_ins, &PopulationOptions::default());
    let mut rows = Vec::new();
    for (&rc, pop) in &pops {
        let values = args.figure.values(pop);
        push(&mut rows, rc, "histogram", histogram(values, args.bins));
        if values.len() < MIN_POPULATION {
            warn!("{rc} {}: {} values, no fit", args.figure.field(), values.len());
            continue;
        }
        match Density::fit(values, args.figure) {
            Ok(d) => push(&mut rows, rc, "fit", d.curve(args.points)),
            Err(e) => warn!("{rc} {}: fit failed: {e}", args.figure.field()),
        }
    }
    rows
}

fn write_rows(path: &Path, rows: &[Row]) -> CliResult<()> {
    let what = || format!("writing '{}'", path.display());
    let file = File::create(path).internal(what())?;
    let mut w = csv::Writer::from_writer(BufWriter::new(file));
    for r in rows {
        w.serialize(r).internal(what())?;
    }
    w.flush().internal(what())
}

pub fn run(args: &PlotArgs) -> CliResult<()> {
    require_output(&args.out)?;
    if args.points < 2 {
        return Err(CliError::Usage("--points must be at least 2".into()));
    }
    let rows = if is_builtin(&args.input) {
        profile_rows(&resolve_profile(&args.input)?, args)
    } else {
        let text = read_text(Path::new(&args.input))?;
        let value: Value = serde_json::from_str(&text).data(format!("'{}' is not valid JSON", args.input))?;
        if EventStore::is_event_store(&value) {
            event_rows(&EventStore::from_value(value)?, args)
        } else {
            profile_rows(&parse_profile(&text).data(format!("profile '{}'", args.input))?, args)
        }
    };
    if rows.is_empty() {
        return Err(CliError::data(format!(
            "'{}' has no data for {} ({})",
            args.input,
            args.figure
                .to_possible_value()
                .map(|v| v.get_name().to_string())
                .unwrap_or_default(),
            args.figure.field()
        )));
    }
    write_rows(&args.out, &rows)?;
    println!("{} rows written to {}", rows.len(), args.out.display());
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn histogram_integrates_to_one() {
        let xs: Vec<f64> = (0..1000).map(|i| (i as f64 * 0.37).sin()).collect();
        let h = histogram(&xs, 25);
        assert_eq!(h.len(), 25);
        let width = h[1].0 - h[0].0;
        let total: f64 = h.iter().map(|(_, y)| y * width).sum();
        assert!((total - 1.0).abs() < 1e-12);
        assert_eq!(histogram(&[2.0, 2.0], 10), vec![(2.0, 1.0)]);
        assert!(histogram(&[], 10).is_empty());
    }

    #[test]
    fn model_curve_spans_the_central_mass() {
        let d = Density::Lognormal(LognormalParams::from_arith_moments(1.42, 0.08).unwrap());
        let c = d.curve(101);
        assert_eq!(c.len(), 101);
        let width = c[1].0 - c[0].0;
        let mass: f64 = c.iter().map(|(_, y)| y * width).sum();
        assert!((mass - 0.99).abs() < 0.01, "{mass}");
    }
}
