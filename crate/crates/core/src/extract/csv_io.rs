//! Trajectory log CSV format.
//!
//! ```text
//! trip_id,driver_id,road_class,t,lat_deg,lon_deg,v,a,brake,R_L,Rdot_L,d_lat,Y,link_id,posted_limit
//! ```
//!
//! UTF-8, header required, `.` decimal separator, empty field means absent.
//! `brake` is `0` or `1`; `road_class` is `highway` or `local`.

use std::collections::HashMap;
use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use super::{ExtractError, RoadClass, TrajectorySample, Trip};

pub const COLUMNS: [&str; 15] = [
    "trip_id",
    "driver_id",
    "road_class",
    "t",
    "lat_deg",
    "lon_deg",
    "v",
    "a",
    "brake",
    "R_L",
    "Rdot_L",
    "d_lat",
    "Y",
    "link_id",
    "posted_limit",
];

pub fn load_trajectory_csv(path: impl AsRef<Path>) -> Result<Vec<Trip>, ExtractError> {
    let file = File::open(path.as_ref())?;
    read_trajectory_csv(file)
}

pub fn read_trajectory_csv<R: Read>(reader: R) -> Result<Vec<Trip>, ExtractError> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
    let headers = rdr.headers()?.clone();
    let mut idx = [0usize; 15];
    for (slot, name) in idx.iter_mut().zip(COLUMNS) {
        *slot = headers
            .iter()
            .position(|h| h.trim() == name)
            .ok_or_else(|| ExtractError::MissingColumn(name.to_string()))?;
    }

    let mut trips: Vec<Trip> = Vec::new();
    let mut by_id: HashMap<String, usize> = HashMap::new();
    for (i, record) in rdr.records().enumerate() {
        let row = i + 1;
        let record = record?;
        let field = |c: usize| record.get(idx[c]).unwrap_or("").trim();
        let malformed = |c: usize, message: String| ExtractError::Malformed {
            row,
            column: COLUMNS[c].to_string(),
            message,
        };
        let required_f64 = |c: usize| -> Result<f64, ExtractError> {
            let s = field(c);
            if s.is_empty() {
                return Err(malformed(c, "required value is empty".into()));
            }
            let v: f64 = s.parse().map_err(|_| malformed(c, format!("'{s}' is not a number")))?;
            if !v.is_finite() {
                return Err(malformed(c, format!("'{s}' is not finite")));
            }
            Ok(v)
        };
        let optional_f64 = |c: usize| -> Result<Option<f64>, ExtractError> {
            if field(c).is_empty() {
                Ok(None)
            } else {
                required_f64(c).map(Some)
            }
        };

        let trip_id = field(0).to_string();
        if trip_id.is_empty() {
            return Err(malformed(0, "required value is empty".into()));
        }
        let driver_id = field(1).to_string();
        if driver_id.is_empty() {
            return Err(malformed(1, "required value is empty".into()));
        }
        let road_class: RoadClass = field(2).parse().map_err(|e: String| malformed(2, e))?;
        let brake = match field(8) {
            "0" => false,
            "1" => true,
            other => return Err(malformed(8, format!("'{other}' is not 0 or 1"))),
        };
        let v = required_f64(6)?;
        if v < 0.0 {
            return Err(malformed(6, format!("negative speed {v}")));
        }
        let range = optional_f64(9)?;
        if let Some(r) = range {
            if r <= 0.0 {
                return Err(malformed(9, format!("range must be positive, got {r}")));
            }
        }
        let link = field(13);
        let sample = TrajectorySample {
            t: required_f64(3)?,
            lat_deg: required_f64(4)?,
            lon_deg: required_f64(5)?,
            v,
            a: required_f64(7)?,
            brake,
            range,
            range_rate: optional_f64(10)?,
            target_offset: optional_f64(11)?,
            lane_offset: required_f64(12)?,
            link_id: (!link.is_empty()).then(|| link.to_string()),
            road_class,
            posted_limit: optional_f64(14)?,
        };

        let slot = *by_id.entry(trip_id.clone()).or_insert_with(|| {
            trips.push(Trip {
                trip_id: trip_id.clone(),
                driver_id: driver_id.clone(),
                samples: Vec::new(),
            });
            trips.len() - 1
        });
        let trip = &mut trips[slot];
        if trip.driver_id != driver_id {
            return Err(malformed(
                1,
                format!(
                    "trip {} changes driver from {} to {driver_id}",
                    trip.trip_id, trip.driver_id
                ),
            ));
        }
        if let Some(prev) = trip.samples.last() {
            if sample.t <= prev.t {
                return Err(ExtractError::NonMonotoneTime {
                    trip_id,
                    row,
                    t: sample.t,
                    previous: prev.t,
                });
            }
        }
        trip.samples.push(sample);
    }
    Ok(trips)
}

pub fn write_trajectory_csv(path: impl AsRef<Path>, trips: &[Trip]) -> Result<(), ExtractError> {
    let file = File::create(path.as_ref())?;
    let mut w = std::io::BufWriter::new(file);
    write_trajectory_csv_to(&mut w, trips)?;
    w.flush()?;
    Ok(())
}

/// Writes trips in the log schema. Floats use the shortest representation
/// that parses back to the identical value, so a write/read cycle is lossless.
pub fn write_trajectory_csv_to<W: Write>(writer: W, trips: &[Trip]) -> Result<(), ExtractError> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(COLUMNS)?;
    let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
    for trip in trips {
        for s in &trip.samples {
            w.write_record([
                trip.trip_id.clone(),
                trip.driver_id.clone(),
                s.road_class.to_string(),
                s.t.to_string(),
                s.lat_deg.to_string(),
                s.lon_deg.to_string(),
                s.v.to_string(),
                s.a.to_string(),
                if s.brake { "1".into() } else { "0".into() },
                opt(s.range),
                opt(s.range_rate),
                opt(s.target_offset),
                s.lane_offset.to_string(),
                s.link_id.clone().unwrap_or_default(),
                opt(s.posted_limit),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}
