//! Trajectory log loading and event segmentation.

mod car_following;
mod csv_io;
mod cut_in;
mod free_flow;
mod types;

use thiserror::Error;

pub use car_following::{segment_car_following, CfCriteria, GeoBox};
pub use csv_io::{load_trajectory_csv, read_trajectory_csv, write_trajectory_csv, write_trajectory_csv_to, COLUMNS};
pub use cut_in::{detect_cut_ins, CutInCriteria};
pub use free_flow::{link_speed_samples, select_free_flow_trips, FreeFlowCriteria, LinkSpeeds};
pub use types::{
    CarFollowingEpisode, CutInDirection, LaneChangeEvent, LateralSample, RoadClass, TrajectorySample, Trip,
};

#[derive(Debug, Error)]
pub enum ExtractError {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("missing column '{0}'")]
    MissingColumn(String),
    #[error("row {row}, column {column}: {message}")]
    Malformed {
        row: usize,
        column: String,
        message: String,
    },
    #[error("trip {trip_id}: time {t} at row {row} does not follow {previous}")]
    NonMonotoneTime {
        trip_id: String,
        row: usize,
        t: f64,
        previous: f64,
    },
}
