//! Behavior statistics computed from extracted events.

mod extremes;
mod free_flow;
mod gains;
mod kalman;
mod population;

use thiserror::Error;

use crate::dist::DistError;

pub use extremes::{
    driver_extremes, group_by_driver, mean_headway, start_to_brake_ttc, time_headway_series, DriverExtremes,
    ExtremesOptions,
};
pub use free_flow::{free_flow_link_model, FreeFlowLinkModel, HCM_MARGIN};
pub use gains::{fit_gain_polynomials, fit_gain_samples, GainFit, GainFitOptions, GainPolynomials, GainSample};
pub use kalman::{filter_lateral, yaw_rate_kalman, KalmanOptions, KalmanTrace, YawRateEstimate};
pub use population::{default_range_grid, gain_population_stats, GainGridPoint, GainStat, GainSummary, GridOutcome};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EstimateError {
    #[error(transparent)]
    Dist(#[from] DistError),
    #[error("insufficient data for {what}: need {needed}, got {got}")]
    InsufficientData { what: String, needed: usize, got: usize },
    #[error("degenerate regression geometry: {0}")]
    DegenerateGeometry(String),
    #[error("speed {speed} m/s at t={t} s is too low for the small-angle yaw approximation")]
    LowSpeed { t: f64, speed: f64 },
    #[error("invalid input: {0}")]
    InvalidInput(String),
}

pub type Result<T> = std::result::Result<T, EstimateError>;
