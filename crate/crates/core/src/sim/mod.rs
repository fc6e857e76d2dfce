//! Single-corridor longitudinal microsimulation driven by sampled drivers.

mod check;
mod config;
mod engine;

pub use check::{scenario_parameters, self_consistency_check, ConsistencyReport, ParameterComparison};
pub use config::{Scenario, SimConfig};
pub use engine::{simulate, SimOutput, SimStats, SimVehicle};

use thiserror::Error;

use crate::driver::DriverError;
use crate::estimate::EstimateError;
use crate::extract::ExtractError;
use crate::profile::ProfileError;

#[derive(Debug, Error)]
pub enum SimError {
    #[error("invalid simulation config: {}", .0.join("; "))]
    InvalidConfig(Vec<String>),
    #[error("collision at t = {t:.1} s: vehicle {follower} reached vehicle {leader} (gap {gap:.3} m)\n{dump}")]
    Collision {
        t: f64,
        follower: u64,
        leader: u64,
        gap: f64,
        dump: String,
    },
    #[error(transparent)]
    Driver(#[from] DriverError),
    #[error(transparent)]
    Profile(#[from] ProfileError),
    #[error(transparent)]
    Extract(#[from] ExtractError),
    #[error(transparent)]
    Estimate(#[from] EstimateError),
}

pub type Result<T> = std::result::Result<T, SimError>;
