use thiserror::Error;

use crate::dist::DistError;
use crate::driver::DriverError;
use crate::estimate::EstimateError;
use crate::extract::ExtractError;
use crate::profile::ProfileError;
use crate::sim::SimError;

/// Any error the crate can produce, for callers that drive the whole pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Dist(#[from] DistError),
    #[error(transparent)]
    Extract(#[from] ExtractError),
    #[error(transparent)]
    Estimate(#[from] EstimateError),
    #[error(transparent)]
    Profile(#[from] ProfileError),
    #[error(transparent)]
    Driver(#[from] DriverError),
    #[error(transparent)]
    Sim(#[from] SimError),
}

pub type Result<T> = std::result::Result<T, Error>;
