//! Driving-etiquette toolkit.
//!
//! The crate turns naturalistic vehicle trajectory logs into driver behavior
//! statistics and back again:
//!
//! * [`dist`] parametric families (GEV, lognormal, Laplace, exponential,
//!   Gaussian mixture) with fitting and seeded sampling;
//! * [`extract`] loading of 10 Hz trajectory logs and segmentation into
//!   car-following episodes, cut-ins and free-flow trips;
//! * [`estimate`] per-driver and per-link behavior statistics (extremes,
//!   headway, yaw rate, feedback gains, free-flow speed);
//! * [`profile`] etiquette profiles: the built-in reference tables, fitting
//!   from extracted events, JSON persistence and reports;
//! * [`driver`] a stochastic human-driver agent sampled from a profile;
//! * [`sim`] a deterministic corridor microsimulation that writes logs in the
//!   same format the extractor reads.

// `!(x > 0.0)` is used on purpose so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod dist;
pub mod driver;
pub mod estimate;
pub mod extract;
pub mod profile;
pub mod sim;

mod error;

pub use error::{Error, Result};

pub use dist::{empirical_percentile, ExponentialParams, GevParams, GmmParams, LaplaceParams, LognormalParams};
pub use driver::{DriverParams, LongitudinalState};
pub use estimate::{DriverExtremes, FreeFlowLinkModel, GainPolynomials};
pub use extract::{CarFollowingEpisode, LaneChangeEvent, RoadClass, TrajectorySample, Trip};
pub use profile::{EtiquetteProfile, ScenarioProfile};
pub use sim::{SimConfig, SimOutput};
