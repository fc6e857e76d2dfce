//! Lateral-motion Kalman filter for cut-in yaw rate.

use nalgebra::{Matrix3, RowVector3, Vector3};
use serde::{Deserialize, Serialize};

use super::{EstimateError, Result};
use crate::extract::LaneChangeEvent;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KalmanOptions {
    /// Measurement noise variance of the lateral offset, m^2.
    pub meas_var: f64,
    /// White-jerk spectral density, m^2/s^5.
    pub jerk_psd: f64,
    /// Diagonal of the initial state covariance.
    pub init_var: [f64; 3],
    /// Run a fixed-interval smoothing pass after the forward filter.
    pub smooth: bool,
    /// Minimum lead-vehicle speed for the small-angle conversion, m/s.
    pub min_speed: f64,
}

impl Default for KalmanOptions {
    fn default() -> Self {
        Self {
            meas_var: 0.04,
            jerk_psd: 1.0,
            init_var: [0.04, 1.0, 1.0],
            smooth: true,
            min_speed: 1.0,
        }
    }
}

/// Filtered (or smoothed) states `[y, y', y'']` and their covariances.
#[derive(Debug, Clone, PartialEq)]
pub struct KalmanTrace {
    pub states: Vec<Vector3<f64>>,
    pub covariances: Vec<Matrix3<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct YawRateEstimate {
    /// Yaw rate per sample, deg/s.
    pub yaw_rate: Vec<f64>,
    /// Maximum absolute yaw rate, deg/s.
    pub r_max: f64,
}

fn transition(dt: f64) -> Matrix3<f64> {
    Matrix3::new(1.0, dt, 0.5 * dt * dt, 0.0, 1.0, dt, 0.0, 0.0, 1.0)
}

fn process_noise(dt: f64, q: f64) -> Matrix3<f64> {
    let (d2, d3, d4, d5) = (dt * dt, dt.powi(3), dt.powi(4), dt.powi(5));
    Matrix3::new(
        d5 / 20.0,
        d4 / 8.0,
        d3 / 6.0,
        d4 / 8.0,
        d3 / 3.0,
        d2 / 2.0,
        d3 / 6.0,
        d2 / 2.0,
        dt,
    ) * q
}

fn symmetrize(p: &Matrix3<f64>) -> Matrix3<f64> {
    (p + p.transpose()) * 0.5
}

/// Constant-acceleration filter over a uniformly sampled lateral offset,
/// starting from `[z0, 0, 0]`.
pub fn filter_lateral(measurements: &[f64], dt: f64, opts: &KalmanOptions) -> Result<KalmanTrace> {
    if measurements.is_empty() {
        return Err(EstimateError::InsufficientData {
            what: "lateral filter".into(),
            needed: 1,
            got: 0,
        });
    }
    if !(dt > 0.0) || !(opts.meas_var > 0.0) || !(opts.jerk_psd >= 0.0) {
        return Err(EstimateError::InvalidInput(format!(
            "filter needs dt > 0, meas_var > 0, jerk_psd >= 0 (got {dt}, {}, {})",
            opts.meas_var, opts.jerk_psd
        )));
    }
    let f = transition(dt);
    let q = process_noise(dt, opts.jerk_psd);
    let h = RowVector3::new(1.0, 0.0, 0.0);
    let r = opts.meas_var;

    let n = measurements.len();
    let mut x = Vector3::new(measurements[0], 0.0, 0.0);
    let mut p = Matrix3::from_diagonal(&Vector3::from(opts.init_var));
    let mut filtered = Vec::with_capacity(n);
    let mut filtered_cov = Vec::with_capacity(n);
    let mut predicted = Vec::with_capacity(n);
    let mut predicted_cov = Vec::with_capacity(n);

    for (i, &z) in measurements.iter().enumerate() {
        if i > 0 {
            x = f * x;
            p = symmetrize(&(f * p * f.transpose() + q));
        }
        predicted.push(x);
        predicted_cov.push(p);

        let s = (h * p * h.transpose())[(0, 0)] + r;
        let k = p * h.transpose() / s;
        x += k * (z - (h * x)[(0, 0)]);
        let a = Matrix3::identity() - k * h;
        p = symmetrize(&(a * p * a.transpose() + k * k.transpose() * r));
        filtered.push(x);
        filtered_cov.push(p);
    }

    if !opts.smooth || n < 2 {
        return Ok(KalmanTrace {
            states: filtered,
            covariances: filtered_cov,
        });
    }

    // Rauch-Tung-Striebel backward pass.
    let mut states = filtered.clone();
    let mut covs = filtered_cov.clone();
    for i in (0..n - 1).rev() {
        let p_pred_inv = predicted_cov[i + 1]
            .try_inverse()
            .ok_or_else(|| EstimateError::InvalidInput("singular predicted covariance".into()))?;
        let c = filtered_cov[i] * f.transpose() * p_pred_inv;
        states[i] = filtered[i] + c * (states[i + 1] - predicted[i + 1]);
        covs[i] = symmetrize(&(filtered_cov[i] + c * (covs[i + 1] - predicted_cov[i + 1]) * c.transpose()));
    }
    Ok(KalmanTrace {
        states,
        covariances: covs,
    })
}

/// Yaw rate of the lane-changing vehicle, `y' / v_L` converted to deg/s.
///
/// `v_L = v + Rdot`, falling back to the host speed when the range rate is
/// missing. The lateral series must be uniformly sampled at `dt`.
pub fn yaw_rate_kalman(event: &LaneChangeEvent, dt: f64, opts: &KalmanOptions) -> Result<YawRateEstimate> {
    let lat = &event.lateral;
    if lat.len() < 5 {
        return Err(EstimateError::InsufficientData {
            what: "yaw-rate filter".into(),
            needed: 5,
            got: lat.len(),
        });
    }
    for w in lat.windows(2) {
        let step = w[1].t - w[0].t;
        if (step - dt).abs() > 1e-6 * dt.max(1.0) {
            return Err(EstimateError::InvalidInput(format!(
                "lateral series step {step} s at t={} differs from {dt} s",
                w[1].t
            )));
        }
    }
    if let Some(s) = lat.iter().find(|s| s.target_speed() <= opts.min_speed) {
        return Err(EstimateError::LowSpeed {
            t: s.t,
            speed: s.target_speed(),
        });
    }
    let z: Vec<f64> = lat.iter().map(|s| s.target_offset).collect();
    let trace = filter_lateral(&z, dt, opts)?;
    let yaw_rate: Vec<f64> = trace
        .states
        .iter()
        .zip(lat)
        .map(|(x, s)| (x[1] / s.target_speed()).to_degrees())
        .collect();
    let r_max = yaw_rate.iter().fold(0.0_f64, |m, r| m.max(r.abs()));
    Ok(YawRateEstimate { yaw_rate, r_max })
}
