use serde::{Deserialize, Serialize};

use super::{DriverError, DriverParams, Result};

/// Peak of the quintic ease derivative, `max ds/dτ = 15/8`.
pub const QUINTIC_PEAK: f64 = 1.875;

/// Candidate gap in the target lane.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Gap {
    /// Range to the prospective leader, m.
    pub range: f64,
    /// Range rate to the prospective leader, m/s; negative when closing.
    pub range_rate: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LaneChangePlan {
    /// Nominal duration, s.
    pub duration: f64,
    pub lane_width: f64,
    pub start_time: f64,
    /// Yaw-rate cap, deg/s.
    pub yaw_cap: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LaneChangeDecision {
    pub accept: bool,
    pub plan: Option<LaneChangePlan>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LateralState {
    /// Lateral displacement from the origin lane center, m.
    pub y: f64,
    /// Lateral velocity, m/s.
    pub y_rate: f64,
    /// Implied yaw rate `y_rate / v`, deg/s.
    pub yaw_rate: f64,
}

/// Quintic ease `6τ⁵ − 15τ⁴ + 10τ³` on `[0, 1]`.
pub fn quintic_fraction(tau: f64) -> f64 {
    tau * tau * tau * (10.0 + tau * (-15.0 + 6.0 * tau))
}

/// Peak lateral speed of a quintic maneuver of width `w` over `duration`.
pub fn quintic_peak_rate(w: f64, duration: f64) -> f64 {
    QUINTIC_PEAK * w / duration
}

impl LaneChangePlan {
    /// Duration after stretching so the peak implied yaw rate at speed `v`
    /// does not exceed the cap.
    pub fn effective_duration(&self, v: f64) -> f64 {
        if !(v > 0.0) || !(self.yaw_cap > 0.0) {
            return self.duration;
        }
        let min_t = QUINTIC_PEAK * self.lane_width / (v * self.yaw_cap.to_radians());
        self.duration.max(min_t)
    }
}

/// Conjunctive gap acceptance: the range reciprocal must not exceed the
/// driver's ceiling, and a closing gap must also pass the TTC ceiling.
pub fn plan_lane_change(driver: &DriverParams, gap: &Gap, start_time: f64) -> LaneChangeDecision {
    let range_ok = gap.range > 0.0 && 1.0 / gap.range <= driver.gap_accept_recip;
    let closing = gap.range_rate < 0.0;
    let ttc_ok = !closing || -gap.range_rate / gap.range <= driver.ttc_accept_recip;
    let accept = range_ok && ttc_ok;
    LaneChangeDecision {
        accept,
        plan: accept.then_some(LaneChangePlan {
            duration: driver.lc_duration,
            lane_width: driver.lane_width,
            start_time,
            yaw_cap: driver.r_cap,
        }),
    }
}

/// Lateral state `t` seconds into the maneuver at speed `v`.
pub fn lateral_offset(plan: &LaneChangePlan, t: f64, v: f64) -> Result<LateralState> {
    let duration = plan.effective_duration(v);
    if !(0.0..=duration).contains(&t) {
        return Err(DriverError::Domain(format!("t = {t} outside [0, {duration}]")));
    }
    let tau = t / duration;
    let w = plan.lane_width;
    let y = w * quintic_fraction(tau);
    let y_rate = w * 30.0 * tau * tau * (1.0 - tau) * (1.0 - tau) / duration;
    let yaw_rate = if v > 0.0 { (y_rate / v).to_degrees() } else { 0.0 };
    Ok(LateralState { y, y_rate, yaw_rate })
}
