use std::collections::VecDeque;

use rand::distr::Open01;
use rand::{Rng, RngCore};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{Result, Scenario, SimConfig, SimError};
use crate::dist::seeded_rng;
use crate::driver::{
    car_following_accel, free_flow_accel, lateral_offset, quintic_fraction, sample_driver, DriverOptions, DriverParams,
    LaneChangePlan, LongitudinalState,
};
use crate::extract::{CutInCriteria, TrajectorySample, Trip};
use crate::profile::{EtiquetteProfile, ScenarioProfile};

const METERS_PER_DEGREE: f64 = 111_320.0;
/// Smallest range at which an injected cut-in may appear, m.
const MIN_CUT_IN_RANGE: f64 = 5.0;
/// Clearance kept between an injected vehicle and the host's leader, m.
const CUT_IN_CLEARANCE: f64 = 10.0;
/// Standstill margin used by the collision-avoidance override, m.
const STANDSTILL_GAP: f64 = 2.0;
/// Fraction of the emergency deceleration an injected cut-in may require.
const SAFE_MARGIN: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
enum PulseKind {
    Throttle,
    Brake,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
struct Pulse {
    kind: PulseKind,
    v_start: f64,
    t_start: f64,
    /// The opposite phase that restores the starting speed is still to come.
    paired: bool,
}

impl Pulse {
    fn start(kind: PulseKind, v: f64, t: f64) -> Self {
        Pulse {
            kind,
            v_start: v,
            t_start: t,
            paired: true,
        }
    }
}

/// Lateral maneuver from the adjacent lane into lane 0.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Maneuver {
    pub plan: LaneChangePlan,
    /// +1 when entering from the left.
    pub side: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimVehicle {
    pub id: u64,
    pub driver: DriverParams,
    /// Front bumper position along the corridor, m.
    pub x: f64,
    pub v: f64,
    /// 0 is the through lane, 1 the adjacent lane used by cut-ins.
    pub lane: u8,
    /// Lateral position relative to the lane-0 center, m; positive is left.
    pub lateral: f64,
    pub maneuver: Option<Maneuver>,
    /// Holds speed regardless of traffic; used for the scripted leader.
    pub scripted: bool,
    /// Position at which the vehicle leaves the corridor, m.
    pub exit_at: f64,
    pulse: Option<Pulse>,
    next_pulse: f64,
    active: bool,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SimStats {
    pub steps: usize,
    pub simulated_time: f64,
    pub spawned: usize,
    pub cut_ins: usize,
    pub cut_ins_skipped: usize,
    /// Steps where the collision-avoidance override went below the driver's limit.
    pub emergency_steps: usize,
    /// Smallest bumper-to-bumper gap seen, m.
    pub min_gap: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimOutput {
    pub trips: Vec<Trip>,
    pub stats: SimStats,
    /// Every vehicle's driver, indexed by vehicle id.
    pub drivers: Vec<DriverParams>,
}

/// Largest speed from which, after one step of reaction, a vehicle braking at
/// `b` stops at least the standstill margin behind a leader braking at `b`.
fn safe_speed(b: f64, dt: f64, v_lead: f64, gap: f64) -> f64 {
    if !gap.is_finite() {
        return f64::INFINITY;
    }
    let room = (gap - STANDSTILL_GAP).max(0.0);
    -b * dt + (b * b * dt * dt + v_lead * v_lead + 2.0 * b * room).sqrt()
}

fn open01(rng: &mut ChaCha8Rng) -> f64 {
    rng.sample(Open01)
}

fn exp_interval(rng: &mut ChaCha8Rng, rate: f64) -> f64 {
    if rate > 0.0 {
        -open01(rng).ln() / rate
    } else {
        f64::INFINITY
    }
}

/// Normalized time between the outer and inner offset crossings of a
/// quintic maneuver of width `w`. Scaling the maneuver by the inverse of
/// this span makes the crossing-to-crossing time equal the sampled duration.
fn crossing_span(w: f64, outer: f64, inner: f64) -> f64 {
    if w <= outer {
        return 1.0;
    }
    let solve = |target: f64| {
        let (mut lo, mut hi) = (0.0, 1.0);
        for _ in 0..80 {
            let mid = 0.5 * (lo + hi);
            if quintic_fraction(mid) < target {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    };
    solve(1.0 - inner / w) - solve(1.0 - outer / w)
}

struct World<'a> {
    cfg: &'a SimConfig,
    profile: &'a EtiquetteProfile,
    scenario: &'a ScenarioProfile,
    opts: DriverOptions,
    rng: ChaCha8Rng,
    vehicles: Vec<SimVehicle>,
    trips: Vec<Trip>,
    stats: SimStats,
}

impl World<'_> {
    fn new_driver(&mut self) -> Result<DriverParams> {
        let seed = self.rng.next_u64();
        Ok(sample_driver(self.profile, self.cfg.road_class, seed, &self.opts)?)
    }

    fn add_vehicle(&mut self, driver: DriverParams, x: f64, v: f64, t: f64) -> usize {
        let id = self.vehicles.len() as u64;
        let next_pulse = t + exp_interval(&mut self.rng, self.cfg.pulse_rate);
        self.vehicles.push(SimVehicle {
            id,
            driver,
            x,
            v,
            lane: 0,
            lateral: 0.0,
            maneuver: None,
            scripted: false,
            exit_at: self.cfg.corridor_length,
            pulse: None,
            next_pulse,
            active: true,
        });
        self.trips.push(Trip {
            trip_id: format!("trip{id:05}"),
            driver_id: format!("drv{id:05}"),
            samples: Vec::new(),
        });
        self.vehicles.len() - 1
    }

    /// Active vehicles from front to back.
    fn order(&self) -> Vec<usize> {
        let mut idx: Vec<usize> = (0..self.vehicles.len()).filter(|&i| self.vehicles[i].active).collect();
        idx.sort_by(|&a, &b| {
            let (va, vb) = (&self.vehicles[a], &self.vehicles[b]);
            vb.x.total_cmp(&va.x).then(va.id.cmp(&vb.id))
        });
        idx
    }

    fn gap(&self, follower: usize, leader: usize) -> f64 {
        self.vehicles[leader].x - self.cfg.vehicle_length - self.vehicles[follower].x
    }

    fn try_spawn(&mut self, queue: &mut VecDeque<DriverParams>, t: f64) {
        let Some(driver) = queue.front() else { return };
        let rear = self
            .vehicles
            .iter()
            .filter(|v| v.active)
            .min_by(|a, b| a.x.total_cmp(&b.x).then(a.id.cmp(&b.id)));
        let (v0, ok) = match rear {
            None => (driver.v_ff, true),
            Some(r) => {
                let gap = r.x - self.cfg.vehicle_length;
                let v0 = if gap <= self.cfg.sensor_range {
                    driver.v_ff.min(r.v)
                } else {
                    driver.v_ff
                };
                (
                    v0,
                    gap >= (driver.desired_headway * v0 + STANDSTILL_GAP).max(MIN_CUT_IN_RANGE),
                )
            }
        };
        if ok {
            let driver = queue.pop_front().unwrap();
            self.add_vehicle(driver, 0.0, v0, t);
            self.stats.spawned += 1;
        }
    }

    fn inject_cut_in(&mut self, t: f64) -> Result<()> {
        let (Some(range_recip), Some(ttc_recip)) = (self.scenario.init_range_recip, self.scenario.init_ttc_recip)
        else {
            self.stats.cut_ins_skipped += 1;
            return Ok(());
        };
        let order = self.order();
        let len = self.cfg.vehicle_length;
        let hosts: Vec<(usize, f64, f64)> = order
            .iter()
            .enumerate()
            .filter_map(|(p, &i)| {
                let v = &self.vehicles[i];
                let eligible = v.lane == 0
                    && v.maneuver.is_none()
                    && !v.scripted
                    && v.v > 5.0
                    && v.x + self.cfg.sensor_range + 2.0 * len < self.cfg.corridor_length;
                let (room, lead_v, lead_busy) = if p == 0 {
                    (f64::INFINITY, f64::INFINITY, false)
                } else {
                    let l = &self.vehicles[order[p - 1]];
                    (self.gap(i, order[p - 1]), l.v, l.maneuver.is_some())
                };
                (eligible && !lead_busy).then_some((i, room, lead_v))
            })
            .collect();
        if hosts.is_empty() {
            self.stats.cut_ins_skipped += 1;
            return Ok(());
        }
        let (host, room, lead_v) = hosts[self.rng.random_range(0..hosts.len())];
        let u_range = open01(&mut self.rng);
        let u_ttc = open01(&mut self.rng);
        let side = if self.rng.random::<bool>() { 1.0 } else { -1.0 };
        let stay = self.cfg.cut_in_stay * exp_interval(&mut self.rng, 1.0);
        let driver = self.new_driver()?;

        let recip = range_recip
            .quantile(u_range)
            .map_err(crate::driver::DriverError::from)?;
        let range = if recip > 0.0 { 1.0 / recip } else { f64::INFINITY };
        let range = range.clamp(MIN_CUT_IN_RANGE, self.cfg.sensor_range - 1.0);
        let range = range.min(room - len - CUT_IN_CLEARANCE);
        if !(range >= MIN_CUT_IN_RANGE) {
            self.stats.cut_ins_skipped += 1;
            return Ok(());
        }
        let host_v = self.vehicles[host].v;
        let ttc = ttc_recip.quantile(u_ttc).map_err(crate::driver::DriverError::from)?;
        // Both the host and the injected vehicle must start within the
        // safe-speed bound used by the collision guard.
        let ahead = room - range - len;
        let b = SAFE_MARGIN * self.cfg.emergency_decel;
        let dt = self.cfg.dt;
        let slowest = (host_v * host_v + 2.0 * b * dt * host_v - 2.0 * b * (range - STANDSTILL_GAP))
            .max(0.0)
            .sqrt();
        let fastest = safe_speed(b, dt, lead_v, ahead);
        // An opening cut-in must stay inside the sensor horizon until it
        // completes, or the host would lose it mid-maneuver.
        let w = driver.lane_width;
        let criteria = CutInCriteria::default();
        let duration = driver.lc_duration / crossing_span(w, criteria.outer_offset, criteria.inner_offset);
        let opening = (self.cfg.sensor_range - 1.0 - range).max(0.0) / duration;
        let target_v = (host_v - ttc * range)
            .min(host_v + opening)
            .max(slowest)
            .max(1.0)
            .min(fastest);
        if !(target_v >= slowest.max(1.0)) {
            self.stats.cut_ins_skipped += 1;
            return Ok(());
        }
        let range_rate = target_v - host_v;

        let plan = LaneChangePlan {
            duration,
            lane_width: w,
            start_time: t,
            yaw_cap: f64::INFINITY,
        };
        let x = self.vehicles[host].x + range + len;
        let i = self.add_vehicle(driver, x, host_v + range_rate, t);
        let veh = &mut self.vehicles[i];
        veh.lane = 1;
        veh.lateral = side * w;
        veh.maneuver = Some(Maneuver { plan, side });
        veh.exit_at = (x + stay).min(self.cfg.corridor_length);
        self.stats.cut_ins += 1;
        Ok(())
    }

    fn advance_maneuvers(&mut self, t: f64) -> Result<()> {
        for v in self.vehicles.iter_mut().filter(|v| v.active) {
            let Some(m) = v.maneuver else { continue };
            let elapsed = t - m.plan.start_time;
            let duration = m.plan.effective_duration(v.v);
            if elapsed >= duration {
                v.maneuver = None;
                v.lane = 0;
                v.lateral = 0.0;
            } else {
                let y = lateral_offset(&m.plan, elapsed.max(0.0), v.v)?.y;
                v.lateral = m.side * (m.plan.lane_width - y);
            }
        }
        Ok(())
    }

    fn collision(&self, t: f64, follower: usize, leader: usize) -> SimError {
        let show = |i: usize| {
            let v = &self.vehicles[i];
            format!(
                "  vehicle {}: x = {:.3} m, v = {:.3} m/s, lane {}, lateral {:.3} m, headway {:.3} s, a_min {:.3}",
                v.id, v.x, v.v, v.lane, v.lateral, v.driver.desired_headway, v.driver.a_min
            )
        };
        let recent: Vec<String> = self.trips[follower]
            .samples
            .iter()
            .rev()
            .take(5)
            .map(|s| {
                format!(
                    "  t = {:.1}: v = {:.3}, a = {:.3}, R = {:?}, Rdot = {:?}",
                    s.t, s.v, s.a, s.range, s.range_rate
                )
            })
            .collect();
        SimError::Collision {
            t,
            follower: self.vehicles[follower].id,
            leader: self.vehicles[leader].id,
            gap: self.gap(follower, leader),
            dump: format!(
                "{}\n{}\nfollower's last samples:\n{}",
                show(follower),
                show(leader),
                recent.join("\n")
            ),
        }
    }

    fn step(&mut self, t: f64, log: bool) -> Result<()> {
        let order = self.order();
        let cfg = self.cfg;
        let dt = cfg.dt;
        let mut accels = vec![0.0_f64; self.vehicles.len()];
        let mut targets: Vec<Option<(f64, f64, f64)>> = vec![None; self.vehicles.len()];

        for (p, &i) in order.iter().enumerate() {
            let leader = (p > 0).then(|| order[p - 1]);
            let gap = leader.map(|l| self.gap(i, l));
            if let (Some(l), Some(g)) = (leader, gap) {
                self.stats.min_gap = self.stats.min_gap.min(g);
                if g <= 0.0 {
                    return Err(self.collision(t, i, l));
                }
            }
            let seen = match (leader, gap) {
                (Some(l), Some(g)) if g <= cfg.sensor_range => {
                    let lv = &self.vehicles[l];
                    Some((g, lv.v - self.vehicles[i].v, lv.lateral - self.vehicles[i].lateral))
                }
                _ => None,
            };
            targets[i] = seen;

            let veh = &self.vehicles[i];
            if veh.scripted {
                continue;
            }
            let d = &veh.driver;
            let v = veh.v;
            let close = seen.is_some_and(|(g, _, _)| g < 0.7 * d.desired_headway * v);

            let mut pulse = veh.pulse;
            let mut next_pulse = veh.next_pulse;
            if t >= next_pulse {
                next_pulse = t + exp_interval(&mut self.rng, cfg.pulse_rate);
                let throttle_first = self.rng.random::<bool>();
                if pulse.is_none() && veh.maneuver.is_none() && v > 5.0 && !close {
                    let kind = if throttle_first {
                        PulseKind::Throttle
                    } else {
                        PulseKind::Brake
                    };
                    pulse = Some(Pulse::start(kind, v, t));
                }
            }
            if let Some(p) = pulse {
                let reached = (v - p.v_start).abs() >= cfg.pulse_delta_v;
                if (p.kind == PulseKind::Throttle && close) || t - p.t_start > 10.0 {
                    pulse = None;
                } else if reached && p.paired {
                    let kind = match p.kind {
                        PulseKind::Throttle => PulseKind::Brake,
                        PulseKind::Brake => PulseKind::Throttle,
                    };
                    pulse = Some(Pulse {
                        paired: false,
                        ..Pulse::start(kind, v, t)
                    });
                } else if reached {
                    pulse = None;
                }
            }

            let mut a = match seen {
                Some((g, rr, _)) => car_following_accel(d, &LongitudinalState::following(v, g, rr)),
                None => free_flow_accel(d, v),
            };
            match pulse.map(|p| p.kind) {
                Some(PulseKind::Throttle) => a = d.a_max,
                Some(PulseKind::Brake) => a = d.a_min,
                None => {}
            }
            if let (Some(l), Some(g)) = (leader, gap) {
                // Safe-speed bound: after one step the follower can still stop
                // behind the leader if both brake at the emergency limit.
                let b = cfg.emergency_decel;
                let cap = (safe_speed(b, dt, self.vehicles[l].v, g) - v) / dt;
                if a > cap {
                    a = cap.max(-b);
                    if a < d.a_min {
                        self.stats.emergency_steps += 1;
                    }
                }
            }
            if v + a * dt < 0.0 {
                a = -v / dt;
            }
            accels[i] = a;
            let veh = &mut self.vehicles[i];
            veh.pulse = pulse;
            veh.next_pulse = next_pulse;
        }

        for &i in &order {
            let veh = &self.vehicles[i];
            let a = accels[i];
            if log {
                let w = veh.driver.lane_width;
                let lane_offset = veh.lateral - w * (veh.lateral / w).round();
                let target = targets[i];
                self.trips[i].samples.push(TrajectorySample {
                    t,
                    lat_deg: cfg.origin.0 + veh.x / METERS_PER_DEGREE,
                    lon_deg: cfg.origin.1,
                    v: veh.v,
                    a,
                    brake: a < 0.0,
                    range: target.map(|x| x.0),
                    range_rate: target.map(|x| x.1),
                    target_offset: target.map(|x| x.2),
                    lane_offset,
                    link_id: Some(format!("L{:03}", (veh.x.max(0.0) / 1000.0) as u64)),
                    road_class: cfg.road_class,
                    posted_limit: cfg.posted_limit,
                });
            }
            let veh = &mut self.vehicles[i];
            let v_new = (veh.v + a * dt).max(0.0);
            veh.x += veh.v * dt + 0.5 * a * dt * dt;
            veh.v = v_new;
            let leaves = matches!(cfg.scenario, Scenario::Corridor)
                && (veh.x > cfg.corridor_length || (veh.x > veh.exit_at && veh.maneuver.is_none()));
            if leaves {
                veh.active = false;
            }
        }
        Ok(())
    }
}

/// Runs the corridor and returns one trip per vehicle.
///
/// Each step, every vehicle follows its leader with the car-following law
/// when the leader is within the sensor horizon and otherwise tracks its
/// free-flow speed. Drivers also take
/// occasional full-throttle and full-brake actions at their sampled limits,
/// and a collision-avoidance override brakes harder when the closing speed
/// requires it. Cut-ins are injected as a Poisson process. Every random draw
/// comes from one generator seeded by `config.seed`.
pub fn simulate(config: &SimConfig, profile: &EtiquetteProfile) -> Result<SimOutput> {
    config.validate()?;
    let scenario = profile.scenario(config.road_class).ok_or_else(|| {
        SimError::InvalidConfig(vec![format!(
            "profile '{}' has no {} scenario",
            profile.name, config.road_class
        )])
    })?;
    let mut world = World {
        cfg: config,
        profile,
        scenario,
        opts: config.driver_options(),
        rng: seeded_rng(config.seed),
        vehicles: Vec::new(),
        trips: Vec::new(),
        stats: SimStats {
            min_gap: f64::INFINITY,
            ..SimStats::default()
        },
    };

    let corridor = matches!(config.scenario, Scenario::Corridor);
    if let Scenario::LeaderFollower {
        leader_speed,
        initial_range,
    } = config.scenario
    {
        let lead = world.new_driver()?;
        let mut follow = world.new_driver()?;
        follow.v_ff = follow.v_ff.max(leader_speed + 10.0);
        let l = world.add_vehicle(lead, initial_range + config.vehicle_length, leader_speed, 0.0);
        world.vehicles[l].scripted = true;
        world.add_vehicle(follow, 0.0, leader_speed, 0.0);
        for v in &mut world.vehicles {
            v.next_pulse = f64::INFINITY;
        }
    }

    let mut queue = VecDeque::new();
    let mut arrivals = 0usize;
    let mut next_spawn = if corridor {
        exp_interval(&mut world.rng, config.spawn_rate)
    } else {
        f64::INFINITY
    };
    let mut next_cut_in = if corridor {
        exp_interval(&mut world.rng, config.cut_in_rate)
    } else {
        f64::INFINITY
    };

    let steps = (config.duration / config.dt).round() as usize;
    for k in 0..=steps {
        let t = k as f64 * config.dt;
        while next_spawn <= t && arrivals < config.max_vehicles {
            let d = world.new_driver()?;
            queue.push_back(d);
            arrivals += 1;
            next_spawn += exp_interval(&mut world.rng, config.spawn_rate);
        }
        world.try_spawn(&mut queue, t);
        while next_cut_in <= t {
            world.inject_cut_in(t)?;
            next_cut_in += exp_interval(&mut world.rng, config.cut_in_rate);
        }
        world.advance_maneuvers(t)?;

        let any_active = world.vehicles.iter().any(|v| v.active);
        let more_coming = corridor && config.spawn_rate > 0.0 && (arrivals < config.max_vehicles || !queue.is_empty());
        if !any_active && !more_coming {
            break;
        }
        world.step(t, config.record)?;
        world.stats.steps += 1;
        world.stats.simulated_time = t;
    }

    let drivers = world.vehicles.iter().map(|v| v.driver.clone()).collect();
    let trips = world.trips.into_iter().filter(|t| !t.samples.is_empty()).collect();
    Ok(SimOutput {
        trips,
        stats: world.stats,
        drivers,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::extract::RoadClass;
    use crate::profile::builtin_profile;

    #[test]
    fn crossing_span_matches_thresholds() {
        let span = crossing_span(3.5, 3.0, 0.3);
        assert!(span > 0.0 && span < 1.0);
        // A maneuver scaled by 1/span crosses 3 m and 0.3 m exactly `duration` apart.
        let d = 4.0;
        let total = d / span;
        let find = |target: f64| {
            let mut t = 0.0;
            while 3.5 * (1.0 - quintic_fraction(t / total)) > target {
                t += 1e-5;
            }
            t
        };
        assert!((find(0.3) - find(3.0) - d).abs() < 1e-3);
    }

    #[test]
    fn zero_rates_give_empty_log() {
        let p = builtin_profile("spmd-2018").unwrap();
        let mut c = SimConfig::for_road_class(RoadClass::Highway, 1);
        c.spawn_rate = 0.0;
        c.cut_in_rate = 0.0;
        let out = simulate(&c, &p).unwrap();
        assert!(out.trips.is_empty());
    }

    #[test]
    fn follower_settles_at_desired_headway() {
        let p = builtin_profile("spmd-2018").unwrap();
        let c = SimConfig::leader_follower(RoadClass::Highway, 3, 25.0, 60.0);
        let out = simulate(&c, &p).unwrap();
        let follower = &out.trips[1];
        let last = follower.samples.last().unwrap();
        let th = out.drivers[1].desired_headway;
        let want = th * last.v;
        assert!(
            (last.range.unwrap() - want).abs() / want < 0.005,
            "{} vs {want}",
            last.range.unwrap()
        );
    }
}
