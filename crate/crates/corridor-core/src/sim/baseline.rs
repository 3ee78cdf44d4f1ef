//! Fixed-time-signal baseline: two-phase signals at both intersections and
//! Gipps car-following on every lane, stepped on a global grid.

use super::{
    admission_order, collision_audit, Mode, Sample, Scenario, SimError, SimResult, VehicleResult,
    ZoneEvent,
};
use crate::model::{Axis, Route, Vehicle, Zone};

/// Extra green time demanded beyond the estimated zone transit before a
/// vehicle commits to entering on a stale green (s).
const GATE_MARGIN: f64 = 0.8;

/// Hard cap on simulated time past the last spawn, to bound runaway queues.
const MAX_EXTRA_TIME: f64 = 900.0;

struct Unit {
    vehicle: Vehicle,
    route: Route,
    position: f64,
    speed: f64,
    spawned: bool,
    done: bool,
    samples: Vec<Sample>,
    zone_events: Vec<ZoneEvent>,
    pending_entry: Option<(Zone, f64, f64)>,
    exit_time: f64,
    energy: f64,
}

impl Unit {
    /// Entry distance of the next merging zone ahead, if any.
    fn next_line(&self) -> Option<(Zone, f64)> {
        self.route
            .zones()
            .iter()
            .map(|&z| (z, self.route.distance_to_zone(z).expect("zone on route")))
            .find(|(_, d)| self.position < *d)
    }
}

/// True when the axis has green at time `t`; both intersections share the
/// same zero-offset two-phase plan, east-west first.
fn green_axis(t: f64, half_cycle: f64) -> Axis {
    if (t / half_cycle).floor() as i64 % 2 == 0 {
        Axis::EastWest
    } else {
        Axis::NorthSouth
    }
}

fn remaining_phase(t: f64, half_cycle: f64) -> f64 {
    let into = t - (t / half_cycle).floor() * half_cycle;
    half_cycle - into
}

/// Gipps speed update: the minimum of the free-flow acceleration term and
/// the safe-braking term against a leader at `gap` ahead moving at
/// `lead_speed`.
fn gipps_target(
    speed: f64,
    gap: f64,
    lead_speed: f64,
    p: &super::GippsParams,
) -> f64 {
    let tau = p.reaction_time;
    let accel = {
        let r = speed / p.desired_speed;
        speed + 2.5 * p.accel_max * tau * (1.0 - r) * (0.025 + r.max(0.0)).sqrt()
    };
    let b = -p.brake;
    let b_hat = -p.leader_brake_estimate;
    let margin = gap - p.jam_spacing;
    let inside = b * b * tau * tau + b * (2.0 * margin - speed * tau + lead_speed * lead_speed / b_hat);
    let safe = if inside > 0.0 {
        -b * tau + inside.sqrt()
    } else {
        0.0
    };
    accel.min(safe)
}

fn free_target(speed: f64, p: &super::GippsParams) -> f64 {
    let tau = p.reaction_time;
    let r = speed / p.desired_speed;
    speed + 2.5 * p.accel_max * tau * (1.0 - r) * (0.025 + r.max(0.0)).sqrt()
}

/// Time to cover `distance` from `speed` while accelerating; optimistic,
/// used only to gate zone entries near the end of a green phase.
fn transit_estimate(distance: f64, speed: f64, accel: f64) -> f64 {
    let disc = speed * speed + 2.0 * accel * distance;
    (disc.sqrt() - speed) / accel
}

pub fn run(scenario: &Scenario) -> Result<SimResult, SimError> {
    scenario.validate()?;
    let dt = scenario.dt;
    let gp = &scenario.gipps;
    let mut units: Vec<Unit> = admission_order(scenario)
        .into_iter()
        .map(|vehicle| {
            let route = scenario.route(vehicle.route)?.clone();
            Ok(Unit {
                vehicle,
                route,
                position: 0.0,
                speed: 0.0,
                spawned: false,
                done: false,
                samples: Vec::new(),
                zone_events: Vec::new(),
                pending_entry: None,
                exit_time: 0.0,
                energy: 0.0,
            })
        })
        .collect::<Result<_, SimError>>()?;

    let mut events: Vec<String> = Vec::new();
    let last_spawn = scenario.spawns.last().map_or(0.0, |s| s.time);
    let t_cap = last_spawn + MAX_EXTRA_TIME;
    let mut step: u64 = 0;

    loop {
        let t = step as f64 * dt;
        if units.iter().all(|u| u.done) {
            break;
        }
        if t > t_cap {
            for u in units.iter_mut().filter(|u| !u.done) {
                events.push(format!(
                    "vehicle {}: still inside at the time cap; terminated",
                    u.vehicle.id
                ));
                u.done = true;
                u.exit_time = t;
            }
            break;
        }

        // Spawn anyone whose entry time has come.
        for u in units.iter_mut() {
            if !u.spawned && t + 1e-9 >= u.vehicle.entry_time {
                u.spawned = true;
                u.speed = u.vehicle.entry_speed;
                u.position = 0.0;
                u.samples.push(Sample {
                    time: t,
                    position: 0.0,
                    speed: u.speed,
                    control: 0.0,
                });
            }
        }

        // Synchronous update from current states.
        let snapshot: Vec<(bool, f64, f64, u8)> = units
            .iter()
            .map(|u| (u.spawned && !u.done, u.position, u.speed, u.route.lane.0))
            .collect();
        let mut next: Vec<(f64, f64)> = Vec::with_capacity(units.len());
        for (i, u) in units.iter().enumerate() {
            if !(u.spawned && !u.done) {
                next.push((u.position, u.speed));
                continue;
            }
            let mut target = free_target(u.speed, gp);

            // Nearest active same-lane vehicle ahead.
            let mut lead: Option<(f64, f64)> = None;
            for (j, (active, pos, spd, lane)) in snapshot.iter().enumerate() {
                if j != i
                    && *active
                    && *lane == u.route.lane.0
                    && *pos > u.position
                    && lead.is_none_or(|(lp, _)| *pos < lp)
                {
                    lead = Some((*pos, *spd));
                }
            }
            if let Some((lp, lv)) = lead {
                target = target.min(gipps_target(u.speed, lp - u.position, lv, gp));
            }

            // Signal gate at the next zone entry.
            if let Some((zone, line)) = u.next_line() {
                let axis = u.route.direction.axis();
                let green = green_axis(t, scenario.signal_half_cycle) == axis;
                let zone_len = scenario.geometry.zone_length(zone);
                let needed = transit_estimate(zone_len, u.speed, gp.accel_max) + GATE_MARGIN;
                let entry_ok =
                    green && remaining_phase(t, scenario.signal_half_cycle) >= needed;
                if !entry_ok {
                    let dist = line - u.position;
                    // Hold the line unless the stop is no longer achievable,
                    // in which case the vehicle is committed and clears on
                    // the stale phase. Slow vehicles always hold.
                    let committed = u.speed >= 2.0
                        && (dist <= 0.05
                            || u.speed * u.speed / (2.0 * dist) > 0.95 * (-gp.brake));
                    if !committed {
                        target = target.min(gipps_target(
                            u.speed,
                            line + gp.jam_spacing - u.position,
                            0.0,
                            gp,
                        ));
                    }
                }
            }

            let v_next = target
                .max(0.0)
                .max(u.speed + gp.brake * dt)
                .min(u.speed + gp.accel_max * dt)
                .max(0.0);
            let p_next = u.position + 0.5 * (u.speed + v_next) * dt;
            next.push((p_next, v_next));
        }

        // Apply, record crossings and samples.
        for (u, (p_next, v_next)) in units.iter_mut().zip(next) {
            if !(u.spawned && !u.done) {
                continue;
            }
            let control = (v_next - u.speed) / dt;
            let (p_prev, v_prev) = (u.position, u.speed);
            u.energy += 0.5 * control * control * dt;

            let cross = |target: f64| -> Option<(f64, f64)> {
                if p_prev < target && p_next >= target {
                    let frac = if p_next > p_prev {
                        (target - p_prev) / (p_next - p_prev)
                    } else {
                        1.0
                    };
                    Some((t + frac * dt, v_prev + frac * (v_next - v_prev)))
                } else {
                    None
                }
            };

            for &zone in u.route.zones() {
                let entry = u.route.distance_to_zone(zone).expect("zone on route");
                let exit = entry + scenario.geometry.zone_length(zone);
                if let Some((tc, vc)) = cross(entry) {
                    u.pending_entry = Some((zone, tc, vc.max(0.01)));
                }
                if let Some((tc, _)) = cross(exit) {
                    if let Some((z, te, ve)) = u.pending_entry.take() {
                        debug_assert_eq!(z, zone);
                        u.zone_events.push(ZoneEvent {
                            zone: z,
                            entry_time: te,
                            entry_speed: ve,
                            exit_time: tc,
                        });
                    }
                }
            }

            if let Some((tc, vc)) = cross(u.route.exit_distance) {
                u.done = true;
                u.exit_time = tc;
                u.position = u.route.exit_distance;
                u.speed = vc;
                u.samples.push(Sample {
                    time: tc,
                    position: u.route.exit_distance,
                    speed: vc,
                    control,
                });
            } else {
                u.position = p_next;
                u.speed = v_next;
                u.samples.push(Sample {
                    time: t + dt,
                    position: p_next,
                    speed: v_next,
                    control,
                });
            }
        }
        step += 1;
    }

    let vehicles: Vec<VehicleResult> = units
        .into_iter()
        .map(|u| VehicleResult {
            vehicle: u.vehicle,
            exit_time: u.exit_time,
            energy: u.energy,
            samples: u.samples,
            zone_events: u.zone_events,
            relaxed: false,
            bound: None,
        })
        .collect();

    let audit = collision_audit(&vehicles, scenario);
    Ok(SimResult {
        mode: Mode::Baseline,
        dt,
        vehicles,
        schedule: Vec::new(),
        audit,
        events,
        throughput_objective: None,
    })
}
