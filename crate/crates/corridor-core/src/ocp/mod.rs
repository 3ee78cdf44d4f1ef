//! Closed-form energy-minimal trajectories between fixed merge times.
//!
//! Minimizing the control effort ∫ ½u² dt for double-integrator dynamics
//! with fixed endpoint positions yields piecewise-cubic position arcs:
//! u(τ) = a·τ + b per arc, with the position co-state constant per arc and
//! the speed co-state equal to −u. A route through two merging zones adds
//! an interior position condition at the first merge time, which makes the
//! position co-state jump by a multiplier π0 (and π1 for the speed co-state
//! if an interior speed is also pinned). All integration constants come
//! from one small dense linear solve.

mod dense;
pub mod oracle;

use crate::model::ConstraintConfig;
use dense::SquareMatrix;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum OcpError {
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("boundary system is singular or ill-conditioned (condition estimate {condition:.3e})")]
    Singular { condition: f64 },
    #[error("time {time} outside trajectory span [{start}, {end}]")]
    OutOfSpan { time: f64, start: f64, end: f64 },
    #[error("operation requires a two-arc solution")]
    NotTwoArc,
}

/// Condition-estimate threshold past which a solve is rejected outright.
const CONDITION_LIMIT: f64 = 1e12;

/// One control arc: u(τ) = a·τ + b in the solution's shifted time frame
/// τ = t − time_base, with c and d the speed and position integration
/// constants. `start`/`end` are absolute times.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Arc {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
    pub start: f64,
    pub end: f64,
}

impl Arc {
    pub fn control(&self, tau: f64) -> f64 {
        self.a * tau + self.b
    }

    pub fn speed(&self, tau: f64) -> f64 {
        0.5 * self.a * tau * tau + self.b * tau + self.c
    }

    pub fn position(&self, tau: f64) -> f64 {
        self.a * tau * tau * tau / 6.0 + 0.5 * self.b * tau * tau + self.c * tau + self.d
    }

    /// ∫ ½u² dτ over [tau_start, tau_end]; exact for linear u, stable as a→0.
    fn effort(&self, tau_start: f64, tau_end: f64) -> f64 {
        let us = self.control(tau_start);
        let ue = self.control(tau_end);
        (tau_end - tau_start) * (us * us + us * ue + ue * ue) / 6.0
    }
}

/// Co-state pair: the position co-state is constant per arc, the speed
/// co-state equals the negated control.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Costate {
    pub position: f64,
    pub speed: f64,
}

/// Multipliers of the interior-point jump conditions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JumpMultipliers {
    /// Jump of the position co-state across the interior time (π0).
    pub position: f64,
    /// Jump of the speed co-state (π1); present only when an interior speed
    /// condition is imposed.
    pub speed: Option<f64>,
}

/// Equality conditions a solution was built from, kept for residual checks.
#[derive(Debug, Clone, PartialEq)]
pub struct Target {
    pub time: f64,
    pub position: f64,
    pub speed: Option<f64>,
}

/// State and co-state at one instant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StateSample {
    pub position: f64,
    pub speed: f64,
    pub control: f64,
    pub costate: Costate,
}

/// Energy-minimal trajectory of one vehicle: one arc to a single merge
/// point, or two arcs pieced together at an interior merge point.
#[derive(Debug, Clone, PartialEq)]
pub struct Solution {
    time_base: f64,
    entry_speed: f64,
    arcs: Vec<Arc>,
    pub jumps: Option<JumpMultipliers>,
    /// 1-norm condition estimate of the boundary solve.
    pub condition: f64,
    targets: Vec<Target>,
}

/// Solves the single-merge-point problem: start at rest position 0 with
/// speed `entry_speed` at `start_time`, reach `distance` exactly at
/// `merge_time`, terminal speed free (so the terminal control is zero).
pub fn solve_single_arc(
    start_time: f64,
    entry_speed: f64,
    merge_time: f64,
    distance: f64,
) -> Result<Solution, OcpError> {
    if !(merge_time > start_time) {
        return Err(OcpError::InvalidInput(format!(
            "merge time {merge_time} must exceed start time {start_time}"
        )));
    }
    if !(entry_speed > 0.0) {
        return Err(OcpError::InvalidInput(format!(
            "entry speed must be positive, got {entry_speed}"
        )));
    }
    if !(distance > 0.0) {
        return Err(OcpError::InvalidInput(format!(
            "distance must be positive, got {distance}"
        )));
    }
    let tau_m = merge_time - start_time;
    let matrix = SquareMatrix::from_rows(&[
        vec![0.0, 0.0, 1.0, 0.0],
        vec![0.0, 0.0, 0.0, 1.0],
        vec![tau_m.powi(3) / 6.0, tau_m.powi(2) / 2.0, tau_m, 1.0],
        vec![tau_m, 1.0, 0.0, 0.0],
    ]);
    let rhs = [entry_speed, 0.0, distance, 0.0];
    let (x, condition) = solve_checked(&matrix, &rhs)?;
    Ok(Solution {
        time_base: start_time,
        entry_speed,
        arcs: vec![Arc {
            a: x[0],
            b: x[1],
            c: x[2],
            d: x[3],
            start: start_time,
            end: merge_time,
        }],
        jumps: None,
        condition,
        targets: vec![Target {
            time: merge_time,
            position: distance,
            speed: None,
        }],
    })
}

/// Solves the two-merge-point problem with the interior position condition
/// p(t_m1) = distance_1 and, optionally, an interior speed pin; reaches
/// distance_2 at merge_time_2 with free terminal speed.
pub fn solve_two_arc(
    start_time: f64,
    entry_speed: f64,
    merge_time_1: f64,
    distance_1: f64,
    merge_time_2: f64,
    distance_2: f64,
    interior_speed: Option<f64>,
) -> Result<Solution, OcpError> {
    if !(start_time < merge_time_1 && merge_time_1 < merge_time_2) {
        return Err(OcpError::InvalidInput(format!(
            "times must be ordered: {start_time} < {merge_time_1} < {merge_time_2}"
        )));
    }
    if !(0.0 < distance_1 && distance_1 < distance_2) {
        return Err(OcpError::InvalidInput(format!(
            "distances must satisfy 0 < {distance_1} < {distance_2}"
        )));
    }
    if !(entry_speed > 0.0) {
        return Err(OcpError::InvalidInput(format!(
            "entry speed must be positive, got {entry_speed}"
        )));
    }
    let t1 = merge_time_1 - start_time;
    let t2 = merge_time_2 - start_time;

    let (x, condition, pi0, pi1) = match interior_speed {
        None => {
            let matrix = SquareMatrix::from_rows(&[
                vec![0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
                vec![0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 0.0],
                vec![
                    t1.powi(3) / 6.0,
                    t1.powi(2) / 2.0,
                    t1,
                    1.0,
                    0.0,
                    0.0,
                    0.0,
                    0.0,
                    0.0,
                ],
                vec![
                    t1.powi(2) / 2.0,
                    t1,
                    1.0,
                    0.0,
                    -t1.powi(2) / 2.0,
                    -t1,
                    -1.0,
                    0.0,
                    0.0,
                ],
                vec![
                    0.0,
                    0.0,
                    0.0,
                    0.0,
                    t2.powi(3) / 6.0,
                    t2.powi(2) / 2.0,
                    t2,
                    1.0,
                    0.0,
                ],
                vec![0.0, 0.0, 0.0, 0.0, -t2, -1.0, 0.0, 0.0, 0.0],
                vec![
                    0.0,
                    0.0,
                    0.0,
                    0.0,
                    t1.powi(3) / 6.0,
                    t1.powi(2) / 2.0,
                    t1,
                    1.0,
                    0.0,
                ],
                vec![t1, 1.0, 0.0, 0.0, -t1, -1.0, 0.0, 0.0, 0.0],
                vec![1.0, 0.0, 0.0, 0.0, -1.0, 0.0, 0.0, 0.0, -1.0],
            ]);
            let rhs = [
                entry_speed,
                0.0,
                distance_1,
                0.0,
                distance_2,
                0.0,
                distance_1,
                0.0,
                0.0,
            ];
            let (x, condition) = solve_checked(&matrix, &rhs)?;
            let pi0 = x[8];
            (x, condition, pi0, None)
        }
        Some(v1) => {
            let matrix = SquareMatrix::from_rows(&[
                vec![0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
                vec![0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
                vec![
                    t1.powi(3) / 6.0,
                    t1.powi(2) / 2.0,
                    t1,
                    1.0,
                    0.0,
                    0.0,
                    0.0,
                    0.0,
                    0.0,
                    0.0,
                ],
                vec![
                    t1.powi(2) / 2.0,
                    t1,
                    1.0,
                    0.0,
                    0.0,
                    0.0,
                    0.0,
                    0.0,
                    0.0,
                    0.0,
                ],
                vec![
                    0.0,
                    0.0,
                    0.0,
                    0.0,
                    t1.powi(2) / 2.0,
                    t1,
                    1.0,
                    0.0,
                    0.0,
                    0.0,
                ],
                vec![
                    0.0,
                    0.0,
                    0.0,
                    0.0,
                    t2.powi(3) / 6.0,
                    t2.powi(2) / 2.0,
                    t2,
                    1.0,
                    0.0,
                    0.0,
                ],
                vec![0.0, 0.0, 0.0, 0.0, -t2, -1.0, 0.0, 0.0, 0.0, 0.0],
                vec![
                    0.0,
                    0.0,
                    0.0,
                    0.0,
                    t1.powi(3) / 6.0,
                    t1.powi(2) / 2.0,
                    t1,
                    1.0,
                    0.0,
                    0.0,
                ],
                // Speed co-state jump: λics before = after + π1, i.e.
                // (g·τ1 + h) − (a·τ1 + b) − π1 = 0.
                vec![-t1, -1.0, 0.0, 0.0, t1, 1.0, 0.0, 0.0, 0.0, -1.0],
                vec![1.0, 0.0, 0.0, 0.0, -1.0, 0.0, 0.0, 0.0, -1.0, 0.0],
            ]);
            let rhs = [
                entry_speed,
                0.0,
                distance_1,
                v1,
                v1,
                distance_2,
                0.0,
                distance_1,
                0.0,
                0.0,
            ];
            let (x, condition) = solve_checked(&matrix, &rhs)?;
            let pi0 = x[8];
            let pi1 = x[9];
            (x, condition, pi0, Some(pi1))
        }
    };

    let mut targets = vec![Target {
        time: merge_time_1,
        position: distance_1,
        speed: interior_speed,
    }];
    targets.push(Target {
        time: merge_time_2,
        position: distance_2,
        speed: None,
    });
    Ok(Solution {
        time_base: start_time,
        entry_speed,
        arcs: vec![
            Arc {
                a: x[0],
                b: x[1],
                c: x[2],
                d: x[3],
                start: start_time,
                end: merge_time_1,
            },
            Arc {
                a: x[4],
                b: x[5],
                c: x[6],
                d: x[7],
                start: merge_time_1,
                end: merge_time_2,
            },
        ],
        jumps: Some(JumpMultipliers {
            position: pi0,
            speed: pi1,
        }),
        condition,
        targets,
    })
}

fn solve_checked(matrix: &SquareMatrix, rhs: &[f64]) -> Result<(Vec<f64>, f64), OcpError> {
    match matrix.solve(rhs) {
        Ok((x, condition)) if condition <= CONDITION_LIMIT => Ok((x, condition)),
        Ok((_, condition)) => Err(OcpError::Singular { condition }),
        Err(s) => Err(OcpError::Singular {
            condition: s.condition,
        }),
    }
}

impl Solution {
    pub fn start_time(&self) -> f64 {
        self.arcs[0].start
    }

    pub fn end_time(&self) -> f64 {
        self.arcs.last().unwrap().end
    }

    pub fn entry_speed(&self) -> f64 {
        self.entry_speed
    }

    pub fn arcs(&self) -> &[Arc] {
        &self.arcs
    }

    pub fn is_two_arc(&self) -> bool {
        self.arcs.len() == 2
    }

    /// Interior boundary time of a two-arc solution.
    pub fn interior_time(&self) -> Option<f64> {
        self.is_two_arc().then(|| self.arcs[0].end)
    }

    fn arc_at(&self, t: f64) -> &Arc {
        // At an arc boundary the right arc's values are reported.
        self.arcs
            .iter()
            .find(|arc| t < arc.end)
            .unwrap_or_else(|| self.arcs.last().unwrap())
    }

    /// Evaluates state and co-state at absolute time `t` within the span.
    pub fn eval(&self, t: f64) -> Result<StateSample, OcpError> {
        let (start, end) = (self.start_time(), self.end_time());
        if t < start - 1e-9 || t > end + 1e-9 {
            return Err(OcpError::OutOfSpan { time: t, start, end });
        }
        let arc = self.arc_at(t);
        let tau = t - self.time_base;
        Ok(StateSample {
            position: arc.position(tau),
            speed: arc.speed(tau),
            control: arc.control(tau),
            costate: Costate {
                position: arc.a,
                speed: -arc.control(tau),
            },
        })
    }

    /// Exact control effort ∫ ½u² dt over the whole span.
    pub fn energy(&self) -> f64 {
        self.arcs
            .iter()
            .map(|arc| arc.effort(arc.start - self.time_base, arc.end - self.time_base))
            .sum()
    }

    /// Speed at the final merge point.
    pub fn terminal_speed(&self) -> f64 {
        let arc = self.arcs.last().unwrap();
        arc.speed(arc.end - self.time_base)
    }

    /// Residual of the Hamiltonian jump identity across the interior time
    /// of a two-arc solution. The identity pairs π0 with the speed and π1
    /// with the mean control across the jump (the control is discontinuous
    /// only when an interior speed is pinned); the residual is at roundoff
    /// for a correctly assembled solution.
    pub fn hamiltonian_jump_residual(&self) -> Result<f64, OcpError> {
        if !self.is_two_arc() {
            return Err(OcpError::NotTwoArc);
        }
        let tau = self.arcs[0].end - self.time_base;
        let (first, second) = (&self.arcs[0], &self.arcs[1]);
        let speed = second.speed(tau);
        let u_minus = first.control(tau);
        let u_plus = second.control(tau);
        // On an optimal arc the Hamiltonian reduces to λ_p·v − ½u².
        let h_minus = first.a * speed - 0.5 * u_minus * u_minus;
        let h_plus = second.a * speed - 0.5 * u_plus * u_plus;
        let jumps = self.jumps.unwrap();
        let pi0 = jumps.position;
        let pi1 = jumps.speed.unwrap_or(0.0);
        Ok(h_minus - h_plus - pi0 * speed - pi1 * 0.5 * (u_minus + u_plus))
    }

    /// Residuals of every defining equality condition, in natural units.
    pub fn defining_residuals(&self) -> Vec<f64> {
        let mut res = Vec::new();
        let first = &self.arcs[0];
        res.push(first.speed(0.0) - self.entry_speed);
        res.push(first.position(0.0));
        for (arc, target) in self.arcs.iter().zip(&self.targets) {
            let tau = target.time - self.time_base;
            res.push(arc.position(tau) - target.position);
            if let Some(v) = target.speed {
                res.push(arc.speed(tau) - v);
            }
        }
        if self.is_two_arc() {
            let tau1 = self.arcs[0].end - self.time_base;
            let (a1, a2) = (&self.arcs[0], &self.arcs[1]);
            // Interior position on the second arc, state continuity, and
            // the multiplier closure rows.
            res.push(a2.position(tau1) - self.targets[0].position);
            res.push(a1.speed(tau1) - a2.speed(tau1));
            let jumps = self.jumps.unwrap();
            match jumps.speed {
                None => res.push(a1.control(tau1) - a2.control(tau1)),
                Some(pi1) => {
                    if let Some(v) = self.targets[0].speed {
                        res.push(a2.speed(tau1) - v);
                    }
                    res.push((a2.control(tau1) - a1.control(tau1)) - pi1);
                }
            }
            res.push(a1.a - a2.a - jumps.position);
        }
        // Terminal transversality: zero control at the final merge time.
        let last = self.arcs.last().unwrap();
        res.push(last.control(last.end - self.time_base));
        res
    }

    /// Largest defining-condition residual magnitude.
    pub fn max_residual(&self) -> f64 {
        self.defining_residuals()
            .iter()
            .fold(0.0, |m, r| m.max(r.abs()))
    }

    /// A-posteriori check of the control and speed envelope. Bounds are
    /// never enforced by the solve; violations are reported, not clipped.
    pub fn bound_check(&self, cfg: &ConstraintConfig) -> BoundReport {
        let mut control_min = f64::INFINITY;
        let mut control_max = f64::NEG_INFINITY;
        let mut speed_min = f64::INFINITY;
        let mut speed_max = f64::NEG_INFINITY;
        let mut track = |u: f64, v: f64| {
            control_min = control_min.min(u);
            control_max = control_max.max(u);
            speed_min = speed_min.min(v);
            speed_max = speed_max.max(v);
        };
        for arc in &self.arcs {
            let tau_s = arc.start - self.time_base;
            let tau_e = arc.end - self.time_base;
            // Control is linear: endpoints suffice. Speed is quadratic: add
            // its interior stationary point when it falls inside the arc.
            track(arc.control(tau_s), arc.speed(tau_s));
            track(arc.control(tau_e), arc.speed(tau_e));
            if arc.a != 0.0 {
                let tau_star = -arc.b / arc.a;
                if tau_star > tau_s && tau_star < tau_e {
                    track(arc.control(tau_star), arc.speed(tau_star));
                }
            }
            // Dense sweep as a backstop, at most 10 ms apart.
            let steps = ((tau_e - tau_s) / 0.01).ceil().max(1.0) as usize;
            for k in 0..=steps {
                let tau = tau_s + (tau_e - tau_s) * (k as f64) / (steps as f64);
                track(arc.control(tau), arc.speed(tau));
            }
        }
        BoundReport {
            control_range: (control_min, control_max),
            speed_range: (speed_min, speed_max),
            control_ok: control_min >= cfg.accel_min - 1e-9 && control_max <= cfg.accel_max + 1e-9,
            speed_ok: speed_min >= cfg.speed_min - 1e-9 && speed_max <= cfg.speed_max + 1e-9,
        }
    }
}

/// Extremes of the control and speed over a solution span, with flags
/// against the configured envelope.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundReport {
    pub control_range: (f64, f64),
    pub speed_range: (f64, f64),
    pub control_ok: bool,
    pub speed_ok: bool,
}

impl BoundReport {
    pub fn ok(&self) -> bool {
        self.control_ok && self.speed_ok
    }
}

#[cfg(test)]
mod tests;
