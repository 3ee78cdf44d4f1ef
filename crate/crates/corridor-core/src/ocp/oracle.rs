//! Discretized minimum-effort oracle used to certify the closed-form
//! trajectories. Kept deliberately independent of the boundary-system
//! assembly and solver in the parent module: it minimizes Σ ½u_k²Δt over
//! piecewise-constant controls under the exact double-integrator step map,
//! reducing the equality-constrained least-squares problem to a tiny
//! normal system solved by an inline Cholesky factorization.

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum OracleError {
    #[error("need at least 50 steps, got {0}")]
    TooFewSteps(usize),
    #[error("waypoints must be strictly increasing in time and position")]
    BadWaypoints,
    #[error("constraint system is infeasible or degenerate")]
    Infeasible,
}

/// Equality condition at one instant: a position, optionally also a speed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Waypoint {
    pub time: f64,
    pub position: f64,
    pub speed: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct OracleSolution {
    /// Σ ½u_k² Δt_k of the optimal discrete control.
    pub energy: f64,
    /// Step boundaries, starting at the initial time.
    pub times: Vec<f64>,
    /// Piecewise-constant control per step.
    pub controls: Vec<f64>,
    pub positions: Vec<f64>,
    pub speeds: Vec<f64>,
}

/// Minimizes Σ ½u_k²Δt subject to hitting every waypoint exactly, starting
/// from position zero at `start_time` with speed `entry_speed`.
pub fn minimum_energy(
    start_time: f64,
    entry_speed: f64,
    waypoints: &[Waypoint],
    n_steps: usize,
) -> Result<OracleSolution, OracleError> {
    if n_steps < 50 {
        return Err(OracleError::TooFewSteps(n_steps));
    }
    if waypoints.is_empty() {
        return Err(OracleError::BadWaypoints);
    }
    let mut prev_t = start_time;
    let mut prev_p = 0.0;
    for w in waypoints {
        if !(w.time > prev_t) || !(w.position > prev_p) {
            return Err(OracleError::BadWaypoints);
        }
        prev_t = w.time;
        prev_p = w.position;
    }

    // Steps per segment, proportional to duration with a floor of 10.
    let total: f64 = waypoints.last().unwrap().time - start_time;
    let mut seg_steps = Vec::with_capacity(waypoints.len());
    let mut seg_dt = Vec::with_capacity(waypoints.len());
    let mut t_prev = start_time;
    for w in waypoints {
        let dur = w.time - t_prev;
        let n = ((n_steps as f64) * dur / total).round().max(10.0) as usize;
        seg_steps.push(n);
        seg_dt.push(dur / n as f64);
        t_prev = w.time;
    }
    let n: usize = seg_steps.iter().sum();

    // March the exact step map symbolically: after step k the speed and
    // position are affine in the controls (v = v0 + Σ dt·u, p collects the
    // in-step quadratic term as well).
    let mut v_coeff = vec![0.0; n];
    let mut p_coeff = vec![0.0; n];
    let v_const = entry_speed;
    let mut p_const = 0.0;
    let mut times = Vec::with_capacity(n + 1);
    times.push(start_time);
    let mut weights = Vec::with_capacity(n);

    // Constraint rows (position / optional speed at each waypoint).
    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut rhs: Vec<f64> = Vec::new();

    let mut k = 0;
    for (seg, w) in waypoints.iter().enumerate() {
        let dt = seg_dt[seg];
        for _ in 0..seg_steps[seg] {
            // p_{k+1} = p_k + v_k dt + ½ u_k dt²; v_{k+1} = v_k + u_k dt.
            p_const += v_const * dt;
            for j in 0..k {
                p_coeff[j] += v_coeff[j] * dt;
            }
            p_coeff[k] += 0.5 * dt * dt;
            v_coeff[k] += dt;
            weights.push(dt);
            k += 1;
            times.push(times.last().unwrap() + dt);
        }
        rows.push(p_coeff.clone());
        rhs.push(w.position - p_const);
        if let Some(v) = w.speed {
            rows.push(v_coeff.clone());
            rhs.push(v - v_const);
        }
    }

    // Minimize ½ Σ w_k u_k² s.t. C u = e  =>  u = W⁻¹Cᵀ λ, (C W⁻¹ Cᵀ) λ = e.
    let m = rows.len();
    let mut gram = vec![vec![0.0; m]; m];
    for i in 0..m {
        for j in i..m {
            let mut acc = 0.0;
            for kk in 0..n {
                acc += rows[i][kk] * rows[j][kk] / weights[kk];
            }
            gram[i][j] = acc;
            gram[j][i] = acc;
        }
    }
    let lambda = cholesky_solve(&gram, &rhs)?;

    let mut controls = vec![0.0; n];
    for kk in 0..n {
        let mut acc = 0.0;
        for i in 0..m {
            acc += rows[i][kk] * lambda[i];
        }
        controls[kk] = acc / weights[kk];
    }

    // Roll the state forward and accumulate the effort.
    let mut positions = Vec::with_capacity(n + 1);
    let mut speeds = Vec::with_capacity(n + 1);
    positions.push(0.0);
    speeds.push(entry_speed);
    let mut energy = 0.0;
    let mut p = 0.0;
    let mut v = entry_speed;
    for kk in 0..n {
        let dt = weights[kk];
        let u = controls[kk];
        energy += 0.5 * u * u * dt;
        p += v * dt + 0.5 * u * dt * dt;
        v += u * dt;
        positions.push(p);
        speeds.push(v);
    }

    Ok(OracleSolution {
        energy,
        times,
        controls,
        positions,
        speeds,
    })
}

/// Cholesky solve for the small symmetric positive-definite normal system.
fn cholesky_solve(a: &[Vec<f64>], b: &[f64]) -> Result<Vec<f64>, OracleError> {
    let m = a.len();
    let mut l = vec![vec![0.0; m]; m];
    for i in 0..m {
        for j in 0..=i {
            let mut acc = a[i][j];
            for k in 0..j {
                acc -= l[i][k] * l[j][k];
            }
            if i == j {
                if acc <= 0.0 || !acc.is_finite() {
                    return Err(OracleError::Infeasible);
                }
                l[i][j] = acc.sqrt();
            } else {
                l[i][j] = acc / l[j][j];
            }
        }
    }
    let mut y = vec![0.0; m];
    for i in 0..m {
        let mut acc = b[i];
        for k in 0..i {
            acc -= l[i][k] * y[k];
        }
        y[i] = acc / l[i][i];
    }
    let mut x = vec![0.0; m];
    for i in (0..m).rev() {
        let mut acc = y[i];
        for k in (i + 1)..m {
            acc -= l[k][i] * x[k];
        }
        x[i] = acc / l[i][i];
    }
    Ok(x)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_speed_needs_no_effort() {
        let sol = minimum_energy(
            0.0,
            10.0,
            &[Waypoint {
                time: 10.0,
                position: 100.0,
                speed: None,
            }],
            200,
        )
        .unwrap();
        assert!(sol.energy < 1e-12, "energy {}", sol.energy);
    }

    #[test]
    fn hits_waypoints_exactly() {
        let sol = minimum_energy(
            0.0,
            10.0,
            &[
                Waypoint {
                    time: 9.0,
                    position: 100.0,
                    speed: Some(12.0),
                },
                Waypoint {
                    time: 20.0,
                    position: 268.0,
                    speed: None,
                },
            ],
            400,
        )
        .unwrap();
        let seg1_steps = sol
            .times
            .iter()
            .position(|t| (t - 9.0).abs() < 1e-9)
            .expect("waypoint time on grid");
        assert!((sol.positions[seg1_steps] - 100.0).abs() < 1e-8);
        assert!((sol.speeds[seg1_steps] - 12.0).abs() < 1e-8);
        assert!((sol.positions.last().unwrap() - 268.0).abs() < 1e-8);
    }

    #[test]
    fn rejects_bad_input() {
        assert_eq!(
            minimum_energy(0.0, 10.0, &[], 400).unwrap_err(),
            OracleError::BadWaypoints
        );
        let w = [Waypoint {
            time: 10.0,
            position: 100.0,
            speed: None,
        }];
        assert_eq!(
            minimum_energy(0.0, 10.0, &w, 10).unwrap_err(),
            OracleError::TooFewSteps(10)
        );
    }
}
