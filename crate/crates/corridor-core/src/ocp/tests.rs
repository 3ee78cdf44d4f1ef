use super::oracle::{minimum_energy, Waypoint};
use super::*;
use approx::assert_relative_eq;
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;

/// Independent reference solve: assembles the same equality conditions as
/// plain rows and solves them with nalgebra's LU, bypassing the module's
/// own assembly and elimination entirely.
fn reference_single_arc(t0: f64, v0: f64, tm: f64, l: f64) -> [f64; 4] {
    let t = tm - t0;
    let a = DMatrix::from_row_slice(
        4,
        4,
        &[
            0.0,
            0.0,
            1.0,
            0.0,
            0.0,
            0.0,
            0.0,
            1.0,
            t.powi(3) / 6.0,
            t.powi(2) / 2.0,
            t,
            1.0,
            t,
            1.0,
            0.0,
            0.0,
        ],
    );
    let b = DVector::from_row_slice(&[v0, 0.0, l, 0.0]);
    let x = a.lu().solve(&b).expect("reference solve");
    [x[0], x[1], x[2], x[3]]
}

fn reference_two_arc(t0: f64, v0: f64, tm1: f64, l1: f64, tm2: f64, l2: f64) -> Vec<f64> {
    let t1 = tm1 - t0;
    let t2 = tm2 - t0;
    let rows: Vec<[f64; 9]> = vec![
        [0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
        [0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 0.0],
        [
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
        [
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
        [
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
        [0.0, 0.0, 0.0, 0.0, -t2, -1.0, 0.0, 0.0, 0.0],
        [
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
        [t1, 1.0, 0.0, 0.0, -t1, -1.0, 0.0, 0.0, 0.0],
        [1.0, 0.0, 0.0, 0.0, -1.0, 0.0, 0.0, 0.0, -1.0],
    ];
    let flat: Vec<f64> = rows.iter().flatten().copied().collect();
    let a = DMatrix::from_row_slice(9, 9, &flat);
    let b = DVector::from_row_slice(&[v0, 0.0, l1, 0.0, l2, 0.0, l1, 0.0, 0.0]);
    let x = a.lu().solve(&b).expect("reference solve");
    x.iter().copied().collect()
}

#[test]
fn single_arc_constant_speed_is_trivial() {
    let sol = solve_single_arc(0.0, 10.0, 10.0, 100.0).unwrap();
    let arc = &sol.arcs()[0];
    assert_relative_eq!(arc.a, 0.0, epsilon = 1e-12);
    assert_relative_eq!(arc.b, 0.0, epsilon = 1e-12);
    assert_relative_eq!(arc.c, 10.0, epsilon = 1e-12);
    assert_relative_eq!(arc.d, 0.0, epsilon = 1e-12);
    assert!(sol.energy() < 1e-12);
}

#[test]
fn single_arc_matches_reference_solve() {
    let sol = solve_single_arc(0.0, 10.0, 8.0, 100.0).unwrap();
    let arc = &sol.arcs()[0];
    let expect = reference_single_arc(0.0, 10.0, 8.0, 100.0);
    assert_relative_eq!(arc.a, expect[0], epsilon = 1e-12);
    assert_relative_eq!(arc.b, expect[1], epsilon = 1e-12);
    // Frozen values, computed with the reference solve.
    assert_relative_eq!(arc.a, -0.1171875, epsilon = 1e-12);
    assert_relative_eq!(arc.b, 0.9375, epsilon = 1e-12);
    assert_relative_eq!(arc.c, 10.0, epsilon = 1e-12);
    assert_relative_eq!(arc.d, 0.0, epsilon = 1e-12);
    assert_relative_eq!(sol.eval(8.0).unwrap().speed, 13.75, epsilon = 1e-9);
    assert!(sol.max_residual() < 1e-9);
}

#[test]
fn single_arc_terminal_control_vanishes() {
    for (t0, v0, tm, l) in [(0.0, 10.0, 8.0, 100.0), (3.0, 7.5, 21.0, 130.0)] {
        let sol = solve_single_arc(t0, v0, tm, l).unwrap();
        assert_relative_eq!(sol.eval(tm).unwrap().control, 0.0, epsilon = 1e-10);
    }
}

#[test]
fn single_arc_rejects_degenerate_times() {
    assert!(matches!(
        solve_single_arc(5.0, 10.0, 5.0, 100.0),
        Err(OcpError::InvalidInput(_))
    ));
}

#[test]
fn two_arc_constant_speed_is_trivial() {
    // Merge times timed exactly for constant speed: both arcs stay flat.
    let sol = solve_two_arc(0.0, 10.0, 10.0, 100.0, 26.8, 268.0, None).unwrap();
    for arc in sol.arcs() {
        assert_relative_eq!(arc.a, 0.0, epsilon = 1e-10);
        assert_relative_eq!(arc.b, 0.0, epsilon = 1e-10);
    }
    assert_relative_eq!(sol.jumps.unwrap().position, 0.0, epsilon = 1e-10);
    assert!(sol.energy() < 1e-12);
}

#[test]
fn two_arc_matches_reference_solve() {
    let sol = solve_two_arc(0.0, 10.0, 9.0, 100.0, 20.0, 268.0, None).unwrap();
    let expect = reference_two_arc(0.0, 10.0, 9.0, 100.0, 20.0, 268.0);
    let got = [
        sol.arcs()[0].a,
        sol.arcs()[0].b,
        sol.arcs()[0].c,
        sol.arcs()[0].d,
        sol.arcs()[1].a,
        sol.arcs()[1].b,
        sol.arcs()[1].c,
        sol.arcs()[1].d,
        sol.jumps.unwrap().position,
    ];
    for (g, e) in got.iter().zip(&expect) {
        assert_relative_eq!(g, e, epsilon = 1e-9, max_relative = 1e-9);
    }
    assert!(sol.max_residual() < 1e-9, "residual {}", sol.max_residual());

    // Control continuous at the seam, slope discontinuous: the jump lands
    // entirely in the position co-state.
    let seam = 9.0;
    let before = sol.arcs()[0].control(seam);
    let after = sol.arcs()[1].control(seam);
    assert_relative_eq!(before, after, epsilon = 1e-9);
    assert!((sol.arcs()[0].a - sol.arcs()[1].a).abs() > 1e-6);
    assert_relative_eq!(
        sol.arcs()[0].a - sol.arcs()[1].a,
        sol.jumps.unwrap().position,
        epsilon = 1e-12
    );
}

#[test]
fn two_arc_with_interior_speed_pins_both_sides() {
    let sol = solve_two_arc(0.0, 10.0, 9.0, 100.0, 20.0, 268.0, Some(12.0)).unwrap();
    let tau = 9.0;
    assert_relative_eq!(sol.arcs()[0].speed(tau), 12.0, epsilon = 1e-9);
    assert_relative_eq!(sol.arcs()[1].speed(tau), 12.0, epsilon = 1e-9);
    let pi1 = sol.jumps.unwrap().speed.expect("pi1 present");
    assert!(pi1.abs() > 1e-6, "interior speed pin should bind, pi1={pi1}");
    assert!(sol.max_residual() < 1e-9);
}

#[test]
fn eval_is_continuous_across_the_seam() {
    let sol = solve_two_arc(0.0, 10.0, 9.0, 100.0, 20.0, 268.0, None).unwrap();
    let before = sol.arcs()[0];
    let at = sol.eval(9.0).unwrap();
    assert_relative_eq!(at.position, before.position(9.0), epsilon = 1e-9);
    assert_relative_eq!(at.speed, before.speed(9.0), epsilon = 1e-9);
    // The right arc's co-state is reported at the boundary.
    assert_relative_eq!(at.costate.position, sol.arcs()[1].a, epsilon = 1e-12);
}

#[test]
fn eval_rejects_out_of_span() {
    let sol = solve_single_arc(0.0, 10.0, 8.0, 100.0).unwrap();
    assert!(matches!(sol.eval(-1.0), Err(OcpError::OutOfSpan { .. })));
    assert!(matches!(sol.eval(8.5), Err(OcpError::OutOfSpan { .. })));
}

#[test]
fn eval_initial_control_matches_reference() {
    let sol = solve_single_arc(0.0, 10.0, 8.0, 100.0).unwrap();
    assert_relative_eq!(sol.eval(0.0).unwrap().control, 0.9375, epsilon = 1e-12);
}

#[test]
fn energy_of_derived_case() {
    // Analytic integral of ½(−0.1171875 t + 0.9375)² over [0, 8].
    let sol = solve_single_arc(0.0, 10.0, 8.0, 100.0).unwrap();
    assert_relative_eq!(sol.energy(), 1.171875, epsilon = 1e-12);

    // Cross-check by numeric quadrature of the evaluated control.
    let n = 20_000;
    let dt = 8.0 / n as f64;
    let mut quad = 0.0;
    for k in 0..n {
        let t_mid = (k as f64 + 0.5) * dt;
        let u = sol.eval(t_mid).unwrap().control;
        quad += 0.5 * u * u * dt;
    }
    assert_relative_eq!(sol.energy(), quad, epsilon = 1e-6);
}

#[test]
fn hamiltonian_jump_identity_holds() {
    let trivial = solve_two_arc(0.0, 10.0, 10.0, 100.0, 26.8, 268.0, None).unwrap();
    assert!(trivial.hamiltonian_jump_residual().unwrap().abs() < 1e-10);

    let sol = solve_two_arc(0.0, 10.0, 9.0, 100.0, 20.0, 268.0, None).unwrap();
    assert!(sol.hamiltonian_jump_residual().unwrap().abs() < 1e-8);

    let pinned = solve_two_arc(0.0, 10.0, 9.0, 100.0, 20.0, 268.0, Some(12.0)).unwrap();
    assert!(pinned.hamiltonian_jump_residual().unwrap().abs() < 1e-8);

    let single = solve_single_arc(0.0, 10.0, 8.0, 100.0).unwrap();
    assert_eq!(
        single.hamiltonian_jump_residual().unwrap_err(),
        OcpError::NotTwoArc
    );
}

#[test]
fn bound_check_reports_but_never_clips() {
    let cfg = ConstraintConfig::default();
    let cruise = solve_single_arc(0.0, 10.0, 10.0, 100.0).unwrap();
    assert!(cruise.bound_check(&cfg).ok());

    let mild = solve_single_arc(0.0, 10.0, 8.0, 100.0).unwrap();
    let report = mild.bound_check(&cfg);
    assert!(report.ok());
    assert!(report.control_range.1 <= 0.9375 + 1e-12);

    // Aggressively short arrival: flagged, not silently altered.
    let harsh = solve_single_arc(0.0, 10.0, 4.0, 100.0).unwrap();
    let report = harsh.bound_check(&cfg);
    assert!(!report.ok());
    assert!(harsh.max_residual() < 1e-9);
}

#[test]
fn oracle_certifies_single_arc_energy() {
    let sol = solve_single_arc(0.0, 10.0, 8.0, 100.0).unwrap();
    let oracle = minimum_energy(
        0.0,
        10.0,
        &[Waypoint {
            time: 8.0,
            position: 100.0,
            speed: None,
        }],
        400,
    )
    .unwrap();
    assert_relative_eq!(oracle.energy, 1.171875, max_relative = 5e-3);
    // The closed form is the continuous optimum: never above the oracle.
    assert!(sol.energy() <= oracle.energy * (1.0 + 1e-3));
}

#[test]
fn oracle_certifies_two_arc_energy() {
    let sol = solve_two_arc(0.0, 10.0, 9.0, 100.0, 20.0, 268.0, None).unwrap();
    let oracle = minimum_energy(
        0.0,
        10.0,
        &[
            Waypoint {
                time: 9.0,
                position: 100.0,
                speed: None,
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
    assert!(oracle.energy >= sol.energy() * (1.0 - 5e-3));
    assert!(sol.energy() <= oracle.energy * (1.0 + 1e-3));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn random_single_arcs_have_tiny_residuals(
        t0 in 0.0f64..120.0,
        v0 in 2.0f64..18.0,
        horizon in 6.0f64..40.0,
        l in 60.0f64..320.0,
    ) {
        let sol = solve_single_arc(t0, v0, t0 + horizon, l).unwrap();
        prop_assert!(sol.max_residual() < 1e-9);
        prop_assert!(sol.energy() >= 0.0);
    }

    #[test]
    fn random_two_arcs_have_tiny_residuals(
        t0 in 0.0f64..120.0,
        v0 in 2.0f64..18.0,
        h1 in 6.0f64..30.0,
        h2 in 6.0f64..30.0,
        l1 in 60.0f64..160.0,
        extra in 40.0f64..220.0,
    ) {
        let sol = solve_two_arc(t0, v0, t0 + h1, l1, t0 + h1 + h2, l1 + extra, None).unwrap();
        prop_assert!(sol.max_residual() < 1e-9);
        prop_assert!(sol.hamiltonian_jump_residual().unwrap().abs() < 1e-8);
    }

    #[test]
    fn energy_is_translation_invariant(
        shift in 0.0f64..200.0,
        v0 in 2.0f64..18.0,
        horizon in 6.0f64..40.0,
        l in 60.0f64..320.0,
    ) {
        let base = solve_single_arc(0.0, v0, horizon, l).unwrap();
        let moved = solve_single_arc(shift, v0, shift + horizon, l).unwrap();
        prop_assert!((base.energy() - moved.energy()).abs() < 1e-9);
    }
}
