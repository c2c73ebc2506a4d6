use std::f64::consts::PI;

use ism_core::dynamics::{
    state_norm, step_rk4, step_rk4_with_loop, step_vorticity_rk4, Deterministic, MaterialLoop, Params, SimState,
    Truncated, VorticityState,
};
use ism_core::field::{make_grid, Geometry, Grid, NormSpec, VectorField};
use ism_core::incompressible::{curl, divergence};
use ism_core::initial::{analytic_state, random_state, smooth_state};

fn torus(n: usize) -> Grid {
    make_grid(Geometry::Torus, n, n, 2.0 * PI, 2.0 * PI).unwrap()
}

fn square(n: usize) -> Grid {
    make_grid(Geometry::FreeSlipSquare, n, n, PI, PI).unwrap()
}

fn advance(state: &SimState, params: Params, dt: f64, steps: usize) -> SimState {
    let drift = Deterministic { params };
    let mut s = state.clone();
    for _ in 0..steps {
        s = step_rk4(&s, dt, &drift).unwrap();
    }
    s
}

fn resample(state: &SimState, grid: &Grid) -> SimState {
    SimState {
        t: state.t,
        u_s: VectorField { x: state.u_s.x.resample(grid).unwrap(), z: state.u_s.z.resample(grid).unwrap() },
        u_t: state.u_t.resample(grid).unwrap(),
        theta: state.theta.resample(grid).unwrap(),
    }
}

#[test]
fn slice_velocity_stays_divergence_free_every_step() {
    for (grid, s) in [(torus(32), 0.0), (square(32), 1.0)] {
        let params = Params { s, ..Params::default() };
        let drift = Deterministic { params };
        let mut state = random_state(&grid, 11, 5, 0.5);
        let mut material = MaterialLoop::circle([0.5 * grid.lx(), 0.5 * grid.lz()], 0.3, 64).unwrap();
        for _ in 0..50 {
            let (next, m) = step_rk4_with_loop(&state, &material, 2e-3, &drift).unwrap();
            state = next;
            material = m;
            let div = divergence(&state.u_s).max_abs();
            assert!(div <= 1e-10 * state.u_s.l2_norm(), "{:?}: div {div}", grid.geometry());
        }
    }
}

#[test]
fn generous_truncation_leaves_trajectory_unchanged() {
    let grid = square(32);
    let params = Params::default();
    let plain = Deterministic { params };
    let mut trajectory = vec![smooth_state(&grid, 1.0)];
    for _ in 0..40 {
        let next = step_rk4(trajectory.last().unwrap(), 2e-3, &plain).unwrap();
        trajectory.push(next);
    }
    let max_norm = trajectory.iter().map(|s| state_norm(s, NormSpec::W1_INF)).fold(0.0, f64::max);
    let truncated = Truncated::new(params, 10.0 * max_norm).unwrap();
    let mut s = trajectory[0].clone();
    for reference in &trajectory[1..] {
        s = step_rk4(&s, 2e-3, &truncated).unwrap();
        assert!(s.l2_distance(reference) <= 1e-12, "t = {}", s.t);
    }
}

#[test]
fn vorticity_and_primitive_forms_agree() {
    // the torus source term is not periodic, so the stratification is switched off
    let grid = torus(128);
    let params = Params { s: 0.0, ..Params::default() };
    let initial = smooth_state(&grid, 1.0);
    let (dt, steps) = (5e-4, 1000);
    let primitive = advance(&initial, params, dt, steps);
    let mut vort = VorticityState::from_state(&initial);
    for _ in 0..steps {
        vort = step_vorticity_rk4(&vort, &params, dt).unwrap();
    }
    let omega = curl(&primitive.u_s);
    let rel = omega.sub(&vort.omega).l2_norm() / vort.omega.l2_norm();
    assert!(rel <= 1e-6, "relative vorticity mismatch {rel:e}");
    assert!((vort.t - 0.5).abs() < 1e-12);
}

#[test]
fn analytic_data_converge_spectrally() {
    let params = Params { s: 0.0, ..Params::default() };
    let (dt, steps) = (2.5e-3, 100);
    let fine = torus(256);
    let reference = advance(&analytic_state(&fine, 1.0), params, dt, steps);
    let error = |n: usize| {
        let s = advance(&analytic_state(&torus(n), 1.0), params, dt, steps);
        resample(&s, &fine).l2_distance(&reference)
    };
    let (e32, e64) = (error(32), error(64));
    assert!(e32 >= 100.0 * e64, "N=32 error {e32:e}, N=64 error {e64:e}");
}
