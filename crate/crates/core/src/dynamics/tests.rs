use super::*;
use crate::field::{make_grid, FieldBasis, Geometry, NormSpec, Normed};
use crate::incompressible::{divergence, perp_gradient};
use crate::initial::{random_state, smooth_state};
use proptest::prelude::*;
use std::f64::consts::PI;

fn torus(n: usize) -> Grid {
    make_grid(Geometry::Torus, n, n, 2.0 * PI, 2.0 * PI).unwrap()
}

fn square(n: usize) -> Grid {
    make_grid(Geometry::FreeSlipSquare, n, n, PI, PI).unwrap()
}

fn params(f: f64, g: f64, s: f64) -> Params {
    Params::new(f, g, 1.0, s, 0.0).unwrap()
}

#[test]
fn params_reject_bad_values() {
    assert!(Params::new(1.0, 1.0, 0.0, 1.0, 0.0).is_err());
    assert!(Params::new(f64::NAN, 1.0, 1.0, 1.0, 0.0).is_err());
    assert_eq!(Params::default(), Params::new(1.0, 1.0, 1.0, 1.0, 0.0).unwrap());
}

#[test]
fn zero_state_has_zero_tendency() {
    for g in [torus(16), square(16)] {
        let k = rhs_deterministic(&SimState::zeros(&g), &params(1.3, 2.0, 0.0)).unwrap();
        assert_eq!(k.max_abs(), 0.0);
    }
}

#[test]
fn uniform_transverse_velocity_drives_slice_flow() {
    let g = torus(16);
    let mut s = SimState::zeros(&g);
    s.u_t = ScalarField::constant(&g, FieldBasis::PERIODIC, 0.7);
    let p = params(1.5, 1.0, 0.0);
    let k = rhs_deterministic(&s, &p).unwrap();
    assert!(k.du_s.x.values().iter().all(|v| (v - 1.5 * 0.7).abs() < 1e-14));
    assert!(k.du_s.z.max_abs() < 1e-14);
    assert!(k.du_t.max_abs() < 1e-14 && k.dtheta.max_abs() < 1e-14);
}

#[test]
fn buoyancy_of_a_single_mode_is_divergence_free() {
    let g = torus(16);
    let mut s = SimState::zeros(&g);
    s.theta = ScalarField::from_fn(&g, FieldBasis::PERIODIC, |x, _| x.sin());
    let p = Params::new(0.8, 3.0, 2.0, 0.0, 0.0).unwrap();
    let k = rhs_deterministic(&s, &p).unwrap();
    let exact = ScalarField::from_fn(&g, FieldBasis::PERIODIC, |x, _| 1.5 * x.sin());
    assert!(k.du_s.z.sub(&exact).max_abs() < 1e-14);
    assert!(k.du_s.x.max_abs() < 1e-14);

    let v = rhs_vorticity(&VorticityState::from_state(&s), &p).unwrap();
    let exact = ScalarField::from_fn(&g, FieldBasis::PERIODIC, |x, _| 1.5 * x.cos());
    assert!(v.domega.sub(&exact).max_abs() < 1e-13);
    let z = rhs_vorticity(&VorticityState::from_state(&SimState::zeros(&g)), &p).unwrap();
    assert_eq!(z.domega.max_abs() + z.du_t.max_abs() + z.dtheta.max_abs(), 0.0);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]
    #[test]
    fn vorticity_form_matches_curl_of_primitive(seed in any::<u64>(), on_square in any::<bool>()) {
        let (g, p) = if on_square { (square(32), params(1.2, 0.9, 0.0)) } else { (torus(32), params(1.2, 0.9, 0.0)) };
        let s = random_state(&g, seed, 4, 1.0);
        let k = rhs_deterministic(&s, &p).unwrap();
        let v = rhs_vorticity(&VorticityState::from_state(&s), &p).unwrap();
        let c = crate::incompressible::curl(&k.du_s);
        let scale = v.domega.l2_norm().max(1.0);
        prop_assert!(v.domega.sub(&c).l2_norm() <= 1e-9 * scale);
        prop_assert!(v.du_t.sub(&k.du_t).l2_norm() <= 1e-9 * scale);
        prop_assert!(v.dtheta.sub(&k.dtheta).l2_norm() <= 1e-9 * scale);
        let div = divergence(&k.du_s).max_abs();
        prop_assert!(div <= 1e-10 * k.du_s.l2_norm().max(1.0));
    }
}

#[test]
fn zero_tendency_leaves_state_unchanged() {
    let g = torus(16);
    let s = SimState::zeros(&g);
    let next = step_rk4(&s, 0.1, &Deterministic { params: params(1.0, 1.0, 0.0) }).unwrap();
    assert_eq!(next.l2_squared(), 0.0);
    assert_eq!(next.t, 0.1);
}

#[test]
fn inertial_oscillation_keeps_energy() {
    let g = torus(8);
    let (a0, b0) = (0.6, -0.3);
    let mut s = SimState::zeros(&g);
    s.u_s.x = ScalarField::constant(&g, FieldBasis::PERIODIC, a0);
    s.u_t = ScalarField::constant(&g, FieldBasis::PERIODIC, b0);
    let f = 2.0;
    let drift = Deterministic { params: Params::new(f, 0.0, 1.0, 0.0, 0.0).unwrap() };
    let dt = 0.01;
    let steps = (PI / dt).round() as usize; // one period at f = 2
    for _ in 0..steps {
        s = step_rk4(&s, dt, &drift).unwrap();
    }
    let t = s.t;
    let a = s.u_s.x.values()[0];
    let b = s.u_t.values()[0];
    let e0 = a0 * a0 + b0 * b0;
    assert!(((a * a + b * b) - e0).abs() <= dt.powi(4));
    // exact solution a = a0 cos ft + b0 sin ft
    assert!((a - (a0 * (f * t).cos() + b0 * (f * t).sin())).abs() < 1e-8);
    assert!((b - (b0 * (f * t).cos() - a0 * (f * t).sin())).abs() < 1e-8);
}

fn run(state: &SimState, drift: &dyn Drift, dt: f64, steps: usize) -> SimState {
    let mut s = state.clone();
    for _ in 0..steps {
        s = step_rk4(&s, dt, drift).unwrap();
    }
    s
}

#[test]
fn halving_dt_gives_fourth_order() {
    let g = torus(32);
    let s0 = smooth_state(&g, 1.0);
    let drift = Deterministic { params: params(1.0, 1.0, 0.0) };
    let reference = run(&s0, &drift, 0.2 / 32.0, 32);
    let e1 = run(&s0, &drift, 0.2 / 4.0, 4).l2_distance(&reference);
    let e2 = run(&s0, &drift, 0.2 / 8.0, 8).l2_distance(&reference);
    let ratio = e1 / e2;
    assert!((12.0..20.0).contains(&ratio), "ratio {ratio}");
}

#[test]
fn step_reports_divergence_with_last_state() {
    let g = torus(16);
    let s0 = smooth_state(&g, 1.0);
    let drift = Deterministic { params: params(1.0, 1.0, 0.0) };
    let mut s = s0.clone();
    let mut failed = None;
    for _ in 0..200 {
        match step_rk4(&s, 5.0, &drift) {
            Ok(n) => s = n,
            Err(e) => {
                failed = Some(e);
                break;
            }
        }
    }
    let failure = failed.expect("huge steps must diverge");
    assert!(matches!(failure.error, crate::IsmError::Diverged { .. }));
    assert!(failure.last_valid.is_finite());
}

#[test]
fn cutoff_shape() {
    let r = 2.0;
    assert_eq!(cutoff(0.5 * r, r).unwrap(), 1.0);
    assert_eq!(cutoff(3.0 * r, r).unwrap(), 0.0);
    assert!((cutoff(1.5 * r, r).unwrap() - 0.5).abs() < 1e-15);
    assert!(cutoff(1.0, 0.0).is_err());
    let mut prev = 1.0;
    let mut max_slope: f64 = 0.0;
    let h = 1e-4;
    for i in 0..=40000 {
        let x = i as f64 * h;
        let c = cutoff(x, r).unwrap();
        assert!(c <= prev && (0.0..=1.0).contains(&c));
        max_slope = max_slope.max((prev - c) / h);
        prev = c;
    }
    // the blend's derivative in y is bounded by 2 so |d/dx| <= 2/R
    assert!(max_slope <= 2.0 / r);
}

#[test]
fn truncated_rhs_regions() {
    let g = torus(32);
    let p = params(1.0, 1.0, 0.0);
    let s = smooth_state(&g, 1.0);
    let z = state_norm(&s, NormSpec::W1_INF);
    let plain = rhs_deterministic(&s, &p).unwrap();
    let big = rhs_truncated(&s, &p, 10.0 * z).unwrap();
    assert_eq!(plain, big);

    let linear = rhs_core(&s, &p, |_| AdvectionWeights::ZERO, 1.0).unwrap().tendency;
    let tiny = rhs_truncated(&s, &p, z / 100.0).unwrap();
    assert_eq!(tiny, linear);

    // mid region: recompose from the scalar cut-off values
    let norms = w1inf_norms(&s);
    let radius = norms[0] / 1.5;
    let w = advection_weights_truncated(norms, radius).unwrap();
    assert!(w.us > 0.0 && w.us < 1.0);
    let mid = rhs_truncated(&s, &p, radius).unwrap();
    let adv_only = |k: &Tendency, l: &Tendency| {
        [k.du_s.x.sub(&l.du_s.x), k.du_s.z.sub(&l.du_s.z), k.du_t.sub(&l.du_t), k.dtheta.sub(&l.dtheta)]
    };
    let full = adv_only(&plain, &linear);
    let part = adv_only(&mid, &linear);
    let ws = [w.us, w.us, w.ut, w.th];
    for i in 0..4 {
        assert!(part[i].sub(&full[i].scaled(ws[i])).max_abs() < 1e-12 * full[i].max_abs().max(1.0));
    }
}

#[test]
fn mollifier_examples() {
    let g = torus(32);
    let mut s = SimState::zeros(&g);
    s.u_t = ScalarField::constant(&g, FieldBasis::PERIODIC, 2.0);
    s.theta = ScalarField::from_fn(&g, FieldBasis::PERIODIC, |x, _| x.sin());
    let m = mollify(&s, 4).unwrap();
    assert!(m.u_t.sub(&s.u_t).max_abs() < 1e-14);
    assert!(m.theta.sub(&s.theta.scaled((-1.0f64 / 16.0).exp())).max_abs() < 1e-14);
    assert!(mollify(&s, 0).is_err());

    let r = smooth_state(&g, 1.0);
    let d: Vec<f64> = [8, 16, 32, 64].iter().map(|&j| mollify(&r, j).unwrap().l2_distance(&r)).collect();
    assert!(d.windows(2).all(|w| w[1] < w[0]));
}

#[test]
fn energy_examples() {
    let g = square(32);
    let p = params(1.0, 1.0, 0.0);
    assert_eq!(energy(&SimState::zeros(&g), &p), 0.0);
    let mut s = SimState::zeros(&g);
    let psi = ScalarField::for_component(&g, Component::Streamfunction, |x, z| x.sin() * z.sin());
    s.u_s = perp_gradient(&psi);
    assert!((energy(&s, &p) - PI * PI / 4.0).abs() < 1e-12);

    // a constant is exact in the cosine expansion
    let mut s = SimState::zeros(&g);
    s.theta = ScalarField::constant(&g, FieldBasis::COSINE_COSINE, 0.7);
    assert!((energy(&s, &p) + 0.7 * PI.powi(3) / 2.0).abs() < 1e-12);
    // sine expansion in z integrates its own interpolant exactly
    let th = ScalarField::for_component(&g, Component::Temperature, |x, z| x.cos() * (2.0 * z).sin() + z.sin());
    // ∫∫ z (cos x sin 2z + sin z) = 0 + π · π
    assert!((z_moment(&th) - PI * PI).abs() < 1e-12);
}

#[test]
fn potential_vorticity_examples() {
    let g = torus(32);
    let p = Params::new(1.7, 1.0, 1.0, 0.6, 0.0).unwrap();
    let mut s = random_state(&g, 5, 3, 1.0);
    s.theta = ScalarField::constant(&g, FieldBasis::PERIODIC, 0.3);
    let q = potential_vorticity(&s, &p);
    let w = crate::incompressible::curl(&s.u_s);
    assert!(q.sub(&w.scaled(0.6)).max_abs() < 1e-12);
    let ens = generalized_enstrophy(&s, &p, |q| q * q);
    assert!((ens - 0.36 * w.inner(&w)).abs() < 1e-10 * ens);
    assert!((generalized_enstrophy(&s, &p, |_| 1.0) - g.area()).abs() < 1e-12);

    let p0 = Params::new(1.7, 1.0, 1.0, 0.0, 0.0).unwrap();
    assert_eq!(generalized_enstrophy(&SimState::zeros(&g), &p0, |q| q * q), 0.0);
    let mut s = SimState::zeros(&g);
    s.theta = ScalarField::from_fn(&g, FieldBasis::PERIODIC, |x, z| (x + 2.0 * z).sin());
    let q = potential_vorticity(&s, &p0);
    let exact = ScalarField::from_fn(&g, FieldBasis::PERIODIC, |x, z| -1.7 * 2.0 * (x + 2.0 * z).cos());
    assert!(q.sub(&exact).max_abs() < 1e-12);
}

#[test]
fn bkm_examples() {
    let g = torus(32);
    assert_eq!(bkm_bound(&SimState::zeros(&g), 1.0).unwrap(), 0.0);
    assert!(bkm_bound(&SimState::zeros(&g), 0.0).is_err());
    let mut s = SimState::zeros(&g);
    let psi = ScalarField::from_fn(&g, FieldBasis::PERIODIC, |x, z| x.sin() * z.sin());
    s.u_s = perp_gradient(&psi);
    let l2 = s.u_s.norm(NormSpec::L2);
    let w = 2.0; // |Δψ| peaks at 2
    let h3 = s.u_s.norm(NormSpec::H3);
    let expected = 1.5 * l2 + 1.5 * w * (1.0 + (h3 / w).ln().max(0.0));
    assert!((bkm_bound(&s, 1.5).unwrap() - expected).abs() < 1e-10 * expected);
    // ratio below one drops the logarithm
    let u = crate::field::VectorField::from_fns(&g, |_, z| 1e-3 * z.sin(), |_, _| 0.0);
    s.u_s = u;
    let l2 = s.u_s.norm(NormSpec::L2);
    let w = crate::incompressible::curl(&s.u_s).max_abs();
    let h3 = s.u_s.norm(NormSpec::H3);
    if h3 / w <= 1.0 {
        assert!((bkm_bound(&s, 1.0).unwrap() - (l2 + w)).abs() < 1e-14);
    }
}

#[test]
fn circulation_basics() {
    let g = square(32);
    let p = params(1.0, 1.0, 0.0);
    let lp = MaterialLoop::circle([1.5, 1.5], 0.5, 64).unwrap();
    assert_eq!(circulation(&SimState::zeros(&g), &p, &lp).unwrap(), 0.0);
    assert!(MaterialLoop::circle([1.5, 1.5], 0.5, 8).is_err());
    let out = MaterialLoop::circle([0.2, 1.5], 0.5, 64).unwrap();
    let s = smooth_state(&g, 1.0);
    assert!(matches!(circulation(&s, &p, &out), Err(crate::IsmError::Diagnostic(_))));

    // stationary: zero slice velocity leaves loop and circulation fixed
    let mut s = SimState::zeros(&g);
    s.theta = ScalarField::for_component(&g, Component::Temperature, |x, z| x.cos() * z.sin());
    let moved = advect_loop(&lp, &s.u_s, 0.1).unwrap();
    assert_eq!(moved, lp);
    let c = circulation(&s, &p, &lp).unwrap();
    assert_eq!(circulation(&s, &p, &moved).unwrap(), c);
}

#[test]
fn interpolation_reflects_parity_at_walls() {
    let g = square(16);
    let f = ScalarField::for_component(&g, Component::VelocityX, |x, z| x.sin() * z.cos());
    assert!(interpolate(&f, 0.0, 1.0).unwrap().abs() < 1e-15);
    let v = interpolate(&f, 1.0, 0.0).unwrap();
    assert!((v - 1.0f64.sin()).abs() < 0.02);
    let t = torus(16);
    let f = ScalarField::from_fn(&t, FieldBasis::PERIODIC, |x, _| x.cos());
    assert!((interpolate(&f, 2.0 * PI - 1e-9, 0.3).unwrap() - 1.0).abs() < 0.03);
}

#[test]
fn cfl_number_scales_with_dt() {
    let g = torus(32);
    let s = smooth_state(&g, 1.0);
    let c = cfl_number(&s, 0.01);
    assert!((cfl_number(&s, 0.02) - 2.0 * c).abs() < 1e-15);
}
