use std::f64::consts::PI;

use ism_core::dynamics::{state_norm, Params, SimState};
use ism_core::experiments::{gbm_max_oracle, mc_global_regularity, mollifier_cauchy_study, GlobalConfig};
use ism_core::field::{make_grid, Component, Geometry, Grid, NormSpec, ScalarField};
use ism_core::initial::{random_state, smooth_state};

fn torus(n: usize, side: f64) -> Grid {
    make_grid(Geometry::Torus, n, n, side, side).unwrap()
}

#[test]
fn mollified_solutions_form_a_cauchy_sequence() {
    let grid = torus(64, 2.0 * PI);
    let params = Params { s: 0.0, ..Params::default() };
    let initial = random_state(&grid, 5, 12, 0.3);
    let d = mollifier_cauchy_study(&initial, &params, &[8, 16, 32, 64], 0.05, 5e-3, NormSpec::L2).unwrap();
    let dist: Vec<f64> = d.iter().map(|x| x.1).collect();
    assert!(dist.windows(2).all(|w| w[1] < w[0]), "{dist:?}");
}

#[test]
fn constant_data_are_left_alone_by_the_mollifier() {
    let grid = torus(16, 2.0 * PI);
    let params = Params { s: 0.0, ..Params::default() };
    let mut initial = SimState::zeros(&grid);
    initial.u_t = ScalarField::constant(&grid, grid.basis_for(Component::Transverse), 0.7);
    let d = mollifier_cauchy_study(&initial, &params, &[8, 16, 32], 0.05, 1e-2, NormSpec::H3).unwrap();
    assert!(d.iter().all(|x| x.1 == 0.0), "{d:?}");
}

#[test]
fn long_wave_data_sit_inside_the_passband() {
    // on a large domain the resolved wavenumbers are small next to j = 8
    let grid = torus(16, 2.0e4 * PI);
    let params = Params { s: 0.0, ..Params::default() };
    let raw = smooth_state(&grid, 1.0);
    let initial = raw.scaled(1.0 / state_norm(&raw, NormSpec::L2));
    let d = mollifier_cauchy_study(&initial, &params, &[8, 16, 32], 0.05, 1e-2, NormSpec::L2).unwrap();
    assert!(d.iter().all(|x| x.1 <= 1e-8), "{d:?}");
}

#[test]
fn non_hitting_fraction_matches_the_exact_law() {
    let grid = torus(8, 2.0 * PI);
    let alpha = 40.0;
    let r = 2f64.powi(16);
    let cfg = GlobalConfig {
        params: Params { s: 0.0, alpha, ..Params::default() },
        initial: smooth_state(&grid, 1e-6),
        r,
        c_tilde: 1.0,
        norm: NormSpec::W1_INF,
        n_paths: 200,
        horizon: 0.25,
        dt: 2.5e-4,
        seed: 21,
    };
    let report = mc_global_regularity(&cfg).unwrap();
    assert_eq!(report.diverged, 0);
    let expected = 1.0 - gbm_max_oracle(alpha, r, cfg.horizon).unwrap();
    let s = &report.non_hitting;
    assert!(
        (s.fraction - expected).abs() <= 3.0 * s.standard_error,
        "fraction {} vs {expected} (se {})",
        s.fraction,
        s.standard_error
    );
    assert_eq!(report.bound.fraction, 1.0);
}
