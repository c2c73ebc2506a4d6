use super::*;
use crate::field::{make_grid, Exponent, Geometry, Grid};
use std::f64::consts::PI;

fn torus(n: usize) -> Grid {
    make_grid(Geometry::Torus, n, n, 2.0 * PI, 2.0 * PI).unwrap()
}

// first-passage density of x0 = 0 to level a > 0 for drift mu, volatility sigma
fn passage_density(a: f64, mu: f64, sigma: f64, t: f64) -> f64 {
    a / (sigma * (2.0 * PI * t.powi(3)).sqrt()) * (-(a - mu * t).powi(2) / (2.0 * sigma * sigma * t)).exp()
}

fn integrated_passage(alpha: f64, r: f64, horizon: f64) -> f64 {
    // substitution t = s^2 removes the endpoint singularity
    let (a, mu, sigma) = (r.ln(), -alpha * alpha / 32.0, alpha.abs());
    let n = 200_000;
    let top = horizon.sqrt();
    let h = top / n as f64;
    let f = |s: f64| if s == 0.0 { 0.0 } else { passage_density(a, mu, sigma, s * s) * 2.0 * s };
    let mut sum = f(0.0) + f(top);
    for i in 1..n {
        sum += f(i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
    }
    sum * h / 3.0
}

#[test]
fn oracle_closed_forms() {
    assert_eq!(gbm_max_oracle(1.0, 1.0, 10.0).unwrap(), 1.0);
    let r = 2f64.powi(16);
    assert_eq!(gbm_max_oracle(3.0, r, f64::INFINITY).unwrap(), r.powf(-1.0 / 16.0));
    assert!((gbm_max_oracle(3.0, r, f64::INFINITY).unwrap() - 0.5).abs() < 1e-15);
    assert!((gbm_max_oracle(1.0, 2.0, f64::INFINITY).unwrap() - 0.957603).abs() < 1e-6);
    assert!(gbm_max_oracle(1.0, 0.5, 1.0).is_err());
    assert!(gbm_max_oracle(1.0, 2.0, 0.0).is_err());
    assert_eq!(gbm_max_oracle(0.0, 2.0, 5.0).unwrap(), 0.0);
}

#[test]
fn oracle_matches_integrated_passage_density() {
    for &(alpha, r, t) in &[(1.0, 2.0, 10.0), (1.0, 2.0, 1e3), (4.0, 50.0, 3.0), (0.3, 1.5, 40.0)] {
        let closed = gbm_max_oracle(alpha, r, t).unwrap();
        let quad = integrated_passage(alpha, r, t);
        assert!((closed - quad).abs() < 1e-7, "alpha {alpha} r {r} T {t}: {closed} vs {quad}");
    }
}

#[test]
fn oracle_grows_with_horizon() {
    let ps: Vec<f64> = [1e2, 1e3, 1e4].iter().map(|&t| gbm_max_oracle(1.0, 2.0, t).unwrap()).collect();
    assert!(ps.windows(2).all(|w| w[1] >= w[0] - 1e-12));
    let lim = 2f64.powf(-1.0 / 16.0);
    assert!((lim - ps[2]).abs() < (lim - ps[0]).abs());
    assert!(ps[2] <= lim);
}

#[test]
fn hitting_frequency_basics() {
    let s = mc_hitting(1.0, 1.0, 1.0, 100, 0.01, 1).unwrap();
    assert_eq!(s.fraction, 1.0);
    assert!(mc_hitting(1.0, 2.0, 1.0, 99, 0.01, 1).is_err());
    let a = mc_hitting(1.0, 2.0, 10.0, 2000, 0.01, 7).unwrap();
    let b = mc_hitting(1.0, 2.0, 10.0, 4000, 0.01, 7).unwrap();
    let ratio = b.standard_error / a.standard_error;
    assert!((0.6..=0.8).contains(&ratio), "ratio {ratio}");
    assert!((a.standard_error - (a.fraction * (1.0 - a.fraction) / 2000.0).sqrt()).abs() < 1e-15);
}

#[test]
fn hitting_is_independent_of_thread_count() {
    let run = |threads| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| mc_hitting(1.0, 2.0, 5.0, 500, 0.01, 99).unwrap())
    };
    assert_eq!(run(1), run(4));
}

#[test]
fn stopped_lambda_root_is_a_martingale() {
    let (mean, se) = lambda_martingale_mean(1.0, 2.0, 5.0, 20_000, 0.01, 3).unwrap();
    assert!((mean - 1.0).abs() <= 4.0 * se, "mean {mean} se {se}");
}

#[test]
fn amplitude_threshold_properties() {
    assert!(matches!(amplitude_threshold(16.0, 1.0, 1.0), Err(IsmError::Domain(_))));
    assert!(matches!(amplitude_threshold(-10.0, 1.0, 1.0), Err(IsmError::Domain(_))));
    // direct evaluation of the formula
    let (alpha, r, c): (f64, f64, f64) = (20.0, 1.0, 1.0);
    let q = alpha / (16.0 * c);
    let e = (4.0 * c * r).exp();
    let big_a = 2.0
        * r
        * (1.0 + q.powf(1.0 - 1.0 / (2.0 * (e - 1.0))))
        * (c * r * e * (8.0 + 32.0 * c / (alpha * alpha))).exp();
    let direct = q / big_a;
    let ours = amplitude_threshold(alpha, r, c).unwrap();
    assert!((ours - direct).abs() <= 1e-12 * direct);
    assert!(ours > 0.0 && ours < 1.0 && ours <= q);
    let ln: Vec<f64> =
        [17.0, 20.0, 40.0, 100.0, 1e3, 1e5].iter().map(|&a| amplitude_threshold_ln(a, 2.0, 1.0).unwrap()).collect();
    assert!(ln.windows(2).all(|w| w[1] > w[0]));
}

#[test]
fn decay_fit() {
    let t: Vec<f64> = (0..50).map(|i| i as f64 * 0.02).collect();
    let v: Vec<f64> = t.iter().map(|t| 2.5 * (-3.0 * t).exp()).collect();
    assert!((decay_rate_fit(&t, &v).unwrap() - 3.0).abs() < 1e-10);
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let jit: Vec<f64> = v
        .iter()
        .map(|x| {
            let z: f64 = StandardNormal.sample(&mut rng);
            x * (1.0 + 0.01 * z)
        })
        .collect();
    assert!((decay_rate_fit(&t, &jit).unwrap() - 3.0).abs() < 0.15);
    let mut bad = v.clone();
    bad[3] = 0.0;
    assert!(matches!(decay_rate_fit(&t, &bad), Err(IsmError::Fit(_))));
}

#[test]
fn zero_data_studies() {
    let g = torus(8);
    let p = Params::new(1.0, 1.0, 1.0, 0.0, 0.5).unwrap();
    let cfg = StrongConfig {
        params: p,
        initial: SimState::zeros(&g),
        alpha: 0.5,
        horizon: 0.1,
        coarse_dt: 0.025,
        levels: 4,
        reference_refinements: 1,
        paths: 2,
        seed: 1,
    };
    let table = strong_convergence_study(&cfg).unwrap();
    assert!(table.rows.iter().all(|r| r.1 == 0.0));
    assert_eq!(table.slope, None);
    assert!(strong_convergence_study(&StrongConfig { levels: 3, ..cfg }).is_err());

    let spec = NormSpec::new(1, Exponent::Finite(2.0)).unwrap();
    let d = mollifier_cauchy_study(&SimState::zeros(&g), &p, &[8, 16, 32, 64], 0.05, 0.01, spec).unwrap();
    assert!(d.iter().all(|x| x.1 == 0.0));
    assert!(mollifier_cauchy_study(&SimState::zeros(&g), &p, &[8, 16], 0.05, 0.01, spec).is_err());
    assert!(mollifier_cauchy_study(&SimState::zeros(&g), &p, &[8, 16, 48], 0.05, 0.01, spec).is_err());
}

#[test]
fn global_regularity_with_zero_data() {
    let g = torus(8);
    let p = Params::new(1.0, 1.0, 1.0, 0.0, 40.0).unwrap();
    let cfg = GlobalConfig {
        params: p,
        initial: SimState::zeros(&g),
        r: 2f64.powi(16),
        c_tilde: 1.0,
        norm: NormSpec::H3,
        n_paths: 8,
        horizon: 0.05,
        dt: 1e-3,
        seed: 11,
    };
    let rep = mc_global_regularity(&cfg).unwrap();
    assert_eq!(rep.bound.fraction, 1.0);
    assert_eq!(rep.diverged, 0);
    assert_eq!(rep.paths.len(), 8);
    let bad = GlobalConfig { params: Params { s: 1.0, ..p }, ..cfg };
    assert!(mc_global_regularity(&bad).is_err());
}
