use log::warn;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use statrs::distribution::{ContinuousCDF, Normal};

use crate::dynamics::{mollify, state_norm, step_rk4, Deterministic, Params, SimState};
use crate::error::{IsmError, Result};
use crate::field::NormSpec;
use crate::stochastic::{
    amplitude_quantity, lambda_value, path_seed, sample_wiener, step_em, step_transformed, transform_backward, Monitor,
    NoiseModel, StoppingKind, StoppingRecord, TransformedDrift, WienerPath,
};

/// Exact law of the running maximum of `Λ(t) = exp(αW_t - α²t/32)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GbmOracle {
    pub alpha: f64,
    pub r: f64,
    /// Horizon; `f64::INFINITY` for the whole half-line.
    pub horizon: f64,
}

impl GbmOracle {
    pub fn new(alpha: f64, r: f64, horizon: f64) -> Result<Self> {
        if !(r >= 1.0) || !r.is_finite() {
            return Err(IsmError::Config(format!("barrier r must be at least 1, got {r}")));
        }
        if !(horizon > 0.0) {
            return Err(IsmError::Config(format!("horizon must be positive, got {horizon}")));
        }
        if !alpha.is_finite() {
            return Err(IsmError::Config("alpha must be finite".into()));
        }
        Ok(GbmOracle { alpha, r, horizon })
    }

    /// `P{ sup_{t <= T} Λ(t) >= r }`.
    pub fn probability(&self) -> f64 {
        if self.r == 1.0 {
            return 1.0;
        }
        if self.alpha == 0.0 {
            return 0.0;
        }
        let tail = self.r.powf(-1.0 / 16.0);
        if self.horizon.is_infinite() {
            return tail;
        }
        let a = self.r.ln();
        let mu = -self.alpha * self.alpha / 32.0;
        let sigma = self.alpha.abs();
        let t = self.horizon;
        let phi = Normal::standard();
        let sd = sigma * t.sqrt();
        let p = phi.cdf((-a + mu * t) / sd) + tail * phi.cdf((-a - mu * t) / sd);
        p.clamp(0.0, 1.0)
    }
}

pub fn gbm_max_oracle(alpha: f64, r: f64, horizon: f64) -> Result<f64> {
    Ok(GbmOracle::new(alpha, r, horizon)?.probability())
}

/// Outcome of a Monte Carlo frequency estimate.
#[derive(Clone, Debug, PartialEq)]
pub struct McSummary {
    pub n_paths: usize,
    pub hits: usize,
    pub fraction: f64,
    pub standard_error: f64,
    pub seed: u64,
    pub dt: f64,
    pub config: String,
}

impl McSummary {
    pub fn new(n_paths: usize, hits: usize, seed: u64, dt: f64, config: String) -> Self {
        let fraction = if n_paths == 0 { 0.0 } else { hits as f64 / n_paths as f64 };
        let standard_error = if n_paths == 0 { 0.0 } else { (fraction * (1.0 - fraction) / n_paths as f64).sqrt() };
        McSummary { n_paths, hits, fraction, standard_error, seed, dt, config }
    }
}

fn path_rng(seed: u64, path: usize) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(path_seed(seed, path))
}

// log Λ along one discrete path, stopped at the barrier or the horizon
fn stopped_log_lambda(alpha: f64, log_r: f64, n_steps: usize, dt: f64, rng: &mut ChaCha8Rng) -> (bool, f64) {
    let drift = -alpha * alpha / 32.0 * dt;
    let sd = alpha.abs() * dt.sqrt();
    let mut x = 0.0;
    if x >= log_r {
        return (true, x);
    }
    for _ in 0..n_steps {
        let z: f64 = StandardNormal.sample(rng);
        x += drift + sd * z;
        if x >= log_r {
            return (true, x);
        }
    }
    (false, x)
}

fn horizon_steps(horizon: f64, dt: f64) -> Result<usize> {
    if !(dt > 0.0 && dt.is_finite()) || !(horizon > 0.0 && horizon.is_finite()) {
        return Err(IsmError::Config(format!("need finite positive horizon and step, got T = {horizon}, dt = {dt}")));
    }
    Ok((horizon / dt).round().max(1.0) as usize)
}

/// Fraction of discrete paths whose `Λ` reaches `r` by the horizon.
pub fn mc_hitting(alpha: f64, r: f64, horizon: f64, n_paths: usize, dt: f64, seed: u64) -> Result<McSummary> {
    if n_paths < 100 {
        return Err(IsmError::Config(format!("need at least 100 paths, got {n_paths}")));
    }
    GbmOracle::new(alpha, r, horizon)?;
    let n_steps = horizon_steps(horizon, dt)?;
    let log_r = r.ln();
    let hits = (0..n_paths)
        .into_par_iter()
        .filter(|&i| stopped_log_lambda(alpha, log_r, n_steps, dt, &mut path_rng(seed, i)).0)
        .count();
    let config = format!("alpha={alpha} r={r} T={horizon} dt={dt} n_paths={n_paths}");
    Ok(McSummary::new(n_paths, hits, seed, dt, config))
}

/// Sample mean and standard error of `Λ(T ∧ τ_r)^{1/16}`.
pub fn lambda_martingale_mean(
    alpha: f64,
    r: f64,
    horizon: f64,
    n_paths: usize,
    dt: f64,
    seed: u64,
) -> Result<(f64, f64)> {
    GbmOracle::new(alpha, r, horizon)?;
    if n_paths < 2 {
        return Err(IsmError::Config("need at least two paths".into()));
    }
    let n_steps = horizon_steps(horizon, dt)?;
    let log_r = r.ln();
    let samples: Vec<f64> = (0..n_paths)
        .into_par_iter()
        .map(|i| (stopped_log_lambda(alpha, log_r, n_steps, dt, &mut path_rng(seed, i)).1 / 16.0).exp())
        .collect();
    let n = n_paths as f64;
    let mean = samples.iter().sum::<f64>() / n;
    let var = samples.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    Ok((mean, (var / n).sqrt()))
}

/// `ln Ã(|α|, r)` for the amplitude below which the pathwise bound is claimed.
pub fn amplitude_threshold_ln(alpha: f64, r: f64, c_tilde: f64) -> Result<f64> {
    if !(c_tilde > 0.0 && c_tilde.is_finite()) {
        return Err(IsmError::Config(format!("C~ must be positive, got {c_tilde}")));
    }
    if !(r > 0.0 && r.is_finite()) {
        return Err(IsmError::Config(format!("r must be positive, got {r}")));
    }
    let a = alpha.abs();
    if !(a > 16.0 * c_tilde) {
        return Err(IsmError::Domain(format!("|alpha| = {a} must exceed 16 C~ = {}", 16.0 * c_tilde)));
    }
    let q = a / (16.0 * c_tilde);
    let growth = (4.0 * c_tilde * r).exp();
    let power = 1.0 - 1.0 / (2.0 * (growth - 1.0));
    let ln_a = 2f64.ln()
        + r.ln()
        + (1.0 + q.powf(power)).ln()
        + c_tilde * r * growth * (8.0 + 32.0 * c_tilde / (alpha * alpha));
    Ok(q.ln() - ln_a)
}

pub fn amplitude_threshold(alpha: f64, r: f64, c_tilde: f64) -> Result<f64> {
    Ok(amplitude_threshold_ln(alpha, r, c_tilde)?.exp())
}

/// Setup of the global-regularity Monte Carlo.
#[derive(Clone, Debug)]
pub struct GlobalConfig {
    pub params: Params,
    pub initial: SimState,
    pub r: f64,
    pub c_tilde: f64,
    pub norm: NormSpec,
    pub n_paths: usize,
    pub horizon: f64,
    pub dt: f64,
    pub seed: u64,
}

/// Per-path outcome of the global-regularity experiment.
#[derive(Clone, Debug, PartialEq)]
pub struct PathOutcome {
    pub amplitude: StoppingRecord,
    pub gbm: StoppingRecord,
    pub bound_held: bool,
    pub diverged: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct GlobalReport {
    /// Paths where the barrier time of `Λ` comes no later than the amplitude time.
    pub ordering: McSummary,
    /// Non-diverged paths on which the norm bound held up to the barrier time.
    pub bound: McSummary,
    /// Paths whose `Λ` never reached `r` before the horizon.
    pub non_hitting: McSummary,
    pub diverged: usize,
    pub paths: Vec<PathOutcome>,
}

fn global_path(cfg: &GlobalConfig, index: usize) -> Result<PathOutcome> {
    let alpha = cfg.params.alpha;
    let n_steps = horizon_steps(cfg.horizon, cfg.dt)?;
    let path = sample_wiener(cfg.dt, n_steps, 1, path_seed(cfg.seed, index))?;
    let w = path.values(0);
    let drift = TransformedDrift::new(cfg.params, alpha, &path);
    let mut amp = Monitor::new(StoppingKind::AmplitudeThreshold { alpha, c_tilde: cfg.c_tilde });
    let mut gbm = Monitor::new(StoppingKind::GbmThreshold { r: cfg.r });
    let bound = alpha.abs() / (32.0 * cfg.c_tilde);
    let mut state = cfg.initial.clone();
    let mut bound_held = true;
    let mut diverged = false;
    for (i, &w_i) in w.iter().enumerate().take(n_steps + 1) {
        let t = i as f64 * cfg.dt;
        amp.observe(t, amplitude_quantity(&state, cfg.norm));
        if state_norm(&state, cfg.norm) > bound {
            bound_held = false;
        }
        if gbm.observe(t, lambda_value(alpha, w_i, t)) || i == n_steps {
            break;
        }
        match step_transformed(&state, cfg.dt, &drift) {
            Ok(s) => state = s,
            Err(_) => {
                diverged = true;
                break;
            }
        }
    }
    Ok(PathOutcome { amplitude: amp.record(), gbm: gbm.record(), bound_held, diverged })
}

/// Runs the transformed solver on independent paths, watching the amplitude
/// and `Λ` stopping times and the pathwise norm bound.
pub fn mc_global_regularity(cfg: &GlobalConfig) -> Result<GlobalReport> {
    cfg.params.validate()?;
    if cfg.params.s != 0.0 {
        return Err(IsmError::Config("the global-regularity experiment requires s = 0".into()));
    }
    if cfg.n_paths == 0 {
        return Err(IsmError::Config("need at least one path".into()));
    }
    if let Ok(ln_thr) = amplitude_threshold_ln(cfg.params.alpha, cfg.r, cfg.c_tilde) {
        let amp = state_norm(&cfg.initial, cfg.norm);
        if amp > 0.0 && amp.ln() > ln_thr {
            warn!("initial amplitude {amp:e} exceeds the threshold exp({ln_thr})");
        }
    }
    let paths: Vec<PathOutcome> =
        (0..cfg.n_paths).into_par_iter().map(|i| global_path(cfg, i)).collect::<Result<_>>()?;
    let n = cfg.n_paths;
    let diverged = paths.iter().filter(|p| p.diverged).count();
    let first = |r: &StoppingRecord| r.trigger_time.unwrap_or(f64::INFINITY);
    let ordered = paths.iter().filter(|p| first(&p.gbm) <= first(&p.amplitude)).count();
    let held = paths.iter().filter(|p| !p.diverged && p.bound_held).count();
    let non_hit = paths.iter().filter(|p| !p.gbm.triggered).count();
    let echo = format!(
        "alpha={} r={} C~={} T={} dt={} n_paths={}",
        cfg.params.alpha, cfg.r, cfg.c_tilde, cfg.horizon, cfg.dt, n
    );
    Ok(GlobalReport {
        ordering: McSummary::new(n, ordered, cfg.seed, cfg.dt, echo.clone()),
        bound: McSummary::new(n - diverged, held, cfg.seed, cfg.dt, echo.clone()),
        non_hitting: McSummary::new(n, non_hit, cfg.seed, cfg.dt, echo),
        diverged,
        paths,
    })
}

/// Least-squares slope and intercept of `y` against `x`.
pub fn least_squares(x: &[f64], y: &[f64]) -> Result<(f64, f64)> {
    if x.len() != y.len() || x.len() < 2 {
        return Err(IsmError::Fit("need at least two matched points".into()));
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx = x.iter().map(|v| (v - mx).powi(2)).sum::<f64>();
    if sxx == 0.0 {
        return Err(IsmError::Fit("abscissae are all equal".into()));
    }
    let sxy = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum::<f64>();
    let slope = sxy / sxx;
    Ok((slope, my - slope * mx))
}

/// Exponential decay rate `λ` of a positive series `v(t) ≈ C e^{-λ t}`.
pub fn decay_rate_fit(times: &[f64], values: &[f64]) -> Result<f64> {
    if let Some(v) = values.iter().find(|v| !(**v > 0.0)) {
        return Err(IsmError::Fit(format!("series must be positive, found {v}")));
    }
    let logs: Vec<f64> = values.iter().map(|v| v.ln()).collect();
    Ok(-least_squares(times, &logs)?.0)
}

/// Setup of an Euler-Maruyama strong-convergence study.
#[derive(Clone, Debug)]
pub struct StrongConfig {
    pub params: Params,
    pub initial: SimState,
    /// Linear noise amplitude; zero switches the noise off.
    pub alpha: f64,
    pub horizon: f64,
    pub coarse_dt: f64,
    pub levels: usize,
    /// Extra bridge refinements between the finest level and the reference.
    pub reference_refinements: usize,
    pub paths: usize,
    pub seed: u64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConvergenceTable {
    pub rows: Vec<(f64, f64)>,
    /// Fitted log-log slope; `None` when every error vanishes.
    pub slope: Option<f64>,
}

fn run_em(cfg: &StrongConfig, path: &WienerPath, model: &NoiseModel) -> Result<SimState> {
    let mut s = cfg.initial.clone();
    for i in 0..path.n_steps() {
        s = step_em(&s, &cfg.params, path.dt(), &path.step_increments(i), model).map_err(|f| f.error)?;
    }
    Ok(s)
}

fn run_reference(cfg: &StrongConfig, path: &WienerPath) -> Result<SimState> {
    let drift = TransformedDrift::new(cfg.params, cfg.alpha, path);
    let mut s = cfg.initial.clone();
    for _ in 0..path.n_steps() {
        s = step_transformed(&s, path.dt(), &drift).map_err(|f| f.error)?;
    }
    let w = *path.values(0).last().expect("nonempty");
    transform_backward(&s, cfg.alpha, w)
}

/// Root-mean-square errors of Euler-Maruyama against a transformed-solver
/// reference on bridge-refined copies of each Brownian path.
pub fn strong_convergence_study(cfg: &StrongConfig) -> Result<ConvergenceTable> {
    if cfg.levels < 4 {
        return Err(IsmError::Config(format!("need at least 4 levels, got {}", cfg.levels)));
    }
    if cfg.paths == 0 {
        return Err(IsmError::Config("need at least one path".into()));
    }
    let n0 = horizon_steps(cfg.horizon, cfg.coarse_dt)?;
    let model = if cfg.alpha == 0.0 { NoiseModel::off() } else { NoiseModel::linear(cfg.alpha) };
    let per_path: Vec<Vec<f64>> = (0..cfg.paths)
        .into_par_iter()
        .map(|p| -> Result<Vec<f64>> {
            let mut path = sample_wiener(cfg.coarse_dt, n0, 1, path_seed(cfg.seed, p))?;
            let mut solutions = Vec::with_capacity(cfg.levels);
            for level in 0..cfg.levels {
                if level > 0 {
                    path = path.refine();
                }
                solutions.push(run_em(cfg, &path, &model)?);
            }
            for _ in 0..cfg.reference_refinements {
                path = path.refine();
            }
            let reference = run_reference(cfg, &path)?;
            Ok(solutions.iter().map(|s| s.l2_distance(&reference)).collect())
        })
        .collect::<Result<_>>()?;
    let rows: Vec<(f64, f64)> = (0..cfg.levels)
        .map(|l| {
            let dt = cfg.coarse_dt / 2f64.powi(l as i32);
            let ms = per_path.iter().map(|e| e[l] * e[l]).sum::<f64>() / cfg.paths as f64;
            (dt, ms.sqrt())
        })
        .collect();
    let slope = if rows.iter().all(|r| r.1 > 0.0) {
        let x: Vec<f64> = rows.iter().map(|r| r.0.ln()).collect();
        let y: Vec<f64> = rows.iter().map(|r| r.1.ln()).collect();
        Some(least_squares(&x, &y)?.0)
    } else {
        None
    };
    Ok(ConvergenceTable { rows, slope })
}

/// Distances `‖sol(J_j u) - sol(J_{2j} u)‖` at the horizon for each `j`.
pub fn mollifier_cauchy_study(
    initial: &SimState,
    params: &Params,
    js: &[u32],
    horizon: f64,
    dt: f64,
    norm: NormSpec,
) -> Result<Vec<(u32, f64)>> {
    if js.len() < 3 {
        return Err(IsmError::Config(format!("need at least 3 mollifier levels, got {}", js.len())));
    }
    if js.windows(2).any(|w| w[1] != 2 * w[0]) {
        return Err(IsmError::Config("mollifier levels must be dyadic".into()));
    }
    let n = horizon_steps(horizon, dt)?;
    let drift = Deterministic { params: *params };
    let solve = |j: u32| -> Result<SimState> {
        let mut s = mollify(initial, j)?;
        for _ in 0..n {
            s = step_rk4(&s, dt, &drift).map_err(|f| f.error)?;
        }
        Ok(s)
    };
    let mut levels: Vec<u32> = js.to_vec();
    levels.push(2 * js[js.len() - 1]);
    let sols: Vec<SimState> = levels.par_iter().map(|&j| solve(j)).collect::<Result<_>>()?;
    Ok(js
        .iter()
        .enumerate()
        .map(|(i, &j)| {
            let mut d = sols[i].clone();
            for (a, b) in d.components_mut().into_iter().zip(sols[i + 1].components()) {
                a.axpy(-1.0, b);
            }
            (j, state_norm(&d, norm))
        })
        .collect())
}

#[cfg(test)]
mod tests;
