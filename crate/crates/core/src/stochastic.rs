use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::dynamics::{
    finish, rhs_core, rhs_deterministic, step_rk4, AdvectionWeights, Bundle, Drift, Params, SimState, Tendency,
};
use crate::error::{IsmError, Result, StepFailure};
use crate::field::{NormSpec, Normed, ScalarField, VectorField};
use crate::incompressible::leray_project;

/// Largest `|αW|` for which the exponential transform stays finite.
pub const EXPONENT_GUARD: f64 = 700.0;

/// Seeded Brownian increments on a uniform time grid.
#[derive(Clone, Debug, PartialEq)]
pub struct WienerPath {
    dt: f64,
    n_steps: usize,
    seed: u64,
    level: u32,
    increments: Vec<Vec<f64>>,
}

/// Per-path generator key: the run seed, scrambled, xor the path index.
///
/// Scrambling keeps ensembles from nearby run seeds disjoint.
pub fn path_seed(seed: u64, path: usize) -> u64 {
    let mut z = seed.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    (z ^ (z >> 31)) ^ path as u64
}

fn rng_for(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

impl WienerPath {
    pub fn sample(dt: f64, n_steps: usize, modes: usize, seed: u64) -> Result<Self> {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(IsmError::Config(format!("path step must be positive, got {dt}")));
        }
        if modes == 0 {
            return Err(IsmError::Config("a path needs at least one noise mode".into()));
        }
        let mut rng = rng_for(seed);
        let sd = dt.sqrt();
        let increments = (0..modes)
            .map(|_| {
                (0..n_steps)
                    .map(|_| {
                        let z: f64 = StandardNormal.sample(&mut rng);
                        sd * z
                    })
                    .collect::<Vec<f64>>()
            })
            .collect();
        Ok(WienerPath { dt, n_steps, seed, level: 0, increments })
    }

    /// Halves the step by Brownian-bridge splitting; the coarse increments
    /// are sums of consecutive fine ones.
    pub fn refine(&self) -> WienerPath {
        let level = self.level + 1;
        let mut rng = rng_for(self.seed ^ (0x9E37_79B9_7F4A_7C15u64.wrapping_mul(level as u64)));
        let half = self.dt.sqrt() / 2.0;
        let increments = self
            .increments
            .iter()
            .map(|inc| {
                let mut fine = Vec::with_capacity(2 * inc.len());
                for &dw in inc {
                    let z: f64 = StandardNormal.sample(&mut rng);
                    let first = dw / 2.0 + half * z;
                    fine.push(first);
                    fine.push(dw - first);
                }
                fine
            })
            .collect();
        WienerPath { dt: self.dt / 2.0, n_steps: 2 * self.n_steps, seed: self.seed, level, increments }
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn n_steps(&self) -> usize {
        self.n_steps
    }

    pub fn modes(&self) -> usize {
        self.increments.len()
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn increments(&self, mode: usize) -> &[f64] {
        &self.increments[mode]
    }

    /// Increments of every mode over step `i`.
    pub fn step_increments(&self, i: usize) -> Vec<f64> {
        self.increments.iter().map(|inc| inc[i]).collect()
    }

    /// Cumulative values `W(t_i)`, `i = 0..=n_steps`, starting from zero.
    pub fn values(&self, mode: usize) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.n_steps + 1);
        let mut w = 0.0;
        out.push(w);
        for dw in &self.increments[mode] {
            w += dw;
            out.push(w);
        }
        out
    }

    pub fn times(&self) -> Vec<f64> {
        (0..=self.n_steps).map(|i| i as f64 * self.dt).collect()
    }
}

/// Path values with linear interpolation between grid times.
#[derive(Clone, Debug)]
pub struct PathInterpolant {
    dt: f64,
    values: Vec<f64>,
}

impl PathInterpolant {
    pub fn new(path: &WienerPath, mode: usize) -> Self {
        PathInterpolant { dt: path.dt, values: path.values(mode) }
    }

    pub fn at(&self, t: f64) -> f64 {
        let mut f = (t / self.dt).max(0.0);
        // stage times built by repeated addition land a few ulps off the nodes
        if (f - f.round()).abs() < 1e-9 * f.max(1.0) {
            f = f.round();
        }
        let i = f as usize;
        if i + 1 >= self.values.len() {
            return *self.values.last().expect("nonempty");
        }
        let w = f - i as f64;
        if w == 0.0 {
            self.values[i]
        } else {
            (1.0 - w) * self.values[i] + w * self.values[i + 1]
        }
    }
}

pub fn sample_wiener(dt: f64, n_steps: usize, modes: usize, seed: u64) -> Result<WienerPath> {
    WienerPath::sample(dt, n_steps, modes, seed)
}

/// Smooth pointwise gain applied to a state component.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Gain {
    Constant(f64),
    Linear(f64),
    /// `a tanh(v)`
    Saturating(f64),
}

impl Gain {
    pub fn apply(&self, v: f64) -> f64 {
        match *self {
            Gain::Constant(c) => c,
            Gain::Linear(a) => a * v,
            Gain::Saturating(a) => a * v.tanh(),
        }
    }

    /// Growth constant: `|gain(v)| <= c (1 + |v|)`.
    pub fn growth(&self) -> f64 {
        match *self {
            Gain::Constant(c) => c.abs(),
            Gain::Linear(a) | Gain::Saturating(a) => a.abs(),
        }
    }
}

/// One noise mode: per-component gains times fixed spatial shapes, in the
/// order `u_S.x, u_S.z, u_T, θ_S`.
#[derive(Clone, Debug, PartialEq)]
pub struct NemytskiiMode {
    pub gains: [Gain; 4],
    pub shapes: [ScalarField; 4],
}

#[derive(Clone, Debug, PartialEq)]
pub enum NoiseKind {
    Off,
    Linear { alpha: f64 },
    Nemytskii { modes: Vec<NemytskiiMode> },
}

/// Noise model with its declared growth modulus `κ(r) = a + b r`.
#[derive(Clone, Debug, PartialEq)]
pub struct NoiseModel {
    pub kind: NoiseKind,
    pub kappa: (f64, f64),
}

impl NoiseModel {
    pub fn off() -> Self {
        NoiseModel { kind: NoiseKind::Off, kappa: (0.0, 0.0) }
    }

    pub fn linear(alpha: f64) -> Self {
        NoiseModel { kind: NoiseKind::Linear { alpha }, kappa: (alpha.abs(), 0.0) }
    }

    pub fn nemytskii(modes: Vec<NemytskiiMode>) -> Result<Self> {
        if modes.is_empty() {
            return Err(IsmError::Config("Nemytskii noise needs at least one mode".into()));
        }
        let mut growth: f64 = 0.0;
        for m in &modes {
            let grid = m.shapes[0].grid();
            if m.shapes.iter().any(|s| s.grid() != grid || !s.is_finite()) {
                return Err(IsmError::Config("noise shapes must be finite and share one grid".into()));
            }
            let amp = m.shapes.iter().map(|s| s.max_abs()).fold(0.0, f64::max);
            let g = m.gains.iter().map(Gain::growth).fold(0.0, f64::max);
            growth = growth.max(g * amp * grid.area().sqrt());
        }
        Ok(NoiseModel { kind: NoiseKind::Nemytskii { modes }, kappa: (growth, 0.0) })
    }

    pub fn modes(&self) -> usize {
        match &self.kind {
            NoiseKind::Off => 0,
            NoiseKind::Linear { .. } => 1,
            NoiseKind::Nemytskii { modes } => modes.len(),
        }
    }

    /// Empirical growth check `Σ_j ‖σ_j‖ <= κ(‖state‖_∞) (1 + Σ ‖component‖)`
    /// with L2 norms.
    pub fn check_growth(&self, state: &SimState) -> Result<bool> {
        let sig = noise_eval(self, state)?;
        let lhs: f64 = sig.iter().map(|t| t.du_s.l2_norm() + t.du_t.l2_norm() + t.dtheta.l2_norm()).sum();
        let norms = state.u_s.l2_norm() + state.u_t.l2_norm() + state.theta.l2_norm();
        let kappa = self.kappa.0 + self.kappa.1 * state.max_abs();
        Ok(lhs <= kappa * (1.0 + norms) * (1.0 + 1e-12) * (self.modes().max(1) as f64))
    }
}

/// Diffusion coefficients per noise mode; the slice channel is projected.
pub fn noise_eval(model: &NoiseModel, state: &SimState) -> Result<Vec<Tendency>> {
    state.check_finite()?;
    match &model.kind {
        NoiseKind::Off => Ok(Vec::new()),
        NoiseKind::Linear { alpha } => Ok(vec![Tendency {
            du_s: state.u_s.scaled(*alpha),
            du_t: state.u_t.scaled(*alpha),
            dtheta: state.theta.scaled(*alpha),
        }]),
        NoiseKind::Nemytskii { modes } => Ok(modes
            .iter()
            .map(|m| {
                let comps = state.components();
                let ch = |i: usize| {
                    let v = comps[i].zip_map(&m.shapes[i], |u, s| m.gains[i].apply(u) * s);
                    v.with_basis(comps[i].basis())
                };
                let du_s = leray_project(&VectorField { x: ch(0), z: ch(1) });
                Tendency { du_s, du_t: ch(2), dtheta: ch(3) }
            })
            .collect()),
    }
}

/// Euler-Maruyama step: drift times `dt` plus each diffusion times its increment.
pub fn step_em(
    state: &SimState,
    params: &Params,
    dt: f64,
    increments: &[f64],
    model: &NoiseModel,
) -> std::result::Result<SimState, StepFailure<SimState>> {
    let fail = |error| StepFailure { last_valid: state.clone(), error };
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(fail(IsmError::Config(format!("time step must be positive, got {dt}"))));
    }
    if increments.len() < model.modes() {
        return Err(fail(IsmError::Config(format!(
            "noise has {} modes but {} increments were given",
            model.modes(),
            increments.len()
        ))));
    }
    let k = rhs_deterministic(state, params).map_err(fail)?;
    let mut next = state.clone();
    next.add_rate(dt, &k);
    if !matches!(model.kind, NoiseKind::Off) {
        for (sigma, dw) in noise_eval(model, state).map_err(fail)?.iter().zip(increments) {
            next.add_rate(*dw, sigma);
        }
    }
    finish(state, next, dt)
}

fn transform_factor(alpha: f64, w: f64, t: f64) -> Result<f64> {
    let e = alpha * w;
    if !(e.abs() <= EXPONENT_GUARD) {
        return Err(IsmError::Diverged { t, reason: format!("|alpha W| = {} exceeds {EXPONENT_GUARD}", e.abs()) });
    }
    Ok(e.exp())
}

/// `ũ = e^{-αW} u` for all three components.
pub fn transform_forward(state: &SimState, alpha: f64, w: f64) -> Result<SimState> {
    let f = transform_factor(alpha, w, state.t)?;
    Ok(state.scaled(1.0 / f))
}

/// `u = e^{αW} ũ`.
pub fn transform_backward(state: &SimState, alpha: f64, w: f64) -> Result<SimState> {
    let f = transform_factor(alpha, w, state.t)?;
    Ok(state.scaled(f))
}

/// Drift of the damped random system for `ũ`: decay `α²/2`, advection
/// weighted by `e^{αW}`, the `z s` source by `e^{-αW}`.
#[derive(Clone, Debug)]
pub struct TransformedDrift {
    pub params: Params,
    pub alpha: f64,
    path: PathInterpolant,
}

impl TransformedDrift {
    pub fn new(params: Params, alpha: f64, path: &WienerPath) -> Self {
        TransformedDrift { params, alpha, path: PathInterpolant::new(path, 0) }
    }

    pub fn w_at(&self, t: f64) -> f64 {
        self.path.at(t)
    }
}

impl Drift for TransformedDrift {
    fn tendency(&self, t: f64, state: &SimState) -> Result<Tendency> {
        let w = self.path.at(t);
        let up = transform_factor(self.alpha, w, t)?;
        let down = transform_factor(-self.alpha, w, t)?;
        Ok(rhs_core(state, &self.params, |_| AdvectionWeights::uniform(up), down)?.tendency)
    }

    fn damping(&self) -> f64 {
        0.5 * self.alpha * self.alpha
    }
}

pub fn step_transformed(
    state: &SimState,
    dt: f64,
    drift: &TransformedDrift,
) -> std::result::Result<SimState, StepFailure<SimState>> {
    step_rk4(state, dt, drift)
}

/// `Λ(t) = exp(αW_t - α²t/32)` on the path grid.
pub fn lambda_process(path: &WienerPath, alpha: f64) -> Result<Vec<f64>> {
    if path.modes() != 1 {
        return Err(IsmError::Config(format!("lambda process needs a single-mode path, got {}", path.modes())));
    }
    Ok(path.values(0).iter().zip(path.times()).map(|(w, t)| lambda_value(alpha, *w, t)).collect())
}

pub fn lambda_value(alpha: f64, w: f64, t: f64) -> f64 {
    (alpha * w - alpha * alpha * t / 32.0).exp()
}

/// What a monitor watches and the threshold it fires at.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum StoppingKind {
    /// `Z^{1,∞}` norm of the state reaches `R`.
    NormThreshold { radius: f64 },
    /// `1 + Σ‖·‖_{W^{k,p}}` reaches `|α| / (8 C̃)`.
    AmplitudeThreshold { alpha: f64, c_tilde: f64 },
    /// `Λ(t)` reaches `r`.
    GbmThreshold { r: f64 },
}

impl StoppingKind {
    pub fn threshold(&self) -> f64 {
        match *self {
            StoppingKind::NormThreshold { radius } => radius,
            StoppingKind::AmplitudeThreshold { alpha, c_tilde } => alpha.abs() / (8.0 * c_tilde),
            StoppingKind::GbmThreshold { r } => r,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            StoppingKind::NormThreshold { .. } => "norm",
            StoppingKind::AmplitudeThreshold { .. } => "amplitude",
            StoppingKind::GbmThreshold { .. } => "gbm",
        }
    }
}

/// First-hitting data of one monitor. When not triggered, `trigger_value`
/// is the largest value observed.
#[derive(Clone, Debug, PartialEq)]
pub struct StoppingRecord {
    pub kind: StoppingKind,
    pub threshold: f64,
    pub triggered: bool,
    pub trigger_time: Option<f64>,
    pub trigger_value: f64,
}

/// Incremental first-crossing monitor.
#[derive(Clone, Debug)]
pub struct Monitor {
    kind: StoppingKind,
    threshold: f64,
    hit: Option<(f64, f64)>,
    max_seen: f64,
}

impl Monitor {
    pub fn new(kind: StoppingKind) -> Self {
        Monitor { kind, threshold: kind.threshold(), hit: None, max_seen: f64::NEG_INFINITY }
    }

    /// Feeds one sample; returns true once the monitor has fired.
    pub fn observe(&mut self, t: f64, value: f64) -> bool {
        if self.hit.is_none() {
            if value > self.max_seen {
                self.max_seen = value;
            }
            if value >= self.threshold {
                self.hit = Some((t, value));
            }
        }
        self.hit.is_some()
    }

    pub fn fired(&self) -> bool {
        self.hit.is_some()
    }

    pub fn record(&self) -> StoppingRecord {
        match self.hit {
            Some((t, v)) => StoppingRecord {
                kind: self.kind,
                threshold: self.threshold,
                triggered: true,
                trigger_time: Some(t),
                trigger_value: v,
            },
            None => StoppingRecord {
                kind: self.kind,
                threshold: self.threshold,
                triggered: false,
                trigger_time: None,
                trigger_value: self.max_seen,
            },
        }
    }
}

/// Scans a recorded series of monitored values.
pub fn stopping_monitor(times: &[f64], values: &[f64], kind: StoppingKind) -> Result<StoppingRecord> {
    if times.len() != values.len() {
        return Err(IsmError::Config(format!("{} times but {} values", times.len(), values.len())));
    }
    let mut m = Monitor::new(kind);
    for (t, v) in times.iter().zip(values) {
        if m.observe(*t, *v) {
            break;
        }
    }
    Ok(m.record())
}

/// Quantity watched by the amplitude monitor: `1 + Σ‖·‖` in the given norm.
pub fn amplitude_quantity(state: &SimState, spec: NormSpec) -> f64 {
    1.0 + state.u_s.norm(spec) + state.u_t.norm(spec) + state.theta.norm(spec)
}
