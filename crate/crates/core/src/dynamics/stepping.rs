use super::loops::{loop_velocity, MaterialLoop};
use super::rhs::{advection_weights_truncated, rhs_core, rhs_vorticity, AdvectionWeights};
use super::{Params, SimState, Tendency, VorticityState};
use crate::error::{IsmError, Result, StepFailure};
use crate::field::VectorField;
use crate::incompressible::leray_project;

/// A state that can be combined linearly with its rates.
pub trait Bundle: Clone {
    type Rate: Clone;

    fn scale(&mut self, a: f64);
    /// `self += a * rate`
    fn add_rate(&mut self, a: f64, rate: &Self::Rate);
    fn rate_scale(rate: &mut Self::Rate, a: f64);
    /// `acc += a * rate`
    fn rate_add(acc: &mut Self::Rate, a: f64, rate: &Self::Rate);
}

/// Four-stage Runge-Kutta step of `du/dt = -λu + F(t, u)` with the linear
/// decay integrated exactly (integrating-factor form). With `λ = 0` this is
/// the classical scheme.
pub fn lawson_rk4<S: Bundle>(
    u: &S,
    t: f64,
    h: f64,
    lambda: f64,
    mut rhs: impl FnMut(f64, &S) -> Result<S::Rate>,
) -> Result<S> {
    let e = (-lambda * h).exp();
    let eh = (-lambda * h / 2.0).exp();

    let k1 = rhs(t, u)?;
    let mut y = u.clone();
    y.add_rate(h / 2.0, &k1);
    y.scale(eh);
    let k2 = rhs(t + h / 2.0, &y)?;

    let mut y = u.clone();
    y.scale(eh);
    y.add_rate(h / 2.0, &k2);
    let k3 = rhs(t + h / 2.0, &y)?;

    let mut y = u.clone();
    y.scale(e);
    y.add_rate(h * eh, &k3);
    let k4 = rhs(t + h, &y)?;

    let mut acc = k1;
    S::rate_scale(&mut acc, e);
    S::rate_add(&mut acc, 2.0 * eh, &k2);
    S::rate_add(&mut acc, 2.0 * eh, &k3);
    S::rate_add(&mut acc, 1.0, &k4);
    let mut out = u.clone();
    out.scale(e);
    out.add_rate(h / 6.0, &acc);
    Ok(out)
}

/// Drift of the primitive-variable system.
pub trait Drift {
    fn tendency(&self, t: f64, state: &SimState) -> Result<Tendency>;

    /// Rate of the exactly integrated linear decay.
    fn damping(&self) -> f64 {
        0.0
    }
}

/// Plain deterministic dynamics.
#[derive(Clone, Copy, Debug)]
pub struct Deterministic {
    pub params: Params,
}

impl Drift for Deterministic {
    fn tendency(&self, _t: f64, state: &SimState) -> Result<Tendency> {
        Ok(rhs_core(state, &self.params, |_| AdvectionWeights::ONE, 1.0)?.tendency)
    }
}

/// Dynamics with advection switched off smoothly above the radius.
#[derive(Clone, Copy, Debug)]
pub struct Truncated {
    pub params: Params,
    pub radius: f64,
}

impl Truncated {
    pub fn new(params: Params, radius: f64) -> Result<Self> {
        cutoff(0.0, radius)?;
        Ok(Truncated { params, radius })
    }

    /// Weights the truncated dynamics would apply at this state.
    pub fn weights(&self, state: &SimState) -> Result<AdvectionWeights> {
        advection_weights_truncated(super::diagnostics::w1inf_norms(state), self.radius)
    }
}

impl Drift for Truncated {
    fn tendency(&self, _t: f64, state: &SimState) -> Result<Tendency> {
        let r = self.radius;
        let out = rhs_core(
            state,
            &self.params,
            |n| advection_weights_truncated(n, r).unwrap_or(AdvectionWeights::ZERO),
            1.0,
        )?;
        Ok(out.tendency)
    }
}

pub(crate) fn finish(
    prev: &SimState,
    mut next: SimState,
    dt: f64,
) -> std::result::Result<SimState, StepFailure<SimState>> {
    next.t = prev.t + dt;
    next.u_s = leray_project(&next.u_s);
    if next.is_finite() {
        Ok(next)
    } else {
        Err(StepFailure {
            last_valid: prev.clone(),
            error: IsmError::Diverged { t: next.t, reason: "non-finite values after step".into() },
        })
    }
}

fn check_dt(state: &SimState, dt: f64) -> std::result::Result<(), StepFailure<SimState>> {
    if dt > 0.0 && dt.is_finite() {
        Ok(())
    } else {
        Err(StepFailure {
            last_valid: state.clone(),
            error: IsmError::Config(format!("time step must be positive, got {dt}")),
        })
    }
}

/// One Runge-Kutta step followed by re-projection of `u_S`.
pub fn step_rk4(state: &SimState, dt: f64, drift: &dyn Drift) -> std::result::Result<SimState, StepFailure<SimState>> {
    check_dt(state, dt)?;
    let next = lawson_rk4(state, state.t, dt, drift.damping(), |t, s| drift.tendency(t, s))
        .map_err(|error| StepFailure { last_valid: state.clone(), error })?;
    finish(state, next, dt)
}

/// Explicit Euler step, re-projected.
pub fn step_euler(
    state: &SimState,
    dt: f64,
    drift: &dyn Drift,
) -> std::result::Result<SimState, StepFailure<SimState>> {
    check_dt(state, dt)?;
    let k = drift.tendency(state.t, state).map_err(|error| StepFailure { last_valid: state.clone(), error })?;
    let mut next = state.clone();
    next.add_rate(dt, &k);
    finish(state, next, dt)
}

#[derive(Clone, Debug)]
struct Coupled {
    state: SimState,
    points: Vec<[f64; 2]>,
}

impl Bundle for Coupled {
    type Rate = (Tendency, Vec<[f64; 2]>);

    fn scale(&mut self, a: f64) {
        // loop positions carry no decay
        self.state.scale(a);
    }

    fn add_rate(&mut self, a: f64, rate: &Self::Rate) {
        self.state.add_rate(a, &rate.0);
        for (p, v) in self.points.iter_mut().zip(&rate.1) {
            p[0] += a * v[0];
            p[1] += a * v[1];
        }
    }

    fn rate_scale(rate: &mut Self::Rate, a: f64) {
        SimState::rate_scale(&mut rate.0, a);
        for v in &mut rate.1 {
            v[0] *= a;
            v[1] *= a;
        }
    }

    fn rate_add(acc: &mut Self::Rate, a: f64, rate: &Self::Rate) {
        SimState::rate_add(&mut acc.0, a, &rate.0);
        for (p, v) in acc.1.iter_mut().zip(&rate.1) {
            p[0] += a * v[0];
            p[1] += a * v[1];
        }
    }
}

/// Advances the state and a material loop carried by `u_S` with shared stages.
pub fn step_rk4_with_loop(
    state: &SimState,
    material: &MaterialLoop,
    dt: f64,
    drift: &dyn Drift,
) -> std::result::Result<(SimState, MaterialLoop), StepFailure<SimState>> {
    check_dt(state, dt)?;
    let start = Coupled { state: state.clone(), points: material.points().to_vec() };
    let fail = |error| StepFailure { last_valid: state.clone(), error };
    let next = lawson_rk4(&start, state.t, dt, 0.0, |t, c: &Coupled| {
        let k = drift.tendency(t, &c.state)?;
        let v = loop_velocity(&c.state.u_s, &c.points)?;
        Ok((k, v))
    })
    .map_err(fail)?;
    let advanced = finish(state, next.state, dt)?;
    let material = MaterialLoop::new(next.points).map_err(fail)?;
    Ok((advanced, material))
}

/// Runge-Kutta step of the vorticity formulation.
pub fn step_vorticity_rk4(
    state: &VorticityState,
    params: &Params,
    dt: f64,
) -> std::result::Result<VorticityState, StepFailure<VorticityState>> {
    let fail = |error| StepFailure { last_valid: state.clone(), error };
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(fail(IsmError::Config(format!("time step must be positive, got {dt}"))));
    }
    let mut next = lawson_rk4(state, state.t, dt, 0.0, |_, s| rhs_vorticity(s, params)).map_err(fail)?;
    next.t = state.t + dt;
    if next.is_finite() {
        Ok(next)
    } else {
        Err(fail(IsmError::Diverged { t: next.t, reason: "non-finite values after step".into() }))
    }
}

fn blend_bump(t: f64) -> f64 {
    if t > 0.0 {
        (-1.0 / t).exp()
    } else {
        0.0
    }
}

/// Smooth non-increasing cut-off: 1 on `[0, R]`, 0 on `[2R, ∞)`.
pub fn cutoff(x: f64, radius: f64) -> Result<f64> {
    if !(radius > 0.0 && radius.is_finite()) {
        return Err(IsmError::Config(format!("cut-off radius must be positive, got {radius}")));
    }
    let y = x / radius;
    if y <= 1.0 {
        return Ok(1.0);
    }
    if y >= 2.0 {
        return Ok(0.0);
    }
    let a = blend_bump(2.0 - y);
    let b = blend_bump(y - 1.0);
    Ok(a / (a + b))
}

/// Friedrichs smoothing: every mode scaled by `exp(-|k|^2 / j^2)`.
pub fn mollify(state: &SimState, j: u32) -> Result<SimState> {
    if j == 0 {
        return Err(IsmError::Config("mollifier index must be at least 1".into()));
    }
    let j2 = (j as f64) * (j as f64);
    let smooth = |f: &crate::field::ScalarField| {
        let mut s = f.spectrum();
        s.scale_modes(|kx, kz| (-(kx * kx + kz * kz) / j2).exp());
        s.to_field()
    };
    let u_s = VectorField { x: smooth(&state.u_s.x), z: smooth(&state.u_s.z) };
    Ok(SimState { t: state.t, u_s: leray_project(&u_s), u_t: smooth(&state.u_t), theta: smooth(&state.theta) })
}

/// `dt * max|u_S| / min(dx, dz)`; values above 0.5 are advisory violations.
pub fn cfl_number(state: &SimState, dt: f64) -> f64 {
    let g = state.grid();
    dt * state.u_s.max_magnitude() / g.dx().min(g.dz())
}
