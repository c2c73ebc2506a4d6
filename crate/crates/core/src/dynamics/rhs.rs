use super::stepping::cutoff;
use super::{Params, SimState, Tendency, VorticityState};
use crate::error::{IsmError, Result};
use crate::field::{Axis, ScalarField, Spectrum};
use crate::incompressible::LerayWorkspace;

/// Multipliers applied to the three advection terms.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AdvectionWeights {
    pub us: f64,
    pub ut: f64,
    pub th: f64,
}

impl AdvectionWeights {
    pub const ONE: AdvectionWeights = AdvectionWeights { us: 1.0, ut: 1.0, th: 1.0 };
    pub const ZERO: AdvectionWeights = AdvectionWeights { us: 0.0, ut: 0.0, th: 0.0 };

    pub fn uniform(w: f64) -> Self {
        AdvectionWeights { us: w, ut: w, th: w }
    }
}

/// Tendency together with by-products of its evaluation.
#[derive(Clone, Debug)]
pub struct RhsOutput {
    pub tendency: Tendency,
    /// `W^{1,∞}` norms of `u_S`, `u_T`, `θ_S` at the evaluation point.
    pub w1inf: [f64; 3],
    pub weights: AdvectionWeights,
}

/// Tendencies of the vorticity formulation.
#[derive(Clone, Debug, PartialEq)]
pub struct VorticityTendency {
    pub domega: ScalarField,
    pub du_t: ScalarField,
    pub dtheta: ScalarField,
}

fn dot_grad(ux: &[f64], uz: &[f64], dx: &[f64], dz: &[f64]) -> Vec<f64> {
    ux.iter().zip(uz).zip(dx.iter().zip(dz)).map(|((a, b), (c, d))| a * c + b * d).collect()
}

fn sup(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

fn sup2(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0, |m, (x, y)| m.max(x.hypot(*y)))
}

fn dealiased(field: ScalarField) -> ScalarField {
    let mut s = field.spectrum();
    s.dealias();
    s.to_field()
}

/// Shared right-hand side.
///
/// Advection terms are multiplied by the weights returned from `weights`
/// (which sees the `W^{1,∞}` norms of the three components) and the
/// `z s` source of the transverse equation by `source`.
pub fn rhs_core(
    state: &SimState,
    params: &Params,
    weights: impl FnOnce([f64; 3]) -> AdvectionWeights,
    source: f64,
) -> Result<RhsOutput> {
    state.check_finite()?;
    let grid = state.grid();
    let ws = LerayWorkspace::new(grid);
    let d = |f: &ScalarField| {
        let s = f.spectrum();
        (s.derivative(Axis::X).to_field(), s.derivative(Axis::Z).to_field())
    };
    let (ux_x, ux_z) = d(&state.u_s.x);
    let (uz_x, uz_z) = d(&state.u_s.z);
    let (ut_x, ut_z) = d(&state.u_t);
    let (th_x, th_z) = d(&state.theta);
    let (ux, uz) = (state.u_s.x.values(), state.u_s.z.values());
    let (ut, th) = (state.u_t.values(), state.theta.values());

    let norms = [
        sup2(ux, uz) + sup2(ux_x.values(), uz_x.values()) + sup2(ux_z.values(), uz_z.values()),
        sup(ut) + sup(ut_x.values()) + sup(ut_z.values()),
        sup(th) + sup(th_x.values()) + sup(th_z.values()),
    ];
    let w = weights(norms);

    let adv_x = dot_grad(ux, uz, ux_x.values(), ux_z.values());
    let adv_z = dot_grad(ux, uz, uz_x.values(), uz_z.values());
    let adv_t = dot_grad(ux, uz, ut_x.values(), ut_z.values());
    let adv_th = dot_grad(ux, uz, th_x.values(), th_z.values());

    let (f, b, s) = (params.f, params.buoyancy(), params.s);
    let nx = grid.nx();
    let z_of = |i: usize| grid.z_coord(i / nx);
    let du_x: Vec<f64> = adv_x.iter().zip(ut).map(|(a, t)| -w.us * a + f * t).collect();
    let du_z: Vec<f64> = adv_z.iter().zip(th).map(|(a, t)| -w.us * a + b * t).collect();
    let du_t: Vec<f64> =
        adv_t.iter().zip(ux).enumerate().map(|(i, (a, u))| -w.ut * a - f * u - b * z_of(i) * s * source).collect();
    let dth: Vec<f64> = adv_th.iter().zip(ut).map(|(a, t)| -w.th * a - s * t).collect();

    let to_spec = |v: Vec<f64>, like: &ScalarField| -> Result<Spectrum> {
        let mut sp = ScalarField::from_values(grid, like.basis(), v)?.spectrum();
        sp.dealias();
        Ok(sp)
    };
    let mut sx = to_spec(du_x, &state.u_s.x)?;
    let mut sz = to_spec(du_z, &state.u_s.z)?;
    ws.project_spectra(&mut sx, &mut sz);
    let du_s = crate::field::VectorField { x: sx.to_field(), z: sz.to_field() };
    let du_t = to_spec(du_t, &state.u_t)?.to_field();
    let dtheta = to_spec(dth, &state.theta)?.to_field();
    Ok(RhsOutput { tendency: Tendency { du_s, du_t, dtheta }, w1inf: norms, weights: w })
}

pub fn rhs_deterministic(state: &SimState, params: &Params) -> Result<Tendency> {
    Ok(rhs_core(state, params, |_| AdvectionWeights::ONE, 1.0)?.tendency)
}

/// Cut-off weights from the component norms: the slice velocity alone
/// for its own advection, paired with `u_T` or `θ_S` for the scalars.
pub fn advection_weights_truncated(norms: [f64; 3], radius: f64) -> Result<AdvectionWeights> {
    let [us, ut, th] = norms;
    Ok(AdvectionWeights { us: cutoff(us, radius)?, ut: cutoff(us.max(ut), radius)?, th: cutoff(us.max(th), radius)? })
}

pub fn rhs_truncated(state: &SimState, params: &Params, radius: f64) -> Result<Tendency> {
    if !(radius > 0.0) {
        return Err(IsmError::Config(format!("cut-off radius must be positive, got {radius}")));
    }
    let out =
        rhs_core(state, params, |n| advection_weights_truncated(n, radius).unwrap_or(AdvectionWeights::ZERO), 1.0)?;
    Ok(out.tendency)
}

pub fn rhs_vorticity(state: &VorticityState, params: &Params) -> Result<VorticityTendency> {
    if !state.is_finite() {
        return Err(IsmError::Diverged { t: state.t, reason: "non-finite state".into() });
    }
    let grid = state.omega.grid();
    let ws = LerayWorkspace::new(grid);
    let u = ws.velocity_from_vorticity(&state.omega).velocity;
    let d = |f: &ScalarField| {
        let s = f.spectrum();
        (s.derivative(Axis::X).to_field(), s.derivative(Axis::Z).to_field())
    };
    let (w_x, w_z) = d(&state.omega);
    let (ut_x, ut_z) = d(&state.u_t);
    let (th_x, th_z) = d(&state.theta);
    let (ux, uz) = (u.x.values(), u.z.values());
    let (f, b, s) = (params.f, params.buoyancy(), params.s);
    let nx = grid.nx();

    let adv_w = dot_grad(ux, uz, w_x.values(), w_z.values());
    let dw: Vec<f64> =
        adv_w.iter().zip(ut_z.values().iter().zip(th_x.values())).map(|(a, (tz, hx))| -a - f * tz + b * hx).collect();
    let adv_t = dot_grad(ux, uz, ut_x.values(), ut_z.values());
    let dut: Vec<f64> =
        adv_t.iter().zip(ux).enumerate().map(|(i, (a, u))| -a - f * u - b * grid.z_coord(i / nx) * s).collect();
    let adv_th = dot_grad(ux, uz, th_x.values(), th_z.values());
    let dth: Vec<f64> = adv_th.iter().zip(state.u_t.values()).map(|(a, t)| -a - s * t).collect();
    Ok(VorticityTendency {
        domega: dealiased(ScalarField::from_values(grid, state.omega.basis(), dw)?),
        du_t: dealiased(ScalarField::from_values(grid, state.u_t.basis(), dut)?),
        dtheta: dealiased(ScalarField::from_values(grid, state.theta.basis(), dth)?),
    })
}
