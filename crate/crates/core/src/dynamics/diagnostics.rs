use log::warn;

use super::{Params, SimState};
use crate::error::{IsmError, Result};
use crate::field::{Axis, Basis, Geometry, NormSpec, Normed, ScalarField};
use crate::incompressible::curl;

fn wall_integral(basis: Basis, mode: i64, len: f64) -> f64 {
    let k = mode as f64 * std::f64::consts::PI;
    match basis {
        Basis::Cosine if mode == 0 => len,
        Basis::Cosine => 0.0,
        Basis::Sine => len * (1.0 - if mode % 2 == 0 { 1.0 } else { -1.0 }) / k,
        Basis::Fourier => unreachable!("square fields are sine or cosine"),
    }
}

fn z_weighted_integral(basis: Basis, mode: i64, len: f64) -> f64 {
    let k = mode as f64 * std::f64::consts::PI;
    let sign = if mode % 2 == 0 { 1.0 } else { -1.0 };
    match basis {
        Basis::Cosine if mode == 0 => len * len / 2.0,
        Basis::Cosine => len * len * (sign - 1.0) / (k * k),
        Basis::Sine => -len * len * sign / k,
        Basis::Fourier => unreachable!("square fields are sine or cosine"),
    }
}

/// `∫ z f dx dz`. On the square the interpolant is integrated exactly;
/// on the torus grid quadrature is used.
pub fn z_moment(field: &ScalarField) -> f64 {
    let g = field.grid();
    match g.geometry() {
        Geometry::Torus => {
            let nx = g.nx();
            field.values().iter().enumerate().map(|(i, v)| g.z_coord(i / nx) * v).sum::<f64>() * g.cell_area()
        }
        Geometry::FreeSlipSquare => {
            let b = field.basis();
            let s = field.spectrum();
            let ix: Vec<f64> =
                g.mode_indices(Axis::X, b.x).into_iter().map(|m| wall_integral(b.x, m, g.lx())).collect();
            let iz: Vec<f64> =
                g.mode_indices(Axis::Z, b.z).into_iter().map(|m| z_weighted_integral(b.z, m, g.lz())).collect();
            let nx = g.nx();
            let c = s.coeffs();
            let mut sum = 0.0;
            for (pz, wz) in iz.iter().enumerate() {
                for (px, wx) in ix.iter().enumerate() {
                    sum += c[pz * nx + px].re * wx * wz;
                }
            }
            sum
        }
    }
}

/// `∫ ½(|u_S|² + u_T²) - (g/θ₀) z θ_S`.
pub fn energy(state: &SimState, params: &Params) -> f64 {
    let g = state.grid();
    if g.geometry() == Geometry::Torus {
        let mean = state.theta.mean();
        if mean.abs() > 1e-12 * state.theta.max_abs().max(f64::MIN_POSITIVE) {
            warn!("energy on the torus with mean temperature {mean}: the z-weighted term is not periodic");
        }
    }
    let kinetic = 0.5 * (state.u_s.inner(&state.u_s) + state.u_t.inner(&state.u_t));
    kinetic - params.buoyancy() * z_moment(&state.theta)
}

/// `q = s ω - (∂x u_T + f) ∂z θ_S + ∂z u_T ∂x θ_S`.
pub fn potential_vorticity(state: &SimState, params: &Params) -> ScalarField {
    let omega = curl(&state.u_s);
    let ut = state.u_t.spectrum();
    let th = state.theta.spectrum();
    let ut_x = ut.derivative(Axis::X).to_field();
    let ut_z = ut.derivative(Axis::Z).to_field();
    let th_x = th.derivative(Axis::X).to_field();
    let th_z = th.derivative(Axis::Z).to_field();
    let basis = state.grid().basis_for(crate::field::Component::Pressure);
    let values = (0..omega.values().len())
        .map(|i| {
            params.s * omega.values()[i] - (ut_x.values()[i] + params.f) * th_z.values()[i]
                + ut_z.values()[i] * th_x.values()[i]
        })
        .collect();
    ScalarField::from_values(state.grid(), basis, values).expect("sizes match")
}

/// `∫ Φ(q)` by grid quadrature.
pub fn generalized_enstrophy(state: &SimState, params: &Params, phi: impl Fn(f64) -> f64) -> f64 {
    let q = potential_vorticity(state, params);
    q.values().iter().map(|&v| phi(v)).sum::<f64>() * state.grid().cell_area()
}

/// `W^{1,∞}` norms of `u_S`, `u_T`, `θ_S`.
pub fn w1inf_norms(state: &SimState) -> [f64; 3] {
    [state.u_s.norm(NormSpec::W1_INF), state.u_t.norm(NormSpec::W1_INF), state.theta.norm(NormSpec::W1_INF)]
}

/// Product-space norm of the state.
pub fn state_norm(state: &SimState, spec: NormSpec) -> f64 {
    spec.combine(&[state.u_s.norm(spec), state.u_t.norm(spec), state.theta.norm(spec)])
}

impl Normed for SimState {
    fn norm(&self, spec: NormSpec) -> f64 {
        state_norm(self, spec)
    }
}

/// Logarithmic bound of the velocity gradient by vorticity and `H^3`.
pub fn bkm_bound(state: &SimState, c2: f64) -> Result<f64> {
    if !(c2 > 0.0 && c2.is_finite()) {
        return Err(IsmError::Config(format!("bound constant must be positive, got {c2}")));
    }
    let l2 = state.u_s.l2_norm();
    let w_inf = curl(&state.u_s).max_abs();
    if w_inf == 0.0 {
        return Ok(c2 * l2);
    }
    let ratio = state.u_s.norm(NormSpec::H3) / w_inf;
    let log_plus = if ratio > 1.0 { ratio.ln() } else { 0.0 };
    Ok(c2 * l2 + c2 * w_inf * (1.0 + log_plus))
}
