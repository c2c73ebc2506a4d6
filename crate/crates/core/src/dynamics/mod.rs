mod diagnostics;
mod loops;
mod rhs;
mod stepping;

pub use diagnostics::{
    bkm_bound, energy, generalized_enstrophy, potential_vorticity, state_norm, w1inf_norms, z_moment,
};
pub use loops::{advect_loop, circulation, interpolate, MaterialLoop};
pub use rhs::{
    advection_weights_truncated, rhs_core, rhs_deterministic, rhs_truncated, rhs_vorticity, AdvectionWeights,
    RhsOutput, VorticityTendency,
};
pub(crate) use stepping::finish;
pub use stepping::{
    cfl_number, cutoff, lawson_rk4, mollify, step_euler, step_rk4, step_rk4_with_loop, step_vorticity_rk4, Bundle,
    Deterministic, Drift, Truncated,
};

use crate::error::{IsmError, Result};
use crate::field::{Component, Grid, ScalarField, VectorField};
use crate::incompressible::{curl, leray_project, velocity_from_vorticity};

/// Physical constants and noise amplitude.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Params {
    pub f: f64,
    pub g: f64,
    pub theta0: f64,
    pub s: f64,
    pub alpha: f64,
}

impl Default for Params {
    fn default() -> Self {
        Params { f: 1.0, g: 1.0, theta0: 1.0, s: 1.0, alpha: 0.0 }
    }
}

impl Params {
    pub fn new(f: f64, g: f64, theta0: f64, s: f64, alpha: f64) -> Result<Self> {
        let p = Params { f, g, theta0, s, alpha };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        let all = [self.f, self.g, self.theta0, self.s, self.alpha];
        if all.iter().any(|v| !v.is_finite()) {
            return Err(IsmError::Config("parameters must be finite".into()));
        }
        if self.theta0 <= 0.0 {
            return Err(IsmError::Config(format!("theta0 must be positive, got {}", self.theta0)));
        }
        Ok(())
    }

    /// Buoyancy factor `g / theta0`.
    pub fn buoyancy(&self) -> f64 {
        self.g / self.theta0
    }
}

/// Slice velocity, transverse velocity and temperature at time `t`.
#[derive(Clone, Debug, PartialEq)]
pub struct SimState {
    pub t: f64,
    pub u_s: VectorField,
    pub u_t: ScalarField,
    pub theta: ScalarField,
}

impl SimState {
    pub fn zeros(grid: &Grid) -> Self {
        SimState {
            t: 0.0,
            u_s: VectorField::zeros(grid),
            u_t: ScalarField::zeros(grid, grid.basis_for(Component::Transverse)),
            theta: ScalarField::zeros(grid, grid.basis_for(Component::Temperature)),
        }
    }

    /// Builds a state, projecting the slice velocity.
    pub fn new(t: f64, u_s: VectorField, u_t: ScalarField, theta: ScalarField) -> Result<Self> {
        if u_s.grid() != u_t.grid() || u_t.grid() != theta.grid() {
            return Err(IsmError::Config("state components live on different grids".into()));
        }
        Ok(SimState { t, u_s: leray_project(&u_s), u_t, theta })
    }

    pub fn grid(&self) -> &Grid {
        self.u_s.grid()
    }

    pub fn is_finite(&self) -> bool {
        self.u_s.is_finite() && self.u_t.is_finite() && self.theta.is_finite()
    }

    pub fn check_finite(&self) -> Result<()> {
        if self.is_finite() {
            Ok(())
        } else {
            Err(IsmError::Diverged { t: self.t, reason: "non-finite state".into() })
        }
    }

    pub fn components(&self) -> [&ScalarField; 4] {
        [&self.u_s.x, &self.u_s.z, &self.u_t, &self.theta]
    }

    pub fn components_mut(&mut self) -> [&mut ScalarField; 4] {
        [&mut self.u_s.x, &mut self.u_s.z, &mut self.u_t, &mut self.theta]
    }

    pub fn scaled(&self, a: f64) -> SimState {
        let mut out = self.clone();
        out.scale_fields(a);
        out
    }

    pub fn scale_fields(&mut self, a: f64) {
        for c in self.components_mut() {
            c.scale_in_place(a);
        }
    }

    /// Squared L2 norm summed over the three components.
    pub fn l2_squared(&self) -> f64 {
        self.components().iter().map(|c| c.inner(c)).sum()
    }

    /// L2 distance between two states on the same grid.
    pub fn l2_distance(&self, other: &SimState) -> f64 {
        self.components()
            .iter()
            .zip(other.components())
            .map(|(a, b)| {
                let d = a.sub(b);
                d.inner(&d)
            })
            .sum::<f64>()
            .sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.components().iter().fold(0.0, |m, c| m.max(c.max_abs()))
    }
}

/// Time derivative of a [`SimState`].
#[derive(Clone, Debug, PartialEq)]
pub struct Tendency {
    pub du_s: VectorField,
    pub du_t: ScalarField,
    pub dtheta: ScalarField,
}

impl Tendency {
    pub fn zeros(grid: &Grid) -> Self {
        let z = SimState::zeros(grid);
        Tendency { du_s: z.u_s, du_t: z.u_t, dtheta: z.theta }
    }

    pub fn components(&self) -> [&ScalarField; 4] {
        [&self.du_s.x, &self.du_s.z, &self.du_t, &self.dtheta]
    }

    fn components_mut(&mut self) -> [&mut ScalarField; 4] {
        [&mut self.du_s.x, &mut self.du_s.z, &mut self.du_t, &mut self.dtheta]
    }

    pub fn max_abs(&self) -> f64 {
        self.components().iter().fold(0.0, |m, c| m.max(c.max_abs()))
    }
}

/// Vorticity formulation of the state; the slice velocity is implied.
#[derive(Clone, Debug, PartialEq)]
pub struct VorticityState {
    pub t: f64,
    pub omega: ScalarField,
    pub u_t: ScalarField,
    pub theta: ScalarField,
}

impl VorticityState {
    pub fn from_state(state: &SimState) -> Self {
        VorticityState { t: state.t, omega: curl(&state.u_s), u_t: state.u_t.clone(), theta: state.theta.clone() }
    }

    pub fn to_state(&self) -> SimState {
        SimState {
            t: self.t,
            u_s: velocity_from_vorticity(&self.omega).velocity,
            u_t: self.u_t.clone(),
            theta: self.theta.clone(),
        }
    }

    pub fn is_finite(&self) -> bool {
        self.omega.is_finite() && self.u_t.is_finite() && self.theta.is_finite()
    }
}

impl Bundle for SimState {
    type Rate = Tendency;

    fn scale(&mut self, a: f64) {
        self.scale_fields(a);
    }

    fn add_rate(&mut self, a: f64, rate: &Tendency) {
        for (c, r) in self.components_mut().into_iter().zip(rate.components()) {
            c.axpy(a, r);
        }
    }

    fn rate_scale(rate: &mut Tendency, a: f64) {
        for c in rate.components_mut() {
            c.scale_in_place(a);
        }
    }

    fn rate_add(acc: &mut Tendency, a: f64, rate: &Tendency) {
        for (c, r) in acc.components_mut().into_iter().zip(rate.components()) {
            c.axpy(a, r);
        }
    }
}

impl Bundle for VorticityState {
    type Rate = VorticityTendency;

    fn scale(&mut self, a: f64) {
        self.omega.scale_in_place(a);
        self.u_t.scale_in_place(a);
        self.theta.scale_in_place(a);
    }

    fn add_rate(&mut self, a: f64, rate: &VorticityTendency) {
        self.omega.axpy(a, &rate.domega);
        self.u_t.axpy(a, &rate.du_t);
        self.theta.axpy(a, &rate.dtheta);
    }

    fn rate_scale(rate: &mut VorticityTendency, a: f64) {
        rate.domega.scale_in_place(a);
        rate.du_t.scale_in_place(a);
        rate.dtheta.scale_in_place(a);
    }

    fn rate_add(acc: &mut VorticityTendency, a: f64, rate: &VorticityTendency) {
        acc.domega.axpy(a, &rate.domega);
        acc.du_t.axpy(a, &rate.du_t);
        acc.dtheta.axpy(a, &rate.dtheta);
    }
}

#[cfg(test)]
mod tests;
