use super::{Params, SimState};
use crate::error::{IsmError, Result};
use crate::field::{Axis, Basis, Geometry, Grid, ScalarField, VectorField};

/// Closed polygon carried by the slice velocity; the last point connects
/// back to the first.
#[derive(Clone, Debug, PartialEq)]
pub struct MaterialLoop {
    points: Vec<[f64; 2]>,
}

impl MaterialLoop {
    pub const MIN_POINTS: usize = 16;

    pub fn new(points: Vec<[f64; 2]>) -> Result<Self> {
        if points.len() < Self::MIN_POINTS {
            return Err(IsmError::Config(format!(
                "a material loop needs at least {} points, got {}",
                Self::MIN_POINTS,
                points.len()
            )));
        }
        if points.iter().any(|p| !(p[0].is_finite() && p[1].is_finite())) {
            return Err(IsmError::Diagnostic("material loop has non-finite points".into()));
        }
        Ok(MaterialLoop { points })
    }

    pub fn circle(center: [f64; 2], radius: f64, n: usize) -> Result<Self> {
        let pts = (0..n)
            .map(|i| {
                let a = 2.0 * std::f64::consts::PI * i as f64 / n as f64;
                [center[0] + radius * a.cos(), center[1] + radius * a.sin()]
            })
            .collect();
        Self::new(pts)
    }

    pub fn points(&self) -> &[[f64; 2]] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

// lower node index, weight of the upper node, and the reflection sign of
// each of the two nodes
fn locate(grid: &Grid, axis: Axis, basis: Basis, s: f64) -> Result<[(usize, f64); 2]> {
    let n = grid.n(axis);
    let h = grid.spacing(axis);
    let len = grid.extent(axis);
    match grid.geometry() {
        Geometry::Torus => {
            let f = s.rem_euclid(len) / h;
            let i0 = (f.floor() as usize).min(n - 1);
            let t = f - i0 as f64;
            Ok([(i0, 1.0 - t), ((i0 + 1) % n, t)])
        }
        Geometry::FreeSlipSquare => {
            if !(s >= 0.0 && s <= len) {
                return Err(IsmError::Diagnostic(format!("point at {s} left the domain [0, {len}]")));
            }
            let f = s / h - 0.5;
            let i0 = f.floor();
            let t = f - i0;
            let odd = if basis == Basis::Sine { -1.0 } else { 1.0 };
            let i0 = i0 as i64;
            let node = |i: i64| -> (usize, f64) {
                if i < 0 {
                    (0, odd)
                } else if i >= n as i64 {
                    (n - 1, odd)
                } else {
                    (i as usize, 1.0)
                }
            };
            let (a, sa) = node(i0);
            let (b, sb) = node(i0 + 1);
            Ok([(a, sa * (1.0 - t)), (b, sb * t)])
        }
    }
}

/// Bilinear interpolation; on the square, nodes beyond the walls are
/// reflections with the field's parity.
pub fn interpolate(field: &ScalarField, x: f64, z: f64) -> Result<f64> {
    let g = field.grid();
    let bx = locate(g, Axis::X, field.basis().x, x)?;
    let bz = locate(g, Axis::Z, field.basis().z, z)?;
    let v = field.values();
    let nx = g.nx();
    let mut sum = 0.0;
    for (iz, wz) in bz {
        for (ix, wx) in bx {
            sum += wz * wx * v[iz * nx + ix];
        }
    }
    Ok(sum)
}

pub(crate) fn loop_velocity(u: &VectorField, points: &[[f64; 2]]) -> Result<Vec<[f64; 2]>> {
    points.iter().map(|p| Ok([interpolate(&u.x, p[0], p[1])?, interpolate(&u.z, p[0], p[1])?])).collect()
}

/// Moves every loop point by one Runge-Kutta step in the frozen velocity.
pub fn advect_loop(material: &MaterialLoop, u_s: &VectorField, dt: f64) -> Result<MaterialLoop> {
    let pts = material.points();
    let shift = |base: &[[f64; 2]], k: &[[f64; 2]], a: f64| -> Vec<[f64; 2]> {
        base.iter().zip(k).map(|(p, v)| [p[0] + a * v[0], p[1] + a * v[1]]).collect()
    };
    let k1 = loop_velocity(u_s, pts)?;
    let k2 = loop_velocity(u_s, &shift(pts, &k1, dt / 2.0))?;
    let k3 = loop_velocity(u_s, &shift(pts, &k2, dt / 2.0))?;
    let k4 = loop_velocity(u_s, &shift(pts, &k3, dt))?;
    let out = (0..pts.len())
        .map(|i| {
            let mut p = pts[i];
            for c in 0..2 {
                p[c] += dt / 6.0 * (k1[i][c] + 2.0 * k2[i][c] + 2.0 * k3[i][c] + k4[i][c]);
            }
            p
        })
        .collect();
    MaterialLoop::new(out)
}

/// Trapezoidal line integral of `v_S = s u_S - (u_T + f x) ∇θ_S` around the loop.
pub fn circulation(state: &SimState, params: &Params, material: &MaterialLoop) -> Result<f64> {
    let grad = crate::incompressible::gradient(&state.theta);
    let pts = material.points();
    let v_at = |p: &[f64; 2]| -> Result<[f64; 2]> {
        let (x, z) = (p[0], p[1]);
        let ux = interpolate(&state.u_s.x, x, z)?;
        let uz = interpolate(&state.u_s.z, x, z)?;
        let m = interpolate(&state.u_t, x, z)? + params.f * x;
        let tx = interpolate(&grad.x, x, z)?;
        let tz = interpolate(&grad.z, x, z)?;
        Ok([params.s * ux - m * tx, params.s * uz - m * tz])
    };
    let vs: Vec<[f64; 2]> = pts.iter().map(v_at).collect::<Result<_>>()?;
    let n = pts.len();
    let mut sum = 0.0;
    for i in 0..n {
        let j = (i + 1) % n;
        let ds = [pts[j][0] - pts[i][0], pts[j][1] - pts[i][1]];
        sum += 0.5 * ((vs[i][0] + vs[j][0]) * ds[0] + (vs[i][1] + vs[j][1]) * ds[1]);
    }
    Ok(sum)
}
