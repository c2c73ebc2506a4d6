use log::warn;
use rustfft::num_complex::Complex64;

use crate::field::{Axis, Component, Geometry, Grid, ScalarField, Spectrum, VectorField};

/// Wavenumber tables for projection and Poisson solves on one grid.
#[derive(Clone, Debug)]
pub struct LerayWorkspace {
    grid: Grid,
    kx: Vec<f64>,
    kz: Vec<f64>,
}

/// Velocity recovered from vorticity, with a flag for a discarded mean.
#[derive(Clone, Debug)]
pub struct Recovered {
    pub velocity: VectorField,
    pub mean_dropped: bool,
}

impl LerayWorkspace {
    pub fn new(grid: &Grid) -> Self {
        let (kx, kz) = match grid.geometry() {
            Geometry::Torus => (
                grid.derivative_wavenumbers(Axis::X, crate::field::Basis::Fourier),
                grid.derivative_wavenumbers(Axis::Z, crate::field::Basis::Fourier),
            ),
            // index m holds the wavenumber of mode m, m = 0..n
            Geometry::FreeSlipSquare => (
                (0..=grid.nx()).map(|m| m as f64 * std::f64::consts::PI / grid.lx()).collect(),
                (0..=grid.nz()).map(|m| m as f64 * std::f64::consts::PI / grid.lz()).collect(),
            ),
        };
        LerayWorkspace { grid: grid.clone(), kx, kz }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    /// Inverse Laplacian multiplier `-1/|k|^2`, zero at the mean mode.
    pub fn inverse_laplacian(&self, mx: usize, mz: usize) -> f64 {
        let k2 = self.kx[mx] * self.kx[mx] + self.kz[mz] * self.kz[mz];
        if k2 == 0.0 {
            0.0
        } else {
            -1.0 / k2
        }
    }

    pub fn project(&self, v: &VectorField) -> VectorField {
        let grid = &self.grid;
        let mut a = v.x.clone().with_basis(grid.basis_for(Component::VelocityX)).spectrum();
        let mut b = v.z.clone().with_basis(grid.basis_for(Component::VelocityZ)).spectrum();
        self.project_spectra(&mut a, &mut b);
        VectorField { x: a.to_field(), z: b.to_field() }
    }

    /// Projects velocity coefficients in place; on the square they must be
    /// in the velocity expansions of the grid.
    pub fn project_spectra(&self, a: &mut Spectrum, b: &mut Spectrum) {
        let grid = &self.grid;
        let (nx, nz) = (grid.nx(), grid.nz());
        let (ac, bc) = (a.coeffs_mut(), b.coeffs_mut());
        match grid.geometry() {
            Geometry::Torus => {
                for pz in 0..nz {
                    let kz = self.kz[pz];
                    for px in 0..nx {
                        let kx = self.kx[px];
                        let k2 = kx * kx + kz * kz;
                        if k2 == 0.0 {
                            continue;
                        }
                        let i = pz * nx + px;
                        let dot = (ac[i] * kx + bc[i] * kz) / k2;
                        ac[i] -= dot * kx;
                        bc[i] -= dot * kz;
                    }
                }
            }
            Geometry::FreeSlipSquare => {
                let zero = Complex64::new(0.0, 0.0);
                let mut pa = vec![zero; ac.len()];
                let mut pb = vec![zero; bc.len()];
                for n in 1..nz {
                    for m in 1..nx {
                        // u_x: sine mode m at x-position m-1, cosine mode n at z-position n
                        let ia = n * nx + (m - 1);
                        let ib = (n - 1) * nx + m;
                        let (dx, dz) = (-self.kz[n], self.kx[m]);
                        let s = (ac[ia].re * dx + bc[ib].re * dz) / (dx * dx + dz * dz);
                        pa[ia] = Complex64::new(s * dx, 0.0);
                        pb[ib] = Complex64::new(s * dz, 0.0);
                    }
                }
                ac.copy_from_slice(&pa);
                bc.copy_from_slice(&pb);
            }
        }
    }

    /// Solves `Δψ = ω` and returns `∇⊥ψ = (-∂zψ, ∂xψ)`.
    pub fn velocity_from_vorticity(&self, omega: &ScalarField) -> Recovered {
        let grid = &self.grid;
        let (nx, nz) = (grid.nx(), grid.nz());
        let omega = omega.clone().with_basis(grid.basis_for(Component::Streamfunction));
        let mut psi = omega.spectrum();
        let mut mean_dropped = false;
        {
            let c = psi.coeffs_mut();
            for pz in 0..nz {
                for px in 0..nx {
                    let (mx, mz) = match grid.geometry() {
                        Geometry::Torus => (px, pz),
                        Geometry::FreeSlipSquare => (px + 1, pz + 1),
                    };
                    let i = pz * nx + px;
                    if grid.geometry() == Geometry::Torus
                        && px == 0
                        && pz == 0
                        && c[i].norm() > 1e-14 * omega.max_abs().max(f64::MIN_POSITIVE)
                    {
                        mean_dropped = true;
                    }
                    c[i] *= self.inverse_laplacian(mx, mz);
                }
            }
        }
        if mean_dropped {
            warn!("mean vorticity has no periodic streamfunction; dropped");
        }
        let velocity =
            VectorField { x: psi.derivative(Axis::Z).to_field().scaled(-1.0), z: psi.derivative(Axis::X).to_field() };
        Recovered { velocity, mean_dropped }
    }
}

/// `(a·∇)b`, collocated and labelled with the expansions of `b`.
pub fn convective_derivative(a: &VectorField, b: &VectorField) -> VectorField {
    let along = |f: &ScalarField| {
        let d = f.spectrum();
        let (dx, dz) = (d.derivative(Axis::X).to_field(), d.derivative(Axis::Z).to_field());
        let v: Vec<f64> =
            a.x.values()
                .iter()
                .zip(a.z.values())
                .zip(dx.values().iter().zip(dz.values()))
                .map(|((ax, az), (fx, fz))| ax * fx + az * fz)
                .collect();
        ScalarField::from_values(f.grid(), f.basis(), v).expect("same grid")
    };
    VectorField { x: along(&b.x), z: along(&b.z) }
}

pub fn leray_project(v: &VectorField) -> VectorField {
    LerayWorkspace::new(v.grid()).project(v)
}

pub fn divergence(v: &VectorField) -> ScalarField {
    let dx = v.x.spectrum().derivative(Axis::X).to_field();
    let dz = v.z.spectrum().derivative(Axis::Z).to_field();
    dx.add(&dz)
}

/// Scalar curl `∂x v_z - ∂z v_x`.
pub fn curl(v: &VectorField) -> ScalarField {
    let a = v.z.spectrum().derivative(Axis::X).to_field();
    let b = v.x.spectrum().derivative(Axis::Z).to_field();
    a.sub(&b)
}

pub fn velocity_from_vorticity(omega: &ScalarField) -> Recovered {
    LerayWorkspace::new(omega.grid()).velocity_from_vorticity(omega)
}

/// Gradient of a scalar in the matching velocity expansions.
pub fn gradient(phi: &ScalarField) -> VectorField {
    let s = phi.spectrum();
    VectorField { x: s.derivative(Axis::X).to_field(), z: s.derivative(Axis::Z).to_field() }
}

/// `∇⊥ψ = (-∂zψ, ∂xψ)`.
pub fn perp_gradient(psi: &ScalarField) -> VectorField {
    let s = psi.spectrum();
    VectorField { x: s.derivative(Axis::Z).to_field().scaled(-1.0), z: s.derivative(Axis::X).to_field() }
}

/// Values of the normal velocity component on the walls of the square,
/// evaluated from the spectral interpolant at `samples` points per wall.
pub fn boundary_normal_velocity(v: &VectorField, samples: usize) -> Vec<f64> {
    let grid = v.grid();
    let sx = v.x.spectrum();
    let sz = v.z.spectrum();
    let mut out = Vec::with_capacity(4 * samples);
    for i in 0..samples {
        let t = (i as f64 + 0.5) / samples as f64;
        let (x, z) = (t * grid.lx(), t * grid.lz());
        out.push(sx.evaluate(0.0, z));
        out.push(sx.evaluate(grid.lx(), z));
        out.push(sz.evaluate(x, 0.0));
        out.push(sz.evaluate(x, grid.lz()));
    }
    out
}
