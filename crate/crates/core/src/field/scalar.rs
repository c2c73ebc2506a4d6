use rustfft::num_complex::Complex64;

use super::grid::{Axis, Basis, Component, FieldBasis, Geometry, Grid};
use super::transform;
use crate::error::{IsmError, Result};

/// Grid values of a scalar quantity, row-major with x fastest
/// (`index = iz * nx + ix`).
///
/// The basis tags how the values are interpolated by the spectral
/// operators; changing it relabels the values without touching them.
#[derive(Clone, Debug, PartialEq)]
pub struct ScalarField {
    grid: Grid,
    basis: FieldBasis,
    values: Vec<f64>,
}

impl ScalarField {
    pub fn zeros(grid: &Grid, basis: FieldBasis) -> Self {
        Self::constant(grid, basis, 0.0)
    }

    pub fn constant(grid: &Grid, basis: FieldBasis, c: f64) -> Self {
        ScalarField { grid: grid.clone(), basis: checked_basis(grid, basis), values: vec![c; grid.len()] }
    }

    pub fn from_values(grid: &Grid, basis: FieldBasis, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(IsmError::Config(format!("field has {} values, grid needs {}", values.len(), grid.len())));
        }
        Ok(ScalarField { grid: grid.clone(), basis: checked_basis(grid, basis), values })
    }

    /// Samples `f(x, z)` at the grid nodes.
    pub fn from_fn(grid: &Grid, basis: FieldBasis, f: impl Fn(f64, f64) -> f64) -> Self {
        let mut values = Vec::with_capacity(grid.len());
        for iz in 0..grid.nz() {
            let z = grid.z_coord(iz);
            for ix in 0..grid.nx() {
                values.push(f(grid.x_coord(ix), z));
            }
        }
        ScalarField { grid: grid.clone(), basis: checked_basis(grid, basis), values }
    }

    /// Samples `f` in the expansion the grid uses for `component`.
    pub fn for_component(grid: &Grid, component: Component, f: impl Fn(f64, f64) -> f64) -> Self {
        Self::from_fn(grid, grid.basis_for(component), f)
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn basis(&self) -> FieldBasis {
        self.basis
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn with_basis(mut self, basis: FieldBasis) -> Self {
        self.basis = checked_basis(&self.grid, basis);
        self
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    pub fn spectrum(&self) -> Spectrum {
        Spectrum {
            grid: self.grid.clone(),
            basis: self.basis,
            coeffs: transform::forward(&self.grid, self.basis, &self.values),
        }
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> ScalarField {
        ScalarField { grid: self.grid.clone(), basis: self.basis, values: self.values.iter().map(|&v| f(v)).collect() }
    }

    pub fn zip_map(&self, other: &ScalarField, f: impl Fn(f64, f64) -> f64) -> ScalarField {
        debug_assert_eq!(self.grid, other.grid);
        ScalarField {
            grid: self.grid.clone(),
            basis: self.basis,
            values: self.values.iter().zip(&other.values).map(|(&a, &b)| f(a, b)).collect(),
        }
    }

    pub fn scaled(&self, a: f64) -> ScalarField {
        self.map(|v| a * v)
    }

    pub fn add(&self, other: &ScalarField) -> ScalarField {
        self.zip_map(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &ScalarField) -> ScalarField {
        self.zip_map(other, |a, b| a - b)
    }

    pub fn mul(&self, other: &ScalarField) -> ScalarField {
        self.zip_map(other, |a, b| a * b)
    }

    /// `self += a * other`, keeping this field's basis.
    pub fn axpy(&mut self, a: f64, other: &ScalarField) {
        debug_assert_eq!(self.values.len(), other.values.len());
        for (v, w) in self.values.iter_mut().zip(&other.values) {
            *v += a * w;
        }
    }

    pub fn scale_in_place(&mut self, a: f64) {
        for v in &mut self.values {
            *v *= a;
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Uniform-cell quadrature of the field over the domain.
    pub fn integral(&self) -> f64 {
        self.values.iter().sum::<f64>() * self.grid.cell_area()
    }

    pub fn mean(&self) -> f64 {
        self.integral() / self.grid.area()
    }

    /// L2 inner product by uniform-cell quadrature.
    pub fn inner(&self, other: &ScalarField) -> f64 {
        self.values.iter().zip(&other.values).map(|(a, b)| a * b).sum::<f64>() * self.grid.cell_area()
    }

    pub fn l2_norm(&self) -> f64 {
        self.inner(self).sqrt()
    }

    /// Spectral interpolation onto another resolution of the same domain.
    pub fn resample(&self, target: &Grid) -> Result<ScalarField> {
        if target.geometry() != self.grid.geometry()
            || target.lx().to_bits() != self.grid.lx().to_bits()
            || target.lz().to_bits() != self.grid.lz().to_bits()
        {
            return Err(IsmError::Config("resampling needs the same domain".into()));
        }
        let src = self.spectrum();
        let mut out = vec![Complex64::new(0.0, 0.0); target.len()];
        let (snx, snz) = (self.grid.nx(), self.grid.nz());
        let (tnx, tnz) = (target.nx(), target.nz());
        let bx = self.basis.x;
        let bz = self.basis.z;
        for pz in 0..snz {
            let mz = bz.mode_index(pz, snz);
            let Some(qz) = position_of(bz, mz, tnz) else { continue };
            for px in 0..snx {
                let mx = bx.mode_index(px, snx);
                let Some(qx) = position_of(bx, mx, tnx) else { continue };
                out[qz * tnx + qx] = src.coeffs[pz * snx + px];
            }
        }
        Ok(Spectrum { grid: target.clone(), basis: self.basis, coeffs: out }.to_field())
    }

    /// Evaluates the spectral interpolant at an arbitrary point.
    pub fn evaluate(&self, x: f64, z: f64) -> f64 {
        self.spectrum().evaluate(x, z)
    }
}

fn checked_basis(grid: &Grid, basis: FieldBasis) -> FieldBasis {
    match grid.geometry() {
        Geometry::Torus => FieldBasis::PERIODIC,
        Geometry::FreeSlipSquare => {
            assert!(
                basis.x != Basis::Fourier && basis.z != Basis::Fourier,
                "square fields need sine or cosine expansions"
            );
            basis
        }
    }
}

fn position_of(basis: Basis, mode: i64, n: usize) -> Option<usize> {
    let n = n as i64;
    match basis {
        Basis::Fourier => {
            if (-n / 2..n / 2).contains(&mode) {
                Some(if mode >= 0 { mode } else { mode + n } as usize)
            } else {
                None
            }
        }
        Basis::Sine => (1..=n).contains(&mode).then(|| (mode - 1) as usize),
        Basis::Cosine => (0..n).contains(&mode).then_some(mode as usize),
    }
}

/// Expansion coefficients of a scalar field.
#[derive(Clone, Debug)]
pub struct Spectrum {
    grid: Grid,
    basis: FieldBasis,
    coeffs: Vec<Complex64>,
}

impl Spectrum {
    pub fn zeros(grid: &Grid, basis: FieldBasis) -> Self {
        Spectrum { grid: grid.clone(), basis, coeffs: vec![Complex64::new(0.0, 0.0); grid.len()] }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn basis(&self) -> FieldBasis {
        self.basis
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut [Complex64] {
        &mut self.coeffs
    }

    pub fn to_field(&self) -> ScalarField {
        ScalarField {
            grid: self.grid.clone(),
            basis: self.basis,
            values: transform::inverse(&self.grid, self.basis, &self.coeffs),
        }
    }

    /// Multiplies every coefficient by `factor(kx, kz)` of its physical
    /// wavenumbers.
    pub fn scale_modes(&mut self, factor: impl Fn(f64, f64) -> f64) {
        let kx = self.grid.wavenumbers(Axis::X, self.basis.x);
        let kz = self.grid.wavenumbers(Axis::Z, self.basis.z);
        let nx = self.grid.nx();
        for (pz, &kzv) in kz.iter().enumerate() {
            for (px, &kxv) in kx.iter().enumerate() {
                self.coeffs[pz * nx + px] *= factor(kxv, kzv);
            }
        }
    }

    pub fn derivative(&self, axis: Axis) -> Spectrum {
        let grid = &self.grid;
        let (nx, nz) = (grid.nx(), grid.nz());
        let basis = self.basis.along(axis);
        let k = grid.derivative_wavenumbers(axis, basis);
        let mut out = vec![Complex64::new(0.0, 0.0); self.coeffs.len()];
        let idx = |p_axis: usize, p_other: usize| match axis {
            Axis::X => p_other * nx + p_axis,
            Axis::Z => p_axis * nx + p_other,
        };
        let (n_axis, n_other) = match axis {
            Axis::X => (nx, nz),
            Axis::Z => (nz, nx),
        };
        for q in 0..n_other {
            match basis {
                Basis::Fourier => {
                    for p in 0..n_axis {
                        out[idx(p, q)] = self.coeffs[idx(p, q)] * Complex64::new(0.0, k[p]);
                    }
                }
                Basis::Sine => {
                    // sin(k x) -> k cos(k x); the k = n sine mode has no cosine partner
                    for m in 1..n_axis {
                        out[idx(m, q)] = self.coeffs[idx(m - 1, q)] * k[m - 1];
                    }
                }
                Basis::Cosine => {
                    // cos(k x) -> -k sin(k x)
                    for m in 1..n_axis {
                        out[idx(m - 1, q)] = self.coeffs[idx(m, q)] * (-k[m]);
                    }
                }
            }
        }
        Spectrum { grid: self.grid.clone(), basis: self.basis.differentiated(axis), coeffs: out }
    }

    /// Zeroes modes beyond the two-thirds limit on either axis.
    pub fn dealias(&mut self) {
        let grid = &self.grid;
        let mx = grid.mode_indices(Axis::X, self.basis.x);
        let mz = grid.mode_indices(Axis::Z, self.basis.z);
        let (lx, lz) = (grid.dealias_limit(Axis::X), grid.dealias_limit(Axis::Z));
        let nx = grid.nx();
        for (pz, &m) in mz.iter().enumerate() {
            let z_cut = (m.abs() as f64) > lz;
            for (px, &n) in mx.iter().enumerate() {
                if z_cut || (n.abs() as f64) > lx {
                    self.coeffs[pz * nx + px] = Complex64::new(0.0, 0.0);
                }
            }
        }
    }

    pub fn evaluate(&self, x: f64, z: f64) -> f64 {
        let grid = &self.grid;
        let kx = grid.wavenumbers(Axis::X, self.basis.x);
        let kz = grid.wavenumbers(Axis::Z, self.basis.z);
        let nx = grid.nx();
        let phi = |b: Basis, k: f64, s: f64| match b {
            Basis::Fourier => Complex64::from_polar(1.0, k * s),
            Basis::Sine => Complex64::new((k * s).sin(), 0.0),
            Basis::Cosine => Complex64::new((k * s).cos(), 0.0),
        };
        let px: Vec<Complex64> = kx.iter().map(|&k| phi(self.basis.x, k, x)).collect();
        let mut sum = Complex64::new(0.0, 0.0);
        for (pz, &k) in kz.iter().enumerate() {
            let fz = phi(self.basis.z, k, z);
            for (ix, fx) in px.iter().enumerate() {
                sum += self.coeffs[pz * nx + ix] * fx * fz;
            }
        }
        sum.re
    }
}

/// Two-component field in the slice, `(x, z)` components.
#[derive(Clone, Debug, PartialEq)]
pub struct VectorField {
    pub x: ScalarField,
    pub z: ScalarField,
}

impl VectorField {
    pub fn new(x: ScalarField, z: ScalarField) -> Result<Self> {
        if x.grid() != z.grid() {
            return Err(IsmError::Config("vector components live on different grids".into()));
        }
        Ok(VectorField { x, z })
    }

    /// Zero velocity in the grid's velocity expansions.
    pub fn zeros(grid: &Grid) -> Self {
        VectorField {
            x: ScalarField::zeros(grid, grid.basis_for(Component::VelocityX)),
            z: ScalarField::zeros(grid, grid.basis_for(Component::VelocityZ)),
        }
    }

    /// Samples a velocity-like field in the grid's velocity expansions.
    pub fn from_fns(grid: &Grid, fx: impl Fn(f64, f64) -> f64, fz: impl Fn(f64, f64) -> f64) -> Self {
        VectorField {
            x: ScalarField::for_component(grid, Component::VelocityX, fx),
            z: ScalarField::for_component(grid, Component::VelocityZ, fz),
        }
    }

    pub fn grid(&self) -> &Grid {
        self.x.grid()
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.z.is_finite()
    }

    pub fn scaled(&self, a: f64) -> VectorField {
        VectorField { x: self.x.scaled(a), z: self.z.scaled(a) }
    }

    pub fn add(&self, other: &VectorField) -> VectorField {
        VectorField { x: self.x.add(&other.x), z: self.z.add(&other.z) }
    }

    pub fn sub(&self, other: &VectorField) -> VectorField {
        VectorField { x: self.x.sub(&other.x), z: self.z.sub(&other.z) }
    }

    pub fn axpy(&mut self, a: f64, other: &VectorField) {
        self.x.axpy(a, &other.x);
        self.z.axpy(a, &other.z);
    }

    pub fn scale_in_place(&mut self, a: f64) {
        self.x.scale_in_place(a);
        self.z.scale_in_place(a);
    }

    pub fn inner(&self, other: &VectorField) -> f64 {
        self.x.inner(&other.x) + self.z.inner(&other.z)
    }

    pub fn l2_norm(&self) -> f64 {
        self.inner(self).sqrt()
    }

    /// Largest pointwise Euclidean magnitude.
    pub fn max_magnitude(&self) -> f64 {
        self.x.values().iter().zip(self.z.values()).fold(0.0, |m, (a, b)| m.max(a.hypot(*b)))
    }
}
