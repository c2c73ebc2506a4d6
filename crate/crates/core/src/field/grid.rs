use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{IsmError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Geometry {
    /// Doubly periodic box `[0,Lx) x [0,Lz)`.
    Torus,
    /// Closed box `[0,Lx] x [0,Lz]` with impermeable free-slip walls.
    FreeSlipSquare,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Axis {
    X,
    Z,
}

/// One-dimensional expansion used along an axis.
///
/// Torus fields are always `Fourier`. On the square every field is expanded
/// in sines or cosines per axis; the choice encodes the reflection parity of
/// the field across the walls, and differentiation swaps the two.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Basis {
    Fourier,
    Sine,
    Cosine,
}

impl Basis {
    pub fn differentiated(self) -> Basis {
        match self {
            Basis::Fourier => Basis::Fourier,
            Basis::Sine => Basis::Cosine,
            Basis::Cosine => Basis::Sine,
        }
    }

    /// Integer mode number stored at coefficient position `pos` of an axis
    /// with `n` points.
    pub fn mode_index(self, pos: usize, n: usize) -> i64 {
        match self {
            Basis::Fourier => {
                if pos < n / 2 {
                    pos as i64
                } else {
                    pos as i64 - n as i64
                }
            }
            Basis::Sine => pos as i64 + 1,
            Basis::Cosine => pos as i64,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct FieldBasis {
    pub x: Basis,
    pub z: Basis,
}

impl FieldBasis {
    pub const PERIODIC: FieldBasis = FieldBasis::new(Basis::Fourier, Basis::Fourier);
    pub const SINE_SINE: FieldBasis = FieldBasis::new(Basis::Sine, Basis::Sine);
    pub const SINE_COSINE: FieldBasis = FieldBasis::new(Basis::Sine, Basis::Cosine);
    pub const COSINE_SINE: FieldBasis = FieldBasis::new(Basis::Cosine, Basis::Sine);
    pub const COSINE_COSINE: FieldBasis = FieldBasis::new(Basis::Cosine, Basis::Cosine);

    pub const fn new(x: Basis, z: Basis) -> Self {
        FieldBasis { x, z }
    }

    pub fn along(self, axis: Axis) -> Basis {
        match axis {
            Axis::X => self.x,
            Axis::Z => self.z,
        }
    }

    pub fn differentiated(self, axis: Axis) -> FieldBasis {
        match axis {
            Axis::X => FieldBasis::new(self.x.differentiated(), self.z),
            Axis::Z => FieldBasis::new(self.x, self.z.differentiated()),
        }
    }
}

/// Physical role of a field; fixes its expansion on the square.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Component {
    VelocityX,
    VelocityZ,
    Transverse,
    Temperature,
    Streamfunction,
    Pressure,
}

pub(crate) struct AxisPlan {
    pub n: usize,
    pub forward: Arc<dyn Fft<f64>>,
    pub inverse: Arc<dyn Fft<f64>>,
    /// `exp(-i pi k / 2n)` for `k = 0..=n` (square only).
    pub half_shift: Vec<Complex64>,
}

impl AxisPlan {
    fn new(planner: &mut FftPlanner<f64>, geometry: Geometry, n: usize) -> Self {
        let len = match geometry {
            Geometry::Torus => n,
            Geometry::FreeSlipSquare => 2 * n,
        };
        let half_shift = match geometry {
            Geometry::Torus => Vec::new(),
            Geometry::FreeSlipSquare => {
                (0..=n).map(|k| Complex64::from_polar(1.0, -PI * k as f64 / (2 * n) as f64)).collect()
            }
        };
        AxisPlan { n, forward: planner.plan_fft_forward(len), inverse: planner.plan_fft_inverse(len), half_shift }
    }
}

pub(crate) struct GridInner {
    pub geometry: Geometry,
    pub nx: usize,
    pub nz: usize,
    pub lx: f64,
    pub lz: f64,
    pub x_plan: AxisPlan,
    pub z_plan: AxisPlan,
}

/// Domain geometry, resolution and transform plans. Cheap to clone.
#[derive(Clone)]
pub struct Grid(pub(crate) Arc<GridInner>);

impl PartialEq for Grid {
    fn eq(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.0, &other.0)
            || (self.0.geometry == other.0.geometry
                && self.0.nx == other.0.nx
                && self.0.nz == other.0.nz
                && self.0.lx.to_bits() == other.0.lx.to_bits()
                && self.0.lz.to_bits() == other.0.lz.to_bits())
    }
}

impl fmt::Debug for Grid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Grid")
            .field("geometry", &self.0.geometry)
            .field("nx", &self.0.nx)
            .field("nz", &self.0.nz)
            .field("lx", &self.0.lx)
            .field("lz", &self.0.lz)
            .finish()
    }
}

pub fn make_grid(geometry: Geometry, nx: usize, nz: usize, lx: f64, lz: f64) -> Result<Grid> {
    for (name, n) in [("nx", nx), ("nz", nz)] {
        if n < 8 || !n.is_power_of_two() {
            return Err(IsmError::Config(format!("{name} = {n}: mode counts must be powers of two and at least 8")));
        }
    }
    for (name, l) in [("Lx", lx), ("Lz", lz)] {
        if !(l.is_finite() && l > 0.0) {
            return Err(IsmError::Config(format!("{name} = {l}: extents must be positive")));
        }
    }
    let mut planner = FftPlanner::new();
    let x_plan = AxisPlan::new(&mut planner, geometry, nx);
    let z_plan = AxisPlan::new(&mut planner, geometry, nz);
    Ok(Grid(Arc::new(GridInner { geometry, nx, nz, lx, lz, x_plan, z_plan })))
}

impl Grid {
    pub fn new(geometry: Geometry, nx: usize, nz: usize, lx: f64, lz: f64) -> Result<Grid> {
        make_grid(geometry, nx, nz, lx, lz)
    }

    pub fn geometry(&self) -> Geometry {
        self.0.geometry
    }

    pub fn nx(&self) -> usize {
        self.0.nx
    }

    pub fn nz(&self) -> usize {
        self.0.nz
    }

    pub fn lx(&self) -> f64 {
        self.0.lx
    }

    pub fn lz(&self) -> f64 {
        self.0.lz
    }

    pub fn len(&self) -> usize {
        self.0.nx * self.0.nz
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn n(&self, axis: Axis) -> usize {
        match axis {
            Axis::X => self.0.nx,
            Axis::Z => self.0.nz,
        }
    }

    pub fn extent(&self, axis: Axis) -> f64 {
        match axis {
            Axis::X => self.0.lx,
            Axis::Z => self.0.lz,
        }
    }

    pub fn dx(&self) -> f64 {
        self.0.lx / self.0.nx as f64
    }

    pub fn dz(&self) -> f64 {
        self.0.lz / self.0.nz as f64
    }

    pub fn spacing(&self, axis: Axis) -> f64 {
        self.extent(axis) / self.n(axis) as f64
    }

    pub fn cell_area(&self) -> f64 {
        self.dx() * self.dz()
    }

    pub fn area(&self) -> f64 {
        self.0.lx * self.0.lz
    }

    /// Physical coordinate of grid index `i` along `axis`. Torus nodes sit
    /// at `i h`; square nodes at cell centres `(i + 1/2) h`.
    pub fn coord(&self, axis: Axis, i: usize) -> f64 {
        let h = self.spacing(axis);
        match self.0.geometry {
            Geometry::Torus => i as f64 * h,
            Geometry::FreeSlipSquare => (i as f64 + 0.5) * h,
        }
    }

    pub fn x_coord(&self, ix: usize) -> f64 {
        self.coord(Axis::X, ix)
    }

    pub fn z_coord(&self, iz: usize) -> f64 {
        self.coord(Axis::Z, iz)
    }

    /// Expansion used for a field of the given role.
    pub fn basis_for(&self, component: Component) -> FieldBasis {
        match self.0.geometry {
            Geometry::Torus => FieldBasis::PERIODIC,
            Geometry::FreeSlipSquare => match component {
                Component::VelocityX | Component::Transverse => FieldBasis::SINE_COSINE,
                Component::VelocityZ | Component::Temperature => FieldBasis::COSINE_SINE,
                Component::Streamfunction => FieldBasis::SINE_SINE,
                Component::Pressure => FieldBasis::COSINE_COSINE,
            },
        }
    }

    /// Mode numbers along `axis` in coefficient storage order.
    pub fn mode_indices(&self, axis: Axis, basis: Basis) -> Vec<i64> {
        let n = self.n(axis);
        (0..n).map(|p| basis.mode_index(p, n)).collect()
    }

    /// Physical wavenumbers along `axis` in coefficient storage order.
    pub fn wavenumbers(&self, axis: Axis, basis: Basis) -> Vec<f64> {
        let scale = self.wavenumber_unit(axis);
        self.mode_indices(axis, basis).into_iter().map(|m| m as f64 * scale).collect()
    }

    /// Wavenumbers used for first derivatives: the unpaired Fourier Nyquist
    /// mode is given a zero wavenumber so odd derivatives stay real.
    pub fn derivative_wavenumbers(&self, axis: Axis, basis: Basis) -> Vec<f64> {
        let n = self.n(axis) as i64;
        let scale = self.wavenumber_unit(axis);
        self.mode_indices(axis, basis)
            .into_iter()
            .map(|m| if basis == Basis::Fourier && m == -n / 2 { 0.0 } else { m as f64 * scale })
            .collect()
    }

    fn wavenumber_unit(&self, axis: Axis) -> f64 {
        match self.0.geometry {
            Geometry::Torus => 2.0 * PI / self.extent(axis),
            Geometry::FreeSlipSquare => PI / self.extent(axis),
        }
    }

    /// Largest mode number kept by the two-thirds rule along `axis`.
    ///
    /// Two-thirds of the largest resolvable mode number: `n/3` on the torus
    /// (modes run to `n/2`) and `2n/3` on the square (modes run to `n`).
    pub fn dealias_limit(&self, axis: Axis) -> f64 {
        let n = self.n(axis) as f64;
        match self.0.geometry {
            Geometry::Torus => n / 3.0,
            Geometry::FreeSlipSquare => 2.0 * n / 3.0,
        }
    }

    pub(crate) fn plan(&self, axis: Axis) -> &AxisPlan {
        match axis {
            Axis::X => &self.0.x_plan,
            Axis::Z => &self.0.z_plan,
        }
    }
}
