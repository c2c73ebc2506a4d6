//! Flat binary checkpoints.
//!
//! Layout, all little-endian: `ISMC`, version `u32`, geometry byte
//! (0 torus, 1 square), `nx`, `nz` as `u32`, then `lx lz t f g theta0 s alpha`
//! as `f64`, then the four fields `u_S.x u_S.z u_T θ` of `nx·nz` values each
//! with x varying fastest.

use std::fs;
use std::io;
use std::path::Path;

use ism_core::dynamics::{Params, SimState};
use ism_core::field::{make_grid, Component, Geometry, Grid, ScalarField, VectorField};
use thiserror::Error;

pub const MAGIC: &[u8; 4] = b"ISMC";
pub const VERSION: u32 = 1;
const HEADER_LEN: usize = 4 + 4 + 1 + 4 + 4 + 8 * 8;

#[derive(Debug, Error)]
pub enum CheckpointError {
    #[error("checkpoint format error at byte {offset}: {message}")]
    Format { offset: usize, message: String },
    #[error("checkpoint geometry is {found:?} but the run is configured for {expected:?}")]
    GeometryMismatch { expected: Geometry, found: Geometry },
    #[error("checkpoint grid is {found:?} but the run is configured for {expected:?}")]
    ResolutionMismatch { expected: (usize, usize), found: (usize, usize) },
    #[error("checkpoint I/O: {0}")]
    Io(#[from] io::Error),
}

fn geometry_byte(g: Geometry) -> u8 {
    match g {
        Geometry::Torus => 0,
        Geometry::FreeSlipSquare => 1,
    }
}

pub fn encode(state: &SimState, params: &Params) -> Vec<u8> {
    let grid = state.grid();
    let mut out = Vec::with_capacity(HEADER_LEN + 4 * 8 * grid.len());
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.push(geometry_byte(grid.geometry()));
    out.extend_from_slice(&(grid.nx() as u32).to_le_bytes());
    out.extend_from_slice(&(grid.nz() as u32).to_le_bytes());
    for v in [grid.lx(), grid.lz(), state.t, params.f, params.g, params.theta0, params.s, params.alpha] {
        out.extend_from_slice(&v.to_le_bytes());
    }
    for field in state.components() {
        for v in field.values() {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    out
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize, what: &str) -> Result<&'a [u8], CheckpointError> {
        if self.bytes.len() - self.pos < n {
            return Err(CheckpointError::Format {
                offset: self.pos,
                message: format!("truncated while reading {what}"),
            });
        }
        let s = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn u32(&mut self, what: &str) -> Result<u32, CheckpointError> {
        Ok(u32::from_le_bytes(self.take(4, what)?.try_into().expect("4 bytes")))
    }

    fn f64(&mut self, what: &str) -> Result<f64, CheckpointError> {
        Ok(f64::from_le_bytes(self.take(8, what)?.try_into().expect("8 bytes")))
    }
}

/// Decodes a checkpoint. The state is rebuilt as stored, without re-projection.
pub fn decode(bytes: &[u8]) -> Result<(SimState, Params), CheckpointError> {
    let mut r = Reader { bytes, pos: 0 };
    if r.take(4, "magic")? != MAGIC {
        return Err(CheckpointError::Format { offset: 0, message: "bad magic bytes".into() });
    }
    let version = r.u32("version")?;
    if version != VERSION {
        return Err(CheckpointError::Format { offset: 4, message: format!("unsupported version {version}") });
    }
    let geometry = match r.take(1, "geometry")?[0] {
        0 => Geometry::Torus,
        1 => Geometry::FreeSlipSquare,
        b => return Err(CheckpointError::Format { offset: 8, message: format!("unknown geometry byte {b}") }),
    };
    let nx = r.u32("nx")? as usize;
    let nz = r.u32("nz")? as usize;
    let mut header = [0.0; 8];
    for (v, name) in header.iter_mut().zip(["lx", "lz", "t", "f", "g", "theta0", "s", "alpha"]) {
        *v = r.f64(name)?;
    }
    let [lx, lz, t, f, g, theta0, s, alpha] = header;
    let grid = make_grid(geometry, nx, nz, lx, lz)
        .map_err(|e| CheckpointError::Format { offset: 9, message: format!("invalid grid: {e}") })?;
    let params = Params { f, g, theta0, s, alpha };
    let mut fields = Vec::with_capacity(4);
    for (component, name) in [
        (Component::VelocityX, "u_S.x"),
        (Component::VelocityZ, "u_S.z"),
        (Component::Transverse, "u_T"),
        (Component::Temperature, "theta"),
    ] {
        let raw = r.take(8 * grid.len(), name)?;
        let values = raw.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes"))).collect();
        let field = ScalarField::from_values(&grid, grid.basis_for(component), values)
            .map_err(|e| CheckpointError::Format { offset: r.pos, message: e.to_string() })?;
        fields.push(field);
    }
    if r.pos != bytes.len() {
        return Err(CheckpointError::Format { offset: r.pos, message: "trailing bytes after the last field".into() });
    }
    let theta = fields.pop().expect("four fields");
    let u_t = fields.pop().expect("four fields");
    let uz = fields.pop().expect("four fields");
    let ux = fields.pop().expect("four fields");
    let u_s =
        VectorField::new(ux, uz).map_err(|e| CheckpointError::Format { offset: HEADER_LEN, message: e.to_string() })?;
    Ok((SimState { t, u_s, u_t, theta }, params))
}

pub fn write_checkpoint(state: &SimState, params: &Params, path: &Path) -> Result<(), CheckpointError> {
    fs::write(path, encode(state, params))?;
    Ok(())
}

pub fn read_checkpoint(path: &Path) -> Result<(SimState, Params), CheckpointError> {
    decode(&fs::read(path)?)
}

/// Reads a checkpoint that must match the configured grid.
pub fn read_checkpoint_for(path: &Path, grid: &Grid) -> Result<(SimState, Params), CheckpointError> {
    let (state, params) = read_checkpoint(path)?;
    let found = state.grid();
    if found.geometry() != grid.geometry() {
        return Err(CheckpointError::GeometryMismatch { expected: grid.geometry(), found: found.geometry() });
    }
    if (found.nx(), found.nz()) != (grid.nx(), grid.nz()) {
        return Err(CheckpointError::ResolutionMismatch {
            expected: (grid.nx(), grid.nz()),
            found: (found.nx(), found.nz()),
        });
    }
    Ok((state, params))
}
