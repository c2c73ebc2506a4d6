pub mod grid;
pub mod norm;
pub mod scalar;
mod transform;

pub use grid::{make_grid, Axis, Basis, Component, FieldBasis, Geometry, Grid};
pub use norm::{derivatives, Exponent, NormSpec, Normed};
pub use scalar::{ScalarField, Spectrum, VectorField};

/// Spectral derivative along `axis`.
pub fn differentiate(field: &ScalarField, axis: Axis) -> ScalarField {
    field.spectrum().derivative(axis).to_field()
}

/// Two-thirds-rule truncation.
pub fn dealias(field: &ScalarField) -> ScalarField {
    let mut s = field.spectrum();
    s.dealias();
    s.to_field()
}
