//! Forward and inverse 2D transforms.
//!
//! Coefficients are normalised so that the physical values are the plain
//! sum of coefficient times basis function. Torus fields use the complex
//! DFT; square fields use DST-II/DCT-II on cell-centred nodes, each computed
//! through a complex FFT of the length-`2n` odd or even extension.

use rustfft::num_complex::Complex64;

use super::grid::{Axis, AxisPlan, Basis, FieldBasis, Geometry, Grid};

pub(crate) fn forward(grid: &Grid, basis: FieldBasis, values: &[f64]) -> Vec<Complex64> {
    debug_assert_eq!(values.len(), grid.len());
    let mut data: Vec<Complex64> = values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    match grid.geometry() {
        Geometry::Torus => {
            fourier_along(grid, Axis::X, &mut data, true);
            fourier_along(grid, Axis::Z, &mut data, true);
            let scale = 1.0 / grid.len() as f64;
            data.iter_mut().for_each(|c| *c *= scale);
        }
        Geometry::FreeSlipSquare => {
            trig_along(grid, Axis::X, basis.x, &mut data, true);
            trig_along(grid, Axis::Z, basis.z, &mut data, true);
        }
    }
    data
}

pub(crate) fn inverse(grid: &Grid, basis: FieldBasis, coeffs: &[Complex64]) -> Vec<f64> {
    debug_assert_eq!(coeffs.len(), grid.len());
    let mut data = coeffs.to_vec();
    match grid.geometry() {
        Geometry::Torus => {
            fourier_along(grid, Axis::X, &mut data, false);
            fourier_along(grid, Axis::Z, &mut data, false);
        }
        Geometry::FreeSlipSquare => {
            trig_along(grid, Axis::X, basis.x, &mut data, false);
            trig_along(grid, Axis::Z, basis.z, &mut data, false);
        }
    }
    data.into_iter().map(|c| c.re).collect()
}

fn transpose(src: &[Complex64], rows: usize, cols: usize) -> Vec<Complex64> {
    let mut out = vec![Complex64::new(0.0, 0.0); src.len()];
    for r in 0..rows {
        for c in 0..cols {
            out[c * rows + r] = src[r * cols + c];
        }
    }
    out
}

/// Runs `f` over all lines along `axis`, handing it a contiguous batch of
/// lines of length `n(axis)`.
fn with_lines<F>(grid: &Grid, axis: Axis, data: &mut [Complex64], f: F)
where
    F: FnOnce(&mut [Complex64]),
{
    let (nx, nz) = (grid.nx(), grid.nz());
    match axis {
        Axis::X => f(data),
        Axis::Z => {
            let mut t = transpose(data, nz, nx);
            f(&mut t);
            data.copy_from_slice(&transpose(&t, nx, nz));
        }
    }
}

fn fourier_along(grid: &Grid, axis: Axis, data: &mut [Complex64], forward: bool) {
    let plan = grid.plan(axis);
    with_lines(grid, axis, data, |lines| {
        if forward {
            plan.forward.process(lines);
        } else {
            plan.inverse.process(lines);
        }
    });
}

fn trig_along(grid: &Grid, axis: Axis, basis: Basis, data: &mut [Complex64], forward: bool) {
    let plan = grid.plan(axis);
    with_lines(grid, axis, data, |lines| match (basis, forward) {
        (Basis::Cosine, true) => cosine_forward(plan, lines),
        (Basis::Sine, true) => sine_forward(plan, lines),
        (Basis::Cosine, false) => cosine_inverse(plan, lines),
        (Basis::Sine, false) => sine_inverse(plan, lines),
        (Basis::Fourier, _) => unreachable!("Fourier basis on a bounded axis"),
    });
}

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

fn cosine_forward(plan: &AxisPlan, lines: &mut [Complex64]) {
    let n = plan.n;
    let count = lines.len() / n;
    let mut ext = vec![ZERO; count * 2 * n];
    for (line, e) in lines.chunks(n).zip(ext.chunks_mut(2 * n)) {
        for i in 0..n {
            e[i] = Complex64::new(line[i].re, 0.0);
            e[2 * n - 1 - i] = Complex64::new(line[i].re, 0.0);
        }
    }
    plan.forward.process(&mut ext);
    let inv_n = 1.0 / n as f64;
    for (line, e) in lines.chunks_mut(n).zip(ext.chunks(2 * n)) {
        for k in 0..n {
            let sum = 0.5 * (plan.half_shift[k] * e[k]).re;
            let weight = if k == 0 { inv_n } else { 2.0 * inv_n };
            line[k] = Complex64::new(weight * sum, 0.0);
        }
    }
}

fn sine_forward(plan: &AxisPlan, lines: &mut [Complex64]) {
    let n = plan.n;
    let count = lines.len() / n;
    let mut ext = vec![ZERO; count * 2 * n];
    for (line, e) in lines.chunks(n).zip(ext.chunks_mut(2 * n)) {
        for i in 0..n {
            e[i] = Complex64::new(line[i].re, 0.0);
            e[2 * n - 1 - i] = Complex64::new(-line[i].re, 0.0);
        }
    }
    plan.forward.process(&mut ext);
    let inv_n = 1.0 / n as f64;
    let half_i = Complex64::new(0.0, 0.5);
    for (line, e) in lines.chunks_mut(n).zip(ext.chunks(2 * n)) {
        for k in 1..=n {
            let sum = (half_i * plan.half_shift[k] * e[k]).re;
            let weight = if k == n { inv_n } else { 2.0 * inv_n };
            line[k - 1] = Complex64::new(weight * sum, 0.0);
        }
    }
}

fn cosine_inverse(plan: &AxisPlan, lines: &mut [Complex64]) {
    let n = plan.n;
    let count = lines.len() / n;
    let mut ext = vec![ZERO; count * 2 * n];
    let nf = n as f64;
    for (line, e) in lines.chunks(n).zip(ext.chunks_mut(2 * n)) {
        e[0] = Complex64::new(2.0 * nf * line[0].re, 0.0);
        for k in 1..n {
            let y = plan.half_shift[k].conj() * (nf * line[k].re);
            e[k] = y;
            e[2 * n - k] = y.conj();
        }
        e[n] = ZERO;
    }
    plan.inverse.process(&mut ext);
    let scale = 1.0 / (2.0 * nf);
    for (line, e) in lines.chunks_mut(n).zip(ext.chunks(2 * n)) {
        for i in 0..n {
            line[i] = Complex64::new(scale * e[i].re, 0.0);
        }
    }
}

fn sine_inverse(plan: &AxisPlan, lines: &mut [Complex64]) {
    let n = plan.n;
    let count = lines.len() / n;
    let mut ext = vec![ZERO; count * 2 * n];
    let nf = n as f64;
    let minus_two_i = Complex64::new(0.0, -2.0);
    for (line, e) in lines.chunks(n).zip(ext.chunks_mut(2 * n)) {
        e[0] = ZERO;
        for k in 1..n {
            // X_k = n c_k / 2
            let y = minus_two_i * plan.half_shift[k].conj() * (0.5 * nf * line[k - 1].re);
            e[k] = y;
            e[2 * n - k] = y.conj();
        }
        let y = minus_two_i * plan.half_shift[n].conj() * (nf * line[n - 1].re);
        e[n] = Complex64::new(y.re, 0.0);
    }
    plan.inverse.process(&mut ext);
    let scale = 1.0 / (2.0 * nf);
    for (line, e) in lines.chunks_mut(n).zip(ext.chunks(2 * n)) {
        for i in 0..n {
            line[i] = Complex64::new(scale * e[i].re, 0.0);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::grid::make_grid;
    use std::f64::consts::PI;

    fn square(n: usize) -> Grid {
        make_grid(Geometry::FreeSlipSquare, n, n, PI, 2.0).unwrap()
    }

    #[test]
    fn cosine_sine_coefficients_match_direct_sums() {
        let g = square(8);
        let n = 8;
        let values: Vec<f64> = (0..64).map(|i| ((i * 37 % 11) as f64 - 5.0) * 0.3).collect();
        for basis in
            [FieldBasis::SINE_SINE, FieldBasis::SINE_COSINE, FieldBasis::COSINE_SINE, FieldBasis::COSINE_COSINE]
        {
            let c = forward(&g, basis, &values);
            // evaluate the expansion directly at every node
            for iz in 0..n {
                for ix in 0..n {
                    let mut s = 0.0;
                    for pz in 0..n {
                        for px in 0..n {
                            let phi = |b: Basis, p: usize, i: usize| {
                                let m = b.mode_index(p, n) as f64;
                                let th = PI * m * (i as f64 + 0.5) / n as f64;
                                if b == Basis::Sine {
                                    th.sin()
                                } else {
                                    th.cos()
                                }
                            };
                            s += c[pz * n + px].re * phi(basis.x, px, ix) * phi(basis.z, pz, iz);
                        }
                    }
                    assert!((s - values[iz * n + ix]).abs() < 1e-12, "{basis:?}");
                }
            }
            let back = inverse(&g, basis, &c);
            for (a, b) in back.iter().zip(&values) {
                assert!((a - b).abs() < 1e-13);
            }
        }
    }

    #[test]
    fn fourier_round_trip() {
        let g = make_grid(Geometry::Torus, 16, 8, 1.0, 3.0).unwrap();
        let values: Vec<f64> = (0..128).map(|i| (i as f64 * 0.7).sin()).collect();
        let c = forward(&g, FieldBasis::PERIODIC, &values);
        let back = inverse(&g, FieldBasis::PERIODIC, &c);
        for (a, b) in back.iter().zip(&values) {
            assert!((a - b).abs() < 1e-13);
        }
    }
}
