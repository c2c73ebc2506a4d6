use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::dynamics::SimState;
use crate::field::{Axis, Basis, Component, Geometry, Grid, ScalarField};
use crate::incompressible::{leray_project, perp_gradient};

/// Wave number `k` along `axis` in the given expansion, as a function of position.
fn wave(grid: &Grid, axis: Axis, basis: Basis, k: f64, s: f64) -> f64 {
    let len = grid.extent(axis);
    match grid.geometry() {
        Geometry::Torus => {
            let a = 2.0 * std::f64::consts::PI * k * s / len;
            match basis {
                Basis::Sine => a.sin(),
                _ => a.cos(),
            }
        }
        Geometry::FreeSlipSquare => {
            let a = std::f64::consts::PI * k * s / len;
            match basis {
                Basis::Sine => a.sin(),
                _ => a.cos(),
            }
        }
    }
}

fn product_terms(grid: &Grid, component: Component, terms: &[(f64, f64, f64)], alt: [Basis; 2]) -> ScalarField {
    let b = grid.basis_for(component);
    let (bx, bz) = match grid.geometry() {
        Geometry::Torus => (alt[0], alt[1]),
        Geometry::FreeSlipSquare => (b.x, b.z),
    };
    ScalarField::for_component(grid, component, |x, z| {
        terms.iter().map(|&(a, kx, kz)| a * wave(grid, Axis::X, bx, kx, x) * wave(grid, Axis::Z, bz, kz, z)).sum()
    })
}

fn assemble(psi: ScalarField, u_t: ScalarField, theta: ScalarField) -> SimState {
    let u_s = leray_project(&perp_gradient(&psi));
    SimState { t: 0.0, u_s, u_t, theta }
}

/// Low-mode smooth state in the grid's canonical expansions.
pub fn smooth_state(grid: &Grid, amplitude: f64) -> SimState {
    let sine = [Basis::Sine, Basis::Sine];
    let psi =
        product_terms(grid, Component::Streamfunction, &[(1.0, 1.0, 1.0), (0.4, 2.0, 1.0), (0.25, 1.0, 3.0)], sine);
    let u_t = product_terms(
        grid,
        Component::Transverse,
        &[(0.5, 1.0, 1.0), (0.2, 2.0, 2.0), (0.3, 1.0, 0.0)],
        [Basis::Sine, Basis::Cosine],
    );
    let theta = product_terms(
        grid,
        Component::Temperature,
        &[(0.5, 1.0, 1.0), (0.3, 0.0, 2.0), (0.2, 3.0, 1.0)],
        [Basis::Cosine, Basis::Sine],
    );
    assemble(psi.scaled(amplitude), u_t.scaled(amplitude), theta.scaled(amplitude))
}

/// State built from analytic but not band-limited profiles.
pub fn analytic_state(grid: &Grid, amplitude: f64) -> SimState {
    let (px, pz) = match grid.geometry() {
        Geometry::Torus => (2.0 * std::f64::consts::PI / grid.lx(), 2.0 * std::f64::consts::PI / grid.lz()),
        Geometry::FreeSlipSquare => (std::f64::consts::PI / grid.lx(), std::f64::consts::PI / grid.lz()),
    };
    let a = amplitude;
    // sine-odd times cosine-even profiles keep the parities of each component
    let psi = ScalarField::for_component(grid, Component::Streamfunction, |x, z| {
        let (x, z) = (px * x, pz * z);
        a * x.sin() * z.sin() / (2.0 - 0.5 * x.cos() - 0.5 * z.cos())
    });
    let u_t = ScalarField::for_component(grid, Component::Transverse, |x, z| {
        let (x, z) = (px * x, pz * z);
        0.5 * a * x.sin() / (2.0 - x.cos() * z.cos())
    });
    let theta = ScalarField::for_component(grid, Component::Temperature, |x, z| {
        let (x, z) = (px * x, pz * z);
        0.5 * a * z.sin() / (2.5 - x.cos() - 0.5 * z.cos())
    });
    assemble(psi, u_t, theta)
}

/// Random state with modes up to `max_mode` per axis, mean-free on the torus.
pub fn random_state(grid: &Grid, seed: u64, max_mode: u32, amplitude: f64) -> SimState {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut draw = |component: Component| -> ScalarField {
        let mut terms = Vec::new();
        for kx in 0..=max_mode {
            for kz in 0..=max_mode {
                if grid.geometry() == Geometry::Torus && kx == 0 && kz == 0 {
                    continue;
                }
                let c: [f64; 4] = [
                    rng.random_range(-1.0..1.0),
                    rng.random_range(-1.0..1.0),
                    rng.random_range(-1.0..1.0),
                    rng.random_range(-1.0..1.0),
                ];
                terms.push((kx as f64, kz as f64, c));
            }
        }
        let scale = amplitude / (terms.len() as f64).sqrt();
        ScalarField::for_component(grid, component, |x, z| {
            let b = grid.basis_for(component);
            terms
                .iter()
                .map(|&(kx, kz, c)| match grid.geometry() {
                    Geometry::Torus => {
                        let cx = wave(grid, Axis::X, Basis::Cosine, kx, x);
                        let sx = wave(grid, Axis::X, Basis::Sine, kx, x);
                        let cz = wave(grid, Axis::Z, Basis::Cosine, kz, z);
                        let sz = wave(grid, Axis::Z, Basis::Sine, kz, z);
                        c[0] * cx * cz + c[1] * cx * sz + c[2] * sx * cz + c[3] * sx * sz
                    }
                    Geometry::FreeSlipSquare => {
                        c[0] * wave(grid, Axis::X, b.x, kx, x) * wave(grid, Axis::Z, b.z, kz, z)
                    }
                })
                .sum::<f64>()
                * scale
        })
    };
    let psi = draw(Component::Streamfunction);
    let u_t = draw(Component::Transverse);
    let theta = draw(Component::Temperature);
    assemble(psi, u_t, theta)
}
