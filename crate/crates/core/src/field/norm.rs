use super::grid::Axis;
use super::scalar::{ScalarField, Spectrum, VectorField};
use crate::error::{IsmError, Result};

/// Integrability exponent of a Sobolev norm.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Exponent {
    Finite(f64),
    Infinity,
}

/// Discrete `W^{k,p}` norm selector, `k <= 3`, `p >= 2` or infinite.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NormSpec {
    k: u32,
    p: Exponent,
}

impl NormSpec {
    pub fn new(k: u32, p: Exponent) -> Result<Self> {
        if k > 3 {
            return Err(IsmError::Config(format!("derivative order {k} not supported (k <= 3)")));
        }
        if let Exponent::Finite(p) = p {
            if !(p >= 2.0 && p.is_finite()) {
                return Err(IsmError::Config(format!("exponent p = {p} not supported (p >= 2)")));
            }
        }
        Ok(NormSpec { k, p })
    }

    pub const L2: NormSpec = NormSpec { k: 0, p: Exponent::Finite(2.0) };
    pub const L_INF: NormSpec = NormSpec { k: 0, p: Exponent::Infinity };
    pub const W1_INF: NormSpec = NormSpec { k: 1, p: Exponent::Infinity };
    /// Default regularity monitor, the smallest integer `k` with `k > 1 + 2/p` at `p = 2`.
    pub const H3: NormSpec = NormSpec { k: 3, p: Exponent::Finite(2.0) };

    pub fn k(&self) -> u32 {
        self.k
    }

    pub fn p(&self) -> Exponent {
        self.p
    }

    /// Combines per-component norms into the product-space norm.
    pub fn combine(&self, parts: &[f64]) -> f64 {
        match self.p {
            Exponent::Infinity => parts.iter().fold(0.0, |m: f64, v| m.max(*v)),
            Exponent::Finite(p) => parts.iter().map(|v| v.powf(p)).sum::<f64>().powf(1.0 / p),
        }
    }
}

pub trait Normed {
    fn norm(&self, spec: NormSpec) -> f64;
}

/// All partial derivatives `∂^α f` with `|α| <= k`, ordered by total order.
pub fn derivatives(field: &ScalarField, k: u32) -> Vec<ScalarField> {
    let base = field.spectrum();
    let mut out = vec![field.clone()];
    let mut level: Vec<Spectrum> = vec![base];
    for _ in 0..k {
        // from the previous order, take d/dx of every entry and d/dz of the last
        let mut next = Vec::with_capacity(level.len() + 1);
        for s in &level {
            next.push(s.derivative(Axis::X));
        }
        next.push(level.last().expect("nonempty").derivative(Axis::Z));
        out.extend(next.iter().map(Spectrum::to_field));
        level = next;
    }
    out
}

fn lp_sum(values: &[f64], p: f64, cell: f64) -> f64 {
    values.iter().map(|v| v.abs().powf(p)).sum::<f64>() * cell
}

impl Normed for ScalarField {
    fn norm(&self, spec: NormSpec) -> f64 {
        let parts = derivatives(self, spec.k);
        match spec.p {
            Exponent::Infinity => parts.iter().map(ScalarField::max_abs).sum(),
            Exponent::Finite(p) => {
                let cell = self.grid().cell_area();
                parts.iter().map(|d| lp_sum(d.values(), p, cell)).sum::<f64>().powf(1.0 / p)
            }
        }
    }
}

impl Normed for VectorField {
    fn norm(&self, spec: NormSpec) -> f64 {
        let dx = derivatives(&self.x, spec.k);
        let dz = derivatives(&self.z, spec.k);
        match spec.p {
            Exponent::Infinity => {
                dx.iter().zip(&dz).map(|(a, b)| VectorField { x: a.clone(), z: b.clone() }.max_magnitude()).sum()
            }
            Exponent::Finite(p) => {
                let cell = self.grid().cell_area();
                dx.iter().chain(&dz).map(|d| lp_sum(d.values(), p, cell)).sum::<f64>().powf(1.0 / p)
            }
        }
    }
}
