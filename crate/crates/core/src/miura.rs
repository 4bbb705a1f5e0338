//! The Miura map `q = τ' + τ²`, carried by its primitive `σ = τ + ∫₀ˣ τ²`.

use crate::error::Result;
use crate::grid::{cumulative_trapezoid, trapezoid_weights, MatrixGrid};
use crate::linalg::{self, CMat, C64};

/// Primitive of a distributional potential: `q = σ'`.
#[derive(Debug, Clone, PartialEq)]
pub struct PotentialPrimitive {
    pub sigma: MatrixGrid,
    pub tau_ref: MatrixGrid,
}

impl PotentialPrimitive {
    /// Central differences of σ at interior nodes, i.e. pointwise samples of q where τ is smooth.
    pub fn q_interior(&self) -> Vec<CMat> {
        let h = self.sigma.spec().step();
        let v = self.sigma.values();
        (1..v.len() - 1)
            .map(|i| (&v[i + 1] - &v[i - 1]) * C64::new(0.5 / h, 0.0))
            .collect()
    }
}

pub fn miura(tau: &MatrixGrid) -> PotentialPrimitive {
    let squares: Vec<CMat> = tau.values().iter().map(|t| t * t).collect();
    let integral = cumulative_trapezoid(tau.spec(), &squares);
    let values = tau.values().iter().zip(integral).map(|(t, s)| t + s).collect();
    let sigma = MatrixGrid::detect(tau.spec(), values).expect("same grid and order as tau");
    PotentialPrimitive {
        sigma,
        tau_ref: tau.clone(),
    }
}

/// `max_i ‖d(x_i) − d̄‖_F` for `d = σ_a − σ_b` and its trapezoid mean `d̄`.
pub fn miura_distance(a: &PotentialPrimitive, b: &PotentialPrimitive) -> Result<f64> {
    let d = a.sigma.sub(&b.sigma)?;
    let w = trapezoid_weights(d.spec());
    let mut mean = linalg::zeros(d.r());
    for (v, wi) in d.values().iter().zip(&w) {
        mean += v * C64::new(*wi, 0.0);
    }
    Ok(d.values()
        .iter()
        .map(|v| linalg::frobenius(&(v - &mean)))
        .fold(0.0, f64::max))
}

/// Whether two primitives describe the same q, i.e. differ by a constant up to `tol`.
pub fn miura_equals(a: &PotentialPrimitive, b: &PotentialPrimitive, tol: f64) -> Result<bool> {
    Ok(miura_distance(a, b)? <= tol)
}
