//! Seeded smooth Hermitian potentials for tests and demonstrations.
//!
//! `τ(x) = ½(T(x) + T(x)*)` with `T(x) = Σ_{k=0}^{K} A_k cos(2πkx) + B_k sin(2πkx)`. The
//! coefficients are drawn from `ChaCha8Rng::seed_from_u64(seed)`: for k = 0..=K, first A_k then
//! B_k, each row-major, real part before imaginary part, every number uniform on
//! `[−scale, scale)`. B_0 is drawn too (and multiplies sin 0 = 0) so the stream layout does
//! not depend on k.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{GridSpec, MatrixGrid};
use crate::linalg::{CMat, C64};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FourierSpec {
    pub r: usize,
    pub order: usize,
    pub scale: f64,
    pub seed: u64,
}

impl Default for FourierSpec {
    fn default() -> Self {
        Self {
            r: 2,
            order: 3,
            scale: 0.3,
            seed: 0,
        }
    }
}

pub fn fourier_tau(spec: GridSpec, f: &FourierSpec) -> Result<MatrixGrid> {
    if f.r == 0 || !(f.scale >= 0.0) || !f.scale.is_finite() {
        return Err(Error::Config(format!(
            "synthetic potential needs r >= 1 and a finite non-negative scale (got r = {}, scale = {})",
            f.r, f.scale
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(f.seed);
    let draw = |rng: &mut ChaCha8Rng| {
        CMat::from_fn(f.r, f.r, |_, _| {
            let re = rng.gen_range(-f.scale..=f.scale);
            let im = rng.gen_range(-f.scale..=f.scale);
            C64::new(re, im)
        })
    };
    let coeffs: Vec<(CMat, CMat)> = (0..=f.order)
        .map(|_| {
            let a = draw(&mut rng);
            let b = draw(&mut rng);
            (a, b)
        })
        .collect();
    let values = spec
        .points()
        .map(|x| {
            let mut t = CMat::zeros(f.r, f.r);
            for (k, (a, b)) in coeffs.iter().enumerate() {
                let w = 2.0 * PI * k as f64 * x;
                t += a * C64::new(w.cos(), 0.0) + b * C64::new(w.sin(), 0.0);
            }
            (&t + t.adjoint()) * C64::new(0.5, 0.0)
        })
        .collect();
    MatrixGrid::hermitian(spec, values)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic_and_hermitian() {
        let spec = GridSpec::new(32).unwrap();
        let f = FourierSpec {
            seed: 7,
            ..FourierSpec::default()
        };
        let a = fourier_tau(spec, &f).unwrap();
        let b = fourier_tau(spec, &f).unwrap();
        assert_eq!(a, b);
        assert!(a.is_hermitian());
        assert_eq!(a.hermitian_defect(), 0.0);
        let c = fourier_tau(spec, &FourierSpec { seed: 8, ..f }).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn scale_bounds_the_values() {
        let spec = GridSpec::new(64).unwrap();
        let f = FourierSpec {
            r: 1,
            order: 2,
            scale: 0.1,
            seed: 3,
        };
        let t = fourier_tau(spec, &f).unwrap();
        // at most 2(K+1) terms of size ≤ scale
        assert!(t.sup_norm() <= 0.1 * 2.0 * 3.0 + 1e-12);
        assert!(fourier_tau(spec, &FourierSpec { scale: -1.0, ..f }).is_err());
    }

    #[test]
    fn grid_refinement_samples_the_same_function() {
        let f = FourierSpec::default();
        let coarse = fourier_tau(GridSpec::new(16).unwrap(), &f).unwrap();
        let fine = fourier_tau(GridSpec::new(32).unwrap(), &f).unwrap();
        for i in 0..=16 {
            assert!(crate::linalg::frobenius(&(coarse.at(i) - fine.at(2 * i))) < 1e-14);
        }
    }
}
