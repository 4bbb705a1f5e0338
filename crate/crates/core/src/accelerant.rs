//! Accelerant synthesis from spectral data and the even/odd kernels built from it.

use std::f64::consts::PI;

use log::warn;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::grid::{GridSpec, MatrixGrid, SquareKernel};
use crate::linalg::{self, CMat, C64};
use crate::spectral::{bin_index, SpectralData, SpectralEntry};

/// One cell `Δ_n` of the partition.
#[derive(Debug, Clone)]
pub struct Bin {
    pub n: usize,
    /// Indices into the data entries.
    pub members: Vec<usize>,
    /// `β_n = I − Σ α_j`.
    pub beta: CMat,
    /// `γ_n = Σ λ̃_j α_j`.
    pub gamma: CMat,
    /// `λ̃_j = λ_j − πn`.
    pub tilde_lambdas: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct BinDecomposition {
    pub n_bins: usize,
    pub zero_index: Option<usize>,
    pub bins: Vec<Bin>,
    /// Largest bin index reached by the data; bins beyond it are not covered.
    pub covered_bins: usize,
    pub warnings: Vec<String>,
}

impl BinDecomposition {
    pub fn is_covered(&self) -> bool {
        self.covered_bins >= self.n_bins
    }
}

pub fn bin_decompose(data: &SpectralData, n_bins: usize) -> BinDecomposition {
    let r = data.r();
    let mut bins: Vec<Bin> = (1..=n_bins)
        .map(|n| Bin {
            n,
            members: Vec::new(),
            beta: linalg::identity(r),
            gamma: linalg::zeros(r),
            tilde_lambdas: Vec::new(),
        })
        .collect();
    let mut zero_index = None;
    for (j, e) in data.entries().iter().enumerate() {
        let n = bin_index(e.lambda);
        if n == 0 {
            zero_index = Some(j);
            continue;
        }
        if n > n_bins {
            break;
        }
        let bin = &mut bins[n - 1];
        let tilde = e.lambda - PI * n as f64;
        bin.members.push(j);
        bin.beta -= &e.alpha;
        bin.gamma += &e.alpha * C64::new(tilde, 0.0);
        bin.tilde_lambdas.push(tilde);
    }
    let covered_bins = bin_index(data.max_lambda());
    let mut warnings = Vec::new();
    if covered_bins < n_bins {
        let msg = format!(
            "data reach bin {covered_bins} only (largest lambda {}), fewer than the {n_bins} requested",
            data.max_lambda()
        );
        warn!("{msg}");
        warnings.push(msg);
    }
    for b in bins.iter().filter(|b| b.members.is_empty() && b.n <= covered_bins) {
        let msg = format!("bin {} is empty; beta = I there", b.n);
        warn!("{msg}");
        warnings.push(msg);
    }
    BinDecomposition {
        n_bins,
        zero_index,
        bins,
        covered_bins,
        warnings,
    }
}

/// `𝔅`-type data turned into a measure with an atom at 0: prepend `(0, I)`.
pub fn prepend_identity_at_zero(data: &SpectralData) -> Result<SpectralData> {
    if data.includes_zero() {
        return Err(Error::Precondition("data already include the lambda = 0 entry".into()));
    }
    let mut entries = vec![SpectralEntry::new(0.0, linalg::identity(data.r()))];
    entries.extend(data.entries().iter().cloned());
    SpectralData::new(data.r(), true, entries)
}

/// `H_N(x)` at one point, accumulated bin by bin.
fn accelerant_at(data: &SpectralData, dec: &BinDecomposition, x: f64) -> CMat {
    let r = data.r();
    let entries = data.entries();
    let mut h = match dec.zero_index {
        Some(j) => &entries[j].alpha * C64::new(2.0, 0.0) - linalg::identity(r),
        None => -linalg::identity(r),
    };
    for bin in &dec.bins {
        let pn = PI * bin.n as f64;
        // 2cos(2λx) − 2cos(2πnx) = −4 sin((λ + πn)x) sin(λ̃x)
        for (&j, &tilde) in bin.members.iter().zip(&bin.tilde_lambdas) {
            let lam = entries[j].lambda;
            let w = -4.0 * ((lam + pn) * x).sin() * (tilde * x).sin();
            if w != 0.0 {
                h += &entries[j].alpha * C64::new(w, 0.0);
            }
        }
        let c = -2.0 * (2.0 * pn * x).cos();
        h += &bin.beta * C64::new(c, 0.0);
    }
    h
}

/// Truncated accelerant `H_N = 2Σ cos(2λ_j x)α_j − I − 2Σ_{n≤N} cos(2πnx)I` on the grid.
pub fn build_accelerant(data: &SpectralData, spec: GridSpec, n_bins: usize) -> Result<MatrixGrid> {
    if !data.includes_zero() {
        return Err(Error::Precondition(
            "accelerant synthesis needs data with the lambda = 0 entry; prepend (0, I) for T_q-type data".into(),
        ));
    }
    let dec = bin_decompose(data, n_bins);
    let values: Vec<CMat> = (0..spec.len())
        .into_par_iter()
        .map(|i| linalg::hermitian_part(&accelerant_at(data, &dec, spec.point(i))))
        .collect();
    MatrixGrid::hermitian(spec, values)
}

/// `‖H_N − H_{N/2}‖₂`, an empirical proxy for the truncation tail.
pub fn tail_proxy(data: &SpectralData, spec: GridSpec, n_bins: usize) -> Result<f64> {
    let full = build_accelerant(data, spec, n_bins)?;
    let half = build_accelerant(data, spec, (n_bins / 2).max(1))?;
    Ok(full.sub(&half)?.l2_norm())
}

/// `H_e(x,t) = ½[H((x−t)/2) + H((x+t)/2)]`, `H_o = ½[H((x−t)/2) − H((x+t)/2)]` on the
/// grid square, reading H between nodes by linear interpolation.
pub fn build_heo(h: &MatrixGrid) -> (SquareKernel, SquareKernel) {
    let spec = h.spec();
    let half = |s: f64| h.eval_even(0.5 * s);
    kernels(spec, h.r(), |i, j| {
        let (x, t) = (spec.point(i), spec.point(j));
        (half(x - t), half(x + t))
    })
}

/// Same kernels from H sampled on the grid refined twice, so every argument `(x ± t)/2`
/// is a node and no interpolation enters.
pub fn build_heo_from_half_grid(h2: &MatrixGrid, spec: GridSpec) -> Result<(SquareKernel, SquareKernel)> {
    if h2.spec() != spec.refined(2) {
        return Err(Error::Shape(format!(
            "half-grid accelerant must have m = {}, got {}",
            2 * spec.m(),
            h2.spec().m()
        )));
    }
    Ok(kernels(spec, h2.r(), |i, j| {
        (h2.at(i.abs_diff(j)).clone(), h2.at(i + j).clone())
    }))
}

fn kernels(spec: GridSpec, r: usize, f: impl Fn(usize, usize) -> (CMat, CMat) + Sync) -> (SquareKernel, SquareKernel) {
    let n = spec.len();
    let pairs: Vec<(CMat, CMat)> = (0..n * n)
        .into_par_iter()
        .map(|k| {
            let (a, b) = f(k / n, k % n);
            ((&a + &b) * C64::new(0.5, 0.0), (&a - &b) * C64::new(0.5, 0.0))
        })
        .collect();
    let he = SquareKernel::from_fn(spec, r, |i, j| pairs[i * n + j].0.clone());
    let ho = SquareKernel::from_fn(spec, r, |i, j| pairs[i * n + j].1.clone());
    (he, ho)
}

/// Summary of an accelerant used in diagnostics output.
#[derive(Debug, Clone, Serialize)]
pub struct AccelerantSummary {
    pub n_bins: usize,
    pub covered_bins: usize,
    pub sup_norm: f64,
    pub tail_proxy: f64,
    pub warnings: Vec<String>,
}
