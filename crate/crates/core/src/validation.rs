//! Finite-truncation checks of the conditions characterizing spectral data, and the
//! positivity test for accelerants.
//!
//! (A1) and (A2) are bookkeeping over the bins `Δ_n`; (A3) and (A4) are decided through the
//! positivity of `I + ℋ_e` and `I + ℋ_o`, discretized by symmetrized Nyström matrices.

use serde::Serialize;

use crate::accelerant::{bin_decompose, build_accelerant, build_heo_from_half_grid};
use crate::error::{Error, Result};
use crate::grid::{trapezoid_weights, GridSpec, MatrixGrid, SquareKernel};
use crate::linalg::{self, CMat, C64};
use crate::spectral::{bin_index, SpectralData};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Pass,
    Fail,
    Inconclusive,
}

/// Pass/fail cut for the smallest eigenvalue of `I + ℋ_e`, `I + ℋ_o`.
pub const POSITIVITY_THRESHOLD: f64 = 1e-6;
/// Relative rank threshold for the α_j.
pub const RANK_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Serialize)]
pub struct A1Report {
    /// `Σ |λ̃_j|²` over bins `1..=n_bins`.
    pub tilde_sum: f64,
    pub max_bin_count: usize,
    /// `Σ ‖β_n‖_F²`.
    pub beta_sum: f64,
    /// Cumulative `Σ|λ̃|² + Σ‖β‖²` after each bin.
    pub trend: Vec<f64>,
    /// Share of the total contributed by the last quarter of the bins.
    pub last_quarter_share: f64,
    pub verdict: Verdict,
}

#[derive(Debug, Clone, Serialize)]
pub struct A2Report {
    pub n0_found: Option<usize>,
    /// Per N: cumulative rank sum over `Δ_1..Δ_N`.
    pub counts: Vec<usize>,
    /// Per N: `N·r`.
    pub expected: Vec<usize>,
    pub verdict: Verdict,
}

#[derive(Debug, Clone, Serialize)]
pub struct PositivityReport {
    pub min_eig: f64,
    /// Nodal values of the eigenfunction of the smallest eigenvalue, normalized in L₂; one
    /// `[re, im]` pair per component.
    pub near_null: Vec<Vec<[f64; 2]>>,
    pub verdict: Verdict,
}

#[derive(Debug, Clone, Serialize)]
pub struct A3A4Report {
    /// Truncation actually used for the accelerant.
    pub n_bins: usize,
    pub m: usize,
    pub a3: PositivityReport,
    pub a4: PositivityReport,
}

#[derive(Debug, Clone, Serialize)]
pub struct ConditionReport {
    pub n_bins: usize,
    pub covered_bins: usize,
    pub a1: A1Report,
    pub a2: A2Report,
    pub a3_a4: A3A4Report,
    pub overall: Verdict,
}

fn covered(data: &SpectralData) -> usize {
    bin_index(data.max_lambda())
}

pub fn check_a1(data: &SpectralData, n_bins: usize) -> A1Report {
    let dec = bin_decompose(data, n_bins);
    let r = data.r();
    let mut trend = Vec::with_capacity(n_bins);
    let (mut tilde_sum, mut beta_sum) = (0.0, 0.0);
    let mut contrib = Vec::with_capacity(n_bins);
    for b in &dec.bins {
        let t: f64 = b.tilde_lambdas.iter().map(|x| x * x).sum();
        let beta = linalg::frobenius(&b.beta).powi(2);
        tilde_sum += t;
        beta_sum += beta;
        contrib.push(t + beta);
        trend.push(tilde_sum + beta_sum);
    }
    let max_bin_count = dec.bins.iter().map(|b| b.members.len()).max().unwrap_or(0);
    let tail_count = dec.bins[n_bins / 2..]
        .iter()
        .map(|b| b.members.len())
        .max()
        .unwrap_or(0);
    let total = tilde_sum + beta_sum;
    let q = (n_bins / 4).max(1);
    let last: f64 = contrib[n_bins - q..].iter().sum();
    let first: f64 = contrib[..q].iter().sum();
    let last_quarter_share = if total > 0.0 { last / total } else { 0.0 };
    let verdict = if !dec.is_covered() {
        Verdict::Inconclusive
    } else if total <= 1e-14 || (last_quarter_share < 0.1 && tail_count <= r) {
        Verdict::Pass
    } else if last >= 0.5 * first {
        Verdict::Fail
    } else {
        Verdict::Inconclusive
    };
    A1Report {
        tilde_sum,
        max_bin_count,
        beta_sum,
        trend,
        last_quarter_share,
        verdict,
    }
}

pub fn check_a2(data: &SpectralData, n_bins: usize) -> A2Report {
    let r = data.r();
    let mut per_bin = vec![0usize; n_bins];
    for e in data.positive_entries() {
        let n = bin_index(e.lambda);
        if n <= n_bins {
            per_bin[n - 1] += linalg::numerical_rank(&e.alpha, RANK_TOL);
        }
    }
    let counts: Vec<usize> = per_bin
        .iter()
        .scan(0, |acc, k| {
            *acc += k;
            Some(*acc)
        })
        .collect();
    let expected: Vec<usize> = (1..=n_bins).map(|n| n * r).collect();
    let mut n0_found = None;
    for n in (1..=n_bins).rev() {
        if counts[n - 1] != expected[n - 1] {
            break;
        }
        n0_found = Some(n);
    }
    let verdict = if covered(data) < n_bins {
        Verdict::Inconclusive
    } else if n0_found.is_some() {
        Verdict::Pass
    } else {
        Verdict::Fail
    };
    A2Report {
        n0_found,
        counts,
        expected,
        verdict,
    }
}

/// Symmetrized Nyström matrices of `I + ℋ_e` and `I + ℋ_o`. H is synthesized on the twice
/// refined grid so that every kernel argument `(x ± t)/2` is a node.
pub fn completeness_matrices(data: &SpectralData, spec: GridSpec, n_bins: usize) -> Result<(CMat, CMat)> {
    let h2 = build_accelerant(data, spec.refined(2), n_bins)?;
    let (he, ho) = build_heo_from_half_grid(&h2, spec)?;
    Ok((he.symmetrized_nystrom(), ho.symmetrized_nystrom()))
}

fn positivity(a: &CMat, spec: GridSpec, r: usize, pass_at: f64, capped: bool) -> PositivityReport {
    let (vals, vecs) = linalg::hermitian_eigen(a);
    let w = trapezoid_weights(spec);
    let v = vecs.column(0);
    let mut near_null: Vec<Vec<[f64; 2]>> = (0..spec.len())
        .map(|i| {
            (0..r)
                .map(|p| {
                    let z = v[i * r + p] / w[i].sqrt();
                    [z.re, z.im]
                })
                .collect()
        })
        .collect();
    let norm: f64 = near_null
        .iter()
        .zip(&w)
        .map(|(row, wi)| wi * row.iter().map(|z| z[0] * z[0] + z[1] * z[1]).sum::<f64>())
        .sum::<f64>()
        .sqrt();
    for row in &mut near_null {
        for z in row {
            z[0] /= norm;
            z[1] /= norm;
        }
    }
    let min_eig = vals[0];
    let verdict = if min_eig <= POSITIVITY_THRESHOLD {
        Verdict::Fail
    } else if min_eig >= pass_at && !capped {
        Verdict::Pass
    } else {
        Verdict::Inconclusive
    };
    PositivityReport {
        min_eig,
        near_null,
        verdict,
    }
}

/// Smallest eigenvalues of `I + ℋ_e` (A3) and `I + ℋ_o` (A4). Values in
/// `(1e−6, 1e−6 + 10h²)` are inconclusive, as is any pass when the data stop short of
/// `n_bins` (the truncation is then lowered to the covered bins).
pub fn check_a3_a4(data: &SpectralData, spec: GridSpec, n_bins: usize) -> Result<A3A4Report> {
    let reach = covered(data).min(n_bins).max(1);
    let capped = reach < n_bins;
    let (e, o) = completeness_matrices(data, spec, reach)?;
    let h = spec.step();
    let pass_at = POSITIVITY_THRESHOLD + 10.0 * h * h;
    Ok(A3A4Report {
        n_bins: reach,
        m: spec.m(),
        a3: positivity(&e, spec, data.r(), pass_at, capped),
        a4: positivity(&o, spec, data.r(), pass_at, capped),
    })
}

pub fn check_conditions(data: &SpectralData, spec: GridSpec, n_bins: usize) -> Result<ConditionReport> {
    if n_bins == 0 {
        return Err(Error::Config("n_bins must be positive".into()));
    }
    if !data.includes_zero() {
        return Err(Error::Precondition(
            "condition checks need the lambda = 0 entry; prepend (0, I) for T_q-type data".into(),
        ));
    }
    let a1 = check_a1(data, n_bins);
    let a2 = check_a2(data, n_bins);
    let a3_a4 = check_a3_a4(data, spec, n_bins)?;
    let verdicts = [a1.verdict, a2.verdict, a3_a4.a3.verdict, a3_a4.a4.verdict];
    let overall = if verdicts.contains(&Verdict::Fail) {
        Verdict::Fail
    } else if verdicts.contains(&Verdict::Inconclusive) {
        Verdict::Inconclusive
    } else {
        Verdict::Pass
    };
    Ok(ConditionReport {
        n_bins,
        covered_bins: covered(data),
        a1,
        a2,
        a3_a4,
        overall,
    })
}

/// Smallest eigenvalue of the symmetrized Nyström matrix of `I + ℋ`, `(ℋf)(x) = ∫₀¹ H(x−t)f(t)dt`.
pub fn accelerant_positivity(h: &MatrixGrid, spec: GridSpec) -> f64 {
    let h = if h.spec() == spec { h.clone() } else { h.resample(spec) };
    let k = SquareKernel::from_fn(spec, h.r(), |i, j| h.at(i.abs_diff(j)).clone());
    linalg::hermitian_eigenvalues(&k.symmetrized_nystrom())[0]
}

/// `|⟨u, g⟩| / (‖u‖‖g‖)` in the trapezoid L₂ inner product, for scalar functions (r = 1)
/// given as `[re, im]` nodal values.
pub fn l2_correlation(spec: GridSpec, u: &[Vec<[f64; 2]>], g: impl Fn(f64) -> f64) -> f64 {
    let w = trapezoid_weights(spec);
    let (mut dot, mut nu, mut ng) = (C64::new(0.0, 0.0), 0.0, 0.0);
    for (i, row) in u.iter().enumerate() {
        let z = C64::new(row[0][0], row[0][1]);
        let gi = g(spec.point(i));
        dot += z * gi * w[i];
        nu += z.norm_sqr() * w[i];
        ng += gi * gi * w[i];
    }
    dot.norm() / (nu * ng).sqrt()
}

/// Largest gap between the `k` lowest entries of two ascending spectra.
pub fn lowest_spectrum_distance(a: &[f64], b: &[f64], k: usize) -> f64 {
    a.iter().zip(b).take(k).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::krein::solve_krein;
    use crate::spectral::SpectralEntry;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::PI;

    fn scalar(v: f64) -> CMat {
        CMat::from_element(1, 1, C64::new(v, 0.0))
    }

    fn nu0_without(r: usize, n_max: usize, drop: &[usize]) -> SpectralData {
        let base = SpectralData::unperturbed(r, n_max);
        let entries = base
            .entries()
            .iter()
            .enumerate()
            .filter(|(j, _)| !drop.contains(j))
            .map(|(_, e)| e.clone())
            .collect();
        SpectralData::new(r, true, entries).unwrap()
    }

    fn shifted(n_max: usize, shift: impl Fn(usize) -> f64) -> SpectralData {
        let mut entries = vec![SpectralEntry::new(0.0, scalar(0.5))];
        entries.extend((1..=n_max).map(|n| SpectralEntry::new(PI * n as f64 + shift(n), scalar(1.0))));
        SpectralData::new(1, true, entries).unwrap()
    }

    #[test]
    fn a1_examples() {
        let rep = check_a1(&SpectralData::unperturbed(2, 32), 32);
        assert_eq!(rep.tilde_sum, 0.0);
        assert_eq!(rep.beta_sum, 0.0);
        assert_eq!(rep.max_bin_count, 1);
        assert_eq!(rep.verdict, Verdict::Pass);

        let rep = check_a1(&shifted(64, |n| 1.0 / n as f64), 64);
        let direct: f64 = (1..=64).map(|n| 1.0 / (n * n) as f64).sum();
        assert_abs_diff_eq!(rep.tilde_sum, direct, epsilon = 1e-12);
        assert_eq!(rep.verdict, Verdict::Pass);

        let rep = check_a1(&shifted(64, |_| 0.4), 64);
        assert_abs_diff_eq!(rep.tilde_sum, 64.0 * 0.16, epsilon = 1e-10);
        assert_eq!(rep.verdict, Verdict::Fail);

        let rep = check_a1(&SpectralData::unperturbed(1, 8), 32);
        assert_eq!(rep.verdict, Verdict::Inconclusive);
    }

    #[test]
    fn a2_examples() {
        let rep = check_a2(&SpectralData::unperturbed(2, 16), 16);
        assert_eq!(rep.n0_found, Some(1));
        assert_eq!(rep.verdict, Verdict::Pass);

        // rank-1 entry in Δ₃, extra rank-1 entry in Δ₄
        let p = CMat::from_row_slice(
            2,
            2,
            &[
                C64::new(1.0, 0.0),
                C64::new(0.0, 0.0),
                C64::new(0.0, 0.0),
                C64::new(0.0, 0.0),
            ],
        );
        let q = linalg::identity(2) - &p;
        let mut entries = SpectralData::unperturbed(2, 8).entries().to_vec();
        entries[3].alpha = p;
        entries.insert(5, SpectralEntry::new(4.0 * PI + 0.2, q));
        let d = SpectralData::new(2, true, entries).unwrap();
        let rep = check_a2(&d, 8);
        assert_eq!(rep.n0_found, Some(4));

        let rep = check_a2(&nu0_without(1, 16, &[5]), 16);
        assert_eq!(rep.n0_found, None);
        assert_eq!(rep.verdict, Verdict::Fail);
    }

    #[test]
    fn intact_data_gives_identity() {
        let spec = GridSpec::new(32).unwrap();
        let (e, o) = completeness_matrices(&SpectralData::unperturbed(2, 8), spec, 8).unwrap();
        let id = CMat::identity(e.nrows(), e.ncols());
        assert!(linalg::frobenius(&(e - &id)) < 1e-12);
        assert!(linalg::frobenius(&(o - &id)) < 1e-12);
    }

    #[test]
    fn deleted_line_has_cosine_and_sine_null_directions() {
        let spec = GridSpec::new(64).unwrap();
        let d = nu0_without(1, 16, &[1]);
        let rep = check_a3_a4(&d, spec, 16).unwrap();
        assert!(rep.a3.min_eig.abs() < 1e-10, "{}", rep.a3.min_eig);
        assert!(rep.a4.min_eig.abs() < 1e-10, "{}", rep.a4.min_eig);
        assert_eq!(rep.a3.verdict, Verdict::Fail);
        assert!(l2_correlation(spec, &rep.a3.near_null, |x| (PI * x).cos()) > 0.999);
        assert!(l2_correlation(spec, &rep.a4.near_null, |x| (PI * x).sin()) > 0.999);
    }

    #[test]
    fn deleting_k_lines_gives_k_null_directions() {
        let spec = GridSpec::new(48).unwrap();
        let d = nu0_without(1, 12, &[2, 5, 7]);
        let (e, _) = completeness_matrices(&d, spec, 12).unwrap();
        let ev = linalg::hermitian_eigenvalues(&e);
        assert_eq!(ev.iter().filter(|v| v.abs() < 1e-8).count(), 3);
        assert!(ev[3] > 0.5);
    }

    #[test]
    fn short_data_is_inconclusive() {
        let spec = GridSpec::new(32).unwrap();
        let rep = check_conditions(&SpectralData::unperturbed(1, 4), spec, 16).unwrap();
        assert_eq!(rep.overall, Verdict::Inconclusive);
        let rep = check_conditions(&SpectralData::unperturbed(1, 16), spec, 16).unwrap();
        assert_eq!(rep.overall, Verdict::Pass);
        assert_abs_diff_eq!(rep.a3_a4.a3.min_eig, 1.0, epsilon = 1e-10);
    }

    #[test]
    fn positivity_examples_and_agreement_with_krein() {
        let spec = GridSpec::new(64).unwrap();
        let zero = MatrixGrid::zeros(spec, 1);
        assert_abs_diff_eq!(accelerant_positivity(&zero, spec), 1.0, epsilon = 1e-12);
        for c in [-2.0, -1.5, -1.05, -0.95, -0.5, 0.8] {
            let h = MatrixGrid::constant(spec, &scalar(c)).unwrap();
            let lam = accelerant_positivity(&h, spec);
            // rank-one kernel: the only nontrivial eigenvalue is 1 + c
            assert_abs_diff_eq!(lam, (1.0 + c).min(1.0), epsilon = 1e-12);
            assert_eq!(lam > 0.0, solve_krein(&h, spec).is_ok(), "c = {c}");
        }
        for amp in [-1.2, -0.7, 0.5, 3.0] {
            let h = MatrixGrid::from_fn(spec, 1, |x| scalar(amp * (2.0 * PI * x).cos() - 0.3)).unwrap();
            let lam = accelerant_positivity(&h, spec);
            assert_eq!(lam > 0.0, solve_krein(&h, spec).is_ok(), "amp = {amp}, lam = {lam}");
        }
    }

    #[test]
    fn full_spectrum_splits_into_even_and_odd() {
        // the full-interval operator on a grid of step h/2 matches ℋ_e ⊕ ℋ_o on step h
        let spec = GridSpec::new(64).unwrap();
        let fine = spec.refined(2);
        let d = shifted(8, |n| 0.3 / n as f64);
        let h_fine = build_accelerant(&d, fine, 8).unwrap();
        let full = {
            let k = SquareKernel::from_fn(fine, 1, |i, j| h_fine.at(i.abs_diff(j)).clone());
            linalg::hermitian_eigenvalues(&k.symmetrized_nystrom())
        };
        let (e, o) = completeness_matrices(&d, spec, 8).unwrap();
        let mut split = linalg::hermitian_eigenvalues(&e);
        split.extend(linalg::hermitian_eigenvalues(&o));
        split.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let dist = lowest_spectrum_distance(&full, &split, 10);
        assert!(dist < 5.0 * spec.step(), "{dist}");
    }
}
