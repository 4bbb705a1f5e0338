//! End-to-end workflows: reconstruction from spectral data and the τ → data → τ̂ round trip.

use log::info;
use serde::Serialize;

use crate::accelerant::{bin_decompose, build_accelerant, prepend_identity_at_zero, tail_proxy, AccelerantSummary};
use crate::direct::{spectral_data_report, DirectOptions, DirectReport};
use crate::error::Result;
use crate::grid::{GridSpec, MatrixGrid};
use crate::krein::theta_detailed;
use crate::linalg::{self, C64};
use crate::miura::{miura, PotentialPrimitive};
use crate::spectral::SpectralData;

#[derive(Debug, Clone)]
pub struct InverseOutput {
    pub tau: MatrixGrid,
    pub sigma: PotentialPrimitive,
    pub accelerant: MatrixGrid,
    pub diagnostics: InverseDiagnostics,
}

#[derive(Debug, Clone, Serialize)]
pub struct InverseDiagnostics {
    pub n_bins: usize,
    pub m: usize,
    /// The data had no λ = 0 entry and `(0, I)` was prepended.
    pub prepended_zero: bool,
    pub richardson: bool,
    pub krein_residual: f64,
    pub min_pivot: f64,
    pub tau_hermitian_defect: f64,
    pub accelerant: AccelerantSummary,
}

/// Steps: measure (prepending `(0, I)` when needed), accelerant, Krein solve, τ and σ.
///
/// With `richardson`, the Krein equation is also solved on the twice refined grid and
/// `τ̂ = (4τ_{h/2} − τ_h)/3` at the original nodes, cancelling the h² term of the trapezoid
/// discretization.
pub fn inverse(data: &SpectralData, spec: GridSpec, n_bins: usize, richardson: bool) -> Result<InverseOutput> {
    let prepended_zero = !data.includes_zero();
    let owned;
    let data = if prepended_zero {
        owned = prepend_identity_at_zero(data)?;
        &owned
    } else {
        data
    };
    let h = build_accelerant(data, spec, n_bins)?;
    let dec = bin_decompose(data, n_bins);
    let summary = AccelerantSummary {
        n_bins,
        covered_bins: dec.covered_bins,
        sup_norm: h.sup_norm(),
        tail_proxy: tail_proxy(data, spec, n_bins)?,
        warnings: dec.warnings,
    };
    let coarse = theta_detailed(&h, spec)?;
    let mut krein_residual = coarse.solution.residual;
    let mut min_pivot = coarse.solution.min_pivot;
    let mut tau_hermitian_defect = coarse.hermitian_defect;
    let tau = if richardson {
        let fine_spec = spec.refined(2);
        let fine = theta_detailed(&build_accelerant(data, fine_spec, n_bins)?, fine_spec)?;
        krein_residual = krein_residual.max(fine.solution.residual);
        min_pivot = min_pivot.min(fine.solution.min_pivot);
        tau_hermitian_defect = tau_hermitian_defect.max(fine.hermitian_defect);
        let values = (0..spec.len())
            .map(|i| (fine.tau.at(2 * i) * C64::new(4.0, 0.0) - coarse.tau.at(i)) * C64::new(1.0 / 3.0, 0.0))
            .collect();
        let t = MatrixGrid::new(spec, values)?;
        if coarse.solution.hermitian {
            t.hermitized()
        } else {
            t
        }
    } else {
        coarse.tau
    };
    info!(
        "reconstructed tau on m = {} (Krein residual {krein_residual:e}, min pivot {min_pivot:e})",
        spec.m()
    );
    let sigma = miura(&tau);
    Ok(InverseOutput {
        diagnostics: InverseDiagnostics {
            n_bins,
            m: spec.m(),
            prepended_zero,
            richardson,
            krein_residual,
            min_pivot,
            tau_hermitian_defect,
            accelerant: summary,
        },
        tau,
        sigma,
        accelerant: h,
    })
}

/// Errors of one reconstruction against the source τ.
#[derive(Debug, Clone, Serialize)]
pub struct RoundtripRun {
    pub n_bins: usize,
    pub m: usize,
    pub abs_l2: f64,
    /// `‖τ̂ − τ‖₂ / ‖τ‖₂`, or the absolute error when τ = 0.
    pub rel_l2: f64,
    pub sup_err: f64,
    pub krein_residual: f64,
    pub identity_residual: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct SpectralComparison {
    pub entries_input: usize,
    pub entries_rederived: usize,
    /// `max_j |λ̂_j − λ_j|`; absent when the entry counts differ.
    pub lambda_dev: Option<f64>,
    /// `max_j ‖α̂_j − α_j‖_F`; absent when the entry counts differ.
    pub alpha_dev: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct RoundtripReport {
    pub run: RoundtripRun,
    pub spectra: Option<SpectralComparison>,
    /// Runs over {n_bins, 2·n_bins} × {m, 2m}; empty unless requested.
    pub convergence: Vec<RoundtripRun>,
    pub warnings: Vec<String>,
}

pub struct RoundtripArtifacts {
    pub data: SpectralData,
    pub direct: DirectReport,
    pub inverse: InverseOutput,
}

fn errors(tau: &MatrixGrid, tau_hat: &MatrixGrid) -> Result<(f64, f64, f64)> {
    let d = tau_hat.sub(tau)?;
    let abs = d.l2_norm();
    let base = tau.l2_norm();
    let rel = if base > 0.0 { abs / base } else { abs };
    Ok((abs, rel, d.sup_norm()))
}

/// Settings shared by the round-trip runs.
#[derive(Debug, Clone, Serialize)]
pub struct RoundtripOptions {
    pub direct: DirectOptions,
    pub richardson: bool,
    /// Recompute the spectral data of τ̂ and compare with the input data.
    pub rederive: bool,
    /// Add the {n_bins, 2·n_bins} × {m, 2m} table.
    pub convergence: bool,
}

impl Default for RoundtripOptions {
    fn default() -> Self {
        Self {
            direct: DirectOptions::default(),
            richardson: true,
            rederive: true,
            convergence: false,
        }
    }
}

pub fn roundtrip_run(
    tau: &MatrixGrid,
    n_bins: usize,
    opts: &RoundtripOptions,
) -> Result<(RoundtripRun, RoundtripArtifacts)> {
    let direct = spectral_data_report(tau, n_bins, &opts.direct)?;
    let inverse = inverse(&direct.data, tau.spec(), n_bins, opts.richardson)?;
    let (abs_l2, rel_l2, sup_err) = errors(tau, &inverse.tau)?;
    let run = RoundtripRun {
        n_bins,
        m: tau.spec().m(),
        abs_l2,
        rel_l2,
        sup_err,
        krein_residual: inverse.diagnostics.krein_residual,
        identity_residual: direct.identity_residual,
    };
    info!(
        "round trip n_bins = {n_bins}, m = {}: relative L2 error {rel_l2:e}",
        run.m
    );
    Ok((
        run,
        RoundtripArtifacts {
            data: direct.data.clone(),
            direct,
            inverse,
        },
    ))
}

/// Entry-by-entry comparison of two spectral data sets.
pub fn compare_spectra(input: &SpectralData, rederived: &SpectralData) -> SpectralComparison {
    let same = input.len() == rederived.len();
    let (mut dl, mut da) = (0.0f64, 0.0f64);
    if same {
        for (a, b) in input.entries().iter().zip(rederived.entries()) {
            dl = dl.max((a.lambda - b.lambda).abs());
            da = da.max(linalg::frobenius(&(&a.alpha - &b.alpha)));
        }
    }
    SpectralComparison {
        entries_input: input.len(),
        entries_rederived: rederived.len(),
        lambda_dev: same.then_some(dl),
        alpha_dev: same.then_some(da),
    }
}

/// τ → spectral data → τ̂, optionally re-deriving the data of τ̂ and sweeping the grid and
/// truncation (τ is resampled onto the finer grid by linear interpolation).
pub fn roundtrip(
    tau: &MatrixGrid,
    n_bins: usize,
    opts: &RoundtripOptions,
) -> Result<(RoundtripReport, RoundtripArtifacts)> {
    let (run, art) = roundtrip_run(tau, n_bins, opts)?;
    let mut warnings = art.direct.warnings.clone();
    warnings.extend(art.inverse.diagnostics.accelerant.warnings.iter().cloned());
    let spectra = if opts.rederive {
        let again = spectral_data_report(&art.inverse.tau, n_bins, &opts.direct)?;
        warnings.extend(again.warnings.iter().cloned());
        Some(compare_spectra(&art.data, &again.data))
    } else {
        None
    };
    let mut table = Vec::new();
    if opts.convergence {
        let fine = tau.resample(tau.spec().refined(2));
        for (n, t) in [(n_bins, tau), (2 * n_bins, tau), (n_bins, &fine), (2 * n_bins, &fine)] {
            if n == n_bins && t.spec() == tau.spec() {
                table.push(run.clone());
            } else {
                table.push(roundtrip_run(t, n, opts)?.0);
            }
        }
    }
    Ok((
        RoundtripReport {
            run,
            spectra,
            convergence: table,
            warnings,
        },
        art,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::CMat;
    use crate::miura::miura_equals;

    #[test]
    fn zero_potential_round_trip() {
        let spec = GridSpec::new(64).unwrap();
        let tau = MatrixGrid::zeros(spec, 2);
        let (rep, _) = roundtrip(&tau, 8, &RoundtripOptions::default()).unwrap();
        assert!(rep.run.sup_err <= 1e-8, "{}", rep.run.sup_err);
        let s = rep.spectra.unwrap();
        assert!(s.lambda_dev.unwrap() < 1e-8);
    }

    #[test]
    fn unperturbed_data_inverts_to_zero() {
        let spec = GridSpec::new(32).unwrap();
        let out = inverse(&SpectralData::unperturbed(1, 16), spec, 16, false).unwrap();
        assert_eq!(out.tau.sup_norm(), 0.0);
        assert_eq!(out.sigma.sigma.sup_norm(), 0.0);
        assert!(!out.diagnostics.prepended_zero);
    }

    #[test]
    fn zero_free_unperturbed_data_give_a_root_of_zero() {
        // μ₀ without its atom at 0: after prepending (0, I) the accelerant is H ≡ I
        let spec = GridSpec::new(128).unwrap();
        let nu0 = SpectralData::unperturbed(1, 16);
        let mu0 = SpectralData::new(1, false, nu0.positive_entries().to_vec()).unwrap();
        let out = inverse(&mu0, spec, 16, true).unwrap();
        assert!(out.diagnostics.prepended_zero);
        let zero = miura(&MatrixGrid::zeros(spec, 1));
        assert!(miura_equals(&out.sigma, &zero, 1e-5).unwrap());
        let expect =
            MatrixGrid::from_fn(spec, 1, |x| CMat::from_element(1, 1, C64::new(1.0 / (1.0 + x), 0.0))).unwrap();
        assert!(out.tau.sub(&expect).unwrap().sup_norm() < 1e-5);
    }
}
