//! Spectral data `((λ_j, α_j))` and boundary values of the fundamental solutions.

use crate::error::{Error, Result};
use crate::grid::HERMITIAN_TOL;
use crate::linalg::{self, CMat, C64};

/// Eigenvalues of a PSD matrix may dip to `-PSD_TOL·‖α‖` from rounding.
pub const PSD_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct SpectralEntry {
    pub lambda: f64,
    pub alpha: CMat,
}

impl SpectralEntry {
    pub fn new(lambda: f64, alpha: CMat) -> Self {
        Self { lambda, alpha }
    }
}

/// Finite truncation of a spectral-data sequence.
///
/// With `includes_zero` the first entry is the `(0, α₀)` pair of an `S_τ`-type dataset;
/// otherwise the data are of `T_q` type and all λ are positive.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralData {
    r: usize,
    includes_zero: bool,
    entries: Vec<SpectralEntry>,
}

impl SpectralData {
    pub fn new(r: usize, includes_zero: bool, entries: Vec<SpectralEntry>) -> Result<Self> {
        validate(r, includes_zero, &entries)?;
        Ok(Self {
            r,
            includes_zero,
            entries,
        })
    }

    pub fn r(&self) -> usize {
        self.r
    }

    pub fn includes_zero(&self) -> bool {
        self.includes_zero
    }

    pub fn entries(&self) -> &[SpectralEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn lambdas(&self) -> Vec<f64> {
        self.entries.iter().map(|e| e.lambda).collect()
    }

    pub fn max_lambda(&self) -> f64 {
        self.entries.last().map(|e| e.lambda).unwrap_or(0.0)
    }

    /// Entries with positive λ (the `T_q` part).
    pub fn positive_entries(&self) -> &[SpectralEntry] {
        if self.includes_zero {
            &self.entries[1..]
        } else {
            &self.entries
        }
    }

    /// Spectral data of the unperturbed operator: `(0, I/2)` followed by `(πn, I)`.
    pub fn unperturbed(r: usize, n_max: usize) -> Self {
        let mut entries = vec![SpectralEntry::new(0.0, linalg::identity(r) * C64::new(0.5, 0.0))];
        entries.extend((1..=n_max).map(|n| SpectralEntry::new(std::f64::consts::PI * n as f64, linalg::identity(r))));
        Self {
            r,
            includes_zero: true,
            entries,
        }
    }
}

fn validate(r: usize, includes_zero: bool, entries: &[SpectralEntry]) -> Result<()> {
    if r == 0 {
        return Err(Error::Validation("matrix dimension r must be positive".into()));
    }
    for (idx, e) in entries.iter().enumerate() {
        if !e.lambda.is_finite() || e.lambda < 0.0 {
            return Err(Error::Validation(format!(
                "lambda at index {idx} must be finite and non-negative, got {}",
                e.lambda
            )));
        }
        if e.alpha.nrows() != r || e.alpha.ncols() != r {
            return Err(Error::Validation(format!(
                "alpha at index {idx} is {}x{}, expected {r}x{r}",
                e.alpha.nrows(),
                e.alpha.ncols()
            )));
        }
        if e.alpha.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::Validation(format!(
                "alpha at index {idx} has non-finite entries"
            )));
        }
        if idx > 0 && e.lambda <= entries[idx - 1].lambda {
            return Err(Error::Validation(format!("non-increasing lambda at index {idx}")));
        }
        if !linalg::is_hermitian(&e.alpha, HERMITIAN_TOL) {
            return Err(Error::Validation(format!(
                "alpha at index {idx} is not Hermitian (anti-Hermitian part {:e})",
                linalg::antihermitian_norm(&e.alpha)
            )));
        }
        let ev = linalg::hermitian_eigenvalues(&e.alpha);
        let scale = ev.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if scale == 0.0 {
            return Err(Error::Validation(format!("alpha at index {idx} is zero")));
        }
        if ev[0] < -PSD_TOL * scale {
            return Err(Error::Validation(format!(
                "alpha at index {idx} is not positive semidefinite (eigenvalue {:e})",
                ev[0]
            )));
        }
    }
    if includes_zero {
        let first = entries
            .first()
            .ok_or_else(|| Error::Validation("includes_zero set but no entries".into()))?;
        if first.lambda != 0.0 {
            return Err(Error::Validation(format!(
                "includes_zero set but entry 0 has lambda = {}",
                first.lambda
            )));
        }
        let ev = linalg::hermitian_eigenvalues(&first.alpha);
        if ev[0] <= 0.0 {
            return Err(Error::Validation("alpha at index 0 must be positive definite".into()));
        }
    } else if entries.first().map(|e| e.lambda == 0.0).unwrap_or(false) {
        return Err(Error::Validation(
            "lambda = 0 entry present but includes_zero is false".into(),
        ));
    }
    Ok(())
}

/// Index of the partition cell `Δ_n` containing `lambda`: `Δ₀ = {0}`, `Δ₁ = (0, 3π/2]`,
/// `Δ_n = (πn − π/2, πn + π/2]`. Computed as `max(1, ⌈λ/π − 1/2⌉)`, so a value sitting on a
/// boundary `πn + π/2` goes to the lower cell.
pub fn bin_index(lambda: f64) -> usize {
    if lambda <= 0.0 {
        return 0;
    }
    ((lambda / std::f64::consts::PI - 0.5).ceil().max(1.0)) as usize
}

/// Description of the binning rule recorded in output metadata.
pub const BINNING_RULE: &str = "bin(lambda) = max(1, ceil(lambda/pi - 1/2)); boundary values pi*n + pi/2 go to bin n";

/// `φ(1,λ,τ)`, `ψ(1,λ,τ)`, `φ(1,λ,−τ)`, `ψ(1,λ,−τ)` at one spectral parameter.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryValues {
    pub lambda: C64,
    pub phi_tau: CMat,
    pub psi_tau: CMat,
    pub phi_mtau: CMat,
    pub psi_mtau: CMat,
}
