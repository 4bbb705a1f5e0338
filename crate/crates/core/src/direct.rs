//! Direct spectral problem: boundary values of the fundamental solutions, the Weyl–Titchmarsh
//! function `m_τ`, eigenvalues and matrix norming constants.
//!
//! The 2r×2r system `𝒲' = 𝒬(x,λ,τ)𝒲` is integrated with the fourth-order commutator-free
//! Magnus scheme: each grid cell contributes two exact exponentials `exp((h/2)𝒬(λ, T))` with
//! `T` a fixed combination of τ at the two Gauss points. Because `𝒬² = (T² − λ²) ⊕ (T² − λ²)`,
//! each exponential is a closed-form function of `T`, and the products preserve the identity
//! `𝒲*(λ̄, −τ*)𝒲(λ, τ) = I` to rounding.

use std::f64::consts::PI;

use log::{debug, warn};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::grid::MatrixGrid;
use crate::linalg::{self, CMat, C64, ZERO};
use crate::spectral::{bin_index, BoundaryValues, SpectralData, SpectralEntry};

/// Tunable parameters of the eigenvalue search and residue extraction.
#[derive(Debug, Clone, Serialize)]
pub struct DirectOptions {
    pub scan_step: f64,
    pub contour_points: usize,
    /// Kernel singular values above `rank_tol·max(1, ‖φ(1,λ)‖)` are reported as warnings.
    pub rank_tol: f64,
    /// Width of the final bracket around each root.
    pub refine_tol: f64,
    pub merge_tol: f64,
    /// Cross-check every complete bin against an argument-principle contour count.
    pub verify_bins: bool,
}

impl Default for DirectOptions {
    fn default() -> Self {
        Self {
            scan_step: 0.1,
            contour_points: 64,
            rank_tol: 1e-7,
            refine_tol: 1e-10,
            merge_tol: 1e-8,
            verify_bins: false,
        }
    }
}

impl DirectOptions {
    pub fn check(&self) -> Result<()> {
        if !(self.scan_step > 0.0) || self.scan_step >= PI / 4.0 {
            return Err(Error::Config(format!(
                "scan_step must lie in (0, pi/4), got {}",
                self.scan_step
            )));
        }
        if self.contour_points < 8 {
            return Err(Error::Config("contour_points must be at least 8".into()));
        }
        Ok(())
    }
}

enum Scheme {
    Hermitian {
        eigenvalues: Vec<Vec<f64>>,
        /// Entry 0 is `U₀*`; entry k is `U_k* U_{k−1}`; row-major r×r.
        transitions: Vec<Vec<C64>>,
        back: Vec<C64>,
    },
    General(Vec<CMat>),
}

/// Precomputed per-cell data for integrating the fundamental system of one potential.
pub struct Propagator {
    r: usize,
    half_step: f64,
    hermitian: bool,
    scheme: Scheme,
}

fn flat(a: &CMat) -> Vec<C64> {
    let (n, m) = a.shape();
    let mut out = Vec::with_capacity(n * m);
    for i in 0..n {
        for j in 0..m {
            out.push(a[(i, j)]);
        }
    }
    out
}

/// `dst = P·src` with `P` r×r and `src` r×c, all row-major.
#[inline]
fn left_mul(p: &[C64], src: &[C64], dst: &mut [C64], r: usize, c: usize) {
    for i in 0..r {
        let row = &p[i * r..(i + 1) * r];
        for j in 0..c {
            let mut acc = ZERO;
            for k in 0..r {
                acc += row[k] * src[k * c + j];
            }
            dst[i * c + j] = acc;
        }
    }
}

/// `(cosh(s√μ), sinh(s√μ)/√μ)`; both are entire in μ.
#[inline]
fn cosh_sinhc(mu: C64, s: f64) -> (C64, C64) {
    if mu.im == 0.0 {
        let (c, sh) = cosh_sinhc_real(mu.re, s);
        return (C64::new(c, 0.0), C64::new(sh, 0.0));
    }
    let z = mu * (s * s);
    if z.norm() < 1e-8 {
        return (
            C64::new(1.0, 0.0) + z * 0.5 + z * z / 24.0,
            (C64::new(1.0, 0.0) + z / 6.0 + z * z / 120.0) * s,
        );
    }
    let w = z.sqrt();
    (w.cosh(), w.sinh() / w * s)
}

#[inline]
fn cosh_sinhc_real(mu: f64, s: f64) -> (f64, f64) {
    let z = mu * s * s;
    if z.abs() < 1e-8 {
        return (1.0 + 0.5 * z + z * z / 24.0, s * (1.0 + z / 6.0 + z * z / 120.0));
    }
    if z > 0.0 {
        let w = z.sqrt();
        (w.cosh(), s * w.sinh() / w)
    } else {
        let w = (-z).sqrt();
        (w.cos(), s * w.sin() / w)
    }
}

impl Propagator {
    pub fn new(tau: &MatrixGrid) -> Self {
        let r = tau.r();
        let spec = tau.spec();
        let c = 3f64.sqrt() / 6.0;
        let (g_lo, g_hi) = (0.5 - c, 0.5 + c);
        let (w_big, w_small) = (0.25 + c, 0.25 - c);
        let mut effective = Vec::with_capacity(2 * spec.m());
        for i in 0..spec.m() {
            let (a, b) = (tau.at(i), tau.at(i + 1));
            let t1 = a * C64::new(1.0 - g_lo, 0.0) + b * C64::new(g_lo, 0.0);
            let t2 = a * C64::new(1.0 - g_hi, 0.0) + b * C64::new(g_hi, 0.0);
            effective.push((&t1 * C64::new(w_big, 0.0) + &t2 * C64::new(w_small, 0.0)) * C64::new(2.0, 0.0));
            effective.push((&t1 * C64::new(w_small, 0.0) + &t2 * C64::new(w_big, 0.0)) * C64::new(2.0, 0.0));
        }
        let half_step = 0.5 * spec.step();
        let hermitian = tau.is_hermitian();
        let scheme = if hermitian {
            let mut eigenvalues = Vec::with_capacity(effective.len());
            let mut transitions = Vec::with_capacity(effective.len());
            let mut prev: Option<CMat> = None;
            for t in &effective {
                let (vals, vecs) = linalg::hermitian_eigen(t);
                eigenvalues.push(vals);
                let p = match &prev {
                    None => vecs.adjoint(),
                    Some(u) => vecs.adjoint() * u,
                };
                transitions.push(flat(&p));
                prev = Some(vecs);
            }
            Scheme::Hermitian {
                eigenvalues,
                transitions,
                back: flat(&prev.expect("grid has at least one cell")),
            }
        } else {
            Scheme::General(effective)
        };
        Self {
            r,
            half_step,
            hermitian,
            scheme,
        }
    }

    pub fn r(&self) -> usize {
        self.r
    }

    pub fn is_hermitian(&self) -> bool {
        self.hermitian
    }

    /// Advance the r×c column blocks `(a; b)` from x = 0 to x = 1 under `𝒬(λ, sign·τ)`.
    fn evolve(&self, lambda: C64, sign: f64, a: &mut Vec<C64>, b: &mut Vec<C64>, c: usize) {
        let r = self.r;
        let s = self.half_step;
        let l2 = lambda * lambda;
        match &self.scheme {
            Scheme::Hermitian {
                eigenvalues,
                transitions,
                back,
            } => {
                let mut tmp = vec![ZERO; r * c];
                for (t, p) in eigenvalues.iter().zip(transitions) {
                    left_mul(p, a, &mut tmp, r, c);
                    std::mem::swap(a, &mut tmp);
                    left_mul(p, b, &mut tmp, r, c);
                    std::mem::swap(b, &mut tmp);
                    for (i, &ti) in t.iter().enumerate() {
                        let ti = sign * ti;
                        let (ch, sh) = cosh_sinhc(C64::new(ti * ti, 0.0) - l2, s);
                        let d11 = ch - sh * ti;
                        let d22 = ch + sh * ti;
                        let d12 = lambda * sh;
                        for j in 0..c {
                            let (x, y) = (a[i * c + j], b[i * c + j]);
                            a[i * c + j] = d11 * x + d12 * y;
                            b[i * c + j] = d22 * y - d12 * x;
                        }
                    }
                }
                left_mul(back, a, &mut tmp, r, c);
                std::mem::swap(a, &mut tmp);
                left_mul(back, b, &mut tmp, r, c);
                std::mem::swap(b, &mut tmp);
            }
            Scheme::General(effective) => {
                let mut state = CMat::zeros(2 * r, c);
                for i in 0..r {
                    for j in 0..c {
                        state[(i, j)] = a[i * c + j];
                        state[(r + i, j)] = b[i * c + j];
                    }
                }
                for t in effective {
                    let q = q_matrix(lambda, &(t * C64::new(sign, 0.0))) * C64::new(s, 0.0);
                    state = q.exp() * state;
                }
                for i in 0..r {
                    for j in 0..c {
                        a[i * c + j] = state[(i, j)];
                        b[i * c + j] = state[(r + i, j)];
                    }
                }
            }
        }
    }

    /// `𝒲(1, λ, sign·τ)`.
    pub fn fundamental(&self, lambda: C64, sign: f64) -> CMat {
        let r = self.r;
        let c = 2 * r;
        let mut a = vec![ZERO; r * c];
        let mut b = vec![ZERO; r * c];
        for i in 0..r {
            a[i * c + i] = C64::new(1.0, 0.0);
            b[i * c + r + i] = C64::new(1.0, 0.0);
        }
        self.evolve(lambda, sign, &mut a, &mut b, c);
        CMat::from_fn(c, c, |i, j| if i < r { a[i * c + j] } else { b[(i - r) * c + j] })
    }

    /// `φ(1, λ, τ)`; only the first column block of `𝒲` is propagated.
    pub fn phi(&self, lambda: C64) -> CMat {
        let r = self.r;
        let mut a = flat(&linalg::identity(r));
        let mut b = vec![ZERO; r * r];
        self.evolve(lambda, 1.0, &mut a, &mut b, r);
        CMat::from_fn(r, r, |i, j| -b[i * r + j])
    }

    pub fn boundary_values(&self, lambda: C64) -> BoundaryValues {
        let w = self.fundamental(lambda, 1.0);
        split_fundamental(&w, self.r, lambda)
    }

    /// `m_τ(λ) = −φ(1,λ,τ)⁻¹ ψ(1,λ,−τ)`; fails when `σ_min(φ) ≤ 1e−10·max(1, ‖φ‖)`.
    pub fn weyl_m(&self, lambda: C64) -> Result<CMat> {
        let bv = self.boundary_values(lambda);
        let svd = bv.phi_tau.clone().svd(true, true);
        let smax = svd.singular_values.max();
        let smin = svd.singular_values.min();
        if smin <= 1e-10 * smax.max(1.0) {
            return Err(Error::PoleProximity {
                lambda,
                sigma_min: smin,
            });
        }
        let inv = svd
            .pseudo_inverse(0.0)
            .map_err(|e| Error::Consistency(format!("pseudo-inverse failed: {e}")))?;
        Ok(-(inv * bv.psi_mtau))
    }

    pub fn sigma_min(&self, lambda: f64) -> f64 {
        linalg::min_singular(&self.phi(C64::new(lambda, 0.0)))
    }
}

fn q_matrix(lambda: C64, t: &CMat) -> CMat {
    let r = t.nrows();
    let mut q = CMat::zeros(2 * r, 2 * r);
    for i in 0..r {
        for j in 0..r {
            q[(i, j)] = -t[(i, j)];
            q[(r + i, r + j)] = t[(i, j)];
        }
        q[(i, r + i)] = lambda;
        q[(r + i, i)] = -lambda;
    }
    q
}

fn split_fundamental(w: &CMat, r: usize, lambda: C64) -> BoundaryValues {
    BoundaryValues {
        lambda,
        psi_tau: w.view((0, 0), (r, r)).into_owned(),
        phi_tau: -w.view((r, 0), (r, r)).into_owned(),
        phi_mtau: w.view((0, r), (r, r)).into_owned(),
        psi_mtau: w.view((r, r), (r, r)).into_owned(),
    }
}

/// Boundary values together with the Frobenius defect of `𝒲*(λ̄, −τ*)𝒲(λ, τ) = I`.
#[derive(Debug, Clone)]
pub struct Propagation {
    pub values: BoundaryValues,
    pub identity_residual: f64,
}

pub fn propagate(tau: &MatrixGrid, lambda: C64) -> Propagation {
    let prop = Propagator::new(tau);
    let conj = if tau.is_hermitian() {
        None
    } else {
        Some(Propagator::new(&tau.adjoint()))
    };
    propagate_with(&prop, conj.as_ref(), lambda)
}

/// `adjoint` is the propagator of `τ*` (not needed when τ is Hermitian).
pub fn propagate_with(prop: &Propagator, adjoint: Option<&Propagator>, lambda: C64) -> Propagation {
    let w = prop.fundamental(lambda, 1.0);
    let partner = adjoint.unwrap_or(prop).fundamental(lambda.conj(), -1.0);
    let defect = partner.adjoint() * &w - CMat::identity(w.nrows(), w.ncols());
    Propagation {
        values: split_fundamental(&w, prop.r(), lambda),
        identity_residual: linalg::frobenius(&defect),
    }
}

pub fn weyl_m(tau: &MatrixGrid, lambda: C64) -> Result<CMat> {
    Propagator::new(tau).weyl_m(lambda)
}

/// A root of `det φ(1, λ, τ)` with an orthonormal basis of `ker φ(1, λ, τ)` in its columns.
#[derive(Debug, Clone)]
pub struct Eigenpair {
    pub lambda: f64,
    pub kernel_basis: CMat,
}

impl Eigenpair {
    pub fn multiplicity(&self) -> usize {
        self.kernel_basis.ncols()
    }
}

/// Eigenphases of the unitary boundary frame at one real λ.
#[derive(Debug, Clone)]
struct FramePoint {
    lambda: f64,
    phase_sum: f64,
    det: C64,
}

/// Orthonormal basis of the `k`-dimensional near-kernel of `φ(1, λ, τ)` and the largest
/// singular value it discards relative to `max(1, ‖φ‖)`.
fn kernel_at(prop: &Propagator, lambda: f64, k: usize) -> (CMat, f64) {
    let phi = prop.phi(C64::new(lambda, 0.0));
    let svd = phi.svd(false, true);
    let v_t = svd.v_t.expect("requested right singular vectors");
    let sv = &svd.singular_values;
    let scale = sv.max().max(1.0);
    let mut order: Vec<usize> = (0..sv.len()).collect();
    order.sort_by(|&a, &b| sv[a].partial_cmp(&sv[b]).unwrap());
    let k = k.min(sv.len());
    if k == 0 {
        return (CMat::zeros(prop.r(), 0), 0.0);
    }
    let cols: Vec<_> = order[..k].iter().map(|&i| v_t.row(i).adjoint()).collect();
    (CMat::from_columns(&cols), sv[order[k - 1]] / scale)
}

impl Propagator {
    /// `U(λ) = (A − iB)*((A + iB)*)⁻¹` with `A = φ(1,λ,τ)`, `B = ψ(1,λ,−τ)`. For Hermitian τ
    /// and real λ, `AB*` is Hermitian and `[A B]` has full rank, so `A + iB` is invertible and
    /// `U` is unitary; `−1` is an eigenvalue of `U` exactly when `φ(1,λ,τ)` is singular, with
    /// the same multiplicity, and the eigenphases decrease monotonically in λ.
    pub fn boundary_frame(&self, lambda: f64) -> CMat {
        let r = self.r;
        let c = 2 * r;
        let mut a = vec![ZERO; r * c];
        let mut b = vec![ZERO; r * c];
        for i in 0..r {
            a[i * c + i] = C64::new(1.0, 0.0);
            b[i * c + r + i] = C64::new(1.0, 0.0);
        }
        self.evolve(C64::new(lambda, 0.0), 1.0, &mut a, &mut b, c);
        let i = C64::new(0.0, 1.0);
        let plus = CMat::from_fn(r, r, |p, q| -b[p * c + q] + i * b[p * c + r + q]);
        let minus = CMat::from_fn(r, r, |p, q| -b[p * c + q] - i * b[p * c + r + q]);
        let v = plus
            .lu()
            .solve(&minus)
            .expect("A + iB is invertible for Hermitian tau and real lambda");
        v.adjoint()
    }

    fn frame_point(&self, lambda: f64) -> FramePoint {
        if lambda == 0.0 {
            // U(0) = −I: every branch sits on the cut, having just crossed
            return FramePoint {
                lambda,
                phase_sum: PI * self.r as f64,
                det: C64::new(if self.r % 2 == 0 { 1.0 } else { -1.0 }, 0.0),
            };
        }
        let u = self.boundary_frame(lambda);
        let t = nalgebra::Schur::new(u).unpack().1;
        let mut det = C64::new(1.0, 0.0);
        let mut phase_sum = 0.0;
        for k in 0..self.r {
            let e = t[(k, k)];
            det *= e / e.norm();
            phase_sum += e.arg();
        }
        FramePoint { lambda, phase_sum, det }
    }
}

/// Number of branches crossing `−1` on `(a.λ, b.λ]`, assuming the total phase decrease is
/// below 2π; `None` when the decrease is too large to be read unambiguously.
fn crossings(a: &FramePoint, b: &FramePoint) -> Option<usize> {
    let mut d = -(b.det / a.det).arg();
    if d < 0.0 {
        d += 2.0 * PI;
    }
    if d > 2.0 * PI - 1e-9 {
        d -= 2.0 * PI;
    }
    if d > PI {
        return None;
    }
    let n = ((d - a.phase_sum + b.phase_sum) / (2.0 * PI)).round();
    Some(n.max(0.0) as usize)
}

/// Split `(a, b]` until each piece holds at most one crossing (or is unresolvable), appending
/// `(left, right, count)` brackets of width `≤ tol`.
fn isolate(
    prop: &Propagator,
    a: &FramePoint,
    b: &FramePoint,
    count: usize,
    tol: f64,
    out: &mut Vec<(f64, f64, usize)>,
) {
    if count == 0 {
        return;
    }
    let width = b.lambda - a.lambda;
    if width <= tol {
        out.push((a.lambda, b.lambda, count));
        return;
    }
    let mid = prop.frame_point(0.5 * (a.lambda + b.lambda));
    let left = crossings(a, &mid).unwrap_or(0).min(count);
    isolate(prop, a, &mid, left, tol, out);
    isolate(prop, &mid, b, count - left, tol, out);
}

/// Frame points on `[lo, hi]` spaced at most `step`, refined wherever the phase moves too fast.
fn frame_scan(prop: &Propagator, lo: f64, hi: f64, step: f64) -> Vec<FramePoint> {
    let n = ((hi - lo) / step).ceil().max(1.0) as usize;
    let grid: Vec<f64> = (0..=n).map(|k| lo + (hi - lo) * k as f64 / n as f64).collect();
    let coarse: Vec<FramePoint> = grid.par_iter().map(|&l| prop.frame_point(l)).collect();
    let mut out = vec![coarse[0].clone()];
    for w in coarse.windows(2) {
        refine_until_readable(prop, &w[0], &w[1], 0, &mut out);
    }
    out
}

fn refine_until_readable(prop: &Propagator, a: &FramePoint, b: &FramePoint, depth: usize, out: &mut Vec<FramePoint>) {
    if crossings(a, b).is_some() || depth >= 20 {
        out.push(b.clone());
        return;
    }
    let mid = prop.frame_point(0.5 * (a.lambda + b.lambda));
    refine_until_readable(prop, a, &mid, depth + 1, out);
    refine_until_readable(prop, &mid, b, depth + 1, out);
}

fn arc_phase(f: &impl Fn(f64) -> C64, a: f64, b: f64, fa: C64, fb: C64, depth: usize) -> Option<f64> {
    if fa == ZERO || fb == ZERO || !fa.is_finite() || !fb.is_finite() {
        return None;
    }
    let d = (fb / fa).arg();
    if d.abs() < PI / 4.0 {
        return Some(d);
    }
    if depth >= 14 {
        return (d.abs() < PI / 2.0).then_some(d);
    }
    let mid = 0.5 * (a + b);
    let fm = f(mid);
    Some(arc_phase(f, a, mid, fa, fm, depth + 1)? + arc_phase(f, mid, b, fm, fb, depth + 1)?)
}

/// Number of zeros of `det φ(1, λ, τ)` in the open disk, by the argument principle.
pub fn zeros_in_disk(prop: &Propagator, center: f64, radius: f64) -> Option<usize> {
    let f = |theta: f64| {
        prop.phi(C64::new(center, 0.0) + C64::from_polar(radius, theta))
            .determinant()
    };
    let k = 64;
    let thetas: Vec<f64> = (0..=k).map(|i| 2.0 * PI * i as f64 / k as f64).collect();
    let vals: Vec<C64> = thetas.par_iter().map(|&t| f(t)).collect();
    let mut total = 0.0;
    for i in 0..k {
        total += arc_phase(&f, thetas[i], thetas[i + 1], vals[i], vals[i + 1], 0)?;
    }
    let w = total / (2.0 * PI);
    let n = w.round();
    ((w - n).abs() < 0.2 && n >= 0.0).then_some(n as usize)
}

/// Eigenvalue count of `Δ_n` (with multiplicity) from the argument principle.
pub fn bin_count(prop: &Propagator, n: usize) -> Option<usize> {
    if n == 1 {
        // the disk |λ| < 3π/2 holds the order-r zero at 0 and the mirrored roots ±λ_j
        let w = zeros_in_disk(prop, 0.0, 1.5 * PI)?;
        let r = prop.r();
        (w >= r && (w - r) % 2 == 0).then(|| (w - r) / 2)
    } else {
        zeros_in_disk(prop, PI * n as f64, 0.5 * PI)
    }
}

/// `λ₀ = 0` followed by all roots in `(0, lambda_max]`.
pub fn find_eigenvalues(tau: &MatrixGrid, lambda_max: f64, scan_step: f64) -> Result<Vec<Eigenpair>> {
    let opts = DirectOptions {
        scan_step,
        ..DirectOptions::default()
    };
    let prop = Propagator::new(tau);
    find_eigenvalues_with(&prop, lambda_max, &opts, &mut Vec::new())
}

pub fn find_eigenvalues_with(
    prop: &Propagator,
    lambda_max: f64,
    opts: &DirectOptions,
    warnings: &mut Vec<String>,
) -> Result<Vec<Eigenpair>> {
    opts.check()?;
    if !(lambda_max > 0.0) {
        return Err(Error::Config(format!("lambda_max must be positive, got {lambda_max}")));
    }
    if !prop.is_hermitian() {
        return Err(Error::Precondition("eigenvalue search requires Hermitian tau".into()));
    }
    let mut note = |msg: String| {
        warn!("{msg}");
        warnings.push(msg);
    };
    let points = frame_scan(prop, 0.0, lambda_max, opts.scan_step);
    let brackets: Vec<(usize, usize)> = points
        .windows(2)
        .enumerate()
        .filter_map(|(k, w)| crossings(&w[0], &w[1]).filter(|&c| c > 0).map(|c| (k, c)))
        .collect();
    let mut found: Vec<(f64, f64, usize)> = Vec::new();
    for chunk in brackets
        .par_iter()
        .map(|&(k, c)| {
            let mut out = Vec::new();
            isolate(prop, &points[k], &points[k + 1], c, opts.refine_tol, &mut out);
            out
        })
        .collect::<Vec<_>>()
    {
        found.extend(chunk);
    }

    // clusters closer than merge_tol are reported once with their combined multiplicity
    let mut merged: Vec<(f64, usize)> = Vec::new();
    let mut i = 0;
    while i < found.len() {
        let mut j = i + 1;
        while j < found.len() && found[j].0 - found[j - 1].1 < opts.merge_tol {
            j += 1;
        }
        let mult: usize = found[i..j].iter().map(|f| f.2).sum();
        let lambda = 0.5 * (found[i].0 + found[j - 1].1);
        if j - i > 1 {
            note(format!(
                "merged {} roots within {:e} of lambda = {lambda}",
                j - i,
                opts.merge_tol
            ));
        }
        merged.push((lambda, mult));
        i = j;
    }

    let mut out = vec![Eigenpair {
        lambda: 0.0,
        kernel_basis: CMat::zeros(prop.r(), 0),
    }];
    for (lambda, mult) in merged {
        let (kernel_basis, resid) = kernel_at(prop, lambda, mult);
        if resid > opts.rank_tol {
            note(format!(
                "kernel of phi(1, lambda) at lambda = {lambda} has relative singular value {resid:e} for multiplicity {mult}"
            ));
        }
        out.push(Eigenpair { lambda, kernel_basis });
    }

    if opts.verify_bins {
        for n in 1..=bin_index(lambda_max) {
            let (lo, hi) = (PI * (n as f64 - 0.5), PI * (n as f64 + 0.5));
            if hi > lambda_max {
                break;
            }
            let located: usize = out[1..]
                .iter()
                .filter(|e| bin_index(e.lambda) == n && e.lambda > lo.max(0.0))
                .map(|e| e.multiplicity())
                .sum();
            match bin_count(prop, n) {
                Some(c) if c == located => {}
                Some(c) => note(format!(
                    "bin {n}: located multiplicity {located} but the argument principle counts {c}"
                )),
                None => note(format!("argument-principle count failed for bin {n}")),
            }
        }
    }
    debug!("located {} eigenvalues up to {lambda_max}", out.len() - 1);
    Ok(out)
}

/// Norming constants with the Hermitian defect measured before symmetrization.
#[derive(Debug, Clone)]
pub struct NormingOutput {
    pub alphas: Vec<CMat>,
    pub hermitian_defects: Vec<f64>,
    pub radii: Vec<f64>,
}

pub fn norming_constants(tau: &MatrixGrid, eigenvalues: &[f64]) -> Result<NormingOutput> {
    norming_constants_with(
        &Propagator::new(tau),
        eigenvalues,
        DirectOptions::default().contour_points,
    )
}

fn contour_radius(eigenvalues: &[f64], j: usize) -> f64 {
    let l = eigenvalues[j];
    let mut gap = f64::INFINITY;
    let poles = eigenvalues.iter().flat_map(|&x| [x, -x]).chain(std::iter::once(0.0));
    for p in poles {
        let d = (p - l).abs();
        if d > 0.0 {
            gap = gap.min(d);
        }
    }
    (0.4 * gap).min(0.5)
}

/// `α_j = −res m_τ` at each `λ_j > 0` and `α₀ = −½ res m_τ` at 0, by the K-point
/// trapezoid rule on a circle around each eigenvalue.
pub fn norming_constants_with(prop: &Propagator, eigenvalues: &[f64], k: usize) -> Result<NormingOutput> {
    let results: Vec<Result<(CMat, f64, f64)>> = (0..eigenvalues.len())
        .into_par_iter()
        .map(|j| {
            let center = eigenvalues[j];
            let rho = contour_radius(eigenvalues, j);
            let mut acc = linalg::zeros(prop.r());
            for i in 0..k {
                let e = C64::from_polar(1.0, 2.0 * PI * (i as f64 + 0.5) / k as f64);
                let m = prop
                    .weyl_m(C64::new(center, 0.0) + e * rho)
                    .map_err(|cause| Error::Contour {
                        center,
                        radius: rho,
                        cause: Box::new(cause),
                    })?;
                acc += m * e;
            }
            let factor = if center == 0.0 { 0.5 } else { 1.0 };
            let alpha = acc * C64::new(-factor * rho / k as f64, 0.0);
            let defect = linalg::frobenius(&(&alpha - alpha.adjoint()));
            let ev = linalg::hermitian_eigenvalues(&alpha);
            if ev[0] < -1e-6 {
                return Err(Error::Extraction {
                    lambda: center,
                    min_eig: ev[0],
                });
            }
            Ok((linalg::psd_clip(&alpha), defect, rho))
        })
        .collect();
    let mut out = NormingOutput {
        alphas: Vec::with_capacity(results.len()),
        hermitian_defects: Vec::with_capacity(results.len()),
        radii: Vec::with_capacity(results.len()),
    };
    for res in results {
        let (a, d, rho) = res?;
        out.alphas.push(a);
        out.hermitian_defects.push(d);
        out.radii.push(rho);
    }
    Ok(out)
}

/// Partial sum `2λ Σ_{λ_j ≤ cutoff} α_j / (λ_j² − λ²)` of the Herglotz representation of `m_τ`.
pub fn herglotz_partial_sum(data: &SpectralData, lambda: C64, cutoff: f64) -> CMat {
    let mut acc = linalg::zeros(data.r());
    for e in data.entries().iter().take_while(|e| e.lambda <= cutoff) {
        let w = lambda * 2.0 / (C64::new(e.lambda * e.lambda, 0.0) - lambda * lambda);
        acc += &e.alpha * w;
    }
    acc
}

/// One eigenvalue with its norming constant.
#[derive(Debug, Clone)]
pub struct EigenRecord {
    pub lambda: f64,
    pub alpha: CMat,
    pub multiplicity: usize,
    pub kernel_basis: CMat,
}

/// Spectral data plus the diagnostics gathered while computing it.
#[derive(Debug, Clone)]
pub struct DirectReport {
    pub data: SpectralData,
    pub records: Vec<EigenRecord>,
    pub n_bins: usize,
    pub lambda_max: f64,
    /// Largest identity residual over the eigenvalues and two complex sample points.
    pub identity_residual: f64,
    pub max_alpha_hermitian_defect: f64,
    /// Per bin n = 1..N, the sum of ranks of the α_j in Δ_n.
    pub bin_ranks: Vec<usize>,
    pub warnings: Vec<String>,
}

/// Relative threshold for the numerical rank of α_j.
pub const ALPHA_RANK_TOL: f64 = 1e-9;

pub fn spectral_data(tau: &MatrixGrid, n_bins: usize) -> Result<SpectralData> {
    Ok(spectral_data_report(tau, n_bins, &DirectOptions::default())?.data)
}

pub fn spectral_data_report(tau: &MatrixGrid, n_bins: usize, opts: &DirectOptions) -> Result<DirectReport> {
    if !tau.is_hermitian() {
        return Err(Error::Precondition("spectral data requires Hermitian tau".into()));
    }
    if n_bins == 0 {
        return Err(Error::Config("n_bins must be positive".into()));
    }
    let prop = Propagator::new(tau);
    let lambda_max = PI * (n_bins as f64 + 0.5);
    let mut warnings = Vec::new();
    let pairs = find_eigenvalues_with(&prop, lambda_max, opts, &mut warnings)?;
    let lambdas: Vec<f64> = pairs.iter().map(|p| p.lambda).collect();
    let norming = norming_constants_with(&prop, &lambdas, opts.contour_points)?;

    let mut samples: Vec<C64> = lambdas.iter().map(|&l| C64::new(l, 0.0)).collect();
    samples.extend([C64::new(1.0, 1.0), C64::new(3.0, 2.0)]);
    let identity_residual = samples
        .par_iter()
        .map(|&l| propagate_with(&prop, None, l).identity_residual)
        .reduce(|| 0.0, f64::max);

    let r = tau.r();
    let mut bin_ranks = vec![0usize; n_bins];
    for (l, a) in lambdas.iter().zip(&norming.alphas).skip(1) {
        bin_ranks[bin_index(*l) - 1] += linalg::numerical_rank(a, ALPHA_RANK_TOL);
    }
    let total: usize = bin_ranks.iter().sum();
    if total != n_bins * r {
        return Err(Error::Consistency(format!(
            "rank count over {n_bins} bins is {total}, expected {} (an eigenvalue was missed or misclassified); per-bin ranks {:?}",
            n_bins * r,
            bin_ranks
        )));
    }

    let records: Vec<EigenRecord> = pairs
        .into_iter()
        .zip(&norming.alphas)
        .map(|(p, a)| EigenRecord {
            lambda: p.lambda,
            alpha: a.clone(),
            multiplicity: if p.lambda == 0.0 { r } else { p.multiplicity() },
            kernel_basis: p.kernel_basis,
        })
        .collect();
    let entries = records
        .iter()
        .map(|rec| SpectralEntry::new(rec.lambda, rec.alpha.clone()))
        .collect();
    let data = SpectralData::new(r, true, entries)?;
    Ok(DirectReport {
        data,
        records,
        n_bins,
        lambda_max,
        identity_residual,
        max_alpha_hermitian_defect: norming.hermitian_defects.iter().cloned().fold(0.0, f64::max),
        bin_ranks,
        warnings,
    })
}
