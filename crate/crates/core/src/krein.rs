//! Krein equation `R(x,t) + H(x−t) + ∫₀ˣ R(x,ξ)H(ξ−t)dξ = 0` on the triangle
//! `0 ≤ t ≤ x ≤ 1`, the potential `τ = −R(·,0)` and the transformation kernels.
//!
//! Row `i` of the Nyström discretization is the block system `x M_i = −g_i` with
//! `M_i[k][j] = δ_kj I + w_k H_{|k−j|}` and trapezoid weights `w` on `[0, x_i]`. The leading
//! `i×i` block of `M_i` is the matrix `P_{i−1}` whose last weight is `h` instead of `h/2`, so a
//! bordered inverse of `P_i` is carried from row to row. With `S_i` the Schur complement of
//! `P_i`, the Schur complement of `M_i` is `(I + S_i)/2` and the row solution is
//! `R(x_i, x_i) = (2/h)(I − S_i)(I + S_i)⁻¹`, `R(x_i, t_j) = −(I/h + ½R(x_i, x_i))(C A⁻¹)_j` for j < i.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::grid::{partial_trapezoid_weights, GridSpec, MatrixGrid, TriangularKernel};
use crate::linalg::{self, CMat, C64, ZERO};

/// Pivots below this (smallest singular value, or smallest eigenvalue for Hermitian H)
/// mean `I + ℋ^a` is numerically singular or indefinite.
pub const PIVOT_TOL: f64 = 1e-10;

#[derive(Debug, Clone)]
pub struct KreinSolution {
    pub r: TriangularKernel,
    /// Largest Frobenius defect of the discrete equation over all nodes.
    pub residual: f64,
    /// Smallest pivot met during the elimination.
    pub min_pivot: f64,
    pub hermitian: bool,
}

fn flat_values(h: &MatrixGrid) -> Vec<C64> {
    let r = h.r();
    let mut out = Vec::with_capacity(h.spec().len() * r * r);
    for v in h.values() {
        for a in 0..r {
            for b in 0..r {
                out.push(v[(a, b)]);
            }
        }
    }
    out
}

fn pivot_of(s: &CMat, hermitian: bool) -> f64 {
    if hermitian {
        linalg::hermitian_eigenvalues(s)[0]
    } else {
        linalg::min_singular(s)
    }
}

fn check_pivot(s: &CMat, hermitian: bool, spec: GridSpec, row: usize, min_pivot: &mut f64) -> Result<()> {
    let p = pivot_of(s, hermitian);
    *min_pivot = min_pivot.min(p);
    if !(p >= PIVOT_TOL) {
        return Err(Error::NotAnAccelerant {
            x: spec.point(row),
            row,
            pivot: p,
        });
    }
    Ok(())
}

fn invert(s: &CMat) -> Result<CMat> {
    s.clone()
        .try_inverse()
        .ok_or_else(|| Error::Consistency("pivot block could not be inverted".into()))
}

/// Resample H onto `spec` when the grids differ.
fn on_grid(h: &MatrixGrid, spec: GridSpec) -> MatrixGrid {
    if h.spec() == spec {
        h.clone()
    } else {
        h.resample(spec)
    }
}

pub fn solve_krein(h: &MatrixGrid, spec: GridSpec) -> Result<KreinSolution> {
    let h = on_grid(h, spec);
    let r = h.r();
    let m = spec.m();
    let step = spec.step();
    let hermitian = h.is_hermitian();
    let hf = flat_values(&h);
    let hb = |k: usize, a: usize, b: usize| hf[(k * r + a) * r + b];
    let id = linalg::identity(r);
    let mut kernel = TriangularKernel::zeros(spec, r);
    let mut min_pivot = f64::INFINITY;

    kernel.set(0, 0, -h.at(0).clone());
    // P_0 = I + (h/2)H_0
    let p0 = &id + h.at(0) * C64::new(0.5 * step, 0.0);
    check_pivot(&p0, hermitian, spec, 0, &mut min_pivot)?;

    let stride = (m + 1) * r;
    let mut inv = vec![ZERO; stride * stride];
    let p0_inv = invert(&p0)?;
    for a in 0..r {
        for b in 0..r {
            inv[a * stride + b] = p0_inv[(a, b)];
        }
    }

    let mut bmat = vec![ZERO; stride * r];
    let mut ainv_b = vec![ZERO; stride * r];
    let mut cmat = vec![ZERO; r * stride];
    let mut c_ainv = vec![ZERO; r * stride];
    let d = &id + h.at(0) * C64::new(step, 0.0);

    for i in 1..=m {
        let dim = i * r;
        for k in 0..i {
            let c_k = if k == 0 { 0.5 * step } else { step };
            for a in 0..r {
                for b in 0..r {
                    bmat[(k * r + a) * r + b] = hb(i - k, a, b) * c_k;
                    cmat[a * stride + k * r + b] = hb(i - k, a, b) * step;
                }
            }
        }
        // A⁻¹B and C A⁻¹
        ainv_b[..dim * r].fill(ZERO);
        for p in 0..dim {
            let row = &inv[p * stride..p * stride + dim];
            let out = &mut ainv_b[p * r..(p + 1) * r];
            for (q, &v) in row.iter().enumerate() {
                let src = &bmat[q * r..(q + 1) * r];
                for b in 0..r {
                    out[b] += v * src[b];
                }
            }
        }
        for a in 0..r {
            let out = &mut c_ainv[a * stride..a * stride + dim];
            out.fill(ZERO);
            for q in 0..dim {
                let c = cmat[a * stride + q];
                if c == ZERO {
                    continue;
                }
                let row = &inv[q * stride..q * stride + dim];
                for (o, &v) in out.iter_mut().zip(row) {
                    *o += c * v;
                }
            }
        }
        let mut s = d.clone();
        for a in 0..r {
            for b in 0..r {
                let mut acc = ZERO;
                for q in 0..dim {
                    acc += cmat[a * stride + q] * ainv_b[q * r + b];
                }
                s[(a, b)] -= acc;
            }
        }
        let s_row = (&id + &s) * C64::new(0.5, 0.0);
        check_pivot(&s_row, hermitian, spec, i, &mut min_pivot)?;
        if i < m {
            check_pivot(&s, hermitian, spec, i, &mut min_pivot)?;
        }

        // row solution
        let xb = (&id - &s) * invert(&s_row)? * C64::new(1.0 / step, 0.0);
        let coef = -(&id * C64::new(1.0 / step, 0.0) + &xb * C64::new(0.5, 0.0));
        kernel.set(i, i, xb);
        for j in 0..i {
            let blk = CMat::from_fn(r, r, |a, b| {
                let mut acc = ZERO;
                for e in 0..r {
                    acc += coef[(a, e)] * c_ainv[e * stride + j * r + b];
                }
                acc
            });
            kernel.set(i, j, blk);
        }

        if i == m {
            break;
        }
        // bordered inverse of P_i
        let s_inv = invert(&s)?;
        let mut t1 = vec![ZERO; dim * r];
        for p in 0..dim {
            for b in 0..r {
                let mut acc = ZERO;
                for e in 0..r {
                    acc += ainv_b[p * r + e] * s_inv[(e, b)];
                }
                t1[p * r + b] = acc;
            }
        }
        for p in 0..dim {
            let t = &t1[p * r..(p + 1) * r];
            let row = &mut inv[p * stride..p * stride + dim];
            for b in 0..r {
                let tb = t[b];
                let src = &c_ainv[b * stride..b * stride + dim];
                for (o, &v) in row.iter_mut().zip(src) {
                    *o += tb * v;
                }
            }
            for b in 0..r {
                inv[p * stride + dim + b] = -t[b];
            }
        }
        for a in 0..r {
            for q in 0..dim {
                let mut acc = ZERO;
                for e in 0..r {
                    acc += s_inv[(a, e)] * c_ainv[e * stride + q];
                }
                inv[(dim + a) * stride + q] = -acc;
            }
            for b in 0..r {
                inv[(dim + a) * stride + dim + b] = s_inv[(a, b)];
            }
        }
    }

    let residual = krein_residual(&h, &kernel)?;
    Ok(KreinSolution {
        r: kernel,
        residual,
        min_pivot,
        hermitian,
    })
}

/// Reference solver: one dense LU solve of the full row system per row.
pub fn solve_krein_reference(h: &MatrixGrid, spec: GridSpec) -> Result<TriangularKernel> {
    let h = on_grid(h, spec);
    let r = h.r();
    let mut kernel = TriangularKernel::zeros(spec, r);
    for i in 0..=spec.m() {
        let w = partial_trapezoid_weights(spec, i);
        let n = (i + 1) * r;
        let mut mat = CMat::identity(n, n);
        let mut rhs = CMat::zeros(r, n);
        for k in 0..=i {
            for j in 0..=i {
                let blk = h.at(k.abs_diff(j));
                for a in 0..r {
                    for b in 0..r {
                        mat[(k * r + a, j * r + b)] += blk[(a, b)] * w[k];
                    }
                }
            }
        }
        for j in 0..=i {
            rhs.view_mut((0, j * r), (r, r)).copy_from(&(-h.at(i - j)));
        }
        // x M = rhs  ⇔  M^T x^T = rhs^T
        let sol = mat
            .transpose()
            .lu()
            .solve(&rhs.transpose())
            .ok_or(Error::NotAnAccelerant {
                x: spec.point(i),
                row: i,
                pivot: 0.0,
            })?
            .transpose();
        for j in 0..=i {
            kernel.set(i, j, sol.view((0, j * r), (r, r)).into_owned());
        }
    }
    Ok(kernel)
}

/// `max_{j≤i} ‖R(x_i,t_j) + H(x_i−t_j) + Σ_k w_k R(x_i,ξ_k)H(ξ_k−t_j)‖_F`.
pub fn krein_residual(h: &MatrixGrid, kernel: &TriangularKernel) -> Result<f64> {
    let spec = kernel.spec();
    let r = kernel.r();
    if h.spec() != spec || h.r() != r {
        return Err(Error::Shape("accelerant and kernel grids differ".into()));
    }
    let hf = flat_values(h);
    let worst = (0..spec.len())
        .into_par_iter()
        .map(|i| {
            let w = partial_trapezoid_weights(spec, i);
            let row: Vec<C64> = kernel
                .row(i)
                .iter()
                .flat_map(|blk| (0..r * r).map(move |q| blk[(q / r, q % r)]))
                .collect();
            let mut worst = 0.0f64;
            let mut acc = vec![ZERO; r * r];
            for j in 0..=i {
                for a in 0..r {
                    for b in 0..r {
                        acc[a * r + b] = row[(j * r + a) * r + b] + hf[((i - j) * r + a) * r + b];
                    }
                }
                for k in 0..=i {
                    if w[k] == 0.0 {
                        continue;
                    }
                    let hk = &hf[k.abs_diff(j) * r * r..(k.abs_diff(j) + 1) * r * r];
                    let rk = &row[k * r * r..(k + 1) * r * r];
                    for a in 0..r {
                        for e in 0..r {
                            let v = rk[a * r + e] * w[k];
                            for b in 0..r {
                                acc[a * r + b] += v * hk[e * r + b];
                            }
                        }
                    }
                }
                let n = acc.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
                worst = worst.max(n);
            }
            worst
        })
        .reduce(|| 0.0, f64::max);
    Ok(worst)
}

/// Output of the map `H ↦ τ = −R_H(·, 0)`.
#[derive(Debug, Clone)]
pub struct ThetaOutput {
    pub tau: MatrixGrid,
    /// `max_i ‖τ(x_i) − τ(x_i)*‖_F` before symmetrization (only meaningful for Hermitian H).
    pub hermitian_defect: f64,
    pub solution: KreinSolution,
}

pub fn theta(h: &MatrixGrid, spec: GridSpec) -> Result<MatrixGrid> {
    Ok(theta_detailed(h, spec)?.tau)
}

pub fn theta_detailed(h: &MatrixGrid, spec: GridSpec) -> Result<ThetaOutput> {
    let solution = solve_krein(h, spec)?;
    let values: Vec<CMat> = (0..spec.len()).map(|i| -solution.r.get(i, 0).clone()).collect();
    let raw = MatrixGrid::new(spec, values)?;
    let hermitian_defect = raw.hermitian_defect();
    let tau = if solution.hermitian { raw.hermitized() } else { raw };
    Ok(ThetaOutput {
        tau,
        hermitian_defect,
        solution,
    })
}

/// `K_D(x,t) = ½[R(x,(x+t)/2) − R(x,(x−t)/2)]`, `K_N = ½[R(x,(x+t)/2) + R(x,(x−t)/2)]`,
/// with R read between nodes by linear interpolation.
pub fn transformation_kernels(kernel: &TriangularKernel) -> (TriangularKernel, TriangularKernel) {
    let spec = kernel.spec();
    let r = kernel.r();
    let half = C64::new(0.5, 0.0);
    let pair = |i: usize, j: usize| {
        let (x, t) = (spec.point(i), spec.point(j));
        (kernel.eval_row(i, 0.5 * (x + t)), kernel.eval_row(i, 0.5 * (x - t)))
    };
    let kd = TriangularKernel::from_fn(spec, r, |i, j| {
        let (p, q) = pair(i, j);
        (p - q) * half
    });
    let kn = TriangularKernel::from_fn(spec, r, |i, j| {
        let (p, q) = pair(i, j);
        (p + q) * half
    });
    (kd, kn)
}

/// Same kernels on `spec` from R solved on the twice-refined grid, where `(x ± t)/2` are nodes.
pub fn transformation_kernels_from_fine(
    fine: &TriangularKernel,
    spec: GridSpec,
) -> Result<(TriangularKernel, TriangularKernel)> {
    if fine.spec() != spec.refined(2) {
        return Err(Error::Shape(format!(
            "fine kernel must have m = {}, got {}",
            2 * spec.m(),
            fine.spec().m()
        )));
    }
    let half = C64::new(0.5, 0.0);
    let kd = TriangularKernel::from_fn(spec, fine.r(), |i, j| {
        (fine.get(2 * i, i + j) - fine.get(2 * i, i - j)) * half
    });
    let kn = TriangularKernel::from_fn(spec, fine.r(), |i, j| {
        (fine.get(2 * i, i + j) + fine.get(2 * i, i - j)) * half
    });
    Ok((kd, kn))
}

/// Symmetric-frame Nyström matrix `W^{1/2} A W^{-1/2}` of the Volterra operator with kernel K,
/// or of its adjoint `(𝒦*f)(x) = ∫_x^1 K(t,x)* f(t) dt` with its own trapezoid weights on
/// `[x, 1]`. Forming the adjoint as the conjugate transpose of the Volterra matrix instead
/// would drop the weight of `K(0,0)` and leave an O(h) corner entry.
fn volterra_nystrom(k: &TriangularKernel, adjoint: bool) -> CMat {
    let spec = k.spec();
    let (m, r, h) = (spec.m(), k.r(), spec.step());
    let w = crate::grid::trapezoid_weights(spec);
    let mut a = CMat::zeros(spec.len() * r, spec.len() * r);
    for i in 0..=m {
        let range: Vec<usize> = if adjoint { (i..=m).collect() } else { (0..=i).collect() };
        let len = range.len();
        if len < 2 {
            continue;
        }
        for (pos, &j) in range.iter().enumerate() {
            let q = if pos == 0 || pos == len - 1 { 0.5 * h } else { h };
            let blk = if adjoint {
                k.get(j, i).adjoint()
            } else {
                k.get(i, j).clone()
            };
            let s = C64::new(q * (w[i] / w[j]).sqrt(), 0.0);
            a.view_mut((i * r, j * r), (r, r)).copy_from(&(blk * s));
        }
    }
    a
}

/// Operator-norm defects of `(I+𝒦_N)(I+ℋ_e)(I+𝒦_N*) − I` and `(I+𝒦_D)(I+ℋ_o)(I+𝒦_D*) − I`.
#[derive(Debug, Clone, Copy, serde::Serialize)]
pub struct FactorizationDefect {
    pub even: f64,
    pub odd: f64,
    /// Condition numbers of the symmetrized `I + ℋ_e` and `I + ℋ_o`.
    pub kappa_even: f64,
    pub kappa_odd: f64,
}

/// Builds everything from H sampled on the twice refined grid, so that `(x ± t)/2` and
/// `R(x, (x ± t)/2)` are read at nodes.
pub fn factorization_defect(h2: &MatrixGrid, spec: GridSpec) -> Result<FactorizationDefect> {
    let fine = spec.refined(2);
    if h2.spec() != fine {
        return Err(Error::Shape(format!(
            "accelerant must be sampled with m = {}, got {}",
            fine.m(),
            h2.spec().m()
        )));
    }
    let sol = solve_krein(h2, fine)?;
    let (kd, kn) = transformation_kernels_from_fine(&sol.r, spec)?;
    let (he, ho) = crate::accelerant::build_heo_from_half_grid(h2, spec)?;
    let n = spec.len() * h2.r();
    let id = CMat::identity(n, n);
    let defect = |k: &TriangularKernel, op: &CMat| {
        let left = &id + volterra_nystrom(k, false);
        let right = &id + volterra_nystrom(k, true);
        let p = left * op * right - &id;
        linalg::op_norm(&p)
    };
    let kappa = |op: &CMat| {
        let sv = linalg::singular_values(op);
        let hi = sv.iter().cloned().fold(0.0, f64::max);
        let lo = sv.iter().cloned().fold(f64::INFINITY, f64::min);
        hi / lo
    };
    let (e, o) = (he.symmetrized_nystrom(), ho.symmetrized_nystrom());
    Ok(FactorizationDefect {
        even: defect(&kn, &e),
        odd: defect(&kd, &o),
        kappa_even: kappa(&e),
        kappa_odd: kappa(&o),
    })
}
