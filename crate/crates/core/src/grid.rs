//! Uniform grids on [0, 1] and the matrix-valued functions and kernels sampled on them.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, CMat, C64};

/// Relative tolerance of the Hermitian-symmetry checks.
pub const HERMITIAN_TOL: f64 = 1e-12;

/// Uniform partition of [0, 1] into `m` subintervals; nodes `x_i = i/m`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "usize", into = "usize")]
pub struct GridSpec {
    m: usize,
}

impl GridSpec {
    pub const MIN_INTERVALS: usize = 8;

    pub fn new(m: usize) -> Result<Self> {
        if m < Self::MIN_INTERVALS {
            return Err(Error::InvalidGrid {
                m,
                min: Self::MIN_INTERVALS,
            });
        }
        Ok(Self { m })
    }

    pub fn m(&self) -> usize {
        self.m
    }

    /// Number of nodes, `m + 1`.
    pub fn len(&self) -> usize {
        self.m + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn step(&self) -> f64 {
        1.0 / self.m as f64
    }

    pub fn point(&self, i: usize) -> f64 {
        i as f64 / self.m as f64
    }

    pub fn points(&self) -> impl Iterator<Item = f64> + '_ {
        (0..=self.m).map(move |i| self.point(i))
    }

    pub fn refined(&self, factor: usize) -> GridSpec {
        GridSpec { m: self.m * factor }
    }
}

impl TryFrom<usize> for GridSpec {
    type Error = Error;
    fn try_from(m: usize) -> Result<Self> {
        GridSpec::new(m)
    }
}

impl From<GridSpec> for usize {
    fn from(g: GridSpec) -> usize {
        g.m
    }
}

/// Composite trapezoid weights on the full grid; they sum to one.
pub fn trapezoid_weights(spec: GridSpec) -> Vec<f64> {
    partial_trapezoid_weights(spec, spec.m())
}

/// Trapezoid weights for `[0, x_last]` using nodes `0..=last`.
pub fn partial_trapezoid_weights(spec: GridSpec, last: usize) -> Vec<f64> {
    let h = spec.step();
    if last == 0 {
        return vec![0.0];
    }
    let mut w = vec![h; last + 1];
    w[0] = 0.5 * h;
    w[last] = 0.5 * h;
    w
}

/// Cumulative trapezoid integral `∫_0^{x_i} f` of nodal values.
pub fn cumulative_trapezoid(spec: GridSpec, values: &[CMat]) -> Vec<CMat> {
    let h = spec.step();
    let r = values[0].nrows();
    let mut acc = linalg::zeros(r);
    let mut out = Vec::with_capacity(values.len());
    out.push(acc.clone());
    for pair in values.windows(2) {
        acc += (&pair[0] + &pair[1]) * C64::new(0.5 * h, 0.0);
        out.push(acc.clone());
    }
    out
}

/// An r×r complex-matrix-valued function sampled at the nodes of a uniform grid.
///
/// Between nodes the function is read as the continuous piecewise-linear interpolant.
#[derive(Debug, Clone, PartialEq)]
pub struct MatrixGrid {
    r: usize,
    spec: GridSpec,
    values: Vec<CMat>,
    hermitian: bool,
}

impl MatrixGrid {
    /// General (not necessarily Hermitian) grid function.
    pub fn new(spec: GridSpec, values: Vec<CMat>) -> Result<Self> {
        let r = check_shapes(spec, &values)?;
        Ok(Self {
            r,
            spec,
            values,
            hermitian: false,
        })
    }

    /// Grid function flagged Hermitian; every node is re-verified.
    pub fn hermitian(spec: GridSpec, values: Vec<CMat>) -> Result<Self> {
        let r = check_shapes(spec, &values)?;
        for (i, v) in values.iter().enumerate() {
            if !linalg::is_hermitian(v, HERMITIAN_TOL) {
                return Err(Error::Validation(format!(
                    "value at node {i} is not Hermitian (defect {:e})",
                    linalg::frobenius(&(v - v.adjoint()))
                )));
            }
        }
        Ok(Self {
            r,
            spec,
            values,
            hermitian: true,
        })
    }

    /// Build with the Hermitian flag set when every node passes the check.
    pub fn detect(spec: GridSpec, values: Vec<CMat>) -> Result<Self> {
        let mut g = Self::new(spec, values)?;
        g.hermitian = g.values.iter().all(|v| linalg::is_hermitian(v, HERMITIAN_TOL));
        Ok(g)
    }

    pub fn from_fn(spec: GridSpec, r: usize, f: impl Fn(f64) -> CMat) -> Result<Self> {
        let values: Vec<CMat> = spec.points().map(f).collect();
        if values.iter().any(|v| v.nrows() != r || v.ncols() != r) {
            return Err(Error::Shape(format!("generator must return {r}x{r} matrices")));
        }
        Self::detect(spec, values)
    }

    pub fn zeros(spec: GridSpec, r: usize) -> Self {
        Self {
            r,
            spec,
            values: vec![linalg::zeros(r); spec.len()],
            hermitian: true,
        }
    }

    pub fn constant(spec: GridSpec, value: &CMat) -> Result<Self> {
        Self::detect(spec, vec![value.clone(); spec.len()])
    }

    pub fn r(&self) -> usize {
        self.r
    }

    pub fn spec(&self) -> GridSpec {
        self.spec
    }

    pub fn values(&self) -> &[CMat] {
        &self.values
    }

    pub fn into_values(self) -> Vec<CMat> {
        self.values
    }

    pub fn is_hermitian(&self) -> bool {
        self.hermitian
    }

    pub fn at(&self, i: usize) -> &CMat {
        &self.values[i]
    }

    /// Piecewise-linear interpolation at `s ∈ [0, 1]` (clamped).
    pub fn eval(&self, s: f64) -> CMat {
        let m = self.spec.m();
        let u = (s.clamp(0.0, 1.0)) * m as f64;
        let i = (u.floor() as usize).min(m - 1);
        let frac = u - i as f64;
        if frac == 0.0 {
            return self.values[i].clone();
        }
        &self.values[i] * C64::new(1.0 - frac, 0.0) + &self.values[i + 1] * C64::new(frac, 0.0)
    }

    /// Even extension to [−1, 1]: `F(s) = F(|s|)`.
    pub fn eval_even(&self, s: f64) -> CMat {
        self.eval(s.abs())
    }

    /// Resample the piecewise-linear interpolant onto another grid.
    pub fn resample(&self, spec: GridSpec) -> MatrixGrid {
        if spec == self.spec {
            return self.clone();
        }
        let values = spec.points().map(|x| self.eval(x)).collect();
        MatrixGrid {
            r: self.r,
            spec,
            values,
            hermitian: self.hermitian,
        }
    }

    /// Pointwise adjoint `F*(x)`.
    pub fn adjoint(&self) -> MatrixGrid {
        MatrixGrid {
            r: self.r,
            spec: self.spec,
            values: self.values.iter().map(|v| v.adjoint()).collect(),
            hermitian: self.hermitian,
        }
    }

    pub fn scaled(&self, c: C64) -> MatrixGrid {
        MatrixGrid {
            r: self.r,
            spec: self.spec,
            values: self.values.iter().map(|v| v * c).collect(),
            hermitian: self.hermitian && c.im == 0.0,
        }
    }

    pub fn negated(&self) -> MatrixGrid {
        self.scaled(C64::new(-1.0, 0.0))
    }

    /// Largest pointwise Frobenius norm of `F − F*`.
    pub fn hermitian_defect(&self) -> f64 {
        self.values
            .iter()
            .map(|v| linalg::frobenius(&(v - v.adjoint())))
            .fold(0.0, f64::max)
    }

    /// Replace every node by its Hermitian part and set the flag.
    pub fn hermitized(&self) -> MatrixGrid {
        MatrixGrid {
            r: self.r,
            spec: self.spec,
            values: self.values.iter().map(linalg::hermitian_part).collect(),
            hermitian: true,
        }
    }

    /// `(∫_0^1 ‖F‖_F^2)^{1/2}` by the trapezoid rule.
    pub fn l2_norm(&self) -> f64 {
        let w = trapezoid_weights(self.spec);
        self.values
            .iter()
            .zip(&w)
            .map(|(v, wi)| wi * v.iter().map(|z| z.norm_sqr()).sum::<f64>())
            .sum::<f64>()
            .sqrt()
    }

    /// `max_i ‖F(x_i)‖_F`.
    pub fn sup_norm(&self) -> f64 {
        self.values.iter().map(linalg::frobenius).fold(0.0, f64::max)
    }

    pub fn sub(&self, other: &MatrixGrid) -> Result<MatrixGrid> {
        self.same_shape(other)?;
        let values = self.values.iter().zip(&other.values).map(|(a, b)| a - b).collect();
        MatrixGrid::detect(self.spec, values)
    }

    pub fn same_shape(&self, other: &MatrixGrid) -> Result<()> {
        if self.r != other.r || self.spec != other.spec {
            return Err(Error::Shape(format!(
                "grid functions differ: r = {} vs {}, m = {} vs {}",
                self.r,
                other.r,
                self.spec.m(),
                other.spec.m()
            )));
        }
        Ok(())
    }
}

fn check_shapes(spec: GridSpec, values: &[CMat]) -> Result<usize> {
    if values.len() != spec.len() {
        return Err(Error::Shape(format!(
            "expected {} node values for m = {}, got {}",
            spec.len(),
            spec.m(),
            values.len()
        )));
    }
    let r = values[0].nrows();
    if r == 0 {
        return Err(Error::Shape("matrix dimension must be positive".into()));
    }
    for (i, v) in values.iter().enumerate() {
        if v.nrows() != r || v.ncols() != r {
            return Err(Error::Shape(format!(
                "value at node {i} is {}x{}, expected {r}x{r}",
                v.nrows(),
                v.ncols()
            )));
        }
    }
    Ok(r)
}

/// Matrix kernel on the triangle `0 ≤ t ≤ x ≤ 1`; `values` holds `K(x_i, t_j)` for `j ≤ i`.
#[derive(Debug, Clone, PartialEq)]
pub struct TriangularKernel {
    r: usize,
    spec: GridSpec,
    values: Vec<CMat>,
}

#[inline]
fn tri_index(i: usize, j: usize) -> usize {
    i * (i + 1) / 2 + j
}

impl TriangularKernel {
    pub fn zeros(spec: GridSpec, r: usize) -> Self {
        let n = spec.len();
        Self {
            r,
            spec,
            values: vec![linalg::zeros(r); n * (n + 1) / 2],
        }
    }

    pub fn from_fn(spec: GridSpec, r: usize, f: impl Fn(usize, usize) -> CMat) -> Self {
        let mut values = Vec::with_capacity(spec.len() * (spec.len() + 1) / 2);
        for i in 0..spec.len() {
            for j in 0..=i {
                values.push(f(i, j));
            }
        }
        Self { r, spec, values }
    }

    pub fn r(&self) -> usize {
        self.r
    }

    pub fn spec(&self) -> GridSpec {
        self.spec
    }

    /// `K(x_i, t_j)`; only `j ≤ i` is stored.
    pub fn get(&self, i: usize, j: usize) -> &CMat {
        assert!(j <= i, "triangular kernel read above the diagonal ({i}, {j})");
        &self.values[tri_index(i, j)]
    }

    pub fn set(&mut self, i: usize, j: usize, v: CMat) {
        assert!(j <= i, "triangular kernel write above the diagonal ({i}, {j})");
        self.values[tri_index(i, j)] = v;
    }

    pub fn row(&self, i: usize) -> &[CMat] {
        &self.values[tri_index(i, 0)..tri_index(i, 0) + i + 1]
    }

    /// Linear interpolation in the second argument at `s ∈ [0, x_i]`.
    pub fn eval_row(&self, i: usize, s: f64) -> CMat {
        let row = self.row(i);
        if i == 0 {
            return row[0].clone();
        }
        let u = (s * self.spec.m() as f64).clamp(0.0, i as f64);
        let j = (u.floor() as usize).min(i - 1);
        let frac = u - j as f64;
        if frac == 0.0 {
            return row[j].clone();
        }
        &row[j] * C64::new(1.0 - frac, 0.0) + &row[j + 1] * C64::new(frac, 0.0)
    }

    pub fn scaled(&self, c: C64) -> TriangularKernel {
        TriangularKernel {
            r: self.r,
            spec: self.spec,
            values: self.values.iter().map(|v| v * c).collect(),
        }
    }

    pub fn max_abs_diff(&self, other: &TriangularKernel) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| linalg::frobenius(&(a - b)))
            .fold(0.0, f64::max)
    }
}

/// `‖K‖_{G2}`: the largest trapezoid L2 norm over row slices `K(x_i, ·)` and column
/// slices `K(·, t_j)`, with the kernel vanishing above the diagonal.
pub fn g2_norm(k: &TriangularKernel) -> f64 {
    let spec = k.spec();
    let m = spec.m();
    let h = spec.step();
    let sq = |i: usize, j: usize| k.get(i, j).iter().map(|z| z.norm_sqr()).sum::<f64>();
    let mut best = 0.0f64;
    for i in 0..=m {
        let w = partial_trapezoid_weights(spec, i);
        let s: f64 = (0..=i).map(|j| w[j] * sq(i, j)).sum();
        best = best.max(s.sqrt());
    }
    for j in 0..=m {
        // column slice over [t_j, 1]
        let len = m - j;
        let s: f64 = if len == 0 {
            0.0
        } else {
            (j..=m)
                .map(|i| {
                    let wt = if i == j || i == m { 0.5 * h } else { h };
                    wt * sq(i, j)
                })
                .sum()
        };
        best = best.max(s.sqrt());
    }
    best
}

/// Matrix kernel on the full square `[0, 1]²`.
#[derive(Debug, Clone, PartialEq)]
pub struct SquareKernel {
    r: usize,
    spec: GridSpec,
    values: Vec<CMat>,
}

impl SquareKernel {
    pub fn from_fn(spec: GridSpec, r: usize, f: impl Fn(usize, usize) -> CMat) -> Self {
        let n = spec.len();
        let mut values = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                values.push(f(i, j));
            }
        }
        Self { r, spec, values }
    }

    pub fn r(&self) -> usize {
        self.r
    }

    pub fn spec(&self) -> GridSpec {
        self.spec
    }

    pub fn get(&self, i: usize, j: usize) -> &CMat {
        &self.values[i * self.spec.len() + j]
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().map(linalg::frobenius).fold(0.0, f64::max)
    }

    /// Largest Frobenius deviation of `K(x, t)` from `K(t, x)*`.
    pub fn adjoint_symmetry_defect(&self) -> f64 {
        let n = self.spec.len();
        let mut worst = 0.0f64;
        for i in 0..n {
            for j in 0..n {
                worst = worst.max(linalg::frobenius(&(self.get(i, j) - self.get(j, i).adjoint())));
            }
        }
        worst
    }

    /// Dense Nyström matrix of `I + K` acting on nodal values with trapezoid weights,
    /// symmetrized as `I + W^{1/2} K W^{1/2}`; block `(i, j)` occupies rows `i·r..` and
    /// columns `j·r..`.
    pub fn symmetrized_nystrom(&self) -> CMat {
        let n = self.spec.len();
        let r = self.r;
        let w = trapezoid_weights(self.spec);
        let mut a = CMat::identity(n * r, n * r);
        for i in 0..n {
            for j in 0..n {
                let s = (w[i] * w[j]).sqrt();
                let blk = self.get(i, j);
                for p in 0..r {
                    for q in 0..r {
                        a[(i * r + p, j * r + q)] += blk[(p, q)] * s;
                    }
                }
            }
        }
        a
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn scalar(v: f64) -> CMat {
        CMat::from_element(1, 1, C64::new(v, 0.0))
    }

    #[test]
    fn grid_rejects_coarse() {
        assert!(GridSpec::new(7).is_err());
        assert!(GridSpec::new(8).is_ok());
    }

    #[test]
    fn nodes_are_exact_fractions() {
        let g = GridSpec::new(10).unwrap();
        assert_eq!(g.point(3), 3.0 / 10.0);
        assert_eq!(g.point(10), 1.0);
    }

    #[test]
    fn trapezoid_small() {
        let g = GridSpec { m: 2 };
        assert_eq!(trapezoid_weights(g), vec![0.25, 0.5, 0.25]);
        let g = GridSpec::new(8).unwrap();
        let w = trapezoid_weights(g);
        let s: f64 = w.iter().sum();
        assert_eq!(s, 1.0);
        let lin: f64 = g.points().zip(&w).map(|(x, wi)| x * wi).sum();
        assert_eq!(lin, 0.5);
    }

    #[test]
    fn trapezoid_m4_sums_to_one() {
        let s: f64 = trapezoid_weights(GridSpec { m: 4 }).iter().sum();
        assert_eq!(s, 1.0);
    }

    #[test]
    fn g2_norm_examples() {
        let g = GridSpec::new(256).unwrap();
        let z = TriangularKernel::zeros(g, 1);
        assert_eq!(g2_norm(&z), 0.0);
        let ones = TriangularKernel::from_fn(g, 1, |_, _| scalar(1.0));
        assert_abs_diff_eq!(g2_norm(&ones), 1.0, epsilon = 1e-2);
        let scaled = ones.scaled(C64::new(0.0, -3.0));
        assert_abs_diff_eq!(g2_norm(&scaled), 3.0 * g2_norm(&ones), epsilon = 1e-12);
    }

    #[test]
    fn interpolation_is_linear() {
        let g = GridSpec::new(8).unwrap();
        let f = MatrixGrid::from_fn(g, 1, |x| scalar(2.0 * x + 1.0)).unwrap();
        assert_abs_diff_eq!(f.eval(0.3)[(0, 0)].re, 1.6, epsilon = 1e-14);
        assert_abs_diff_eq!(f.eval_even(-0.3)[(0, 0)].re, 1.6, epsilon = 1e-14);
    }

    #[test]
    fn hermitian_flag_is_verified() {
        let g = GridSpec::new(8).unwrap();
        let mut bad = CMat::zeros(2, 2);
        bad[(0, 1)] = C64::new(1.0, 0.0);
        assert!(MatrixGrid::hermitian(g, vec![bad.clone(); 9]).is_err());
        assert!(!MatrixGrid::detect(g, vec![bad; 9]).unwrap().is_hermitian());
    }

    #[test]
    #[should_panic]
    fn triangular_kernel_guards_upper_triangle() {
        let k = TriangularKernel::zeros(GridSpec::new(8).unwrap(), 1);
        let _ = k.get(2, 3);
    }
}
