//! Dense linear algebra used throughout the solvers.
//!
//! Matrices are small (a few hundred rows at most) so everything is dense and
//! row-major. Only the kernels the solvers actually need are provided: an LU
//! solve with partial pivoting, a Cholesky factorization for Newton systems
//! and a Perron-root estimator for non-negative matrices.

use crate::error::{Error, Result};

/// Row-major dense matrix of finite reals.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl DenseMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    /// Builds a matrix from row-major storage.
    pub fn from_row_major(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::Dimension(format!(
                "{} entries supplied for a {rows}x{cols} matrix",
                data.len()
            )));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("matrix"));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        let m = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != m) {
            return Err(Error::Dimension("ragged rows".into()));
        }
        Self::from_row_major(n, m, rows.concat())
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t[(j, i)] = self[(i, j)];
            }
        }
        t
    }

    /// `self * x`.
    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        debug_assert_eq!(x.len(), self.cols);
        (0..self.rows)
            .map(|i| self.row(i).iter().zip(x).map(|(a, b)| a * b).sum())
            .collect()
    }

    /// `self^T * y`.
    pub fn tr_mul_vec(&self, y: &[f64]) -> Vec<f64> {
        debug_assert_eq!(y.len(), self.rows);
        let mut out = vec![0.0; self.cols];
        for (i, yi) in y.iter().enumerate() {
            if *yi == 0.0 {
                continue;
            }
            for (o, a) in out.iter_mut().zip(self.row(i)) {
                *o += a * yi;
            }
        }
        out
    }

    /// Principal submatrix on the given (ordered) index set.
    pub fn principal(&self, idx: &[usize]) -> Self {
        let n = idx.len();
        let mut m = Self::zeros(n, n);
        for (a, &i) in idx.iter().enumerate() {
            for (b, &j) in idx.iter().enumerate() {
                m[(a, b)] = self[(i, j)];
            }
        }
        m
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }
}

impl std::ops::Index<(usize, usize)> for DenseMatrix {
    type Output = f64;
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.cols + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for DenseMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.cols + j]
    }
}

pub fn norm_inf(v: &[f64]) -> f64 {
    v.iter().fold(0.0_f64, |m, x| m.max(x.abs()))
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Solves `m x = b` by LU with partial pivoting.
///
/// A pivot below `n * 64 * eps * max|m|` is treated as exact singularity.
pub fn solve_linear(m: &DenseMatrix, b: &[f64]) -> Result<Vec<f64>> {
    if !m.is_square() {
        return Err(Error::Dimension(format!(
            "solve_linear needs a square matrix, got {}x{}",
            m.rows, m.cols
        )));
    }
    let n = m.rows;
    if b.len() != n {
        return Err(Error::Dimension(format!(
            "right-hand side has length {}, expected {n}",
            b.len()
        )));
    }
    let mut lu = m.data.clone();
    let mut x = b.to_vec();
    let threshold = (n.max(1) as f64) * 64.0 * f64::EPSILON * m.max_abs().max(f64::MIN_POSITIVE);

    for col in 0..n {
        let (piv_row, piv_abs) = (col..n)
            .map(|r| (r, lu[r * n + col].abs()))
            .fold((col, -1.0), |best, cur| if cur.1 > best.1 { cur } else { best });
        if piv_abs <= threshold {
            return Err(Error::Singular {
                column: col,
                pivot: piv_abs,
            });
        }
        if piv_row != col {
            for j in 0..n {
                lu.swap(col * n + j, piv_row * n + j);
            }
            x.swap(col, piv_row);
        }
        let pivot = lu[col * n + col];
        for r in col + 1..n {
            let factor = lu[r * n + col] / pivot;
            if factor == 0.0 {
                continue;
            }
            lu[r * n + col] = 0.0;
            for j in col + 1..n {
                lu[r * n + j] -= factor * lu[col * n + j];
            }
            x[r] -= factor * x[col];
        }
    }
    for i in (0..n).rev() {
        let tail: f64 = (i + 1..n).map(|j| lu[i * n + j] * x[j]).sum();
        x[i] = (x[i] - tail) / lu[i * n + i];
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("linear solve"));
    }
    Ok(x)
}

/// Lower-triangular Cholesky factor of a symmetric positive definite matrix.
#[derive(Debug, Clone)]
pub struct Cholesky {
    n: usize,
    l: Vec<f64>,
}

impl Cholesky {
    /// Factors `m + shift * I`. Fails if a non-positive pivot appears.
    pub fn factor_shifted(m: &DenseMatrix, shift: f64) -> Result<Self> {
        if !m.is_square() {
            return Err(Error::Dimension("Cholesky needs a square matrix".into()));
        }
        let n = m.rows;
        let mut l = vec![0.0; n * n];
        for j in 0..n {
            let mut d = m[(j, j)] + shift;
            for k in 0..j {
                d -= l[j * n + k] * l[j * n + k];
            }
            if !(d > 0.0) || !d.is_finite() {
                return Err(Error::NotPositiveDefinite);
            }
            let djj = d.sqrt();
            l[j * n + j] = djj;
            for i in j + 1..n {
                let mut s = m[(i, j)];
                for k in 0..j {
                    s -= l[i * n + k] * l[j * n + k];
                }
                l[i * n + j] = s / djj;
            }
        }
        Ok(Self { n, l })
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = self.n;
        let mut y = b.to_vec();
        for i in 0..n {
            let s: f64 = (0..i).map(|k| self.l[i * n + k] * y[k]).sum();
            y[i] = (y[i] - s) / self.l[i * n + i];
        }
        for i in (0..n).rev() {
            let s: f64 = (i + 1..n).map(|k| self.l[k * n + i] * y[k]).sum();
            y[i] = (y[i] - s) / self.l[i * n + i];
        }
        y
    }
}

/// Outcome of a Perron-root estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectralEstimate {
    pub rho: f64,
    /// Collatz–Wielandt bounds `lower <= rho <= upper`, valid even when unconverged.
    pub lower: f64,
    pub upper: f64,
    pub converged: bool,
    pub iterations: usize,
}

pub const SPECTRAL_TOL: f64 = 1e-10;
pub const SPECTRAL_MAX_ITER: usize = 10_000;

/// Spectral radius of an element-wise non-negative square matrix.
///
/// Power iteration on `B + I` from the all-ones vector. The shift makes the
/// Perron root `rho + 1` the unique eigenvalue of largest modulus, so
/// bipartite-like matrices whose spectrum contains `-rho` do not oscillate.
/// Iterates stay strictly positive, which keeps the Collatz–Wielandt bounds
/// available at every step.
pub fn spectral_radius(b: &DenseMatrix, tol: f64, max_iter: usize) -> Result<SpectralEstimate> {
    if !b.is_square() {
        return Err(Error::Dimension("spectral_radius needs a square matrix".into()));
    }
    let n = b.rows;
    for i in 0..n {
        for j in 0..n {
            if b[(i, j)] < 0.0 {
                return Err(Error::NegativeEntry { row: i, col: j });
            }
        }
    }
    if n == 0 {
        return Ok(SpectralEstimate {
            rho: 0.0,
            lower: 0.0,
            upper: 0.0,
            converged: true,
            iterations: 0,
        });
    }

    let mut x = vec![1.0; n];
    let mut prev = f64::NAN;
    let mut quiet = 0;
    let mut est = SpectralEstimate {
        rho: f64::NAN,
        lower: 0.0,
        upper: f64::INFINITY,
        converged: false,
        iterations: 0,
    };
    for it in 1..=max_iter {
        let mut y = b.mul_vec(&x);
        for (yi, xi) in y.iter_mut().zip(&x) {
            *yi += xi;
        }
        let (mut lo, mut hi) = (f64::INFINITY, 0.0_f64);
        for (yi, xi) in y.iter().zip(&x) {
            let r = yi / xi;
            lo = lo.min(r);
            hi = hi.max(r);
        }
        let rayleigh = dot(&x, &y) / dot(&x, &x) - 1.0;
        est.iterations = it;
        est.lower = est.lower.max(lo - 1.0);
        est.upper = est.upper.min(hi - 1.0);
        est.rho = rayleigh.clamp(est.lower, est.upper);

        let scale = est.rho.abs().max(f64::MIN_POSITIVE);
        if est.upper - est.lower <= tol * scale {
            est.rho = 0.5 * (est.upper + est.lower);
            est.converged = true;
            return Ok(est);
        }
        if (est.rho - prev).abs() <= tol * scale {
            quiet += 1;
            if quiet >= 3 {
                est.converged = true;
                return Ok(est);
            }
        } else {
            quiet = 0;
        }
        prev = est.rho;

        let norm = norm_inf(&y);
        if !norm.is_finite() {
            return Err(Error::NonFinite("power iteration"));
        }
        x = y.into_iter().map(|v| v / norm).collect();
    }
    Ok(est)
}
