//! Dense real matrices and the small linear-algebra kernels used by the
//! rest of the crate.
//!
//! [`Mat`] stores entries row-major. Indexing is `(i, j)` with zero-based
//! row and column. Public constructors reject non-finite entries. The
//! operator impls (`&a * &b`, `&a + &b`) panic on shape mismatch, while
//! [`Mat::matmul`] and the free functions report [`Error::Dimension`].

use std::fmt;
use std::ops::{Add, Index, IndexMut, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Deserialize)]
struct MatRepr {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl TryFrom<MatRepr> for Mat {
    type Error = Error;

    fn try_from(r: MatRepr) -> Result<Mat> {
        Mat::from_vec(r.rows, r.cols, r.data)
    }
}

/// Dense real matrix with explicit row and column counts.
///
/// Zero-sized matrices are allowed so that an empty null-space basis
/// (`n × 0`) can be carried through the same code paths as a real one.
#[derive(Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "MatRepr")]
pub struct Mat {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl fmt::Debug for Mat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "Mat {}x{} [", self.rows, self.cols)?;
        for i in 0..self.rows {
            write!(f, "  ")?;
            for j in 0..self.cols {
                write!(f, "{:>12.5e} ", self[(i, j)])?;
            }
            writeln!(f)?;
        }
        write!(f, "]")
    }
}

impl Mat {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Mat {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Mat::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    /// Builds a matrix from row-major entries.
    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if rows.checked_mul(cols) != Some(data.len()) {
            return Err(Error::dim(format!(
                "{} entries cannot fill a {rows}x{cols} matrix",
                data.len()
            )));
        }
        if let Some(pos) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::Domain(format!(
                "non-finite entry at ({}, {})",
                pos / cols.max(1),
                pos % cols.max(1)
            )));
        }
        Ok(Mat { rows, cols, data })
    }

    /// Builds a matrix from a slice of equally long rows.
    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let cols = rows.first().map_or(0, |r| r.as_ref().len());
        let mut data = Vec::with_capacity(rows.len() * cols);
        for (i, r) in rows.iter().enumerate() {
            let r = r.as_ref();
            if r.len() != cols {
                return Err(Error::dim(format!(
                    "row {i} has {} entries, expected {cols}",
                    r.len()
                )));
            }
            data.extend_from_slice(r);
        }
        Mat::from_vec(rows.len(), cols, data)
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Mat { rows, cols, data }
    }

    /// Column vector with the given entries.
    pub fn column(values: &[f64]) -> Self {
        Mat {
            rows: values.len(),
            cols: 1,
            data: values.to_vec(),
        }
    }

    pub fn diag(values: &[f64]) -> Self {
        let n = values.len();
        let mut m = Mat::zeros(n, n);
        for (i, &v) in values.iter().enumerate() {
            m[(i, i)] = v;
        }
        m
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    /// Row-major entries.
    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn col(&self, j: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn transpose(&self) -> Mat {
        Mat::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    pub fn scale(&self, alpha: f64) -> Mat {
        Mat {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|v| alpha * v).collect(),
        }
    }

    /// `self += alpha * other`
    pub fn axpy(&mut self, alpha: f64, other: &Mat) {
        assert_eq!(self.shape(), other.shape(), "axpy shape mismatch");
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += alpha * b;
        }
    }

    pub fn matmul(&self, other: &Mat) -> Result<Mat> {
        if self.cols != other.rows {
            return Err(Error::dim(format!(
                "cannot multiply {}x{} by {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let mut out = Mat::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            let out_row = &mut out.data[i * other.cols..(i + 1) * other.cols];
            for k in 0..self.cols {
                let a = self.data[i * self.cols + k];
                if a == 0.0 {
                    continue;
                }
                let b_row = &other.data[k * other.cols..(k + 1) * other.cols];
                for (o, b) in out_row.iter_mut().zip(b_row) {
                    *o += a * b;
                }
            }
        }
        Ok(out)
    }

    /// `self * other^T` without forming the transpose.
    pub fn matmul_t(&self, other: &Mat) -> Mat {
        assert_eq!(self.cols, other.cols, "matmul_t shape mismatch");
        Mat::from_fn(self.rows, other.rows, |i, j| dot(self.row(i), other.row(j)))
    }

    pub fn frobenius_norm(&self) -> f64 {
        // scaled accumulation, avoids overflow for large entries
        let scale = self.max_abs();
        if scale == 0.0 {
            return 0.0;
        }
        let s: f64 = self.data.iter().map(|v| (v / scale).powi(2)).sum();
        scale * s.sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    pub fn trace(&self) -> f64 {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).sum()
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|&v| v == 0.0)
    }

    pub fn all_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    /// Largest entrywise absolute difference. Panics on shape mismatch.
    pub fn max_abs_diff(&self, other: &Mat) -> f64 {
        assert_eq!(self.shape(), other.shape(), "max_abs_diff shape mismatch");
        self.data
            .iter()
            .zip(&other.data)
            .fold(0.0_f64, |m, (a, b)| m.max((a - b).abs()))
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Mat {
        Mat {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&v| f(v)).collect(),
        }
    }

    /// Copies columns `start..end` into a new matrix.
    pub fn columns(&self, start: usize, end: usize) -> Mat {
        Mat::from_fn(self.rows, end - start, |i, j| self[(i, start + j)])
    }
}

impl Index<(usize, usize)> for Mat {
    type Output = f64;

    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        debug_assert!(i < self.rows && j < self.cols);
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for Mat {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        debug_assert!(i < self.rows && j < self.cols);
        &mut self.data[i * self.cols + j]
    }
}

impl Mul for &Mat {
    type Output = Mat;

    fn mul(self, rhs: &Mat) -> Mat {
        self.matmul(rhs).expect("matrix product shape mismatch")
    }
}

impl Add for &Mat {
    type Output = Mat;

    fn add(self, rhs: &Mat) -> Mat {
        let mut out = self.clone();
        out.axpy(1.0, rhs);
        out
    }
}

impl Sub for &Mat {
    type Output = Mat;

    fn sub(self, rhs: &Mat) -> Mat {
        let mut out = self.clone();
        out.axpy(-1.0, rhs);
        out
    }
}

impl Neg for &Mat {
    type Output = Mat;

    fn neg(self) -> Mat {
        self.scale(-1.0)
    }
}

#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Frobenius inner product `trace(aᵀ b)`.
pub fn frobenius_inner(a: &Mat, b: &Mat) -> Result<f64> {
    if a.shape() != b.shape() {
        return Err(Error::dim(format!(
            "inner product of {}x{} and {}x{}",
            a.rows, a.cols, b.rows, b.cols
        )));
    }
    Ok(dot(&a.data, &b.data))
}

pub fn frobenius_norm(a: &Mat) -> f64 {
    a.frobenius_norm()
}

/// Kronecker product; block `(i, j)` of the result is `a[(i, j)] * b`.
pub fn kron(a: &Mat, b: &Mat) -> Result<Mat> {
    let rows = a.rows.checked_mul(b.rows);
    let cols = a.cols.checked_mul(b.cols);
    let (rows, cols) = match (rows, cols) {
        (Some(r), Some(c)) if r.checked_mul(c).is_some() => (r, c),
        _ => {
            return Err(Error::Capacity(format!(
                "kron of {}x{} and {}x{} overflows",
                a.rows, a.cols, b.rows, b.cols
            )))
        }
    };
    let mut out = Mat::zeros(rows, cols);
    for ia in 0..a.rows {
        for ja in 0..a.cols {
            let s = a[(ia, ja)];
            if s == 0.0 {
                continue;
            }
            for ib in 0..b.rows {
                let r = ia * b.rows + ib;
                for jb in 0..b.cols {
                    out[(r, ja * b.cols + jb)] = s * b[(ib, jb)];
                }
            }
        }
    }
    Ok(out)
}

/// Stacks the columns of `x` into a single column.
pub fn vec(x: &Mat) -> Mat {
    let mut data = Vec::with_capacity(x.rows * x.cols);
    for j in 0..x.cols {
        for i in 0..x.rows {
            data.push(x[(i, j)]);
        }
    }
    Mat {
        rows: x.rows * x.cols,
        cols: 1,
        data,
    }
}

/// Inverse of [`vec`]: refills a `rows × cols` matrix column by column.
pub fn unvec(v: &Mat, rows: usize, cols: usize) -> Result<Mat> {
    if v.cols != 1 || v.rows != rows * cols {
        return Err(Error::dim(format!(
            "cannot unvec a {}x{} into {rows}x{cols}",
            v.rows, v.cols
        )));
    }
    Ok(Mat::from_fn(rows, cols, |i, j| v.data[j * rows + i]))
}

/// LU factorization with partial pivoting, reusable across right-hand sides.
#[derive(Clone, Debug)]
pub struct Lu {
    lu: Mat,
    perm: Vec<usize>,
}

impl Lu {
    /// Relative pivot threshold: pivots below `1e-14 * ‖a‖_F` count as zero.
    pub const PIVOT_TOL: f64 = 1e-14;

    pub fn new(a: &Mat) -> Result<Lu> {
        if !a.is_square() {
            return Err(Error::dim(format!(
                "LU needs a square matrix, got {}x{}",
                a.rows, a.cols
            )));
        }
        let n = a.rows;
        let tol = Self::PIVOT_TOL * a.frobenius_norm();
        let mut lu = a.clone();
        let mut perm: Vec<usize> = (0..n).collect();
        for k in 0..n {
            let (p, pivot) = (k..n)
                .map(|i| (i, lu[(i, k)].abs()))
                .fold(
                    (k, -1.0),
                    |best, cur| if cur.1 > best.1 { cur } else { best },
                );
            if pivot <= tol {
                return Err(Error::Singular { column: k, pivot });
            }
            if p != k {
                for j in 0..n {
                    lu.data.swap(k * n + j, p * n + j);
                }
                perm.swap(k, p);
            }
            let d = lu[(k, k)];
            for i in k + 1..n {
                let f = lu[(i, k)] / d;
                lu[(i, k)] = f;
                if f != 0.0 {
                    for j in k + 1..n {
                        lu.data[i * n + j] -= f * lu.data[k * n + j];
                    }
                }
            }
        }
        Ok(Lu { lu, perm })
    }

    pub fn order(&self) -> usize {
        self.lu.rows
    }

    /// Solves `a x = rhs` for every column of `rhs`.
    pub fn solve(&self, rhs: &Mat) -> Result<Mat> {
        let n = self.lu.rows;
        if rhs.rows != n {
            return Err(Error::dim(format!(
                "right-hand side has {} rows, system has order {n}",
                rhs.rows
            )));
        }
        let m = rhs.cols;
        let mut x = Mat::from_fn(n, m, |i, j| rhs[(self.perm[i], j)]);
        for i in 0..n {
            for k in 0..i {
                let f = self.lu[(i, k)];
                if f != 0.0 {
                    for j in 0..m {
                        x.data[i * m + j] -= f * x.data[k * m + j];
                    }
                }
            }
        }
        for i in (0..n).rev() {
            for k in i + 1..n {
                let f = self.lu[(i, k)];
                if f != 0.0 {
                    for j in 0..m {
                        x.data[i * m + j] -= f * x.data[k * m + j];
                    }
                }
            }
            let d = self.lu[(i, i)];
            for j in 0..m {
                x.data[i * m + j] /= d;
            }
        }
        Ok(x)
    }

    /// Solves `x aᵀ = rhs`, i.e. returns `rhs · a⁻ᵀ`.
    pub fn solve_right_transpose(&self, rhs: &Mat) -> Result<Mat> {
        Ok(self.solve(&rhs.transpose())?.transpose())
    }
}

/// Solves the square system `a x = rhs` by pivoted LU.
pub fn solve_dense(a: &Mat, rhs: &Mat) -> Result<Mat> {
    Lu::new(a)?.solve(rhs)
}

/// Relative threshold on the diagonal of R below which [`lstsq`] reports a
/// rank-deficient matrix.
pub const RANK_TOL: f64 = 1e-12;

/// Least-squares solution of `min ‖a y − rhs‖₂` by Householder QR.
///
/// `a` must have at least as many rows as columns and full column rank.
pub fn lstsq(a: &Mat, rhs: &Mat) -> Result<Mat> {
    let (m, n) = a.shape();
    if m < n {
        return Err(Error::dim(format!("lstsq needs rows >= cols, got {m}x{n}")));
    }
    if rhs.rows != m || rhs.cols != 1 {
        return Err(Error::dim(format!(
            "right-hand side must be {m}x1, got {}x{}",
            rhs.rows, rhs.cols
        )));
    }
    let mut r = a.clone();
    let mut b = rhs.data.clone();
    let mut diag = vec![0.0; n];
    for k in 0..n {
        let norm = (k..m).map(|i| r[(i, k)].powi(2)).sum::<f64>().sqrt();
        if norm == 0.0 {
            diag[k] = 0.0;
            continue;
        }
        let alpha = if r[(k, k)] > 0.0 { -norm } else { norm };
        let mut v: Vec<f64> = (k..m).map(|i| r[(i, k)]).collect();
        v[0] -= alpha;
        let vnorm2: f64 = v.iter().map(|x| x * x).sum();
        if vnorm2 > 0.0 {
            for j in k..n {
                let s: f64 = v.iter().enumerate().map(|(t, vi)| vi * r[(k + t, j)]).sum();
                let f = 2.0 * s / vnorm2;
                for (t, vi) in v.iter().enumerate() {
                    r[(k + t, j)] -= f * vi;
                }
            }
            let s: f64 = v.iter().enumerate().map(|(t, vi)| vi * b[k + t]).sum();
            let f = 2.0 * s / vnorm2;
            for (t, vi) in v.iter().enumerate() {
                b[k + t] -= f * vi;
            }
        }
        diag[k] = r[(k, k)];
    }
    let scale = diag.iter().fold(0.0_f64, |acc, d| acc.max(d.abs()));
    for (k, d) in diag.iter().enumerate() {
        if d.abs() <= RANK_TOL * scale || scale == 0.0 {
            return Err(Error::RankDeficient {
                column: k,
                value: d.abs(),
            });
        }
    }
    let mut y = vec![0.0; n];
    for i in (0..n).rev() {
        let s: f64 = (i + 1..n).map(|j| r[(i, j)] * y[j]).sum();
        y[i] = (b[i] - s) / r[(i, i)];
    }
    Ok(Mat::column(&y))
}

/// Eigen-decomposition of a symmetric matrix by cyclic Jacobi rotations.
///
/// Returns `(eigenvalues, eigenvectors)` with eigenvectors stored as columns,
/// so that `a = Q diag(λ) Qᵀ`. Only the symmetric part of `a` is used.
pub fn sym_eigen(a: &Mat) -> Result<(Vec<f64>, Mat)> {
    if !a.is_square() {
        return Err(Error::dim(format!(
            "eigen-decomposition needs a square matrix, got {}x{}",
            a.rows, a.cols
        )));
    }
    let n = a.rows;
    let mut s = Mat::from_fn(n, n, |i, j| 0.5 * (a[(i, j)] + a[(j, i)]));
    let mut q = Mat::identity(n);
    let total = s.frobenius_norm();
    for _sweep in 0..100 {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| s[(i, j)].powi(2))
            .sum::<f64>()
            .sqrt();
        if off <= 1e-15 * total || off == 0.0 {
            break;
        }
        for p in 0..n {
            for r in p + 1..n {
                let apr = s[(p, r)];
                if apr == 0.0 {
                    continue;
                }
                let theta = (s[(r, r)] - s[(p, p)]) / (2.0 * apr);
                let sign = if theta >= 0.0 { 1.0 } else { -1.0 };
                let t = sign / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let sn = t * c;
                for k in 0..n {
                    let skp = s[(k, p)];
                    let skr = s[(k, r)];
                    s[(k, p)] = c * skp - sn * skr;
                    s[(k, r)] = sn * skp + c * skr;
                }
                for k in 0..n {
                    let spk = s[(p, k)];
                    let srk = s[(r, k)];
                    s[(p, k)] = c * spk - sn * srk;
                    s[(r, k)] = sn * spk + c * srk;
                }
                for k in 0..n {
                    let qkp = q[(k, p)];
                    let qkr = q[(k, r)];
                    q[(k, p)] = c * qkp - sn * qkr;
                    q[(k, r)] = sn * qkp + c * qkr;
                }
            }
        }
    }
    let values = (0..n).map(|i| s[(i, i)]).collect();
    Ok((values, q))
}
