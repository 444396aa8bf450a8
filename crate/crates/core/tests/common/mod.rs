#![allow(dead_code)]

use kronreg::Mat;
use nalgebra::{DMatrix, DVector};

/// Small deterministic generator for test data.
pub struct Rng(u64);

impl Rng {
    pub fn new(seed: u64) -> Self {
        Rng(seed ^ 0x2545_F491_4F6C_DD1D)
    }

    /// Uniform in [-1, 1).
    pub fn uniform(&mut self) -> f64 {
        self.0 = self
            .0
            .wrapping_mul(6364136223846793005)
            .wrapping_add(1442695040888963407);
        ((self.0 >> 11) as f64 / (1u64 << 53) as f64) * 2.0 - 1.0
    }

    pub fn below(&mut self, n: usize) -> usize {
        (((self.uniform() + 1.0) / 2.0) * n as f64) as usize % n
    }

    pub fn mat(&mut self, rows: usize, cols: usize) -> Mat {
        Mat::from_fn(rows, cols, |_, _| self.uniform())
    }

    /// `I + 0.3 R` with `R` uniform: comfortably invertible.
    pub fn well_conditioned(&mut self, n: usize) -> Mat {
        let mut a = self.mat(n, n).scale(0.3 / (n as f64).sqrt());
        for i in 0..n {
            a[(i, i)] += 1.0;
        }
        a
    }

    /// `n × l` matrix with orthonormal columns.
    pub fn orthonormal(&mut self, n: usize, l: usize) -> Mat {
        let g = to_na(&self.mat(n, l));
        let q = g.qr().q();
        from_na(&q.columns(0, l).into_owned())
    }
}

pub fn to_na(m: &Mat) -> DMatrix<f64> {
    DMatrix::from_fn(m.rows(), m.cols(), |i, j| m[(i, j)])
}

pub fn from_na(m: &DMatrix<f64>) -> Mat {
    Mat::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)])
}

/// Column-stacking in nalgebra terms.
pub fn na_vec(m: &DMatrix<f64>) -> DVector<f64> {
    DVector::from_column_slice(m.as_slice())
}

/// Dense Tikhonov solution from the normal equations, via nalgebra.
pub fn tikhonov_oracle(
    k: &DMatrix<f64>,
    b: &DVector<f64>,
    l: &DMatrix<f64>,
    mu: f64,
) -> DVector<f64> {
    let normal = k.transpose() * k + l.transpose() * l * mu;
    normal
        .lu()
        .solve(&(k.transpose() * b))
        .expect("normal matrix is invertible")
}

/// Arnoldi on vectors with modified Gram–Schmidt, repeated once; returns
/// the `(k+1) × k` Hessenberg matrix.
pub fn standard_arnoldi(a: &DMatrix<f64>, b: &DVector<f64>, k: usize) -> DMatrix<f64> {
    let mut q = vec![b / b.norm()];
    let mut h = DMatrix::zeros(k + 1, k);
    for j in 0..k {
        let mut w = a * &q[j];
        for _ in 0..2 {
            for i in 0..=j {
                let c = w.dot(&q[i]);
                h[(i, j)] += c;
                w -= &q[i] * c;
            }
        }
        h[(j + 1, j)] = w.norm();
        q.push(w / h[(j + 1, j)]);
    }
    h
}

pub fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let m = v.len() / 2;
    if v.len() % 2 == 1 {
        v[m]
    } else {
        0.5 * (v[m - 1] + v[m])
    }
}

pub fn rel_diff(a: &Mat, b: &Mat) -> f64 {
    (a - b).frobenius_norm() / b.frobenius_norm()
}
