//! Global Arnoldi process.
//!
//! Builds an F-orthonormal basis `V₁, V₂, …` of the block Krylov space
//! `span{B, 𝒜(B), 𝒜²(B), …}` for a shape-preserving linear map `𝒜`, using the
//! Frobenius inner product, together with the `(k+1) × k` upper Hessenberg
//! matrix `H̃ₖ` such that `𝒜(Vⱼ) = Σᵢ hᵢⱼ Vᵢ`.
//!
//! For the Kronecker problems `𝒜(V) = K₁⁽¹⁾ V K₁⁽²⁾ᵀ`; with single-column
//! blocks the process is the ordinary Arnoldi iteration.
//!
//! Orthogonalization is classical Gram–Schmidt applied twice per step, so
//! `hᵢⱼ` accumulates the coefficients of both passes.

use crate::error::{Error, Result};
use crate::mat::{frobenius_inner, Mat};

/// A step breaks down when the orthogonalized block has norm at most this
/// fraction of `‖𝒜(Vⱼ)‖_F`.
pub const BREAKDOWN_TOL: f64 = 1e-12;

/// Result of `k` steps of the global Arnoldi process.
#[derive(Clone, Debug)]
pub struct GlobalArnoldiDecomp {
    blocks: Vec<Mat>,
    /// Column `j` holds `h₁,ⱼ … hⱼ₊₁,ⱼ`.
    hess_cols: Vec<Vec<f64>>,
    beta: f64,
    breakdown_at: Option<usize>,
}

impl GlobalArnoldiDecomp {
    /// Number of completed steps `k` (columns of `H̃ₖ`).
    pub fn steps(&self) -> usize {
        self.hess_cols.len()
    }

    /// The stored F-orthonormal blocks: `k + 1` of them, or `k` when the
    /// last step broke down.
    pub fn blocks(&self) -> &[Mat] {
        &self.blocks
    }

    /// `‖B‖_F`
    pub fn beta(&self) -> f64 {
        self.beta
    }

    /// Step `j` (1-based) at which `hⱼ₊₁,ⱼ` vanished, if any.
    pub fn breakdown_at(&self) -> Option<usize> {
        self.breakdown_at
    }

    /// The full `(k+1) × k` Hessenberg matrix.
    pub fn hess(&self) -> Mat {
        self.hess_leading(self.steps())
    }

    /// Leading `(m+1) × m` part of the Hessenberg matrix, `m ≤ k`.
    pub fn hess_leading(&self, m: usize) -> Mat {
        assert!(m <= self.steps(), "only {} steps available", self.steps());
        let mut h = Mat::zeros(m + 1, m);
        for (j, col) in self.hess_cols.iter().take(m).enumerate() {
            for (i, &v) in col.iter().enumerate() {
                h[(i, j)] = v;
            }
        }
        h
    }

    /// `Σᵢ yᵢ Vᵢ` over the first `y.len()` blocks.
    pub fn combine(&self, y: &[f64]) -> Mat {
        assert!(
            y.len() <= self.blocks.len(),
            "more coefficients than blocks"
        );
        let mut out = Mat::zeros(self.blocks[0].rows(), self.blocks[0].cols());
        for (c, v) in y.iter().zip(&self.blocks) {
            out.axpy(*c, v);
        }
        out
    }

    /// Largest `|⟨Vᵢ, Vⱼ⟩ − δᵢⱼ|` over the stored blocks.
    pub fn orthonormality_deviation(&self) -> f64 {
        let mut dev = 0.0_f64;
        for (i, vi) in self.blocks.iter().enumerate() {
            for (j, vj) in self.blocks.iter().enumerate().skip(i) {
                let ip = frobenius_inner(vi, vj).expect("blocks share one shape");
                let target = if i == j { 1.0 } else { 0.0 };
                dev = dev.max((ip - target).abs());
            }
        }
        dev
    }
}

/// Incremental global Arnoldi builder; the decomposition can be extended one
/// step at a time.
pub struct GlobalArnoldi<F> {
    apply: F,
    decomp: GlobalArnoldiDecomp,
    capacity: usize,
}

impl<F> GlobalArnoldi<F>
where
    F: FnMut(&Mat) -> Mat,
{
    pub fn new(apply: F, b: &Mat) -> Result<Self> {
        let beta = b.frobenius_norm();
        if beta == 0.0 {
            return Err(Error::Degenerate("initial block is zero".into()));
        }
        if !b.all_finite() {
            return Err(Error::Domain("initial block has non-finite entries".into()));
        }
        Ok(GlobalArnoldi {
            apply,
            capacity: b.rows() * b.cols(),
            decomp: GlobalArnoldiDecomp {
                blocks: vec![b.scale(1.0 / beta)],
                hess_cols: Vec::new(),
                beta,
                breakdown_at: None,
            },
        })
    }

    pub fn decomp(&self) -> &GlobalArnoldiDecomp {
        &self.decomp
    }

    pub fn into_decomp(self) -> GlobalArnoldiDecomp {
        self.decomp
    }

    pub fn steps(&self) -> usize {
        self.decomp.steps()
    }

    pub fn is_broken_down(&self) -> bool {
        self.decomp.breakdown_at.is_some()
    }

    /// Applies the operator to an arbitrary block.
    pub fn apply(&mut self, v: &Mat) -> Mat {
        (self.apply)(v)
    }

    /// Performs one Arnoldi step. Returns `Ok(false)` without doing anything
    /// once the process has broken down.
    pub fn step(&mut self) -> Result<bool> {
        if self.is_broken_down() {
            return Ok(false);
        }
        let j = self.steps();
        if j + 1 > self.capacity {
            return Err(Error::Capacity(format!(
                "cannot take more than {} steps in a space of that dimension",
                self.capacity
            )));
        }
        let vj = &self.decomp.blocks[j];
        let mut w = (self.apply)(vj);
        if w.shape() != vj.shape() {
            return Err(Error::dim(format!(
                "operator maps {}x{} to {}x{}",
                vj.rows(),
                vj.cols(),
                w.rows(),
                w.cols()
            )));
        }
        if !w.all_finite() {
            return Err(Error::Domain("operator produced non-finite entries".into()));
        }
        let applied_norm = w.frobenius_norm();
        let mut h = vec![0.0; j + 2];
        for _pass in 0..2 {
            let coeffs: Vec<f64> = self
                .decomp
                .blocks
                .iter()
                .map(|v| frobenius_inner(&w, v).expect("blocks share one shape"))
                .collect();
            for (i, (c, v)) in coeffs.iter().zip(&self.decomp.blocks).enumerate() {
                w.axpy(-c, v);
                h[i] += c;
            }
        }
        let sub = w.frobenius_norm();
        h[j + 1] = sub;
        self.decomp.hess_cols.push(h);
        if sub <= BREAKDOWN_TOL * applied_norm || sub == 0.0 {
            self.decomp.breakdown_at = Some(j + 1);
        } else {
            self.decomp.blocks.push(w.scale(1.0 / sub));
        }
        Ok(true)
    }
}

/// Runs `k` steps of the global Arnoldi process (fewer on breakdown).
pub fn global_arnoldi<F>(apply: F, b: &Mat, k: usize) -> Result<GlobalArnoldiDecomp>
where
    F: FnMut(&Mat) -> Mat,
{
    if k == 0 {
        return Err(Error::Domain("number of steps must be positive".into()));
    }
    if k > b.rows() * b.cols() {
        return Err(Error::Capacity(format!(
            "{k} steps requested in a space of dimension {}",
            b.rows() * b.cols()
        )));
    }
    let mut builder = GlobalArnoldi::new(apply, b)?;
    for _ in 0..k {
        if !builder.step()? {
            break;
        }
    }
    Ok(builder.into_decomp())
}

/// `|‖𝒜(Σ yᵢVᵢ) − B‖_F − ‖H̃ y − β e₁‖₂|` for the first `y.len()` steps.
///
/// Both norms agree in exact arithmetic, which is what allows the
/// discrepancy to be evaluated in the projected space.
pub fn residual_identity_deviation<F>(
    decomp: &GlobalArnoldiDecomp,
    mut apply: F,
    y: &[f64],
) -> Result<f64>
where
    F: FnMut(&Mat) -> Mat,
{
    let k = y.len();
    if k == 0 || k > decomp.steps() {
        return Err(Error::dim(format!(
            "coefficient vector of length {k} for {} steps",
            decomp.steps()
        )));
    }
    let x = decomp.combine(y);
    let mut full = apply(&x);
    full.axpy(-decomp.beta, &decomp.blocks[0]);
    let full_norm = full.frobenius_norm();
    let small_norm = projected_residual(&decomp.hess_leading(k), decomp.beta, y);
    Ok((full_norm - small_norm).abs())
}

/// `‖H y − β e₁‖₂`
pub fn projected_residual(hess: &Mat, beta: f64, y: &[f64]) -> f64 {
    let hy = hess * &Mat::column(y);
    let mut r = hy;
    r[(0, 0)] -= beta;
    r.frobenius_norm()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lcg_mat(rows: usize, cols: usize, seed: &mut u64) -> Mat {
        Mat::from_fn(rows, cols, |_, _| {
            *seed = seed
                .wrapping_mul(6364136223846793005)
                .wrapping_add(1442695040888963407);
            ((*seed >> 11) as f64 / (1u64 << 53) as f64) * 2.0 - 1.0
        })
    }

    #[test]
    fn identity_operator_breaks_down_immediately() {
        let mut seed = 1;
        let b = lcg_mat(4, 3, &mut seed);
        let d = global_arnoldi(|v: &Mat| v.clone(), &b, 5).unwrap();
        assert_eq!(d.breakdown_at(), Some(1));
        assert_eq!(d.steps(), 1);
        assert_eq!(d.blocks().len(), 1);
        let h = d.hess();
        assert!((h[(0, 0)] - 1.0).abs() < 1e-15);
        assert!(h[(1, 0)].abs() < 1e-15);
    }

    #[test]
    fn scalar_blocks_follow_power_sequence() {
        // 1x1 blocks: the space is one-dimensional, H = [[a], [0]]
        let b = Mat::from_rows(&[[2.0]]).unwrap();
        let d = global_arnoldi(|v: &Mat| v.scale(3.0), &b, 1).unwrap();
        assert_eq!(d.hess()[(0, 0)], 3.0);
        assert_eq!(d.breakdown_at(), Some(1));
        assert!(global_arnoldi(|v: &Mat| v.scale(3.0), &b, 2).is_err());
    }

    #[test]
    fn random_two_sided_invariants() {
        let mut seed = 42;
        let k1 = lcg_mat(6, 6, &mut seed);
        let k2 = lcg_mat(6, 6, &mut seed);
        let b = lcg_mat(6, 6, &mut seed);
        let apply = |v: &Mat| (&k1 * v).matmul_t(&k2);
        let d = global_arnoldi(apply, &b, 5).unwrap();
        assert_eq!(d.blocks().len(), 6);
        assert!(d.orthonormality_deviation() <= 1e-10);
        let h = d.hess();
        for j in 0..5 {
            let av = apply(&d.blocks()[j]);
            let mut rec = Mat::zeros(6, 6);
            for i in 0..=j + 1 {
                rec.axpy(h[(i, j)], &d.blocks()[i]);
            }
            assert!((&av - &rec).frobenius_norm() <= 1e-10 * av.frobenius_norm());
            for i in j + 2..h.rows() {
                assert_eq!(h[(i, j)], 0.0);
            }
        }
    }

    #[test]
    fn residual_identity_examples() {
        let mut seed = 8;
        let k1 = lcg_mat(6, 6, &mut seed);
        let k2 = lcg_mat(6, 6, &mut seed);
        let b = lcg_mat(6, 6, &mut seed);
        let apply = |v: &Mat| (&k1 * v).matmul_t(&k2);
        let d = global_arnoldi(apply, &b, 5).unwrap();
        let zero = residual_identity_deviation(&d, apply, &[0.0; 5]).unwrap();
        assert!(zero <= 1e-14 * d.beta());
        for _ in 0..10 {
            let y = lcg_mat(5, 1, &mut seed);
            let dev = residual_identity_deviation(&d, apply, y.as_slice()).unwrap();
            assert!(dev <= 1e-10 * d.beta());
        }
        assert!(residual_identity_deviation(&d, apply, &[0.0; 6]).is_err());
    }

    #[test]
    fn happy_breakdown_exact_solution() {
        // diagonal operator with 2 distinct values: grade 2
        let apply = |v: &Mat| {
            Mat::from_fn(v.rows(), v.cols(), |i, j| {
                if i < 2 {
                    2.0 * v[(i, j)]
                } else {
                    -v[(i, j)]
                }
            })
        };
        let b = Mat::from_fn(4, 2, |i, j| 1.0 + i as f64 + 0.5 * j as f64);
        let d = global_arnoldi(apply, &b, 6).unwrap();
        assert_eq!(d.breakdown_at(), Some(2));
        let h = d.hess_leading(2);
        let square = Mat::from_fn(2, 2, |i, j| h[(i, j)]);
        let rhs = Mat::column(&[d.beta(), 0.0]);
        let y = crate::mat::solve_dense(&square, &rhs).unwrap();
        let dev = residual_identity_deviation(&d, apply, y.as_slice()).unwrap();
        assert!(dev <= 1e-10 * d.beta());
        assert!(projected_residual(&h, d.beta(), y.as_slice()) <= 1e-10 * d.beta());
    }

    #[test]
    fn zero_block_and_zero_steps_rejected() {
        let z = Mat::zeros(3, 3);
        assert!(matches!(
            global_arnoldi(|v: &Mat| v.clone(), &z, 1),
            Err(Error::Degenerate(_))
        ));
        assert!(global_arnoldi(|v: &Mat| v.clone(), &Mat::identity(3), 0).is_err());
        assert!(matches!(
            global_arnoldi(|v: &Mat| v.clone(), &Mat::identity(2), 5),
            Err(Error::Capacity(_))
        ));
    }

    #[test]
    fn incremental_matches_batch() {
        let mut seed = 77;
        let k1 = lcg_mat(5, 5, &mut seed);
        let b = lcg_mat(5, 5, &mut seed);
        let apply = |v: &Mat| &(&k1 * v) * &k1.transpose();
        let batch = global_arnoldi(apply, &b, 4).unwrap();
        let mut inc = GlobalArnoldi::new(apply, &b).unwrap();
        for _ in 0..4 {
            inc.step().unwrap();
        }
        assert_eq!(inc.decomp().hess(), batch.hess());
    }
}
