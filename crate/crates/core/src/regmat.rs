//! Regularization stencils, their null spaces, orthogonal projectors and the
//! Frobenius-nearest Kronecker-structured regularization matrices.
//!
//! The difference stencils come in a rectangular form with a nontrivial null
//! space ([`StencilKind::L1`], [`StencilKind::L2`]) and a square invertible
//! form ([`StencilKind::L1Square`], [`StencilKind::L2Square`]). A
//! [`RegFactor`] combines an invertible square stencil with an orthogonal
//! projector, composed either on the left (`P·L̃`, range constraint) or on
//! the right (`L̃·P`, null-space constraint).
//!
//! For a Kronecker product `A⁽ᵈ⁾ ⊗ … ⊗ A⁽¹⁾`, the closest matrix whose
//! factors annihilate given subspaces is obtained factor by factor as
//! `A⁽ⁱ⁾P⁽ⁱ⁾` ([`closest_with_nullspace`]); the closest matrix whose factor
//! ranges avoid given subspaces is `P⁽ⁱ⁾A⁽ⁱ⁾` ([`closest_with_range`]).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mat::{frobenius_inner, kron, Mat};

/// Difference stencils on a grid with `n` points.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum StencilKind {
    /// First differences, `(n−1) × n`, rows `½[…, 1, −1, …]`.
    L1,
    /// Second differences, `(n−2) × n`, rows `¼[…, −1, 2, −1, …]`.
    L2,
    /// Square upper-bidiagonal completion of `L1`.
    L1Square,
    /// Square tridiagonal completion of `L2`.
    L2Square,
}

impl StencilKind {
    pub fn min_order(self) -> usize {
        match self {
            StencilKind::L1 | StencilKind::L1Square => 2,
            StencilKind::L2 | StencilKind::L2Square => 3,
        }
    }

    /// The invertible square counterpart of a rectangular kind.
    pub fn square(self) -> StencilKind {
        match self {
            StencilKind::L1 | StencilKind::L1Square => StencilKind::L1Square,
            StencilKind::L2 | StencilKind::L2Square => StencilKind::L2Square,
        }
    }

    pub fn is_square(self) -> bool {
        matches!(self, StencilKind::L1Square | StencilKind::L2Square)
    }

    fn digit(self) -> u8 {
        match self {
            StencilKind::L1 | StencilKind::L1Square => 1,
            StencilKind::L2 | StencilKind::L2Square => 2,
        }
    }

    fn check_order(self, n: usize) -> Result<()> {
        if n < self.min_order() {
            return Err(Error::dim(format!(
                "{self:?} needs n >= {}, got {n}",
                self.min_order()
            )));
        }
        Ok(())
    }
}

/// Returns the stencil matrix including its `½` or `¼` prefactor.
pub fn make_stencil(kind: StencilKind, n: usize) -> Result<Mat> {
    kind.check_order(n)?;
    let m = match kind {
        StencilKind::L1 => Mat::from_fn(n - 1, n, |i, j| {
            if j == i {
                0.5
            } else if j == i + 1 {
                -0.5
            } else {
                0.0
            }
        }),
        StencilKind::L2 => Mat::from_fn(n - 2, n, |i, j| {
            if j == i || j == i + 2 {
                -0.25
            } else if j == i + 1 {
                0.5
            } else {
                0.0
            }
        }),
        StencilKind::L1Square => Mat::from_fn(n, n, |i, j| {
            if j == i {
                0.5
            } else if j == i + 1 {
                -0.5
            } else {
                0.0
            }
        }),
        StencilKind::L2Square => Mat::from_fn(n, n, |i, j| {
            if i == j {
                0.5
            } else if i.abs_diff(j) == 1 {
                -0.25
            } else {
                0.0
            }
        }),
    };
    Ok(m)
}

/// Orthonormal basis of the stencil's null space.
///
/// `L1` gives the normalized constant vector, `L2` the orthonormalized pair
/// {constant, linear ramp}. The square kinds are invertible and yield an
/// `n × 0` matrix.
pub fn nullspace_basis(kind: StencilKind, n: usize) -> Result<Mat> {
    kind.check_order(n)?;
    let vectors: Vec<Vec<f64>> = match kind {
        StencilKind::L1 => vec![vec![1.0; n]],
        StencilKind::L2 => vec![vec![1.0; n], (1..=n).map(|i| i as f64).collect()],
        StencilKind::L1Square | StencilKind::L2Square => vec![],
    };
    orthonormalize(&vectors, n)
}

/// Modified Gram–Schmidt with one reorthogonalization pass.
fn orthonormalize(vectors: &[Vec<f64>], n: usize) -> Result<Mat> {
    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(vectors.len());
    for v in vectors {
        let mut w = v.clone();
        let original: f64 = w.iter().map(|x| x * x).sum::<f64>().sqrt();
        for _pass in 0..2 {
            for q in &basis {
                let c: f64 = q.iter().zip(&w).map(|(a, b)| a * b).sum();
                for (wi, qi) in w.iter_mut().zip(q) {
                    *wi -= c * qi;
                }
            }
        }
        let norm: f64 = w.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm <= 1e-12 * original {
            return Err(Error::Precondition(
                "null-space generators are linearly dependent".into(),
            ));
        }
        w.iter_mut().for_each(|x| *x /= norm);
        basis.push(w);
    }
    Ok(Mat::from_fn(n, basis.len(), |i, j| basis[j][i]))
}

/// Orthogonal projector `P = I − V Vᵀ` together with the basis `V` of its
/// null space.
#[derive(Clone, Debug, PartialEq)]
pub struct OrthoProjector {
    p: Mat,
    basis: Mat,
}

impl OrthoProjector {
    pub fn matrix(&self) -> &Mat {
        &self.p
    }

    /// Orthonormal basis of `N(P)`, `n × ℓ`.
    pub fn basis(&self) -> &Mat {
        &self.basis
    }

    pub fn order(&self) -> usize {
        self.p.rows()
    }

    /// Dimension `ℓ` of the removed subspace.
    pub fn removed_dim(&self) -> usize {
        self.basis.cols()
    }

    pub fn identity(n: usize) -> Self {
        OrthoProjector {
            p: Mat::identity(n),
            basis: Mat::zeros(n, 0),
        }
    }
}

/// Tolerance on `VᵀV = I` accepted by [`projector_from_basis`].
pub const ORTHONORMAL_TOL: f64 = 1e-10;

/// Builds `P = I − V Vᵀ` from a basis with orthonormal columns.
///
/// An `n × 0` basis yields the identity.
pub fn projector_from_basis(v: &Mat) -> Result<OrthoProjector> {
    let (n, l) = v.shape();
    if n == 0 {
        return Err(Error::dim("projector of order 0"));
    }
    if l >= n {
        return Err(Error::Precondition(format!(
            "basis with {l} columns leaves nothing of R^{n}"
        )));
    }
    let gram = &v.transpose() * v;
    let dev = gram.max_abs_diff(&Mat::identity(l));
    if dev > ORTHONORMAL_TOL {
        return Err(Error::Precondition(format!(
            "basis columns are not orthonormal (deviation {dev:e})"
        )));
    }
    let vvt = v.matmul_t(v);
    let mut p = &Mat::identity(n) - &vvt;
    // symmetrize exactly
    for i in 0..n {
        for j in i + 1..n {
            let s = 0.5 * (p[(i, j)] + p[(j, i)]);
            p[(i, j)] = s;
            p[(j, i)] = s;
        }
    }
    Ok(OrthoProjector {
        p,
        basis: v.clone(),
    })
}

/// Diagonal range projectors with zeros at the boundary rows:
/// `diag(0, 1, …, 1, 0)` for `L2` and `diag(1, …, 1, 0)` for `L1`.
pub fn example_range_projector(kind: StencilKind, n: usize) -> Result<OrthoProjector> {
    kind.check_order(n)?;
    let zeroed: Vec<usize> = match kind {
        StencilKind::L1 => vec![n - 1],
        StencilKind::L2 => vec![0, n - 1],
        _ => {
            return Err(Error::Domain(format!(
                "range projector is defined for L1 and L2, not {kind:?}"
            )))
        }
    };
    let basis = Mat::from_fn(
        n,
        zeroed.len(),
        |i, j| if zeroed[j] == i { 1.0 } else { 0.0 },
    );
    let mut diag = vec![1.0; n];
    for &z in &zeroed {
        diag[z] = 0.0;
    }
    Ok(OrthoProjector {
        p: Mat::diag(&diag),
        basis,
    })
}

fn check_factor_lists(a: &[Mat], v: &[Mat], rows_match: bool) -> Result<()> {
    if a.is_empty() || a.len() != v.len() {
        return Err(Error::dim(format!(
            "need equally many (>= 1) matrix and basis factors, got {} and {}",
            a.len(),
            v.len()
        )));
    }
    for (i, (ai, vi)) in a.iter().zip(v).enumerate() {
        let dim = if rows_match { ai.rows() } else { ai.cols() };
        if dim != vi.rows() {
            return Err(Error::dim(format!(
                "factor {i}: {}x{} matrix does not conform to {}x{} basis",
                ai.rows(),
                ai.cols(),
                vi.rows(),
                vi.cols()
            )));
        }
    }
    Ok(())
}

fn projectors(v: &[Mat]) -> Result<Vec<OrthoProjector>> {
    v.iter()
        .map(|vi| {
            if vi.cols() == 0 {
                Ok(OrthoProjector::identity(vi.rows()))
            } else {
                projector_from_basis(vi)
            }
        })
        .collect()
}

/// Closest Kronecker product (Frobenius norm) whose factors annihilate
/// `R(V⁽ⁱ⁾)`: returns the factors `A⁽ⁱ⁾ P⁽ⁱ⁾`.
///
/// Factor lists are ordered `[A⁽¹⁾, …, A⁽ᵈ⁾]`; the full matrix is
/// `A⁽ᵈ⁾ ⊗ … ⊗ A⁽¹⁾` (see [`kron_chain`]). An empty basis means no
/// constraint on that factor.
pub fn closest_with_nullspace(a_factors: &[Mat], v_factors: &[Mat]) -> Result<Vec<Mat>> {
    check_factor_lists(a_factors, v_factors, false)?;
    let ps = projectors(v_factors)?;
    Ok(a_factors
        .iter()
        .zip(&ps)
        .map(|(a, p)| a * p.matrix())
        .collect())
}

/// Closest Kronecker product (Frobenius norm) whose factor ranges are
/// orthogonal to `R(V⁽ⁱ⁾)`: returns the factors `P⁽ⁱ⁾ A⁽ⁱ⁾`.
pub fn closest_with_range(a_factors: &[Mat], v_factors: &[Mat]) -> Result<Vec<Mat>> {
    check_factor_lists(a_factors, v_factors, true)?;
    let ps = projectors(v_factors)?;
    Ok(a_factors
        .iter()
        .zip(&ps)
        .map(|(a, p)| p.matrix() * a)
        .collect())
}

/// `factors[d−1] ⊗ … ⊗ factors[0]`.
pub fn kron_chain(factors: &[Mat]) -> Result<Mat> {
    let mut iter = factors.iter();
    let first = iter
        .next()
        .ok_or_else(|| Error::dim("empty Kronecker chain"))?
        .clone();
    iter.try_fold(first, |acc, f| kron(f, &acc))
}

/// Frobenius inner product of two Kronecker chains, computed factorwise as
/// `∏ ⟨Bᵢ, Aᵢ⟩`.
pub fn kron_chain_inner(a: &[Mat], b: &[Mat]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::dim("chains of different length"));
    }
    a.iter()
        .zip(b)
        .try_fold(1.0, |acc, (x, y)| Ok(acc * frobenius_inner(x, y)?))
}

/// How the projector is composed with the invertible base stencil.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Side {
    /// `L = L̃`
    None,
    /// `L = P·L̃`, with the diagonal boundary projector.
    Left,
    /// `L = L̃·P`, with `P` projecting out the null space of the stencil.
    Right,
}

/// One Kronecker factor of a regularization operator.
#[derive(Clone, Debug)]
pub struct RegFactor {
    kind: StencilKind,
    base: Mat,
    projector: Option<OrthoProjector>,
    side: Side,
}

impl RegFactor {
    /// Assembles a factor from parts, checking that `base` is square and
    /// that the projector matches the side.
    pub fn new(
        kind: StencilKind,
        base: Mat,
        projector: Option<OrthoProjector>,
        side: Side,
    ) -> Result<Self> {
        if !base.is_square() {
            return Err(Error::dim("regularization base must be square"));
        }
        match (&projector, side) {
            (None, Side::None) => {}
            (Some(p), Side::Left | Side::Right) if p.order() == base.rows() => {}
            _ => {
                return Err(Error::Precondition(format!(
                    "side {side:?} does not match the supplied projector"
                )))
            }
        }
        crate::mat::Lu::new(&base)?;
        Ok(RegFactor {
            kind: kind.square(),
            base,
            projector,
            side,
        })
    }

    /// A plain invertible factor `L̃` without projector.
    pub fn plain(kind: StencilKind, base: Mat) -> Result<Self> {
        RegFactor::new(kind, base, None, Side::None)
    }

    pub fn kind(&self) -> StencilKind {
        self.kind
    }

    pub fn base(&self) -> &Mat {
        &self.base
    }

    pub fn projector(&self) -> Option<&OrthoProjector> {
        self.projector.as_ref()
    }

    pub fn side(&self) -> Side {
        self.side
    }

    pub fn order(&self) -> usize {
        self.base.rows()
    }

    /// The regularization matrix this factor stands for: `L̃`, `P·L̃` or `L̃·P`.
    pub fn effective(&self) -> Mat {
        match (&self.projector, self.side) {
            (Some(p), Side::Left) => p.matrix() * &self.base,
            (Some(p), Side::Right) => &self.base * p.matrix(),
            _ => self.base.clone(),
        }
    }

    /// Short label, e.g. `Lt2`, `P2Lt2`, `Lt2P2`.
    pub fn label(&self) -> String {
        let d = self.kind.digit();
        match self.side {
            Side::None => format!("Lt{d}"),
            Side::Left => format!("P{d}Lt{d}"),
            Side::Right => format!("Lt{d}P{d}"),
        }
    }
}

/// Builds the factor used by the experiments: base `L̃` of the given family,
/// with the boundary range projector on the left or the null-space projector
/// on the right.
pub fn reg_factor(kind: StencilKind, n: usize, side: Side) -> Result<RegFactor> {
    if kind.is_square() {
        return Err(Error::Domain(format!(
            "reg_factor takes the L1 or L2 family, not {kind:?}"
        )));
    }
    let base = make_stencil(kind.square(), n)?;
    let projector = match side {
        Side::None => None,
        Side::Left => Some(example_range_projector(kind, n)?),
        Side::Right => Some(projector_from_basis(&nullspace_basis(kind, n)?)?),
    };
    RegFactor::new(kind, base, projector, side)
}

/// Stacked tensor regularizer `[I ⊗ L; L ⊗ I]` built from a rectangular
/// stencil. Only used as a comparison fixture; the solver works with
/// Kronecker-product regularizers.
pub fn stacked_tensor_regularizer(kind: StencilKind, n: usize) -> Result<Mat> {
    if kind.is_square() {
        return Err(Error::Domain(
            "stacked regularizer needs a rectangular stencil".into(),
        ));
    }
    let l = make_stencil(kind, n)?;
    let eye = Mat::identity(n);
    let top = kron(&eye, &l)?;
    let bottom = kron(&l, &eye)?;
    let cols = top.cols();
    let rows = top.rows() + bottom.rows();
    Ok(Mat::from_fn(rows, cols, |i, j| {
        if i < top.rows() {
            top[(i, j)]
        } else {
            bottom[(i - top.rows(), j)]
        }
    }))
}

#[cfg(test)]
mod tests {
    use super::*;

    const KINDS: [StencilKind; 4] = [
        StencilKind::L1,
        StencilKind::L2,
        StencilKind::L1Square,
        StencilKind::L2Square,
    ];

    #[test]
    fn stencil_l1_n3() {
        let l = make_stencil(StencilKind::L1, 3).unwrap();
        let expected = Mat::from_rows(&[[1.0, -1.0, 0.0], [0.0, 1.0, -1.0]])
            .unwrap()
            .scale(0.5);
        assert_eq!(l, expected);
    }

    #[test]
    fn stencil_l2_square_n3() {
        let l = make_stencil(StencilKind::L2Square, 3).unwrap();
        let expected = Mat::from_rows(&[[2.0, -1.0, 0.0], [-1.0, 2.0, -1.0], [0.0, -1.0, 2.0]])
            .unwrap()
            .scale(0.25);
        assert_eq!(l, expected);
    }

    #[test]
    fn stencil_shapes_and_minimum_order() {
        assert_eq!(make_stencil(StencilKind::L1, 6).unwrap().shape(), (5, 6));
        assert_eq!(make_stencil(StencilKind::L2, 6).unwrap().shape(), (4, 6));
        assert_eq!(
            make_stencil(StencilKind::L1Square, 6).unwrap().shape(),
            (6, 6)
        );
        assert!(make_stencil(StencilKind::L2, 2).is_err());
        assert!(make_stencil(StencilKind::L2Square, 2).is_err());
        assert!(make_stencil(StencilKind::L1, 1).is_err());
        assert!(make_stencil(StencilKind::L1Square, 2).is_ok());
    }

    #[test]
    fn l1_annihilates_constants() {
        let l = make_stencil(StencilKind::L1, 5).unwrap();
        let ones = Mat::column(&[1.0; 5]);
        assert!((&l * &ones).is_zero());
    }

    #[test]
    fn nullspace_bases() {
        let v = nullspace_basis(StencilKind::L1, 4).unwrap();
        assert_eq!(v.shape(), (4, 1));
        assert!(v.max_abs_diff(&Mat::column(&[0.5; 4])) < 1e-15);

        let v = nullspace_basis(StencilKind::L2, 4).unwrap();
        assert_eq!(v.shape(), (4, 2));
        assert!((&v.transpose() * &v).max_abs_diff(&Mat::identity(2)) < 1e-13);
        let l = make_stencil(StencilKind::L2, 4).unwrap();
        assert!((&l * &v).max_abs() <= 1e-13);

        for kind in [StencilKind::L1Square, StencilKind::L2Square] {
            assert_eq!(nullspace_basis(kind, 5).unwrap().shape(), (5, 0));
        }
    }

    #[test]
    fn projector_examples() {
        let e1 = Mat::column(&[1.0, 0.0, 0.0]);
        let p = projector_from_basis(&e1).unwrap();
        assert_eq!(p.matrix(), &Mat::diag(&[0.0, 1.0, 1.0]));

        let p = projector_from_basis(&Mat::column(&[0.5; 4])).unwrap();
        assert!((p.matrix() * &Mat::column(&[1.0; 4])).max_abs() < 1e-15);
        assert!((p.matrix().trace() - 3.0).abs() < 1e-14);

        let p = projector_from_basis(&Mat::zeros(4, 0)).unwrap();
        assert_eq!(p.matrix(), &Mat::identity(4));

        let bad = Mat::column(&[1.0, 1.0, 0.0]);
        assert!(matches!(
            projector_from_basis(&bad),
            Err(Error::Precondition(_))
        ));
    }

    #[test]
    fn projector_invariants() {
        for kind in [StencilKind::L1, StencilKind::L2] {
            for n in 3..9 {
                let p = projector_from_basis(&nullspace_basis(kind, n).unwrap()).unwrap();
                let m = p.matrix();
                assert!(m.max_abs_diff(&m.transpose()) <= 1e-13);
                assert!((m * m).max_abs_diff(m) <= 1e-13);
                assert!((m * p.basis()).max_abs() <= 1e-13);
            }
        }
    }

    #[test]
    fn range_projectors() {
        let p = example_range_projector(StencilKind::L2, 5).unwrap();
        assert_eq!(p.matrix(), &Mat::diag(&[0.0, 1.0, 1.0, 1.0, 0.0]));
        assert_eq!(p.removed_dim(), 2);
        let p = example_range_projector(StencilKind::L1, 3).unwrap();
        assert_eq!(p.matrix(), &Mat::diag(&[1.0, 1.0, 0.0]));
        let m = p.matrix();
        assert_eq!(&(m * m), m);
        assert!((m * p.basis()).is_zero());
        assert!(example_range_projector(StencilKind::L2Square, 5).is_err());
    }

    #[test]
    fn reg_factor_variants() {
        let f = reg_factor(StencilKind::L1, 4, Side::None).unwrap();
        assert_eq!(
            f.effective(),
            make_stencil(StencilKind::L1Square, 4).unwrap()
        );
        assert!(f.projector().is_none());
        assert_eq!(f.label(), "Lt1");

        let f = reg_factor(StencilKind::L2, 5, Side::Left).unwrap();
        let expected = &Mat::diag(&[0.0, 1.0, 1.0, 1.0, 0.0])
            * &make_stencil(StencilKind::L2Square, 5).unwrap();
        assert_eq!(f.effective(), expected);
        assert_eq!(f.label(), "P2Lt2");

        let f = reg_factor(StencilKind::L2, 5, Side::Right).unwrap();
        let l = f.effective();
        let ones = Mat::column(&[1.0; 5]);
        let ramp = Mat::column(&[1.0, 2.0, 3.0, 4.0, 5.0]);
        assert!((&l * &ones).max_abs() <= 1e-12);
        assert!((&l * &ramp).max_abs() <= 1e-12);
        assert_eq!(f.label(), "Lt2P2");

        assert!(reg_factor(StencilKind::L2Square, 5, Side::None).is_err());
        assert!(reg_factor(StencilKind::L2, 2, Side::None).is_err());
    }

    #[test]
    fn reg_factor_new_rejects_mismatched_parts() {
        let base = make_stencil(StencilKind::L1Square, 4).unwrap();
        let p = OrthoProjector::identity(3);
        assert!(RegFactor::new(StencilKind::L1, base.clone(), Some(p), Side::Left).is_err());
        assert!(RegFactor::new(StencilKind::L1, base.clone(), None, Side::Right).is_err());
        assert!(RegFactor::new(StencilKind::L1, Mat::zeros(4, 4), None, Side::None).is_err());
        assert!(RegFactor::plain(StencilKind::L1, base).is_ok());
    }

    #[test]
    fn example_nullspace_kronecker_form() {
        // closest to L̃2 ⊗ L̃2 with null space N(L2 ⊗ L2) is L̃2P2 ⊗ L̃2P2
        let n = 5;
        let lt = make_stencil(StencilKind::L2Square, n).unwrap();
        let v = nullspace_basis(StencilKind::L2, n).unwrap();
        let out =
            closest_with_nullspace(&[lt.clone(), lt.clone()], &[v.clone(), v.clone()]).unwrap();
        let right = reg_factor(StencilKind::L2, n, Side::Right)
            .unwrap()
            .effective();
        for f in &out {
            assert!(f.max_abs_diff(&right) < 1e-15);
        }
    }

    #[test]
    fn nearness_fixed_points() {
        let n = 5;
        let l = make_stencil(StencilKind::L2, n).unwrap();
        let v = nullspace_basis(StencilKind::L2, n).unwrap();
        let out = closest_with_nullspace(std::slice::from_ref(&l), &[v]).unwrap();
        assert!(out[0].max_abs_diff(&l) < 1e-14);

        // range: P·L̃1 with e_n removed zeroes the last row
        let lt1 = make_stencil(StencilKind::L1Square, n).unwrap();
        let en = Mat::from_fn(n, 1, |i, _| if i == n - 1 { 1.0 } else { 0.0 });
        let out =
            closest_with_range(std::slice::from_ref(&lt1), std::slice::from_ref(&en)).unwrap();
        for j in 0..n {
            assert_eq!(out[0][(n - 1, j)], 0.0);
        }
        for i in 0..n - 1 {
            for j in 0..n {
                assert_eq!(out[0][(i, j)], lt1[(i, j)]);
            }
        }
        // applying again changes nothing
        let again = closest_with_range(&out, &[en]).unwrap();
        assert!(again[0].max_abs_diff(&out[0]) < 1e-15);
    }

    #[test]
    fn nearness_shape_errors() {
        let a = Mat::identity(4);
        let v = Mat::zeros(3, 1);
        assert!(
            closest_with_nullspace(std::slice::from_ref(&a), std::slice::from_ref(&v)).is_err()
        );
        assert!(closest_with_range(std::slice::from_ref(&a), &[v]).is_err());
        assert!(closest_with_nullspace(&[a.clone(), a], &[Mat::zeros(4, 0)]).is_err());
        assert!(closest_with_nullspace(&[], &[]).is_err());
    }

    #[test]
    fn kron_chain_inner_matches_full() {
        let a = [
            make_stencil(StencilKind::L1Square, 3).unwrap(),
            Mat::identity(2),
        ];
        let b = [
            make_stencil(StencilKind::L2Square, 3).unwrap(),
            Mat::diag(&[1.0, -2.0]),
        ];
        let full = frobenius_inner(&kron_chain(&a).unwrap(), &kron_chain(&b).unwrap()).unwrap();
        assert!((kron_chain_inner(&a, &b).unwrap() - full).abs() < 1e-14);
    }

    #[test]
    fn stacked_fixture_shape() {
        let n = 5;
        for kind in [StencilKind::L1, StencilKind::L2] {
            let l = stacked_tensor_regularizer(kind, n).unwrap();
            let r = make_stencil(kind, n).unwrap().rows();
            assert_eq!(l.shape(), (2 * n * r, n * n));
            // constants lie in the null space of both blocks
            assert!((&l * &Mat::column(&vec![1.0; n * n])).max_abs() < 1e-15);
        }
        assert!(stacked_tensor_regularizer(StencilKind::L1Square, n).is_err());
    }

    #[test]
    fn every_kind_min_order_builds() {
        for kind in KINDS {
            assert!(make_stencil(kind, kind.min_order()).is_ok());
            assert!(nullspace_basis(kind, kind.min_order()).is_ok());
        }
    }
}
