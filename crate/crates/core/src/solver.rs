//! Tikhonov regularization of Kronecker-structured problems
//!
//! ```text
//! min ‖K⁽¹⁾ X K⁽²⁾ᵀ − B‖²_F + μ ‖L⁽¹⁾ X L⁽²⁾ᵀ‖²_F
//! ```
//!
//! with `L⁽ⁱ⁾ ∈ {L̃⁽ⁱ⁾, P⁽ⁱ⁾L̃⁽ⁱ⁾, L̃⁽ⁱ⁾P⁽ⁱ⁾}` and `L̃⁽ⁱ⁾` invertible.
//!
//! The substitution `Y = L̃⁽¹⁾ X L̃⁽²⁾ᵀ` turns the data term into
//! `‖K₁⁽¹⁾ Y K₁⁽²⁾ᵀ − B‖_F` with `K₁⁽ⁱ⁾ = K⁽ⁱ⁾(L̃⁽ⁱ⁾)⁻¹`, and the penalty into
//! `‖M⁽¹⁾ Y M⁽²⁾ᵀ‖_F` with `M = P` (left projector), `M = L̃PL̃⁻¹` (right
//! projector) or `M = I`. The problem is then projected onto the global
//! Krylov space of `Y ↦ K₁⁽¹⁾ Y K₁⁽²⁾ᵀ` and `B`; the regularization
//! parameter is fixed by the discrepancy principle
//! `‖K₁⁽¹⁾ Y K₁⁽²⁾ᵀ − B‖_F = η ε`, and the number of Arnoldi steps is the
//! smallest for which that equation can be met.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::arnoldi::{
    projected_residual, residual_identity_deviation, GlobalArnoldi, GlobalArnoldiDecomp,
};
use crate::error::{Error, Result};
use crate::mat::{frobenius_inner, lstsq, sym_eigen, unvec, vec, Lu, Mat};
use crate::regmat::{RegFactor, Side};

/// Default regularization-parameter search interval.
pub const DEFAULT_MU_BRACKET: (f64, f64) = (1e-12, 1e12);
/// Default safety factor in the discrepancy principle.
pub const DEFAULT_ETA: f64 = 1.01;
/// Relative tolerance on `|residual − ηε|` accepted by [`find_mu`].
pub const DISCREPANCY_RTOL: f64 = 1e-6;
/// Maximum number of bisection steps in [`find_mu`].
pub const MAX_BISECTIONS: usize = 200;
/// With exact data (`ε = 0`) a step is accepted once the unregularized
/// projected residual drops to this fraction of `‖B‖_F`.
pub const EXACT_DATA_RTOL: f64 = 1e-10;

/// `k_max = min(n, 60)`
pub fn default_k_max(n: usize) -> usize {
    n.min(60)
}

/// Kronecker-structured Tikhonov problem.
#[derive(Clone, Debug)]
pub struct TikhonovKronProblem {
    pub k1_factor: Mat,
    pub k2_factor: Mat,
    pub data_b: Mat,
    pub reg1: RegFactor,
    pub reg2: RegFactor,
    /// Bound `ε` on `‖E‖_F`.
    pub noise_bound_eps: f64,
    pub eta: f64,
    pub k_max: usize,
    pub mu_bracket: (f64, f64),
}

impl TikhonovKronProblem {
    /// Problem with default `η`, `k_max` and μ bracket.
    pub fn new(
        k1_factor: Mat,
        k2_factor: Mat,
        data_b: Mat,
        reg1: RegFactor,
        reg2: RegFactor,
        noise_bound_eps: f64,
    ) -> Result<Self> {
        let n = data_b.rows();
        let p = TikhonovKronProblem {
            k1_factor,
            k2_factor,
            data_b,
            reg1,
            reg2,
            noise_bound_eps,
            eta: DEFAULT_ETA,
            k_max: default_k_max(n),
            mu_bracket: DEFAULT_MU_BRACKET,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn with_eta(mut self, eta: f64) -> Self {
        self.eta = eta;
        self
    }

    pub fn with_k_max(mut self, k_max: usize) -> Self {
        self.k_max = k_max;
        self
    }

    pub fn with_mu_bracket(mut self, lo: f64, hi: f64) -> Self {
        self.mu_bracket = (lo, hi);
        self
    }

    pub fn validate(&self) -> Result<()> {
        let (n1, n2) = self.data_b.shape();
        let checks = [
            (self.k1_factor.shape(), (n1, n1), "k1_factor"),
            (self.k2_factor.shape(), (n2, n2), "k2_factor"),
            (self.reg1.base().shape(), (n1, n1), "reg1"),
            (self.reg2.base().shape(), (n2, n2), "reg2"),
        ];
        for (got, want, name) in checks {
            if got != want {
                return Err(Error::dim(format!(
                    "{name} is {}x{}, data needs {}x{}",
                    got.0, got.1, want.0, want.1
                )));
            }
        }
        validate_common(self.noise_bound_eps, self.eta, self.k_max, self.mu_bracket)
    }
}

fn validate_common(eps: f64, eta: f64, k_max: usize, bracket: (f64, f64)) -> Result<()> {
    if !(eps >= 0.0 && eps.is_finite()) {
        return Err(Error::Domain(format!(
            "noise bound must be >= 0, got {eps}"
        )));
    }
    if !(eta >= 1.0 && eta.is_finite()) {
        return Err(Error::Domain(format!("eta must be >= 1, got {eta}")));
    }
    if k_max == 0 {
        return Err(Error::Domain("k_max must be positive".into()));
    }
    let (lo, hi) = bracket;
    if !(lo > 0.0 && lo < hi && hi.is_finite()) {
        return Err(Error::Domain(format!(
            "mu bracket must satisfy 0 < lo < hi, got ({lo}, {hi})"
        )));
    }
    Ok(())
}

/// Tikhonov problem with a general square `K` acting on `vec(X)` and a
/// Kronecker-structured regularizer `L⁽²⁾ ⊗ L⁽¹⁾`.
#[derive(Clone, Debug)]
pub struct TikhonovGeneralProblem {
    /// `N × N`, `N = n₁ n₂`.
    pub k_full: Mat,
    /// `N × 1`
    pub data_b: Mat,
    pub reg1: RegFactor,
    pub reg2: RegFactor,
    pub noise_bound_eps: f64,
    pub eta: f64,
    pub k_max: usize,
    pub mu_bracket: (f64, f64),
}

impl TikhonovGeneralProblem {
    pub fn new(
        k_full: Mat,
        data_b: Mat,
        reg1: RegFactor,
        reg2: RegFactor,
        noise_bound_eps: f64,
    ) -> Result<Self> {
        let n = reg1.order();
        let p = TikhonovGeneralProblem {
            k_full,
            data_b,
            reg1,
            reg2,
            noise_bound_eps,
            eta: DEFAULT_ETA,
            k_max: default_k_max(n),
            mu_bracket: DEFAULT_MU_BRACKET,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn with_eta(mut self, eta: f64) -> Self {
        self.eta = eta;
        self
    }

    pub fn with_k_max(mut self, k_max: usize) -> Self {
        self.k_max = k_max;
        self
    }

    pub fn with_mu_bracket(mut self, lo: f64, hi: f64) -> Self {
        self.mu_bracket = (lo, hi);
        self
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.reg1.order() * self.reg2.order();
        if self.k_full.shape() != (n, n) {
            return Err(Error::dim(format!(
                "K is {}x{}, regularizer orders need {n}x{n}",
                self.k_full.rows(),
                self.k_full.cols()
            )));
        }
        if self.data_b.shape() != (n, 1) {
            return Err(Error::dim(format!(
                "data must be a {n}x1 vector, got {}x{}",
                self.data_b.rows(),
                self.data_b.cols()
            )));
        }
        validate_common(self.noise_bound_eps, self.eta, self.k_max, self.mu_bracket)
    }
}

/// Outcome of a solve.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SolveReport {
    /// Computed `X_{μ,k}`, `n₁ × n₂`.
    pub x_solution: Mat,
    pub mu: f64,
    pub k_used: usize,
    /// `‖K₁⁽¹⁾ Y K₁⁽²⁾ᵀ − B‖_F` at the returned iterate.
    pub discrepancy_residual: f64,
    /// `η ε`
    pub target: f64,
    pub converged: bool,
    /// The μ bracket's upper end was accepted because even that much
    /// regularization left the residual below the target.
    pub saturated: bool,
    pub relative_error: Option<f64>,
    /// Largest residual-identity deviation observed during the solve.
    pub identity_deviation: f64,
    /// `‖B‖_F`
    pub beta: f64,
    pub wall_seconds: f64,
}

/// Standard-form transformation of one factor: returns `K L̃⁻¹` and the
/// penalty operator acting on the transformed unknowns.
pub fn standard_form_factor(k_factor: &Mat, reg: &RegFactor) -> Result<(Mat, Mat)> {
    let base = reg.base();
    if k_factor.cols() != base.rows() {
        return Err(Error::dim(format!(
            "K factor has {} columns, regularizer has order {}",
            k_factor.cols(),
            base.rows()
        )));
    }
    // x L̃ = m  <=>  L̃ᵀ xᵀ = mᵀ
    let lu_t = Lu::new(&base.transpose())?;
    let times_inverse = |m: &Mat| -> Result<Mat> { Ok(lu_t.solve(&m.transpose())?.transpose()) };
    let k1 = times_inverse(k_factor)?;
    let n = base.rows();
    let penalty = match (reg.side(), reg.projector()) {
        (Side::Left, Some(p)) => p.matrix().clone(),
        (Side::Right, Some(p)) => times_inverse(&(base * p.matrix()))?,
        _ => Mat::identity(n),
    };
    Ok((k1, penalty))
}

/// Gram matrix `Gᵢⱼ = ⟨M₁VᵢM₂ᵀ, M₁VⱼM₂ᵀ⟩` of the penalty images of the
/// decomposition's first `k` blocks.
pub fn penalty_gram(decomp: &GlobalArnoldiDecomp, m1: &Mat, m2: &Mat) -> Result<Mat> {
    let k = decomp.steps();
    let images = decomp.blocks()[..k.min(decomp.blocks().len())]
        .iter()
        .map(|v| penalty_image(m1, v, m2))
        .collect::<Result<Vec<_>>>()?;
    gram_of(&images)
}

fn penalty_image(m1: &Mat, v: &Mat, m2: &Mat) -> Result<Mat> {
    if m1.cols() != v.rows() || m2.cols() != v.cols() {
        return Err(Error::dim(format!(
            "penalty factors {}x{} / {}x{} do not fit a {}x{} block",
            m1.rows(),
            m1.cols(),
            m2.rows(),
            m2.cols(),
            v.rows(),
            v.cols()
        )));
    }
    Ok(m1.matmul(v)?.matmul_t(m2))
}

fn gram_of(images: &[Mat]) -> Result<Mat> {
    let k = images.len();
    let mut g = Mat::zeros(k, k);
    for i in 0..k {
        for j in i..k {
            let v = frobenius_inner(&images[i], &images[j])?;
            g[(i, j)] = v;
            g[(j, i)] = v;
        }
    }
    Ok(g)
}

/// Grows a Gram matrix by the row and column of the last image.
fn extend_gram(old: &Mat, images: &[Mat]) -> Result<Mat> {
    let k = images.len();
    debug_assert_eq!(old.rows() + 1, k);
    let last = &images[k - 1];
    let mut g = Mat::zeros(k, k);
    for i in 0..k - 1 {
        for j in 0..k - 1 {
            g[(i, j)] = old[(i, j)];
        }
    }
    for (i, img) in images.iter().enumerate() {
        let v = frobenius_inner(img, last)?;
        g[(i, k - 1)] = v;
        g[(k - 1, i)] = v;
    }
    Ok(g)
}

/// The small regularized least-squares problem
/// `min ‖H y − β e₁‖² + μ yᵀ G y` with a fixed factorization `G = CᵀC`.
#[derive(Clone, Debug)]
pub struct ProjectedProblem {
    hess: Mat,
    beta: f64,
    c: Mat,
}

impl ProjectedProblem {
    pub fn new(hess: Mat, beta: f64, gram: &Mat) -> Result<Self> {
        let k = hess.cols();
        if hess.rows() != k + 1 || gram.shape() != (k, k) {
            return Err(Error::dim(format!(
                "Hessenberg {}x{} and Gram {}x{} do not fit",
                hess.rows(),
                hess.cols(),
                gram.rows(),
                gram.cols()
            )));
        }
        let (vals, q) = sym_eigen(gram)?;
        let roots: Vec<f64> = vals.iter().map(|&l| l.max(0.0).sqrt()).collect();
        let c = &Mat::diag(&roots) * &q.transpose();
        Ok(ProjectedProblem { hess, beta, c })
    }

    pub fn dim(&self) -> usize {
        self.hess.cols()
    }

    /// Minimizer `y` and data residual `‖H y − β e₁‖₂` for a given μ.
    pub fn solve(&self, mu: f64) -> Result<(Vec<f64>, f64)> {
        if !(mu > 0.0 && mu.is_finite()) {
            return Err(Error::Domain(format!("mu must be positive, got {mu}")));
        }
        let k = self.dim();
        let s = mu.sqrt();
        let stacked = Mat::from_fn(2 * k + 1, k, |i, j| {
            if i <= k {
                self.hess[(i, j)]
            } else {
                s * self.c[(i - k - 1, j)]
            }
        });
        let mut rhs = Mat::zeros(2 * k + 1, 1);
        rhs[(0, 0)] = self.beta;
        let y = lstsq(&stacked, &rhs)?;
        let y = y.as_slice().to_vec();
        let res = projected_residual(&self.hess, self.beta, &y);
        Ok((y, res))
    }

    /// Discrepancy-principle search for μ; see [`find_mu`].
    pub fn find_mu(&self, target: f64, bracket: (f64, f64)) -> Result<MuSearch> {
        if target.is_nan() || target <= 0.0 {
            return Err(Error::Domain(format!(
                "target must be positive, got {target}"
            )));
        }
        let (lo_mu, hi_mu) = bracket;
        let (y_lo, r_lo) = self.solve(lo_mu)?;
        if r_lo > target * (1.0 + DISCREPANCY_RTOL) {
            return Ok(MuSearch::KTooSmall { min_residual: r_lo });
        }
        if (r_lo - target).abs() <= DISCREPANCY_RTOL * target {
            return Ok(MuSearch::Matched {
                mu: lo_mu,
                y: y_lo,
                residual: r_lo,
            });
        }
        let (y_hi, r_hi) = self.solve(hi_mu)?;
        if r_hi < target * (1.0 - DISCREPANCY_RTOL) {
            return Ok(MuSearch::Saturated {
                mu: hi_mu,
                y: y_hi,
                residual: r_hi,
            });
        }
        let mut lo = lo_mu.log10();
        let mut hi = hi_mu.log10();
        let mut best = (hi_mu, y_hi, r_hi);
        for _ in 0..MAX_BISECTIONS {
            let mid = 0.5 * (lo + hi);
            let mu = 10f64.powf(mid);
            let (y, r) = self.solve(mu)?;
            if (r - target).abs() < (best.2 - target).abs() {
                best = (mu, y.clone(), r);
            }
            if (r - target).abs() <= DISCREPANCY_RTOL * target {
                return Ok(MuSearch::Matched { mu, y, residual: r });
            }
            if r < target {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi - lo <= f64::EPSILON * hi.abs().max(1.0) {
                break;
            }
        }
        Ok(MuSearch::Matched {
            mu: best.0,
            y: best.1,
            residual: best.2,
        })
    }
}

/// Result of the discrepancy-principle search.
#[derive(Clone, Debug, PartialEq)]
pub enum MuSearch {
    /// `residual(μ) = target` within [`DISCREPANCY_RTOL`] (or the closest
    /// point found if bisection ran out of resolution).
    Matched { mu: f64, y: Vec<f64>, residual: f64 },
    /// Even the largest μ leaves the residual below the target.
    Saturated { mu: f64, y: Vec<f64>, residual: f64 },
    /// The residual at the smallest μ is already above the target; the
    /// Krylov space must grow.
    KTooSmall { min_residual: f64 },
}

/// Minimizes `‖hess·y − β e₁‖² + μ yᵀ gram y`; returns `y` and the data
/// residual.
pub fn solve_projected(hess: &Mat, beta: f64, gram: &Mat, mu: f64) -> Result<(Vec<f64>, f64)> {
    if mu.is_nan() || mu <= 0.0 {
        return Err(Error::Domain(format!("mu must be positive, got {mu}")));
    }
    ProjectedProblem::new(hess.clone(), beta, gram)?.solve(mu)
}

/// Bisection on `log₁₀ μ` over `bracket` for `residual(μ) = target`.
pub fn find_mu(
    hess: &Mat,
    beta: f64,
    gram: &Mat,
    target: f64,
    bracket: (f64, f64),
) -> Result<MuSearch> {
    ProjectedProblem::new(hess.clone(), beta, gram)?.find_mu(target, bracket)
}

/// How μ is chosen by the outer iteration.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum MuRule {
    /// Discrepancy principle; stop at the first `k` where it can be met.
    Discrepancy,
    /// Fixed μ; run until `k_max` steps or breakdown.
    Fixed(f64),
}

struct EngineOutcome {
    y_matrix: Mat,
    mu: f64,
    k: usize,
    residual: f64,
    converged: bool,
    saturated: bool,
    identity_deviation: f64,
    beta: f64,
}

struct EngineInput<'a> {
    b: &'a Mat,
    target: f64,
    k_max: usize,
    bracket: (f64, f64),
    rule: MuRule,
}

fn run_engine<A, P>(input: EngineInput<'_>, apply: A, penalty: P) -> Result<EngineOutcome>
where
    A: Fn(&Mat) -> Mat,
    P: Fn(&Mat) -> Result<Mat>,
{
    let EngineInput {
        b,
        target,
        k_max,
        bracket,
        rule,
    } = input;
    if let MuRule::Fixed(mu) = rule {
        if !(mu > 0.0 && mu.is_finite()) {
            return Err(Error::Domain(format!("mu must be positive, got {mu}")));
        }
    }
    let mut arnoldi = GlobalArnoldi::new(&apply, b)?;
    let beta = arnoldi.decomp().beta();
    let capacity = b.rows() * b.cols();
    let k_max = k_max.min(capacity);
    let mut images: Vec<Mat> = Vec::new();
    let mut gram = Mat::zeros(0, 0);

    for k in 1..=k_max {
        if !arnoldi.step()? {
            break;
        }
        images.push(penalty(&arnoldi.decomp().blocks()[k - 1])?);
        gram = extend_gram(&gram, &images)?;
        let broke = arnoldi.is_broken_down();
        let hess = arnoldi.decomp().hess_leading(k);
        let last_chance = k == k_max || broke;
        // the unregularized residual bounds residual(mu_min) from below
        let hopeless = match rule {
            MuRule::Fixed(_) => !last_chance,
            MuRule::Discrepancy if target == 0.0 => {
                min_projected_residual(&hess, beta) > EXACT_DATA_RTOL * beta
            }
            MuRule::Discrepancy => {
                min_projected_residual(&hess, beta) > target * (1.0 + DISCREPANCY_RTOL)
            }
        };
        if hopeless && !last_chance {
            continue;
        }
        let proj = ProjectedProblem::new(hess, beta, &gram)?;
        match rule {
            MuRule::Fixed(mu) => {
                let (y, r) = proj.solve(mu)?;
                return finish(arnoldi.decomp(), &apply, y, mu, r, true, false);
            }
            MuRule::Discrepancy if target == 0.0 => {
                let (y, r) = proj.solve(bracket.0)?;
                return finish(
                    arnoldi.decomp(),
                    &apply,
                    y,
                    bracket.0,
                    r,
                    r <= EXACT_DATA_RTOL * beta,
                    false,
                );
            }
            MuRule::Discrepancy => match proj.find_mu(target, bracket)? {
                MuSearch::Matched { mu, y, residual } => {
                    let ok = (residual - target).abs() <= DISCREPANCY_RTOL * target;
                    return finish(arnoldi.decomp(), &apply, y, mu, residual, ok, false);
                }
                MuSearch::Saturated { mu, y, residual } => {
                    return finish(arnoldi.decomp(), &apply, y, mu, residual, true, true);
                }
                MuSearch::KTooSmall { .. } if last_chance => {
                    let (y, r) = proj.solve(bracket.0)?;
                    return finish(arnoldi.decomp(), &apply, y, bracket.0, r, false, false);
                }
                MuSearch::KTooSmall { .. } => {}
            },
        }
    }
    Err(Error::Degenerate("no Arnoldi step was taken".into()))
}

/// `min_y ‖H y − β e₁‖₂` for an upper Hessenberg `H`, by Givens rotations.
pub fn min_projected_residual(hess: &Mat, beta: f64) -> f64 {
    let (rows, cols) = hess.shape();
    let mut h = hess.clone();
    let mut g = vec![0.0; rows];
    g[0] = beta;
    for j in 0..cols.min(rows - 1) {
        let (a, b) = (h[(j, j)], h[(j + 1, j)]);
        let r = a.hypot(b);
        if r == 0.0 {
            continue;
        }
        let (c, s) = (a / r, b / r);
        for col in j..cols {
            let (x, y) = (h[(j, col)], h[(j + 1, col)]);
            h[(j, col)] = c * x + s * y;
            h[(j + 1, col)] = -s * x + c * y;
        }
        let (x, y) = (g[j], g[j + 1]);
        g[j] = c * x + s * y;
        g[j + 1] = -s * x + c * y;
    }
    g[cols.min(rows - 1)..]
        .iter()
        .map(|v| v * v)
        .sum::<f64>()
        .sqrt()
}

fn finish<A>(
    decomp: &GlobalArnoldiDecomp,
    apply: &A,
    y: Vec<f64>,
    mu: f64,
    residual: f64,
    converged: bool,
    saturated: bool,
) -> Result<EngineOutcome>
where
    A: Fn(&Mat) -> Mat,
{
    let dev = residual_identity_deviation(decomp, apply, &y)?;
    Ok(EngineOutcome {
        y_matrix: decomp.combine(&y),
        mu,
        k: y.len(),
        residual,
        converged,
        saturated,
        identity_deviation: dev,
        beta: decomp.beta(),
    })
}

/// Back-transform `X = L̃⁽¹⁾⁻¹ Y L̃⁽²⁾⁻ᵀ`.
fn back_transform(y: &Mat, lu1: &Lu, lu2: &Lu) -> Result<Mat> {
    let z = lu1.solve(y)?;
    lu2.solve_right_transpose(&z)
}

fn relative_error_opt(x: &Mat, reference: Option<&Mat>) -> Result<Option<f64>> {
    reference
        .map(|r| crate::problems::relative_error(x, r))
        .transpose()
}

/// Solves a Kronecker problem with the discrepancy principle.
pub fn solve_kron(problem: &TikhonovKronProblem, reference: Option<&Mat>) -> Result<SolveReport> {
    solve_kron_with(problem, MuRule::Discrepancy, reference)
}

/// Solves a Kronecker problem with the given μ rule.
pub fn solve_kron_with(
    problem: &TikhonovKronProblem,
    rule: MuRule,
    reference: Option<&Mat>,
) -> Result<SolveReport> {
    let start = Instant::now();
    problem.validate()?;
    if problem.data_b.is_zero() {
        return Err(Error::Degenerate("data matrix is zero".into()));
    }
    let (k1, m1) = standard_form_factor(&problem.k1_factor, &problem.reg1)?;
    let (k2, m2) = standard_form_factor(&problem.k2_factor, &problem.reg2)?;
    let apply = |v: &Mat| (&k1 * v).matmul_t(&k2);
    let penalty = |v: &Mat| penalty_image(&m1, v, &m2);
    let target = problem.eta * problem.noise_bound_eps;
    let out = run_engine(
        EngineInput {
            b: &problem.data_b,
            target,
            k_max: problem.k_max,
            bracket: problem.mu_bracket,
            rule,
        },
        apply,
        penalty,
    )?;
    let lu1 = Lu::new(problem.reg1.base())?;
    let lu2 = Lu::new(problem.reg2.base())?;
    let x = back_transform(&out.y_matrix, &lu1, &lu2)?;
    let relative_error = relative_error_opt(&x, reference)?;
    Ok(SolveReport {
        x_solution: x,
        mu: out.mu,
        k_used: out.k,
        discrepancy_residual: out.residual,
        target,
        converged: out.converged,
        saturated: out.saturated,
        relative_error,
        identity_deviation: out.identity_deviation,
        beta: out.beta,
        wall_seconds: start.elapsed().as_secs_f64(),
    })
}

/// Solves a problem with a general square `K` by the standard Arnoldi
/// process on `K (L̃⁽²⁾⁻¹ ⊗ L̃⁽¹⁾⁻¹)`, with the discrepancy principle.
pub fn solve_general(
    problem: &TikhonovGeneralProblem,
    reference: Option<&Mat>,
) -> Result<SolveReport> {
    solve_general_with(problem, MuRule::Discrepancy, reference)
}

/// [`solve_general`] with an explicit μ rule. The solution is returned as an
/// `n₁ × n₂` matrix (`unvec` of the solution vector).
pub fn solve_general_with(
    problem: &TikhonovGeneralProblem,
    rule: MuRule,
    reference: Option<&Mat>,
) -> Result<SolveReport> {
    let start = Instant::now();
    problem.validate()?;
    if problem.data_b.is_zero() {
        return Err(Error::Degenerate("data vector is zero".into()));
    }
    let (n1, n2) = (problem.reg1.order(), problem.reg2.order());
    let lu1 = Lu::new(problem.reg1.base())?;
    let lu2 = Lu::new(problem.reg2.base())?;
    let (_, m1) = standard_form_factor(&Mat::identity(n1), &problem.reg1)?;
    let (_, m2) = standard_form_factor(&Mat::identity(n2), &problem.reg2)?;
    let k_full = &problem.k_full;
    let apply = |v: &Mat| {
        let y = unvec(v, n1, n2).expect("block has N rows");
        let x = back_transform(&y, &lu1, &lu2).expect("regularizer bases are invertible");
        k_full * &vec(&x)
    };
    let penalty = |v: &Mat| {
        let y = unvec(v, n1, n2)?;
        Ok(vec(&penalty_image(&m1, &y, &m2)?))
    };
    let target = problem.eta * problem.noise_bound_eps;
    let out = run_engine(
        EngineInput {
            b: &problem.data_b,
            target,
            k_max: problem.k_max,
            bracket: problem.mu_bracket,
            rule,
        },
        apply,
        penalty,
    )?;
    let y = unvec(&out.y_matrix, n1, n2)?;
    let x = back_transform(&y, &lu1, &lu2)?;
    let relative_error = relative_error_opt(&x, reference)?;
    Ok(SolveReport {
        x_solution: x,
        mu: out.mu,
        k_used: out.k,
        discrepancy_residual: out.residual,
        target,
        converged: out.converged,
        saturated: out.saturated,
        relative_error,
        identity_deviation: out.identity_deviation,
        beta: out.beta,
        wall_seconds: start.elapsed().as_secs_f64(),
    })
}

/// Dense Tikhonov minimizer `(KᵀK + μLᵀL)⁻¹ Kᵀ b`, used as a small-size
/// reference for the iterative paths.
pub fn direct_solve(k_full: &Mat, b: &Mat, l_full: &Mat, mu: f64) -> Result<Mat> {
    if !(mu >= 0.0 && mu.is_finite()) {
        return Err(Error::Domain(format!("mu must be non-negative, got {mu}")));
    }
    if b.cols() != 1 || b.rows() != k_full.rows() || l_full.cols() != k_full.cols() {
        return Err(Error::dim("K, L and b do not conform"));
    }
    let kt = k_full.transpose();
    let mut normal = &kt * k_full;
    normal.axpy(mu, &(&l_full.transpose() * l_full));
    let rhs = &kt * b;
    crate::mat::solve_dense(&normal, &rhs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mat::kron;
    use crate::regmat::{reg_factor, StencilKind};

    fn lcg_mat(rows: usize, cols: usize, seed: &mut u64) -> Mat {
        Mat::from_fn(rows, cols, |_, _| {
            *seed = seed
                .wrapping_mul(6364136223846793005)
                .wrapping_add(1442695040888963407);
            ((*seed >> 11) as f64 / (1u64 << 53) as f64) * 2.0 - 1.0
        })
    }

    fn well_conditioned(n: usize, seed: &mut u64) -> Mat {
        let mut a = lcg_mat(n, n, seed).scale(0.3);
        for i in 0..n {
            a[(i, i)] += 1.0;
        }
        a
    }

    #[test]
    fn standard_form_identity_base() {
        let n = 4;
        let reg = RegFactor::plain(StencilKind::L1, Mat::identity(n)).unwrap();
        let mut seed = 1;
        let k = lcg_mat(n, n, &mut seed);
        let (k1, m) = standard_form_factor(&k, &reg).unwrap();
        assert!(k1.max_abs_diff(&k) < 1e-15);
        assert_eq!(m, Mat::identity(n));
    }

    #[test]
    fn standard_form_left_penalty_is_projector() {
        let reg = reg_factor(StencilKind::L2, 5, Side::Left).unwrap();
        let (_, m) = standard_form_factor(&Mat::identity(5), &reg).unwrap();
        assert_eq!(m, Mat::diag(&[0.0, 1.0, 1.0, 1.0, 0.0]));
    }

    #[test]
    fn standard_form_self_cancels() {
        for side in [Side::None, Side::Left, Side::Right] {
            for kind in [StencilKind::L1, StencilKind::L2] {
                let reg = reg_factor(kind, 6, side).unwrap();
                let (k1, _) = standard_form_factor(reg.base(), &reg).unwrap();
                assert!(k1.max_abs_diff(&Mat::identity(6)) < 1e-12);
            }
        }
    }

    #[test]
    fn right_penalty_reproduces_effective_operator() {
        // ‖M₁ Y M₂ᵀ‖ with Y = L̃₁XL̃₂ᵀ equals ‖L₁ X L₂ᵀ‖
        let n = 6;
        let mut seed = 3;
        let r1 = reg_factor(StencilKind::L2, n, Side::Right).unwrap();
        let r2 = reg_factor(StencilKind::L1, n, Side::Right).unwrap();
        let (_, m1) = standard_form_factor(&Mat::identity(n), &r1).unwrap();
        let (_, m2) = standard_form_factor(&Mat::identity(n), &r2).unwrap();
        let x = lcg_mat(n, n, &mut seed);
        let y = (r1.base() * &x).matmul_t(r2.base());
        let lhs = (&m1 * &y).matmul_t(&m2);
        let rhs = (&r1.effective() * &x).matmul_t(&r2.effective());
        assert!(lhs.max_abs_diff(&rhs) < 1e-12);
    }

    #[test]
    fn scalar_projected_problem() {
        let h = Mat::from_rows(&[[1.0], [0.0]]).unwrap();
        let g = Mat::identity(1);
        for mu in [1e-3, 0.5, 1.0, 7.0] {
            let (y, r) = solve_projected(&h, 1.0, &g, mu).unwrap();
            assert!((y[0] - 1.0 / (1.0 + mu)).abs() < 1e-14);
            assert!((r - mu / (1.0 + mu)).abs() < 1e-14);
        }
        let (y, _) = solve_projected(&h, 1.0, &g, 1e-16).unwrap();
        assert!((y[0] - 1.0).abs() < 1e-14);
        assert!(solve_projected(&h, 1.0, &g, 0.0).is_err());
        assert!(solve_projected(&h, 1.0, &g, -1.0).is_err());
    }

    #[test]
    fn find_mu_scalar_closed_form() {
        let h = Mat::from_rows(&[[1.0], [0.0]]).unwrap();
        let g = Mat::identity(1);
        match find_mu(&h, 1.0, &g, 0.5, DEFAULT_MU_BRACKET).unwrap() {
            MuSearch::Matched { mu, residual, .. } => {
                assert!((residual - 0.5).abs() <= 1e-6 * 0.5);
                assert!((mu - 1.0).abs() < 1e-5);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn find_mu_signals() {
        // unregularized residual is 1/√2 for H = [[1],[1]], β = 1
        let h = Mat::from_rows(&[[1.0], [1.0]]).unwrap();
        let g = Mat::identity(1);
        assert!(matches!(
            find_mu(&h, 1.0, &g, 0.5, DEFAULT_MU_BRACKET).unwrap(),
            MuSearch::KTooSmall { .. }
        ));
        // penalty-free direction: residual never reaches the target
        let h = Mat::from_rows(&[[1.0], [0.0]]).unwrap();
        let g = Mat::zeros(1, 1);
        let g_eps = Mat::from_rows(&[[1e-30]]).unwrap();
        assert!(matches!(
            find_mu(&h, 1.0, &g_eps, 0.5, DEFAULT_MU_BRACKET).unwrap(),
            MuSearch::Saturated { .. }
        ));
        assert!(matches!(
            find_mu(&h, 1.0, &g, 0.5, DEFAULT_MU_BRACKET),
            Err(Error::RankDeficient { .. }) | Ok(MuSearch::Saturated { .. })
        ));
        assert!(find_mu(&h, 1.0, &Mat::identity(1), 0.0, DEFAULT_MU_BRACKET).is_err());
    }

    #[test]
    fn identity_problem_exact_data() {
        let n = 5;
        let mut seed = 4;
        let b = lcg_mat(n, n, &mut seed);
        let reg = RegFactor::plain(StencilKind::L1, Mat::identity(n)).unwrap();
        let p = TikhonovKronProblem::new(
            Mat::identity(n),
            Mat::identity(n),
            b.clone(),
            reg.clone(),
            reg,
            0.0,
        )
        .unwrap();
        let rep = solve_kron(&p, None).unwrap();
        assert!(rep.converged);
        assert_eq!(rep.k_used, 1);
        assert!(rep.x_solution.max_abs_diff(&b) < 1e-10);
    }

    #[test]
    fn zero_data_is_degenerate() {
        let n = 4;
        let reg = reg_factor(StencilKind::L1, n, Side::None).unwrap();
        let p = TikhonovKronProblem::new(
            Mat::identity(n),
            Mat::identity(n),
            Mat::zeros(n, n),
            reg.clone(),
            reg,
            0.1,
        )
        .unwrap();
        assert!(matches!(solve_kron(&p, None), Err(Error::Degenerate(_))));
    }

    #[test]
    fn problem_validation() {
        let n = 4;
        let reg = reg_factor(StencilKind::L1, n, Side::None).unwrap();
        let small = reg_factor(StencilKind::L1, 3, Side::None).unwrap();
        let b = Mat::identity(n);
        assert!(
            TikhonovKronProblem::new(b.clone(), b.clone(), b.clone(), small, reg.clone(), 0.1)
                .is_err()
        );
        assert!(TikhonovKronProblem::new(
            b.clone(),
            b.clone(),
            b.clone(),
            reg.clone(),
            reg.clone(),
            -1.0
        )
        .is_err());
        let p = TikhonovKronProblem::new(
            b.clone(),
            b.clone(),
            b.clone(),
            reg.clone(),
            reg.clone(),
            0.1,
        )
        .unwrap();
        assert!(p.clone().with_eta(0.5).validate().is_err());
        assert!(p.clone().with_mu_bracket(1.0, 1.0).validate().is_err());
        assert!(p.clone().with_k_max(0).validate().is_err());
    }

    #[test]
    fn direct_solve_examples() {
        let n = 4;
        let mut seed = 6;
        let b = lcg_mat(n, 1, &mut seed);
        let x = direct_solve(&Mat::identity(n), &b, &Mat::identity(n), 0.5).unwrap();
        assert!(x.max_abs_diff(&b.scale(1.0 / 1.5)) < 1e-15);

        let k = well_conditioned(n, &mut seed);
        let x = direct_solve(&k, &b, &Mat::identity(n), 1e-14).unwrap();
        let exact = crate::mat::solve_dense(&k, &b).unwrap();
        assert!(x.max_abs_diff(&exact) < 1e-8);

        let z = Mat::zeros(n, n);
        assert!(matches!(
            direct_solve(&z, &b, &z, 1.0),
            Err(Error::Singular { .. })
        ));
    }

    #[test]
    fn fixed_mu_full_k_matches_direct() {
        let n = 4;
        let mut seed = 10;
        let k1 = well_conditioned(n, &mut seed);
        let k2 = well_conditioned(n, &mut seed);
        let b = lcg_mat(n, n, &mut seed);
        let r1 = reg_factor(StencilKind::L2, n, Side::Left).unwrap();
        let r2 = reg_factor(StencilKind::L1, n, Side::Right).unwrap();
        let p = TikhonovKronProblem::new(
            k1.clone(),
            k2.clone(),
            b.clone(),
            r1.clone(),
            r2.clone(),
            0.0,
        )
        .unwrap()
        .with_k_max(n * n);
        let mu = 1e-2;
        let rep = solve_kron_with(&p, MuRule::Fixed(mu), None).unwrap();
        let kf = kron(&k2, &k1).unwrap();
        let lf = kron(&r2.effective(), &r1.effective()).unwrap();
        let x = direct_solve(&kf, &vec(&b), &lf, mu).unwrap();
        let diff = (&vec(&rep.x_solution) - &x).frobenius_norm() / x.frobenius_norm();
        assert!(diff < 1e-8, "relative deviation {diff:e}");
    }
}
