//! Solves a problem whose operator is not a Kronecker product, using the
//! vector form of the solver.

use kronreg::mat::{kron, vec};
use kronreg::problems::{add_noise, shaw_matrix, shaw_true_solution};
use kronreg::regmat::{reg_factor, Side, StencilKind};
use kronreg::solver::{solve_general, TikhonovGeneralProblem};
use kronreg::Mat;

fn main() -> kronreg::Result<()> {
    let n = 12;
    let k = shaw_matrix(n)?;
    // Kronecker operator plus a small coupling term
    let mut k_full = kron(&k, &k)?;
    let coupling = Mat::from_fn(
        n * n,
        n * n,
        |i, j| if i.abs_diff(j) == n { 1e-3 } else { 0.0 },
    );
    k_full.axpy(1.0, &coupling);
    let x = Mat::column(&shaw_true_solution(n)?);
    let x_true = x.matmul_t(&x);
    let b_exact = &k_full * &vec(&x_true);
    let setup = add_noise(&b_exact, 1e-3, 1)?;
    let problem = TikhonovGeneralProblem::new(
        k_full,
        setup.b_noisy.clone(),
        reg_factor(StencilKind::L1, n, Side::Left)?,
        reg_factor(StencilKind::L1, n, Side::Left)?,
        setup.eps,
    )?
    .with_k_max(n * n);
    let rep = solve_general(&problem, Some(&x_true))?;
    println!(
        "k = {}, mu = {:.3e}, residual {:.3e} (target {:.3e}), rel error {:.4}",
        rep.k_used,
        rep.mu,
        rep.discrepancy_residual,
        rep.target,
        rep.relative_error.unwrap_or(f64::NAN)
    );
    Ok(())
}
