//! Deblurs a synthetic image and writes truth, data and restoration as PGM.
//!
//! Usage: `cargo run --release --example deblur [out_dir]`

use std::path::PathBuf;

use kronreg::problems::{write_pgm, ImageKind, ProblemInstance};
use kronreg::regmat::{reg_factor, Side, StencilKind};
use kronreg::solver::{solve_kron, TikhonovKronProblem};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let out = PathBuf::from(
        std::env::args()
            .nth(1)
            .unwrap_or_else(|| "deblur_out".into()),
    );
    std::fs::create_dir_all(&out)?;
    let n = 64;
    let inst = ProblemInstance::blur(n, ImageKind::Blocks, 1e-2, 7)?;
    let problem = TikhonovKronProblem::new(
        inst.k1_factor.clone(),
        inst.k2_factor.clone(),
        inst.setup.b_noisy.clone(),
        reg_factor(StencilKind::L2, n, Side::Left)?,
        reg_factor(StencilKind::L2, n, Side::Left)?,
        inst.setup.eps,
    )?
    // the standard-form blur operator needs far more steps than the default
    .with_k_max(400);
    let rep = solve_kron(&problem, Some(&inst.x_true))?;
    println!(
        "k = {}, mu = {:.3e}, converged = {}, rel error = {:.4}",
        rep.k_used,
        rep.mu,
        rep.converged,
        rep.relative_error.unwrap_or(f64::NAN)
    );
    write_pgm(&inst.x_true, out.join("truth.pgm"))?;
    write_pgm(&inst.setup.b_noisy, out.join("data.pgm"))?;
    write_pgm(&rep.x_solution, out.join("restored.pgm"))?;
    println!("images in {}", out.display());
    Ok(())
}
