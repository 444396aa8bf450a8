//! Restores a separable 2-D shaw problem with every tabled regularizer.

use kronreg::experiment::RegularizerSpec;
use kronreg::problems::ProblemInstance;
use kronreg::solver::{solve_kron, TikhonovKronProblem};

fn main() -> kronreg::Result<()> {
    let n = 50;
    let inst = ProblemInstance::shaw2d(n, 1e-3, 1)?;
    println!(
        "{:<12} {:>3} {:>10} {:>10}",
        "regularizer", "k", "mu", "rel error"
    );
    for spec in RegularizerSpec::canonical() {
        let problem = TikhonovKronProblem::new(
            inst.k1_factor.clone(),
            inst.k2_factor.clone(),
            inst.setup.b_noisy.clone(),
            spec.reg1.build(n)?,
            spec.reg2.build(n)?,
            inst.setup.eps,
        )?;
        let rep = solve_kron(&problem, Some(&inst.x_true))?;
        println!(
            "{:<12} {:>3} {:>10.3e} {:>10.4e}",
            spec.label(),
            rep.k_used,
            rep.mu,
            rep.relative_error.unwrap_or(f64::NAN)
        );
    }
    Ok(())
}
