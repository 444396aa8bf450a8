//! Global Arnoldi on the separable blur operator `V ↦ K V Kᵀ`.

use kronreg::arnoldi::{global_arnoldi, residual_identity_deviation};
use kronreg::problems::{blur_matrix, synthetic_image, ImageKind, BLUR_BAND, BLUR_SIGMA};
use kronreg::solver::min_projected_residual;
use kronreg::Mat;

fn main() -> kronreg::Result<()> {
    let n = 64;
    let k = blur_matrix(n, BLUR_BAND, BLUR_SIGMA)?;
    let x = synthetic_image(ImageKind::Checker, n)?;
    let b = (&k * &x).matmul_t(&k);
    let apply = |v: &Mat| (&k * v).matmul_t(&k);
    let d = global_arnoldi(apply, &b, 40)?;
    println!("steps {}, beta {:.4}", d.steps(), d.beta());
    println!(
        "orthonormality deviation {:.2e}",
        d.orthonormality_deviation()
    );
    for m in [1, 5, 10, 20, 40] {
        let r = min_projected_residual(&d.hess_leading(m), d.beta());
        println!(
            "k = {m:>2}: min ||H y - beta e1|| / beta = {:.3e}",
            r / d.beta()
        );
    }
    let y: Vec<f64> = (0..d.steps()).map(|i| 1.0 / (1.0 + i as f64)).collect();
    println!(
        "residual identity deviation {:.2e}",
        residual_identity_deviation(&d, apply, &y)?
    );
    Ok(())
}
