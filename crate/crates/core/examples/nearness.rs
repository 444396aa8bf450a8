//! Closest Kronecker product whose factors annihilate a prescribed subspace.

use kronreg::regmat::{
    closest_with_nullspace, closest_with_range, kron_chain, nullspace_basis, StencilKind,
};
use kronreg::Mat;

fn main() -> kronreg::Result<()> {
    let n = 5;
    let a = vec![
        Mat::from_fn(n, n, |i, j| 1.0 / (1.0 + i as f64 + j as f64)),
        Mat::from_fn(n, n, |i, j| {
            if i == j {
                2.0
            } else {
                0.1 * (i as f64 - j as f64)
            }
        }),
    ];
    // annihilate constants in factor 1 and linear functions in factor 2
    let v = vec![
        nullspace_basis(StencilKind::L1, n)?,
        nullspace_basis(StencilKind::L2, n)?,
    ];
    let a_full = kron_chain(&a)?;
    let v_full = kron_chain(&v)?;

    let a_hat = kron_chain(&closest_with_nullspace(&a, &v)?)?;
    println!("null-space variant:");
    println!("  |A V|       = {:.3e}", (&a_full * &v_full).max_abs());
    println!("  |Â V|       = {:.3e}", (&a_hat * &v_full).max_abs());
    println!("  |A - Â|_F   = {:.4}", (&a_full - &a_hat).frobenius_norm());

    let a_hat = kron_chain(&closest_with_range(&a, &v)?)?;
    println!("range variant:");
    println!(
        "  |Vᵀ Â|      = {:.3e}",
        (&v_full.transpose() * &a_hat).max_abs()
    );
    println!("  |A - Â|_F   = {:.4}", (&a_full - &a_hat).frobenius_norm());
    Ok(())
}
