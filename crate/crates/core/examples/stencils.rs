//! Prints the difference stencils, their square completions and the
//! projector-composed regularizers for a small grid.

use kronreg::regmat::{make_stencil, nullspace_basis, reg_factor, Side, StencilKind};

fn main() -> kronreg::Result<()> {
    let n = 6;
    for kind in [
        StencilKind::L1,
        StencilKind::L2,
        StencilKind::L1Square,
        StencilKind::L2Square,
    ] {
        println!("{kind:?} (n = {n}):\n{:?}", make_stencil(kind, n)?);
    }
    for kind in [StencilKind::L1, StencilKind::L2] {
        let v = nullspace_basis(kind, n)?;
        let residual = (&make_stencil(kind, n)? * &v).max_abs();
        println!(
            "{kind:?} null space: {} vectors, |L V| = {residual:.1e}",
            v.cols()
        );
        for side in [Side::None, Side::Left, Side::Right] {
            let f = reg_factor(kind, n, side)?;
            println!("{}:\n{:?}", f.label(), f.effective());
        }
    }
    Ok(())
}
