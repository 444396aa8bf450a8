//! Tikhonov regularization of ill-posed problems with Kronecker structure.
//!
//! The crate solves
//! `min ‖K⁽¹⁾ X K⁽²⁾ᵀ − B‖²_F + μ ‖L⁽¹⁾ X L⁽²⁾ᵀ‖²_F`
//! where each regularization factor is a finite-difference stencil, possibly
//! composed with an orthogonal projector. The problem is transformed to
//! standard form, reduced with the global Arnoldi process and the parameter
//! `μ` is chosen by the discrepancy principle.

pub mod arnoldi;
pub mod error;
pub mod experiment;
pub mod mat;
pub mod problems;
pub mod regmat;
pub mod solver;

pub use error::{Error, Result};
pub use mat::Mat;
