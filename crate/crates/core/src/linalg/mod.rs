//! Small dense linear algebra, matrix-free Krylov solvers and text matrix I/O.

pub mod dense;
pub mod krylov;
pub mod textio;

pub use dense::{Matrix, Tensor3};
pub use krylov::{bicgstab, cg, SolveReport};
