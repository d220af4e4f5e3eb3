//! Linear-algebra kernels: scalar abstraction, small dense blocks, tridiagonal and
//! block-tridiagonal solvers, and a shift-invert Arnoldi eigensolver.

pub mod arnoldi;
pub mod block;
pub mod dense;
pub mod scalar;
pub mod tridiag;

pub use block::{BlockLu, BlockTridiag};
pub use dense::{Lu, Mat};
pub use scalar::Scalar;
