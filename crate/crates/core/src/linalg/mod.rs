//! Sparse storage, symmetric-indefinite direct solves and dense stability
//! diagnostics.

mod dense;
mod solve;
mod sparse;

pub use dense::{check_dense_size, dense_nullspace, estimate_control_constant, ControlConstant, DENSE_LIMIT, KERNEL_TOL};
pub use solve::{solve, LinearSystem};
pub use sparse::{SparseSymMatrix, TripletBuilder};
