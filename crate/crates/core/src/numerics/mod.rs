//! Dense linear algebra sized for the problems here (tens of states, a
//! handful of features) and seeded random streams.

mod eigen;
mod matrix;
mod rng;
mod solve;
pub mod vector;

pub use eigen::{eigenvalues, min_abs_eigenvalue, min_eigenvalue_sym, pinv_sym, rank, symmetric_eigen, SymmetricEigen};
pub use matrix::Matrix;
pub use rng::RngStream;
pub use solve::{
    least_squares, solve_linear, stationary_distribution, stationary_distribution_power,
    DIRECT_STATIONARY_LIMIT,
};
