//! Analytic ground truth for an environment and feature map, and the error
//! metrics used to score learners against it.
//!
//! Sign convention: the mean update direction is `b + A w`, so the TD fixed
//! point solves `A w + b = 0`. With `D = diag(μ)`,
//! `A = ΦᵀD(γP − I)Φ` and `b = ΦᵀD r̄` for one-step TD.

mod bundle;
mod fixed_point;
mod metrics;
mod monte_carlo;
mod steady;
mod values;

pub use bundle::OracleBundle;
pub use fixed_point::{implicit_fixed_point_solve, td_fixed_point, td_fixed_point_min_norm};
pub use metrics::{param_error, rmspbe, rmspbe_with_inverse, rmstde, rmsve};
pub use monte_carlo::{monte_carlo_steady_matrices, MonteCarloEstimate};
pub use steady::{steady_matrices_offpolicy, steady_matrices_onpolicy, SteadyMatrices};
pub use values::{true_values_episodic, true_values_ergodic};
