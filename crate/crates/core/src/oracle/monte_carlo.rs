use alloc::vec;
use alloc::vec::Vec;

use crate::environments::{FeatureMap, MarkovRewardEnvironment};
use crate::error::{check_len, Error, Result};
use crate::numerics::{vector, Matrix, RngStream};

/// Sample averages of `A_n = ρφ(γφ' − φ)ᵀ` and `b_n = ρrφ` along one long
/// trajectory, with batch-means standard errors.
#[derive(Clone, Debug)]
pub struct MonteCarloEstimate {
    pub a: Matrix,
    pub b: Vec<f64>,
    pub a_se: Matrix,
    pub b_se: Vec<f64>,
    pub n_steps: u64,
}

impl MonteCarloEstimate {
    /// `‖Â − A‖_F / sqrt(Σ se²)` and the same for `b`. Each ratio is about 1
    /// when the analytic values are right.
    pub fn discrepancy(&self, a: &Matrix, b: &[f64]) -> (f64, f64) {
        let a_err = self.a.sub(a).map(|m| m.frobenius_norm()).unwrap_or(f64::INFINITY);
        let a_se = self.a_se.frobenius_norm();
        let b_err = vector::distance(&self.b, b);
        let b_se = vector::norm(&self.b_se);
        (ratio(a_err, a_se), ratio(b_err, b_se))
    }
}

fn ratio(err: f64, se: f64) -> f64 {
    if se > 0.0 {
        err / se
    } else if err <= 1e-12 {
        0.0
    } else {
        f64::INFINITY
    }
}

/// Runs the behavior chain for `burn_in` steps, then `n_steps` more split into
/// `n_batches` equal batches.
pub fn monte_carlo_steady_matrices(
    env: &MarkovRewardEnvironment,
    features: &FeatureMap,
    n_steps: u64,
    n_batches: u64,
    burn_in: u64,
    rng: &mut RngStream,
) -> Result<MonteCarloEstimate> {
    check_len(env.n_states(), features.n_states())?;
    if n_batches < 2 || n_steps < n_batches {
        return Err(Error::InvalidArgument("need at least two nonempty batches"));
    }
    let d = features.d();
    let g = env.gamma();
    let batch_len = n_steps / n_batches;
    let mut x = env.restart_state();
    let advance = |x: &mut usize, rng: &mut RngStream| {
        let t = env.sample_transition(*x, rng);
        *x = if t.terminal { env.restart_state() } else { t.x_next };
        t
    };
    for _ in 0..burn_in {
        advance(&mut x, rng);
    }
    let mut a_sum = Matrix::zeros(d, d);
    let mut a_sq = Matrix::zeros(d, d);
    let mut b_sum = vec![0.0; d];
    let mut b_sq = vec![0.0; d];
    let mut b_batch = vec![0.0; d];
    let mut diff = vec![0.0; d];
    for _ in 0..n_batches {
        let mut a_batch = Matrix::zeros(d, d);
        b_batch.iter_mut().for_each(|v| *v = 0.0);
        for _ in 0..batch_len {
            let t = advance(&mut x, rng);
            if t.rho == 0.0 {
                continue;
            }
            let phi = features.phi(t.x);
            for ((di, q), f) in diff.iter_mut().zip(features.phi(t.x_next)).zip(phi) {
                *di = g * q - f;
            }
            for i in 0..d {
                let s = t.rho * phi[i];
                if s != 0.0 {
                    vector::axpy(s, &diff, a_batch.row_mut(i));
                    b_batch[i] += s * t.r;
                }
            }
        }
        let inv = 1.0 / batch_len as f64;
        let a_mean = a_batch.scale(inv);
        a_sum.add_scaled_assign(1.0, &a_mean);
        a_sq.add_scaled_assign(1.0, &a_mean.hadamard(&a_mean)?);
        for i in 0..d {
            let m = b_batch[i] * inv;
            b_sum[i] += m;
            b_sq[i] += m * m;
        }
    }
    let k = n_batches as f64;
    let a = a_sum.scale(1.0 / k);
    let a_var = a_sq.scale(1.0 / k).sub(&a.hadamard(&a)?)?;
    let a_se = Matrix::from_fn(d, d, |i, j| libm::sqrt(a_var[(i, j)].max(0.0) / (k - 1.0)));
    let b: Vec<f64> = b_sum.iter().map(|s| s / k).collect();
    let b_se = b_sq
        .iter()
        .zip(&b)
        .map(|(sq, m)| libm::sqrt((sq / k - m * m).max(0.0) / (k - 1.0)))
        .collect();
    Ok(MonteCarloEstimate { a, b, a_se, b_se, n_steps: batch_len * n_batches })
}
