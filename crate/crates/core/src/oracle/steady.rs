use alloc::vec::Vec;

use crate::environments::{FeatureMap, MarkovRewardEnvironment};
use crate::error::{check_len, Result};
use crate::numerics::{solve_linear, stationary_distribution, Matrix};

/// Steady-state quantities of the mean TD dynamics `b + A w`.
#[derive(Clone, Debug, PartialEq)]
pub struct SteadyMatrices {
    pub a: Matrix,
    pub b: Vec<f64>,
    /// `Σ = ΦᵀDΦ`
    pub sigma: Matrix,
    /// `C = −E[ρφφᵀ]`; only filled by the off-policy computation.
    pub c: Option<Matrix>,
    /// Stationary distribution of the sampled chain.
    pub mu: Vec<f64>,
}

/// `ΦᵀDM` for a matrix or vector given column-wise.
fn weighted_gram(phi: &Matrix, mu: &[f64], rhs: &Matrix) -> Matrix {
    let (n, d) = (phi.rows(), phi.cols());
    let k = rhs.cols();
    let mut out = Matrix::zeros(d, k);
    for x in 0..n {
        if mu[x] == 0.0 {
            continue;
        }
        let px = phi.row(x);
        let rx = rhs.row(x);
        for i in 0..d {
            let s = mu[x] * px[i];
            if s != 0.0 {
                crate::numerics::vector::axpy(s, rx, out.row_mut(i));
            }
        }
    }
    out
}

/// On-policy TD(λ) matrices.
///
/// `A = ΦᵀD(I − λγP)⁻¹(γP − I)Φ`, `b = ΦᵀD(I − λγP)⁻¹ r̄`, `Σ = ΦᵀDΦ`, which
/// reduce to the one-step forms at `λ = 0`. `D` is the stationary distribution
/// of the sampled chain (absorption followed by restart); absorbing states
/// keep their self-loops in `P`, which together with their zero features cuts
/// the trace at episode ends.
pub fn steady_matrices_onpolicy(env: &MarkovRewardEnvironment, features: &FeatureMap, lambda: f64) -> Result<SteadyMatrices> {
    check_len(env.n_states(), features.n_states())?;
    let n = env.n_states();
    let g = env.gamma();
    let mu = stationary_distribution(&env.sampling_chain())?;
    let p = env.transition();
    let phi = features.matrix();
    let gp_phi = p.matmul(phi)?.scale(g).sub(phi)?;
    let r = Matrix::new(n, 1, env.expected_reward())?;
    let (x, y) = if lambda == 0.0 {
        (gp_phi, r)
    } else {
        let m = Matrix::identity(n).sub(&p.scale(lambda * g))?;
        (solve_columns(&m, &gp_phi)?, solve_columns(&m, &r)?)
    };
    let a = weighted_gram(phi, &mu, &x);
    let b = weighted_gram(phi, &mu, &y).into_vec();
    let sigma = weighted_gram(phi, &mu, phi);
    Ok(SteadyMatrices { a, b, sigma, c: None, mu })
}

fn solve_columns(m: &Matrix, rhs: &Matrix) -> Result<Matrix> {
    let mut out = Matrix::zeros(rhs.rows(), rhs.cols());
    for j in 0..rhs.cols() {
        let col = solve_linear(m, &rhs.column(j))?;
        for (i, v) in col.into_iter().enumerate() {
            out[(i, j)] = v;
        }
    }
    Ok(out)
}

/// Off-policy TDC matrices as exact expectations over `(x, x')` weighted by
/// `μ(x) P(x, x') ρ(x, x')`:
/// `A = E[ρφ(γφ' − φ)ᵀ]`, `b = E[ρrφ]`, `C = −E[ρφφᵀ]`.
pub fn steady_matrices_offpolicy(env: &MarkovRewardEnvironment, features: &FeatureMap) -> Result<SteadyMatrices> {
    check_len(env.n_states(), features.n_states())?;
    let n = env.n_states();
    let d = features.d();
    let g = env.gamma();
    let mu = stationary_distribution(&env.sampling_chain())?;
    let p = env.transition();
    let mut a = Matrix::zeros(d, d);
    let mut c = Matrix::zeros(d, d);
    let mut b = alloc::vec![0.0; d];
    for x in 0..n {
        let phi = features.phi(x);
        for y in 0..n {
            let wgt = mu[x] * p[(x, y)] * env.rho(x, y);
            if wgt == 0.0 {
                continue;
            }
            let diff: Vec<f64> = features.phi(y).iter().zip(phi).map(|(q, f)| g * q - f).collect();
            for i in 0..d {
                let s = wgt * phi[i];
                crate::numerics::vector::axpy(s, &diff, a.row_mut(i));
                crate::numerics::vector::axpy(-s, phi, c.row_mut(i));
                b[i] += s * env.reward(x, y);
            }
        }
    }
    let sigma = weighted_gram(features.matrix(), &mu, features.matrix());
    Ok(SteadyMatrices { a, b, sigma, c: Some(c), mu })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::environments::{make_baird, make_random_mrp, make_random_walk};
    use crate::numerics::RngStream;

    /// `Σ_{k ≤ K} (λγP)^k` applied column-wise, without any linear solve.
    fn truncated_series(env: &MarkovRewardEnvironment, rhs: &Matrix, lambda: f64, terms: usize) -> Matrix {
        let scaled = env.transition().scale(lambda * env.gamma());
        let mut term = rhs.clone();
        let mut acc = rhs.clone();
        for _ in 0..terms {
            term = scaled.matmul(&term).unwrap();
            acc = acc.add(&term).unwrap();
        }
        acc
    }

    #[test]
    fn gamma_zero_like_limit_gives_minus_sigma() {
        // with γ → 0 the one-step A is −Σ; check A + Σ = γΦᵀDPΦ exactly
        let (env, phi) = make_random_mrp(40, 6, 0.9, &mut RngStream::new(3, 0)).unwrap();
        let s = steady_matrices_onpolicy(&env, &phi, 0.0).unwrap();
        let dp = weighted_gram(phi.matrix(), &s.mu, &env.transition().matmul(phi.matrix()).unwrap());
        let lhs = s.a.add(&s.sigma).unwrap();
        assert!(lhs.max_abs_diff(&dp.scale(0.9)) < 1e-14);
        let want_b: Vec<f64> = phi.matrix().vec_mul(&s.mu.iter().zip(env.expected_reward()).map(|(m, r)| m * r).collect::<Vec<_>>()).unwrap();
        for (x, y) in s.b.iter().zip(&want_b) {
            assert!((x - y).abs() < 1e-14);
        }
    }

    #[test]
    fn lambda_matrices_match_truncated_series() {
        let (env, phi) = make_random_mrp(30, 5, 0.9, &mut RngStream::new(4, 0)).unwrap();
        let lambda = 0.5;
        let s = steady_matrices_onpolicy(&env, &phi, lambda).unwrap();
        let gp_phi = env.transition().matmul(phi.matrix()).unwrap().scale(0.9).sub(phi.matrix()).unwrap();
        let series = truncated_series(&env, &gp_phi, lambda, 200);
        let a = weighted_gram(phi.matrix(), &s.mu, &series);
        assert!(a.max_abs_diff(&s.a) < 1e-10);
        let r = Matrix::new(30, 1, env.expected_reward()).unwrap();
        let b = weighted_gram(phi.matrix(), &s.mu, &truncated_series(&env, &r, lambda, 200));
        for (x, y) in b.as_slice().iter().zip(&s.b) {
            assert!((x - y).abs() < 1e-10);
        }
    }

    #[test]
    fn continuity_at_lambda_zero() {
        let (env, phi) = make_random_mrp(30, 5, 0.9, &mut RngStream::new(5, 0)).unwrap();
        let a0 = steady_matrices_onpolicy(&env, &phi, 0.0).unwrap();
        let a1 = steady_matrices_onpolicy(&env, &phi, 1e-12).unwrap();
        assert!(a0.a.max_abs_diff(&a1.a) < 1e-9);
    }

    #[test]
    fn baird_offpolicy_identities() {
        let (env, phi) = make_baird();
        let s = steady_matrices_offpolicy(&env, &phi).unwrap();
        assert!(s.b.iter().all(|v| *v == 0.0));
        let c = s.c.unwrap();
        assert!(c.add(&s.sigma).unwrap().max_abs() <= 1e-12);
        for m in &s.mu {
            assert!((m - 1.0 / 7.0).abs() < 1e-14);
        }
    }

    #[test]
    fn episodic_uses_restart_chain() {
        let (env, phi) = make_random_walk(11, 0.9, 5).unwrap();
        let s = steady_matrices_onpolicy(&env, &phi, 0.0).unwrap();
        assert!(s.mu[0].abs() < 1e-14);
        assert!(s.mu[10].abs() < 1e-14);
        assert!(s.mu[5] > s.mu[1]);
        let t = steady_matrices_onpolicy(&env, &phi, 0.5).unwrap();
        assert!(t.a.is_finite());
    }
}
