use alloc::vec;
use alloc::vec::Vec;

use super::fixed_point::{td_fixed_point, td_fixed_point_min_norm};
use super::metrics::{param_error, rmspbe_with_inverse, rmsve};
use super::steady::{steady_matrices_offpolicy, steady_matrices_onpolicy};
use super::values::{true_values_episodic, true_values_ergodic};
use crate::environments::{FeatureMap, MarkovRewardEnvironment};
use crate::error::{check_len, Result};
use crate::numerics::{least_squares, min_abs_eigenvalue, min_eigenvalue_sym, pinv_sym, solve_linear, Matrix};

/// Relative eigenvalue cutoff below which `Σ` is treated as singular.
const SINGULAR_SIGMA: f64 = 1e-10;

/// Ground truth for one environment, feature map and trace parameter.
#[derive(Clone, Debug, PartialEq)]
pub struct OracleBundle {
    pub lambda: f64,
    /// Stationary distribution of the sampled (behavior) chain.
    pub mu: Vec<f64>,
    /// `ΦᵀDΦ`
    pub sigma: Matrix,
    /// `A`, `b` of the learner being scored: TD(λ) on-policy, TDC off-policy.
    pub a: Matrix,
    pub b: Vec<f64>,
    /// Off-policy `C = −E[ρφφᵀ]`.
    pub c: Option<Matrix>,
    /// Root of `A w + b = 0` (minimum-norm when `A` is singular).
    pub w_star: Vec<f64>,
    /// `argmin_w ‖Φw − v*‖₂`; absent when Φ is rank deficient.
    pub w_least_squares: Option<Vec<f64>>,
    pub v_star: Vec<f64>,
    pub lambda_min: f64,
    pub lambda_c: Option<f64>,
    pub rho_max: f64,
    /// State weighting used by RMSVE.
    pub value_weights: Vec<f64>,
    /// One-step `A`, `b` defining the projected Bellman error.
    pub pbe_a: Matrix,
    pub pbe_b: Vec<f64>,
    /// `Σ⁻¹`, or its pseudo-inverse when `Σ` is singular.
    pub sigma_inv: Matrix,
}

impl OracleBundle {
    pub fn compute(env: &MarkovRewardEnvironment, features: &FeatureMap, lambda: f64) -> Result<Self> {
        check_len(env.n_states(), features.n_states())?;
        let n = env.n_states();
        let (steady, one_step) = if env.is_off_policy() {
            let s = steady_matrices_offpolicy(env, features)?;
            (s.clone(), s)
        } else {
            let s = steady_matrices_onpolicy(env, features, lambda)?;
            let one = if lambda == 0.0 { s.clone() } else { steady_matrices_onpolicy(env, features, 0.0)? };
            (s, one)
        };
        let w_star = td_fixed_point(&steady.a, &steady.b).or_else(|_| td_fixed_point_min_norm(&steady.a, &steady.b))?;
        let v_star = if env.is_episodic() { true_values_episodic(env)? } else { true_values_ergodic(env)? };
        let w_least_squares = least_squares(features.matrix(), &v_star).ok();
        let lambda_min = min_eigenvalue_sym(&steady.sigma)?;
        let lambda_c = match &steady.c {
            Some(c) => Some(min_abs_eigenvalue(c)?),
            None => None,
        };
        let value_weights = if env.is_off_policy() {
            vec![1.0 / n as f64; n]
        } else if env.is_episodic() {
            let k = n - env.absorbing().len();
            (0..n).map(|x| if env.is_absorbing(x) { 0.0 } else { 1.0 / k as f64 }).collect()
        } else {
            steady.mu.clone()
        };
        let top = steady.sigma.max_abs();
        let sigma_inv = if lambda_min > SINGULAR_SIGMA * top {
            let d = features.d();
            let mut inv = Matrix::zeros(d, d);
            for j in 0..d {
                let mut e = vec![0.0; d];
                e[j] = 1.0;
                for (i, v) in solve_linear(&steady.sigma, &e)?.into_iter().enumerate() {
                    inv[(i, j)] = v;
                }
            }
            inv
        } else {
            pinv_sym(&steady.sigma, SINGULAR_SIGMA)?
        };
        Ok(OracleBundle {
            lambda,
            mu: steady.mu,
            sigma: steady.sigma,
            a: steady.a,
            b: steady.b,
            c: steady.c,
            w_star,
            w_least_squares,
            v_star,
            lambda_min,
            lambda_c,
            rho_max: env.rho_max(),
            value_weights,
            pbe_a: one_step.a,
            pbe_b: one_step.b,
            sigma_inv,
        })
    }

    /// `‖A w* + b‖∞`
    pub fn fixed_point_residual(&self) -> f64 {
        let mut g = self.a.mul_vec(&self.w_star).expect("consistent dimensions");
        for (gi, bi) in g.iter_mut().zip(&self.b) {
            *gi += bi;
        }
        crate::numerics::vector::norm_inf(&g)
    }

    pub fn rmsve(&self, w: &[f64], features: &FeatureMap) -> Result<f64> {
        rmsve(w, features, &self.v_star, &self.value_weights)
    }

    pub fn rmspbe(&self, w: &[f64]) -> Result<f64> {
        rmspbe_with_inverse(w, &self.pbe_a, &self.pbe_b, &self.sigma_inv)
    }

    pub fn param_error(&self, w: &[f64]) -> Result<f64> {
        param_error(w, &self.w_star)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::environments::{make_baird, make_random_mrp, make_random_walk};
    use crate::numerics::RngStream;
    use crate::oracle::rmspbe;

    #[test]
    fn mrp_bundle() {
        let (env, phi) = make_random_mrp(100, 20, 0.9, &mut RngStream::new(7, 0)).unwrap();
        for lambda in [0.0, 0.5] {
            let o = OracleBundle::compute(&env, &phi, lambda).unwrap();
            assert!(o.fixed_point_residual() <= 1e-8);
            assert!(o.lambda_min > 0.0 && o.lambda_min < 1.0);
            assert!(o.rmspbe(&o.w_star).unwrap() <= 1e-7 || lambda > 0.0);
            assert_eq!(o.rho_max, 1.0);
            assert!(o.c.is_none());
        }
        let o = OracleBundle::compute(&env, &phi, 0.0).unwrap();
        let direct = rmspbe(&o.w_star, &o.a, &o.b, &o.sigma).unwrap();
        assert!(direct <= 1e-7);
        let w = vec![0.1; 20];
        let a = o.rmspbe(&w).unwrap();
        let b = rmspbe(&w, &o.a, &o.b, &o.sigma).unwrap();
        assert!((a - b).abs() < 1e-10 * (1.0 + b));
    }

    #[test]
    fn walk_bundle() {
        let (env, phi) = make_random_walk(11, 0.9, 5).unwrap();
        let o = OracleBundle::compute(&env, &phi, 0.0).unwrap();
        assert!(o.fixed_point_residual() <= 1e-8);
        assert!(o.rmspbe(&o.w_star).unwrap() <= 1e-7);
        assert_eq!(o.value_weights[0], 0.0);
        assert!((o.value_weights[5] - 1.0 / 9.0).abs() < 1e-15);
    }

    #[test]
    fn baird_bundle() {
        let (env, phi) = make_baird();
        let o = OracleBundle::compute(&env, &phi, 0.0).unwrap();
        assert!(o.w_star.iter().all(|v| v.abs() < 1e-12));
        assert!(o.v_star.iter().all(|v| *v == 0.0));
        assert!(o.fixed_point_residual() <= 1e-8);
        assert_eq!(o.rho_max, 7.0);
        assert!(o.lambda_c.unwrap().abs() < 1e-10);
        assert!(o.w_least_squares.is_none());
        let w = crate::environments::baird_initial_weights();
        assert!(o.rmspbe(&w).unwrap() > 0.0);
        // RMSVE of the start point: values 3 on the rim, 12 at the center
        let want = ((6.0 * 9.0 + 144.0) / 7.0f64).sqrt();
        assert!((o.rmsve(&w, &phi).unwrap() - want).abs() < 1e-12);
    }
}
