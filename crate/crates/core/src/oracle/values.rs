use alloc::vec;
use alloc::vec::Vec;

use crate::environments::MarkovRewardEnvironment;
use crate::error::{Error, Result};
use crate::numerics::{solve_linear, Matrix};

/// `v* = (I − γP)⁻¹ r̄` for a continuing chain, where `P` and `r̄` are the
/// target-policy kernel and expected reward.
pub fn true_values_ergodic(env: &MarkovRewardEnvironment) -> Result<Vec<f64>> {
    if env.is_episodic() {
        return Err(Error::InvalidArgument("ergodic values need an environment without absorbing states"));
    }
    let n = env.n_states();
    let p = env.target_transition();
    let m = Matrix::identity(n).sub(&p.scale(env.gamma()))?;
    solve_linear(&m, &env.target_expected_reward())
}

/// Values of an absorbing chain: on the transient states `T`,
/// `(I − γQ) v = r̄` with `Q = P[T, T]` and `r̄` the expected one-step reward
/// (transitions into absorbing states included). Absorbing states are worth 0.
pub fn true_values_episodic(env: &MarkovRewardEnvironment) -> Result<Vec<f64>> {
    if !env.is_episodic() {
        return Err(Error::InvalidArgument("episodic values need at least one absorbing state"));
    }
    let n = env.n_states();
    let transient: Vec<usize> = (0..n).filter(|x| !env.is_absorbing(*x)).collect();
    let p = env.target_transition();
    let r = env.target_expected_reward();
    let g = env.gamma();
    let k = transient.len();
    let m = Matrix::from_fn(k, k, |i, j| {
        let delta = if i == j { 1.0 } else { 0.0 };
        delta - g * p[(transient[i], transient[j])]
    });
    let rhs: Vec<f64> = transient.iter().map(|&x| r[x]).collect();
    let vt = solve_linear(&m, &rhs)?;
    let mut v = vec![0.0; n];
    for (i, &x) in transient.iter().enumerate() {
        v[x] = vt[i];
    }
    Ok(v)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::environments::{make_baird, make_random_mrp, make_random_walk, RewardModel};
    use crate::numerics::RngStream;

    fn bellman_residual(env: &MarkovRewardEnvironment, v: &[f64]) -> f64 {
        let n = env.n_states();
        let p = env.target_transition();
        (0..n)
            .filter(|x| !env.is_absorbing(*x))
            .map(|x| {
                let backup: f64 = (0..n)
                    .map(|y| p[(x, y)] * (env.reward(x, y) + env.gamma() * v[y]))
                    .sum();
                (v[x] - backup).abs()
            })
            .fold(0.0, f64::max)
    }

    #[test]
    fn zero_rewards_zero_values() {
        let (env, _) = make_baird();
        assert!(true_values_ergodic(&env).unwrap().iter().all(|v| *v == 0.0));
    }

    #[test]
    fn single_state_geometric_series() {
        let env = MarkovRewardEnvironment::new(
            "one",
            Matrix::identity(1),
            RewardModel::PerState(vec![1.0]),
            0.9,
            vec![],
            0,
            None,
        )
        .unwrap();
        assert!((true_values_ergodic(&env).unwrap()[0] - 10.0).abs() < 1e-12);
    }

    #[test]
    fn three_state_walk_by_hand() {
        let p = Matrix::from_rows(&[[1.0, 0.0, 0.0], [0.5, 0.0, 0.5], [0.0, 0.0, 1.0]]).unwrap();
        let mut r = Matrix::zeros(3, 3);
        r[(1, 2)] = 1.0;
        let env =
            MarkovRewardEnvironment::new("walk3", p, RewardModel::PerTransition(r), 0.9, vec![0, 2], 1, None).unwrap();
        let v = true_values_episodic(&env).unwrap();
        assert_eq!(v, vec![0.0, 0.5, 0.0]);
    }

    #[test]
    fn random_walk_values_increase_and_satisfy_bellman() {
        let (env, _) = make_random_walk(11, 0.9, 5).unwrap();
        let v = true_values_episodic(&env).unwrap();
        for x in 1..9 {
            assert!(v[x + 1] > v[x]);
        }
        assert_eq!((v[0], v[10]), (0.0, 0.0));
        assert!(bellman_residual(&env, &v) <= 1e-10);
    }

    #[test]
    fn random_mrp_bellman_residual() {
        let (env, _) = make_random_mrp(100, 20, 0.9, &mut RngStream::new(31, 0)).unwrap();
        let v = true_values_ergodic(&env).unwrap();
        assert!(bellman_residual(&env, &v) <= 1e-10);
        assert!(true_values_episodic(&env).is_err());
    }
}
