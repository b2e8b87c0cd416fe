use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use super::{FeatureMap, MarkovRewardEnvironment, RewardModel};
use crate::error::{Error, Result};
use crate::numerics::{vector, Matrix};

/// One-dimensional random walk on `n_states` integer positions with absorbing
/// endpoints.
///
/// Interior states step left or right with probability ½. Entering the
/// rightmost state pays 1, every other transition pays 0. Episodes restart
/// from the center state.
///
/// Interior features are a truncated Fourier basis
/// `(1, cos πu, sin πu, cos 2πu, sin 2πu, …)` of the normalized position
/// `u ∈ [0, 1]`, cut to `d` entries and scaled to unit norm. Absorbing states
/// have the zero feature vector, so they contribute nothing to bootstrapped
/// targets.
pub fn make_random_walk(n_states: usize, gamma: f64, d: usize) -> Result<(MarkovRewardEnvironment, FeatureMap)> {
    if n_states < 3 || n_states.is_multiple_of(2) {
        return Err(Error::InvalidDimension("random walk needs an odd number of states, at least 3"));
    }
    if d < 2 || d > n_states - 2 {
        return Err(Error::InvalidDimension("random walk feature dimension must lie in 2..=n_states-2"));
    }
    let n = n_states;
    let right = n - 1;
    let mut p = Matrix::zeros(n, n);
    p[(0, 0)] = 1.0;
    p[(right, right)] = 1.0;
    for x in 1..right {
        p[(x, x - 1)] = 0.5;
        p[(x, x + 1)] = 0.5;
    }
    let mut r = Matrix::zeros(n, n);
    r[(right - 1, right)] = 1.0;

    let interior = n - 2;
    let mut phi = Matrix::zeros(n, d);
    for x in 1..right {
        let u = if interior == 1 { 0.5 } else { (x - 1) as f64 / (interior - 1) as f64 };
        let row = fourier_row(u, d);
        phi.row_mut(x).copy_from_slice(&row);
    }
    let features = FeatureMap::new(phi)?;
    if features.column_rank() < d {
        return Err(Error::InvalidDimension("random walk features are not full column rank"));
    }
    let env = MarkovRewardEnvironment::new(
        "random_walk",
        p,
        RewardModel::PerTransition(r),
        gamma,
        vec![0, right],
        n / 2,
        None,
    )?;
    Ok((env, features))
}

fn fourier_row(u: f64, d: usize) -> Vec<f64> {
    let mut row = Vec::with_capacity(d);
    row.push(1.0);
    let mut k = 1;
    while row.len() < d {
        let angle = k as f64 * PI * u;
        row.push(libm::cos(angle));
        if row.len() < d {
            row.push(libm::sin(angle));
        }
        k += 1;
    }
    let norm = vector::norm(&row);
    row.iter_mut().for_each(|v| *v /= norm);
    row
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::RngStream;

    #[test]
    fn eleven_state_walk() {
        let (env, phi) = make_random_walk(11, 0.9, 5).unwrap();
        assert_eq!(env.n_states(), 11);
        assert_eq!(env.absorbing(), &[0, 10]);
        assert_eq!(env.restart_state(), 5);
        // position +4 is index 9
        let row = env.transition().row(9);
        assert_eq!(row[8], 0.5);
        assert_eq!(row[10], 0.5);
        assert_eq!(row.iter().sum::<f64>(), 1.0);
        assert_eq!(env.reward(9, 10), 1.0);
        assert_eq!(env.reward(9, 8), 0.0);
        assert_eq!(env.reward(1, 0), 0.0);
        for x in 1..10 {
            assert!((vector::norm(phi.phi(x)) - 1.0).abs() < 1e-12);
        }
        assert_eq!(vector::norm(phi.phi(0)), 0.0);
        assert_eq!(phi.column_rank(), 5);
    }

    #[test]
    fn episodes_terminate_at_either_end() {
        let (env, _) = make_random_walk(11, 0.9, 5).unwrap();
        let mut rng = RngStream::new(3, 0);
        let mut x = env.restart_state();
        let mut ends = [0usize; 2];
        for _ in 0..20_000 {
            let t = env.sample_transition(x, &mut rng);
            if t.terminal {
                ends[usize::from(t.x_next == 10)] += 1;
                assert_eq!(t.r, if t.x_next == 10 { 1.0 } else { 0.0 });
                x = env.restart_state();
            } else {
                x = t.x_next;
            }
        }
        assert!(ends[0] > 0 && ends[1] > 0);
    }

    #[test]
    fn rejects_bad_sizes() {
        assert!(make_random_walk(10, 0.9, 5).is_err());
        assert!(make_random_walk(11, 0.9, 1).is_err());
        assert!(make_random_walk(5, 0.9, 4).is_err());
    }
}
