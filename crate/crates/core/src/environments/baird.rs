use alloc::vec;
use alloc::vec::Vec;

use super::{FeatureMap, MarkovRewardEnvironment, RewardModel};
use crate::numerics::Matrix;

/// Index of the center state; states `0..6` are the peripheral states.
pub const BAIRD_CENTER: usize = 6;
const N: usize = 7;
const D: usize = 8;

/// Baird's seven-state star counterexample.
///
/// The behavior policy takes the dashed action (jump to a uniformly chosen
/// peripheral state) with probability 6/7 and the solid action (jump to the
/// center) with probability 1/7, so every row of the behavior kernel is
/// uniform. The target policy always takes the solid action, which gives
/// importance weights `ρ = 7` on transitions into the center and `ρ = 0`
/// elsewhere. Rewards are zero and `γ = 0.99`.
///
/// Peripheral state `i` has `φ = 2eᵢ + e₈`; the center has `φ = e₇ + 2e₈`.
/// Φ is 7×8, so it has rank 7, not full column rank.
pub fn make_baird() -> (MarkovRewardEnvironment, FeatureMap) {
    let p = Matrix::from_fn(N, N, |_, _| 1.0 / N as f64);
    let rho = Matrix::from_fn(N, N, |_, y| if y == BAIRD_CENTER { N as f64 } else { 0.0 });
    let mut phi = Matrix::zeros(N, D);
    for i in 0..BAIRD_CENTER {
        phi[(i, i)] = 2.0;
        phi[(i, D - 1)] = 1.0;
    }
    phi[(BAIRD_CENTER, D - 2)] = 1.0;
    phi[(BAIRD_CENTER, D - 1)] = 2.0;
    let env = MarkovRewardEnvironment::new(
        "baird",
        p,
        RewardModel::PerState(vec![0.0; N]),
        0.99,
        Vec::new(),
        BAIRD_CENTER,
        Some(rho),
    )
    .expect("static construction is valid");
    (env, FeatureMap::new(phi).expect("static construction is valid"))
}

/// Conventional starting weights `(1, 1, 1, 1, 1, 1, 10, 1)`.
pub fn baird_initial_weights() -> Vec<f64> {
    vec![1.0, 1.0, 1.0, 1.0, 1.0, 1.0, 10.0, 1.0]
}
