use alloc::vec::Vec;

use super::{FeatureMap, MarkovRewardEnvironment, RewardModel};
use crate::error::{Error, Result};
use crate::numerics::{Matrix, RngStream};

/// Random continuing Markov reward process with normalized binary features.
///
/// Draw order from `rng`: every transition row (`n_states − 1` uniforms each),
/// then one uniform reward per state, then the feature matrix. A transition
/// row is the sequence of gaps between the sorted uniforms, with 0 and 1 as
/// boundary points. Feature rows are Bernoulli(½) bit vectors scaled to unit
/// norm; all-zero rows are redrawn and a rank-deficient Φ is redrawn whole.
pub fn make_random_mrp(
    n_states: usize,
    d: usize,
    gamma: f64,
    rng: &mut RngStream,
) -> Result<(MarkovRewardEnvironment, FeatureMap)> {
    if d == 0 || d >= n_states {
        return Err(Error::InvalidDimension("random MRP needs 0 < d < n_states"));
    }
    let n = n_states;
    let mut p = Matrix::zeros(n, n);
    let mut cuts: Vec<f64> = Vec::with_capacity(n + 1);
    for x in 0..n {
        cuts.clear();
        cuts.push(0.0);
        cuts.extend((0..n - 1).map(|_| rng.uniform()));
        cuts.push(1.0);
        cuts[1..n].sort_by(f64::total_cmp);
        let row = p.row_mut(x);
        for (k, w) in cuts.windows(2).enumerate() {
            row[k] = w[1] - w[0];
        }
    }
    let reward: Vec<f64> = (0..n).map(|_| rng.uniform()).collect();
    let features = loop {
        let phi = binary_features(n, d, rng);
        let fm = FeatureMap::new(phi)?;
        if fm.column_rank() == d {
            break fm;
        }
    };
    let env = MarkovRewardEnvironment::new("random_mrp", p, RewardModel::PerState(reward), gamma, Vec::new(), 0, None)?
        .with_seed(Some(rng.seed()));
    Ok((env, features))
}

fn binary_features(n: usize, d: usize, rng: &mut RngStream) -> Matrix {
    let mut phi = Matrix::zeros(n, d);
    for x in 0..n {
        let row = phi.row_mut(x);
        loop {
            let mut ones = 0usize;
            for v in row.iter_mut() {
                let bit = rng.bernoulli(0.5);
                *v = if bit { 1.0 } else { 0.0 };
                ones += usize::from(bit);
            }
            if ones > 0 {
                let scale = 1.0 / libm::sqrt(ones as f64);
                row.iter_mut().for_each(|v| *v *= scale);
                break;
            }
        }
    }
    phi
}
