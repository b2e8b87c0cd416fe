//! Markov reward environments driven by a fixed behavior policy, and their
//! linear feature maps.
//!
//! Transition dynamics are stored as the behavior kernel `P(x' | x)`. Rewards
//! may depend on the state being left or on the pair `(x, x')`. Off-policy
//! environments additionally carry importance weights `ρ(x, x')`; in the
//! environments here the action taken is identified by the next state, so the
//! weight of a transition is a function of `(x, x')`.

mod baird;
mod random_mrp;
mod random_walk;

pub use baird::{baird_initial_weights, make_baird, BAIRD_CENTER};
pub use random_mrp::make_random_mrp;
pub use random_walk::make_random_walk;

use alloc::string::String;
use alloc::vec::Vec;

use crate::error::{check_len, Error, Result};
use crate::numerics::{vector, Matrix, RngStream};

const STOCHASTIC_TOL: f64 = 1e-12;

/// Reward attached to a transition.
#[derive(Clone, Debug, PartialEq)]
pub enum RewardModel {
    /// `r(x)`, emitted on leaving `x`.
    PerState(Vec<f64>),
    /// `r(x, x')`.
    PerTransition(Matrix),
}

/// A finite Markov reward process seen through its behavior kernel.
#[derive(Clone, Debug, PartialEq)]
pub struct MarkovRewardEnvironment {
    name: String,
    seed: Option<u64>,
    transition: Matrix,
    reward: RewardModel,
    gamma: f64,
    absorbing: Vec<usize>,
    restart_state: usize,
    importance: Option<Matrix>,
}

/// One observed step `(x, r, x', ρ)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Transition {
    pub x: usize,
    pub r: f64,
    pub x_next: usize,
    pub rho: f64,
    /// `x_next` is absorbing; the episode ends and the next step starts from
    /// the restart state.
    pub terminal: bool,
}

impl MarkovRewardEnvironment {
    /// Validates and assembles an environment.
    pub fn new(
        name: impl Into<String>,
        transition: Matrix,
        reward: RewardModel,
        gamma: f64,
        absorbing: Vec<usize>,
        restart_state: usize,
        importance: Option<Matrix>,
    ) -> Result<Self> {
        let n = transition.rows();
        if n == 0 || !transition.is_square() {
            return Err(Error::InvalidDimension("transition matrix must be square and nonempty"));
        }
        for i in 0..n {
            let row = transition.row(i);
            if row.iter().any(|p| !(p.is_finite() && *p >= 0.0)) {
                return Err(Error::InvalidArgument("transition probabilities must be finite and nonnegative"));
            }
            if (row.iter().sum::<f64>() - 1.0).abs() > STOCHASTIC_TOL {
                return Err(Error::InvalidArgument("transition rows must sum to one"));
            }
        }
        match &reward {
            RewardModel::PerState(r) => {
                check_len(n, r.len())?;
                if !vector::all_finite(r) {
                    return Err(Error::InvalidArgument("rewards must be finite"));
                }
            }
            RewardModel::PerTransition(r) => {
                check_len(n * n, r.rows() * r.cols())?;
                check_len(n, r.rows())?;
                if !r.is_finite() {
                    return Err(Error::InvalidArgument("rewards must be finite"));
                }
            }
        }
        if !(gamma > 0.0 && gamma < 1.0) {
            return Err(Error::InvalidArgument("discount must lie in (0, 1)"));
        }
        for &a in &absorbing {
            if a >= n {
                return Err(Error::InvalidArgument("absorbing state out of range"));
            }
            if transition[(a, a)] != 1.0 {
                return Err(Error::InvalidArgument("absorbing states must self-loop"));
            }
        }
        if restart_state >= n || absorbing.contains(&restart_state) {
            return Err(Error::InvalidArgument("restart state must be a valid transient state"));
        }
        if let Some(rho) = &importance {
            check_len(n, rho.rows())?;
            check_len(n, rho.cols())?;
            if rho.as_slice().iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
                return Err(Error::InvalidArgument("importance weights must be finite and nonnegative"));
            }
        }
        let mut absorbing = absorbing;
        absorbing.sort_unstable();
        absorbing.dedup();
        Ok(MarkovRewardEnvironment {
            name: name.into(),
            seed: None,
            transition,
            reward,
            gamma,
            absorbing,
            restart_state,
            importance,
        })
    }

    pub fn with_seed(mut self, seed: Option<u64>) -> Self {
        self.seed = seed;
        self
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    /// Seed the environment was sampled from, if any.
    pub fn seed(&self) -> Option<u64> {
        self.seed
    }

    pub fn n_states(&self) -> usize {
        self.transition.rows()
    }

    pub fn transition(&self) -> &Matrix {
        &self.transition
    }

    pub fn reward_model(&self) -> &RewardModel {
        &self.reward
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn absorbing(&self) -> &[usize] {
        &self.absorbing
    }

    pub fn is_absorbing(&self, x: usize) -> bool {
        self.absorbing.binary_search(&x).is_ok()
    }

    pub fn is_episodic(&self) -> bool {
        !self.absorbing.is_empty()
    }

    pub fn restart_state(&self) -> usize {
        self.restart_state
    }

    pub fn importance(&self) -> Option<&Matrix> {
        self.importance.as_ref()
    }

    pub fn is_off_policy(&self) -> bool {
        self.importance.is_some()
    }

    #[inline]
    pub fn reward(&self, x: usize, x_next: usize) -> f64 {
        match &self.reward {
            RewardModel::PerState(r) => r[x],
            RewardModel::PerTransition(r) => r[(x, x_next)],
        }
    }

    #[inline]
    pub fn rho(&self, x: usize, x_next: usize) -> f64 {
        self.importance.as_ref().map_or(1.0, |m| m[(x, x_next)])
    }

    /// Largest importance weight on a transition of positive probability.
    pub fn rho_max(&self) -> f64 {
        let n = self.n_states();
        let mut m = 0.0f64;
        for x in 0..n {
            for y in 0..n {
                if self.transition[(x, y)] > 0.0 {
                    m = m.max(self.rho(x, y));
                }
            }
        }
        m
    }

    /// Expected one-step reward under the behavior kernel.
    pub fn expected_reward(&self) -> Vec<f64> {
        let n = self.n_states();
        (0..n)
            .map(|x| (0..n).map(|y| self.transition[(x, y)] * self.reward(x, y)).sum())
            .collect()
    }

    /// Target-policy kernel `P(x, x') ρ(x, x')`; the behavior kernel when
    /// on-policy.
    pub fn target_transition(&self) -> Matrix {
        match &self.importance {
            Some(rho) => self.transition.hadamard(rho).expect("validated dimensions"),
            None => self.transition.clone(),
        }
    }

    /// Expected one-step reward under the target policy.
    pub fn target_expected_reward(&self) -> Vec<f64> {
        let n = self.n_states();
        (0..n)
            .map(|x| {
                (0..n)
                    .map(|y| self.transition[(x, y)] * self.rho(x, y) * self.reward(x, y))
                    .sum()
            })
            .collect()
    }

    /// Kernel of the chain the sampler actually walks: absorption is followed
    /// immediately by a restart, so probability mass flowing into an absorbing
    /// state is redirected to the restart state. Identical to the transition
    /// matrix for continuing environments.
    pub fn sampling_chain(&self) -> Matrix {
        let mut p = self.transition.clone();
        if self.absorbing.is_empty() {
            return p;
        }
        let n = self.n_states();
        for x in 0..n {
            if self.is_absorbing(x) {
                p.row_mut(x).iter_mut().for_each(|v| *v = 0.0);
                p[(x, self.restart_state)] = 1.0;
                continue;
            }
            let mut moved = 0.0;
            for &a in &self.absorbing {
                moved += p[(x, a)];
                p[(x, a)] = 0.0;
            }
            p[(x, self.restart_state)] += moved;
        }
        p
    }

    /// Draws `x' ~ P(x, ·)`. Absorbing states self-loop and report `terminal`.
    pub fn sample_transition(&self, x: usize, rng: &mut RngStream) -> Transition {
        let x_next = rng.categorical(self.transition.row(x));
        Transition {
            x,
            r: self.reward(x, x_next),
            x_next,
            rho: self.rho(x, x_next),
            terminal: self.is_absorbing(x_next),
        }
    }
}

/// Feature matrix Φ: row `x` is `φ(x)`.
#[derive(Clone, Debug, PartialEq)]
pub struct FeatureMap {
    phi: Matrix,
}

impl FeatureMap {
    pub fn new(phi: Matrix) -> Result<Self> {
        if phi.rows() == 0 || phi.cols() == 0 {
            return Err(Error::InvalidDimension("feature matrix must be nonempty"));
        }
        if !phi.is_finite() {
            return Err(Error::InvalidArgument("features must be finite"));
        }
        Ok(FeatureMap { phi })
    }

    #[inline]
    pub fn phi(&self, x: usize) -> &[f64] {
        self.phi.row(x)
    }

    pub fn matrix(&self) -> &Matrix {
        &self.phi
    }

    pub fn d(&self) -> usize {
        self.phi.cols()
    }

    pub fn n_states(&self) -> usize {
        self.phi.rows()
    }

    pub fn max_row_norm(&self) -> f64 {
        (0..self.n_states()).map(|x| vector::norm(self.phi(x))).fold(0.0, f64::max)
    }

    pub fn column_rank(&self) -> usize {
        crate::numerics::rank(&self.phi, 1e-12).unwrap_or(0)
    }

    /// `Φ w`
    pub fn values(&self, w: &[f64]) -> Result<Vec<f64>> {
        self.phi.mul_vec(w)
    }
}
