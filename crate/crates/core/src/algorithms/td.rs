use alloc::vec;
use alloc::vec::Vec;

use crate::environments::{FeatureMap, Transition};
use crate::error::{check_len, Error, Result};
use crate::numerics::vector::{axpy, dot, norm, norm_sq};

/// Weights, eligibility trace and iteration counter of a TD(λ) learner.
#[derive(Clone, Debug, PartialEq)]
pub struct TdLearnerState {
    pub w: Vec<f64>,
    pub e: Vec<f64>,
    /// Index of the next update, starting at 1.
    pub n: u64,
    pub lambda: f64,
    pub gamma: f64,
}

/// What one TD update did.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TdStep {
    pub delta: f64,
    pub alpha: f64,
    /// Step actually applied along the trace: `α` for explicit updates,
    /// `α / (1 + α‖e‖²)` for implicit ones.
    pub effective_alpha: f64,
    pub trace_norm: f64,
    pub phi_norm: f64,
}

impl TdLearnerState {
    pub fn new(w0: Vec<f64>, lambda: f64, gamma: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&lambda) {
            return Err(Error::InvalidArgument("lambda must lie in [0, 1]"));
        }
        if !(gamma > 0.0 && gamma < 1.0) {
            return Err(Error::InvalidArgument("discount must lie in (0, 1)"));
        }
        let d = w0.len();
        Ok(TdLearnerState { w: w0, e: vec![0.0; d], n: 1, lambda, gamma })
    }

    /// `e ← φ + λγe;  δ ← r + γφ'ᵀw − φᵀw;  w ← w + αδe`.
    pub fn explicit_step(&mut self, t: &Transition, features: &FeatureMap, alpha: f64) -> Result<TdStep> {
        self.step(t, features, alpha, false)
    }

    /// Closed-form solution of `(I + α e eᵀ) w' = w + α(r + γφ'ᵀw + λγ e_prevᵀ w) e`,
    /// i.e. the explicit direction with step `α / (1 + α‖e‖²)`.
    pub fn implicit_step(&mut self, t: &Transition, features: &FeatureMap, alpha: f64) -> Result<TdStep> {
        self.step(t, features, alpha, true)
    }

    pub fn step_with(
        &mut self,
        mode: super::UpdateMode,
        t: &Transition,
        features: &FeatureMap,
        alpha: f64,
    ) -> Result<TdStep> {
        self.step(t, features, alpha, mode == super::UpdateMode::Implicit)
    }

    fn step(&mut self, t: &Transition, features: &FeatureMap, alpha: f64, implicit: bool) -> Result<TdStep> {
        check_len(features.d(), self.w.len())?;
        check_len(features.d(), self.e.len())?;
        let phi = features.phi(t.x);
        let phi_next = features.phi(t.x_next);
        let decay = self.lambda * self.gamma;
        for (ei, pi) in self.e.iter_mut().zip(phi) {
            *ei = pi + decay * *ei;
        }
        let delta = t.r + self.gamma * dot(phi_next, &self.w) - dot(phi, &self.w);
        let trace_sq = norm_sq(&self.e);
        let effective_alpha = if implicit { alpha / (1.0 + alpha * trace_sq) } else { alpha };
        debug_assert!(effective_alpha <= alpha && effective_alpha >= 0.0);
        axpy(effective_alpha * delta, &self.e, &mut self.w);
        let info = TdStep { delta, alpha, effective_alpha, trace_norm: libm::sqrt(trace_sq), phi_norm: norm(phi) };
        self.n += 1;
        if t.terminal {
            self.e.iter_mut().for_each(|v| *v = 0.0);
        }
        Ok(info)
    }
}

/// TD(0) without a trace: `w ← w + α δ φ`. Returns `δ`.
pub fn td0_explicit_step(w: &mut [f64], t: &Transition, features: &FeatureMap, gamma: f64, alpha: f64) -> Result<f64> {
    check_len(features.d(), w.len())?;
    let phi = features.phi(t.x);
    let delta = t.r + gamma * dot(features.phi(t.x_next), w) - dot(phi, w);
    axpy(alpha * delta, phi, w);
    Ok(delta)
}

/// Implicit TD(0): `w ← w + α̃ δ φ` with `α̃ = α / (1 + α‖φ‖²)`. Returns
/// `(δ, α̃)`.
pub fn td0_implicit_step(
    w: &mut [f64],
    t: &Transition,
    features: &FeatureMap,
    gamma: f64,
    alpha: f64,
) -> Result<(f64, f64)> {
    check_len(features.d(), w.len())?;
    let phi = features.phi(t.x);
    let delta = t.r + gamma * dot(features.phi(t.x_next), w) - dot(phi, w);
    let eff = alpha / (1.0 + alpha * norm_sq(phi));
    axpy(eff * delta, phi, w);
    Ok((delta, eff))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::{Matrix, RngStream};
    use crate::oracle::implicit_fixed_point_solve;

    fn transition(x: usize, x_next: usize, r: f64) -> Transition {
        Transition { x, r, x_next, rho: 1.0, terminal: false }
    }

    fn one_feature() -> FeatureMap {
        FeatureMap::new(Matrix::new(1, 1, vec![1.0]).unwrap()).unwrap()
    }

    #[test]
    fn explicit_hand_case() {
        let mut s = TdLearnerState::new(vec![0.0], 0.0, 0.9).unwrap();
        let info = s.explicit_step(&transition(0, 0, 1.0), &one_feature(), 1.0).unwrap();
        assert_eq!(info.delta, 1.0);
        assert_eq!(s.w, vec![1.0]);
        assert_eq!(s.n, 2);
    }

    #[test]
    fn implicit_hand_case() {
        // (1 + α) w' = w + α(r + γφ'w) with w = 0, α = r = 1 → w' = 0.5
        let mut s = TdLearnerState::new(vec![0.0], 0.0, 0.9).unwrap();
        let info = s.implicit_step(&transition(0, 0, 1.0), &one_feature(), 1.0).unwrap();
        assert_eq!(info.effective_alpha, 0.5);
        assert_eq!(s.w, vec![0.5]);
    }

    #[test]
    fn zero_step_keeps_weights() {
        let (env, phi) = crate::environments::make_random_walk(11, 0.9, 5).unwrap();
        let mut rng = RngStream::new(4, 0);
        let mut s = TdLearnerState::new(vec![0.3, -0.2, 0.1, 0.0, 0.5], 0.7, 0.9).unwrap();
        let w0 = s.w.clone();
        for _ in 0..5 {
            let t = env.sample_transition(5, &mut rng);
            s.explicit_step(&t, &phi, 0.0).unwrap();
            s.implicit_step(&t, &phi, 0.0).unwrap();
        }
        assert_eq!(s.w, w0);
        assert_eq!(s.n, 11);
    }

    #[test]
    fn zero_feature_leaves_state() {
        let fm = FeatureMap::new(Matrix::new(2, 2, vec![0.0, 0.0, 1.0, 0.0]).unwrap()).unwrap();
        let mut s = TdLearnerState::new(vec![0.4, 0.7], 0.0, 0.9).unwrap();
        let info = s.implicit_step(&transition(0, 1, 2.0), &fm, 0.8).unwrap();
        assert_eq!(info.effective_alpha, 0.8);
        assert_eq!(s.w, vec![0.4, 0.7]);
    }

    #[test]
    fn trace_recursion() {
        let fm = FeatureMap::new(Matrix::identity(2)).unwrap();
        let mut s = TdLearnerState::new(vec![0.0, 0.0], 0.5, 0.9).unwrap();
        s.explicit_step(&transition(0, 1, 0.0), &fm, 0.1).unwrap();
        s.explicit_step(&transition(1, 0, 0.0), &fm, 0.1).unwrap();
        assert!((s.e[0] - 0.45).abs() < 1e-15);
        assert_eq!(s.e[1], 1.0);
    }

    #[test]
    fn trace_resets_after_terminal() {
        let fm = FeatureMap::new(Matrix::identity(2)).unwrap();
        let mut s = TdLearnerState::new(vec![0.0, 0.0], 0.5, 0.9).unwrap();
        let t = Transition { x: 0, r: 1.0, x_next: 1, rho: 1.0, terminal: true };
        s.explicit_step(&t, &fm, 0.1).unwrap();
        assert_eq!(s.w, vec![0.1, 0.0]);
        assert_eq!(s.e, vec![0.0, 0.0]);
    }

    #[test]
    fn dimension_mismatch() {
        let mut s = TdLearnerState::new(vec![0.0, 0.0, 0.0], 0.0, 0.9).unwrap();
        assert!(matches!(
            s.explicit_step(&transition(0, 0, 0.0), &one_feature(), 0.1),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn lambda_zero_matches_td0_path_bitwise() {
        let mut rng = RngStream::new(8, 0);
        let (env, phi) = crate::environments::make_random_mrp(30, 6, 0.9, &mut rng).unwrap();
        let mut s_exp = TdLearnerState::new(vec![0.0; 6], 0.0, 0.9).unwrap();
        let mut s_imp = s_exp.clone();
        let mut w_exp = vec![0.0; 6];
        let mut w_imp = vec![0.0; 6];
        let mut x = 0;
        for k in 1..2000u64 {
            let t = env.sample_transition(x, &mut rng);
            let alpha = 5.0 / k as f64;
            s_exp.explicit_step(&t, &phi, alpha).unwrap();
            s_imp.implicit_step(&t, &phi, alpha).unwrap();
            td0_explicit_step(&mut w_exp, &t, &phi, 0.9, alpha).unwrap();
            td0_implicit_step(&mut w_imp, &t, &phi, 0.9, alpha).unwrap();
            assert_eq!(s_exp.w, w_exp);
            assert_eq!(s_imp.w, w_imp);
            x = t.x_next;
        }
    }

    #[test]
    fn implicit_matches_direct_solve() {
        let mut rng = RngStream::new(9, 0);
        let d = 6;
        let phi = Matrix::from_fn(10, d, |_, _| rng.uniform() - 0.5);
        let fm = FeatureMap::new(phi).unwrap();
        for lambda in [0.0, 0.5, 0.9] {
            let mut s = TdLearnerState::new((0..d).map(|_| rng.uniform()).collect(), lambda, 0.9).unwrap();
            for _ in 0..200 {
                let t = transition(rng.below(10), rng.below(10), rng.uniform() * 2.0 - 1.0);
                let alpha = rng.uniform() * 5.0;
                let before = s.clone();
                s.implicit_step(&t, &fm, alpha).unwrap();
                // e_n from the recursion, drift α(r + γφ'ᵀw + λγ e_{n−1}ᵀw) e_n
                let e: Vec<f64> =
                    fm.phi(t.x).iter().zip(&before.e).map(|(p, e)| p + lambda * 0.9 * e).collect();
                let c = t.r + 0.9 * dot(fm.phi(t.x_next), &before.w) + lambda * 0.9 * dot(&before.e, &before.w);
                let drift: Vec<f64> = e.iter().map(|v| alpha * c * v).collect();
                let want = implicit_fixed_point_solve(&before.w, &e, alpha, &drift).unwrap();
                for (a, b) in s.w.iter().zip(&want) {
                    assert!((a - b).abs() <= 1e-10 * (1.0 + b.abs()), "{a} vs {b}");
                }
            }
        }
    }
}
