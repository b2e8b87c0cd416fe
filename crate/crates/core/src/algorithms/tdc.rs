use alloc::vec::Vec;

use crate::environments::{FeatureMap, Transition};
use crate::error::{check_len, Result};
use crate::numerics::vector::{axpy, dot, norm_sq};

/// Primary weights `w`, auxiliary weights `u` and the iteration counter of a
/// TDC learner.
#[derive(Clone, Debug, PartialEq)]
pub struct TdcLearnerState {
    pub w: Vec<f64>,
    pub u: Vec<f64>,
    pub n: u64,
    pub gamma: f64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TdcStep {
    pub delta: f64,
    pub alpha: f64,
    pub beta: f64,
    pub effective_alpha: f64,
    pub effective_beta: f64,
}

impl TdcLearnerState {
    pub fn new(w0: Vec<f64>, u0: Vec<f64>, gamma: f64) -> Result<Self> {
        check_len(w0.len(), u0.len())?;
        Ok(TdcLearnerState { w: w0, u: u0, n: 1, gamma })
    }

    /// ```text
    /// w' = w + αρδφ − αργ(φᵀu)φ'
    /// u' = u + βρδφ − βρ(φᵀu)φ
    /// ```
    /// Both updates read the pre-update `(w, u)`.
    pub fn explicit_step(&mut self, t: &Transition, features: &FeatureMap, alpha: f64, beta: f64) -> Result<TdcStep> {
        let (phi, phi_next) = self.features(t, features)?;
        let delta = t.r + self.gamma * dot(phi_next, &self.w) - dot(phi, &self.w);
        let phi_u = dot(phi, &self.u);
        let rho = t.rho;
        axpy(alpha * rho * delta, phi, &mut self.w);
        axpy(-alpha * rho * self.gamma * phi_u, phi_next, &mut self.w);
        axpy(beta * rho * (delta - phi_u), phi, &mut self.u);
        self.n += 1;
        Ok(TdcStep { delta, alpha, beta, effective_alpha: alpha, effective_beta: beta })
    }

    /// Closed-form solution of
    /// ```text
    /// (I + αρφφᵀ) w' = w + αρ(rφ + γφφ'ᵀw − γφ'φᵀu)
    /// (I + βρφφᵀ) u' = u + βρ(rφ + γφφ'ᵀw − φφᵀw)
    /// ```
    /// which is
    /// ```text
    /// w' = w + α'ρδφ − αργ(φᵀu){φ' − α'ρ(φᵀφ')φ}
    /// u' = u + β'ρδφ − β'ρ(φᵀu)φ
    /// ```
    /// with `α' = α / (1 + αρ‖φ‖²)` and `β' = β / (1 + βρ‖φ‖²)`.
    pub fn implicit_step(&mut self, t: &Transition, features: &FeatureMap, alpha: f64, beta: f64) -> Result<TdcStep> {
        let (phi, phi_next) = self.features(t, features)?;
        let delta = t.r + self.gamma * dot(phi_next, &self.w) - dot(phi, &self.w);
        let phi_u = dot(phi, &self.u);
        let rho = t.rho;
        let phi_sq = norm_sq(phi);
        let alpha_eff = alpha / (1.0 + alpha * rho * phi_sq);
        let beta_eff = beta / (1.0 + beta * rho * phi_sq);
        let correction = alpha * rho * self.gamma * phi_u;
        let overlap = dot(phi, phi_next);
        axpy(alpha_eff * rho * delta + correction * alpha_eff * rho * overlap, phi, &mut self.w);
        axpy(-correction, phi_next, &mut self.w);
        axpy(beta_eff * rho * (delta - phi_u), phi, &mut self.u);
        self.n += 1;
        Ok(TdcStep { delta, alpha, beta, effective_alpha: alpha_eff, effective_beta: beta_eff })
    }

    pub fn step_with(
        &mut self,
        mode: super::UpdateMode,
        t: &Transition,
        features: &FeatureMap,
        alpha: f64,
        beta: f64,
    ) -> Result<TdcStep> {
        match mode {
            super::UpdateMode::Explicit => self.explicit_step(t, features, alpha, beta),
            super::UpdateMode::Implicit => self.implicit_step(t, features, alpha, beta),
        }
    }

    fn features<'f>(&self, t: &Transition, features: &'f FeatureMap) -> Result<(&'f [f64], &'f [f64])> {
        check_len(features.d(), self.w.len())?;
        check_len(features.d(), self.u.len())?;
        Ok((features.phi(t.x), features.phi(t.x_next)))
    }
}
