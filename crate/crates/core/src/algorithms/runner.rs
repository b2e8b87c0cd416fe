use alloc::vec;
use alloc::vec::Vec;

use super::projection::project_in_place;
use super::schedule::StepSizeSchedule;
use super::td::{TdLearnerState, TdStep};
use super::tdc::{TdcLearnerState, TdcStep};
use super::UpdateMode;
use crate::environments::{FeatureMap, MarkovRewardEnvironment, Transition};
use crate::error::{check_len, Error, Result};
use crate::numerics::{vector, RngStream};

/// Unprojected runs stop once `‖w‖` exceeds this.
pub const DIVERGENCE_NORM: f64 = 1e12;

/// Iteration counts at which a run records its weights. Step 0 is the
/// initial point; step `k` is the state after `k` updates.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SnapshotPlan {
    steps: Vec<u64>,
}

impl SnapshotPlan {
    /// `0, k, 2k, …` plus the final step.
    pub fn every(k: u64, n_steps: u64) -> Self {
        let k = k.max(1);
        let mut steps: Vec<u64> = (0..=n_steps / k).map(|i| i * k).collect();
        steps.push(n_steps);
        Self::from_steps(steps)
    }

    /// Step 0, `per_decade` roughly log-spaced steps per power of ten, and
    /// the final step.
    pub fn log_spaced(n_steps: u64, per_decade: u32) -> Self {
        let mut steps = vec![0, n_steps];
        if n_steps > 0 {
            let top = libm::log10(n_steps as f64);
            let count = libm::ceil(top * per_decade as f64) as u32;
            for i in 0..=count {
                let s = libm::round(libm::pow(10.0, i as f64 / per_decade as f64)) as u64;
                if s <= n_steps {
                    steps.push(s);
                }
            }
        }
        Self::from_steps(steps)
    }

    pub fn from_steps(mut steps: Vec<u64>) -> Self {
        steps.sort_unstable();
        steps.dedup();
        SnapshotPlan { steps }
    }

    pub fn steps(&self) -> &[u64] {
        &self.steps
    }

    pub fn last(&self) -> u64 {
        self.steps.last().copied().unwrap_or(0)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Snapshot {
    pub step: u64,
    pub w: Vec<f64>,
    /// Auxiliary weights, TDC only.
    pub u: Option<Vec<f64>>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Outcome {
    Completed,
    /// `‖w‖` left every bound (or became non-finite) after `step` updates.
    Diverged { step: u64 },
}

#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory {
    pub snapshots: Vec<Snapshot>,
    pub outcome: Outcome,
}

impl Trajectory {
    pub fn diverged(&self) -> bool {
        matches!(self.outcome, Outcome::Diverged { .. })
    }

    pub fn last(&self) -> Option<&Snapshot> {
        self.snapshots.last()
    }
}

/// One TD(λ) run.
#[derive(Clone, Debug)]
pub struct TdRunSpec {
    pub schedule: StepSizeSchedule,
    pub lambda: f64,
    /// Projection radius `R`, if projected.
    pub projection: Option<f64>,
    pub mode: UpdateMode,
    pub n_steps: u64,
    pub snapshots: SnapshotPlan,
}

/// Everything the observer of a TD run sees for one iteration.
#[derive(Clone, Copy, Debug)]
pub struct TdEvent<'a> {
    pub n: u64,
    pub transition: &'a Transition,
    pub step: &'a TdStep,
    /// `‖w‖` before the update.
    pub w_norm_before: f64,
    /// `‖w‖` after update and projection.
    pub w_norm_after: f64,
}

/// Runs TD(λ) from `w0`, starting at the environment's restart state.
pub fn run_td(
    env: &MarkovRewardEnvironment,
    features: &FeatureMap,
    spec: &TdRunSpec,
    rng: &mut RngStream,
    w0: &[f64],
) -> Result<Trajectory> {
    run_td_observed(env, features, spec, rng, w0, |_| {})
}

/// [`run_td`] with a callback after every update. Per iteration: draw the
/// transition, update, then project when a radius is set.
pub fn run_td_observed(
    env: &MarkovRewardEnvironment,
    features: &FeatureMap,
    spec: &TdRunSpec,
    rng: &mut RngStream,
    w0: &[f64],
    mut observer: impl FnMut(&TdEvent<'_>),
) -> Result<Trajectory> {
    check_len(features.d(), w0.len())?;
    check_len(env.n_states(), features.n_states())?;
    spec.schedule.validate()?;
    check_radius(spec.projection)?;
    let mut state = TdLearnerState::new(w0.to_vec(), spec.lambda, env.gamma())?;
    let plan = spec.snapshots.steps();
    let mut next_snap = 0;
    let mut snapshots = Vec::with_capacity(plan.len());
    record(&mut snapshots, plan, &mut next_snap, 0, &state.w, None);
    let mut x = env.restart_state();
    for k in 1..=spec.n_steps {
        let t = env.sample_transition(x, rng);
        let alpha = spec.schedule.value(k);
        let w_norm_before = vector::norm(&state.w);
        let step = state.step_with(spec.mode, &t, features, alpha)?;
        if let Some(r) = spec.projection {
            project_in_place(&mut state.w, r);
        }
        let w_norm_after = vector::norm(&state.w);
        observer(&TdEvent { n: k, transition: &t, step: &step, w_norm_before, w_norm_after });
        if diverged(w_norm_after, spec.projection.is_none()) {
            return Ok(Trajectory { snapshots, outcome: Outcome::Diverged { step: k } });
        }
        record(&mut snapshots, plan, &mut next_snap, k, &state.w, None);
        x = if t.terminal { env.restart_state() } else { t.x_next };
    }
    Ok(Trajectory { snapshots, outcome: Outcome::Completed })
}

/// Radii for projected TDC.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TdcRadii {
    pub w: f64,
    pub u: f64,
}

/// One TDC run.
#[derive(Clone, Debug)]
pub struct TdcRunSpec {
    pub schedule_alpha: StepSizeSchedule,
    pub schedule_beta: StepSizeSchedule,
    pub projection: Option<TdcRadii>,
    pub mode: UpdateMode,
    pub n_steps: u64,
    pub snapshots: SnapshotPlan,
}

#[derive(Clone, Copy, Debug)]
pub struct TdcEvent<'a> {
    pub n: u64,
    pub transition: &'a Transition,
    pub step: &'a TdcStep,
    pub w_norm_after: f64,
    pub u_norm_after: f64,
}

pub fn run_tdc(
    env: &MarkovRewardEnvironment,
    features: &FeatureMap,
    spec: &TdcRunSpec,
    rng: &mut RngStream,
    w0: &[f64],
    u0: &[f64],
) -> Result<Trajectory> {
    run_tdc_observed(env, features, spec, rng, w0, u0, |_| {})
}

/// Per iteration: draw the transition, compute δ, update `w` and `u` from the
/// same pre-update pair, project `w` onto `R_w` and `u` onto `R_u`.
pub fn run_tdc_observed(
    env: &MarkovRewardEnvironment,
    features: &FeatureMap,
    spec: &TdcRunSpec,
    rng: &mut RngStream,
    w0: &[f64],
    u0: &[f64],
    mut observer: impl FnMut(&TdcEvent<'_>),
) -> Result<Trajectory> {
    check_len(features.d(), w0.len())?;
    check_len(features.d(), u0.len())?;
    check_len(env.n_states(), features.n_states())?;
    spec.schedule_alpha.validate()?;
    spec.schedule_beta.validate()?;
    if let Some(r) = spec.projection {
        check_radius(Some(r.w))?;
        check_radius(Some(r.u))?;
    }
    let mut state = TdcLearnerState::new(w0.to_vec(), u0.to_vec(), env.gamma())?;
    let plan = spec.snapshots.steps();
    let mut next_snap = 0;
    let mut snapshots = Vec::with_capacity(plan.len());
    record(&mut snapshots, plan, &mut next_snap, 0, &state.w, Some(&state.u));
    let mut x = env.restart_state();
    for k in 1..=spec.n_steps {
        let t = env.sample_transition(x, rng);
        let alpha = spec.schedule_alpha.value(k);
        let beta = spec.schedule_beta.value(k);
        let step = state.step_with(spec.mode, &t, features, alpha, beta)?;
        if let Some(r) = spec.projection {
            project_in_place(&mut state.w, r.w);
            project_in_place(&mut state.u, r.u);
        }
        let w_norm_after = vector::norm(&state.w);
        let u_norm_after = vector::norm(&state.u);
        observer(&TdcEvent { n: k, transition: &t, step: &step, w_norm_after, u_norm_after });
        if diverged(w_norm_after, spec.projection.is_none()) || !u_norm_after.is_finite() {
            return Ok(Trajectory { snapshots, outcome: Outcome::Diverged { step: k } });
        }
        record(&mut snapshots, plan, &mut next_snap, k, &state.w, Some(&state.u));
        x = if t.terminal { env.restart_state() } else { t.x_next };
    }
    Ok(Trajectory { snapshots, outcome: Outcome::Completed })
}

fn check_radius(r: Option<f64>) -> Result<()> {
    match r {
        Some(r) if !(r.is_finite() && r > 0.0) => Err(Error::InvalidArgument("projection radius must be positive")),
        _ => Ok(()),
    }
}

#[inline]
fn diverged(norm: f64, unprojected: bool) -> bool {
    !norm.is_finite() || (unprojected && norm > DIVERGENCE_NORM)
}

#[inline]
fn record(out: &mut Vec<Snapshot>, plan: &[u64], next: &mut usize, step: u64, w: &[f64], u: Option<&[f64]>) {
    if *next < plan.len() && plan[*next] == step {
        out.push(Snapshot { step, w: w.to_vec(), u: u.map(<[f64]>::to_vec) });
        *next += 1;
    }
}
