//! Learner update rules and the loops that drive them.
//!
//! Every rule comes in an explicit and an implicit flavour. The implicit
//! updates solve a rank-one fixed-point equation in closed form, which
//! amounts to a data-dependent shrinkage of the step size.

mod projection;
mod runner;
mod schedule;
mod td;
mod tdc;

pub use projection::{project, project_in_place};
pub use runner::{
    run_td, run_td_observed, run_tdc, run_tdc_observed, Outcome, Snapshot, SnapshotPlan, TdEvent, TdRunSpec,
    TdcEvent, TdcRadii, TdcRunSpec, Trajectory, DIVERGENCE_NORM,
};
pub use schedule::StepSizeSchedule;
pub use td::{td0_explicit_step, td0_implicit_step, TdLearnerState, TdStep};
pub use tdc::{TdcLearnerState, TdcStep};

/// Explicit (standard) or implicit update.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize), serde(rename_all = "snake_case"))]
pub enum UpdateMode {
    Explicit,
    Implicit,
}

impl UpdateMode {
    pub fn as_str(self) -> &'static str {
        match self {
            UpdateMode::Explicit => "explicit",
            UpdateMode::Implicit => "implicit",
        }
    }
}
