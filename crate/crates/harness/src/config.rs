use std::fs;
use std::path::{Path, PathBuf};

use implicit_td::algorithms::{SnapshotPlan, StepSizeSchedule, UpdateMode};
use implicit_td::environments::{
    baird_initial_weights, make_baird, make_random_mrp, make_random_walk, FeatureMap, MarkovRewardEnvironment,
};
use implicit_td::numerics::RngStream;
use serde::{Deserialize, Serialize};

use crate::error::{HarnessError, Result};

/// Log-spaced snapshots per decade when `snapshot_every` is 0.
pub const SNAPSHOTS_PER_DECADE: u32 = 10;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum EnvConfig {
    RandomWalk {
        #[serde(default = "default_walk_states")]
        n_states: usize,
        #[serde(default = "default_gamma")]
        gamma: f64,
        #[serde(default = "default_walk_d")]
        d: usize,
    },
    RandomMrp {
        #[serde(default = "default_mrp_states")]
        n_states: usize,
        #[serde(default = "default_mrp_d")]
        d: usize,
        #[serde(default = "default_gamma")]
        gamma: f64,
        env_seed: u64,
    },
    Baird,
}

fn default_walk_states() -> usize {
    11
}
fn default_walk_d() -> usize {
    5
}
fn default_mrp_states() -> usize {
    100
}
fn default_mrp_d() -> usize {
    20
}
fn default_gamma() -> f64 {
    0.9
}

impl EnvConfig {
    /// Builds the environment. A random MRP is drawn from stream 0 of its
    /// `env_seed`, so every replication sees the same chain.
    pub fn build(&self) -> Result<(MarkovRewardEnvironment, FeatureMap)> {
        let built = match *self {
            EnvConfig::RandomWalk { n_states, gamma, d } => make_random_walk(n_states, gamma, d),
            EnvConfig::RandomMrp { n_states, d, gamma, env_seed } => {
                make_random_mrp(n_states, d, gamma, &mut RngStream::new(env_seed, 0))
            }
            EnvConfig::Baird => Ok(make_baird()),
        };
        built.map_err(|e| HarnessError::config(format!("environment: {e}")))
    }

    pub fn env_seed(&self) -> Option<u64> {
        match *self {
            EnvConfig::RandomMrp { env_seed, .. } => Some(env_seed),
            _ => None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    Td,
    Tdc,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AlgorithmConfig {
    pub family: Family,
    pub mode: UpdateMode,
}

impl AlgorithmConfig {
    pub fn label(&self) -> String {
        let family = match self.family {
            Family::Td => "td",
            Family::Tdc => "tdc",
        };
        format!("{}_{}", self.mode.as_str(), family)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ProjectionConfig {
    Pair { radius_w: f64, radius_u: f64 },
    Single { radius: f64 },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    ParamError,
    Rmsve,
    Rmspbe,
    Rmstde,
}

impl Metric {
    pub fn as_str(self) -> &'static str {
        match self {
            Metric::ParamError => "param_error",
            Metric::Rmsve => "rmsve",
            Metric::Rmspbe => "rmspbe",
            Metric::Rmstde => "rmstde",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        [Metric::ParamError, Metric::Rmsve, Metric::Rmspbe, Metric::Rmstde].into_iter().find(|m| m.as_str() == s)
    }
}

/// One experiment: an environment, a learner and a replication protocol.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub env: EnvConfig,
    pub algorithm: AlgorithmConfig,
    #[serde(default)]
    pub lambda: f64,
    pub schedule_alpha: StepSizeSchedule,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub schedule_beta: Option<StepSizeSchedule>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub projection: Option<ProjectionConfig>,
    pub n_steps: u64,
    pub n_replications: u32,
    pub master_seed: u64,
    pub metrics: Vec<Metric>,
    /// 0 selects log-spaced snapshots plus the final step.
    #[serde(default)]
    pub snapshot_every: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_path: Option<PathBuf>,
    /// Initial weights; defaults to zeros (Baird: its customary start).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub w0: Option<Vec<f64>>,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let config: ExperimentConfig =
            serde_json::from_str(text).map_err(|e| HarnessError::config(format!("config JSON: {e}")))?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(HarnessError::config(m));
        if self.n_replications == 0 {
            return bad("n_replications must be at least 1");
        }
        if self.metrics.is_empty() {
            return bad("at least one metric is required");
        }
        let mut sorted = self.metrics.clone();
        sorted.sort();
        sorted.dedup();
        if sorted.len() != self.metrics.len() {
            return bad("metrics must not repeat");
        }
        if self.snapshot_every > self.n_steps && self.n_steps > 0 {
            return bad("snapshot_every exceeds n_steps");
        }
        self.schedule_alpha.validate().map_err(|e| HarnessError::config(format!("schedule_alpha: {e}")))?;
        match (self.algorithm.family, &self.schedule_beta) {
            (Family::Tdc, Some(beta)) => {
                beta.validate().map_err(|e| HarnessError::config(format!("schedule_beta: {e}")))?
            }
            (Family::Tdc, None) => return bad("tdc needs schedule_beta"),
            (Family::Td, Some(_)) => return bad("schedule_beta is only used by tdc"),
            (Family::Td, None) => {}
        }
        if !(0.0..=1.0).contains(&self.lambda) {
            return bad("lambda must lie in [0, 1]");
        }
        if self.algorithm.family == Family::Tdc && self.lambda != 0.0 {
            return bad("lambda applies to td only");
        }
        match (self.algorithm.family, self.projection) {
            (_, None) => {}
            (Family::Td, Some(ProjectionConfig::Single { radius })) => check_radius(radius)?,
            (Family::Tdc, Some(ProjectionConfig::Pair { radius_w, radius_u })) => {
                check_radius(radius_w)?;
                check_radius(radius_u)?
            }
            (Family::Td, Some(_)) => return bad("td projection takes {\"radius\": R}"),
            (Family::Tdc, Some(_)) => return bad("tdc projection takes {\"radius_w\": R_w, \"radius_u\": R_u}"),
        }
        let on_policy_only = matches!(self.env, EnvConfig::RandomWalk { .. } | EnvConfig::RandomMrp { .. });
        if self.algorithm.family == Family::Td && !on_policy_only {
            return bad("td runs need an on-policy environment; use tdc for baird");
        }
        if let Some(w0) = &self.w0 {
            if w0.iter().any(|v| !v.is_finite()) {
                return bad("w0 must be finite");
            }
        }
        Ok(())
    }

    pub fn snapshot_plan(&self) -> SnapshotPlan {
        if self.snapshot_every == 0 {
            SnapshotPlan::log_spaced(self.n_steps, SNAPSHOTS_PER_DECADE)
        } else {
            SnapshotPlan::every(self.snapshot_every, self.n_steps)
        }
    }

    pub fn initial_weights(&self, d: usize) -> Result<Vec<f64>> {
        match &self.w0 {
            Some(w) if w.len() != d => Err(HarnessError::config(format!("w0 has length {}, features have {d}", w.len()))),
            Some(w) => Ok(w.clone()),
            None if self.env == EnvConfig::Baird => Ok(baird_initial_weights()),
            None => Ok(vec![0.0; d]),
        }
    }

    /// Same experiment with the leading step size replaced; for TDC the
    /// ratio `β₁/α₁` is kept.
    pub fn with_leading_alpha(&self, alpha: f64) -> Self {
        let mut c = self.clone();
        let old = self.schedule_alpha.leading();
        c.schedule_alpha = self.schedule_alpha.with_leading(alpha);
        if let Some(beta) = &self.schedule_beta {
            c.schedule_beta = Some(beta.with_leading(beta.leading() * alpha / old));
        }
        c
    }

    pub fn with_mode(&self, mode: UpdateMode) -> Self {
        let mut c = self.clone();
        c.algorithm.mode = mode;
        c
    }
}

fn check_radius(r: f64) -> Result<()> {
    if r.is_finite() && r > 0.0 {
        Ok(())
    } else {
        Err(HarnessError::config("projection radius must be positive"))
    }
}
