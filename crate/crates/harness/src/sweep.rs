use std::fs;
use std::path::Path;

use implicit_td::algorithms::UpdateMode;
use serde::{Deserialize, Serialize};

use crate::config::{ExperimentConfig, Metric, ProjectionConfig};
use crate::error::{HarnessError, Result};
use crate::experiment::run_experiment_with_threads;
use crate::formats::fmt17;

/// Final aggregate of one metric for one step size and variant.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub alpha: f64,
    pub variant: String,
    pub metric: Metric,
    pub mean: f64,
    pub std: f64,
    pub diverged: u32,
}

/// `explicit_td`, `implicit_tdc`, … with a `projected_` prefix when the
/// config projects.
pub fn variant_label(config: &ExperimentConfig) -> String {
    let prefix = if config.projection.is_some() { "projected_" } else { "" };
    format!("{prefix}{}", config.algorithm.label())
}

/// Runs the explicit and implicit version of `base` at every leading step
/// size in `alphas`.
pub fn sweep_step_size(base: &ExperimentConfig, alphas: &[f64], threads: Option<usize>) -> Result<Vec<SweepRow>> {
    if alphas.is_empty() {
        return Err(HarnessError::config("sweep needs at least one step size"));
    }
    if let Some(a) = alphas.iter().find(|a| !(a.is_finite() && **a > 0.0)) {
        return Err(HarnessError::config(format!("step size {a} is not positive")));
    }
    let mut table = Vec::new();
    for &alpha in alphas {
        for mode in [UpdateMode::Explicit, UpdateMode::Implicit] {
            let config = base.with_leading_alpha(alpha).with_mode(mode);
            let result = run_experiment_with_threads(&config, threads)?;
            for &metric in &config.metrics {
                let a = result.final_aggregate(metric).expect("every metric is aggregated");
                table.push(SweepRow {
                    alpha,
                    variant: variant_label(&config),
                    metric,
                    mean: a.mean,
                    std: a.std,
                    diverged: a.diverged,
                });
            }
        }
    }
    Ok(table)
}

pub fn sweep_csv(rows: &[SweepRow]) -> String {
    let mut out = String::from("alpha,variant,metric,mean,std,diverged\n");
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{}\n",
            fmt17(r.alpha),
            r.variant,
            r.metric.as_str(),
            fmt17(r.mean),
            fmt17(r.std),
            r.diverged
        ));
    }
    out
}

pub fn write_sweep(rows: &[SweepRow], path: &Path) -> Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(|e| HarnessError::io(dir, e))?;
    }
    fs::write(path, sweep_csv(rows)).map_err(|e| HarnessError::io(path, e))
}

/// The same sweep without projection when `base` projects, and vice versa
/// with the given radius.
pub fn toggle_projection(base: &ExperimentConfig, radius: f64) -> ExperimentConfig {
    let mut c = base.clone();
    c.projection = match base.projection {
        Some(_) => None,
        None => Some(ProjectionConfig::Single { radius }),
    };
    c
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::{AlgorithmConfig, EnvConfig, Family};
    use implicit_td::algorithms::StepSizeSchedule;

    fn base() -> ExperimentConfig {
        ExperimentConfig {
            env: EnvConfig::RandomWalk { n_states: 11, gamma: 0.9, d: 5 },
            algorithm: AlgorithmConfig { family: Family::Td, mode: UpdateMode::Explicit },
            lambda: 0.0,
            schedule_alpha: StepSizeSchedule::Constant { c: 0.1 },
            schedule_beta: None,
            projection: None,
            n_steps: 300,
            n_replications: 3,
            master_seed: 5,
            metrics: vec![Metric::Rmsve],
            snapshot_every: 0,
            output_path: None,
            w0: None,
        }
    }

    #[test]
    fn one_row_per_alpha_and_variant() {
        let rows = sweep_step_size(&base(), &[0.05, 0.5], Some(2)).unwrap();
        assert_eq!(rows.len(), 4);
        assert_eq!(rows[0].variant, "explicit_td");
        assert_eq!(rows[1].variant, "implicit_td");
        assert_eq!(rows[2].alpha, 0.5);
        let again = sweep_step_size(&base(), &[0.05, 0.5], Some(1)).unwrap();
        assert_eq!(sweep_csv(&rows), sweep_csv(&again));
        let projected = toggle_projection(&base(), 10.0);
        assert_eq!(variant_label(&projected), "projected_explicit_td");
    }

    #[test]
    fn rejects_empty_or_bad_alphas() {
        assert!(sweep_step_size(&base(), &[], None).is_err());
        assert!(sweep_step_size(&base(), &[0.0], None).is_err());
    }
}
