//! Bundled experiment presets behind `itd repro <name>`.

use std::fs;
use std::path::Path;

use implicit_td::algorithms::{StepSizeSchedule, UpdateMode};

use crate::config::{AlgorithmConfig, EnvConfig, ExperimentConfig, Family, Metric, ProjectionConfig};
use crate::error::{HarnessError, Result};
use crate::experiment::{run_experiment_with_threads, ExperimentResult};
use crate::formats::fmt17;
use crate::output::emit_outputs;
use crate::sweep::{sweep_step_size, write_sweep, SweepRow};

pub const PRESETS: [&str; 3] = ["randomwalk-fig3", "mrp-fig5", "baird-table"];

pub const MASTER_SEED: u64 = 1;
pub const MRP_ENV_SEED: u64 = 2024;
pub const WALK_SWEEP_ALPHAS: [f64; 8] = [0.05, 0.1, 0.25, 0.5, 0.75, 1.0, 1.25, 1.5];

/// A named experiment inside a preset; outputs go to `<dir>/<label>`.
#[derive(Clone, Debug, PartialEq)]
pub struct ReproRun {
    pub label: String,
    pub config: ExperimentConfig,
}

fn td(mode: UpdateMode) -> AlgorithmConfig {
    AlgorithmConfig { family: Family::Td, mode }
}

fn modes() -> [UpdateMode; 2] {
    [UpdateMode::Explicit, UpdateMode::Implicit]
}

/// 100-state MRP, TD(0) and TD(0.5), `α_n = 300/n`, `R = 5000`.
pub fn mrp_fig5() -> Vec<ReproRun> {
    let mut runs = Vec::new();
    for lambda in [0.0, 0.5] {
        for mode in modes() {
            runs.push(ReproRun {
                label: format!("{}_td_lambda{}", mode.as_str(), lambda),
                config: ExperimentConfig {
                    env: EnvConfig::RandomMrp { n_states: 100, d: 20, gamma: 0.9, env_seed: MRP_ENV_SEED },
                    algorithm: td(mode),
                    lambda,
                    schedule_alpha: StepSizeSchedule::Polynomial { c: 300.0, s: 1.0 },
                    schedule_beta: None,
                    projection: Some(ProjectionConfig::Single { radius: 5000.0 }),
                    n_steps: 100_000,
                    n_replications: 20,
                    master_seed: MASTER_SEED,
                    metrics: vec![Metric::ParamError, Metric::Rmsve, Metric::Rmspbe],
                    snapshot_every: 0,
                    output_path: None,
                    w0: None,
                },
            });
        }
    }
    runs
}

/// Random walk TD(0) with a constant step; `radius` switches projection on.
pub fn walk_config(mode: UpdateMode, alpha: f64, radius: Option<f64>) -> ExperimentConfig {
    ExperimentConfig {
        env: EnvConfig::RandomWalk { n_states: 11, gamma: 0.9, d: 5 },
        algorithm: td(mode),
        lambda: 0.0,
        schedule_alpha: StepSizeSchedule::Constant { c: alpha },
        schedule_beta: None,
        projection: radius.map(|radius| ProjectionConfig::Single { radius }),
        n_steps: 10_000,
        n_replications: 100,
        master_seed: MASTER_SEED,
        metrics: vec![Metric::Rmsve, Metric::Rmstde],
        snapshot_every: 0,
        output_path: None,
        w0: None,
    }
}

/// TD(0), implicit TD(0) and their projected (`R = 10`) versions at
/// `α = 0.05` and `α = 1.5`.
pub fn randomwalk_fig3() -> Vec<ReproRun> {
    let mut runs = Vec::new();
    for alpha in [0.05, 1.5] {
        for radius in [None, Some(10.0)] {
            for mode in modes() {
                let config = walk_config(mode, alpha, radius);
                runs.push(ReproRun { label: format!("{}_alpha{}", crate::sweep::variant_label(&config), alpha), config });
            }
        }
    }
    runs
}

/// TDC on Baird: `(α, β)` constant or `α₁/n^0.99`, `β₁/n^(2/3)`.
pub fn baird_config(mode: UpdateMode, alpha: f64, beta: f64, decreasing: bool) -> ExperimentConfig {
    let (schedule_alpha, schedule_beta) = if decreasing {
        (StepSizeSchedule::Polynomial { c: alpha, s: 0.99 }, StepSizeSchedule::Polynomial { c: beta, s: 2.0 / 3.0 })
    } else {
        (StepSizeSchedule::Constant { c: alpha }, StepSizeSchedule::Constant { c: beta })
    };
    ExperimentConfig {
        env: EnvConfig::Baird,
        algorithm: AlgorithmConfig { family: Family::Tdc, mode },
        lambda: 0.0,
        schedule_alpha,
        schedule_beta: Some(schedule_beta),
        projection: None,
        n_steps: 10_000,
        n_replications: 100,
        master_seed: MASTER_SEED,
        metrics: vec![Metric::Rmspbe, Metric::Rmsve],
        snapshot_every: 0,
        output_path: None,
        w0: None,
    }
}

pub fn baird_table() -> Vec<ReproRun> {
    let settings = [(false, 0.005, 0.05), (false, 0.025, 0.25), (true, 0.05, 0.5), (true, 1.0, 10.0)];
    let mut runs = Vec::new();
    for (decreasing, alpha, beta) in settings {
        for mode in modes() {
            let kind = if decreasing { "decreasing" } else { "constant" };
            runs.push(ReproRun {
                label: format!("{}_tdc_{kind}_alpha{alpha}_beta{beta}", mode.as_str()),
                config: baird_config(mode, alpha, beta, decreasing),
            });
        }
    }
    runs
}

pub fn preset(name: &str) -> Result<Vec<ReproRun>> {
    match name {
        "randomwalk-fig3" => Ok(randomwalk_fig3()),
        "mrp-fig5" => Ok(mrp_fig5()),
        "baird-table" => Ok(baird_table()),
        other => Err(HarnessError::config(format!("unknown preset {other:?}; expected one of {}", PRESETS.join(", ")))),
    }
}

#[derive(Clone, Debug)]
pub struct ReproOutcome {
    pub runs: Vec<(ReproRun, ExperimentResult)>,
    pub sweep: Vec<SweepRow>,
}

impl ReproOutcome {
    pub fn result(&self, label: &str) -> Option<&ExperimentResult> {
        self.runs.iter().find(|(r, _)| r.label == label).map(|(_, res)| res)
    }

    /// `label,metric,step,mean,std,diverged` for the final snapshot of every run.
    pub fn summary_csv(&self) -> String {
        let mut out = String::from("label,metric,step,mean,std,diverged\n");
        for (run, res) in &self.runs {
            for &m in &run.config.metrics {
                if let Some(a) = res.final_aggregate(m) {
                    out.push_str(&format!(
                        "{},{},{},{},{},{}\n",
                        run.label,
                        m.as_str(),
                        a.step,
                        fmt17(a.mean),
                        fmt17(a.std),
                        a.diverged
                    ));
                }
            }
        }
        out
    }
}

/// Runs a preset. With `out_dir`, every run is written to its own
/// subdirectory next to `summary.csv` (and `sweep.csv` for the walk).
pub fn run_preset(name: &str, out_dir: Option<&Path>, threads: Option<usize>) -> Result<ReproOutcome> {
    let runs = preset(name)?;
    let mut done = Vec::with_capacity(runs.len());
    for run in runs {
        let result = run_experiment_with_threads(&run.config, threads)?;
        if let Some(dir) = out_dir {
            emit_outputs(&result, &dir.join(&run.label))?;
        }
        done.push((run, result));
    }
    let mut sweep = Vec::new();
    if name == "randomwalk-fig3" {
        for radius in [None, Some(10.0)] {
            let base = walk_config(UpdateMode::Explicit, WALK_SWEEP_ALPHAS[0], radius);
            sweep.extend(sweep_step_size(&base, &WALK_SWEEP_ALPHAS, threads)?);
        }
        if let Some(dir) = out_dir {
            write_sweep(&sweep, &dir.join("sweep.csv"))?;
        }
    }
    let outcome = ReproOutcome { runs: done, sweep };
    if let Some(dir) = out_dir {
        fs::create_dir_all(dir).map_err(|e| HarnessError::io(dir, e))?;
        let path = dir.join("summary.csv");
        fs::write(&path, outcome.summary_csv()).map_err(|e| HarnessError::io(path, e))?;
    }
    Ok(outcome)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets_are_valid_and_labels_unique() {
        for name in PRESETS {
            let runs = preset(name).unwrap();
            let mut labels: Vec<_> = runs.iter().map(|r| r.label.clone()).collect();
            labels.sort();
            labels.dedup();
            assert_eq!(labels.len(), runs.len(), "{name}");
            for r in &runs {
                r.config.validate().unwrap();
            }
        }
        assert!(preset("nope").is_err());
    }
}
