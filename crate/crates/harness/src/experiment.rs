use std::env;

use implicit_td::algorithms::{run_td, run_tdc, TdRunSpec, TdcRadii, TdcRunSpec, Trajectory};
use implicit_td::environments::{FeatureMap, MarkovRewardEnvironment, Transition};
use implicit_td::numerics::RngStream;
use implicit_td::oracle::{rmstde, OracleBundle};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::{ExperimentConfig, Family, Metric, ProjectionConfig};
use crate::error::{HarnessError, Result};

/// Caps the worker threads used for replications; 0 or unset means one per core.
pub const THREADS_VAR: &str = "IMPLICIT_TD_THREADS";

/// Stream of `master_seed` reserved for the fixed RMSTDE evaluation set.
pub const EVAL_STREAM: u64 = u64::MAX;
pub const EVAL_TRANSITIONS: usize = 1000;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub replication: u32,
    pub step: u64,
    pub metric: Metric,
    pub value: f64,
}

/// Mean and population standard deviation over the replications whose value
/// is finite; `diverged` counts the rest.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AggregateRow {
    pub step: u64,
    pub metric: Metric,
    pub mean: f64,
    pub std: f64,
    pub diverged: u32,
}

#[derive(Clone, Debug)]
pub struct ExperimentResult {
    pub config: ExperimentConfig,
    pub rows: Vec<ResultRow>,
    pub aggregates: Vec<AggregateRow>,
    /// Replications whose run hit the divergence guard, with the step.
    pub diverged: Vec<(u32, u64)>,
    pub oracle: OracleBundle,
}

impl ExperimentResult {
    /// Aggregate at the last snapshot step.
    pub fn final_aggregate(&self, metric: Metric) -> Option<&AggregateRow> {
        self.aggregates.iter().rev().find(|a| a.metric == metric)
    }

    pub fn final_mean(&self, metric: Metric) -> f64 {
        self.final_aggregate(metric).map_or(f64::NAN, |a| a.mean)
    }

    pub fn diverged_fraction(&self) -> f64 {
        self.diverged.len() as f64 / f64::from(self.config.n_replications)
    }
}

/// Threads requested through [`THREADS_VAR`]; `None` means automatic.
pub fn threads_from_env() -> Option<usize> {
    env::var(THREADS_VAR).ok().and_then(|v| v.trim().parse().ok()).filter(|&n| n > 0)
}

pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentResult> {
    run_experiment_with_threads(config, threads_from_env())
}

/// Replication `i` draws from `RngStream(master_seed, i)`; results are
/// collected in replication order, so they do not depend on `threads`.
pub fn run_experiment_with_threads(config: &ExperimentConfig, threads: Option<usize>) -> Result<ExperimentResult> {
    config.validate()?;
    let (env, features) = config.env.build()?;
    let oracle = OracleBundle::compute(&env, &features, config.lambda)?;
    let w0 = config.initial_weights(features.d())?;
    let eval = evaluation_set(&env, config.master_seed);
    let plan = config.snapshot_plan();
    let steps = plan.steps().to_vec();

    let run_one = |i: u32| -> Result<(Vec<ResultRow>, Option<u64>)> {
        let mut rng = RngStream::new(config.master_seed, u64::from(i));
        let trajectory = run_replication(config, &env, &features, &w0, &mut rng)?;
        let diverged_at = match trajectory.outcome {
            implicit_td::algorithms::Outcome::Diverged { step } => Some(step),
            implicit_td::algorithms::Outcome::Completed => None,
        };
        let mut rows = Vec::with_capacity(steps.len() * config.metrics.len());
        let mut snaps = trajectory.snapshots.iter().peekable();
        for &step in &steps {
            let snap = snaps.next_if(|s| s.step == step);
            for &metric in &config.metrics {
                let value = match snap {
                    Some(s) => evaluate(metric, &s.w, &oracle, &features, &eval, env.gamma())?,
                    None => f64::INFINITY,
                };
                rows.push(ResultRow { replication: i, step, metric, value });
            }
        }
        Ok((rows, diverged_at))
    };

    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = threads {
        builder = builder.num_threads(n);
    }
    let pool = builder.build().map_err(|e| HarnessError::config(format!("thread pool: {e}")))?;
    let per_rep: Vec<Result<(Vec<ResultRow>, Option<u64>)>> =
        pool.install(|| (0..config.n_replications).into_par_iter().map(run_one).collect());

    let mut rows = Vec::new();
    let mut diverged = Vec::new();
    for (i, r) in per_rep.into_iter().enumerate() {
        let (rep_rows, div) = r?;
        rows.extend(rep_rows);
        if let Some(step) = div {
            diverged.push((i as u32, step));
        }
    }
    let aggregates = aggregate(&rows, &steps, &config.metrics);
    Ok(ExperimentResult { config: config.clone(), rows, aggregates, diverged, oracle })
}

fn run_replication(
    config: &ExperimentConfig,
    env: &MarkovRewardEnvironment,
    features: &FeatureMap,
    w0: &[f64],
    rng: &mut RngStream,
) -> Result<Trajectory> {
    let snapshots = config.snapshot_plan();
    let trajectory = match config.algorithm.family {
        Family::Td => {
            let projection = match config.projection {
                Some(ProjectionConfig::Single { radius }) => Some(radius),
                _ => None,
            };
            let spec = TdRunSpec {
                schedule: config.schedule_alpha,
                lambda: config.lambda,
                projection,
                mode: config.algorithm.mode,
                n_steps: config.n_steps,
                snapshots,
            };
            run_td(env, features, &spec, rng, w0)?
        }
        Family::Tdc => {
            let projection = match config.projection {
                Some(ProjectionConfig::Pair { radius_w, radius_u }) => Some(TdcRadii { w: radius_w, u: radius_u }),
                _ => None,
            };
            let spec = TdcRunSpec {
                schedule_alpha: config.schedule_alpha,
                schedule_beta: config.schedule_beta.expect("validated"),
                projection,
                mode: config.algorithm.mode,
                n_steps: config.n_steps,
                snapshots,
            };
            run_tdc(env, features, &spec, rng, w0, &vec![0.0; w0.len()])?
        }
    };
    Ok(trajectory)
}

/// Fixed transitions for RMSTDE, shared by every replication.
pub fn evaluation_set(env: &MarkovRewardEnvironment, master_seed: u64) -> Vec<Transition> {
    let mut rng = RngStream::new(master_seed, EVAL_STREAM);
    let mut x = env.restart_state();
    (0..EVAL_TRANSITIONS)
        .map(|_| {
            let t = env.sample_transition(x, &mut rng);
            x = if t.terminal { env.restart_state() } else { t.x_next };
            t
        })
        .collect()
}

fn evaluate(
    metric: Metric,
    w: &[f64],
    oracle: &OracleBundle,
    features: &FeatureMap,
    eval: &[Transition],
    gamma: f64,
) -> Result<f64> {
    Ok(match metric {
        Metric::ParamError => oracle.param_error(w)?,
        Metric::Rmsve => oracle.rmsve(w, features)?,
        Metric::Rmspbe => oracle.rmspbe(w)?,
        Metric::Rmstde => rmstde(w, eval, features, gamma)?,
    })
}

/// Groups rows by `(step, metric)` in the given orders.
pub fn aggregate(rows: &[ResultRow], steps: &[u64], metrics: &[Metric]) -> Vec<AggregateRow> {
    let mut out = Vec::with_capacity(steps.len() * metrics.len());
    for &step in steps {
        for &metric in metrics {
            let values: Vec<f64> = rows.iter().filter(|r| r.step == step && r.metric == metric).map(|r| r.value).collect();
            out.push(summarize(step, metric, &values));
        }
    }
    out
}

fn summarize(step: u64, metric: Metric, values: &[f64]) -> AggregateRow {
    let finite: Vec<f64> = values.iter().copied().filter(|v| v.is_finite()).collect();
    let diverged = (values.len() - finite.len()) as u32;
    if finite.is_empty() {
        return AggregateRow { step, metric, mean: f64::INFINITY, std: f64::INFINITY, diverged };
    }
    let n = finite.len() as f64;
    let mean = finite.iter().sum::<f64>() / n;
    let var = finite.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    AggregateRow { step, metric, mean, std: var.sqrt(), diverged }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::{AlgorithmConfig, EnvConfig};
    use implicit_td::algorithms::{StepSizeSchedule, UpdateMode};

    fn walk_config() -> ExperimentConfig {
        ExperimentConfig {
            env: EnvConfig::RandomWalk { n_states: 11, gamma: 0.9, d: 5 },
            algorithm: AlgorithmConfig { family: Family::Td, mode: UpdateMode::Implicit },
            lambda: 0.0,
            schedule_alpha: StepSizeSchedule::Constant { c: 0.1 },
            schedule_beta: None,
            projection: Some(ProjectionConfig::Single { radius: 10.0 }),
            n_steps: 500,
            n_replications: 6,
            master_seed: 3,
            metrics: vec![Metric::Rmsve, Metric::Rmstde, Metric::ParamError],
            snapshot_every: 100,
            output_path: None,
            w0: None,
        }
    }

    #[test]
    fn zero_steps_reports_initial_metrics() {
        let mut c = walk_config();
        c.n_steps = 0;
        c.snapshot_every = 0;
        c.n_replications = 1;
        let r = run_experiment(&c).unwrap();
        assert_eq!(r.rows.len(), 3);
        assert!(r.rows.iter().all(|row| row.step == 0));
        let (_, phi) = c.env.build().unwrap();
        assert_eq!(r.rows[0].value, r.oracle.rmsve(&[0.0; 5], &phi).unwrap());
    }

    #[test]
    fn results_do_not_depend_on_thread_count() {
        let c = walk_config();
        let one = run_experiment_with_threads(&c, Some(1)).unwrap();
        let four = run_experiment_with_threads(&c, Some(4)).unwrap();
        assert_eq!(one.rows, four.rows);
        assert_eq!(one.aggregates, four.aggregates);
        // steps ascend within each replication
        for w in one.rows.windows(2) {
            if w[0].replication == w[1].replication {
                assert!(w[0].step <= w[1].step);
            }
        }
    }

    #[test]
    fn aggregation_excludes_non_finite_values() {
        let rows: Vec<ResultRow> = [1.0, 3.0, f64::INFINITY]
            .iter()
            .enumerate()
            .map(|(i, v)| ResultRow { replication: i as u32, step: 5, metric: Metric::Rmsve, value: *v })
            .collect();
        let agg = aggregate(&rows, &[5], &[Metric::Rmsve]);
        assert_eq!(agg[0].mean, 2.0);
        assert_eq!(agg[0].std, 1.0);
        assert_eq!(agg[0].diverged, 1);
        let all_inf = summarize(1, Metric::Rmsve, &[f64::INFINITY]);
        assert_eq!(all_inf.mean, f64::INFINITY);
    }

    #[test]
    fn diverged_runs_fill_remaining_snapshots_with_infinity() {
        let mut c = walk_config();
        c.algorithm.mode = UpdateMode::Explicit;
        c.projection = None;
        c.schedule_alpha = StepSizeSchedule::Constant { c: 20.0 };
        c.n_steps = 5000;
        c.snapshot_every = 1000;
        let r = run_experiment(&c).unwrap();
        assert!(!r.diverged.is_empty());
        let (rep, step) = r.diverged[0];
        for row in r.rows.iter().filter(|row| row.replication == rep) {
            assert_eq!(row.value.is_infinite(), row.step >= step, "{row:?}");
        }
    }
}
