use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use implicit_td::oracle::OracleBundle;
use implicit_td_harness::experiment::threads_from_env;
use implicit_td_harness::formats::{fmt17, EnvironmentFile, OracleFile};
use implicit_td_harness::repro::{run_preset, PRESETS};
use implicit_td_harness::sweep::{sweep_csv, write_sweep};
use implicit_td_harness::{
    emit_outputs, run_experiment_with_threads, run_verification_suite_with, sweep_step_size, ExperimentConfig, Fault,
    HarnessError, Result,
};

/// Explicit, implicit and projected TD(0), TD(λ) and TDC experiments.
#[derive(Parser)]
#[command(name = "itd", version)]
struct Cli {
    /// Worker threads for replications (overrides IMPLICIT_TD_THREADS; 0 = auto).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one experiment config and write raw.csv, agg.csv and meta.json.
    Run {
        config: PathBuf,
        /// Output directory; defaults to the config's output_path.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Final errors of the explicit and implicit variants over step sizes.
    Sweep {
        config: PathBuf,
        #[arg(long, value_delimiter = ',', required = true)]
        alphas: Vec<f64>,
        /// Write the table here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print the oracle bundle of a config's environment as JSON.
    Oracle {
        config: PathBuf,
        /// Also write the environment and features to this JSON file.
        #[arg(long)]
        environment: Option<PathBuf>,
    },
    /// Run the property suite; exits with status 2 if any check fails.
    Verify {
        /// Print the machine-readable report instead of one line per check.
        #[arg(long)]
        json: bool,
        /// Deliberately break a component to confirm the suite notices.
        #[arg(long, value_enum)]
        inject_fault: Option<FaultArg>,
    },
    /// Reproduce a bundled experiment preset.
    Repro {
        #[arg(value_parser = clap::builder::PossibleValuesParser::new(PRESETS))]
        name: String,
        /// Output directory; defaults to repro/<name>.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum FaultArg {
    FlipEffectiveStep,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    let threads = match cli.threads {
        Some(0) => None,
        Some(n) => Some(n),
        None => threads_from_env(),
    };
    match execute(cli.command, threads) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| HarnessError::Io { path: dir.to_owned(), source: e })?;
    }
    fs::write(path, contents).map_err(|e| HarnessError::Io { path: path.to_owned(), source: e })
}

fn execute(command: Command, threads: Option<usize>) -> Result<()> {
    match command {
        Command::Run { config, out } => {
            let cfg = ExperimentConfig::load(&config)?;
            let dir = out
                .or_else(|| cfg.output_path.clone())
                .unwrap_or_else(|| PathBuf::from("out").join(cfg.algorithm.label()));
            let result = run_experiment_with_threads(&cfg, threads)?;
            emit_outputs(&result, &dir)?;
            for &m in &cfg.metrics {
                if let Some(a) = result.final_aggregate(m) {
                    println!("{} step {}: mean {} std {} diverged {}", m.as_str(), a.step, fmt17(a.mean), fmt17(a.std), a.diverged);
                }
            }
            println!("wrote {}", dir.display());
        }
        Command::Sweep { config, alphas, out } => {
            let cfg = ExperimentConfig::load(&config)?;
            let rows = sweep_step_size(&cfg, &alphas, threads)?;
            match out {
                Some(path) => write_sweep(&rows, &path)?,
                None => print!("{}", sweep_csv(&rows)),
            }
        }
        Command::Oracle { config, environment } => {
            let cfg = ExperimentConfig::load(&config)?;
            let (env, features) = cfg.env.build()?;
            let bundle = OracleBundle::compute(&env, &features, cfg.lambda)?;
            if let Some(path) = environment {
                write_file(&path, &EnvironmentFile::new(&env, &features).to_json())?;
            }
            print!("{}", OracleFile::from(&bundle).to_json());
        }
        Command::Verify { json, inject_fault } => {
            let fault = match inject_fault {
                Some(FaultArg::FlipEffectiveStep) => Fault::FlipEffectiveStep,
                None => Fault::None,
            };
            let report = run_verification_suite_with(fault)?;
            if json {
                print!("{}", report.to_json());
            } else {
                for c in &report.checks {
                    let status = if c.passed { "PASS" } else { "FAIL" };
                    println!("{status} {:<38} cases {:>9}  worst {:.3e}  tol {:.1e}", c.name, c.cases, c.worst, c.tolerance);
                }
            }
            if !report.passed() {
                return Err(HarnessError::VerificationFailed { failed: report.failed(), total: report.checks.len() });
            }
        }
        Command::Repro { name, out } => {
            let dir = out.unwrap_or_else(|| PathBuf::from("repro").join(&name));
            let outcome = run_preset(&name, Some(&dir), threads)?;
            print!("{}", outcome.summary_csv());
            println!("wrote {}", dir.display());
        }
    }
    Ok(())
}
