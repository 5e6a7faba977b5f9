//! `cwss` — generate datasets, train the learned step-size model, benchmark
//! strategies, and verify the library's analytical certificates.

use clap::{Args, Parser, Subcommand};
use cwss_harness::bench::{run_bench, summarize, write_bench_artifacts, BenchOptions};
use cwss_harness::config::ExperimentConfig;
use cwss_harness::dataset::{read_manifest, write_dataset, Split};
use cwss_harness::trainer::{load_model, train_l2o, CHECKPOINT_FILE};
use cwss_harness::verify::verify_dataset;
use cwss_harness::{dataset, HarnessError};
use std::path::PathBuf;
use std::process::ExitCode;
use std::sync::Arc;

#[derive(Parser)]
#[command(name = "cwss", about = "BFGS with coordinate-wise step sizes: benchmark harness")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct ConfigArgs {
    /// Experiment config JSON; overrides the preset.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Built-in preset (`paper` is full scale and long-running).
    #[arg(long, default_value = "desk", value_parser = ["desk", "paper"])]
    preset: String,
    /// Problem family for the preset.
    #[arg(long, default_value = "least_squares")]
    family: String,
    /// Base seed override.
    #[arg(long)]
    seed: Option<u64>,
}

impl ConfigArgs {
    fn resolve(&self) -> cwss_harness::Result<ExperimentConfig> {
        let mut cfg = match &self.config {
            Some(path) => {
                let text = std::fs::read_to_string(path).map_err(|e| {
                    HarnessError::Validation(format!("cannot read {}: {e}", path.display()))
                })?;
                ExperimentConfig::from_json(&text)?
            }
            None => ExperimentConfig::preset(&self.preset, &self.family)?,
        };
        if let Some(seed) = self.seed {
            cfg.seed = seed;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Generate the train/test dataset and manifest.
    Generate {
        #[command(flatten)]
        config: ConfigArgs,
        /// Output directory.
        #[arg(long)]
        out: PathBuf,
    },
    /// Train the learned step-size model on the dataset's train split.
    Train {
        /// Directory holding the dataset (and receiving the checkpoint).
        #[arg(long)]
        out: PathBuf,
        /// Checkpoint path (default `<out>/checkpoint.json`); resumes if present.
        #[arg(long)]
        checkpoint: Option<PathBuf>,
    },
    /// Benchmark strategies on the test split.
    Bench {
        /// Directory holding the dataset (and receiving results under `bench/`).
        #[arg(long)]
        out: PathBuf,
        /// Strategies to run (repeatable): ls | hgd | l2o | fixed:<alpha>.
        #[arg(long = "strategy")]
        strategies: Vec<String>,
        /// Checkpoint for the l2o strategy (default `<out>/checkpoint.json`).
        #[arg(long)]
        checkpoint: Option<PathBuf>,
        /// Append condition-checker columns to every trace.
        #[arg(long)]
        monitor: bool,
    },
    /// Run the property suites against a dataset.
    Verify {
        /// Directory holding the dataset.
        #[arg(long)]
        out: PathBuf,
    },
}

fn main() -> ExitCode {
    match dispatch() {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn dispatch() -> cwss_harness::Result<()> {
    match Cli::parse().command {
        Command::Generate { config, out } => {
            let cfg = config.resolve()?;
            let manifest = write_dataset(&cfg, &out)?;
            println!(
                "wrote {} train + {} test instances to {} (config hash {})",
                manifest.train_files.len(),
                manifest.test_files.len(),
                out.display(),
                &manifest.config_hash[..12],
            );
            Ok(())
        }
        Command::Train { out, checkpoint } => {
            let manifest = read_manifest(&out)?;
            let train = dataset::load_problems(&out, &manifest, Split::Train)?;
            let result = train_l2o(&manifest.config, &train, &out, checkpoint)?;
            println!(
                "trained {} updates; checkpoint {}, log {}",
                result.updates_run,
                result.checkpoint_path.display(),
                result.log_path.display(),
            );
            Ok(())
        }
        Command::Bench {
            out,
            strategies,
            checkpoint,
            monitor,
        } => {
            let manifest = read_manifest(&out)?;
            let mut cfg = manifest.config.clone();
            if !strategies.is_empty() {
                cfg.strategies = strategies;
            }
            cfg.validate()?;
            let test = dataset::load_problems(&out, &manifest, Split::Test)?;
            let needs_model = cfg.strategies.iter().any(|s| s == "l2o");
            let model = if needs_model {
                let path = checkpoint.unwrap_or_else(|| out.join(CHECKPOINT_FILE));
                if !path.exists() {
                    return Err(HarnessError::Validation(format!(
                        "strategy l2o requires a checkpoint; {} not found (run `cwss train`)",
                        path.display()
                    )));
                }
                Some(Arc::new(load_model(&path)?))
            } else {
                None
            };
            let runs = run_bench(&cfg, &test, model.as_ref(), BenchOptions { monitor })?;
            let summary = summarize(&cfg, &runs);
            let bench_dir = out.join("bench");
            std::fs::create_dir_all(&bench_dir)?;
            write_bench_artifacts(&bench_dir, &runs, &summary)?;
            for s in &summary.strategies {
                println!(
                    "{:<12} median iters {:>7.1}  IQR [{:.1}, {:.1}]  diverged {}/{}",
                    s.name, s.iters_median, s.iters_q1, s.iters_q3, s.diverged, s.runs
                );
            }
            println!("results under {}", bench_dir.display());
            Ok(())
        }
        Command::Verify { out } => {
            let reports = verify_dataset(&out)?;
            let mut failed = false;
            for r in &reports {
                let status = if r.ok() { "ok" } else { "FAIL" };
                println!("{:<28} {:>6} checks  {status}", r.name, r.checked);
                for f in r.failures.iter().take(10) {
                    println!("    {f}");
                }
                if r.failures.len() > 10 {
                    println!("    ... and {} more", r.failures.len() - 10);
                }
                failed |= !r.ok();
            }
            if failed {
                Err(HarnessError::Property("one or more suites failed".into()))
            } else {
                Ok(())
            }
        }
    }
}
