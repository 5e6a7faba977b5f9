//! Benchmark orchestration: run every (strategy, instance) pair from shared
//! starting points, summarize, and write traces + summary + SVG.

use crate::config::{build_strategy, parse_strategy_name, ExperimentConfig, StrategyKind};
use crate::seeds::SeedSplitter;
use crate::trace;
use crate::{HarnessError, Result};
use cwss_core::bfgs::{run_observed, NoObserver, RunStatus};
use cwss_core::theory::{Theorem1Params, TrajectoryMonitor};
use cwss_core::{sampling, ConditionReport64, L2OModel64, Problem64};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::fs;
use std::path::Path;
use std::sync::Arc;

/// One completed (strategy, instance) run.
#[derive(Debug)]
pub struct BenchRun {
    pub strategy: String,
    pub instance: usize,
    pub outcome: cwss_core::bfgs::RunOutcome<f64>,
    pub reports: Option<Vec<ConditionReport64>>,
}

#[derive(Debug, Clone, Copy, Default)]
pub struct BenchOptions {
    pub monitor: bool,
}

/// Execute all runs; order of results is (strategy, instance)-major and
/// independent of the rayon worker count.
pub fn run_bench(
    cfg: &ExperimentConfig,
    test_problems: &[Problem64],
    model: Option<&Arc<L2OModel64>>,
    opts: BenchOptions,
) -> Result<Vec<BenchRun>> {
    cfg.validate()?;
    // Fail before any run if a checkpoint is needed but absent.
    for name in &cfg.strategies {
        if parse_strategy_name(name)? == StrategyKind::L2o && model.is_none() {
            return Err(HarnessError::Validation(
                "strategy l2o requires a trained checkpoint (run `cwss train` first)".into(),
            ));
        }
    }
    let splitter = SeedSplitter::new(cfg.seed);
    let stop = cfg.stop();
    let mut jobs = Vec::new();
    for name in &cfg.strategies {
        for (i, problem) in test_problems.iter().enumerate() {
            jobs.push((name.clone(), i, problem));
        }
    }
    let runs: Vec<Result<BenchRun>> = jobs
        .into_par_iter()
        .map(|(name, i, problem)| {
            let mut strategy = build_strategy(&name, cfg, model)?;
            // Shared per-instance streams: every strategy sees the same x0
            // and, where applicable, the same run-state seed.
            let x0 = sampling::unit_gaussian_vector(
                problem.dimension(),
                &mut splitter.rng_at("bench/x0", i as u64),
            );
            let run_seed = splitter.seed_at("bench/run_state", i as u64);
            let (outcome, reports) = if opts.monitor {
                let params = Theorem1Params::new(1.0, 0.5, problem.lipschitz())?;
                let mut monitor = TrajectoryMonitor::new(params);
                let outcome =
                    run_observed(problem, &x0, strategy.as_mut(), &stop, run_seed, &mut monitor);
                (outcome, Some(monitor.reports))
            } else {
                let outcome = run_observed(
                    problem,
                    &x0,
                    strategy.as_mut(),
                    &stop,
                    run_seed,
                    &mut NoObserver,
                );
                (outcome, None)
            };
            Ok(BenchRun {
                strategy: name,
                instance: i,
                outcome,
                reports,
            })
        })
        .collect();
    runs.into_iter().collect()
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct StrategySummary {
    pub name: String,
    pub runs: usize,
    pub diverged: usize,
    pub iters_median: f64,
    pub iters_q1: f64,
    pub iters_q3: f64,
    pub final_f_median: Option<f64>,
    pub final_grad_norm_median: Option<f64>,
    /// Mean objective per iteration over non-diverged runs, each padded with
    /// its final value to the longest trace.
    pub curve_mean: Vec<f64>,
    /// Population standard deviation matching `curve_mean`.
    pub curve_std: Vec<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct BenchSummary {
    pub schema: u32,
    pub family: String,
    pub config_hash: String,
    pub n_test: usize,
    pub grad_tol: f64,
    pub max_iters: usize,
    pub strategies: Vec<StrategySummary>,
}

/// Median of a sorted slice (mean of the middle pair for even lengths).
fn median_sorted(v: &[f64]) -> f64 {
    let n = v.len();
    if n == 0 {
        return f64::NAN;
    }
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Tukey quartiles: medians of the lower/upper halves (middle excluded for
/// odd lengths).
fn quartiles_sorted(v: &[f64]) -> (f64, f64, f64) {
    let n = v.len();
    let med = median_sorted(v);
    if n < 2 {
        return (med, med, med);
    }
    let half = n / 2;
    let q1 = median_sorted(&v[..half]);
    let q3 = median_sorted(&v[n - half..]);
    (q1, med, q3)
}

pub fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(|a, b| a.partial_cmp(b).expect("finite"));
    median_sorted(&v)
}

/// Iterations-to-tolerance for one run: the final iteration count for
/// completed runs, the iteration cap for diverged ones.
pub fn iterations_to_tolerance(run: &BenchRun, max_iters: usize) -> usize {
    match run.outcome.status {
        RunStatus::Failed(_) => max_iters,
        _ => run.outcome.iterations(),
    }
}

/// Summarize runs (must come from [`run_bench`] on the same config).
pub fn summarize(cfg: &ExperimentConfig, runs: &[BenchRun]) -> BenchSummary {
    let mut strategies = Vec::new();
    for name in &cfg.strategies {
        let mine: Vec<&BenchRun> = runs.iter().filter(|r| &r.strategy == name).collect();
        let mut iters: Vec<f64> = mine
            .iter()
            .map(|r| iterations_to_tolerance(r, cfg.max_iters) as f64)
            .collect();
        iters.sort_by(|a, b| a.partial_cmp(b).expect("finite"));
        let (q1, med, q3) = quartiles_sorted(&iters);
        let diverged = mine
            .iter()
            .filter(|r| matches!(r.outcome.status, RunStatus::Failed(_)))
            .count();

        let completed: Vec<&&BenchRun> = mine
            .iter()
            .filter(|r| !matches!(r.outcome.status, RunStatus::Failed(_)))
            .collect();
        let mut final_f: Vec<f64> = completed
            .iter()
            .filter_map(|r| r.outcome.records.last().map(|rec| rec.f))
            .collect();
        let mut final_g: Vec<f64> = completed
            .iter()
            .filter_map(|r| r.outcome.records.last().map(|rec| rec.grad_norm))
            .collect();
        final_f.sort_by(|a, b| a.partial_cmp(b).expect("finite"));
        final_g.sort_by(|a, b| a.partial_cmp(b).expect("finite"));

        let longest = completed
            .iter()
            .map(|r| r.outcome.records.len())
            .max()
            .unwrap_or(0);
        let mut curve_mean = Vec::with_capacity(longest);
        let mut curve_std = Vec::with_capacity(longest);
        for k in 0..longest {
            let mut sum = 0.0;
            let mut count = 0.0;
            for r in &completed {
                let recs = &r.outcome.records;
                let f = recs.get(k).map_or_else(|| recs.last().expect("nonempty").f, |rec| rec.f);
                sum += f;
                count += 1.0;
            }
            let mean = sum / count;
            let mut var = 0.0;
            for r in &completed {
                let recs = &r.outcome.records;
                let f = recs.get(k).map_or_else(|| recs.last().expect("nonempty").f, |rec| rec.f);
                var += (f - mean) * (f - mean);
            }
            curve_mean.push(mean);
            curve_std.push((var / count).sqrt());
        }

        strategies.push(StrategySummary {
            name: name.clone(),
            runs: mine.len(),
            diverged,
            iters_median: med,
            iters_q1: q1,
            iters_q3: q3,
            final_f_median: (!final_f.is_empty()).then(|| median_sorted(&final_f)),
            final_grad_norm_median: (!final_g.is_empty()).then(|| median_sorted(&final_g)),
            curve_mean,
            curve_std,
        });
    }
    BenchSummary {
        schema: 1,
        family: cfg.family.clone(),
        config_hash: crate::config::config_hash(cfg),
        n_test: cfg.n_test,
        grad_tol: cfg.grad_tol,
        max_iters: cfg.max_iters,
        strategies,
    }
}

/// Write traces, `summary.json`, and `curves.svg` under `dir`.
pub fn write_bench_artifacts(dir: &Path, runs: &[BenchRun], summary: &BenchSummary) -> Result<()> {
    for run in runs {
        let sub = dir.join("runs").join(sanitize(&run.strategy));
        fs::create_dir_all(&sub)?;
        let text = trace::write_trace(&run.outcome.records, run.reports.as_deref())?;
        fs::write(sub.join(format!("instance_{:05}.csv", run.instance)), text)?;
    }
    fs::write(
        dir.join("summary.json"),
        serde_json::to_string_pretty(summary).expect("summary serializes"),
    )?;
    fs::write(dir.join("curves.svg"), crate::svg::render_curves(summary))?;
    Ok(())
}

fn sanitize(name: &str) -> String {
    name.replace(':', "_").replace('.', "_")
}
