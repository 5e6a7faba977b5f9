//! Property suites behind `cwss verify`: instance validation, gradient
//! finite-difference checks, the coordinate-wise gain certificate on sampled
//! states, and empirical suites for the two convergence conditions.

use crate::config::ExperimentConfig;
use crate::dataset::{self, Split};
use crate::seeds::SeedSplitter;
use crate::{HarnessError, Result};
use cwss_core::bfgs::{run_observed, BfgsState, CwssMatrix, RunStatus, StopCriteria};
use cwss_core::numerics::{finite_diff_grad, spectral_norm_lenient, DenseMatrix, DenseVector};
use cwss_core::problems::Payload;
use cwss_core::sampling;
use cwss_core::strategies::{LineSearch, StepStrategy};
use cwss_core::theory::{
    monitor_theorem2_contraction, verify_gain_inequality, Theorem1Params, TrajectoryMonitor,
};
use cwss_core::{Problem64, Vector64};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::path::Path;

/// Outcome of one property suite.
#[derive(Debug, Clone)]
pub struct SuiteReport {
    pub name: String,
    pub checked: usize,
    pub failures: Vec<String>,
}

impl SuiteReport {
    pub fn ok(&self) -> bool {
        self.failures.is_empty()
    }
}

/// Semantic checks on loaded instances (shape and parse errors are caught
/// earlier, at load).
pub fn check_instances(
    cfg: &ExperimentConfig,
    problems: &[Problem64],
    files: &[String],
) -> SuiteReport {
    let mut failures = Vec::new();
    for (p, file) in problems.iter().zip(files) {
        match p.payload() {
            Payload::LeastSquares { a, .. } => {
                let zeros = a.as_slice().iter().filter(|v| **v == 0.0).count();
                let expect = (9 * cfg.m * cfg.n).div_ceil(10);
                if zeros != expect {
                    failures.push(format!(
                        "{file} (seed {}): {zeros} zero entries, expected {expect}",
                        p.seed()
                    ));
                }
            }
            Payload::Logistic { labels, rho, .. } => {
                if labels.iter().any(|l| *l > 1) || !rho.is_finite() || *rho <= 0.0 {
                    failures.push(format!("{file} (seed {}): bad labels or rho", p.seed()));
                }
            }
            Payload::LogSumExp { .. } => {
                let g0 = p.grad(&Vector64::zeros(p.dimension())).expect("dims fixed");
                if g0.norm() >= 1e-10 {
                    failures.push(format!(
                        "{file} (seed {}): gradient at origin {:e}",
                        p.seed(),
                        g0.norm()
                    ));
                }
            }
        }
        if let Some(x_star) = p.known_optimum() {
            let gn = p.grad(x_star).expect("dims fixed").norm();
            if gn >= 1e-8 {
                failures.push(format!(
                    "{file} (seed {}): gradient at stored optimum {gn:e}",
                    p.seed()
                ));
            }
        }
    }
    SuiteReport {
        name: "instance_invariants".into(),
        checked: problems.len(),
        failures,
    }
}

/// Analytic gradients vs central finite differences at random points;
/// relative error must stay below `1e-5`.
pub fn gradient_fd_suite(problems: &[Problem64], points: usize, seed: u64) -> SuiteReport {
    let mut failures = Vec::new();
    let mut rng = sampling::stream_rng(seed, "verify/fd", 0);
    for t in 0..points {
        let p = &problems[t % problems.len()];
        let x = sampling::normal_vector::<f64, _>(p.dimension(), &mut rng);
        let analytic = p.grad(&x).expect("dims match");
        let fd = match finite_diff_grad(|v| p.eval(v).expect("dims match"), &x, 1e-6) {
            Ok(g) => g,
            Err(e) => {
                failures.push(format!("seed {}: finite differences failed: {e}", p.seed()));
                continue;
            }
        };
        let denom = analytic.norm().max(1e-8);
        let rel = fd.dist(&analytic) / denom;
        if rel >= 1e-5 {
            failures.push(format!(
                "seed {}: gradient mismatch, relative error {rel:e}",
                p.seed()
            ));
        }
    }
    SuiteReport {
        name: "gradient_finite_difference".into(),
        checked: points,
        failures,
    }
}

/// States sampled along short line-search runs: `(problem, x_k, H_k)`.
pub fn sample_states(
    problems: &[Problem64],
    target: usize,
    seed: u64,
) -> Vec<(usize, BfgsState<f64>)> {
    let splitter = SeedSplitter::new(seed);
    let mut states = Vec::new();
    let snapshot_at = [0usize, 2, 4, 7];
    'outer: for (i, p) in problems.iter().cycle().enumerate() {
        if states.len() >= target || i >= problems.len() * snapshot_at.len() * 2 {
            break;
        }
        let x0 = sampling::unit_gaussian_vector(
            p.dimension(),
            &mut splitter.rng_at("verify/state_x0", i as u64),
        );
        let mut state = match BfgsState::init(p, &x0) {
            Ok(s) => s,
            Err(_) => continue,
        };
        let mut ls = LineSearch::default();
        for k in 0..=*snapshot_at.last().expect("nonempty") {
            if snapshot_at.contains(&k) && state.grad.norm() > 1e-8 {
                states.push((i % problems.len(), state.clone()));
                if states.len() >= target {
                    break 'outer;
                }
            }
            let d = match state.search_direction() {
                Ok(d) => d,
                Err(_) => break,
            };
            let step = match ls.step(p, &state, &d) {
                Ok(s) => s,
                Err(_) => break,
            };
            if state.apply_step(p, &step).is_err() {
                break;
            }
        }
    }
    states
}

/// The gain certificate on sampled convex states: the coordinate-wise step
/// built from the trial gradient must beat the exact scalar step by the
/// guaranteed margin.
pub fn gain_certificate_suite(problems: &[Problem64], states: usize, seed: u64) -> SuiteReport {
    let mut failures = Vec::new();
    let sampled = sample_states(problems, states, seed);
    for (idx, state) in &sampled {
        let p = &problems[*idx];
        let d = match state.search_direction() {
            Ok(d) => d,
            Err(e) => {
                failures.push(format!("seed {}: {e}", p.seed()));
                continue;
            }
        };
        let radius = 1.1 * d.norm();
        match verify_gain_inequality(p, &state.x, &state.h_inv, p.lipschitz(), radius) {
            Ok(check) if check.ok => {}
            Ok(check) => failures.push(format!(
                "seed {} k={}: gain inequality violated, lhs {:.17e} > rhs {:.17e}, x norm {:.6e}",
                p.seed(),
                state.k,
                check.lhs,
                check.rhs,
                state.x.norm()
            )),
            Err(e) => failures.push(format!("seed {} k={}: {e}", p.seed(), state.k)),
        }
    }
    SuiteReport {
        name: "gain_certificate".into(),
        checked: sampled.len(),
        failures,
    }
}

/// Scalar strategy clamped into the gradient-convergence box each step.
pub struct Theorem1Box {
    pub params: Theorem1Params<f64>,
}

impl StepStrategy<f64> for Theorem1Box {
    fn name(&self) -> &str {
        "theorem1_box"
    }

    fn step(
        &mut self,
        _problem: &Problem64,
        state: &BfgsState<f64>,
        d: &Vector64,
    ) -> cwss_core::Result<CwssMatrix<f64>> {
        let h_norm = spectral_norm_lenient(&state.h_inv);
        let upper = self.params.alpha / (self.params.lipschitz * h_norm);
        let dd = d.dot(d);
        let lower = if dd > 0.0 {
            self.params.beta * state.grad.dot(d) / dd
        } else {
            upper
        };
        let p = if lower <= upper {
            1.0f64.clamp(lower, upper)
        } else {
            upper
        };
        CwssMatrix::uniform(d.len(), p)
    }
}

/// Empirical gradient-convergence suite: runs whose step matrices satisfy
/// the theorem-1 box must drive the gradient below `1e-8` on at least 95%
/// of seeded convex instances.
pub fn theorem1_suite(count: usize, seed: u64) -> SuiteReport {
    let mut converged = 0usize;
    let mut failures = Vec::new();
    let stop = StopCriteria {
        grad_tol: 1e-8,
        max_iters: 1500,
    };
    for i in 0..count {
        let n = 12 + (i % 9);
        let p = well_conditioned_quadratic(n, sampling::derive_seed(seed, "verify/t1", i as u64));
        let x0 = sampling::unit_gaussian_vector(
            n,
            &mut sampling::stream_rng(seed, "verify/t1_x0", i as u64),
        );
        let params = Theorem1Params::new(1.5, 1e-3, p.lipschitz()).expect("valid");
        let mut strat = Theorem1Box { params };
        let out = cwss_core::bfgs::run(&p, &x0, &mut strat, &stop, 0);
        if out.status == RunStatus::Converged {
            converged += 1;
        } else {
            failures.push(format!(
                "seed {}: status {:?}, final grad {:.3e}",
                p.seed(),
                out.status,
                out.records.last().map_or(f64::NAN, |r| r.grad_norm)
            ));
        }
    }
    let required = (count * 95).div_ceil(100);
    let name = "theorem1_convergence".into();
    if converged >= required {
        SuiteReport {
            name,
            checked: count,
            failures: Vec::new(),
        }
    } else {
        failures.insert(0, format!("only {converged}/{count} runs converged (need {required})"));
        SuiteReport {
            name,
            checked: count,
            failures,
        }
    }
}

/// Random step matrices kept inside `(0, 2 gamma / L]`, with `gamma`
/// recomputed from the current inverse Hessian each step.
struct FeasibleTheorem2 {
    lipschitz: f64,
    lo: f64,
    hi: f64,
    rng: ChaCha8Rng,
}

impl StepStrategy<f64> for FeasibleTheorem2 {
    fn name(&self) -> &str {
        "theorem2_feasible"
    }

    fn begin_run(&mut self, _n: usize, run_seed: u64) {
        self.rng = sampling::stream_rng(run_seed, "t2/p", 0);
    }

    fn step(
        &mut self,
        _problem: &Problem64,
        state: &BfgsState<f64>,
        d: &Vector64,
    ) -> cwss_core::Result<CwssMatrix<f64>> {
        let gamma = 1.0 / spectral_norm_lenient(&state.h_inv);
        let bound = 2.0 * gamma / self.lipschitz;
        let entries: Vec<f64> = (0..d.len())
            .map(|_| bound * (self.lo + (self.hi - self.lo) * self.rng.gen::<f64>()))
            .collect();
        CwssMatrix::new(DenseVector::from_vec(entries))
    }
}

/// Near-identity square least-squares instance with a unique minimizer.
pub fn well_conditioned_quadratic(n: usize, seed: u64) -> Problem64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let scale = 0.15 / (n as f64).sqrt();
    let mut a = DenseMatrix::identity(n);
    for i in 0..n {
        for j in 0..n {
            let v = a.get(i, j) + scale * sampling::standard_normal(&mut rng);
            a.set(i, j, v);
        }
    }
    let b = sampling::normal_vector::<f64, _>(n, &mut rng);
    Problem64::least_squares_from_parts(a, b).expect("shapes agree")
}

/// Empirical distance-contraction suite: on convex quadratics with exactly
/// computed `gamma`, every step whose matrix passes the theorem-2 bound must
/// not increase the distance to the minimizer (1e-9 slack).
pub fn theorem2_suite(count: usize, seed: u64) -> SuiteReport {
    let mut failures = Vec::new();
    let mut checked_steps = 0usize;
    for i in 0..count {
        let n = 8 + (i % 7);
        let p = well_conditioned_quadratic(n, sampling::derive_seed(seed, "verify/t2", i as u64));
        let x_star = p.known_optimum().expect("square solve").clone();
        let x0 = sampling::unit_gaussian_vector(
            n,
            &mut sampling::stream_rng(seed, "verify/t2_x0", i as u64),
        );
        let mut strat = FeasibleTheorem2 {
            lipschitz: p.lipschitz(),
            lo: 0.5,
            hi: 1.0,
            rng: ChaCha8Rng::seed_from_u64(0),
        };
        let stop = StopCriteria {
            grad_tol: 1e-12,
            max_iters: 40,
        };
        let params = Theorem1Params::new(1.0, 0.5, p.lipschitz()).expect("valid");
        let mut monitor = TrajectoryMonitor::new(params);
        let run_seed = sampling::derive_seed(seed, "verify/t2_run", i as u64);
        let out = run_observed(&p, &x0, &mut strat, &stop, run_seed, &mut monitor);
        if let RunStatus::Failed(e) = &out.status {
            failures.push(format!("seed {}: run failed: {e}", p.seed()));
            continue;
        }
        let contraction = monitor_theorem2_contraction(&out.xs, &x_star);
        for (k, (report, contracted)) in monitor.reports.iter().zip(&contraction).enumerate() {
            checked_steps += 1;
            if report.theorem2_ok && !contracted {
                let before = out.xs[k].dist(&x_star);
                let after = out.xs[k + 1].dist(&x_star);
                failures.push(format!(
                    "seed {} step {}: condition held but distance grew {before:.17e} -> {after:.17e}",
                    p.seed(),
                    k + 1
                ));
            }
        }
    }
    SuiteReport {
        name: "theorem2_contraction".into(),
        checked: checked_steps,
        failures,
    }
}

/// Everything `cwss verify` runs against a dataset directory.
pub fn verify_dataset(dir: &Path) -> Result<Vec<SuiteReport>> {
    let manifest = dataset::read_manifest(dir)?;
    let cfg = &manifest.config;
    let mut train = dataset::load_problems(dir, &manifest, Split::Train)?;
    let test = dataset::load_problems(dir, &manifest, Split::Test)?;
    let mut files = manifest.train_files.clone();
    files.extend(manifest.test_files.iter().cloned());
    train.extend(test);
    if train.is_empty() {
        return Err(HarnessError::Validation("no instances".into()));
    }
    let seed = SeedSplitter::new(cfg.seed).seed("verify");
    Ok(vec![
        check_instances(cfg, &train, &files),
        gradient_fd_suite(&train, 100, seed),
        gain_certificate_suite(&train, 200, seed),
        theorem1_suite(100, seed),
        theorem2_suite(100, seed),
    ])
}
