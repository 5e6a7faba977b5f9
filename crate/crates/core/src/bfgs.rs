//! The BFGS state machine with a diagonal coordinate-wise step-size matrix.
//!
//! The inverse Hessian approximation `H_k = B_k^{-1}` is maintained directly;
//! each accepted update applies the rank-two inverse formula
//! `H' = (I - rho s y^T) H (I - rho y s^T) + rho s s^T` with `rho = 1/(y^T s)`
//! and is skipped when the curvature `y^T s` is not safely positive, which
//! keeps `H` positive definite even under step matrices that violate the
//! Wolfe conditions.

use crate::error::{Error, Result};
use crate::numerics::{DenseMatrix, DenseVector};
use crate::problems::ObjectiveProblem;
use crate::strategies::StepStrategy;
use crate::Scalar;
use std::time::Instant;

/// Relative curvature threshold below which the inverse-Hessian update is skipped.
pub const CURVATURE_EPS: f64 = 1e-12;

/// Iterations between explicit re-symmetrizations of `H`.
const RESYMMETRIZE_EVERY: usize = 50;

/// Diagonal step-size matrix `P`; entries are strictly positive and finite.
#[derive(Debug, Clone)]
pub struct CwssMatrix<T: Scalar> {
    p: DenseVector<T>,
}

impl<T: Scalar> CwssMatrix<T> {
    pub fn new(p: DenseVector<T>) -> Result<Self> {
        if !p.all_finite() || p.iter().any(|v| *v <= T::zero()) {
            return Err(Error::Config(
                "step-size matrix entries must be strictly positive and finite".into(),
            ));
        }
        Ok(Self { p })
    }

    pub fn identity(n: usize) -> Self {
        Self {
            p: DenseVector::constant(n, T::one()),
        }
    }

    /// `alpha * I` as a step matrix.
    pub fn uniform(n: usize, alpha: T) -> Result<Self> {
        Self::new(DenseVector::constant(n, alpha))
    }

    pub fn entries(&self) -> &DenseVector<T> {
        &self.p
    }

    pub fn len(&self) -> usize {
        self.p.len()
    }

    pub fn is_empty(&self) -> bool {
        self.p.is_empty()
    }

    pub fn max_entry(&self) -> T {
        self.p.max_entry()
    }

    pub fn min_entry(&self) -> T {
        self.p.min_entry()
    }

    /// `||P - I||_F` for the convergence monitors.
    pub fn deviation_from_identity(&self) -> T {
        self.p
            .iter()
            .map(|v| (*v - T::one()) * (*v - T::one()))
            .sum::<T>()
            .sqrt()
    }
}

/// Stopping rules: gradient tolerance and an iteration cap.
#[derive(Debug, Clone, Copy)]
pub struct StopCriteria<T: Scalar> {
    pub grad_tol: T,
    pub max_iters: usize,
}

impl<T: Scalar> StopCriteria<T> {
    pub fn new(grad_tol: T, max_iters: usize) -> Result<Self> {
        if grad_tol <= T::zero() || max_iters == 0 {
            return Err(Error::Config(
                "stop criteria need grad_tol > 0 and max_iters >= 1".into(),
            ));
        }
        Ok(Self { grad_tol, max_iters })
    }
}

impl<T: Scalar> Default for StopCriteria<T> {
    fn default() -> Self {
        Self {
            grad_tol: T::of(1e-10),
            max_iters: 500,
        }
    }
}

/// Mutable optimizer state: iterate, inverse Hessian, cached objective data.
#[derive(Debug, Clone)]
pub struct BfgsState<T: Scalar> {
    pub x: DenseVector<T>,
    pub h_inv: DenseMatrix<T>,
    pub grad: DenseVector<T>,
    pub f: T,
    pub k: usize,
    pub last_skip: bool,
}

impl<T: Scalar> BfgsState<T> {
    /// Fresh state with `H = I` at `x0`.
    pub fn init(problem: &ObjectiveProblem<T>, x0: &DenseVector<T>) -> Result<Self> {
        let f = problem.eval(x0)?;
        let grad = problem.grad(x0)?;
        if !f.is_finite() || !grad.all_finite() {
            return Err(Error::NonFinite("objective or gradient at x0".into()));
        }
        Ok(Self {
            x: x0.clone(),
            h_inv: DenseMatrix::identity(x0.len()),
            grad,
            f,
            k: 0,
            last_skip: false,
        })
    }

    /// `d = H grad`; the update subtracts `P (.) d`.
    pub fn search_direction(&self) -> Result<DenseVector<T>> {
        let d = self.h_inv.matvec(&self.grad)?;
        if !d.all_finite() {
            return Err(Error::NonFinite("search direction".into()));
        }
        Ok(d)
    }

    /// Advance one iteration with the given step matrix: move, refresh the
    /// gradient, apply the curvature-guarded inverse-Hessian update.
    pub fn apply_step(&mut self, problem: &ObjectiveProblem<T>, p: &CwssMatrix<T>) -> Result<()> {
        if p.len() != self.x.len() {
            return Err(Error::DimMismatch {
                op: "apply_step",
                detail: format!("P has {} entries for dimension {}", p.len(), self.x.len()),
            });
        }
        let d = self.search_direction()?;
        let step = p.entries().hadamard(&d);
        let x_new = self.x.sub(&step);
        if !x_new.all_finite() {
            return Err(Error::NonFinite("iterate after step".into()));
        }
        let f_new = problem.eval(&x_new)?;
        let grad_new = problem.grad(&x_new)?;
        if !f_new.is_finite() || !grad_new.all_finite() {
            return Err(Error::NonFinite("objective or gradient after step".into()));
        }
        let s = x_new.sub(&self.x);
        let y = grad_new.sub(&self.grad);
        let (h_new, skipped) =
            update_inverse_hessian(&self.h_inv, &s, &y, T::of(CURVATURE_EPS));
        self.x = x_new;
        self.grad = grad_new;
        self.f = f_new;
        self.h_inv = h_new;
        self.last_skip = skipped;
        self.k += 1;
        if self.k % RESYMMETRIZE_EVERY == 0 {
            self.h_inv.symmetrize();
        }
        Ok(())
    }
}

/// Inverse-form BFGS update. Returns the unchanged matrix with `skipped =
/// true` when `y^T s <= eps ||s|| ||y||`, which would destroy positive
/// definiteness. On acceptance the result satisfies `H' y = s`.
pub fn update_inverse_hessian<T: Scalar>(
    h_inv: &DenseMatrix<T>,
    s: &DenseVector<T>,
    y: &DenseVector<T>,
    curvature_eps: T,
) -> (DenseMatrix<T>, bool) {
    debug_assert_eq!(s.len(), y.len());
    let ys = y.dot(s);
    if ys <= curvature_eps * s.norm() * y.norm() || !ys.is_finite() {
        return (h_inv.clone(), true);
    }
    let rho = T::one() / ys;
    // (I - rho s y^T) H (I - rho y s^T) + rho s s^T expands to
    // H - rho (s (Hy)^T + (Hy) s^T) + (rho^2 y^T H y + rho) s s^T.
    let hy = h_inv.matvec(y).expect("shapes checked");
    let yhy = y.dot(&hy);
    let mut h = h_inv.clone();
    h.add_scaled_outer(-rho, s, &hy);
    h.add_scaled_outer(-rho, &hy, s);
    h.add_scaled_outer(rho * rho * yhy + rho, s, s);
    (h, false)
}

/// One row of the per-iteration trace.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConvergenceRecord<T: Scalar> {
    pub k: usize,
    pub f: T,
    pub grad_norm: T,
    /// `||P - I||_F` of the step matrix that produced this iterate (0 at k=0).
    pub p_dev_frob: T,
    pub skipped: bool,
    pub elapsed_ms: f64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum RunStatus {
    /// Gradient norm fell below the tolerance.
    Converged,
    /// Iteration cap reached first.
    MaxIters,
    /// Strategy error or non-finite iterate; the trace is partial.
    Failed(String),
}

/// Full outcome of an optimization run, trace included.
#[derive(Debug, Clone)]
pub struct RunOutcome<T: Scalar> {
    pub records: Vec<ConvergenceRecord<T>>,
    /// Iterates `x_0 .. x_K` (aligned with `records`).
    pub xs: Vec<DenseVector<T>>,
    /// Step-matrix diagonals used at steps `1 .. K`.
    pub ps: Vec<DenseVector<T>>,
    pub status: RunStatus,
    pub final_state: Option<BfgsState<T>>,
}

impl<T: Scalar> RunOutcome<T> {
    pub fn converged(&self) -> bool {
        self.status == RunStatus::Converged
    }

    pub fn iterations(&self) -> usize {
        self.records.last().map_or(0, |r| r.k)
    }
}

/// Hook invoked with the pre-step state and the step matrix about to be applied.
pub trait StepObserver<T: Scalar> {
    fn observe(&mut self, state: &BfgsState<T>, p: &CwssMatrix<T>, d: &DenseVector<T>);
}

/// No-op observer.
pub struct NoObserver;

impl<T: Scalar> StepObserver<T> for NoObserver {
    fn observe(&mut self, _: &BfgsState<T>, _: &CwssMatrix<T>, _: &DenseVector<T>) {}
}

/// Iterate until the gradient tolerance or the iteration cap is hit.
///
/// `run_seed` feeds strategies that carry per-run random state (the learned
/// strategy's hidden-state initialization); deterministic given its value.
pub fn run<T: Scalar>(
    problem: &ObjectiveProblem<T>,
    x0: &DenseVector<T>,
    strategy: &mut dyn StepStrategy<T>,
    stop: &StopCriteria<T>,
    run_seed: u64,
) -> RunOutcome<T> {
    run_observed(problem, x0, strategy, stop, run_seed, &mut NoObserver)
}

/// [`run`] with a per-step observer (used by the condition monitors).
pub fn run_observed<T: Scalar>(
    problem: &ObjectiveProblem<T>,
    x0: &DenseVector<T>,
    strategy: &mut dyn StepStrategy<T>,
    stop: &StopCriteria<T>,
    run_seed: u64,
    observer: &mut dyn StepObserver<T>,
) -> RunOutcome<T> {
    let mut out = RunOutcome {
        records: Vec::new(),
        xs: Vec::new(),
        ps: Vec::new(),
        status: RunStatus::MaxIters,
        final_state: None,
    };
    let mut state = match BfgsState::init(problem, x0) {
        Ok(s) => s,
        Err(e) => {
            out.status = RunStatus::Failed(e.to_string());
            return out;
        }
    };
    strategy.begin_run(problem.dimension(), run_seed);
    let t0 = Instant::now();
    out.records.push(ConvergenceRecord {
        k: 0,
        f: state.f,
        grad_norm: state.grad.norm(),
        p_dev_frob: T::zero(),
        skipped: false,
        elapsed_ms: 0.0,
    });
    out.xs.push(state.x.clone());

    loop {
        if state.grad.norm() <= stop.grad_tol {
            out.status = RunStatus::Converged;
            break;
        }
        if state.k >= stop.max_iters {
            out.status = RunStatus::MaxIters;
            break;
        }
        let step_result = state
            .search_direction()
            .and_then(|d| {
                let p = strategy.step(problem, &state, &d)?;
                observer.observe(&state, &p, &d);
                Ok(p)
            })
            .and_then(|p| state.apply_step(problem, &p).map(|()| p));
        match step_result {
            Ok(p) => {
                out.records.push(ConvergenceRecord {
                    k: state.k,
                    f: state.f,
                    grad_norm: state.grad.norm(),
                    p_dev_frob: p.deviation_from_identity(),
                    skipped: state.last_skip,
                    elapsed_ms: t0.elapsed().as_secs_f64() * 1e3,
                });
                out.xs.push(state.x.clone());
                out.ps.push(p.entries().clone());
            }
            Err(e) => {
                out.status = RunStatus::Failed(e.to_string());
                break;
            }
        }
    }
    out.final_state = Some(state);
    out
}
