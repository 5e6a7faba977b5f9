//! Step-size strategies: the strategy interface, backtracking line search,
//! and hypergradient descent on the diagonal step matrix.

use crate::bfgs::{BfgsState, CwssMatrix};
use crate::error::{Error, Result};
use crate::numerics::DenseVector;
use crate::problems::ObjectiveProblem;
use crate::Scalar;

/// Produces the step matrix for the next BFGS update.
///
/// Implementations may carry mutable state across iterations of one run;
/// `begin_run` resets it. Output entries must be strictly positive and finite
/// (enforced by [`CwssMatrix`]).
pub trait StepStrategy<T: Scalar>: Send {
    fn name(&self) -> &str;

    /// Called once before a run; `run_seed` feeds any per-run random state.
    fn begin_run(&mut self, _n: usize, _run_seed: u64) {}

    fn step(
        &mut self,
        problem: &ObjectiveProblem<T>,
        state: &BfgsState<T>,
        d: &DenseVector<T>,
    ) -> Result<CwssMatrix<T>>;
}

/// Backtracking line-search parameters (Armijo sufficient decrease).
#[derive(Debug, Clone, Copy)]
pub struct LineSearchConfig<T: Scalar> {
    pub alpha0: T,
    pub shrink: T,
    pub c1: T,
    pub max_backtracks: usize,
}

impl<T: Scalar> Default for LineSearchConfig<T> {
    fn default() -> Self {
        Self {
            alpha0: T::one(),
            shrink: T::of(0.8),
            c1: T::of(1e-4),
            max_backtracks: 100,
        }
    }
}

impl<T: Scalar> LineSearchConfig<T> {
    pub fn validate(&self) -> Result<()> {
        let ok = self.alpha0 > T::zero()
            && self.shrink > T::zero()
            && self.shrink < T::one()
            && self.c1 > T::zero()
            && self.c1 < T::one()
            && self.max_backtracks >= 1;
        if ok {
            Ok(())
        } else {
            Err(Error::Config("line search needs 0 < shrink < 1, 0 < c1 < 1".into()))
        }
    }
}

/// Largest `alpha0 * shrink^j` satisfying
/// `f(x - alpha d) <= f(x) - c1 alpha grad^T d`, returned as `alpha * I`.
pub fn backtracking_line_search<T: Scalar>(
    problem: &ObjectiveProblem<T>,
    state: &BfgsState<T>,
    d: &DenseVector<T>,
    cfg: &LineSearchConfig<T>,
) -> Result<CwssMatrix<T>> {
    cfg.validate()?;
    let gd = state.grad.dot(d);
    // d = H grad with H SPD, so grad^T d > 0 away from stationary points.
    if gd <= T::zero() {
        return Err(Error::NotDescent(gd.as_f64()));
    }
    let mut alpha = cfg.alpha0;
    for _ in 0..cfg.max_backtracks {
        let trial = state.x.sub(&d.scale(alpha));
        let f_trial = problem.eval(&trial)?;
        if f_trial.is_finite() && f_trial <= state.f - cfg.c1 * alpha * gd {
            return CwssMatrix::uniform(d.len(), alpha);
        }
        alpha = alpha * cfg.shrink;
    }
    Err(Error::ArmijoExhausted(cfg.max_backtracks))
}

/// Hypergradient-descent parameters for the inner refinement of `P`.
#[derive(Debug, Clone, Copy)]
pub struct HgdConfig<T: Scalar> {
    pub eta: T,
    pub inner_steps: usize,
    pub clip_min: T,
}

impl<T: Scalar> Default for HgdConfig<T> {
    fn default() -> Self {
        Self {
            eta: T::of(1e-2),
            inner_steps: 20,
            clip_min: T::of(1e-8),
        }
    }
}

impl<T: Scalar> HgdConfig<T> {
    pub fn validate(&self) -> Result<()> {
        if self.eta > T::zero() && self.inner_steps >= 1 && self.clip_min > T::zero() {
            Ok(())
        } else {
            Err(Error::Config("hypergradient descent needs eta > 0, inner_steps >= 1".into()))
        }
    }
}

/// Diagonal of `d f(x - p (.) d) / d p`: entry `i` is
/// `-grad f(x - p (.) d)_i * d_i`, evaluated at the current `p`.
pub fn hypergradient<T: Scalar>(
    problem: &ObjectiveProblem<T>,
    x: &DenseVector<T>,
    d: &DenseVector<T>,
    p: &CwssMatrix<T>,
) -> Result<DenseVector<T>> {
    let trial = x.sub(&p.entries().hadamard(d));
    if !trial.all_finite() {
        return Err(Error::NonFinite("hypergradient trial point".into()));
    }
    let g_trial = problem.grad(&trial)?;
    if !g_trial.all_finite() {
        return Err(Error::NonFinite("gradient at hypergradient trial point".into()));
    }
    Ok(DenseVector::from_vec(
        g_trial
            .iter()
            .zip(d.iter())
            .map(|(g, di)| -(*g) * *di)
            .collect(),
    ))
}

/// Inner hypergradient descent: start from `P = I`, take `inner_steps`
/// updates `p <- p - eta * hypergradient`, clamping entries at `clip_min`.
pub fn hgd_strategy<T: Scalar>(
    problem: &ObjectiveProblem<T>,
    state: &BfgsState<T>,
    d: &DenseVector<T>,
    cfg: &HgdConfig<T>,
) -> Result<CwssMatrix<T>> {
    cfg.validate()?;
    let n = d.len();
    let mut p = CwssMatrix::identity(n);
    for _ in 0..cfg.inner_steps {
        let hg = hypergradient(problem, &state.x, d, &p)?;
        let next = DenseVector::from_vec(
            p.entries()
                .iter()
                .zip(hg.iter())
                .map(|(pi, gi)| (*pi - cfg.eta * *gi).max(cfg.clip_min))
                .collect(),
        );
        p = CwssMatrix::new(next)?;
    }
    Ok(p)
}

/// Strategy wrapper around [`backtracking_line_search`].
#[derive(Debug, Clone)]
pub struct LineSearch<T: Scalar> {
    cfg: LineSearchConfig<T>,
}

impl<T: Scalar> LineSearch<T> {
    pub fn new(cfg: LineSearchConfig<T>) -> Self {
        Self { cfg }
    }
}

impl<T: Scalar> Default for LineSearch<T> {
    fn default() -> Self {
        Self::new(LineSearchConfig::default())
    }
}

impl<T: Scalar> StepStrategy<T> for LineSearch<T> {
    fn name(&self) -> &str {
        "ls"
    }

    fn step(
        &mut self,
        problem: &ObjectiveProblem<T>,
        state: &BfgsState<T>,
        d: &DenseVector<T>,
    ) -> Result<CwssMatrix<T>> {
        backtracking_line_search(problem, state, d, &self.cfg)
    }
}

/// Strategy wrapper around [`hgd_strategy`].
#[derive(Debug, Clone)]
pub struct Hgd<T: Scalar> {
    cfg: HgdConfig<T>,
}

impl<T: Scalar> Hgd<T> {
    pub fn new(cfg: HgdConfig<T>) -> Self {
        Self { cfg }
    }
}

impl<T: Scalar> Default for Hgd<T> {
    fn default() -> Self {
        Self::new(HgdConfig::default())
    }
}

impl<T: Scalar> StepStrategy<T> for Hgd<T> {
    fn name(&self) -> &str {
        "hgd"
    }

    fn step(
        &mut self,
        problem: &ObjectiveProblem<T>,
        state: &BfgsState<T>,
        d: &DenseVector<T>,
    ) -> Result<CwssMatrix<T>> {
        hgd_strategy(problem, state, d, &self.cfg)
    }
}

/// Constant scalar step `alpha * I`.
#[derive(Debug, Clone)]
pub struct FixedStep<T: Scalar> {
    alpha: T,
    name: String,
}

impl<T: Scalar> FixedStep<T> {
    pub fn new(alpha: T) -> Self {
        Self {
            alpha,
            name: format!("fixed:{alpha}"),
        }
    }
}

impl<T: Scalar> StepStrategy<T> for FixedStep<T> {
    fn name(&self) -> &str {
        &self.name
    }

    fn step(
        &mut self,
        _problem: &ObjectiveProblem<T>,
        _state: &BfgsState<T>,
        d: &DenseVector<T>,
    ) -> Result<CwssMatrix<T>> {
        CwssMatrix::uniform(d.len(), self.alpha)
    }
}
