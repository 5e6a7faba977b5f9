//! Executable form of the sufficient conditions for coordinate-wise step
//! sizes: per-step condition checkers, trajectory monitors, and the
//! coordinate-wise gain certificate built from one exact hypergradient step.

use crate::bfgs::{BfgsState, CwssMatrix, StepObserver};
use crate::error::{Error, Result};
use crate::numerics::{spectral_norm_lenient, DenseMatrix, DenseVector};
use crate::problems::ObjectiveProblem;
use crate::Scalar;

/// Constants for the gradient-convergence condition: `||P||_2 <= alpha /
/// (L ||H||_2)` and `||P^-1||_2 <= ||H g||^2 / (beta g^T H g)`.
#[derive(Debug, Clone, Copy)]
pub struct Theorem1Params<T: Scalar> {
    pub alpha: T,
    pub beta: T,
    pub lipschitz: T,
}

impl<T: Scalar> Theorem1Params<T> {
    pub fn new(alpha: T, beta: T, lipschitz: T) -> Result<Self> {
        if alpha <= T::zero() || alpha >= T::of(2.0) || beta <= T::zero() || lipschitz <= T::zero()
        {
            return Err(Error::Config(
                "theorem-1 params need 0 < alpha < 2, beta > 0, L > 0".into(),
            ));
        }
        Ok(Self {
            alpha,
            beta,
            lipschitz,
        })
    }
}

/// Per-step monitor output appended to traces in `--monitor` mode.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConditionReport<T: Scalar> {
    pub theorem1_upper_ok: bool,
    pub theorem1_lower_ok: bool,
    pub theorem2_ok: bool,
    pub p_dev_frob: T,
    /// `1 / ||H||_2`, the smallest eigenvalue of the Hessian approximation
    /// `B = H^{-1}` (exact for the test quadratics, an estimate elsewhere).
    pub gamma_est: T,
}

/// Check the two spectral bounds of the gradient-convergence condition for a
/// diagonal step matrix: `||P||_2 = max p_i`, `||P^-1||_2 = 1 / min p_i`.
pub fn check_theorem1<T: Scalar>(
    p: &DenseVector<T>,
    h_inv: &DenseMatrix<T>,
    grad: &DenseVector<T>,
    params: &Theorem1Params<T>,
) -> Result<(bool, bool)> {
    if grad.norm() == T::zero() {
        return Err(Error::Config(
            "theorem-1 condition is undefined at a stationary point".into(),
        ));
    }
    let h_norm = spectral_norm_lenient(h_inv);
    let upper = p.max_entry() <= params.alpha / (params.lipschitz * h_norm);
    let hg = h_inv.matvec(grad)?;
    let denom = params.beta * grad.dot(&hg);
    let lower = denom > T::zero() && T::one() / p.min_entry() <= hg.dot(&hg) / denom;
    Ok((upper, lower))
}

/// True iff every entry satisfies `0 < p_i <= 2 gamma / L`.
pub fn check_theorem2<T: Scalar>(p: &DenseVector<T>, gamma: T, lipschitz: T) -> bool {
    debug_assert!(gamma > T::zero() && lipschitz > T::zero());
    let bound = T::of(2.0) * gamma / lipschitz;
    p.iter().all(|v| *v > T::zero() && *v <= bound)
}

/// Per-step booleans: distance to the minimizer non-increasing within a
/// `1e-9` absolute slack.
pub fn monitor_theorem2_contraction<T: Scalar>(
    xs: &[DenseVector<T>],
    x_star: &DenseVector<T>,
) -> Vec<bool> {
    let slack = T::of(1e-9);
    xs.windows(2)
        .map(|w| w[1].dist(x_star) <= w[0].dist(x_star) + slack)
        .collect()
}

/// Deviation sequence `||P_k - I||_F` plus a trend flag: mean deviation over
/// the final quartile no larger than over the first quartile.
pub fn monitor_theorem3<T: Scalar>(ps: &[DenseVector<T>]) -> (Vec<T>, bool) {
    let devs: Vec<T> = ps
        .iter()
        .map(|p| {
            p.iter()
                .map(|v| (*v - T::one()) * (*v - T::one()))
                .sum::<T>()
                .sqrt()
        })
        .collect();
    if devs.is_empty() {
        return (devs, true);
    }
    let q = (devs.len() / 4).max(1);
    let mean = |s: &[T]| s.iter().copied().sum::<T>() / T::of(s.len() as f64);
    let first = mean(&devs[..q]);
    let last = mean(&devs[devs.len() - q..]);
    let flag = last <= first;
    (devs, flag)
}

/// Coordinate-wise step built from the trial gradient at the scalar optimum.
#[derive(Debug, Clone)]
pub struct GainMatrix<T: Scalar> {
    /// Diagonal entries; may be non-positive for pathological inputs, which
    /// is why this is not a [`CwssMatrix`]. An analysis device, not a
    /// runtime strategy.
    pub entries: DenseVector<T>,
    /// All entries strictly positive and finite.
    pub valid: bool,
}

/// One exact hypergradient-descent step away from the scalar optimum.
///
/// For `g(p) = f(x - p (.) d)` the gradient at `p = alpha* 1` has entries
/// `-grad_trial_i * d_i`, and `g` is `(L R^2)`-smooth whenever `||d|| <= R`.
/// Stepping with size `1/(L R^2)` therefore gives entries
/// `alpha* + grad_trial_i * d_i / (L R^2)` and guarantees a decrease of at
/// least `||grad_trial (.) d||^2 / (2 L R^2)` below the scalar-step value.
pub fn cwss_gain_matrix<T: Scalar>(
    alpha_star: T,
    grad_trial: &DenseVector<T>,
    d: &DenseVector<T>,
    lipschitz: T,
    radius: T,
) -> GainMatrix<T> {
    debug_assert_eq!(grad_trial.len(), d.len());
    let scale = T::one() / (lipschitz * radius * radius);
    let entries = DenseVector::from_vec(
        grad_trial
            .iter()
            .zip(d.iter())
            .map(|(g, di)| alpha_star + *g * *di * scale)
            .collect(),
    );
    let valid = entries.all_finite() && entries.iter().all(|v| *v > T::zero());
    GainMatrix { entries, valid }
}

/// Exact scalar minimizer of `alpha -> f(x - alpha d)` by bisection on the
/// directional derivative, bracket grown geometrically from `[0, 1]`.
pub fn scalar_minimizer_along<T: Scalar>(
    problem: &ObjectiveProblem<T>,
    x: &DenseVector<T>,
    d: &DenseVector<T>,
) -> Result<T> {
    if d.norm() == T::zero() {
        return Err(Error::LineMinimization("zero direction".into()));
    }
    let phi_prime = |alpha: T| -> Result<T> {
        let g = problem.grad(&x.sub(&d.scale(alpha)))?;
        if !g.all_finite() {
            return Err(Error::NonFinite("gradient during line minimization".into()));
        }
        Ok(-g.dot(d))
    };
    let d0 = phi_prime(T::zero())?;
    if d0 >= T::zero() {
        // Already a directional minimum (or d is not a descent direction).
        return Ok(T::zero());
    }
    let mut lo = T::zero();
    let mut hi = T::one();
    let cap = T::of(1e18);
    while phi_prime(hi)? < T::zero() {
        lo = hi;
        hi = hi * T::of(2.0);
        if hi > cap {
            return Err(Error::LineMinimization(
                "directional derivative never changes sign".into(),
            ));
        }
    }
    let tol = T::of(1e-12);
    while hi - lo > tol * hi.max(T::one()) {
        let mid = (lo + hi) * T::of(0.5);
        if phi_prime(mid)? < T::zero() {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok((lo + hi) * T::of(0.5))
}

/// Both sides of the gain certificate at one state.
#[derive(Debug, Clone, Copy)]
pub struct GainCheck<T: Scalar> {
    pub lhs: T,
    pub rhs: T,
    pub ok: bool,
}

/// Evaluate the gain certificate: the coordinate-wise step from
/// [`cwss_gain_matrix`] must land at least `||grad_trial (.) d||^2 /
/// (2 L R^2)` below the exact scalar step.
pub fn verify_gain_inequality<T: Scalar>(
    problem: &ObjectiveProblem<T>,
    x: &DenseVector<T>,
    h_inv: &DenseMatrix<T>,
    lipschitz: T,
    radius: T,
) -> Result<GainCheck<T>> {
    let grad = problem.grad(x)?;
    let d = h_inv.matvec(&grad)?;
    if radius < d.norm() {
        return Err(Error::Config(format!(
            "radius {radius:e} below the direction norm {:e}",
            d.norm()
        )));
    }
    let alpha_star = scalar_minimizer_along(problem, x, &d)?;
    let trial = x.sub(&d.scale(alpha_star));
    let grad_trial = problem.grad(&trial)?;
    let gain_vec = grad_trial.hadamard(&d);
    let gm = cwss_gain_matrix(alpha_star, &grad_trial, &d, lipschitz, radius);
    let lhs = problem.eval(&x.sub(&gm.entries.hadamard(&d)))?;
    let rhs = problem.eval(&trial)?
        - gain_vec.dot(&gain_vec) / (T::of(2.0) * lipschitz * radius * radius);
    Ok(GainCheck {
        lhs,
        rhs,
        ok: lhs <= rhs + T::of(1e-9),
    })
}

/// Step observer that evaluates the condition checkers at every iteration.
pub struct TrajectoryMonitor<T: Scalar> {
    params: Theorem1Params<T>,
    pub reports: Vec<ConditionReport<T>>,
}

impl<T: Scalar> TrajectoryMonitor<T> {
    pub fn new(params: Theorem1Params<T>) -> Self {
        Self {
            params,
            reports: Vec::new(),
        }
    }
}

impl<T: Scalar> StepObserver<T> for TrajectoryMonitor<T> {
    fn observe(&mut self, state: &BfgsState<T>, p: &CwssMatrix<T>, _d: &DenseVector<T>) {
        let gamma_est = {
            let h_norm = spectral_norm_lenient(&state.h_inv);
            if h_norm > T::zero() {
                T::one() / h_norm
            } else {
                T::zero()
            }
        };
        let (upper, lower) = check_theorem1(p.entries(), &state.h_inv, &state.grad, &self.params)
            .unwrap_or((false, false));
        self.reports.push(ConditionReport {
            theorem1_upper_ok: upper,
            theorem1_lower_ok: lower,
            theorem2_ok: check_theorem2(p.entries(), gamma_est, self.params.lipschitz),
            p_dev_frob: p.deviation_from_identity(),
            gamma_est,
        });
    }
}
