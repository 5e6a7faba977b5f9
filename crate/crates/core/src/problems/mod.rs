//! Generators and analytic oracles for the three classic objective families:
//! sparse least squares, ridge-regularized logistic regression, and
//! log-sum-exp recentered so the optimum sits at the origin.

mod serial;

pub use serial::{problem_from_json_str, problem_to_json_string};

use crate::error::{Error, Result};
use crate::numerics::{spectral_norm_lenient, DenseMatrix, DenseVector};
use crate::sampling;
use crate::Scalar;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProblemKind {
    LeastSquares,
    LogisticRegression,
    LogSumExp,
}

impl ProblemKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            ProblemKind::LeastSquares => "least_squares",
            ProblemKind::LogisticRegression => "logistic_regression",
            ProblemKind::LogSumExp => "log_sum_exp",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "least_squares" => Ok(ProblemKind::LeastSquares),
            "logistic_regression" => Ok(ProblemKind::LogisticRegression),
            "log_sum_exp" => Ok(ProblemKind::LogSumExp),
            other => Err(Error::Parse(format!("unknown problem kind {other:?}"))),
        }
    }
}

/// Family-specific parameters.
#[derive(Debug, Clone)]
pub enum Payload<T: Scalar> {
    /// `f(x) = 1/2 ||Ax - b||^2` with `A` m-by-n.
    LeastSquares {
        a: DenseMatrix<T>,
        b: DenseVector<T>,
    },
    /// Negative mean log-likelihood plus `rho ||x||^2`; rows of `a` are samples.
    Logistic {
        a: DenseMatrix<T>,
        labels: Vec<u8>,
        rho: T,
    },
    /// `f(x) = log sum_i exp(a_i^T x - b_i)` with `grad f(0) = 0` by construction.
    LogSumExp {
        a: DenseMatrix<T>,
        b: DenseVector<T>,
    },
}

/// A differentiable objective with its analytic metadata.
#[derive(Debug, Clone)]
pub struct ObjectiveProblem<T: Scalar> {
    n: usize,
    m: usize,
    seed: u64,
    payload: Payload<T>,
    lipschitz: T,
    known_optimum: Option<DenseVector<T>>,
    known_optimal_value: Option<T>,
}

impl<T: Scalar> ObjectiveProblem<T> {
    pub fn kind(&self) -> ProblemKind {
        match self.payload {
            Payload::LeastSquares { .. } => ProblemKind::LeastSquares,
            Payload::Logistic { .. } => ProblemKind::LogisticRegression,
            Payload::LogSumExp { .. } => ProblemKind::LogSumExp,
        }
    }

    /// Dimension of the optimization variable.
    pub fn dimension(&self) -> usize {
        self.n
    }

    /// Number of rows / terms in the data.
    pub fn terms(&self) -> usize {
        self.m
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn payload(&self) -> &Payload<T> {
        &self.payload
    }

    /// Analytic upper bound on the gradient Lipschitz constant.
    pub fn lipschitz(&self) -> T {
        self.lipschitz
    }

    pub fn known_optimum(&self) -> Option<&DenseVector<T>> {
        self.known_optimum.as_ref()
    }

    pub fn known_optimal_value(&self) -> Option<T> {
        self.known_optimal_value
    }

    fn check_dim(&self, x: &DenseVector<T>, op: &'static str) -> Result<()> {
        if x.len() != self.n {
            return Err(Error::DimMismatch {
                op,
                detail: format!("problem dimension {} vs input length {}", self.n, x.len()),
            });
        }
        Ok(())
    }

    pub fn eval(&self, x: &DenseVector<T>) -> Result<T> {
        self.check_dim(x, "eval")?;
        Ok(match &self.payload {
            Payload::LeastSquares { a, b } => {
                let r = a.matvec(x)?.sub(b);
                T::of(0.5) * r.dot(&r)
            }
            Payload::Logistic { a, labels, rho } => {
                let z = a.matvec(x)?;
                let mut acc = T::zero();
                for (zi, bi) in z.iter().zip(labels) {
                    acc = acc + softplus(*zi) - T::of(f64::from(*bi)) * *zi;
                }
                acc / T::of(self.m as f64) + *rho * x.dot(x)
            }
            Payload::LogSumExp { a, b } => {
                let z = a.matvec(x)?.sub(b);
                log_sum_exp(&z)
            }
        })
    }

    pub fn grad(&self, x: &DenseVector<T>) -> Result<DenseVector<T>> {
        self.check_dim(x, "grad")?;
        Ok(match &self.payload {
            Payload::LeastSquares { a, b } => {
                let r = a.matvec(x)?.sub(b);
                a.matvec_transpose(&r)?
            }
            Payload::Logistic { a, labels, rho } => {
                let z = a.matvec(x)?;
                let resid = DenseVector::from_vec(
                    z.iter()
                        .zip(labels)
                        .map(|(zi, bi)| sigmoid(*zi) - T::of(f64::from(*bi)))
                        .collect(),
                );
                let mut g = a.matvec_transpose(&resid)?.scale(T::one() / T::of(self.m as f64));
                g.axpy(T::of(2.0) * *rho, x);
                g
            }
            Payload::LogSumExp { a, b } => {
                let z = a.matvec(x)?.sub(b);
                let s = softmax(&z);
                a.matvec_transpose(&s)?
            }
        })
    }

    /// Sparse Gaussian least squares: `A` standard normal with exactly
    /// `ceil(0.9 m n)` entries zeroed, `b` standard normal.
    pub fn gen_least_squares(m: usize, n: usize, seed: u64) -> Result<Self> {
        if m == 0 || n == 0 {
            return Err(Error::Config("least squares needs m, n >= 1".into()));
        }
        let zero_count = (9 * m * n).div_ceil(10);
        if zero_count >= m * n {
            // Below m*n = 10 the 90% rule zeroes every entry.
            return Err(Error::Config(
                "least squares generator needs m*n >= 10 so sparsification leaves a nonzero entry"
                    .into(),
            ));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (a, b) = loop {
            let mut a = sampling::normal_matrix::<T, _>(m, n, &mut rng);
            sparsify(&mut a, zero_count, &mut rng);
            let b = sampling::normal_vector::<T, _>(m, &mut rng);
            if a.frobenius_norm() > T::zero() {
                break (a, b);
            }
            // All surviving entries zero is a measure-zero accident; redraw.
        };
        Self::least_squares_with_seed(a, b, seed)
    }

    /// Least squares from explicit parts (test fixtures skip sparsification).
    pub fn least_squares_from_parts(a: DenseMatrix<T>, b: DenseVector<T>) -> Result<Self> {
        Self::least_squares_with_seed(a, b, 0)
    }

    fn least_squares_with_seed(a: DenseMatrix<T>, b: DenseVector<T>, seed: u64) -> Result<Self> {
        let (m, n) = (a.rows(), a.cols());
        if b.len() != m {
            return Err(Error::DimMismatch {
                op: "least_squares",
                detail: format!("A is {m}x{n} but b has length {}", b.len()),
            });
        }
        if !a.all_finite() || !b.all_finite() {
            return Err(Error::NonFinite("least squares payload".into()));
        }
        let lipschitz = spectral_norm_lenient(&a.gram());
        let x_star = least_norm_solution(&a, &b)?;
        let mut p = Self {
            n,
            m,
            seed,
            payload: Payload::LeastSquares { a, b },
            lipschitz,
            known_optimum: None,
            known_optimal_value: None,
        };
        p.known_optimal_value = Some(p.eval(&x_star)?);
        p.known_optimum = Some(x_star);
        Ok(p)
    }

    /// Binary logistic regression with Gaussian features and labels from a
    /// random ground-truth hyperplane thresholded at sigmoid 1/2.
    pub fn gen_logistic(m: usize, n: usize, rho: T, seed: u64) -> Result<Self> {
        if m == 0 || n == 0 {
            return Err(Error::Config("logistic regression needs m, n >= 1".into()));
        }
        if rho <= T::zero() {
            return Err(Error::Config("logistic ridge rho must be positive".into()));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = sampling::normal_matrix::<T, _>(m, n, &mut rng);
        let w_true = sampling::normal_vector::<T, _>(n, &mut rng);
        let z = a.matvec(&w_true)?;
        let labels: Vec<u8> = z.iter().map(|zi| u8::from(*zi >= T::zero())).collect();
        let lipschitz =
            spectral_norm_lenient(&a.gram()) / T::of(4.0 * m as f64) + T::of(2.0) * rho;
        Ok(Self {
            n,
            m,
            seed,
            payload: Payload::Logistic { a, labels, rho },
            lipschitz,
            known_optimum: None,
            known_optimal_value: None,
        })
    }

    /// Log-sum-exp with uniform raw directions recentered so the gradient at
    /// the origin vanishes; the known optimum is therefore `0`.
    pub fn gen_logsumexp(m: usize, d: usize, seed: u64) -> Result<Self> {
        if m == 0 || d == 0 {
            return Err(Error::Config("log-sum-exp needs m, d >= 1".into()));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut a = DenseMatrix::zeros(m, d);
        for i in 0..m {
            for j in 0..d {
                a.set(i, j, T::of(rng.gen::<f64>()));
            }
        }
        let b = sampling::normal_vector::<T, _>(m, &mut rng);
        // grad f_hat(0) = A^T softmax(-b); subtracting it from every row
        // recenters the optimum onto the origin.
        let weights = softmax(&b.scale(-T::one()));
        let g0 = a.matvec_transpose(&weights)?;
        for i in 0..m {
            for j in 0..d {
                a.set(i, j, a.get(i, j) - g0[j]);
            }
        }
        let lipschitz = spectral_norm_lenient(&a.gram());
        let mut p = Self {
            n: d,
            m,
            seed,
            payload: Payload::LogSumExp { a, b },
            lipschitz,
            known_optimum: None,
            known_optimal_value: None,
        };
        p.known_optimal_value = Some(p.eval(&DenseVector::zeros(d))?);
        p.known_optimum = Some(DenseVector::zeros(d));
        Ok(p)
    }

    pub(crate) fn from_raw_parts(
        n: usize,
        m: usize,
        seed: u64,
        payload: Payload<T>,
        lipschitz: T,
        known_optimum: Option<DenseVector<T>>,
        known_optimal_value: Option<T>,
    ) -> Self {
        Self {
            n,
            m,
            seed,
            payload,
            lipschitz,
            known_optimum,
            known_optimal_value,
        }
    }
}

/// Zero `count` entries chosen uniformly without replacement.
fn sparsify<T: Scalar, R: Rng>(a: &mut DenseMatrix<T>, count: usize, rng: &mut R) {
    let total = a.rows() * a.cols();
    let mut idx: Vec<usize> = (0..total).collect();
    for i in 0..count {
        let j = rng.gen_range(i..total);
        idx.swap(i, j);
    }
    let cols = a.cols();
    for &k in &idx[..count] {
        a.set(k / cols, k % cols, T::zero());
    }
}

/// `log(1 + e^z)` without overflow.
fn softplus<T: Scalar>(z: T) -> T {
    z.max(T::zero()) + (-z.abs()).exp().ln_1p()
}

fn sigmoid<T: Scalar>(z: T) -> T {
    if z >= T::zero() {
        T::one() / (T::one() + (-z).exp())
    } else {
        let e = z.exp();
        e / (T::one() + e)
    }
}

/// Max-shifted `log sum exp(z_i)`.
fn log_sum_exp<T: Scalar>(z: &DenseVector<T>) -> T {
    let m = z.max_entry();
    let sum: T = z.iter().map(|zi| (*zi - m).exp()).sum();
    m + sum.ln()
}

/// Max-shifted softmax weights.
fn softmax<T: Scalar>(z: &DenseVector<T>) -> DenseVector<T> {
    let m = z.max_entry();
    let exps: Vec<T> = z.iter().map(|zi| (*zi - m).exp()).collect();
    let total: T = exps.iter().copied().sum();
    DenseVector::from_vec(exps.into_iter().map(|e| e / total).collect())
}

/// Least-norm solution of the normal equations via conjugate gradients on
/// `A^T A x = A^T b` started from zero (iterates stay in `range(A^T)`).
fn least_norm_solution<T: Scalar>(a: &DenseMatrix<T>, b: &DenseVector<T>) -> Result<DenseVector<T>> {
    let n = a.cols();
    let atb = a.matvec_transpose(b)?;
    let target = T::of(1e-12) * atb.norm().max(T::one());
    let mut x = DenseVector::zeros(n);
    if atb.norm() == T::zero() {
        return Ok(x);
    }
    let mut r = atb.clone();
    let mut p = r.clone();
    let mut rs = r.dot(&r);
    let max_iter = 40 * n.max(8);
    for it in 0..max_iter {
        if rs.sqrt() <= target {
            break;
        }
        let ap = a.matvec_transpose(&a.matvec(&p)?)?;
        let pap = p.dot(&ap);
        if pap <= T::zero() {
            break;
        }
        let alpha = rs / pap;
        x.axpy(alpha, &p);
        r.axpy(-alpha, &ap);
        // Periodic true-residual refresh against drift.
        if it % (2 * n.max(4)) == 0 && it > 0 {
            r = atb.sub(&a.matvec_transpose(&a.matvec(&x)?)?);
        }
        let rs_new = r.dot(&r);
        p = r.add(&p.scale(rs_new / rs));
        rs = rs_new;
    }
    Ok(x)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn least_squares_fixture_exact_solve() {
        // A = I2, b = (1, 2): optimum (1, 2), zero objective and gradient.
        let a = DenseMatrix::identity(2);
        let b = DenseVector::from_vec(vec![1.0, 2.0]);
        let p = ObjectiveProblem::<f64>::least_squares_from_parts(a, b).unwrap();
        let xs = DenseVector::from_vec(vec![1.0, 2.0]);
        assert!(p.eval(&xs).unwrap().abs() < 1e-24);
        assert!(p.grad(&xs).unwrap().norm() < 1e-12);
        let opt = p.known_optimum().unwrap();
        assert!(opt.dist(&xs) < 1e-10);
    }

    #[test]
    fn least_squares_eval_grad_identity_case() {
        let a = DenseMatrix::identity(2);
        let b = DenseVector::zeros(2);
        let p = ObjectiveProblem::<f64>::least_squares_from_parts(a, b).unwrap();
        let x = DenseVector::from_vec(vec![3.0, 4.0]);
        assert_eq!(p.eval(&x).unwrap(), 12.5);
        assert_eq!(p.grad(&x).unwrap().as_slice(), &[3.0, 4.0]);
    }

    #[test]
    fn least_squares_zero_count_matches_ceiling() {
        for (m, n, seed) in [(5, 2, 1u64), (7, 3, 2), (60, 120, 3)] {
            let p = ObjectiveProblem::<f64>::gen_least_squares(m, n, seed).unwrap();
            let Payload::LeastSquares { a, .. } = p.payload() else {
                unreachable!()
            };
            let zeros = a.as_slice().iter().filter(|v| **v == 0.0).count();
            assert_eq!(zeros, (9 * m * n).div_ceil(10), "m={m} n={n}");
        }
    }

    #[test]
    fn least_squares_rejects_degenerate_sizes() {
        assert!(ObjectiveProblem::<f64>::gen_least_squares(2, 2, 0).is_err());
        assert!(ObjectiveProblem::<f64>::gen_least_squares(0, 5, 0).is_err());
    }

    #[test]
    fn logistic_at_origin_is_log_two() {
        let p = ObjectiveProblem::<f64>::gen_logistic(40, 10, 1e-2, 11).unwrap();
        let f0 = p.eval(&DenseVector::zeros(10)).unwrap();
        assert!((f0 - std::f64::consts::LN_2).abs() < 1e-15, "{f0}");
    }

    #[test]
    fn logistic_rejects_nonpositive_rho() {
        assert!(ObjectiveProblem::<f64>::gen_logistic(4, 2, 0.0, 0).is_err());
    }

    #[test]
    fn logsumexp_gradient_vanishes_at_origin() {
        for seed in 0..8 {
            let p = ObjectiveProblem::<f64>::gen_logsumexp(50, 12, seed).unwrap();
            let g0 = p.grad(&DenseVector::zeros(12)).unwrap();
            assert!(g0.norm() < 1e-10, "seed {seed}: {}", g0.norm());
        }
    }

    #[test]
    fn logsumexp_single_term_is_constant() {
        // With m = 1 the softmax weight is 1, so recentring zeroes the row.
        let p = ObjectiveProblem::<f64>::gen_logsumexp(1, 4, 9).unwrap();
        let x = DenseVector::from_vec(vec![5.0, -3.0, 2.0, 0.5]);
        let f0 = p.eval(&DenseVector::zeros(4)).unwrap();
        assert!((p.eval(&x).unwrap() - f0).abs() < 1e-12);
        assert!(p.grad(&x).unwrap().norm() < 1e-12);
    }

    #[test]
    fn logsumexp_saturated_term_dominates() {
        // One exponent dominating by ~50 drives softmax onto that row.
        let a = DenseMatrix::from_vec(2, 2, vec![1.0f64, 0.0, 0.0, 1.0]).unwrap();
        let b = DenseVector::from_vec(vec![0.0, 50.0]);
        let p = ObjectiveProblem::from_raw_parts(
            2,
            2,
            0,
            Payload::LogSumExp { a, b },
            1.0,
            None,
            None,
        );
        let x = DenseVector::from_vec(vec![10.0, 0.0]);
        // z = (10, -50): first term dominates.
        let f = p.eval(&x).unwrap();
        assert!((f - 10.0).abs() < 1e-12, "{f}");
        let g = p.grad(&x).unwrap();
        assert!((g[0] - 1.0).abs() < 1e-12);
        assert!(g[1].abs() < 1e-12);
        // No overflow far out either.
        let far = DenseVector::from_vec(vec![100.0, -100.0]);
        assert!(p.eval(&far).unwrap().is_finite());
    }

    #[test]
    fn eval_rejects_dimension_mismatch() {
        let p = ObjectiveProblem::<f64>::gen_logsumexp(5, 3, 0).unwrap();
        let x = DenseVector::zeros(4);
        assert!(p.eval(&x).is_err());
        assert!(p.grad(&x).is_err());
    }
}
