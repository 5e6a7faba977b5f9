//! Minimal dense linear algebra shared by every module.
//!
//! Storage is dense and row-major throughout; the problem sizes this crate
//! targets never justify sparse formats or factorization libraries.

use crate::error::{Error, Result};
use crate::Scalar;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand::SeedableRng;
use serde::{Deserialize, Serialize};

/// Fixed-length vector of scalars.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DenseVector<T: Scalar> {
    data: Vec<T>,
}

impl<T: Scalar> DenseVector<T> {
    pub fn from_vec(data: Vec<T>) -> Self {
        Self { data }
    }

    pub fn zeros(n: usize) -> Self {
        Self {
            data: vec![T::zero(); n],
        }
    }

    pub fn constant(n: usize, v: T) -> Self {
        Self { data: vec![v; n] }
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn as_slice(&self) -> &[T] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [T] {
        &mut self.data
    }

    pub fn iter(&self) -> std::slice::Iter<'_, T> {
        self.data.iter()
    }

    pub fn dot(&self, other: &Self) -> T {
        debug_assert_eq!(self.len(), other.len());
        self.data
            .iter()
            .zip(other.data.iter())
            .map(|(a, b)| *a * *b)
            .sum()
    }

    pub fn norm(&self) -> T {
        self.dot(self).sqrt()
    }

    pub fn add(&self, other: &Self) -> Self {
        debug_assert_eq!(self.len(), other.len());
        Self::from_vec(
            self.data
                .iter()
                .zip(other.data.iter())
                .map(|(a, b)| *a + *b)
                .collect(),
        )
    }

    pub fn sub(&self, other: &Self) -> Self {
        debug_assert_eq!(self.len(), other.len());
        Self::from_vec(
            self.data
                .iter()
                .zip(other.data.iter())
                .map(|(a, b)| *a - *b)
                .collect(),
        )
    }

    pub fn scale(&self, s: T) -> Self {
        Self::from_vec(self.data.iter().map(|a| *a * s).collect())
    }

    /// Elementwise product.
    pub fn hadamard(&self, other: &Self) -> Self {
        debug_assert_eq!(self.len(), other.len());
        Self::from_vec(
            self.data
                .iter()
                .zip(other.data.iter())
                .map(|(a, b)| *a * *b)
                .collect(),
        )
    }

    /// `self += a * x`.
    pub fn axpy(&mut self, a: T, x: &Self) {
        debug_assert_eq!(self.len(), x.len());
        for (s, xi) in self.data.iter_mut().zip(x.data.iter()) {
            *s = *s + a * *xi;
        }
    }

    pub fn max_abs(&self) -> T {
        self.data
            .iter()
            .fold(T::zero(), |acc, v| acc.max(v.abs()))
    }

    pub fn min_entry(&self) -> T {
        self.data
            .iter()
            .fold(T::infinity(), |acc, v| acc.min(*v))
    }

    pub fn max_entry(&self) -> T {
        self.data
            .iter()
            .fold(T::neg_infinity(), |acc, v| acc.max(*v))
    }

    pub fn all_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    pub fn dist(&self, other: &Self) -> T {
        self.sub(other).norm()
    }
}

impl<T: Scalar> std::ops::Index<usize> for DenseVector<T> {
    type Output = T;
    fn index(&self, i: usize) -> &T {
        &self.data[i]
    }
}

impl<T: Scalar> std::ops::IndexMut<usize> for DenseVector<T> {
    fn index_mut(&mut self, i: usize) -> &mut T {
        &mut self.data[i]
    }
}

/// Row-major dense matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DenseMatrix<T: Scalar> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

impl<T: Scalar> DenseMatrix<T> {
    pub fn from_vec(rows: usize, cols: usize, data: Vec<T>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::DimMismatch {
                op: "DenseMatrix::from_vec",
                detail: format!("{} entries for a {rows}x{cols} matrix", data.len()),
            });
        }
        Ok(Self { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![T::zero(); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = T::one();
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> T {
        self.data[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: T) {
        self.data[i * self.cols + j] = v;
    }

    pub fn row(&self, i: usize) -> &[T] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn as_slice(&self) -> &[T] {
        &self.data
    }

    pub fn matvec(&self, v: &DenseVector<T>) -> Result<DenseVector<T>> {
        if self.cols != v.len() {
            return Err(Error::DimMismatch {
                op: "matvec",
                detail: format!("{}x{} matrix with length-{} vector", self.rows, self.cols, v.len()),
            });
        }
        let mut out = Vec::with_capacity(self.rows);
        for i in 0..self.rows {
            let mut acc = T::zero();
            for (a, x) in self.row(i).iter().zip(v.as_slice()) {
                acc = acc + *a * *x;
            }
            out.push(acc);
        }
        Ok(DenseVector::from_vec(out))
    }

    /// `A^T v` without materializing the transpose.
    pub fn matvec_transpose(&self, v: &DenseVector<T>) -> Result<DenseVector<T>> {
        if self.rows != v.len() {
            return Err(Error::DimMismatch {
                op: "matvec_transpose",
                detail: format!("{}x{} matrix with length-{} vector", self.rows, self.cols, v.len()),
            });
        }
        let mut out = vec![T::zero(); self.cols];
        for i in 0..self.rows {
            let vi = v[i];
            for (o, a) in out.iter_mut().zip(self.row(i)) {
                *o = *o + *a * vi;
            }
        }
        Ok(DenseVector::from_vec(out))
    }

    /// Gram matrix `A^T A`.
    pub fn gram(&self) -> DenseMatrix<T> {
        let n = self.cols;
        let mut g = Self::zeros(n, n);
        for r in 0..self.rows {
            let row = self.row(r);
            for j in 0..n {
                let aj = row[j];
                if aj == T::zero() {
                    continue;
                }
                for k in j..n {
                    let v = g.data[j * n + k] + aj * row[k];
                    g.data[j * n + k] = v;
                }
            }
        }
        for j in 0..n {
            for k in 0..j {
                g.data[j * n + k] = g.data[k * n + j];
            }
        }
        g
    }

    /// Replace the matrix with `(M + M^T)/2`.
    pub fn symmetrize(&mut self) {
        assert_eq!(self.rows, self.cols, "symmetrize needs a square matrix");
        let n = self.rows;
        let half = T::of(0.5);
        for i in 0..n {
            for j in (i + 1)..n {
                let v = (self.data[i * n + j] + self.data[j * n + i]) * half;
                self.data[i * n + j] = v;
                self.data[j * n + i] = v;
            }
        }
    }

    /// `self += c * u v^T`.
    pub fn add_scaled_outer(&mut self, c: T, u: &DenseVector<T>, v: &DenseVector<T>) {
        debug_assert_eq!(self.rows, u.len());
        debug_assert_eq!(self.cols, v.len());
        for i in 0..self.rows {
            let cu = c * u[i];
            let row = &mut self.data[i * self.cols..(i + 1) * self.cols];
            for (r, vj) in row.iter_mut().zip(v.as_slice()) {
                *r = *r + cu * *vj;
            }
        }
    }

    pub fn frobenius_norm(&self) -> T {
        self.data
            .iter()
            .map(|v| *v * *v)
            .sum::<T>()
            .sqrt()
    }

    pub fn all_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }
}

/// Spectral norm (largest singular value) of a square, nominally symmetric
/// matrix via power iteration on `S^T S` with `S = (M + M^T)/2`.
///
/// Converges to relative accuracy `tol`; restarts once from a fresh random
/// vector if the iteration stalls, and reports the best estimate on failure.
pub fn spectral_norm<T: Scalar>(m: &DenseMatrix<T>, tol: T, max_iter: usize) -> Result<T> {
    if m.rows() != m.cols() {
        return Err(Error::DimMismatch {
            op: "spectral_norm",
            detail: format!("{}x{} is not square", m.rows(), m.cols()),
        });
    }
    let n = m.rows();
    if n == 0 {
        return Ok(T::zero());
    }
    let mut s = m.clone();
    s.symmetrize();
    if s.frobenius_norm() == T::zero() {
        return Ok(T::zero());
    }

    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_5eed);
    let mut best = T::zero();
    for restart in 0..2 {
        let mut v = DenseVector::from_vec(
            (0..n)
                .map(|_| T::of(rng.gen::<f64>() * 2.0 - 1.0))
                .collect(),
        );
        let nv = v.norm();
        if nv == T::zero() {
            continue;
        }
        v = v.scale(T::one() / nv);

        let mut prev_sigma = T::zero();
        let budget = max_iter / 2 + (restart == 1) as usize * (max_iter % 2);
        for it in 0..budget {
            // One application of S^T S = S . S for symmetric S.
            let w = s.matvec(&s.matvec(&v)?)?;
            let mu = v.dot(&w); // Rayleigh quotient for S^2
            let sigma = mu.max(T::zero()).sqrt();
            best = best.max(sigma);
            let wn = w.norm();
            if wn == T::zero() {
                // v lies in the kernel; retry from a new start vector.
                break;
            }
            v = w.scale(T::one() / wn);
            if it > 0 {
                let denom = sigma.max(T::of(f64::MIN_POSITIVE));
                if (sigma - prev_sigma).abs() <= tol * denom {
                    return Ok(sigma);
                }
            }
            prev_sigma = sigma;
        }
    }
    Err(Error::PowerIteration {
        iters: max_iter,
        estimate: best.as_f64(),
    })
}

pub const SPECTRAL_TOL: f64 = 1e-10;
pub const SPECTRAL_MAX_ITER: usize = 10_000;

/// [`spectral_norm`] with the default tolerance and iteration budget.
pub fn spectral_norm_default<T: Scalar>(m: &DenseMatrix<T>) -> Result<T> {
    spectral_norm(m, T::of(SPECTRAL_TOL), SPECTRAL_MAX_ITER)
}

/// Best-effort spectral norm: falls back to the stalled estimate.
pub fn spectral_norm_lenient<T: Scalar>(m: &DenseMatrix<T>) -> T {
    match spectral_norm(m, T::of(SPECTRAL_TOL), SPECTRAL_MAX_ITER) {
        Ok(v) => v,
        Err(Error::PowerIteration { estimate, .. }) => T::of(estimate),
        Err(_) => T::zero(),
    }
}

/// Central-difference gradient `(f(x + h e_i) - f(x - h e_i)) / 2h`.
pub fn finite_diff_grad<T, F>(f: F, x: &DenseVector<T>, h: T) -> Result<DenseVector<T>>
where
    T: Scalar,
    F: Fn(&DenseVector<T>) -> T,
{
    if h <= T::zero() {
        return Err(Error::Config("finite difference step must be positive".into()));
    }
    let mut g = Vec::with_capacity(x.len());
    let mut probe = x.clone();
    for i in 0..x.len() {
        let xi = x[i];
        probe[i] = xi + h;
        let fp = f(&probe);
        probe[i] = xi - h;
        let fm = f(&probe);
        probe[i] = xi;
        if !fp.is_finite() || !fm.is_finite() {
            return Err(Error::NonFinite(format!(
                "objective at finite-difference probe of coordinate {i}"
            )));
        }
        g.push((fp - fm) / (T::of(2.0) * h));
    }
    Ok(DenseVector::from_vec(g))
}

/// Lower-triangular Cholesky factor of an SPD matrix, or `None` if the
/// matrix is not numerically positive definite.
pub fn cholesky<T: Scalar>(m: &DenseMatrix<T>) -> Option<DenseMatrix<T>> {
    if m.rows() != m.cols() {
        return None;
    }
    let n = m.rows();
    let mut l = DenseMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..=i {
            let mut sum = m.get(i, j);
            for k in 0..j {
                sum = sum - l.get(i, k) * l.get(j, k);
            }
            if i == j {
                if sum <= T::zero() || !sum.is_finite() {
                    return None;
                }
                l.set(i, j, sum.sqrt());
            } else {
                l.set(i, j, sum / l.get(j, j));
            }
        }
    }
    Some(l)
}

/// True when the Cholesky probe of `m` succeeds.
pub fn cholesky_probe<T: Scalar>(m: &DenseMatrix<T>) -> bool {
    cholesky(m).is_some()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mat(rows: usize, cols: usize, v: &[f64]) -> DenseMatrix<f64> {
        DenseMatrix::from_vec(rows, cols, v.to_vec()).unwrap()
    }

    #[test]
    fn matvec_identity_is_identity() {
        let i3 = DenseMatrix::<f64>::identity(3);
        let v = DenseVector::from_vec(vec![1.0, 2.0, 3.0]);
        assert_eq!(i3.matvec(&v).unwrap().as_slice(), v.as_slice());
    }

    #[test]
    fn matvec_two_by_two() {
        let m = mat(2, 2, &[1.0, 2.0, 3.0, 4.0]);
        let v = DenseVector::from_vec(vec![1.0, 1.0]);
        assert_eq!(m.matvec(&v).unwrap().as_slice(), &[3.0, 7.0]);
    }

    #[test]
    fn matvec_rejects_dimension_mismatch() {
        let m = mat(2, 2, &[1.0, 2.0, 3.0, 4.0]);
        let v = DenseVector::from_vec(vec![1.0, 1.0, 1.0]);
        assert!(m.matvec(&v).is_err());
    }

    #[test]
    fn spectral_norm_of_diagonal() {
        let m = mat(3, 3, &[1.0, 0.0, 0.0, 0.0, 3.0, 0.0, 0.0, 0.0, -5.0]);
        let s = spectral_norm_default(&m).unwrap();
        assert!((s - 5.0).abs() < 1e-9, "{s}");
    }

    #[test]
    fn spectral_norm_of_identity() {
        let s = spectral_norm_default(&DenseMatrix::<f64>::identity(7)).unwrap();
        assert!((s - 1.0).abs() < 1e-10, "{s}");
    }

    #[test]
    fn spectral_norm_of_zero_matrix() {
        let s = spectral_norm_default(&DenseMatrix::<f64>::zeros(4, 4)).unwrap();
        assert_eq!(s, 0.0);
    }

    #[test]
    fn finite_diff_on_quadratic() {
        let f = |x: &DenseVector<f64>| 0.5 * x.dot(x);
        let x = DenseVector::from_vec(vec![2.0, -1.0]);
        let g = finite_diff_grad(f, &x, 1e-6).unwrap();
        assert!((g[0] - 2.0).abs() < 1e-8);
        assert!((g[1] + 1.0).abs() < 1e-8);
    }

    #[test]
    fn finite_diff_on_constant_is_zero() {
        let f = |_: &DenseVector<f64>| 4.25;
        let x = DenseVector::from_vec(vec![0.3, 0.7, -2.0]);
        let g = finite_diff_grad(f, &x, 1e-5).unwrap();
        assert!(g.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn finite_diff_names_the_bad_coordinate() {
        let f = |x: &DenseVector<f64>| if x[1] > 0.5 { f64::NAN } else { 0.0 };
        let x = DenseVector::from_vec(vec![0.0, 0.5]);
        let err = finite_diff_grad(f, &x, 0.1).unwrap_err();
        assert!(err.to_string().contains("coordinate 1"), "{err}");
    }

    #[test]
    fn cholesky_accepts_spd_rejects_indefinite() {
        let spd = mat(2, 2, &[4.0, 1.0, 1.0, 3.0]);
        assert!(cholesky_probe(&spd));
        let indef = mat(2, 2, &[1.0, 2.0, 2.0, 1.0]);
        assert!(!cholesky_probe(&indef));
    }

    #[test]
    fn gram_matches_manual() {
        let a = mat(3, 2, &[1.0, 2.0, 0.0, -1.0, 3.0, 1.0]);
        let g = a.gram();
        assert_eq!(g.get(0, 0), 10.0);
        assert_eq!(g.get(0, 1), 5.0);
        assert_eq!(g.get(1, 0), 5.0);
        assert_eq!(g.get(1, 1), 6.0);
    }
}
