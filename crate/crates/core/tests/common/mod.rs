//! Independent test oracles: deliberately naive implementations that share
//! no code with the library paths they check.

#![allow(dead_code)]

use cwss_core::numerics::{DenseMatrix, DenseVector};
use cwss_core::Problem64;

/// Naive triple-loop matrix-vector product.
pub fn naive_matvec(m: &DenseMatrix<f64>, v: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; m.rows()];
    for i in 0..m.rows() {
        for j in 0..m.cols() {
            out[i] += m.get(i, j) * v[j];
        }
    }
    out
}

/// Eigenvalues of a symmetric matrix by the cyclic Jacobi rotation method.
pub fn jacobi_eigenvalues(m: &DenseMatrix<f64>) -> Vec<f64> {
    let n = m.rows();
    assert_eq!(n, m.cols());
    let mut a: Vec<Vec<f64>> = (0..n).map(|i| m.row(i).to_vec()).collect();
    for _sweep in 0..100 {
        let mut off = 0.0;
        for p in 0..n {
            for q in (p + 1)..n {
                off += a[p][q] * a[p][q];
            }
        }
        if off < 1e-30 {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                if a[p][q].abs() < 1e-300 {
                    continue;
                }
                let theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a[k][p];
                    let akq = a[k][q];
                    a[k][p] = c * akp - s * akq;
                    a[k][q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[p][k];
                    let aqk = a[q][k];
                    a[p][k] = c * apk - s * aqk;
                    a[q][k] = s * apk + c * aqk;
                }
            }
        }
    }
    let mut eig: Vec<f64> = (0..n).map(|i| a[i][i]).collect();
    eig.sort_by(|x, y| x.partial_cmp(y).unwrap());
    eig
}

/// Spectral norm from the Jacobi eigenvalue oracle.
pub fn jacobi_spectral_norm(m: &DenseMatrix<f64>) -> f64 {
    // Symmetrize the same way the library does.
    let n = m.rows();
    let mut s = DenseMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            s.set(i, j, 0.5 * (m.get(i, j) + m.get(j, i)));
        }
    }
    jacobi_eigenvalues(&s)
        .into_iter()
        .fold(0.0f64, |acc, e| acc.max(e.abs()))
}

/// Solve `A x = b` by Gaussian elimination with partial pivoting.
/// Panics on a numerically singular pivot; callers pick well-posed systems.
pub fn gaussian_solve(a: &DenseMatrix<f64>, b: &[f64]) -> Vec<f64> {
    let n = a.rows();
    assert_eq!(n, a.cols());
    assert_eq!(n, b.len());
    let mut m: Vec<Vec<f64>> = (0..n)
        .map(|i| {
            let mut row = a.row(i).to_vec();
            row.push(b[i]);
            row
        })
        .collect();
    for col in 0..n {
        let (pivot, _) = m
            .iter()
            .enumerate()
            .skip(col)
            .map(|(i, row)| (i, row[col].abs()))
            .max_by(|x, y| x.1.partial_cmp(&y.1).unwrap())
            .unwrap();
        m.swap(col, pivot);
        assert!(m[col][col].abs() > 1e-12, "singular pivot at column {col}");
        for i in (col + 1)..n {
            let factor = m[i][col] / m[col][col];
            for j in col..=n {
                m[i][j] -= factor * m[col][j];
            }
        }
    }
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let mut acc = m[i][n];
        for j in (i + 1)..n {
            acc -= m[i][j] * x[j];
        }
        x[i] = acc / m[i][i];
    }
    x
}

/// Reference scalar-step BFGS, written against raw least-squares data with
/// the same arithmetic ordering as the library path so trajectories can be
/// compared coordinate-wise.
pub struct ScalarBfgsReference {
    pub a: Vec<Vec<f64>>, // m x n
    pub b: Vec<f64>,
    pub x: Vec<f64>,
    pub h: Vec<Vec<f64>>, // n x n inverse Hessian approximation
    pub grad: Vec<f64>,
    pub k: usize,
}

impl ScalarBfgsReference {
    pub fn new(problem: &Problem64, x0: &[f64]) -> Self {
        use cwss_core::problems::Payload;
        let Payload::LeastSquares { a, b } = problem.payload() else {
            panic!("reference supports least squares only");
        };
        let a_rows: Vec<Vec<f64>> = (0..a.rows()).map(|i| a.row(i).to_vec()).collect();
        let b_vec: Vec<f64> = b.as_slice().to_vec();
        let n = x0.len();
        let mut me = Self {
            a: a_rows,
            b: b_vec,
            x: x0.to_vec(),
            h: (0..n)
                .map(|i| (0..n).map(|j| f64::from(u8::from(i == j))).collect())
                .collect(),
            grad: vec![0.0; n],
            k: 0,
        };
        me.grad = me.gradient(&me.x);
        me
    }

    fn residual(&self, x: &[f64]) -> Vec<f64> {
        self.a
            .iter()
            .zip(&self.b)
            .map(|(row, bi)| {
                let mut acc = 0.0;
                for (aij, xj) in row.iter().zip(x) {
                    acc += aij * xj;
                }
                acc - bi
            })
            .collect()
    }

    fn gradient(&self, x: &[f64]) -> Vec<f64> {
        let r = self.residual(x);
        let n = x.len();
        let mut g = vec![0.0; n];
        for (row, ri) in self.a.iter().zip(&r) {
            for (gj, aij) in g.iter_mut().zip(row) {
                *gj += aij * ri;
            }
        }
        g
    }

    pub fn grad_norm(&self) -> f64 {
        self.grad.iter().map(|g| g * g).sum::<f64>().sqrt()
    }

    /// One scalar-step iteration `x' = x - alpha H g` with the curvature-
    /// guarded inverse update and the periodic re-symmetrization.
    pub fn step(&mut self, alpha: f64) {
        let n = self.x.len();
        let d: Vec<f64> = (0..n)
            .map(|i| {
                let mut acc = 0.0;
                for (hij, gj) in self.h[i].iter().zip(&self.grad) {
                    acc += hij * gj;
                }
                acc
            })
            .collect();
        let step: Vec<f64> = d.iter().map(|di| alpha * di).collect();
        let x_new: Vec<f64> = self.x.iter().zip(&step).map(|(xi, si)| xi - si).collect();
        let grad_new = self.gradient(&x_new);
        let s: Vec<f64> = x_new.iter().zip(&self.x).map(|(a, b)| a - b).collect();
        let y: Vec<f64> = grad_new.iter().zip(&self.grad).map(|(a, b)| a - b).collect();

        let ys: f64 = y.iter().zip(&s).map(|(a, b)| a * b).sum();
        let s_norm = s.iter().map(|v| v * v).sum::<f64>().sqrt();
        let y_norm = y.iter().map(|v| v * v).sum::<f64>().sqrt();
        if ys > 1e-12 * s_norm * y_norm && ys.is_finite() {
            let rho = 1.0 / ys;
            let hy: Vec<f64> = (0..n)
                .map(|i| {
                    let mut acc = 0.0;
                    for (hij, yj) in self.h[i].iter().zip(&y) {
                        acc += hij * yj;
                    }
                    acc
                })
                .collect();
            let yhy: f64 = y.iter().zip(&hy).map(|(a, b)| a * b).sum();
            // Same three rank-one updates, same order as the library.
            for i in 0..n {
                let c = -rho * s[i];
                for j in 0..n {
                    self.h[i][j] += c * hy[j];
                }
            }
            for i in 0..n {
                let c = -rho * hy[i];
                for j in 0..n {
                    self.h[i][j] += c * s[j];
                }
            }
            let coeff = rho * rho * yhy + rho;
            for i in 0..n {
                let c = coeff * s[i];
                for j in 0..n {
                    self.h[i][j] += c * s[j];
                }
            }
        }
        self.x = x_new;
        self.grad = grad_new;
        self.k += 1;
        if self.k % 50 == 0 {
            for i in 0..n {
                for j in (i + 1)..n {
                    let v = (self.h[i][j] + self.h[j][i]) * 0.5;
                    self.h[i][j] = v;
                    self.h[j][i] = v;
                }
            }
        }
    }
}

/// Convenience: random vector of standard normals.
pub fn normal_vec(n: usize, seed: u64) -> DenseVector<f64> {
    cwss_core::sampling::normal_vector(n, &mut cwss_core::sampling::stream_rng(seed, "test", 0))
}

/// Well-conditioned random SPD matrix: `G^T G / n + ridge I`.
pub fn random_spd(n: usize, ridge: f64, rng: &mut rand_chacha::ChaCha8Rng) -> DenseMatrix<f64> {
    let g = cwss_core::sampling::normal_matrix::<f64, _>(n, n, rng);
    let mut m = g.gram();
    for i in 0..n {
        for j in 0..n {
            let mut v = m.get(i, j) / n as f64;
            if i == j {
                v += ridge;
            }
            m.set(i, j, v);
        }
    }
    m
}
