//! Learned coordinate-wise step sizes: a shared LSTM cell plus MLP head
//! mapping `(x_i, grad_i, d_i)` to a step-size entry `2 sigmoid(u_i)`.
//!
//! The same cell runs on every coordinate, so the parameter count is
//! independent of the problem dimension. Forward passes record a tape of
//! intermediates; the backward pass differentiates the meta-loss through the
//! MLP and one LSTM step, treating the incoming hidden and cell states as
//! constants (truncation length 1). Nothing flows through the BFGS update of
//! the inverse Hessian.

mod checkpoint;
mod train;

pub use checkpoint::{checkpoint_from_json, checkpoint_to_json, Checkpoint};
pub use train::{adam_step, meta_loss, train, AdamState, MetaConfig, TrainLogEntry, TrainReport};

use crate::bfgs::{BfgsState, CwssMatrix};
use crate::error::{Error, Result};
use crate::numerics::{DenseMatrix, DenseVector};
use crate::problems::ObjectiveProblem;
use crate::sampling;
use crate::strategies::StepStrategy;
use crate::Scalar;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::sync::Arc;

/// Network inputs are clipped to this box before entering the LSTM.
pub const INPUT_CLIP: f64 = 10.0;

/// Keep emitted entries inside the open interval (0, 2) even when the
/// sigmoid saturates to exactly 0 or 1 in floating point.
const P_EPS: f64 = 1e-12;

/// Shared LSTM cell (input size 3, hidden `hd`) and MLP head (`hd -> hm -> 1`).
///
/// Doubles as the gradient container: `backward` returns one `L2OModel` whose
/// fields hold the meta-loss derivative of each parameter.
#[derive(Debug, Clone)]
pub struct L2OModel<T: Scalar> {
    pub hd: usize,
    pub hm: usize,
    /// Gate input weights, rows ordered [input, forget, cell, output]; 4hd x 3.
    pub w: DenseMatrix<T>,
    /// Gate recurrent weights; 4hd x hd.
    pub u: DenseMatrix<T>,
    /// Gate biases; 4hd.
    pub b: DenseVector<T>,
    /// MLP hidden layer; hm x hd.
    pub w1: DenseMatrix<T>,
    pub b1: DenseVector<T>,
    /// MLP output layer; hm.
    pub w2: DenseVector<T>,
    pub b2: T,
}

impl<T: Scalar> L2OModel<T> {
    /// Uniform init scaled by fan-in; forget-gate bias starts at 1.
    pub fn init(hd: usize, hm: usize, rng: &mut ChaCha8Rng) -> Self {
        let mut uniform = |rows: usize, cols: usize| {
            let s = 1.0 / (cols as f64).sqrt();
            let data = (0..rows * cols)
                .map(|_| T::of((rng.gen::<f64>() * 2.0 - 1.0) * s))
                .collect();
            DenseMatrix::from_vec(rows, cols, data).expect("sized")
        };
        let w = uniform(4 * hd, 3);
        let u = uniform(4 * hd, hd);
        let w1 = uniform(hm, hd);
        let w2_m = uniform(1, hm);
        let mut b = DenseVector::zeros(4 * hd);
        for i in hd..2 * hd {
            b[i] = T::one();
        }
        Self {
            hd,
            hm,
            w,
            u,
            b,
            w1,
            b1: DenseVector::zeros(hm),
            w2: DenseVector::from_vec(w2_m.as_slice().to_vec()),
            b2: T::zero(),
        }
    }

    pub fn zeros(hd: usize, hm: usize) -> Self {
        Self {
            hd,
            hm,
            w: DenseMatrix::zeros(4 * hd, 3),
            u: DenseMatrix::zeros(4 * hd, hd),
            b: DenseVector::zeros(4 * hd),
            w1: DenseMatrix::zeros(hm, hd),
            b1: DenseVector::zeros(hm),
            w2: DenseVector::zeros(hm),
            b2: T::zero(),
        }
    }

    pub fn zeros_like(&self) -> Self {
        Self::zeros(self.hd, self.hm)
    }

    pub fn param_count(&self) -> usize {
        4 * self.hd * 3 + 4 * self.hd * self.hd + 4 * self.hd + self.hm * self.hd + self.hm + self.hm + 1
    }

    /// Parameters in the fixed order `w, u, b, w1, b1, w2, b2`.
    pub fn flatten(&self) -> Vec<T> {
        let mut out = Vec::with_capacity(self.param_count());
        out.extend_from_slice(self.w.as_slice());
        out.extend_from_slice(self.u.as_slice());
        out.extend_from_slice(self.b.as_slice());
        out.extend_from_slice(self.w1.as_slice());
        out.extend_from_slice(self.b1.as_slice());
        out.extend_from_slice(self.w2.as_slice());
        out.push(self.b2);
        out
    }

    pub fn assign_from_flat(&mut self, flat: &[T]) -> Result<()> {
        if flat.len() != self.param_count() {
            return Err(Error::DimMismatch {
                op: "assign_from_flat",
                detail: format!("{} params for a model with {}", flat.len(), self.param_count()),
            });
        }
        let (hd, hm) = (self.hd, self.hm);
        let mut at = 0usize;
        let mut take = |len: usize| {
            let s = &flat[at..at + len];
            at += len;
            s.to_vec()
        };
        self.w = DenseMatrix::from_vec(4 * hd, 3, take(4 * hd * 3))?;
        self.u = DenseMatrix::from_vec(4 * hd, hd, take(4 * hd * hd))?;
        self.b = DenseVector::from_vec(take(4 * hd));
        self.w1 = DenseMatrix::from_vec(hm, hd, take(hm * hd))?;
        self.b1 = DenseVector::from_vec(take(hm));
        self.w2 = DenseVector::from_vec(take(hm));
        self.b2 = flat[at];
        Ok(())
    }

    pub fn all_finite(&self) -> bool {
        self.w.all_finite()
            && self.u.all_finite()
            && self.b.all_finite()
            && self.w1.all_finite()
            && self.b1.all_finite()
            && self.w2.all_finite()
            && self.b2.is_finite()
    }

    /// `self += other` fieldwise (gradient accumulation).
    pub fn add_assign(&mut self, other: &Self) {
        let mut flat = self.flatten();
        for (a, b) in flat.iter_mut().zip(other.flatten()) {
            *a = *a + b;
        }
        self.assign_from_flat(&flat).expect("same shape");
    }

    /// Run the shared cell over every coordinate.
    pub fn forward(
        &self,
        rs: &mut L2ORunState<T>,
        x: &DenseVector<T>,
        grad: &DenseVector<T>,
        d: &DenseVector<T>,
    ) -> Result<(CwssMatrix<T>, L2OTape<T>)> {
        let n = x.len();
        if grad.len() != n || d.len() != n {
            return Err(Error::DimMismatch {
                op: "l2o_forward",
                detail: format!("x/grad/d lengths {} / {} / {}", n, grad.len(), d.len()),
            });
        }
        if rs.h.rows() != n || rs.h.cols() != self.hd {
            return Err(Error::DimMismatch {
                op: "l2o_forward",
                detail: format!(
                    "run state is {}x{}, expected {}x{}",
                    rs.h.rows(),
                    rs.h.cols(),
                    n,
                    self.hd
                ),
            });
        }
        let (hd, hm) = (self.hd, self.hm);
        let clip = T::of(INPUT_CLIP);
        let mut tape = L2OTape::empty(n, hd, hm);
        let mut p_entries = Vec::with_capacity(n);

        for i in 0..n {
            let z = [
                clamp(x[i], clip),
                clamp(grad[i], clip),
                clamp(d[i], clip),
            ];
            let h_prev: Vec<T> = rs.h.row(i).to_vec();
            let c_prev: Vec<T> = rs.c.row(i).to_vec();

            // pre = W z + U h_prev + b, rows blocked [i, f, g, o].
            let mut pre = vec![T::zero(); 4 * hd];
            for (r, pr) in pre.iter_mut().enumerate() {
                let wr = self.w.row(r);
                let ur = self.u.row(r);
                let mut acc = self.b[r] + wr[0] * z[0] + wr[1] * z[1] + wr[2] * z[2];
                for (uv, hv) in ur.iter().zip(&h_prev) {
                    acc = acc + *uv * *hv;
                }
                *pr = acc;
            }
            let gate_i: Vec<T> = pre[0..hd].iter().map(|v| sigmoid(*v)).collect();
            let gate_f: Vec<T> = pre[hd..2 * hd].iter().map(|v| sigmoid(*v)).collect();
            let gate_g: Vec<T> = pre[2 * hd..3 * hd].iter().map(|v| v.tanh()).collect();
            let gate_o: Vec<T> = pre[3 * hd..4 * hd].iter().map(|v| sigmoid(*v)).collect();

            let mut c_new = vec![T::zero(); hd];
            let mut tanh_c = vec![T::zero(); hd];
            let mut h_new = vec![T::zero(); hd];
            for j in 0..hd {
                c_new[j] = gate_f[j] * c_prev[j] + gate_i[j] * gate_g[j];
                tanh_c[j] = c_new[j].tanh();
                h_new[j] = gate_o[j] * tanh_c[j];
            }

            let mut a1 = vec![T::zero(); hm];
            for (j, a) in a1.iter_mut().enumerate() {
                let mut acc = self.b1[j];
                for (wv, hv) in self.w1.row(j).iter().zip(&h_new) {
                    acc = acc + *wv * *hv;
                }
                *a = acc.tanh();
            }
            let mut u_out = self.b2;
            for (wv, av) in self.w2.iter().zip(&a1) {
                u_out = u_out + *wv * *av;
            }
            if !u_out.is_finite() {
                return Err(Error::NonFinite(format!("l2o activation at coordinate {i}")));
            }
            let sig = sigmoid(u_out);
            let p_i = (T::of(2.0) * sig)
                .max(T::of(P_EPS))
                .min(T::of(2.0 - P_EPS));
            p_entries.push(p_i);

            // Run state advances; the tape keeps the pre-step values.
            for j in 0..hd {
                tape.h_prev.set(i, j, h_prev[j]);
                tape.c_prev.set(i, j, c_prev[j]);
                tape.gate_i.set(i, j, gate_i[j]);
                tape.gate_f.set(i, j, gate_f[j]);
                tape.gate_g.set(i, j, gate_g[j]);
                tape.gate_o.set(i, j, gate_o[j]);
                tape.c_new.set(i, j, c_new[j]);
                tape.tanh_c.set(i, j, tanh_c[j]);
                tape.h_new.set(i, j, h_new[j]);
                rs.h.set(i, j, h_new[j]);
                rs.c.set(i, j, c_new[j]);
            }
            for j in 0..hm {
                tape.a1.set(i, j, a1[j]);
            }
            tape.z.set(i, 0, z[0]);
            tape.z.set(i, 1, z[1]);
            tape.z.set(i, 2, z[2]);
            tape.sig[i] = sig;
            tape.p[i] = p_i;
        }
        Ok((CwssMatrix::new(DenseVector::from_vec(p_entries))?, tape))
    }

    /// Meta-loss gradients for every parameter.
    ///
    /// The per-coordinate seed is
    /// `du_i = (-grad_next_i * d_i + 2 lambda (p_i - 1)) * 2 sig_i (1 - sig_i)`:
    /// the first term is the derivative of `f(x - P (.) d)` in `P_ii`, the
    /// second the regularizer, both pulled through the scaled sigmoid.
    pub fn backward(
        &self,
        tape: &L2OTape<T>,
        d: &DenseVector<T>,
        grad_next: &DenseVector<T>,
        p: &CwssMatrix<T>,
        lambda: T,
    ) -> L2OGradients<T> {
        let n = tape.z.rows();
        debug_assert_eq!(d.len(), n);
        debug_assert_eq!(grad_next.len(), n);
        let (hd, hm) = (self.hd, self.hm);
        let two = T::of(2.0);
        let mut g = self.zeros_like();

        for i in 0..n {
            let sig = tape.sig[i];
            let p_i = p.entries()[i];
            let dloss_dp = -grad_next[i] * d[i] + two * lambda * (p_i - T::one());
            let du = dloss_dp * two * sig * (T::one() - sig);
            if du == T::zero() {
                continue;
            }

            // MLP head.
            g.b2 = g.b2 + du;
            let mut dpre1 = vec![T::zero(); hm];
            for j in 0..hm {
                let a = tape.a1.get(i, j);
                g.w2[j] = g.w2[j] + du * a;
                dpre1[j] = du * self.w2[j] * (T::one() - a * a);
                g.b1[j] = g.b1[j] + dpre1[j];
                for l in 0..hd {
                    let v = g.w1.get(j, l) + dpre1[j] * tape.h_new.get(i, l);
                    g.w1.set(j, l, v);
                }
            }
            let mut dh = vec![T::zero(); hd];
            for (j, dp) in dpre1.iter().enumerate() {
                for (l, dv) in dh.iter_mut().enumerate() {
                    *dv = *dv + self.w1.get(j, l) * *dp;
                }
            }

            // One LSTM cell step; h_prev/c_prev are constants.
            for l in 0..hd {
                let go = tape.gate_o.get(i, l);
                let gi = tape.gate_i.get(i, l);
                let gf = tape.gate_f.get(i, l);
                let gg = tape.gate_g.get(i, l);
                let tc = tape.tanh_c.get(i, l);
                let d_o = dh[l] * tc;
                let d_c = dh[l] * go * (T::one() - tc * tc);
                let d_i = d_c * gg;
                let d_f = d_c * tape.c_prev.get(i, l);
                let d_g = d_c * gi;

                let dpre = [
                    d_i * gi * (T::one() - gi),
                    d_f * gf * (T::one() - gf),
                    d_g * (T::one() - gg * gg),
                    d_o * go * (T::one() - go),
                ];
                for (blk, dp) in dpre.iter().enumerate() {
                    let r = blk * hd + l;
                    g.b[r] = g.b[r] + *dp;
                    for (col, zv) in [tape.z.get(i, 0), tape.z.get(i, 1), tape.z.get(i, 2)]
                        .iter()
                        .enumerate()
                    {
                        let v = g.w.get(r, col) + *dp * *zv;
                        g.w.set(r, col, v);
                    }
                    for col in 0..hd {
                        let v = g.u.get(r, col) + *dp * tape.h_prev.get(i, col);
                        g.u.set(r, col, v);
                    }
                }
            }
        }
        g
    }
}

fn clamp<T: Scalar>(v: T, bound: T) -> T {
    v.max(-bound).min(bound)
}

fn sigmoid<T: Scalar>(z: T) -> T {
    if z >= T::zero() {
        T::one() / (T::one() + (-z).exp())
    } else {
        let e = z.exp();
        e / (T::one() + e)
    }
}

/// Gradients share the model layout.
pub type L2OGradients<T> = L2OModel<T>;

/// Per-coordinate hidden and cell states for one optimization run.
#[derive(Debug, Clone)]
pub struct L2ORunState<T: Scalar> {
    pub h: DenseMatrix<T>,
    pub c: DenseMatrix<T>,
}

impl<T: Scalar> L2ORunState<T> {
    pub fn zeros(n: usize, hd: usize) -> Self {
        Self {
            h: DenseMatrix::zeros(n, hd),
            c: DenseMatrix::zeros(n, hd),
        }
    }

    /// Gaussian init with the given standard deviation.
    pub fn random(n: usize, hd: usize, std: f64, rng: &mut ChaCha8Rng) -> Self {
        let mut gen = |_| {
            let data = (0..n * hd)
                .map(|_| T::of(sampling::standard_normal(rng) * std))
                .collect();
            DenseMatrix::from_vec(n, hd, data).expect("sized")
        };
        Self { h: gen(0), c: gen(1) }
    }
}

/// Forward-pass intermediates for one step over all coordinates.
#[derive(Debug, Clone)]
pub struct L2OTape<T: Scalar> {
    pub z: DenseMatrix<T>,
    pub h_prev: DenseMatrix<T>,
    pub c_prev: DenseMatrix<T>,
    pub gate_i: DenseMatrix<T>,
    pub gate_f: DenseMatrix<T>,
    pub gate_g: DenseMatrix<T>,
    pub gate_o: DenseMatrix<T>,
    pub c_new: DenseMatrix<T>,
    pub tanh_c: DenseMatrix<T>,
    pub h_new: DenseMatrix<T>,
    pub a1: DenseMatrix<T>,
    pub sig: Vec<T>,
    pub p: Vec<T>,
}

impl<T: Scalar> L2OTape<T> {
    fn empty(n: usize, hd: usize, hm: usize) -> Self {
        Self {
            z: DenseMatrix::zeros(n, 3),
            h_prev: DenseMatrix::zeros(n, hd),
            c_prev: DenseMatrix::zeros(n, hd),
            gate_i: DenseMatrix::zeros(n, hd),
            gate_f: DenseMatrix::zeros(n, hd),
            gate_g: DenseMatrix::zeros(n, hd),
            gate_o: DenseMatrix::zeros(n, hd),
            c_new: DenseMatrix::zeros(n, hd),
            tanh_c: DenseMatrix::zeros(n, hd),
            h_new: DenseMatrix::zeros(n, hd),
            a1: DenseMatrix::zeros(n, hm),
            sig: vec![T::zero(); n],
            p: vec![T::zero(); n],
        }
    }
}

/// How the per-run hidden/cell states are initialized.
#[derive(Debug, Clone, Copy)]
pub enum RunStateInit {
    Zero,
    Gaussian { std: f64 },
}

impl Default for RunStateInit {
    fn default() -> Self {
        RunStateInit::Gaussian { std: 0.1 }
    }
}

/// The learned strategy: owns a trained model and per-run recurrent state.
pub struct L2OStrategy<T: Scalar> {
    model: Arc<L2OModel<T>>,
    init: RunStateInit,
    rs: Option<L2ORunState<T>>,
}

impl<T: Scalar> L2OStrategy<T> {
    pub fn new(model: Arc<L2OModel<T>>) -> Self {
        Self {
            model,
            init: RunStateInit::default(),
            rs: None,
        }
    }

    pub fn with_init(model: Arc<L2OModel<T>>, init: RunStateInit) -> Self {
        Self {
            model,
            init,
            rs: None,
        }
    }
}

impl<T: Scalar> StepStrategy<T> for L2OStrategy<T> {
    fn name(&self) -> &str {
        "l2o"
    }

    fn begin_run(&mut self, n: usize, run_seed: u64) {
        self.rs = Some(match self.init {
            RunStateInit::Zero => L2ORunState::zeros(n, self.model.hd),
            RunStateInit::Gaussian { std } => {
                let mut rng = ChaCha8Rng::seed_from_u64(run_seed);
                L2ORunState::random(n, self.model.hd, std, &mut rng)
            }
        });
    }

    fn step(
        &mut self,
        _problem: &ObjectiveProblem<T>,
        state: &BfgsState<T>,
        d: &DenseVector<T>,
    ) -> Result<CwssMatrix<T>> {
        let rs = self
            .rs
            .as_mut()
            .ok_or_else(|| Error::Config("L2O strategy used before begin_run".into()))?;
        let (p, _tape) = self.model.forward(rs, &state.x, &state.grad, d)?;
        Ok(p)
    }
}
