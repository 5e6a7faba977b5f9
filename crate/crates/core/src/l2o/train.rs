//! Meta-training: the regularized meta-loss, an Adam meta-optimizer with
//! global-norm gradient clipping, and the two-loop training procedure.
//!
//! One outer update draws a batch of problems; each problem carries its own
//! BFGS state and recurrent state through `inner_k` iterations, and every
//! inner iteration takes one Adam step on the batch-averaged gradients.
//! Rollouts whose objective turns non-finite are dropped from the average
//! and counted.

use super::{L2OModel, L2ORunState};
use crate::bfgs::{BfgsState, CwssMatrix};
use crate::error::{Error, Result};
use crate::problems::ObjectiveProblem;
use crate::sampling;
use crate::Scalar;
use rand::Rng;
use rayon::prelude::*;

/// Meta-training hyperparameters.
#[derive(Debug, Clone, Copy)]
pub struct MetaConfig<T: Scalar> {
    pub adam_lr: T,
    pub adam_beta1: T,
    pub adam_beta2: T,
    pub adam_eps: T,
    pub batch: usize,
    pub total_updates: usize,
    pub inner_k: usize,
    pub lambda_reg: T,
    pub grad_clip: T,
    pub hd: usize,
    pub hm: usize,
}

impl<T: Scalar> Default for MetaConfig<T> {
    fn default() -> Self {
        Self {
            adam_lr: T::of(1e-3),
            adam_beta1: T::of(0.9),
            adam_beta2: T::of(0.999),
            adam_eps: T::of(1e-8),
            batch: 64,
            total_updates: 200,
            inner_k: 30,
            lambda_reg: T::of(1e-3),
            grad_clip: T::one(),
            hd: 20,
            hm: 20,
        }
    }
}

impl<T: Scalar> MetaConfig<T> {
    pub fn validate(&self) -> Result<()> {
        let ok = self.adam_lr > T::zero()
            && self.adam_beta1 > T::zero()
            && self.adam_beta1 < T::one()
            && self.adam_beta2 > T::zero()
            && self.adam_beta2 < T::one()
            && self.adam_eps > T::zero()
            && self.batch >= 1
            && self.inner_k >= 1
            && self.lambda_reg >= T::zero()
            && self.grad_clip > T::zero()
            && self.hd >= 1
            && self.hm >= 1;
        if ok {
            Ok(())
        } else {
            Err(Error::Config("meta config fields must be positive (inner_k, batch >= 1)".into()))
        }
    }
}

/// `f(x_{k+1}) + lambda ||P - I||_F^2`.
pub fn meta_loss<T: Scalar>(f_next: T, p: &CwssMatrix<T>, lambda: T) -> T {
    let dev = p.deviation_from_identity();
    f_next + lambda * dev * dev
}

/// First and second Adam moments plus the step counter.
#[derive(Debug, Clone)]
pub struct AdamState<T: Scalar> {
    pub m: Vec<T>,
    pub v: Vec<T>,
    pub t: usize,
}

impl<T: Scalar> AdamState<T> {
    pub fn zeros(param_count: usize) -> Self {
        Self {
            m: vec![T::zero(); param_count],
            v: vec![T::zero(); param_count],
            t: 0,
        }
    }
}

/// One Adam update with bias correction; gradients are first clipped to the
/// global norm `cfg.grad_clip`.
pub fn adam_step<T: Scalar>(
    params: &mut [T],
    grads: &[T],
    state: &mut AdamState<T>,
    cfg: &MetaConfig<T>,
) {
    assert_eq!(params.len(), grads.len());
    assert_eq!(params.len(), state.m.len());
    let norm = grads.iter().map(|g| *g * *g).sum::<T>().sqrt();
    let scale = if norm > cfg.grad_clip {
        cfg.grad_clip / norm
    } else {
        T::one()
    };
    state.t += 1;
    let t = state.t as i32;
    let bc1 = T::one() - cfg.adam_beta1.powi(t);
    let bc2 = T::one() - cfg.adam_beta2.powi(t);
    for i in 0..params.len() {
        let g = grads[i] * scale;
        state.m[i] = cfg.adam_beta1 * state.m[i] + (T::one() - cfg.adam_beta1) * g;
        state.v[i] = cfg.adam_beta2 * state.v[i] + (T::one() - cfg.adam_beta2) * g * g;
        let m_hat = state.m[i] / bc1;
        let v_hat = state.v[i] / bc2;
        params[i] = params[i] - cfg.adam_lr * m_hat / (v_hat.sqrt() + cfg.adam_eps);
    }
}

/// Per-update training log row.
#[derive(Debug, Clone, Copy)]
pub struct TrainLogEntry<T: Scalar> {
    pub update: usize,
    pub mean_meta_loss: T,
    pub diverged: usize,
}

#[derive(Debug, Clone)]
pub struct TrainReport<T: Scalar> {
    pub log: Vec<TrainLogEntry<T>>,
}

struct Rollout<'a, T: Scalar> {
    problem: &'a ObjectiveProblem<T>,
    state: BfgsState<T>,
    rs: L2ORunState<T>,
    alive: bool,
}

impl<'a, T: Scalar> Rollout<'a, T> {
    /// Advance one inner iteration; returns parameter gradients and the
    /// meta-loss, or `None` once the rollout has diverged.
    fn step(&mut self, model: &L2OModel<T>, lambda: T) -> Option<(L2OModel<T>, T)> {
        if !self.alive {
            return None;
        }
        let result = (|| {
            let d = self.state.search_direction()?;
            let (p, tape) = model.forward(&mut self.rs, &self.state.x, &self.state.grad, &d)?;
            self.state.apply_step(self.problem, &p)?;
            let grads = model.backward(&tape, &d, &self.state.grad, &p, lambda);
            Ok::<_, Error>((grads, meta_loss(self.state.f, &p, lambda)))
        })();
        match result {
            Ok(out) => Some(out),
            Err(_) => {
                self.alive = false;
                None
            }
        }
    }
}

/// Run `cfg.total_updates - start_update` outer updates, mutating the model
/// and Adam state in place. All randomness is keyed by `(seed, update index,
/// slot)`, so resuming from `start_update` replays the identical schedule.
///
/// `on_update` fires after every completed outer update (checkpoint hook).
pub fn train<T: Scalar, F>(
    model: &mut L2OModel<T>,
    adam: &mut AdamState<T>,
    cfg: &MetaConfig<T>,
    problems: &[ObjectiveProblem<T>],
    seed: u64,
    start_update: usize,
    mut on_update: F,
) -> Result<TrainReport<T>>
where
    F: FnMut(usize, &L2OModel<T>, &AdamState<T>),
{
    cfg.validate()?;
    if problems.is_empty() {
        return Err(Error::Config("training needs at least one problem".into()));
    }
    if adam.m.len() != model.param_count() {
        return Err(Error::Config("Adam state does not match the model size".into()));
    }
    let mut log = Vec::new();

    for update in start_update..cfg.total_updates {
        let mut pick_rng = sampling::stream_rng(seed, "train/sample", update as u64);
        let mut rollouts: Vec<Rollout<'_, T>> = (0..cfg.batch)
            .map(|slot| {
                let problem = &problems[pick_rng.gen_range(0..problems.len())];
                let run_id = (update * cfg.batch + slot) as u64;
                let n = problem.dimension();
                let x0 = sampling::unit_gaussian_vector(
                    n,
                    &mut sampling::stream_rng(seed, "train/x0", run_id),
                );
                let rs = L2ORunState::random(
                    n,
                    cfg.hd,
                    0.1,
                    &mut sampling::stream_rng(seed, "train/run_state", run_id),
                );
                let (state, alive) = match BfgsState::init(problem, &x0) {
                    Ok(s) => (s, true),
                    Err(_) => (
                        BfgsState {
                            x: x0.clone(),
                            h_inv: crate::numerics::DenseMatrix::identity(n),
                            grad: crate::numerics::DenseVector::zeros(n),
                            f: T::zero(),
                            k: 0,
                            last_skip: false,
                        },
                        false,
                    ),
                };
                Rollout {
                    problem,
                    state,
                    rs,
                    alive,
                }
            })
            .collect();

        let mut loss_sum = T::zero();
        let mut loss_count = 0usize;
        for _k in 0..cfg.inner_k {
            let model_ref: &L2OModel<T> = model;
            let lambda = cfg.lambda_reg;
            let contribs: Vec<Option<(L2OModel<T>, T)>> = rollouts
                .par_iter_mut()
                .map(|r| r.step(model_ref, lambda))
                .collect();
            // Index-ordered reduction keeps results worker-count independent.
            let mut grad_sum = model.zeros_like();
            let mut alive = 0usize;
            for contrib in contribs.into_iter().flatten() {
                grad_sum.add_assign(&contrib.0);
                loss_sum = loss_sum + contrib.1;
                loss_count += 1;
                alive += 1;
            }
            if alive == 0 {
                continue;
            }
            let inv = T::one() / T::of(alive as f64);
            let grads: Vec<T> = grad_sum.flatten().into_iter().map(|g| g * inv).collect();
            let mut params = model.flatten();
            adam_step(&mut params, &grads, adam, cfg);
            model.assign_from_flat(&params)?;
        }

        let diverged = rollouts.iter().filter(|r| !r.alive).count();
        let mean = if loss_count > 0 {
            loss_sum / T::of(loss_count as f64)
        } else {
            T::nan()
        };
        log.push(TrainLogEntry {
            update,
            mean_meta_loss: mean,
            diverged,
        });
        on_update(update, model, adam);
    }
    Ok(TrainReport { log })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn meta_loss_identity_and_lambda_zero_reduce_to_f() {
        let p = CwssMatrix::<f64>::identity(4);
        assert_eq!(meta_loss(3.5, &p, 0.7), 3.5);
        let p2 =
            CwssMatrix::new(crate::numerics::DenseVector::from_vec(vec![1.5f64, 0.5])).unwrap();
        assert_eq!(meta_loss(2.0, &p2, 0.0), 2.0);
        // f_next = 2.0, p = (1.5, 0.5), lambda = 0.1 -> 2.0 + 0.1 * 0.5
        let loss = meta_loss(2.0, &p2, 0.1);
        assert!((loss - 2.05).abs() < 1e-15);
    }

    #[test]
    fn adam_zero_gradient_leaves_params_but_decays_moments() {
        let cfg = MetaConfig::<f64>::default();
        // Fresh state: a zero gradient moves nothing.
        let mut params = vec![1.0, -2.0];
        let mut st = AdamState::zeros(2);
        adam_step(&mut params, &[0.0, 0.0], &mut st, &cfg);
        assert_eq!(params, vec![1.0, -2.0]);
        assert_eq!(st.t, 1);
        // Seeded moments decay geometrically under zero gradients.
        st.m = vec![0.5, 0.5];
        st.v = vec![0.25, 0.25];
        adam_step(&mut params, &[0.0, 0.0], &mut st, &cfg);
        assert!((st.m[0] - 0.45).abs() < 1e-15);
        assert!((st.v[0] - 0.24975).abs() < 1e-15);
    }

    #[test]
    fn adam_first_step_magnitude_is_learning_rate() {
        let cfg = MetaConfig::<f64>::default();
        let mut params = vec![0.0];
        let mut st = AdamState::zeros(1);
        adam_step(&mut params, &[1.0], &mut st, &cfg);
        // Bias correction makes m_hat = v_hat = 1 at t = 1.
        let expected = cfg.adam_lr / (1.0 + cfg.adam_eps);
        assert!((params[0] + expected).abs() < 1e-12, "{}", params[0]);
    }

    #[test]
    fn adam_descends_a_scalar_quadratic() {
        let cfg = MetaConfig::<f64> {
            adam_lr: 1e-2,
            ..MetaConfig::default()
        };
        let mut w = vec![1.0f64];
        let mut st = AdamState::zeros(1);
        let mut prev = 1.0f64;
        for _ in 0..100 {
            let g = vec![2.0 * w[0]];
            adam_step(&mut w, &g, &mut st, &cfg);
            assert!(w[0] <= prev + 1e-12, "w increased: {} -> {}", prev, w[0]);
            prev = w[0];
        }
        assert!(w[0] < 0.5, "w = {}", w[0]);
    }

    #[test]
    fn training_is_deterministic_in_seed() {
        let problems: Vec<_> = (0..4)
            .map(|s| ObjectiveProblem::<f64>::gen_least_squares(6, 5, s).unwrap())
            .collect();
        let cfg = MetaConfig::<f64> {
            batch: 4,
            total_updates: 3,
            inner_k: 4,
            hd: 4,
            hm: 4,
            ..MetaConfig::default()
        };
        let run = || {
            let mut model = L2OModel::<f64>::init(4, 4, &mut ChaCha8Rng::seed_from_u64(99));
            let mut adam = AdamState::zeros(model.param_count());
            let report = train(&mut model, &mut adam, &cfg, &problems, 7, 0, |_, _, _| {}).unwrap();
            (model.flatten(), report)
        };
        let (m1, r1) = run();
        let (m2, r2) = run();
        assert_eq!(m1, m2);
        for (a, b) in r1.log.iter().zip(&r2.log) {
            assert_eq!(a.mean_meta_loss.to_bits(), b.mean_meta_loss.to_bits());
            assert_eq!(a.diverged, b.diverged);
        }
    }
}
