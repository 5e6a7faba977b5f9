mod common;

use cwss_core::bfgs::BfgsState;
use cwss_core::l2o::{meta_loss, train, AdamState, L2OModel, L2ORunState, MetaConfig};
use cwss_core::numerics::{DenseMatrix, DenseVector};
use cwss_core::sampling;
use cwss_core::Problem64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Meta-loss of one full pipeline step (forward -> step -> f + regularizer)
/// as a function of the flattened parameter vector. Everything except the
/// parameters is held fixed, exactly matching what `backward` differentiates:
/// the incoming hidden/cell states are constants and the meta-gradient flows
/// only through the explicit step formula.
fn pipeline_loss(
    flat: &[f64],
    hd: usize,
    hm: usize,
    problem: &Problem64,
    state0: &BfgsState<f64>,
    rs0: &L2ORunState<f64>,
    lambda: f64,
) -> f64 {
    let mut model = L2OModel::<f64>::zeros(hd, hm);
    model.assign_from_flat(flat).unwrap();
    let mut rs = rs0.clone();
    let d = state0.search_direction().unwrap();
    let (p, _tape) = model.forward(&mut rs, &state0.x, &state0.grad, &d).unwrap();
    let x_next = state0.x.sub(&p.entries().hadamard(&d));
    let f_next = problem.eval(&x_next).unwrap();
    meta_loss(f_next, &p, lambda)
}

fn toy_problem() -> Problem64 {
    // 3-dimensional anisotropic quadratic.
    let a = DenseMatrix::from_vec(3, 3, vec![1.0, 0.2, 0.0, 0.0, 1.5, 0.1, 0.0, 0.0, 0.7]).unwrap();
    let b = DenseVector::from_vec(vec![0.3, -0.8, 0.5]);
    Problem64::least_squares_from_parts(a, b).unwrap()
}

fn gradcheck(lambda: f64, grad_next_zeroed: bool, tol: f64) {
    let (hd, hm) = (6, 5);
    let model = L2OModel::<f64>::init(hd, hm, &mut ChaCha8Rng::seed_from_u64(12));
    let problem = toy_problem();
    let x0 = DenseVector::from_vec(vec![1.0, -0.5, 0.25]);
    let state = BfgsState::init(&problem, &x0).unwrap();
    let rs0 = L2ORunState::random(3, hd, 0.1, &mut ChaCha8Rng::seed_from_u64(5));

    // Analytic gradients through the real pipeline.
    let d = state.search_direction().unwrap();
    let mut rs = rs0.clone();
    let (p, tape) = model.forward(&mut rs, &state.x, &state.grad, &d).unwrap();
    let x_next = state.x.sub(&p.entries().hadamard(&d));
    let grad_next = if grad_next_zeroed {
        DenseVector::zeros(3)
    } else {
        problem.grad(&x_next).unwrap()
    };
    let analytic = model.backward(&tape, &d, &grad_next, &p, lambda).flatten();

    // Central finite differences in every parameter.
    let flat = model.flatten();
    let mut fails = Vec::new();
    for i in 0..flat.len() {
        let h = 1e-6 * flat[i].abs().max(1.0);
        let mut plus = flat.clone();
        plus[i] += h;
        let mut minus = flat.clone();
        minus[i] -= h;
        let loss = |v: &[f64]| {
            if grad_next_zeroed {
                // Regularizer-only objective: lambda ||P - I||_F^2.
                let mut m = L2OModel::<f64>::zeros(hd, hm);
                m.assign_from_flat(v).unwrap();
                let mut rs = rs0.clone();
                let (p, _) = m.forward(&mut rs, &state.x, &state.grad, &d).unwrap();
                lambda * p.deviation_from_identity().powi(2)
            } else {
                pipeline_loss(v, hd, hm, &problem, &state, &rs0, lambda)
            }
        };
        let fd = (loss(&plus) - loss(&minus)) / (2.0 * h);
        // Floor for near-zero gradients, where central differences bottom
        // out at ~1e-10 absolute resolution.
        let denom = analytic[i].abs().max(fd.abs()).max(1e-6);
        let rel = (analytic[i] - fd).abs() / denom;
        if rel >= tol {
            fails.push((i, analytic[i], fd, rel));
        }
    }
    assert!(
        fails.is_empty(),
        "{} of {} parameters failed, first: {:?}",
        fails.len(),
        flat.len(),
        &fails[..fails.len().min(5)]
    );
}

#[test]
fn backward_matches_finite_differences_through_full_pipeline() {
    gradcheck(1e-3, false, 1e-4);
}

#[test]
fn backward_matches_finite_differences_for_regularizer_alone() {
    gradcheck(1.0, true, 1e-5);
}

#[test]
fn huge_regularizer_trains_the_model_onto_identity() {
    let problems: Vec<Problem64> = (0..6)
        .map(|s| Problem64::gen_least_squares(8, 10, s).unwrap())
        .collect();
    let cfg = MetaConfig::<f64> {
        lambda_reg: 1e6,
        batch: 8,
        total_updates: 80,
        inner_k: 10,
        hd: 8,
        hm: 8,
        ..MetaConfig::default()
    };
    let mut model = L2OModel::<f64>::init(8, 8, &mut ChaCha8Rng::seed_from_u64(4));
    let mut adam = AdamState::zeros(model.param_count());
    train(&mut model, &mut adam, &cfg, &problems, 17, 0, |_, _, _| {}).unwrap();

    // Held-out states: deviation from identity must be tiny everywhere.
    let p = Problem64::gen_least_squares(8, 10, 99).unwrap();
    let mut rng = sampling::stream_rng(21, "heldout", 0);
    for _ in 0..10 {
        let x = sampling::normal_vector::<f64, _>(10, &mut rng);
        let state = BfgsState::init(&p, &x).unwrap();
        let d = state.search_direction().unwrap();
        let mut rs = L2ORunState::random(10, 8, 0.1, &mut rng);
        let (pm, _) = model.forward(&mut rs, &state.x, &state.grad, &d).unwrap();
        assert!(
            pm.deviation_from_identity() < 0.01,
            "deviation {}",
            pm.deviation_from_identity()
        );
    }
}

#[test]
fn meta_loss_falls_over_training_on_a_small_family() {
    let problems: Vec<Problem64> = (0..8)
        .map(|s| Problem64::gen_least_squares(10, 12, s).unwrap())
        .collect();
    let cfg = MetaConfig::<f64> {
        batch: 8,
        total_updates: 40,
        inner_k: 8,
        hd: 8,
        hm: 8,
        ..MetaConfig::default()
    };
    let mut model = L2OModel::<f64>::init(8, 8, &mut ChaCha8Rng::seed_from_u64(2));
    let mut adam = AdamState::zeros(model.param_count());
    let report = train(&mut model, &mut adam, &cfg, &problems, 3, 0, |_, _, _| {}).unwrap();
    // Individual updates are noisy (fresh problems and starts each time);
    // compare quarter means.
    let q = report.log.len() / 4;
    let mean = |s: &[cwss_core::l2o::TrainLogEntry<f64>]| {
        s.iter().map(|e| e.mean_meta_loss).sum::<f64>() / s.len() as f64
    };
    let first = mean(&report.log[..q]);
    let last = mean(&report.log[report.log.len() - q..]);
    assert!(
        last < first,
        "meta-loss did not improve: {first} -> {last}"
    );
}
