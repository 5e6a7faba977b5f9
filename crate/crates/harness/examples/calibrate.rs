use cwss_core::l2o::{train, AdamState};
use cwss_harness::bench::{run_bench, summarize, BenchOptions};
use cwss_harness::config::ExperimentConfig;
use cwss_harness::dataset::{generate_instance, generate_split};
use cwss_harness::seeds::SeedSplitter;
use cwss_harness::trainer::init_model;
use cwss_core::Problem64;
use std::sync::Arc;
use std::time::Instant;

fn main() {
    let family = std::env::args().nth(1).unwrap_or_else(|| "least_squares".into());
    let mut cfg = ExperimentConfig::desk(&family).unwrap();
    cfg.strategies = vec!["ls".into(), "l2o".into()];
    if let Some(lam) = std::env::args().nth(2) {
        cfg.meta.lambda_reg = lam.parse().unwrap();
    }
    if let Some(k) = std::env::args().nth(3) {
        cfg.meta.inner_k = k.parse().unwrap();
    }
    let t0 = Instant::now();
    let (train_set, _) = generate_split(&cfg).unwrap();
    // Validation slice: instance indices beyond the test split.
    let val: Vec<Problem64> = (cfg.n_train + cfg.n_test..cfg.n_train + 2 * cfg.n_test)
        .map(|i| generate_instance(&cfg, i).unwrap())
        .collect();
    println!("lambda {} K {}: generated in {:.1?}", cfg.meta.lambda_reg, cfg.meta.inner_k, t0.elapsed());

    let mut model = init_model(&cfg);
    let mut adam = AdamState::zeros(model.param_count());
    let meta = cfg.meta.to_core();
    let train_seed = SeedSplitter::new(cfg.seed).seed("train");
    let mut snapshots = Vec::new();
    train(&mut model, &mut adam, &meta, &train_set, train_seed, 0, |u, m, _| {
        if (u + 1) % 25 == 0 {
            snapshots.push((u + 1, m.clone()));
        }
    })
    .unwrap();
    println!("trained in {:.1?}", t0.elapsed());

    // Validation bench per snapshot; x0/run-state streams keyed by slot as in
    // the real bench (instance identity differs, that's the point).
    for (u, m) in &snapshots {
        let runs = run_bench(&cfg, &val, Some(&Arc::new(m.clone())), BenchOptions::default()).unwrap();
        let s = summarize(&cfg, &runs);
        println!(
            "updates {u:>3}: ls median {:>6.1}  l2o median {:>6.1} (div {})",
            s.strategies[0].iters_median, s.strategies[1].iters_median, s.strategies[1].diverged
        );
    }
    println!("total {:.1?}", t0.elapsed());
}
