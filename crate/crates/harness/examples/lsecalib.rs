use cwss_harness::bench::{run_bench, summarize, BenchOptions};
use cwss_harness::config::ExperimentConfig;
use cwss_harness::dataset::generate_split;
use cwss_harness::trainer::train_l2o;
use std::sync::Arc;
use std::time::Instant;

fn main() {
    let mut cfg = ExperimentConfig::desk("log_sum_exp").unwrap();
    cfg.strategies = vec!["ls".into(), "l2o".into()];
    if let Some(k) = std::env::args().nth(1) {
        cfg.meta.inner_k = k.parse().unwrap();
    }
    let t0 = Instant::now();
    let (train_set, _) = generate_split(&cfg).unwrap();
    let dir = std::env::temp_dir().join(format!("cwss_lse_{}", cfg.meta.inner_k));
    let _ = std::fs::remove_dir_all(&dir);
    std::fs::create_dir_all(&dir).unwrap();
    let out = train_l2o(&cfg, &train_set, &dir, None).unwrap();
    println!("trained (d=50, K={}) in {:.1?}", cfg.meta.inner_k, t0.elapsed());
    let model = Arc::new(out.model);
    for d in [20usize, 50, 100] {
        let mut c = cfg.clone();
        c.n = d;
        let (_, test_set) = generate_split(&c).unwrap();
        let runs = run_bench(&c, &test_set, Some(&model), BenchOptions::default()).unwrap();
        let summary = summarize(&c, &runs);
        let ls = &summary.strategies[0];
        let l2o = &summary.strategies[1];
        println!(
            "d={d:>3}: ls median {:>6.1} (div {})  l2o median {:>6.1} (div {})  ratio {:.3}",
            ls.iters_median, ls.diverged, l2o.iters_median, l2o.diverged,
            l2o.iters_median / ls.iters_median
        );
    }
    println!("total {:.1?}", t0.elapsed());
}
