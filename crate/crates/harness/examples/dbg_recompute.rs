use cwss_harness::bench::{run_bench, summarize, write_bench_artifacts, BenchOptions};
use cwss_harness::config::ExperimentConfig;
use cwss_harness::dataset::{write_dataset, Split};
use cwss_harness::trainer::train_l2o;
use cwss_harness::{dataset, trace};
use std::fs;
use std::sync::Arc;

fn main() {
    let mut cfg = ExperimentConfig::desk("least_squares").unwrap();
    cfg.m = 10; cfg.n = 16; cfg.n_train = 6; cfg.n_test = 5; cfg.max_iters = 120;
    cfg.strategies = vec!["ls".into(), "fixed:0.5".into(), "l2o".into()];
    cfg.meta.batch = 6; cfg.meta.total_updates = 8; cfg.meta.inner_k = 5; cfg.meta.hd = 6; cfg.meta.hm = 6;

    let dir = std::env::temp_dir().join("cwss_dbg_recompute");
    let _ = fs::remove_dir_all(&dir);
    fs::create_dir_all(&dir).unwrap();
    let manifest = write_dataset(&cfg, &dir).unwrap();
    let train = dataset::load_problems(&dir, &manifest, Split::Train).unwrap();
    let test = dataset::load_problems(&dir, &manifest, Split::Test).unwrap();
    let trained = train_l2o(&cfg, &train, &dir, None).unwrap();
    let model = Arc::new(trained.model);
    let runs = run_bench(&cfg, &test, Some(&model), BenchOptions::default()).unwrap();
    let summary = summarize(&cfg, &runs);
    let bench_dir = dir.join("bench");
    fs::create_dir_all(&bench_dir).unwrap();
    write_bench_artifacts(&bench_dir, &runs, &summary).unwrap();

    // in-memory ls values at k=7
    let k = 7;
    for run in runs.iter().filter(|r| r.strategy == "ls") {
        let t = &run.outcome.records;
        let f = t.get(k).map_or(t.last().unwrap().f, |r| r.f);
        println!("mem  instance {} f[7] {:.17e} len {}", run.instance, f, t.len());
    }
    // parsed values
    let sub = bench_dir.join("runs/ls");
    let mut names: Vec<_> = fs::read_dir(&sub).unwrap().map(|e| e.unwrap().path()).collect();
    names.sort();
    for (i, p) in names.iter().enumerate() {
        let (records, _) = trace::parse_trace(&fs::read_to_string(p).unwrap()).unwrap();
        let f = records.get(k).map_or(records.last().unwrap().f, |r| r.f);
        println!("file instance {} f[7] {:.17e} len {}", i, f, records.len());
    }
    println!("summary curve[7] {:.17e}", summary.strategies[0].curve_mean[7]);
}
