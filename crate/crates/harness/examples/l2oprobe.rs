use cwss_core::bfgs::{run, StopCriteria};
use cwss_core::l2o::L2OStrategy;
use cwss_core::sampling;
use cwss_core::strategies::LineSearch;
use cwss_core::Problem64;
use cwss_harness::trainer::load_model;
use std::sync::Arc;

fn main() {
    let ck = std::env::args().nth(1).unwrap();
    let model = Arc::new(load_model(std::path::Path::new(&ck)).unwrap());
    let p = Problem64::gen_least_squares(60, 120, 4242).unwrap();
    let x0 = sampling::unit_gaussian_vector::<f64, _>(120, &mut sampling::stream_rng(9, "probe", 0));
    let stop = StopCriteria { grad_tol: 1e-10, max_iters: 500 };
    let mut l2o = L2OStrategy::new(model);
    let out = run(&p, &x0, &mut l2o, &stop, 77);
    let mut ls = LineSearch::default();
    let out_ls = run(&p, &x0, &mut ls, &stop, 0);
    println!("l2o iters {} ls iters {}", out.iterations(), out_ls.iterations());
    println!("  k     f_l2o      |g|_l2o    pdev      pmin   pmax   |   f_ls       |g|_ls");
    for k in (0..out.records.len().max(out_ls.records.len())).step_by(5) {
        let r = out.records.get(k);
        let q = out_ls.records.get(k);
        let (pmin, pmax) = out.ps.get(k.saturating_sub(1)).map(|p| {
            (p.iter().cloned().fold(f64::INFINITY, f64::min), p.iter().cloned().fold(0.0f64, f64::max))
        }).unwrap_or((f64::NAN, f64::NAN));
        println!(
            "{k:4} {} {}",
            r.map(|r| format!("{:10.3e} {:10.3e} {:8.3} {:6.3} {:6.3}", r.f, r.grad_norm, r.p_dev_frob, pmin, pmax)).unwrap_or_else(|| " ".repeat(48)),
            q.map(|r| format!("| {:10.3e} {:10.3e}", r.f, r.grad_norm)).unwrap_or_default(),
        );
    }
}
