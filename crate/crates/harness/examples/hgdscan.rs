use cwss_core::bfgs::{RunStatus, StopCriteria};
use cwss_core::sampling;
use cwss_core::strategies::{Hgd, HgdConfig, LineSearch, StepStrategy};
use cwss_core::Problem64;

fn scan(fam: &str, eta: f64, mk_problem: &dyn Fn(u64) -> Problem64) {
    let stop = StopCriteria { grad_tol: 1e-10, max_iters: 500 };
    let mut diverged = 0;
    let mut iters = vec![];
    let mut f_at_ls_median: Vec<(f64, f64)> = vec![];
    for seed in 0..24u64 {
        let p = mk_problem(seed);
        let n = p.dimension();
        let x0 = sampling::unit_gaussian_vector::<f64, _>(n, &mut sampling::stream_rng(seed, "scan", 0));
        let mut hgd = Hgd::new(HgdConfig { eta, inner_steps: 20, clip_min: 1e-8 });
        let out = cwss_core::bfgs::run(&p, &x0, &mut hgd, &stop, 0);
        let mut ls = LineSearch::default();
        let out_ls = cwss_core::bfgs::run(&p, &x0, &mut ls, &stop, 0);
        match out.status {
            RunStatus::Failed(_) => diverged += 1,
            _ => {
                iters.push(out.iterations());
                // f at matched iteration count = min(final ks)
                let k = out.iterations().min(out_ls.iterations());
                let fh = out.records.get(k).map(|r| r.f).unwrap_or(out.records.last().unwrap().f);
                let fl = out_ls.records.get(k).map(|r| r.f).unwrap_or(out_ls.records.last().unwrap().f);
                f_at_ls_median.push((fh, fl));
            }
        }
    }
    iters.sort_unstable();
    let med = iters.get(iters.len() / 2).copied().unwrap_or(9999);
    let wins = f_at_ls_median.iter().filter(|(h, l)| h <= l).count();
    println!("{fam:<10} eta {eta:.0e}: diverged {diverged:>2}/24 median {med:>4}  hgd<=ls at matched k: {wins}/{}", f_at_ls_median.len());
}

fn main() {
    for eta in [1e-2f64, 1e-3] {
        scan("lse d=50", eta, &|s| Problem64::gen_logsumexp(120, 50, s).unwrap());
        scan("lse d=20", eta, &|s| Problem64::gen_logsumexp(120, 20, s).unwrap());
        scan("logistic", eta, &|s| Problem64::gen_logistic(120, 60, 1e-2, s).unwrap());
    }
}
