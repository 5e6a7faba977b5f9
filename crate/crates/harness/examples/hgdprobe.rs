use cwss_core::bfgs::{BfgsState, RunStatus, StopCriteria};
use cwss_core::sampling;
use cwss_core::strategies::{hgd_strategy, HgdConfig, StepStrategy, Hgd};
use cwss_core::Problem64;

fn main() {
    let eta: f64 = std::env::args().nth(1).unwrap_or_else(|| "5e-4".into()).parse().unwrap();
    let inner: usize = std::env::args().nth(2).unwrap_or_else(|| "20".into()).parse().unwrap();
    let p = Problem64::gen_least_squares(60, 120, 1).unwrap();
    let x0 = sampling::unit_gaussian_vector::<f64, _>(120, &mut sampling::stream_rng(1, "probe", 0));
    let mut state = BfgsState::init(&p, &x0).unwrap();
    let cfg = HgdConfig { eta, inner_steps: inner, clip_min: 1e-8 };
    println!("L = {:.2}", p.lipschitz());
    for k in 0..25 {
        if state.grad.norm() < 1e-10 { println!("converged at {k}"); break; }
        let d = state.search_direction().unwrap();
        let lam = p.lipschitz() * d.max_abs() * d.max_abs();
        let pm = match hgd_strategy(&p, &state, &d, &cfg) {
            Ok(pm) => pm,
            Err(e) => { println!("k={k}: strategy error {e}"); break; }
        };
        let f_before = state.f;
        if let Err(e) = state.apply_step(&p, &pm) { println!("k={k}: step error {e}"); break; }
        println!(
            "k={k:2} f {:10.3e} -> {:10.3e}  |g| {:9.3e}  Lam {:9.3e} etaLam {:8.2e}  P[min,max]=[{:.2e},{:.2e}] dev {:.2e} skip {}",
            f_before, state.f, state.grad.norm(), lam, eta * lam, pm.min_entry(), pm.max_entry(), pm.deviation_from_identity(), state.last_skip
        );
    }
    // Also full-run summary over a few seeds
    let stop = StopCriteria { grad_tol: 1e-10, max_iters: 500 };
    let mut diverged = 0; let mut iters = vec![];
    for seed in 0..16u64 {
        let p = Problem64::gen_least_squares(60, 120, seed).unwrap();
        let x0 = sampling::unit_gaussian_vector::<f64, _>(120, &mut sampling::stream_rng(seed, "probe2", 0));
        let mut s = Hgd::new(cfg);
        let out = cwss_core::bfgs::run(&p, &x0, &mut s, &stop, 0);
        if matches!(out.status, RunStatus::Failed(_)) { diverged += 1; } else { iters.push(out.iterations()); }
    }
    iters.sort_unstable();
    println!("eta {eta} inner {inner}: diverged {diverged}/16, iters {:?}", iters);
}
