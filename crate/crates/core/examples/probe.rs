// Scratch probe for calibration during development.
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use risbeam::admm::{admm_v_stage, AdmmConfig};
use risbeam::linalg::{sample_cscg_vec, unit_circle_exp, CVec, RVec};

fn main() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let c: Vec<CVec> = (0..2).map(|_| sample_cscg_vec(3, &mut rng)).collect();
    let a: Vec<Complex64> = (0..2).map(|_| sample_cscg_vec(1, &mut rng)[0]).collect();
    let v0 = unit_circle_exp(&RVec::zeros(3));
    let cfg = AdmmConfig::default();
    let free = admm_v_stage(&c, &a, &v0, &[0.0, 0.0], 0.05, &cfg).unwrap();
    let q_user = |v: &CVec, k: usize| -> f64 { (v.dotc(&c[k]) + a[k]).norm_sqr() };
    let tau0 = 1.3 * q_user(&free.value, 0);
    println!("free q0 = {}, q1 = {}", q_user(&free.value, 0), q_user(&free.value, 1));
    println!("tau0 = {tau0}");

    for (rho, iters) in [(0.1, 300usize), (0.1, 3000), (1.0, 300), (5.0, 3000)] {
        let cfg = AdmmConfig {
            inner_max_iters: iters,
            ..AdmmConfig::default()
        };
        let out = admm_v_stage(&c, &a, &v0, &[tau0, 0.0], rho, &cfg).unwrap();
        println!(
            "rho={rho} iters={iters}: violation={:.6}, converged={}, used={}  q0={:.4} q1={:.4} sum={:.4}",
            out.violation,
            out.converged,
            out.iterations,
            q_user(&out.value, 0),
            q_user(&out.value, 1),
            q_user(&out.value, 0) + q_user(&out.value, 1),
        );
    }
}
