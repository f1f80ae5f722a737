//! Sum-power maximization by alternating closed-form phase-alignment updates.
//!
//! Both subproblems (transmit phases for fixed RIS phases, and vice versa)
//! are non-convex quadratic programs over unit-modulus variables. Each is
//! handled by maximizing the linear minorant of the quadratic objective at
//! the current iterate, whose maximizer under a constant-envelope constraint
//! is a pure phase alignment:
//!
//! ```text
//! x <- sqrt(P/M) exp(j arg(B(v) x)),   B(v) = H^H H
//! v <- exp(j arg(C1(x) v + C2(x)))
//! ```
//!
//! with `C1 = sum_k c_k c_k^H` and `C2 = sum_k c_k a_k^*`. Because each step
//! maximizes a minorant that is tight at the current iterate, the objective
//! sequence is non-decreasing.

use crate::channel::{
    amplitude_terms, composite_channel, objective_from_terms, received_powers, transmit_vector,
    ChannelRealization,
};
use crate::linalg::{arg_phases, unit_circle_exp, CMat, CVec, Error, RVec};
use num_complex::Complex64;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::f64::consts::PI;

/// Termination and restart controls shared by the iterative solvers.
#[derive(Debug, Clone)]
pub struct SolverConfig {
    /// Relative objective-increase threshold for termination.
    pub epsilon: f64,
    /// Outer iteration cap.
    pub max_outer_iters: usize,
    /// Independent runs; the first starts from zero phases, later ones from
    /// uniform random phases. The best final objective wins.
    pub restarts: usize,
    /// Seed for restart initialization (and any solver-internal draws).
    pub seed: u64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            epsilon: 1e-5,
            max_outer_iters: 500,
            restarts: 1,
            seed: 0,
        }
    }
}

impl SolverConfig {
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_restarts(mut self, restarts: usize) -> Self {
        self.restarts = restarts.max(1);
        self
    }
}

/// Terminal state of a solver run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveStatus {
    /// The relative objective increase fell below the threshold.
    Converged,
    /// The iteration cap was reached first.
    MaxIters,
    /// Minimum-power constraints were still violated at the end (constrained
    /// solver only) - the instance is likely infeasible.
    QosViolated,
}

impl SolveStatus {
    pub fn label(self) -> &'static str {
        match self {
            SolveStatus::Converged => "converged",
            SolveStatus::MaxIters => "max_iters",
            SolveStatus::QosViolated => "qos_violated",
        }
    }
}

/// A feasible beamforming solution: transmit phases, RIS phases and the
/// bookkeeping around them. The constant-envelope and unit-modulus
/// constraints hold exactly by construction since only phases are stored.
#[derive(Debug, Clone)]
pub struct BeamformerSolution {
    /// Transmit phase per antenna (rad).
    pub alpha: RVec,
    /// RIS phase per element (rad).
    pub theta: RVec,
    /// Final objective `sum_k |v^H c_k + a_k|^2` (efficiency factor excluded).
    pub objective: f64,
    /// Received power per user, including the efficiency factor.
    pub user_powers: RVec,
    /// Objective after each outer iteration (index 0 = initial point).
    pub trace: Vec<f64>,
    pub status: SolveStatus,
    /// Transmit power budget, kept so `x()` can be reconstructed.
    pub power: f64,
    /// Maximum relative violation of the minimum-power constraints
    /// (0 for the unconstrained solvers).
    pub qos_violation: f64,
}

impl BeamformerSolution {
    /// Transmit vector `sqrt(P/M) exp(j alpha)`.
    pub fn x(&self) -> CVec {
        transmit_vector(&self.alpha, self.power)
    }

    /// Unit-modulus RIS vector `exp(j theta)`.
    pub fn v(&self) -> CVec {
        unit_circle_exp(&self.theta)
    }
}

/// Composite channel for a solver iterate `v = exp(j theta)`.
pub fn composite_from_v(real: &ChannelRealization, v: &CVec) -> Result<CMat, Error> {
    composite_channel(real, &arg_phases(v))
}

/// Transmit-side minorant maximizer: `sqrt(P/M) exp(j arg(H^H H x_prev))`.
///
/// Never decreases `||H x||^2`; a zero channel maps everything to the
/// all-ones phase profile through the `arg(0) = 0` convention.
pub fn x_update(h: &CMat, x_prev: &CVec, power: f64) -> Result<CVec, Error> {
    if x_prev.len() != h.ncols() {
        return Err(Error::DimensionMismatch(format!(
            "x has {} entries, H has {} columns",
            x_prev.len(),
            h.ncols()
        )));
    }
    let direction = h.adjoint() * (h * x_prev);
    Ok(transmit_vector(&arg_phases(&direction), power))
}

/// Per-user lifting matrices `A_k` (N x M) with `c_k = A_k x`, built once per
/// realization: row `n` of `A_k` is `H_r[k, n] * G[n, :]`.
pub fn lifting_mats(real: &ChannelRealization) -> Vec<CMat> {
    let (n, m) = (real.elements(), real.antennas());
    (0..real.users())
        .map(|k| CMat::from_fn(n, m, |i, j| real.h_r[(k, i)] * real.g[(i, j)]))
        .collect()
}

/// Conjugated direct-channel rows `h_dk` such that `a_k = h_dk^H x`.
pub fn direct_rows(real: &ChannelRealization) -> Vec<CVec> {
    (0..real.users())
        .map(|k| {
            CVec::from_iterator(
                real.antennas(),
                (0..real.antennas()).map(|j| real.h_d[(k, j)].conj()),
            )
        })
        .collect()
}

/// RIS-side minorant maximizer: `exp(j arg(C1(x) v_prev + C2(x)))` with
/// `C1 = sum_k c_k c_k^H` and `C2 = sum_k c_k a_k^*`.
///
/// The quadratic form `C1` is materialized, so one update costs
/// `O(K N^2)` on top of the `O(K N M)` products `c_k = A_k x`.
pub fn v_update(a_mats: &[CMat], h_dk: &[CVec], x: &CVec, v_prev: &CVec) -> Result<CVec, Error> {
    if a_mats.len() != h_dk.len() {
        return Err(Error::DimensionMismatch(
            "A_k and h_dk lists disagree".to_string(),
        ));
    }
    let n = v_prev.len();
    let mut c1 = CMat::zeros(n, n);
    let mut c2 = CVec::zeros(n);
    for (a_k, h_k) in a_mats.iter().zip(h_dk.iter()) {
        if a_k.nrows() != n || a_k.ncols() != x.len() || h_k.len() != x.len() {
            return Err(Error::DimensionMismatch(format!(
                "A_k is {}x{}, h_dk has {}, expected {}x{} and {}",
                a_k.nrows(),
                a_k.ncols(),
                h_k.len(),
                n,
                x.len(),
                x.len()
            )));
        }
        let c_k = a_k * x;
        let a_scalar = h_k.dotc(x);
        c1 += &c_k * c_k.adjoint();
        c2 += &c_k * a_scalar.conj();
    }
    let direction = c1 * v_prev + c2;
    Ok(unit_circle_exp(&arg_phases(&direction)))
}

/// One independent SCA run from the given starting phases.
fn run_once(
    real: &ChannelRealization,
    cfg: &SolverConfig,
    alpha0: RVec,
    theta0: RVec,
) -> BeamformerSolution {
    let a_mats = lifting_mats(real);
    let h_dk = direct_rows(real);
    let mut x = transmit_vector(&alpha0, real.power);
    let mut v = unit_circle_exp(&theta0);
    let eval = |x: &CVec, v: &CVec| -> f64 {
        let (c, a) = amplitude_terms(real, x).expect("conformant by construction");
        objective_from_terms(&c, &a, v)
    };
    let mut trace = vec![eval(&x, &v)];
    let mut status = SolveStatus::MaxIters;
    for _ in 0..cfg.max_outer_iters {
        let h = composite_from_v(real, &v).expect("conformant by construction");
        x = x_update(&h, &x, real.power).expect("conformant by construction");
        if real.elements() > 0 {
            v = v_update(&a_mats, &h_dk, &x, &v).expect("conformant by construction");
        }
        let q = eval(&x, &v);
        let q_prev = *trace.last().unwrap();
        trace.push(q);
        if q - q_prev < cfg.epsilon * q_prev.max(f64::MIN_POSITIVE) {
            status = SolveStatus::Converged;
            break;
        }
    }
    let objective = *trace.last().unwrap();
    let h = composite_from_v(real, &v).expect("conformant by construction");
    let user_powers = received_powers(&h, &x, real.eta).expect("conformant by construction");
    BeamformerSolution {
        alpha: arg_phases(&x),
        theta: arg_phases(&v),
        objective,
        user_powers,
        trace,
        status,
        power: real.power,
        qos_violation: 0.0,
    }
}

fn uniform_phases<R: Rng + ?Sized>(len: usize, rng: &mut R) -> RVec {
    RVec::from_iterator(len, (0..len).map(|_| rng.random_range(-PI..PI)))
}

/// Sum-power maximization by alternating SCA updates.
///
/// Runs `cfg.restarts` independent starts (zero phases first, then uniform
/// random ones) and returns the best final objective. Within each run the
/// objective trace is non-decreasing and the iteration stops when its
/// fractional increase drops below `cfg.epsilon`.
pub fn solve_spm_sca(real: &ChannelRealization, cfg: &SolverConfig) -> BeamformerSolution {
    let (m, n) = (real.antennas(), real.elements());
    let mut best: Option<BeamformerSolution> = None;
    for restart in 0..cfg.restarts.max(1) {
        let (alpha0, theta0) = if restart == 0 {
            (RVec::zeros(m), RVec::zeros(n))
        } else {
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
            rng.set_stream(restart as u64);
            (uniform_phases(m, &mut rng), uniform_phases(n, &mut rng))
        };
        let sol = run_once(real, cfg, alpha0, theta0);
        let better = best
            .as_ref()
            .map(|b| sol.objective > b.objective)
            .unwrap_or(true);
        if better {
            best = Some(sol);
        }
    }
    best.expect("at least one restart")
}

/// Optimizes only the transmit phases for a fixed RIS phase vector; used by
/// the fixed-RIS and no-RIS baselines.
pub fn solve_transmit_only(
    real: &ChannelRealization,
    theta: &RVec,
    cfg: &SolverConfig,
) -> BeamformerSolution {
    let h = composite_channel(real, theta).expect("conformant theta");
    let mut x = transmit_vector(&RVec::zeros(real.antennas()), real.power);
    let mut trace = vec![(&h * &x).norm_squared()];
    let mut status = SolveStatus::MaxIters;
    for _ in 0..cfg.max_outer_iters {
        x = x_update(&h, &x, real.power).expect("conformant by construction");
        let q = (&h * &x).norm_squared();
        let q_prev = *trace.last().unwrap();
        trace.push(q);
        if q - q_prev < cfg.epsilon * q_prev.max(f64::MIN_POSITIVE) {
            status = SolveStatus::Converged;
            break;
        }
    }
    let user_powers = received_powers(&h, &x, real.eta).expect("conformant");
    BeamformerSolution {
        alpha: arg_phases(&x),
        theta: theta.clone(),
        objective: *trace.last().unwrap(),
        user_powers,
        trace,
        status,
        power: real.power,
        qos_violation: 0.0,
    }
}

/// Checks that a trace never decreases beyond a relative slack.
pub fn trace_is_monotone(trace: &[f64], rel_slack: f64) -> bool {
    trace
        .windows(2)
        .all(|w| w[1] >= w[0] - rel_slack * w[0].abs().max(1e-300))
}
