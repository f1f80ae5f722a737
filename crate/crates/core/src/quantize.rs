//! Discrete RIS phase quantization and the asymptotic average-power-ratio
//! bound.
//!
//! A `b`-bit codebook partitions `[0, 2pi)` into `2^b` uniform cells
//! `[2 pi l / 2^b, 2 pi (l+1) / 2^b)` and snaps each phase to its cell
//! midpoint `(2l+1) pi / 2^b`. Quantizing the continuous optimizer costs at
//! most a factor `2^{2b}/pi^2 * sin^2(pi/2^b)` of average received power as
//! the surface grows large.

use crate::channel::{amplitude_terms, objective_from_terms, IdealizedConfig};
use crate::linalg::{unit_circle_exp, RVec};
use crate::sca::{solve_spm_sca, SolverConfig};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use std::f64::consts::PI;

/// Uniform phase codebook with `2^b` midpoint levels.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PhaseCodebook {
    bits: u32,
}

impl PhaseCodebook {
    /// Panics when `bits` is 0 or wide enough to overflow the level count.
    pub fn new(bits: u32) -> Self {
        assert!(bits >= 1 && bits < 32, "phase resolution must be 1..=31 bits");
        Self { bits }
    }

    pub fn bits(&self) -> u32 {
        self.bits
    }

    pub fn levels(&self) -> u64 {
        1u64 << self.bits
    }

    /// The codebook phases `(2l+1) pi / 2^b`, `l = 0..2^b - 1`.
    pub fn phases(&self) -> Vec<f64> {
        (0..self.levels())
            .map(|l| (2 * l + 1) as f64 * PI / self.levels() as f64)
            .collect()
    }

    /// Midpoint of the cell containing `phase` (wrapped to `[0, 2pi)` first;
    /// the left cell edge belongs to the cell).
    pub fn quantize(&self, phase: f64) -> f64 {
        let two_pi = 2.0 * PI;
        let wrapped = phase.rem_euclid(two_pi);
        let cell_width = two_pi / self.levels() as f64;
        let cell = ((wrapped / cell_width) as u64).min(self.levels() - 1);
        (2 * cell + 1) as f64 * PI / self.levels() as f64
    }
}

/// Elementwise uniform quantization of a phase vector onto the codebook.
pub fn project_codebook(theta: &RVec, cb: &PhaseCodebook) -> RVec {
    theta.map(|p| cb.quantize(p))
}

/// Asymptotic lower bound on the average power ratio for a `b`-bit codebook:
/// `2^{2b}/pi^2 * sin^2(pi/2^b)`, increasing in `b` toward 1.
pub fn prop2_bound(bits: u32) -> f64 {
    let levels = (1u64 << bits) as f64;
    (levels / PI).powi(2) * (PI / levels).sin().powi(2)
}

/// Monte Carlo estimate of the average power ratio `E[Q_q] / E[Q^op]`.
///
/// Per trial: draw a RIS-only channel, maximize the sum power, quantize the
/// optimized RIS phases through the codebook and evaluate both powers with
/// the same transmit vector. Numerator and denominator are averaged
/// separately (ratio of means). Trials derive independent RNG streams from
/// the master generator, so the estimate is thread-count invariant.
pub fn quantized_power_ratio<R: Rng + ?Sized>(
    model: &IdealizedConfig,
    solver: &SolverConfig,
    cb: &PhaseCodebook,
    trials: usize,
    rng: &mut R,
) -> f64 {
    let master = rng.next_u64();
    let pairs: Vec<(f64, f64)> = (0..trials as u64)
        .into_par_iter()
        .map(|trial| {
            let mut trial_rng = ChaCha8Rng::seed_from_u64(master);
            trial_rng.set_stream(trial);
            quantization_trial(model, solver, cb, &mut trial_rng)
        })
        .collect();
    let (q_quant, q_opt) = pairs
        .iter()
        .fold((0.0, 0.0), |acc, &(q, o)| (acc.0 + q, acc.1 + o));
    q_quant / q_opt
}

/// One draw: returns `(Q_q, Q^op)`.
pub fn quantization_trial<R: Rng + ?Sized>(
    model: &IdealizedConfig,
    solver: &SolverConfig,
    cb: &PhaseCodebook,
    rng: &mut R,
) -> (f64, f64) {
    let real = model.draw(rng).expect("idealized draw");
    let sol = solve_spm_sca(&real, &solver.clone().with_seed(rng.next_u64()));
    let x = sol.x();
    let (c, a) = amplitude_terms(&real, &x).expect("conformant");
    let theta_q = project_codebook(&sol.theta, cb);
    let q_quant = objective_from_terms(&c, &a, &unit_circle_exp(&theta_q));
    (q_quant, sol.objective)
}
