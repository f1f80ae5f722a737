//! Exhaustive phase-grid search over small instances, used as a validation
//! oracle for the iterative solvers.
//!
//! The objective is evaluated through the composite channel (`||H(theta) x||^2`)
//! rather than through the solvers' lifted per-user terms, so the oracle
//! exercises an independent computation path.

use crate::channel::{composite_channel, received_powers, transmit_vector, ChannelRealization};
use crate::linalg::RVec;
use std::f64::consts::PI;

/// Best grid point found by an exhaustive search.
#[derive(Debug, Clone)]
pub struct GridOptimum {
    pub alpha: RVec,
    pub theta: RVec,
    /// Sum objective at the optimum (max-min searches report the min power).
    pub objective: f64,
}

fn grid_phase(idx: usize, levels: usize) -> f64 {
    2.0 * PI * idx as f64 / levels as f64
}

/// Advances a mixed-radix counter; returns false once it wraps around.
fn next_combo(digits: &mut [usize], levels: usize) -> bool {
    for d in digits.iter_mut() {
        *d += 1;
        if *d < levels {
            return true;
        }
        *d = 0;
    }
    false
}

fn search<F: FnMut(&RVec) -> f64>(
    real: &ChannelRealization,
    levels: usize,
    mut score: F,
) -> GridOptimum {
    let (m, n) = (real.antennas(), real.elements());
    assert!(m >= 1);
    // The per-user powers are invariant to a global phase of x, and the
    // uniform grid is closed under that rotation, so pinning alpha_1 = 0
    // searches the same set of objective values with levels^(M-1) points.
    let mut theta_idx = vec![0usize; n];
    let mut best = GridOptimum {
        alpha: RVec::zeros(m),
        theta: RVec::zeros(n),
        objective: f64::NEG_INFINITY,
    };
    loop {
        let theta = RVec::from_iterator(n, theta_idx.iter().map(|&i| grid_phase(i, levels)));
        let mut alpha_idx = vec![0usize; m - 1];
        loop {
            let mut alpha = RVec::zeros(m);
            for (j, &i) in alpha_idx.iter().enumerate() {
                alpha[j + 1] = grid_phase(i, levels);
            }
            let value = {
                let mut joint = theta.clone();
                let total = n + m;
                joint = joint.resize_vertically(total, 0.0);
                for j in 0..m {
                    joint[n + j] = alpha[j];
                }
                score(&joint)
            };
            if value > best.objective {
                best.objective = value;
                best.alpha = alpha;
                best.theta = theta.clone();
            }
            if m == 1 || !next_combo(&mut alpha_idx, levels) {
                break;
            }
        }
        if n == 0 || !next_combo(&mut theta_idx, levels) {
            break;
        }
    }
    best
}

/// Exhaustive `levels`-level grid search of the sum received power over all
/// transmit and RIS phases.
pub fn grid_search_sum_power(real: &ChannelRealization, levels: usize) -> GridOptimum {
    let n = real.elements();
    let mut cached_theta: Option<(RVec, crate::linalg::CMat)> = None;
    search(real, levels, |joint| {
        let theta = joint.rows(0, n).into_owned();
        let alpha = joint.rows(n, real.antennas()).into_owned();
        let refresh = match &cached_theta {
            Some((t, _)) => t != &theta,
            None => true,
        };
        if refresh {
            let h = composite_channel(real, &theta).expect("conformant");
            cached_theta = Some((theta.clone(), h));
        }
        let (_, h) = cached_theta.as_ref().unwrap();
        let x = transmit_vector(&alpha, real.power);
        (h * x).norm_squared()
    })
}

/// Exhaustive grid search of the max-min received power (before the
/// efficiency factor).
pub fn grid_search_max_min(real: &ChannelRealization, levels: usize) -> GridOptimum {
    let n = real.elements();
    let mut cached_theta: Option<(RVec, crate::linalg::CMat)> = None;
    search(real, levels, |joint| {
        let theta = joint.rows(0, n).into_owned();
        let alpha = joint.rows(n, real.antennas()).into_owned();
        let refresh = match &cached_theta {
            Some((t, _)) => t != &theta,
            None => true,
        };
        if refresh {
            let h = composite_channel(real, &theta).expect("conformant");
            cached_theta = Some((theta.clone(), h));
        }
        let (_, h) = cached_theta.as_ref().unwrap();
        let x = transmit_vector(&alpha, real.power);
        let q = received_powers(h, &x, 1.0).expect("conformant");
        q.min()
    })
}
