//! Beamforming solvers and simulation harness for RIS-aided constant-envelope
//! wireless power transfer.
//!
//! A base station with `M` antennas behind a single RF chain (phase shifters
//! only, so every antenna emits `sqrt(P/M) * exp(j*alpha_m)`) charges `K`
//! single-antenna users, assisted by reconfigurable intelligent surfaces with
//! `N` passive phase-shift elements in total. The effective channel is
//!
//! ```text
//! H(theta) = H_r * diag(exp(-j*theta)) * G + H_d
//! ```
//!
//! and the received power of user `k` is `eta * |h_k^H x|^2`.
//!
//! Three solvers are provided:
//!
//! * [`sca::solve_spm_sca`] — sum-power maximization by alternating
//!   closed-form phase-alignment updates (successive convex approximation).
//! * [`sdr::solve_spm_sdr`] — the same problem via semidefinite relaxation
//!   with Gaussian randomization rounding.
//! * [`admm::solve_spmc`] — sum-power maximization under per-user minimum
//!   received-power constraints, via nested SCA + consensus ADMM.
//!
//! [`quantize`] handles discrete RIS phase codebooks and the associated
//! average-power-ratio bound, and [`experiments`] is a reproducible Monte
//! Carlo harness (power scaling law, quantization loss, algorithm parity,
//! fairness trade-off) with CSV/SVG output.

pub mod admm;
pub mod bruteforce;
pub mod channel;
pub mod experiments;
pub mod linalg;
pub mod quantize;
pub mod sca;
pub mod sdr;


pub use linalg::{CMat, CVec, Error, RVec};

