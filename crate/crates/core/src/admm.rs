//! Sum-power maximization under per-user minimum received-power constraints,
//! via nested SCA + consensus ADMM.
//!
//! The outer loop alternates a transmit-side and a RIS-side stage. Each stage
//! linearizes the quadratic objective at the current iterate and maximizes
//! the resulting linear function over {constant envelope} intersected with
//! the per-user sets {z : |h_k^H z|^2 >= p_k/eta} by consensus ADMM: a global
//! variable handles the envelope constraint in closed form, one local copy
//! per user is projected onto its power half-space, and scaled duals tie
//! them together. The per-user projections inside one iteration are
//! independent of each other.
//!
//! The RIS-side stage runs in the lifted space `b = [t*v; t]` of `N+1`
//! unit-modulus entries and recovers `v` as `b_1..N / b_{N+1}`.

use crate::channel::{received_powers, transmit_vector, ChannelRealization};
use crate::linalg::{arg_phases, hermitian_part, lambda_max, unit_circle_exp, CMat, CVec, Error, RVec};
use crate::channel::{amplitude_terms, objective_from_terms};
use crate::sca::composite_from_v;
use crate::sca::{solve_spm_sca, trace_is_monotone, BeamformerSolution, SolveStatus, SolverConfig};
use num_complex::Complex64;

/// Relative violation under which an iterate counts as feasible; ADMM output
/// need not be exactly feasible at truncation.
pub const QOS_FEASIBLE_TOL: f64 = 1e-3;

/// Per-user minimum received power requirements.
#[derive(Debug, Clone)]
pub struct QosSpec {
    /// Minimum received power per user, in Watts.
    pub p: Vec<f64>,
    /// Conversion efficiency dividing the thresholds: constraints read
    /// `|h_k^H x|^2 >= p_k / eta`.
    pub eta: f64,
}

impl QosSpec {
    pub fn uniform(users: usize, p: f64, eta: f64) -> Self {
        Self {
            p: vec![p; users],
            eta,
        }
    }

    pub fn unconstrained(users: usize) -> Self {
        Self::uniform(users, 0.0, 1.0)
    }

    /// Thresholds `p_k / eta` on the raw powers `|h_k^H x|^2`.
    pub fn thresholds(&self) -> Vec<f64> {
        self.p.iter().map(|&p| p / self.eta).collect()
    }

    fn validate(&self, users: usize) -> Result<(), Error> {
        if self.p.len() != users {
            return Err(Error::DimensionMismatch(format!(
                "QoS spec has {} entries for {} users",
                self.p.len(),
                users
            )));
        }
        if self.p.iter().any(|&p| p < 0.0) || !(self.eta > 0.0 && self.eta <= 1.0) {
            return Err(Error::Config(
                "QoS powers must be >= 0 and eta in (0, 1]".to_string(),
            ));
        }
        Ok(())
    }
}

/// ADMM penalty and iteration controls.
#[derive(Debug, Clone)]
pub struct AdmmConfig {
    /// Transmit-side penalty; `None` picks `0.1 * lambda_max(H^H H) / K`.
    pub rho: Option<f64>,
    /// RIS-side penalty; `None` picks `0.1 * lambda_max(L) / K` for the
    /// lifted quadratic form of that stage.
    pub rho_bar: Option<f64>,
    pub inner_max_iters: usize,
    /// Residual tolerance, scaled by sqrt(dimension) inside the stages.
    pub inner_tol: f64,
    /// Relative objective-increase threshold of the outer loop.
    pub outer_epsilon: f64,
    pub max_outer_iters: usize,
    /// Controls of the unconstrained solve used as the starting point.
    pub init: SolverConfig,
}

impl Default for AdmmConfig {
    fn default() -> Self {
        Self {
            rho: None,
            rho_bar: None,
            inner_max_iters: 300,
            inner_tol: 1e-6,
            outer_epsilon: 1e-5,
            max_outer_iters: 150,
            init: SolverConfig::default(),
        }
    }
}

/// Nearest point of `{e : |h^H e|^2 >= tau}` to `z`.
///
/// Feasible points return unchanged; otherwise the point moves along
/// `h h^H z` until the constraint is tight. When `h^H z` is exactly zero the
/// closed form is directionless and any boundary point at distance
/// `sqrt(tau)/||h||` is optimal; the phase-zero one is returned. A zero `h`
/// with `tau > 0` makes the set empty and `z` is returned as-is (the caller
/// sees the violation in its diagnostics).
pub fn qos_halfspace_project(h: &CVec, tau: f64, z: &CVec) -> CVec {
    if tau <= 0.0 {
        return z.clone();
    }
    let hz = h.dotc(z);
    if hz.norm_sqr() >= tau {
        return z.clone();
    }
    let h_norm_sq = h.norm_squared();
    if h_norm_sq == 0.0 {
        return z.clone();
    }
    let target = tau.sqrt();
    if hz.norm() == 0.0 {
        return z + h * Complex64::new(target / h_norm_sq, 0.0);
    }
    let scale = (target - hz.norm()) / (h_norm_sq * hz.norm());
    z + h * (hz * scale)
}

/// Largest relative shortfall `(tau_k - q_k)/tau_k` over constrained users,
/// clamped at zero.
pub fn max_relative_violation(raw_powers: &RVec, thresholds: &[f64]) -> f64 {
    thresholds
        .iter()
        .enumerate()
        .filter(|(_, &t)| t > 0.0)
        .map(|(k, &t)| ((t - raw_powers[k]) / t).max(0.0))
        .fold(0.0, f64::max)
}

/// Result of one ADMM stage: the global variable, its constraint violation
/// and convergence diagnostics.
#[derive(Debug, Clone)]
pub struct StageOutcome {
    pub value: CVec,
    /// Max relative QoS violation of `value`.
    pub violation: f64,
    /// False when the residuals still exceeded tolerance at the cap.
    pub converged: bool,
    pub iterations: usize,
}

/// Generic consensus ADMM over unit-modulus global variables: maximizes
/// `Re{d^H z}` over `{|z_i| = amp}` intersected with the per-user power sets.
/// Both stages reduce to this after forming their linear term `d`.
///
/// The penalty is adapted by residual balancing (factor 2 when one residual
/// exceeds the other tenfold, with the scaled duals rescaled to match).
/// Without this a fixed penalty can stall: the scaled duals only grow to the
/// size of one projection step, so their pull on the global update is capped
/// at `2 rho ||correction||` and a large linear term would pin `z` outside
/// the constraint sets forever.
fn consensus_admm(
    d: &CVec,
    amp: f64,
    z_init: &CVec,
    constraints: &[(CVec, f64)],
    rho_init: f64,
    cfg: &AdmmConfig,
) -> StageOutcome {
    let dim = z_init.len();
    let scale = (dim as f64).sqrt();
    let mut rho = rho_init;
    let mut z = z_init.clone();
    let mut locals: Vec<CVec> = constraints
        .iter()
        .map(|(h, tau)| qos_halfspace_project(h, *tau, &z))
        .collect();
    let mut duals: Vec<CVec> = constraints.iter().map(|_| CVec::zeros(dim)).collect();
    let mut converged = false;
    let mut iterations = 0;
    for t in 0..cfg.inner_max_iters {
        iterations = t + 1;
        let two_rho = Complex64::new(2.0 * rho, 0.0);
        let mut direction = d.clone();
        for (e, u) in locals.iter().zip(duals.iter()) {
            direction += (e + u) * two_rho;
        }
        let z_new = unit_circle_exp(&arg_phases(&direction)) * Complex64::new(amp, 0.0);
        let mut primal = 0.0f64;
        for (k, (h, tau)) in constraints.iter().enumerate() {
            locals[k] = qos_halfspace_project(h, *tau, &(&z_new - &duals[k]));
            let gap = &locals[k] - &z_new;
            primal = primal.max(gap.norm());
            duals[k] += gap;
        }
        let dual = (&z_new - &z).norm();
        z = z_new;
        if primal <= cfg.inner_tol * scale && dual <= cfg.inner_tol * scale {
            converged = true;
            break;
        }
        if (t + 1) % 10 == 0 {
            if primal > 10.0 * dual.max(cfg.inner_tol * scale) {
                rho *= 2.0;
                for u in &mut duals {
                    *u *= Complex64::new(0.5, 0.0);
                }
            } else if dual > 10.0 * primal.max(cfg.inner_tol * scale) {
                rho *= 0.5;
                for u in &mut duals {
                    *u *= Complex64::new(2.0, 0.0);
                }
            }
        }
    }
    let raw = RVec::from_iterator(
        constraints.len(),
        constraints.iter().map(|(h, _)| h.dotc(&z).norm_sqr()),
    );
    let thresholds: Vec<f64> = constraints.iter().map(|(_, t)| *t).collect();
    StageOutcome {
        violation: max_relative_violation(&raw, &thresholds),
        value: z,
        converged,
        iterations,
    }
}

/// Transmit-side stage: maximizes the minorant `Re{x_init^H H^H H x}` over
/// constant-envelope `x` meeting the per-user constraints `|h_k^H x|^2 >=
/// tau_k` for the fixed channel `H`.
pub fn admm_x_stage(
    h: &CMat,
    x_init: &CVec,
    thresholds: &[f64],
    rho: f64,
    cfg: &AdmmConfig,
) -> Result<StageOutcome, Error> {
    let m = h.ncols();
    if x_init.len() != m {
        return Err(Error::DimensionMismatch(format!(
            "x has {} entries, H has {} columns",
            x_init.len(),
            m
        )));
    }
    if thresholds.len() != h.nrows() {
        return Err(Error::DimensionMismatch(format!(
            "{} thresholds for {} users",
            thresholds.len(),
            h.nrows()
        )));
    }
    let amp = x_init[0].norm();
    let d = h.adjoint() * (h * x_init);
    let constraints: Vec<(CVec, f64)> = (0..h.nrows())
        .map(|k| {
            let hk = CVec::from_iterator(m, (0..m).map(|j| h[(k, j)].conj()));
            (hk, thresholds[k])
        })
        .collect();
    Ok(consensus_admm(&d, amp, x_init, &constraints, rho, cfg))
}

/// RIS-side stage in the lifted space: `c_k`, `a_k` describe user `k`'s
/// amplitude `v^H c_k + a_k`; returns the recovered unit-modulus `v`.
pub fn admm_v_stage(
    c: &[CVec],
    a: &[Complex64],
    v_init: &CVec,
    thresholds: &[f64],
    rho_bar: f64,
    cfg: &AdmmConfig,
) -> Result<StageOutcome, Error> {
    let n = v_init.len();
    if c.len() != a.len() || c.len() != thresholds.len() {
        return Err(Error::DimensionMismatch(
            "c_k, a_k and thresholds disagree".to_string(),
        ));
    }
    // Lift: l_k = [c_k; a_k], b = [t v; t]; |l_k^H b| = |v^H c_k + a_k|.
    let lifted: Vec<(CVec, f64)> = c
        .iter()
        .zip(a.iter())
        .zip(thresholds.iter())
        .map(|((ck, &ak), &tau)| {
            if ck.len() != n {
                return Err(Error::DimensionMismatch(format!(
                    "c_k has {} entries, expected {}",
                    ck.len(),
                    n
                )));
            }
            let mut l = CVec::zeros(n + 1);
            l.rows_mut(0, n).copy_from(ck);
            l[n] = ak;
            Ok((l, tau))
        })
        .collect::<Result<_, Error>>()?;
    let mut b_init = CVec::zeros(n + 1);
    b_init.rows_mut(0, n).copy_from(v_init);
    b_init[n] = Complex64::new(1.0, 0.0);
    // Linear term L b_init with L = sum_k l_k l_k^H.
    let mut d = CVec::zeros(n + 1);
    for (l, _) in &lifted {
        d += l * l.dotc(&b_init);
    }
    let outcome = consensus_admm(&d, 1.0, &b_init, &lifted, rho_bar, cfg);
    let b = outcome.value;
    let pivot = b[n].conj();
    let v = CVec::from_iterator(n, (0..n).map(|i| b[i] * pivot));
    // Violation is invariant under the de-lift (|l^H b| = |l^H [v;1]|), so
    // the lifted diagnostics carry over.
    Ok(StageOutcome {
        value: v,
        violation: outcome.violation,
        converged: outcome.converged,
        iterations: outcome.iterations,
    })
}

fn default_rho_x(h: &CMat, users: usize) -> Result<f64, Error> {
    let b = hermitian_part(&(h.adjoint() * h));
    Ok(0.1 * lambda_max(&b)?.max(f64::MIN_POSITIVE) / users as f64)
}

fn default_rho_v(c: &[CVec], a: &[Complex64], users: usize) -> Result<f64, Error> {
    let n = c.first().map(|v| v.len()).unwrap_or(0);
    let mut l_mat = CMat::zeros(n + 1, n + 1);
    for (ck, &ak) in c.iter().zip(a.iter()) {
        let mut l = CVec::zeros(n + 1);
        l.rows_mut(0, n).copy_from(ck);
        l[n] = ak;
        l_mat += &l * l.adjoint();
    }
    Ok(0.1 * lambda_max(&hermitian_part(&l_mat))?.max(f64::MIN_POSITIVE) / users as f64)
}

struct Iterate {
    x: CVec,
    v: CVec,
    objective: f64,
    violation: f64,
}

fn evaluate(real: &ChannelRealization, x: &CVec, v: &CVec, thresholds: &[f64]) -> Iterate {
    let (c, a) = amplitude_terms(real, x).expect("conformant");
    let objective = objective_from_terms(&c, &a, v);
    let raw = RVec::from_iterator(
        real.users(),
        c.iter().zip(a.iter()).map(|(ck, &ak)| {
            let mut acc = ak;
            for j in 0..v.len() {
                acc += v[j].conj() * ck[j];
            }
            acc.norm_sqr()
        }),
    );
    Iterate {
        x: x.clone(),
        v: v.clone(),
        objective,
        violation: max_relative_violation(&raw, thresholds),
    }
}

/// Runs both ADMM stages once from the current iterate; returns the
/// candidate and whether each stage's inner loop converged.
fn outer_step(
    real: &ChannelRealization,
    cur: &Iterate,
    thresholds: &[f64],
    cfg: &AdmmConfig,
) -> Result<(Iterate, bool), Error> {
    let h = composite_from_v(real, &cur.v)?;
    let rho = match cfg.rho {
        Some(r) => r,
        None => default_rho_x(&h, real.users())?,
    };
    let x_stage = admm_x_stage(&h, &cur.x, thresholds, rho, cfg)?;
    let x_new = x_stage.value;

    let (v_new, v_converged) = if real.elements() > 0 {
        let (c, a) = amplitude_terms(real, &x_new)?;
        let rho_bar = match cfg.rho_bar {
            Some(r) => r,
            None => default_rho_v(&c, &a, real.users())?,
        };
        let v_stage = admm_v_stage(&c, &a, &cur.v, thresholds, rho_bar, cfg)?;
        (v_stage.value, v_stage.converged)
    } else {
        (cur.v.clone(), true)
    };
    let cand = evaluate(real, &x_new, &v_new, thresholds);
    Ok((cand, x_stage.converged && v_converged))
}

/// Stage-wise safeguarded step for the monotone phase: each stage's
/// candidate replaces the current variable only if the pair stays feasible
/// and the objective does not decrease.
fn monotone_step(
    real: &ChannelRealization,
    cur: &Iterate,
    thresholds: &[f64],
    cfg: &AdmmConfig,
) -> Result<Iterate, Error> {
    let slack = 1.0 - 1e-12;
    let h = composite_from_v(real, &cur.v)?;
    let rho = match cfg.rho {
        Some(r) => r,
        None => default_rho_x(&h, real.users())?,
    };
    let x_stage = admm_x_stage(&h, &cur.x, thresholds, rho, cfg)?;
    let after_x = evaluate(real, &x_stage.value, &cur.v, thresholds);
    let mut accepted = if after_x.violation <= QOS_FEASIBLE_TOL
        && after_x.objective >= cur.objective * slack
    {
        after_x
    } else {
        evaluate(real, &cur.x, &cur.v, thresholds)
    };

    if real.elements() > 0 {
        let (c, a) = amplitude_terms(real, &accepted.x)?;
        let rho_bar = match cfg.rho_bar {
            Some(r) => r,
            None => default_rho_v(&c, &a, real.users())?,
        };
        let v_stage = admm_v_stage(&c, &a, &accepted.v, thresholds, rho_bar, cfg)?;
        let after_v = evaluate(real, &accepted.x, &v_stage.value, thresholds);
        if after_v.violation <= QOS_FEASIBLE_TOL && after_v.objective >= accepted.objective * slack
        {
            accepted = after_v;
        }
    }
    Ok(accepted)
}

/// Constrained sum-power maximization (alternating SCA + consensus ADMM).
///
/// The run starts from the unconstrained solution. If that point violates
/// the constraints, a feasibility phase iterates the two ADMM stages,
/// accepting steps while the violation improves; the recorded objective
/// trace begins at the first feasible iterate, after which every accepted
/// step keeps feasibility and never decreases the objective. A run that
/// never reaches the feasible region returns its least-violating iterate
/// with status [`SolveStatus::QosViolated`].
pub fn solve_spmc(
    real: &ChannelRealization,
    qos: &QosSpec,
    cfg: &AdmmConfig,
) -> Result<BeamformerSolution, Error> {
    let warm = solve_spm_sca(real, &cfg.init);
    solve_spmc_from(real, qos, cfg, &warm)
}

/// [`solve_spmc`] with a caller-provided unconstrained warm start (shared by
/// the max-min bisection to avoid re-solving it).
pub fn solve_spmc_from(
    real: &ChannelRealization,
    qos: &QosSpec,
    cfg: &AdmmConfig,
    warm: &BeamformerSolution,
) -> Result<BeamformerSolution, Error> {
    qos.validate(real.users())?;
    let thresholds = qos.thresholds();
    let mut cur = evaluate(real, &warm.x(), &warm.v(), &thresholds);

    // Feasibility phase: chase the constraint set, keeping the iterate with
    // the smallest violation. Patience guards against stalls.
    let mut spent = 0;
    if cur.violation > QOS_FEASIBLE_TOL {
        let mut since_improvement = 0;
        while spent < cfg.max_outer_iters {
            spent += 1;
            let (cand, _) = outer_step(real, &cur, &thresholds, cfg)?;
            if cand.violation < cur.violation {
                since_improvement = 0;
                cur = cand;
            } else {
                since_improvement += 1;
            }
            if cur.violation <= QOS_FEASIBLE_TOL {
                break;
            }
            if since_improvement >= 10 {
                break;
            }
        }
    }

    if cur.violation > QOS_FEASIBLE_TOL {
        return Ok(finish(real, cur, vec![], SolveStatus::QosViolated));
    }

    // Monotone phase: safeguarded ascent inside the feasible region.
    let mut trace = vec![cur.objective];
    let mut status = SolveStatus::MaxIters;
    while spent < cfg.max_outer_iters {
        spent += 1;
        let next = monotone_step(real, &cur, &thresholds, cfg)?;
        let prev = cur.objective;
        cur = next;
        trace.push(cur.objective);
        if cur.objective - prev < cfg.outer_epsilon * prev.max(f64::MIN_POSITIVE) {
            status = SolveStatus::Converged;
            break;
        }
    }
    debug_assert!(trace_is_monotone(&trace, 1e-9));
    Ok(finish(real, cur, trace, status))
}

fn finish(
    real: &ChannelRealization,
    cur: Iterate,
    trace: Vec<f64>,
    status: SolveStatus,
) -> BeamformerSolution {
    let theta = arg_phases(&cur.v);
    let h = composite_from_v(real, &cur.v).expect("conformant");
    let user_powers = received_powers(&h, &cur.x, real.eta).expect("conformant");
    let trace = if trace.is_empty() {
        vec![cur.objective]
    } else {
        trace
    };
    BeamformerSolution {
        alpha: arg_phases(&cur.x),
        theta,
        objective: cur.objective,
        user_powers,
        trace,
        status,
        power: real.power,
        qos_violation: cur.violation,
    }
}

/// Bisection estimate of the max-min received power level (before the
/// efficiency factor): the largest uniform threshold `tau` for which the
/// constrained solver reaches feasibility with `p_k = eta * tau` for all
/// users. The unconstrained sum power divided by `K` brackets the search
/// from above. Relative bisection tolerance: 1%.
pub fn estimate_qmm(real: &ChannelRealization, cfg: &AdmmConfig) -> Result<f64, Error> {
    let warm = solve_spm_sca(real, &cfg.init);
    let users = real.users();
    let mut hi = warm.objective / users as f64;
    if hi <= 0.0 {
        return Ok(0.0);
    }
    let feasible = |tau: f64| -> Result<bool, Error> {
        let qos = QosSpec::uniform(users, real.eta * tau, real.eta);
        let sol = solve_spmc_from(real, &qos, cfg, &warm)?;
        Ok(sol.status != SolveStatus::QosViolated)
    };
    if feasible(hi)? {
        return Ok(hi);
    }
    let mut lo = 0.0;
    while hi - lo > 0.01 * hi {
        let mid = 0.5 * (lo + hi);
        if feasible(mid)? {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(lo)
}
