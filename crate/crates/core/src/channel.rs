//! Channel generation: the two-RIS simulation scenario, idealized RIS-only
//! models for the asymptotic checks, and assembly of the composite multiuser
//! channel.
//!
//! Conventions used throughout the crate:
//!
//! * `H_d` is `K x M` (BS -> users), `H_r` is `K x N` (RIS -> users, surfaces
//!   concatenated column-wise), `S` is `N x M` (BS -> RIS, surfaces stacked
//!   row-wise) and `G = diag(beta) * S` folds the fixed reflection amplitudes
//!   into the BS-RIS link.
//! * For a RIS phase vector `theta`, the composite channel is
//!   `H(theta) = H_r * diag(exp(-j*theta)) * G + H_d`, i.e. `H - H_d` is
//!   linear in `exp(-j*theta)`. Solvers work with the unit-modulus vector
//!   `v = exp(j*theta)`, in terms of which the received amplitude of user `k`
//!   is `v^H c_k + a_k`, where `c_k` weights `G x` by the k-th row of `H_r`
//!   and `a_k` is the k-th entry of `H_d x`.

use crate::linalg::{arg_phases, sample_cscg, unit_circle_exp, CMat, CVec, Error, RVec};
use num_complex::Complex64;
use rand::Rng;
use std::f64::consts::PI;

/// Speed of light in m/s, used to derive the carrier wavelength.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// One reflecting surface: element count, per-element reflection amplitudes,
/// position in the plane and the orientation of its (linear) element array.
#[derive(Debug, Clone)]
pub struct RisConfig {
    /// Per-element reflection amplitudes, all in `[0, 1]`; its length is the
    /// element count of this surface.
    pub amplitudes: Vec<f64>,
    /// Surface position in meters, BS at the origin.
    pub position: [f64; 2],
    /// Orientation of the element array relative to the global x axis (rad).
    pub orientation: f64,
}

impl RisConfig {
    /// Surface with `n` elements of uniform amplitude `beta`.
    pub fn uniform(n: usize, beta: f64, position: [f64; 2], orientation: f64) -> Self {
        Self {
            amplitudes: vec![beta; n],
            position,
            orientation,
        }
    }

    pub fn elements(&self) -> usize {
        self.amplitudes.len()
    }

    fn validate(&self) -> Result<(), Error> {
        if self.amplitudes.iter().any(|&b| !(0.0..=1.0).contains(&b)) {
            return Err(Error::Config(
                "RIS amplitudes must lie in [0, 1]".to_string(),
            ));
        }
        Ok(())
    }
}

/// System-level parameters of the simulation scenario.
#[derive(Debug, Clone)]
pub struct ScenarioConfig {
    /// BS antenna count.
    pub m: usize,
    /// User count.
    pub k: usize,
    /// Carrier frequency in Hz.
    pub f_c: f64,
    /// Total transmit power in W.
    pub power: f64,
    /// Energy conversion efficiency of the receivers, in `(0, 1]`.
    pub eta: f64,
    /// Path-loss exponent (power gain `d^-n`, unit gain at 1 m).
    pub pathloss_exp: f64,
    /// Rician factor of the BS-RIS links.
    pub rician_g: f64,
    /// Rician factor of the RIS-to-own-cluster links.
    pub rician_hr: f64,
    /// BS-RIS distances in meters (RIS 1 and RIS 2).
    pub d1: f64,
    pub d2: f64,
    /// RIS-to-cluster-center distances in meters.
    pub d3: f64,
    pub d4: f64,
    /// Bearing of RIS 1 from the BS (rad); RIS 2 mirrors it below the axis.
    pub delta0: f64,
    /// Array orientations of RIS 1 and RIS 2 (rad, w.r.t. the x axis).
    pub delta1: f64,
    pub delta2: f64,
    /// Antenna/element spacing as a fraction of the carrier wavelength.
    pub spacing: f64,
    /// Radius of the user disc around each cluster center (m).
    pub user_radius: f64,
}

impl ScenarioConfig {
    /// Two-RIS, eight-user setup with the published system parameters
    /// (755 MHz carrier, 10 W, eta 1, path-loss exponent 3, Rician factors 2).
    pub fn default_two_ris(m: usize) -> Self {
        Self {
            m,
            k: 8,
            f_c: 755e6,
            power: 10.0,
            eta: 1.0,
            pathloss_exp: 3.0,
            rician_g: 2.0,
            rician_hr: 2.0,
            d1: 8.0,
            d2: 7.0,
            d3: 4.0,
            d4: 5.0,
            delta0: PI / 4.0,
            delta1: PI / 4.0,
            delta2: PI / 3.0,
            spacing: 0.5,
            user_radius: 2.0,
        }
    }

    pub fn wavelength(&self) -> f64 {
        SPEED_OF_LIGHT / self.f_c
    }

    /// Default surface placement: RIS 1 at bearing `delta0`, distance `d1`;
    /// RIS 2 mirrored at bearing `-delta0`, distance `d2`; orientations
    /// `delta1` and `delta2`. Exact coordinates are a declared convention of
    /// this harness.
    pub fn default_ris_layout(&self, n1: usize, n2: usize, beta: f64) -> Vec<RisConfig> {
        vec![
            RisConfig::uniform(
                n1,
                beta,
                [self.d1 * self.delta0.cos(), self.d1 * self.delta0.sin()],
                self.delta1,
            ),
            RisConfig::uniform(
                n2,
                beta,
                [self.d2 * self.delta0.cos(), -self.d2 * self.delta0.sin()],
                self.delta2,
            ),
        ]
    }

    fn validate(&self) -> Result<(), Error> {
        if self.m < 1 || self.k < 1 {
            return Err(Error::Config("M >= 1 and K >= 1 required".to_string()));
        }
        if self.power <= 0.0 || self.f_c <= 0.0 || self.pathloss_exp <= 0.0 {
            return Err(Error::Config(
                "P, f_c and the path-loss exponent must be positive".to_string(),
            ));
        }
        if !(self.eta > 0.0 && self.eta <= 1.0) {
            return Err(Error::Config("eta must lie in (0, 1]".to_string()));
        }
        for d in [self.d1, self.d2, self.d3, self.d4] {
            if d <= 0.0 {
                return Err(Error::Config("distances must be positive".to_string()));
            }
        }
        Ok(())
    }
}

/// One channel draw: everything that defines the optimization problems.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelRealization {
    /// BS -> users, `K x M`.
    pub h_d: CMat,
    /// RIS -> users, `K x N`.
    pub h_r: CMat,
    /// BS -> RIS before amplitude weighting, `N x M`.
    pub s: CMat,
    /// `diag(beta) * S`, `N x M`.
    pub g: CMat,
    /// Reflection amplitudes, length `N`.
    pub beta: Vec<f64>,
    /// Transmit power budget (W).
    pub power: f64,
    /// Receiver conversion efficiency.
    pub eta: f64,
}

impl ChannelRealization {
    pub fn users(&self) -> usize {
        self.h_d.nrows()
    }

    pub fn antennas(&self) -> usize {
        self.h_d.ncols()
    }

    pub fn elements(&self) -> usize {
        self.h_r.ncols()
    }

    /// Builds a realization directly from the link matrices, folding the
    /// amplitudes into `G`.
    pub fn from_links(
        h_d: CMat,
        h_r: CMat,
        s: CMat,
        beta: Vec<f64>,
        power: f64,
        eta: f64,
    ) -> Result<Self, Error> {
        let (k, m, n) = (h_d.nrows(), h_d.ncols(), s.nrows());
        if h_r.nrows() != k || h_r.ncols() != n || s.ncols() != m || beta.len() != n {
            return Err(Error::DimensionMismatch(format!(
                "links disagree: H_d {}x{}, H_r {}x{}, S {}x{}, beta {}",
                k,
                m,
                h_r.nrows(),
                h_r.ncols(),
                s.nrows(),
                s.ncols(),
                beta.len()
            )));
        }
        let mut g = s.clone();
        for (i, &b) in beta.iter().enumerate() {
            let bi = Complex64::new(b, 0.0);
            for j in 0..m {
                g[(i, j)] *= bi;
            }
        }
        Ok(Self {
            h_d,
            h_r,
            s,
            g,
            beta,
            power,
            eta,
        })
    }
}

/// ULA steering vector: entry `k = exp(-j * 2 pi * k * delta)`.
pub fn steering_vector(count: usize, delta: f64) -> CVec {
    CVec::from_iterator(
        count,
        (0..count).map(|k| Complex64::from_polar(1.0, -2.0 * PI * k as f64 * delta)),
    )
}

/// Rank-one line-of-sight link `rho_g * exp(-j 2 pi d / lambda) * e_r e_t^H`.
pub fn los_rank_one(rho_g: f64, d: f64, lambda_c: f64, e_r: &CVec, e_t: &CVec) -> CMat {
    let phase = Complex64::from_polar(rho_g, -2.0 * PI * d / lambda_c);
    (e_r * e_t.adjoint()) * phase
}

/// Rician fading draw with per-entry mean power `pathloss_gain` for any
/// Rician factor `kappa`:
///
/// `sqrt(gain) * ( sqrt(kappa/(1+kappa)) * LoS + sqrt(1/(1+kappa)) * W )`,
/// `W` i.i.d. `CN(0, 1)`. `kappa = 0` gives pure Rayleigh (the LoS component
/// may then be omitted); a very large `kappa` (the harness uses `1e5` for
/// "LoS") makes the scattered part negligible.
pub fn rician<R: Rng + ?Sized>(
    rows: usize,
    cols: usize,
    kappa: f64,
    los_component: Option<&CMat>,
    pathloss_gain: f64,
    rng: &mut R,
) -> Result<CMat, Error> {
    if kappa < 0.0 {
        return Err(Error::Config("Rician factor must be >= 0".to_string()));
    }
    let los = match los_component {
        Some(l) => {
            if l.nrows() != rows || l.ncols() != cols {
                return Err(Error::DimensionMismatch(format!(
                    "LoS component is {}x{}, expected {}x{}",
                    l.nrows(),
                    l.ncols(),
                    rows,
                    cols
                )));
            }
            Some(l)
        }
        None if kappa == 0.0 => None,
        None => {
            return Err(Error::Config(
                "LoS component required when kappa > 0".to_string(),
            ))
        }
    };
    let w = sample_cscg(rows, cols, rng);
    let amp = pathloss_gain.sqrt();
    let c_los = Complex64::new(amp * (kappa / (1.0 + kappa)).sqrt(), 0.0);
    let c_nlos = Complex64::new(amp * (1.0 / (1.0 + kappa)).sqrt(), 0.0);
    let mut out = w * c_nlos;
    if let Some(l) = los {
        out += l * c_los;
    }
    Ok(out)
}

fn pathloss_gain(dist: f64, exponent: f64) -> f64 {
    dist.powf(-exponent)
}

fn norm2(p: [f64; 2]) -> f64 {
    (p[0] * p[0] + p[1] * p[1]).sqrt()
}

/// Cosine of the angle between an array oriented at `orientation` and the
/// direction from `from` to `to`; feeds the steering-vector spatial
/// frequency `spacing * cos(angle)`.
fn direction_cosine(from: [f64; 2], to: [f64; 2], orientation: f64) -> f64 {
    let dx = to[0] - from[0];
    let dy = to[1] - from[1];
    let d = (dx * dx + dy * dy).sqrt();
    if d == 0.0 {
        return 0.0;
    }
    (dx * orientation.cos() + dy * orientation.sin()) / d
}

/// Draws a full scenario realization.
///
/// The BS sits at the origin with its ULA along the x axis. Direct BS-user
/// links are Rayleigh (obstructed); BS-RIS links are Rician with ULA
/// steering-vector LoS components; each RIS serves one user cluster placed
/// on a disc behind it (Rician links), while cross links to the other
/// cluster are Rayleigh. Every link carries a `d^-n` power path loss
/// relative to the 1 m reference.
pub fn make_scenario<R: Rng + ?Sized>(
    cfg: &ScenarioConfig,
    ris: &[RisConfig],
    rng: &mut R,
) -> Result<ChannelRealization, Error> {
    cfg.validate()?;
    for r in ris {
        r.validate()?;
    }
    let (m, k) = (cfg.m, cfg.k);
    let n_total: usize = ris.iter().map(|r| r.elements()).sum();
    let l_count = ris.len();

    // Cluster centers extend the BS->RIS ray by d3 (resp. d4) behind each
    // surface; extra surfaces reuse d3.
    let cluster_dist = |l: usize| match l {
        0 => cfg.d3,
        1 => cfg.d4,
        _ => cfg.d3,
    };
    let mut centers = Vec::with_capacity(l_count);
    for (l, r) in ris.iter().enumerate() {
        let d = norm2(r.position);
        if d <= 0.0 {
            return Err(Error::Config("RIS cannot sit on the BS".to_string()));
        }
        let scale = (d + cluster_dist(l)) / d;
        centers.push([r.position[0] * scale, r.position[1] * scale]);
    }

    // Users are split into one cluster per surface, uniformly on a disc
    // around the cluster center.
    let mut user_pos = Vec::with_capacity(k);
    for u in 0..k {
        let cluster = if l_count == 0 { 0 } else { (u * l_count) / k };
        let center = if l_count == 0 {
            [cfg.d3, 0.0]
        } else {
            centers[cluster]
        };
        let radius = cfg.user_radius * rng.random::<f64>().sqrt();
        let angle = 2.0 * PI * rng.random::<f64>();
        user_pos.push([
            center[0] + radius * angle.cos(),
            center[1] + radius * angle.sin(),
        ]);
    }

    // Direct links: Rayleigh with per-user path loss.
    let mut h_d = CMat::zeros(k, m);
    for u in 0..k {
        let gain = pathloss_gain(norm2(user_pos[u]).max(1.0), cfg.pathloss_exp);
        let row = rician(1, m, 0.0, None, gain, rng)?;
        h_d.view_mut((u, 0), (1, m)).copy_from(&row);
    }

    let lambda_c = cfg.wavelength();
    let mut s = CMat::zeros(n_total, m);
    let mut h_r = CMat::zeros(k, n_total);
    let mut beta = Vec::with_capacity(n_total);
    let mut offset = 0;
    for (l, r) in ris.iter().enumerate() {
        let n_l = r.elements();
        beta.extend_from_slice(&r.amplitudes);

        // BS -> RIS: Rician around the rank-one ULA geometry of the link.
        let d_bs = norm2(r.position);
        let delta_t = cfg.spacing * direction_cosine([0.0, 0.0], r.position, 0.0);
        let delta_r = cfg.spacing * direction_cosine(r.position, [0.0, 0.0], r.orientation);
        let e_t = steering_vector(m, delta_t);
        let e_r = steering_vector(n_l, delta_r);
        let los = los_rank_one(1.0, d_bs, lambda_c, &e_r, &e_t);
        let gain = pathloss_gain(d_bs, cfg.pathloss_exp);
        let s_l = rician(n_l, m, cfg.rician_g, Some(&los), gain, rng)?;
        s.view_mut((offset, 0), (n_l, m)).copy_from(&s_l);

        // RIS -> users: Rician for the surface's own cluster, Rayleigh across.
        for u in 0..k {
            let cluster = if l_count == 0 { 0 } else { (u * l_count) / k };
            let dist = norm2([
                user_pos[u][0] - r.position[0],
                user_pos[u][1] - r.position[1],
            ])
            .max(1.0);
            let gain = pathloss_gain(dist, cfg.pathloss_exp);
            let row = if cluster == l {
                let delta_u =
                    cfg.spacing * direction_cosine(r.position, user_pos[u], r.orientation);
                let e_u = steering_vector(n_l, delta_u);
                let phase = Complex64::from_polar(1.0, -2.0 * PI * dist / lambda_c);
                let los_row = CMat::from_fn(1, n_l, |_, j| e_u[j].conj() * phase);
                rician(1, n_l, cfg.rician_hr, Some(&los_row), gain, rng)?
            } else {
                rician(1, n_l, 0.0, None, gain, rng)?
            };
            h_r.view_mut((u, offset), (1, n_l)).copy_from(&row);
        }
        offset += n_l;
    }

    ChannelRealization::from_links(h_d, h_r, s, beta, cfg.power, cfg.eta)
}

/// Tag for the small-scale fading model of one link family.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Fading {
    Rayleigh,
    Rician,
    Los,
}

impl Fading {
    /// Rician factor encoding the tag; `1e5` is the "pure LoS" convention.
    pub fn kappa(self, rician_factor: f64) -> f64 {
        match self {
            Fading::Rayleigh => 0.0,
            Fading::Rician => rician_factor,
            Fading::Los => 1e5,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Fading::Rayleigh => "rayleigh",
            Fading::Rician => "rician",
            Fading::Los => "los",
        }
    }
}

/// Idealized RIS-only model used by the asymptotic analyses: no direct
/// channel, `G` drawn around the rank-one LoS geometry, `H_r` with per-entry
/// mean power `rho_h^2`.
#[derive(Debug, Clone)]
pub struct IdealizedConfig {
    pub m: usize,
    pub k: usize,
    pub n: usize,
    /// LoS amplitude of the BS-RIS link.
    pub rho_g: f64,
    /// Per-entry RMS amplitude of the RIS-user link.
    pub rho_h: f64,
    pub power: f64,
    /// Fading model of `G` (LoS reproduces the analysis assumptions).
    pub g_model: Fading,
    /// Fading model of `H_r` (Rayleigh reproduces the analysis assumptions).
    pub hr_model: Fading,
    /// Rician factor used when a link is tagged [`Fading::Rician`].
    pub rician_factor: f64,
    /// Spatial frequencies of the LoS steering vectors.
    pub delta_r: f64,
    pub delta_t: f64,
}

impl IdealizedConfig {
    /// The configuration of the power scaling law analysis: LoS `G`,
    /// Rayleigh `H_r`.
    pub fn proposition_setup(
        m: usize,
        k: usize,
        n: usize,
        rho_g: f64,
        rho_h: f64,
        power: f64,
    ) -> Self {
        Self {
            m,
            k,
            n,
            rho_g,
            rho_h,
            power,
            g_model: Fading::Los,
            hr_model: Fading::Rayleigh,
            rician_factor: 2.0,
            delta_r: 0.25,
            delta_t: 0.25,
        }
    }

    /// Draws one realization (`H_d = 0`).
    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<ChannelRealization, Error> {
        let e_r = steering_vector(self.n, self.delta_r);
        let e_t = steering_vector(self.m, self.delta_t);
        let g_los = los_rank_one(1.0, 0.0, 1.0, &e_r, &e_t);
        let s = rician(
            self.n,
            self.m,
            self.g_model.kappa(self.rician_factor),
            Some(&g_los),
            self.rho_g * self.rho_g,
            rng,
        )?;
        // One steering row per user with an offset spatial frequency.
        let hr_los = CMat::from_fn(self.k, self.n, |u, j| {
            let delta_u = self.delta_r + 0.5 * (u as f64 + 1.0) / (self.k as f64 + 1.0);
            Complex64::from_polar(1.0, -2.0 * PI * j as f64 * delta_u)
        });
        let h_r = rician(
            self.k,
            self.n,
            self.hr_model.kappa(self.rician_factor),
            Some(&hr_los),
            self.rho_h * self.rho_h,
            rng,
        )?;
        ChannelRealization::from_links(
            CMat::zeros(self.k, self.m),
            h_r,
            s,
            vec![1.0; self.n],
            self.power,
            1.0,
        )
    }
}

/// Composite channel `H(theta) = H_r diag(exp(-j theta)) G + H_d`.
pub fn composite_channel(real: &ChannelRealization, theta: &RVec) -> Result<CMat, Error> {
    if theta.len() != real.elements() {
        return Err(Error::DimensionMismatch(format!(
            "theta has {} entries, channel has {} elements",
            theta.len(),
            real.elements()
        )));
    }
    let mut h = real.h_d.clone();
    if real.elements() == 0 {
        return Ok(h);
    }
    let v = unit_circle_exp(theta);
    // H_r * diag(conj(v)) * G accumulated as sum_n conj(v_n) h_r[:,n] g[n,:].
    let (k, m) = (real.users(), real.antennas());
    for n in 0..real.elements() {
        let w = v[n].conj();
        for r in 0..k {
            let lhs = real.h_r[(r, n)] * w;
            for c in 0..m {
                h[(r, c)] += lhs * real.g[(n, c)];
            }
        }
    }
    Ok(h)
}

/// Per-user received powers `eta * |h_k^H x|^2` for a composite channel `H`.
pub fn received_powers(h: &CMat, x: &CVec, eta: f64) -> Result<RVec, Error> {
    if x.len() != h.ncols() {
        return Err(Error::DimensionMismatch(format!(
            "x has {} entries, H has {} columns",
            x.len(),
            h.ncols()
        )));
    }
    let y = h * x;
    Ok(RVec::from_iterator(
        y.len(),
        y.iter().map(|c| eta * c.norm_sqr()),
    ))
}

/// Per-user amplitude terms of the objective: user `k` receives
/// `|v^H c_k + a_k|^2` (before `eta`) with `v = exp(j theta)`.
pub fn amplitude_terms(
    real: &ChannelRealization,
    x: &CVec,
) -> Result<(Vec<CVec>, Vec<Complex64>), Error> {
    if x.len() != real.antennas() {
        return Err(Error::DimensionMismatch(format!(
            "x has {} entries, channel has {} antennas",
            x.len(),
            real.antennas()
        )));
    }
    let gx = &real.g * x;
    let n = real.elements();
    let mut c = Vec::with_capacity(real.users());
    let mut a = Vec::with_capacity(real.users());
    for k in 0..real.users() {
        // h_rk^H is the k-th row of H_r, so diag(h_rk^*) carries the plain
        // row entries; likewise a_k = h_dk^H x is the row of H_d times x.
        c.push(CVec::from_iterator(
            n,
            (0..n).map(|j| real.h_r[(k, j)] * gx[j]),
        ));
        let mut acc = Complex64::new(0.0, 0.0);
        for j in 0..real.antennas() {
            acc += real.h_d[(k, j)] * x[j];
        }
        a.push(acc);
    }
    Ok((c, a))
}

/// Objective `sum_k |v^H c_k + a_k|^2` for a unit-modulus `v = exp(j theta)`.
pub fn objective_from_terms(c: &[CVec], a: &[Complex64], v: &CVec) -> f64 {
    c.iter()
        .zip(a.iter())
        .map(|(ck, &ak)| {
            let mut acc = ak;
            for j in 0..v.len() {
                acc += v[j].conj() * ck[j];
            }
            acc.norm_sqr()
        })
        .sum()
}

/// Sum objective `||H(theta) x||^2` evaluated through the composite channel.
pub fn objective_via_channel(
    real: &ChannelRealization,
    theta: &RVec,
    x: &CVec,
) -> Result<f64, Error> {
    let h = composite_channel(real, theta)?;
    Ok((h * x).norm_squared())
}

/// Serializes a realization to the documented text dump (one entry per line,
/// `matrix,row,col,re,im` with 17 significant digits for exact f64 replay).
pub fn dump_realization(real: &ChannelRealization) -> String {
    let mut out = String::new();
    out.push_str("# risbeam channel dump v1\n");
    out.push_str(&format!(
        "dims,{},{},{}\n",
        real.users(),
        real.antennas(),
        real.elements()
    ));
    out.push_str(&format!("power,{:.17e}\n", real.power));
    out.push_str(&format!("eta,{:.17e}\n", real.eta));
    {
        let mut emit = |name: &str, m: &CMat| {
            for r in 0..m.nrows() {
                for c in 0..m.ncols() {
                    let z = m[(r, c)];
                    out.push_str(&format!("{name},{r},{c},{:.17e},{:.17e}\n", z.re, z.im));
                }
            }
        };
        emit("h_d", &real.h_d);
        emit("h_r", &real.h_r);
        emit("s", &real.s);
    }
    for (i, b) in real.beta.iter().enumerate() {
        out.push_str(&format!("beta,{i},{:.17e}\n", b));
    }
    out
}

/// Parses the dump format produced by [`dump_realization`].
pub fn load_realization(text: &str) -> Result<ChannelRealization, Error> {
    let bad = |msg: &str| Error::Config(format!("channel dump: {msg}"));
    let mut dims = None;
    let mut power = 1.0;
    let mut eta = 1.0;
    let mut entries: Vec<(String, usize, usize, Complex64)> = Vec::new();
    let mut beta_entries: Vec<(usize, f64)> = Vec::new();
    for line in text.lines() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let parts: Vec<&str> = line.split(',').collect();
        match parts[0] {
            "dims" if parts.len() == 4 => {
                let parse = |s: &str| s.parse::<usize>().map_err(|_| bad("bad dims"));
                dims = Some((parse(parts[1])?, parse(parts[2])?, parse(parts[3])?));
            }
            "power" if parts.len() == 2 => {
                power = parts[1].parse().map_err(|_| bad("bad power"))?;
            }
            "eta" if parts.len() == 2 => {
                eta = parts[1].parse().map_err(|_| bad("bad eta"))?;
            }
            "beta" if parts.len() == 3 => {
                let i = parts[1].parse().map_err(|_| bad("bad beta index"))?;
                let v = parts[2].parse().map_err(|_| bad("bad beta value"))?;
                beta_entries.push((i, v));
            }
            name @ ("h_d" | "h_r" | "s") if parts.len() == 5 => {
                let r = parts[1].parse().map_err(|_| bad("bad row"))?;
                let c = parts[2].parse().map_err(|_| bad("bad col"))?;
                let re: f64 = parts[3].parse().map_err(|_| bad("bad re"))?;
                let im: f64 = parts[4].parse().map_err(|_| bad("bad im"))?;
                entries.push((name.to_string(), r, c, Complex64::new(re, im)));
            }
            _ => return Err(bad(&format!("unrecognized line: {line}"))),
        }
    }
    let (k, m, n) = dims.ok_or_else(|| bad("missing dims"))?;
    let mut h_d = CMat::zeros(k, m);
    let mut h_r = CMat::zeros(k, n);
    let mut s = CMat::zeros(n, m);
    for (name, r, c, z) in entries {
        let target = match name.as_str() {
            "h_d" => &mut h_d,
            "h_r" => &mut h_r,
            _ => &mut s,
        };
        if r >= target.nrows() || c >= target.ncols() {
            return Err(bad("entry out of bounds"));
        }
        target[(r, c)] = z;
    }
    let mut beta = vec![0.0; n];
    for (i, v) in beta_entries {
        if i >= n {
            return Err(bad("beta index out of bounds"));
        }
        beta[i] = v;
    }
    ChannelRealization::from_links(h_d, h_r, s, beta, power, eta)
}

/// Feasible constant-envelope transmit vector `sqrt(P/M) exp(j alpha)`.
pub fn transmit_vector(alpha: &RVec, power: f64) -> CVec {
    let amp = (power / alpha.len() as f64).sqrt();
    CVec::from_iterator(
        alpha.len(),
        alpha.iter().map(|&a| Complex64::from_polar(amp, a)),
    )
}

/// Phases of a constant-envelope vector (inverse of [`transmit_vector`]).
pub fn transmit_phases(x: &CVec) -> RVec {
    arg_phases(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::sample_cscg_vec;
    use approx::assert_relative_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn steering_examples() {
        assert_eq!(steering_vector(1, 0.37)[0], Complex64::new(1.0, 0.0));
        let e = steering_vector(2, 0.5);
        assert_relative_eq!(
            (e[1] - Complex64::new(-1.0, 0.0)).norm(),
            0.0,
            epsilon = 1e-12
        );
        let broadside = steering_vector(4, 0.0);
        for z in broadside.iter() {
            assert_eq!(*z, Complex64::new(1.0, 0.0));
        }
    }

    #[test]
    fn los_rank_one_norms() {
        let one = CVec::from_vec(vec![Complex64::new(1.0, 0.0)]);
        let g = los_rank_one(1.0, 0.0, 1.0, &one, &one);
        assert_eq!(g[(0, 0)], Complex64::new(1.0, 0.0));

        let e_r = steering_vector(2, 0.3);
        let e_t = steering_vector(3, 0.1);
        let g = los_rank_one(2.0, 0.0, 1.0, &e_r, &e_t);
        assert_relative_eq!(g.norm(), 2.0 * 6.0f64.sqrt(), max_relative = 1e-12);
        for z in g.iter() {
            assert_relative_eq!(z.norm(), 2.0, max_relative = 1e-12);
        }

        // d = lambda/2 flips the global sign.
        let g0 = los_rank_one(1.0, 0.0, 2.0, &e_r, &e_t);
        let g1 = los_rank_one(1.0, 1.0, 2.0, &e_r, &e_t);
        assert_relative_eq!((&g0 + &g1).norm(), 0.0, epsilon = 1e-10);
    }

    #[test]
    fn rician_preserves_mean_power() {
        let e = steering_vector(1, 0.0);
        let los = los_rank_one(1.0, 0.0, 1.0, &e, &steering_vector(1, 0.2));
        for kappa in [0.0, 2.0, 1e5] {
            let mut rng = ChaCha8Rng::seed_from_u64(9);
            let mut acc = 0.0;
            let trials = 100_000;
            for _ in 0..trials {
                let h = rician(1, 1, kappa, Some(&los), 0.7, &mut rng).unwrap();
                acc += h[(0, 0)].norm_sqr();
            }
            let mean = acc / trials as f64;
            assert!(
                (mean - 0.7).abs() < 0.02 * 0.7 + 0.005,
                "kappa={kappa}: mean={mean}"
            );
        }
    }

    #[test]
    fn rician_large_kappa_is_los() {
        let e_r = steering_vector(3, 0.3);
        let e_t = steering_vector(2, 0.1);
        let los = los_rank_one(1.0, 0.0, 1.0, &e_r, &e_t);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let h = rician(3, 2, 1e5, Some(&los), 4.0, &mut rng).unwrap();
        let expected = &los * Complex64::new(2.0, 0.0);
        assert!((h - &expected).norm() / expected.norm() < 0.01);
    }

    #[test]
    fn rician_rejects_bad_inputs() {
        let los = CMat::zeros(2, 2);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        assert!(rician(3, 2, 1.0, Some(&los), 1.0, &mut rng).is_err());
        assert!(rician(3, 2, 1.0, None, 1.0, &mut rng).is_err());
    }

    fn two_ris_scenario() -> (ScenarioConfig, Vec<RisConfig>) {
        let mut cfg = ScenarioConfig::default_two_ris(4);
        cfg.k = 4;
        let ris = cfg.default_ris_layout(5, 5, 1.0);
        (cfg, ris)
    }

    #[test]
    fn scenario_block_structure() {
        let (cfg, ris) = two_ris_scenario();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let real = make_scenario(&cfg, &ris, &mut rng).unwrap();
        assert_eq!(real.h_r.shape(), (4, 10));
        assert_eq!(real.g.shape(), (10, 4));
        assert_eq!(real.h_d.shape(), (4, 4));
        // Unit amplitudes: G coincides with S.
        assert_eq!(real.g, real.s);
    }

    #[test]
    fn zero_amplitudes_disable_the_ris() {
        let (cfg, mut ris) = two_ris_scenario();
        for r in &mut ris {
            for b in &mut r.amplitudes {
                *b = 0.0;
            }
        }
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let real = make_scenario(&cfg, &ris, &mut rng).unwrap();
        assert_eq!(real.g.norm(), 0.0);
        let theta = RVec::from_vec(vec![0.3; 10]);
        let h = composite_channel(&real, &theta).unwrap();
        assert_relative_eq!((h - &real.h_d).norm(), 0.0, epsilon = 1e-14);
    }

    #[test]
    fn pathloss_follows_inverse_cube() {
        // Doubling the BS-RIS distance with n = 3 cuts that link's mean
        // entry power by 8x.
        let (base, _) = two_ris_scenario();
        let measure = |d1: f64, seed: u64| {
            let mut cfg = base.clone();
            cfg.rician_g = 0.0;
            cfg.d1 = d1;
            let ris = cfg.default_ris_layout(6, 6, 1.0);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut acc = 0.0;
            let trials = 4000;
            for _ in 0..trials {
                let real = make_scenario(&cfg, &ris, &mut rng).unwrap();
                let block = real.s.view((0, 0), (6, cfg.m));
                acc += block.norm_squared() / (6.0 * cfg.m as f64);
            }
            acc / trials as f64
        };
        let near = measure(4.0, 77);
        let far = measure(8.0, 78);
        let ratio = near / far;
        assert!((ratio - 8.0).abs() < 0.4, "ratio = {ratio}");
    }

    #[test]
    fn composite_matches_direct_sum_at_zero_phase() {
        let (cfg, ris) = two_ris_scenario();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let real = make_scenario(&cfg, &ris, &mut rng).unwrap();
        let h = composite_channel(&real, &RVec::zeros(10)).unwrap();
        let expected = &real.h_r * &real.g + &real.h_d;
        assert_relative_eq!((h - expected).norm(), 0.0, epsilon = 1e-12);
    }

    #[test]
    fn composite_is_linear_in_negative_phasor() {
        let (cfg, ris) = two_ris_scenario();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let real = make_scenario(&cfg, &ris, &mut rng).unwrap();
        let n = real.elements();
        // Superposition: summing single-element contributions of H - H_d
        // reproduces the full evaluation.
        let theta = RVec::from_fn(n, |i, _| 0.3 * i as f64 - 1.0);
        let full = composite_channel(&real, &theta).unwrap() - &real.h_d;
        let mut acc = CMat::zeros(real.users(), real.antennas());
        for i in 0..n {
            let mut masked = real.clone();
            for j in 0..n {
                if j != i {
                    for c in 0..real.antennas() {
                        masked.g[(j, c)] = Complex64::new(0.0, 0.0);
                    }
                }
            }
            acc += composite_channel(&masked, &theta).unwrap() - &real.h_d;
        }
        assert_relative_eq!((full - acc).norm(), 0.0, epsilon = 1e-10);
    }

    #[test]
    fn single_element_channel_traces_a_circle() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let h_r = sample_cscg(1, 1, &mut rng);
        let s = sample_cscg(1, 1, &mut rng);
        let h_d = sample_cscg(1, 1, &mut rng);
        let real =
            ChannelRealization::from_links(h_d.clone(), h_r.clone(), s.clone(), vec![1.0], 1.0, 1.0)
                .unwrap();
        let radius = (h_r[(0, 0)] * s[(0, 0)]).norm();
        for i in 0..16 {
            let theta = RVec::from_vec(vec![2.0 * PI * i as f64 / 16.0]);
            let h = composite_channel(&real, &theta).unwrap();
            assert_relative_eq!(
                (h[(0, 0)] - h_d[(0, 0)]).norm(),
                radius,
                max_relative = 1e-12
            );
        }
    }

    #[test]
    fn received_power_basics() {
        let h = CMat::identity(3, 3);
        let x = CVec::from_element(3, Complex64::new(1.0, 0.0));
        let q = received_powers(&h, &x, 1.0).unwrap();
        for k in 0..3 {
            assert_relative_eq!(q[k], 1.0, max_relative = 1e-14);
        }
        // Global phase invariance.
        let rot = &x * Complex64::from_polar(1.0, 0.8);
        let q2 = received_powers(&h, &rot, 1.0).unwrap();
        assert_relative_eq!((q2 - &q).norm(), 0.0, epsilon = 1e-12);
        // eta scales linearly.
        let q3 = received_powers(&h, &x, 0.5).unwrap();
        for k in 0..3 {
            assert_relative_eq!(q3[k], 0.5, max_relative = 1e-14);
        }
        // Sum equals eta * ||Hx||^2.
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let h = sample_cscg(3, 4, &mut rng);
        let x = sample_cscg_vec(4, &mut rng);
        let q = received_powers(&h, &x, 0.9).unwrap();
        assert_relative_eq!(
            q.sum(),
            0.9 * (&h * &x).norm_squared(),
            max_relative = 1e-12
        );
    }

    #[test]
    fn objective_routes_agree() {
        let (cfg, ris) = two_ris_scenario();
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let real = make_scenario(&cfg, &ris, &mut rng).unwrap();
        let theta = RVec::from_fn(real.elements(), |i, _| (i as f64).sin());
        let alpha = RVec::from_fn(real.antennas(), |i, _| (i as f64).cos());
        let x = transmit_vector(&alpha, real.power);
        let via_h = objective_via_channel(&real, &theta, &x).unwrap();
        let (c, a) = amplitude_terms(&real, &x).unwrap();
        let v = unit_circle_exp(&theta);
        let via_terms = objective_from_terms(&c, &a, &v);
        assert_relative_eq!(via_h, via_terms, max_relative = 1e-10);
    }

    #[test]
    fn constant_envelope_budget_is_exact() {
        let alpha = RVec::from_vec(vec![0.1, -2.0, 3.0, 0.5]);
        let x = transmit_vector(&alpha, 10.0);
        assert_relative_eq!(x.norm_squared(), 10.0, max_relative = 1e-14);
        let back = transmit_phases(&x);
        for i in 0..4 {
            assert_relative_eq!(back[i], alpha[i], epsilon = 1e-12);
        }
    }

    #[test]
    fn dump_roundtrip_is_exact() {
        let (cfg, ris) = two_ris_scenario();
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let real = make_scenario(&cfg, &ris, &mut rng).unwrap();
        let text = dump_realization(&real);
        let back = load_realization(&text).unwrap();
        assert_eq!(real, back);
    }

    #[test]
    fn idealized_draw_shapes() {
        let cfg = IdealizedConfig::proposition_setup(4, 4, 16, 1.0, 1.0, 1.0);
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let real = cfg.draw(&mut rng).unwrap();
        assert_eq!(real.h_d.norm(), 0.0);
        assert_eq!(real.h_r.shape(), (4, 16));
        assert_eq!(real.g.shape(), (16, 4));
    }
}
