//! Complex dense linear algebra and random sampling primitives shared by all
//! solvers.
//!
//! Matrices and vectors are `nalgebra` dynamic complex arrays; everything in
//! this module is a pure function on immutable inputs. The only mutable
//! object anywhere is the RNG, which callers pass explicitly so runs are
//! bit-reproducible (use [`rand_chacha::ChaCha8Rng`]: it is counter-seedable
//! via `seed_from_u64` + `set_stream`, which the experiment harness relies on
//! for order-independent parallel trials).

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use std::f64::consts::PI;

/// Dense complex matrix (column-major, dynamically sized).
pub type CMat = DMatrix<Complex64>;
/// Dense complex column vector.
pub type CVec = DVector<Complex64>;
/// Dense real column vector.
pub type RVec = DVector<f64>;

/// Hermitian symmetry tolerance for eigendecomposition inputs.
pub const HERMITIAN_TOL: f64 = 1e-10;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("matrix is not Hermitian: max |A - A^H| entry = {0:e}")]
    NonHermitian(f64),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("invalid configuration: {0}")]
    Config(String),
}

/// Principal argument of each entry, in `[-pi, pi)`, with `arg(0) = 0`.
///
/// `atan2` returns `(-pi, pi]`; an exact `+pi` (negative real axis) is folded
/// to `-pi` so that `arg_phases` is a left inverse of [`unit_circle_exp`] on
/// the principal branch.
pub fn arg_phases(z: &CVec) -> RVec {
    RVec::from_iterator(
        z.len(),
        z.iter().map(|c| {
            if c.re == 0.0 && c.im == 0.0 {
                0.0
            } else {
                let a = c.im.atan2(c.re);
                if a == PI {
                    -PI
                } else {
                    a
                }
            }
        }),
    )
}

/// Elementwise `exp(j * phase)`; every entry has unit modulus.
pub fn unit_circle_exp(phases: &RVec) -> CVec {
    CVec::from_iterator(
        phases.len(),
        phases.iter().map(|&p| Complex64::new(p.cos(), p.sin())),
    )
}

/// Eigendecomposition of a Hermitian matrix, eigenvalues sorted descending.
///
/// Returns `(lambda, U)` with `A = U diag(lambda) U^H`. Fails with
/// [`Error::NonHermitian`] when `max |A - A^H|` exceeds [`HERMITIAN_TOL`];
/// the input is symmetrized before factorization so that tolerated asymmetry
/// cannot leak into the result.
pub fn hermitian_eig(a: &CMat) -> Result<(RVec, CMat), Error> {
    let asym = hermitian_defect(a);
    if asym > HERMITIAN_TOL * a.norm().max(1.0) {
        return Err(Error::NonHermitian(asym));
    }
    let h = hermitian_part(a);
    let n = h.nrows();
    let se = h.symmetric_eigen();
    // Sort descending, permuting eigenvector columns to match.
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| se.eigenvalues[j].partial_cmp(&se.eigenvalues[i]).unwrap());
    let lambda = RVec::from_iterator(n, order.iter().map(|&i| se.eigenvalues[i]));
    let mut u = CMat::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        u.set_column(dst, &se.eigenvectors.column(src));
    }
    Ok((lambda, u))
}

/// Max absolute entry of `A - A^H`.
pub fn hermitian_defect(a: &CMat) -> f64 {
    let mut worst = 0.0f64;
    for i in 0..a.nrows() {
        for j in 0..a.ncols() {
            worst = worst.max((a[(i, j)] - a[(j, i)].conj()).norm());
        }
    }
    worst
}

/// `(A + A^H) / 2`.
pub fn hermitian_part(a: &CMat) -> CMat {
    (a + a.adjoint()) * Complex64::new(0.5, 0.0)
}

/// Nearest positive semidefinite matrix in Frobenius norm: clamp negative
/// eigenvalues of the Hermitian part to zero and reconstruct.
pub fn psd_project(a: &CMat) -> Result<CMat, Error> {
    let (lambda, u) = hermitian_eig(a)?;
    let clamped = RVec::from_iterator(lambda.len(), lambda.iter().map(|&l| l.max(0.0)));
    Ok(reconstruct(&clamped, &u))
}

/// `U diag(lambda) U^H`.
pub fn reconstruct(lambda: &RVec, u: &CMat) -> CMat {
    let d = CMat::from_diagonal(&CVec::from_iterator(
        lambda.len(),
        lambda.iter().map(|&l| Complex64::new(l, 0.0)),
    ));
    u * d * u.adjoint()
}

/// CSCG matrix with i.i.d. `CN(0, 1)` entries: real and imaginary parts each
/// `Normal(0, 1/2)`, so the per-entry variance is 1.
pub fn sample_cscg<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> CMat {
    let scale = 0.5f64.sqrt();
    CMat::from_fn(rows, cols, |_, _| {
        // from_fn visits entries in column-major order with a fresh closure
        // call per entry, so the draw order is deterministic.
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        Complex64::new(re * scale, im * scale)
    })
}

/// CSCG column vector with i.i.d. `CN(0, 1)` entries.
pub fn sample_cscg_vec<R: Rng + ?Sized>(len: usize, rng: &mut R) -> CVec {
    let m = sample_cscg(len, 1, rng);
    m.column(0).into_owned()
}

/// Largest eigenvalue of a Hermitian matrix (0 for an empty matrix).
pub fn lambda_max(a: &CMat) -> Result<f64, Error> {
    if a.nrows() == 0 {
        return Ok(0.0);
    }
    Ok(hermitian_eig(a)?.0[0])
}
