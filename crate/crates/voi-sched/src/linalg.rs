//! Small linear-algebra helpers: PSD checks, symmetric square roots,
//! Gaussian sampling and the discrete Lyapunov fixed point.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};

/// Tolerance below which a negative eigenvalue still counts as zero.
pub const PSD_EIG_FLOOR: f64 = -1e-9;

/// Maximum asymmetry `‖S − Sᵀ‖_∞` accepted before rejection.
pub const SYMMETRY_TOL: f64 = 1e-9;

/// `max_ij |S_ij − S_ji|`.
pub fn asymmetry(m: &DMatrix<f64>) -> f64 {
    let mut worst = 0.0f64;
    for i in 0..m.nrows() {
        for j in (i + 1)..m.ncols() {
            worst = worst.max((m[(i, j)] - m[(j, i)]).abs());
        }
    }
    worst
}

/// `(S + Sᵀ) / 2`.
pub fn symmetrize(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m + m.transpose()) * 0.5
}

/// Symmetric square root of a PSD matrix via eigendecomposition.
///
/// Eigenvalues in `[PSD_EIG_FLOOR, 0)` are clipped to zero so that singular
/// covariances (zero-noise models) are accepted; anything below the floor is
/// rejected as not PSD. Asymmetric input is rejected.
pub fn symmetric_sqrt(cov: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    if cov.nrows() != cov.ncols() {
        return Err(Error::Config(format!(
            "covariance must be square, got {}x{}",
            cov.nrows(),
            cov.ncols()
        )));
    }
    if asymmetry(cov) > SYMMETRY_TOL {
        return Err(Error::Config(format!(
            "covariance asymmetry {:.3e} exceeds tolerance",
            asymmetry(cov)
        )));
    }
    let eig = symmetrize(cov).symmetric_eigen();
    let min_eig = eig.eigenvalues.min();
    if min_eig < PSD_EIG_FLOOR {
        return Err(Error::NotPositiveSemidefinite {
            min_eigenvalue: min_eig,
        });
    }
    let sqrt_vals = eig.eigenvalues.map(|l| l.max(0.0).sqrt());
    let scaled = {
        let mut v = eig.eigenvectors.clone();
        for (j, s) in sqrt_vals.iter().enumerate() {
            v.column_mut(j).scale_mut(*s);
        }
        v
    };
    Ok(&scaled * eig.eigenvectors.transpose())
}

/// Minimum eigenvalue of the symmetrized matrix.
pub fn min_eigenvalue(m: &DMatrix<f64>) -> f64 {
    symmetrize(m).symmetric_eigen().eigenvalues.min()
}

/// A standard-normal vector of length `n`.
pub fn standard_normal_vector<R: Rng + ?Sized>(n: usize, rng: &mut R) -> DVector<f64> {
    DVector::from_fn(n, |_, _| rng.sample(StandardNormal))
}

/// One draw from `N(mean, sqrt·sqrtᵀ)` given a precomputed square-root factor.
pub fn sample_gaussian<R: Rng + ?Sized>(
    mean: &DVector<f64>,
    sqrt_cov: &DMatrix<f64>,
    rng: &mut R,
) -> DVector<f64> {
    mean + sqrt_cov * standard_normal_vector(mean.len(), rng)
}

/// Fixed point of `S = A S Aᵀ + Q`, the stationary covariance of a stable
/// linear system. Fails if the iteration has not converged to `tol` within
/// `max_iter` sweeps (e.g. spectral radius of `A` ≥ 1).
pub fn lyapunov_fixed_point(
    a: &DMatrix<f64>,
    q: &DMatrix<f64>,
    tol: f64,
    max_iter: usize,
) -> Result<DMatrix<f64>> {
    let n = a.nrows();
    if a.ncols() != n || q.nrows() != n || q.ncols() != n {
        return Err(Error::Config(
            "Lyapunov operands must be square and same-size".into(),
        ));
    }
    let mut s = q.clone();
    for _ in 0..max_iter {
        let next = a * &s * a.transpose() + q;
        let delta = (&next - &s).amax();
        s = next;
        if delta < tol {
            return Ok(symmetrize(&s));
        }
    }
    Err(Error::Numeric(format!(
        "Lyapunov iteration did not converge to {tol:.1e} in {max_iter} sweeps"
    )))
}
