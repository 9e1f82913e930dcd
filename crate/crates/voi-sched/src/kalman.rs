//! Edge-node belief tracking: Kalman predict and scalar-observation update
//! with an erasure-aware skip.
//!
//! Exactly one sensor is polled per slot, so the update inverts a scalar
//! innovation variance instead of a matrix. A lost packet leaves the belief
//! untouched: the a priori estimate is already the best available.

use nalgebra::{DMatrix, DVector};

use crate::dynamics::SystemModel;
use crate::error::{Error, Result};
use crate::linalg;

/// Whether a belief has absorbed this slot's observation yet.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Phase {
    Prior,
    Posterior,
}

/// Kalman estimate pair `(x̂, ψ)` plus phase and slot index.
#[derive(Debug, Clone, PartialEq)]
pub struct BeliefState {
    pub x_hat: DVector<f64>,
    pub psi: DMatrix<f64>,
    pub phase: Phase,
    pub t: u64,
}

impl BeliefState {
    /// A posterior-phase belief at slot 0.
    pub fn new(x_hat: DVector<f64>, psi: DMatrix<f64>) -> Self {
        Self {
            x_hat,
            psi,
            phase: Phase::Posterior,
            t: 0,
        }
    }

    /// `trace(ψ)`, the expected squared estimation error.
    pub fn mse_trace(&self) -> f64 {
        self.psi.trace()
    }

    /// Check the symmetry and PSD invariants (tolerance `1e-9`).
    pub fn validate(&self) -> Result<()> {
        if linalg::asymmetry(&self.psi) > linalg::SYMMETRY_TOL {
            return Err(Error::Numeric(format!(
                "belief covariance asymmetry {:.3e}",
                linalg::asymmetry(&self.psi)
            )));
        }
        let min_eig = linalg::min_eigenvalue(&self.psi);
        if min_eig < linalg::PSD_EIG_FLOOR {
            return Err(Error::NotPositiveSemidefinite {
                min_eigenvalue: min_eig,
            });
        }
        Ok(())
    }
}

/// The belief an edge node starts from: `x̂ = 0`, `ψ = Σ_∞` (the stationary
/// covariance). Requires a stable model.
pub fn initial_belief(model: &SystemModel) -> Result<BeliefState> {
    Ok(BeliefState::new(
        DVector::zeros(model.state_dim()),
        model.stationary_covariance()?,
    ))
}

/// Time update: `x̂_pri = A·x̂`, `ψ_pri = A·ψ·Aᵀ + Σ_v`.
pub fn predict(model: &SystemModel, belief: &BeliefState) -> Result<BeliefState> {
    if belief.phase != Phase::Posterior {
        return Err(Error::InvalidArgument(
            "predict requires a posterior-phase belief".into(),
        ));
    }
    if belief.x_hat.len() != model.state_dim() {
        return Err(Error::Config(
            "belief dimension does not match model".into(),
        ));
    }
    let x_hat = model.a() * &belief.x_hat;
    let psi =
        linalg::symmetrize(&(model.a() * &belief.psi * model.a().transpose() + model.sigma_v()));
    Ok(BeliefState {
        x_hat,
        psi,
        phase: Phase::Prior,
        t: belief.t + 1,
    })
}

/// Innovation variance `h ψ hᵀ + σ_w²` of polling `sensor` at a prior belief.
pub fn innovation_variance(
    model: &SystemModel,
    belief: &BeliefState,
    sensor: usize,
) -> Result<f64> {
    if sensor >= model.sensor_count() {
        return Err(Error::SensorIndex {
            index: sensor,
            count: model.sensor_count(),
        });
    }
    let h = model.h().row(sensor);
    let h_psi_ht = (h * &belief.psi * h.transpose())[(0, 0)];
    Ok(h_psi_ht + model.sigma_w()[(sensor, sensor)])
}

/// Measurement update for the polled sensor.
///
/// `observation` is absent exactly when the packet was erased, in which case
/// the estimate and covariance pass through unchanged. Otherwise the usual
/// scalar-gain update runs and the covariance is re-symmetrized.
pub fn update(
    model: &SystemModel,
    belief: &BeliefState,
    sensor: usize,
    observation: Option<f64>,
) -> Result<BeliefState> {
    if belief.phase != Phase::Prior {
        return Err(Error::InvalidArgument(
            "update requires a prior-phase belief".into(),
        ));
    }
    let Some(y) = observation else {
        return Ok(BeliefState {
            x_hat: belief.x_hat.clone(),
            psi: belief.psi.clone(),
            phase: Phase::Posterior,
            t: belief.t,
        });
    };
    let s = innovation_variance(model, belief, sensor)?;
    if s <= 1e-12 {
        return Err(Error::DegenerateUpdate { variance: s });
    }
    let h = model.h().row(sensor);
    let gain = (&belief.psi * h.transpose()) / s;
    let innovation = y - (h * &belief.x_hat)[0];
    let x_hat = &belief.x_hat + &gain * innovation;
    let m = model.state_dim();
    let psi = linalg::symmetrize(&((DMatrix::identity(m, m) - &gain * h) * &belief.psi));
    Ok(BeliefState {
        x_hat,
        psi,
        phase: Phase::Posterior,
        t: belief.t,
    })
}
