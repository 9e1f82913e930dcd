//! The monitored linear-Gaussian process and its noisy sensors.
//!
//! State recursion `x(t) = A·x(t−1) + v(t)` with `v ~ N(0, Σ_v)`, scalar
//! sensor readings `y_n = h_n·x + w_n`, and a per-sensor packet-erasure
//! channel with success probability `1 − ε_n`.

use nalgebra::{DMatrix, DVector};
use rand::Rng;

use crate::error::{Error, Result};
use crate::linalg;

/// Dimensions, dynamics and noise statistics of the monitored system.
///
/// Construction validates that the covariances are symmetric PSD (eigenvalue
/// floor `-1e-9`), that every erasure probability lies in `[0, 1]` and that
/// all dimensions agree. Square-root factors of both covariances are cached
/// for sampling, so singular (zero-noise) covariances are fine.
#[derive(Debug, Clone)]
pub struct SystemModel {
    a: DMatrix<f64>,
    h: DMatrix<f64>,
    sigma_v: DMatrix<f64>,
    sigma_w: DMatrix<f64>,
    epsilon: Vec<f64>,
    sqrt_v: DMatrix<f64>,
    sqrt_w: DMatrix<f64>,
}

impl SystemModel {
    pub fn new(
        a: DMatrix<f64>,
        h: DMatrix<f64>,
        sigma_v: DMatrix<f64>,
        sigma_w: DMatrix<f64>,
        epsilon: Vec<f64>,
    ) -> Result<Self> {
        let m = a.nrows();
        if m == 0 || a.ncols() != m {
            return Err(Error::Config(format!(
                "A must be square and non-empty, got {}x{}",
                a.nrows(),
                a.ncols()
            )));
        }
        let n = h.nrows();
        if n == 0 || h.ncols() != m {
            return Err(Error::Config(format!(
                "H must be Nx{} with N > 0, got {}x{}",
                m,
                h.nrows(),
                h.ncols()
            )));
        }
        if sigma_v.nrows() != m || sigma_v.ncols() != m {
            return Err(Error::Config("sigma_v must be MxM".into()));
        }
        if sigma_w.nrows() != n || sigma_w.ncols() != n {
            return Err(Error::Config("sigma_w must be NxN".into()));
        }
        if epsilon.len() != n {
            return Err(Error::Config(format!(
                "epsilon must have one entry per sensor ({n}), got {}",
                epsilon.len()
            )));
        }
        if let Some(bad) = epsilon
            .iter()
            .find(|e| !(0.0..=1.0).contains(*e) || e.is_nan())
        {
            return Err(Error::Config(format!(
                "erasure probability {bad} outside [0, 1]"
            )));
        }
        let sqrt_v = linalg::symmetric_sqrt(&sigma_v)?;
        let sqrt_w = linalg::symmetric_sqrt(&sigma_w)?;
        Ok(Self {
            a,
            h,
            sigma_v,
            sigma_w,
            epsilon,
            sqrt_v,
            sqrt_w,
        })
    }

    /// State dimension M.
    pub fn state_dim(&self) -> usize {
        self.a.nrows()
    }

    /// Sensor count N.
    pub fn sensor_count(&self) -> usize {
        self.h.nrows()
    }

    pub fn a(&self) -> &DMatrix<f64> {
        &self.a
    }

    pub fn h(&self) -> &DMatrix<f64> {
        &self.h
    }

    pub fn sigma_v(&self) -> &DMatrix<f64> {
        &self.sigma_v
    }

    pub fn sigma_w(&self) -> &DMatrix<f64> {
        &self.sigma_w
    }

    pub fn epsilon(&self) -> &[f64] {
        &self.epsilon
    }

    fn check_sensor(&self, sensor: usize) -> Result<()> {
        if sensor >= self.sensor_count() {
            return Err(Error::SensorIndex {
                index: sensor,
                count: self.sensor_count(),
            });
        }
        Ok(())
    }

    /// Stationary covariance `Σ_∞ = A Σ_∞ Aᵀ + Σ_v`, by fixed-point iteration
    /// to `1e-10`. Errors if `A` is not stable.
    pub fn stationary_covariance(&self) -> Result<DMatrix<f64>> {
        linalg::lyapunov_fixed_point(&self.a, &self.sigma_v, 1e-10, 1_000_000)
    }

    /// Advance the hidden state one slot: `x' = A·x + v`, `v ~ N(0, Σ_v)`.
    pub fn step<R: Rng + ?Sized>(&self, state: &TrueState, rng: &mut R) -> Result<TrueState> {
        if state.x.len() != self.state_dim() {
            return Err(Error::Config(format!(
                "state dimension {} does not match model M = {}",
                state.x.len(),
                self.state_dim()
            )));
        }
        let x = &self.a * &state.x
            + &self.sqrt_v * linalg::standard_normal_vector(self.state_dim(), rng);
        Ok(TrueState { x, t: state.t + 1 })
    }

    /// One noisy reading from sensor `sensor`: `y = h_n·x + w_n`, where `w`
    /// is drawn jointly from `N(0, Σ_w)` and the n-th component is kept.
    pub fn observe<R: Rng + ?Sized>(
        &self,
        state: &TrueState,
        sensor: usize,
        rng: &mut R,
    ) -> Result<f64> {
        self.check_sensor(sensor)?;
        if state.x.len() != self.state_dim() {
            return Err(Error::Config("state dimension does not match model".into()));
        }
        let noise = &self.sqrt_w * linalg::standard_normal_vector(self.sensor_count(), rng);
        Ok(self.h.row(sensor).transpose().dot(&state.x) + noise[sensor])
    }

    /// Bernoulli channel outcome for one poll: `true` with probability `1 − ε_n`.
    pub fn attempt_transmission<R: Rng + ?Sized>(
        &self,
        sensor: usize,
        rng: &mut R,
    ) -> Result<bool> {
        self.check_sensor(sensor)?;
        Ok(rng.random::<f64>() >= self.epsilon[sensor])
    }
}

/// The hidden process state at a slot.
#[derive(Debug, Clone, PartialEq)]
pub struct TrueState {
    pub x: DVector<f64>,
    pub t: u64,
}

impl TrueState {
    pub fn new(x: DVector<f64>) -> Self {
        Self { x, t: 0 }
    }
}
