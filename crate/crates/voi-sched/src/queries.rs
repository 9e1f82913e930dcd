//! Query functions on the true state, MMSE response estimators on the
//! belief, per-query expected MSE, and the value of information of a
//! candidate poll.
//!
//! State and Mean responses are linear and have closed forms. The Variance
//! response mean also has a closed form (Gaussian moment identity) while its
//! MSE is sampled. Max and CountRange are answered by Monte Carlo over draws
//! from `N(x̂, ψ)`.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;

use crate::dynamics::SystemModel;
use crate::error::{Error, Result};
use crate::kalman::{self, BeliefState, Phase};
use crate::linalg;

/// What a client asks for.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum QueryKind {
    /// The full state vector.
    State,
    /// Sample mean of the state components.
    Mean,
    /// Sample variance of the state components (divisor M−1).
    Variance,
    /// Largest state component.
    Max,
    /// Number of components inside the closed interval `[lo, hi]`.
    CountRange { lo: f64, hi: f64 },
}

impl QueryKind {
    pub fn label(&self) -> &'static str {
        match self {
            QueryKind::State => "state",
            QueryKind::Mean => "mean",
            QueryKind::Variance => "variance",
            QueryKind::Max => "max",
            QueryKind::CountRange { .. } => "count_range",
        }
    }

    /// Whether the response mean and MSE both have closed forms.
    fn fully_closed_form(&self) -> bool {
        matches!(self, QueryKind::State | QueryKind::Mean)
    }

    fn validate(&self, state_dim: usize) -> Result<()> {
        match self {
            QueryKind::CountRange { lo, hi } => {
                if lo > hi || lo.is_nan() || hi.is_nan() {
                    return Err(Error::InvalidQuery(format!(
                        "count range requires lo <= hi, got [{lo}, {hi}]"
                    )));
                }
            }
            QueryKind::Variance if state_dim < 2 => {
                return Err(Error::InvalidQuery(
                    "variance query requires state dimension >= 2".into(),
                ));
            }
            _ => {}
        }
        Ok(())
    }
}

/// A query response: scalar for everything except the State kind.
#[derive(Debug, Clone, PartialEq)]
pub enum QueryValue {
    Scalar(f64),
    Vector(DVector<f64>),
}

impl QueryValue {
    /// Scalar payload; errors on the vector-valued State response.
    pub fn scalar(&self) -> Result<f64> {
        match self {
            QueryValue::Scalar(v) => Ok(*v),
            QueryValue::Vector(_) => Err(Error::InvalidArgument(
                "state response is vector-valued".into(),
            )),
        }
    }

    /// Squared error against another value of the same shape
    /// (squared Euclidean norm for vectors).
    pub fn squared_error(&self, other: &QueryValue) -> Result<f64> {
        match (self, other) {
            (QueryValue::Scalar(a), QueryValue::Scalar(b)) => Ok((a - b) * (a - b)),
            (QueryValue::Vector(a), QueryValue::Vector(b)) => {
                if a.len() != b.len() {
                    return Err(Error::InvalidArgument("vector length mismatch".into()));
                }
                Ok((a - b).norm_squared())
            }
            _ => Err(Error::InvalidArgument("mismatched response shapes".into())),
        }
    }
}

/// Response estimate plus its expected squared error.
#[derive(Debug, Clone)]
pub struct QueryEstimate {
    pub value: QueryValue,
    pub expected_mse: f64,
    /// Monte Carlo draws consumed; 0 when fully closed form.
    pub samples_used: usize,
}

/// The exact query function applied to a ground-truth vector.
pub fn evaluate(kind: &QueryKind, x: &DVector<f64>) -> Result<QueryValue> {
    kind.validate(x.len())?;
    if x.is_empty() {
        return Err(Error::InvalidQuery("empty state vector".into()));
    }
    Ok(match kind {
        QueryKind::State => QueryValue::Vector(x.clone()),
        _ => QueryValue::Scalar(scalar_query(kind, x.as_slice())),
    })
}

/// Scalar query kinds evaluated on a raw component slice.
fn scalar_query(kind: &QueryKind, x: &[f64]) -> f64 {
    let m = x.len() as f64;
    match kind {
        QueryKind::State => unreachable!("state responses are vector-valued"),
        QueryKind::Mean => x.iter().sum::<f64>() / m,
        QueryKind::Variance => {
            let mean = x.iter().sum::<f64>() / m;
            x.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (m - 1.0)
        }
        QueryKind::Max => x.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        QueryKind::CountRange { lo, hi } => {
            x.iter().filter(|v| **v >= *lo && **v <= *hi).count() as f64
        }
    }
}

/// Closed-form conditional mean of the sample variance under `N(mu, psi)`:
/// `E[S²] = [Σ_m(ψ_mm + μ_m²) − M·(1ᵀψ1/M² + μ̄²)] / (M−1)`.
fn variance_conditional_mean(mu: &DVector<f64>, psi: &DMatrix<f64>) -> f64 {
    let m = mu.len() as f64;
    let second_moments: f64 = (0..mu.len()).map(|i| psi[(i, i)] + mu[i] * mu[i]).sum();
    let mean_of_mu = mu.sum() / m;
    let var_of_mean = psi.sum() / (m * m);
    (second_moments - m * (var_of_mean + mean_of_mu * mean_of_mu)) / (m - 1.0)
}

/// MMSE response estimate and its expected squared error.
///
/// `samples` is the Monte Carlo budget for the kinds that need it; it is
/// ignored by the fully closed-form kinds. A belief with `ψ = 0` exactly is
/// degenerate: the response is `evaluate(kind, x̂)` with zero MSE.
pub fn estimate<R: Rng + ?Sized>(
    kind: &QueryKind,
    belief: &BeliefState,
    samples: usize,
    rng: &mut R,
) -> Result<QueryEstimate> {
    kind.validate(belief.x_hat.len())?;
    if belief.psi.iter().all(|v| *v == 0.0) {
        return Ok(QueryEstimate {
            value: evaluate(kind, &belief.x_hat)?,
            expected_mse: 0.0,
            samples_used: 0,
        });
    }
    match kind {
        QueryKind::State => Ok(QueryEstimate {
            value: QueryValue::Vector(belief.x_hat.clone()),
            expected_mse: belief.psi.trace(),
            samples_used: 0,
        }),
        QueryKind::Mean => {
            let m = belief.x_hat.len() as f64;
            Ok(QueryEstimate {
                value: QueryValue::Scalar(belief.x_hat.sum() / m),
                expected_mse: belief.psi.sum() / (m * m),
                samples_used: 0,
            })
        }
        _ => {
            if samples == 0 {
                return Err(Error::InvalidArgument(
                    "Monte Carlo query kinds need at least one sample".into(),
                ));
            }
            let sqrt = linalg::symmetric_sqrt(&belief.psi)?;
            let offsets = sample_offsets(&sqrt, samples, rng);
            let (value, mse) = estimate_from_offsets(kind, &belief.x_hat, &belief.psi, &offsets);
            Ok(QueryEstimate {
                value: QueryValue::Scalar(value),
                expected_mse: mse,
                samples_used: samples,
            })
        }
    }
}

/// `sqrt · Ξ` for `samples` standard-normal columns.
fn sample_offsets<R: Rng + ?Sized>(
    sqrt: &DMatrix<f64>,
    samples: usize,
    rng: &mut R,
) -> DMatrix<f64> {
    let m = sqrt.nrows();
    let xi = DMatrix::from_fn(m, samples, |_, _| rng.sample(StandardNormal));
    sqrt * xi
}

/// Monte Carlo response mean and MSE given precomputed sample offsets.
///
/// Max and CountRange use the sample mean of the query values as the
/// response; Variance uses its closed-form conditional mean. Either way the
/// MSE is the mean squared deviation of the sampled query values from the
/// response.
fn estimate_from_offsets(
    kind: &QueryKind,
    x_hat: &DVector<f64>,
    psi: &DMatrix<f64>,
    offsets: &DMatrix<f64>,
) -> (f64, f64) {
    let samples = offsets.ncols();
    let m = x_hat.len();
    let data = offsets.as_slice(); // column-major: column j is contiguous
    let mut draw = vec![0.0f64; m];
    let mut values = Vec::with_capacity(samples);
    for j in 0..samples {
        let column = &data[j * m..(j + 1) * m];
        for i in 0..m {
            draw[i] = x_hat[i] + column[i];
        }
        values.push(scalar_query(kind, &draw));
    }
    let sample_mean = values.iter().sum::<f64>() / samples as f64;
    let response = match kind {
        QueryKind::Variance => variance_conditional_mean(x_hat, psi),
        _ => sample_mean,
    };
    let mse = values
        .iter()
        .map(|z| (z - response) * (z - response))
        .sum::<f64>()
        / samples as f64;
    (response, mse)
}

/// Monte Carlo budgets for [`voi`].
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct VoiParams {
    /// Hypothetical observations averaged over (outer loop).
    pub hypothetical_obs: usize,
    /// Draws per MSE estimate (inner loop, also used for the prior term).
    pub inner_samples: usize,
}

impl Default for VoiParams {
    fn default() -> Self {
        Self {
            hypothetical_obs: 200,
            inner_samples: 500,
        }
    }
}

/// Expected reduction in query MSE from polling `sensor`, discounted by the
/// channel success probability:
/// `θ = (1−ε_n)·(MSE_prior − E_y[MSE_posterior])`.
///
/// Hypothetical observations are drawn from the prior predictive
/// `N(h·x̂_pri, h·ψ_pri·hᵀ + σ_w²)`; each is run through the Kalman update
/// and re-estimated. The posterior covariance does not depend on the observed
/// value, so its square-root factor is computed once, and one shared matrix
/// of standard-normal draws feeds both the prior MSE term and every
/// hypothetical posterior (common random numbers): the sampling noise cancels
/// in the difference, and θ collapses to exactly zero when a poll carries no
/// information. A sensor whose predictive variance is below `1e-12` yields
/// `θ = 0`.
pub fn voi<R: Rng + ?Sized>(
    kind: &QueryKind,
    belief_prior: &BeliefState,
    model: &SystemModel,
    sensor: usize,
    params: &VoiParams,
    rng: &mut R,
) -> Result<f64> {
    if belief_prior.phase != Phase::Prior {
        return Err(Error::InvalidArgument(
            "voi requires a prior-phase belief".into(),
        ));
    }
    kind.validate(belief_prior.x_hat.len())?;
    if sensor >= model.sensor_count() {
        return Err(Error::SensorIndex {
            index: sensor,
            count: model.sensor_count(),
        });
    }
    let survive = 1.0 - model.epsilon()[sensor];
    if survive == 0.0 {
        return Ok(0.0);
    }
    let predictive_var = kalman::innovation_variance(model, belief_prior, sensor)?;
    if predictive_var <= 1e-12 {
        return Ok(0.0);
    }
    if belief_prior.psi.iter().all(|v| *v == 0.0) {
        return Ok(0.0);
    }

    let h = model.h().row(sensor);
    let y_mean = (h * &belief_prior.x_hat)[0];

    if kind.fully_closed_form() {
        // MSE depends only on ψ, which is the same for every observation.
        let prior_mse = estimate(kind, belief_prior, 0, rng)?.expected_mse;
        let post = kalman::update(model, belief_prior, sensor, Some(y_mean))?;
        let post_mse = estimate(kind, &post, 0, rng)?.expected_mse;
        return Ok(survive * (prior_mse - post_mse));
    }

    if params.hypothetical_obs == 0 || params.inner_samples == 0 {
        return Err(Error::InvalidArgument(
            "voi sample counts must be positive".into(),
        ));
    }

    let m = belief_prior.x_hat.len();
    let xi = DMatrix::from_fn(m, params.inner_samples, |_, _| rng.sample(StandardNormal));

    let sqrt_prior = linalg::symmetric_sqrt(&belief_prior.psi)?;
    let prior_offsets = &sqrt_prior * &xi;
    let (_, prior_mse) =
        estimate_from_offsets(kind, &belief_prior.x_hat, &belief_prior.psi, &prior_offsets);

    let template = kalman::update(model, belief_prior, sensor, Some(y_mean))?;
    let sqrt_post = linalg::symmetric_sqrt(&template.psi)?;
    let post_offsets = &sqrt_post * &xi;

    let y_std = predictive_var.sqrt();
    let mut acc = 0.0;
    for _ in 0..params.hypothetical_obs {
        let y = y_mean + y_std * rng.sample::<f64, _>(StandardNormal);
        let post = kalman::update(model, belief_prior, sensor, Some(y))?;
        let (_, mse) = estimate_from_offsets(kind, &post.x_hat, &post.psi, &post_offsets);
        acc += mse;
    }
    let post_mse = acc / params.hypothetical_obs as f64;
    Ok(survive * (prior_mse - post_mse))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{RunRng, Stream};
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn belief(x: Vec<f64>, psi: DMatrix<f64>) -> BeliefState {
        BeliefState::new(DVector::from_vec(x), psi)
    }

    #[test]
    fn evaluate_examples() {
        let max = evaluate(&QueryKind::Max, &DVector::from_vec(vec![1.0, 3.0, 2.0])).unwrap();
        assert_eq!(max, QueryValue::Scalar(3.0));

        let cnt = evaluate(
            &QueryKind::CountRange { lo: -5.0, hi: 0.0 },
            &DVector::from_vec(vec![-6.0, -3.0, 1.0]),
        )
        .unwrap();
        assert_eq!(cnt, QueryValue::Scalar(1.0));

        let var = evaluate(
            &QueryKind::Variance,
            &DVector::from_vec(vec![1.0, 1.0, 1.0]),
        )
        .unwrap();
        assert_eq!(var, QueryValue::Scalar(0.0));

        let mean = evaluate(&QueryKind::Mean, &DVector::from_vec(vec![2.0, 4.0])).unwrap();
        assert_eq!(mean, QueryValue::Scalar(3.0));
    }

    #[test]
    fn count_range_endpoints_are_inclusive() {
        let kind = QueryKind::CountRange { lo: -5.0, hi: 0.0 };
        let v = evaluate(&kind, &DVector::from_vec(vec![-5.0, 0.0, 0.0001])).unwrap();
        assert_eq!(v, QueryValue::Scalar(2.0));
    }

    #[test]
    fn variance_needs_two_components() {
        let err = evaluate(&QueryKind::Variance, &DVector::from_vec(vec![1.0]));
        assert!(matches!(err, Err(Error::InvalidQuery(_))));
    }

    #[test]
    fn count_range_rejects_inverted_interval() {
        let err = evaluate(
            &QueryKind::CountRange { lo: 1.0, hi: -1.0 },
            &DVector::from_vec(vec![0.0]),
        );
        assert!(matches!(err, Err(Error::InvalidQuery(_))));
    }

    #[test]
    fn degenerate_belief_is_exact_for_every_kind() {
        let kinds = [
            QueryKind::State,
            QueryKind::Mean,
            QueryKind::Variance,
            QueryKind::Max,
            QueryKind::CountRange { lo: -1.0, hi: 2.0 },
        ];
        let b = belief(vec![0.3, 1.7, -0.2], DMatrix::zeros(3, 3));
        let mut rng = RunRng::new(0).stream(Stream::Estimator);
        for kind in &kinds {
            let est = estimate(kind, &b, 100, &mut rng).unwrap();
            assert_eq!(est.value, evaluate(kind, &b.x_hat).unwrap(), "{kind:?}");
            assert_eq!(est.expected_mse, 0.0);
            assert_eq!(est.samples_used, 0);
        }
    }

    #[test]
    fn mean_estimate_is_closed_form() {
        let b = belief(
            vec![1.0, 3.0],
            DMatrix::from_row_slice(2, 2, &[2.0, 0.5, 0.5, 1.0]),
        );
        let mut rng = RunRng::new(0).stream(Stream::Estimator);
        let est = estimate(&QueryKind::Mean, &b, 10, &mut rng).unwrap();
        assert_eq!(est.value, QueryValue::Scalar(2.0));
        assert_relative_eq!(est.expected_mse, 4.0 / 4.0, epsilon = 1e-15);
        assert_eq!(est.samples_used, 0);
    }

    #[test]
    fn state_estimate_is_trace() {
        let b = belief(
            vec![1.0, 3.0],
            DMatrix::from_row_slice(2, 2, &[2.0, 0.5, 0.5, 1.0]),
        );
        let mut rng = RunRng::new(0).stream(Stream::Estimator);
        let est = estimate(&QueryKind::State, &b, 10, &mut rng).unwrap();
        assert_eq!(est.value, QueryValue::Vector(b.x_hat.clone()));
        assert_relative_eq!(est.expected_mse, 3.0, epsilon = 1e-15);
    }

    #[test]
    fn variance_closed_form_standard_normal() {
        // x̂ = 0, ψ = I₂: E[S²] = 1 exactly.
        let b = belief(vec![0.0, 0.0], DMatrix::identity(2, 2));
        let mut rng = RunRng::new(1).stream(Stream::Estimator);
        let est = estimate(&QueryKind::Variance, &b, 50_000, &mut rng).unwrap();
        let QueryValue::Scalar(v) = est.value else {
            panic!()
        };
        assert_relative_eq!(v, 1.0, epsilon = 1e-12);
        assert!(est.expected_mse > 0.0);
    }

    #[test]
    fn count_range_matches_gaussian_cdf() {
        // M = 1, ψ = 1, x̂ = 0, interval [−5, 0]: ẑ → Φ(0) − Φ(−5),
        // MSE → ẑ(1 − ẑ) (Bernoulli variance), both within ±0.01 at S = 1e5.
        use statrs::distribution::{ContinuousCDF, Normal};
        let n01 = Normal::new(0.0, 1.0).unwrap();
        let closed = n01.cdf(0.0) - n01.cdf(-5.0);
        let b = belief(vec![0.0], DMatrix::identity(1, 1));
        let mut rng = RunRng::new(2).stream(Stream::Estimator);
        let est = estimate(
            &QueryKind::CountRange { lo: -5.0, hi: 0.0 },
            &b,
            100_000,
            &mut rng,
        )
        .unwrap();
        let QueryValue::Scalar(v) = est.value else {
            panic!()
        };
        assert!((v - closed).abs() < 0.01, "estimate {v} vs {closed}");
        assert!((est.expected_mse - closed * (1.0 - closed)).abs() < 0.01);
        assert_eq!(est.samples_used, 100_000);
    }

    #[test]
    fn monte_carlo_count_converges_at_sqrt_rate() {
        use statrs::distribution::{ContinuousCDF, Normal};
        let n01 = Normal::new(0.0, 1.0).unwrap();
        let closed = n01.cdf(0.0) - n01.cdf(-5.0);
        let kind = QueryKind::CountRange { lo: -5.0, hi: 0.0 };
        let b = belief(vec![0.0], DMatrix::identity(1, 1));
        for (i, s) in [1_000usize, 10_000, 100_000].into_iter().enumerate() {
            let mut rng = RunRng::new(100 + i as u64).stream(Stream::Estimator);
            let est = estimate(&kind, &b, s, &mut rng).unwrap();
            let QueryValue::Scalar(v) = est.value else {
                panic!()
            };
            // Bernoulli draws: σ̂ = sqrt(ẑ(1−ẑ)); tolerance 3σ̂/√S.
            let sigma = (v * (1.0 - v)).sqrt();
            assert!(
                (v - closed).abs() <= 3.0 * sigma / (s as f64).sqrt(),
                "S = {s}: {v} vs {closed}"
            );
        }
    }

    #[test]
    fn zero_sample_monte_carlo_is_invalid() {
        let b = belief(vec![0.0, 1.0], DMatrix::identity(2, 2));
        let mut rng = RunRng::new(0).stream(Stream::Estimator);
        assert!(matches!(
            estimate(&QueryKind::Max, &b, 0, &mut rng),
            Err(Error::InvalidArgument(_))
        ));
    }

    #[test]
    fn non_psd_belief_is_rejected() {
        let b = belief(
            vec![0.0, 0.0],
            DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0]),
        );
        let mut rng = RunRng::new(0).stream(Stream::Estimator);
        assert!(matches!(
            estimate(&QueryKind::Max, &b, 10, &mut rng),
            Err(Error::NotPositiveSemidefinite { .. })
        ));
    }

    fn scalar_prior(model: &SystemModel) -> BeliefState {
        BeliefState {
            x_hat: DVector::zeros(model.state_dim()),
            psi: DMatrix::identity(model.state_dim(), model.state_dim()),
            phase: Phase::Prior,
            t: 1,
        }
    }

    #[test]
    fn voi_scalar_state_closed_form() {
        // ψ_pri = 1, σ_w² = 1, ε = 0.02: posterior variance 0.5,
        // θ = 0.98·(1 − 0.5) = 0.49 exactly.
        let model = SystemModel::new(
            DMatrix::identity(1, 1),
            DMatrix::identity(1, 1),
            DMatrix::zeros(1, 1),
            DMatrix::identity(1, 1),
            vec![0.02],
        )
        .unwrap();
        let prior = scalar_prior(&model);
        let mut rng = RunRng::new(0).stream(Stream::Policy);
        let theta = voi(
            &QueryKind::State,
            &prior,
            &model,
            0,
            &VoiParams::default(),
            &mut rng,
        )
        .unwrap();
        assert_relative_eq!(theta, 0.49, epsilon = 1e-12);
    }

    #[test]
    fn voi_is_zero_when_channel_always_fails() {
        let model = SystemModel::new(
            DMatrix::identity(1, 1),
            DMatrix::identity(1, 1),
            DMatrix::zeros(1, 1),
            DMatrix::identity(1, 1),
            vec![1.0],
        )
        .unwrap();
        let prior = scalar_prior(&model);
        let mut rng = RunRng::new(0).stream(Stream::Policy);
        let theta = voi(
            &QueryKind::Max,
            &prior,
            &model,
            0,
            &VoiParams::default(),
            &mut rng,
        )
        .unwrap();
        assert_eq!(theta, 0.0);
    }

    #[test]
    fn voi_is_zero_on_degenerate_prior() {
        let model = SystemModel::new(
            DMatrix::identity(2, 2),
            DMatrix::identity(2, 2),
            DMatrix::zeros(2, 2),
            DMatrix::identity(2, 2),
            vec![0.0, 0.0],
        )
        .unwrap();
        let prior = BeliefState {
            x_hat: DVector::zeros(2),
            psi: DMatrix::zeros(2, 2),
            phase: Phase::Prior,
            t: 1,
        };
        let mut rng = RunRng::new(0).stream(Stream::Policy);
        let theta = voi(
            &QueryKind::Max,
            &prior,
            &model,
            0,
            &VoiParams::default(),
            &mut rng,
        )
        .unwrap();
        assert_eq!(theta, 0.0);
    }

    #[test]
    fn voi_nonlinear_kinds_not_significantly_negative() {
        // Monte Carlo θ may dip below zero; it must stay within 3 standard
        // errors of it, estimated over repeated independent evaluations.
        let model = SystemModel::new(
            DMatrix::identity(2, 2) * 0.9,
            DMatrix::identity(2, 2),
            DMatrix::identity(2, 2),
            DMatrix::identity(2, 2),
            vec![0.1, 0.1],
        )
        .unwrap();
        let prior = BeliefState {
            x_hat: DVector::from_vec(vec![0.5, -0.5]),
            psi: DMatrix::identity(2, 2) * 1.5,
            phase: Phase::Prior,
            t: 1,
        };
        let params = VoiParams {
            hypothetical_obs: 50,
            inner_samples: 200,
        };
        for kind in [QueryKind::Max, QueryKind::CountRange { lo: -1.0, hi: 1.0 }] {
            let runs: Vec<f64> = (0..8)
                .map(|i| {
                    let mut rng = RunRng::new(40 + i).stream(Stream::Policy);
                    voi(&kind, &prior, &model, 0, &params, &mut rng).unwrap()
                })
                .collect();
            let mean = runs.iter().sum::<f64>() / runs.len() as f64;
            let var =
                runs.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (runs.len() - 1) as f64;
            let se = (var / runs.len() as f64).sqrt();
            assert!(mean >= -3.0 * se, "{kind:?}: mean {mean}, se {se}");
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        // θ for the State kind is exactly non-negative: a linear-Gaussian
        // update never increases trace(ψ).
        #[test]
        fn voi_state_nonnegative(seed in 0u64..10_000) {
            let mut rng = RunRng::new(seed).stream(Stream::Policy);
            let m = 3;
            let g = DMatrix::from_fn(m, m, |_, _| rng.random_range(-1.0..1.0));
            let psi = &g * g.transpose() + DMatrix::identity(m, m) * 0.01;
            let model = SystemModel::new(
                DMatrix::identity(m, m),
                DMatrix::identity(m, m),
                DMatrix::zeros(m, m),
                DMatrix::identity(m, m) * rng.random_range(0.01..2.0),
                vec![rng.random_range(0.0..0.9); m],
            ).unwrap();
            let prior = BeliefState {
                x_hat: DVector::from_fn(m, |_, _| rng.random_range(-3.0..3.0)),
                psi,
                phase: Phase::Prior,
                t: 1,
            };
            let sensor = rng.random_range(0..m);
            let theta = voi(&QueryKind::State, &prior, &model, sensor,
                            &VoiParams::default(), &mut rng).unwrap();
            prop_assert!(theta >= -1e-9);
        }

        // Count estimates live in [0, M]; max estimates respect a generous
        // lower bound from the belief mean.
        #[test]
        fn estimate_range_sanity(seed in 0u64..10_000) {
            let mut rng = RunRng::new(seed).stream(Stream::Estimator);
            let m = 4;
            let g = DMatrix::from_fn(m, m, |_, _| rng.random_range(-1.0..1.0));
            let psi = &g * g.transpose();
            let x_hat = DVector::from_fn(m, |_, _| rng.random_range(-5.0..5.0));
            let b = BeliefState::new(x_hat.clone(), psi.clone());
            let cnt = estimate(&QueryKind::CountRange { lo: -2.0, hi: 2.0 }, &b, 400, &mut rng)
                .unwrap();
            let QueryValue::Scalar(c) = cnt.value else { panic!() };
            prop_assert!((0.0..=m as f64).contains(&c));

            let max = estimate(&QueryKind::Max, &b, 400, &mut rng).unwrap();
            let QueryValue::Scalar(mx) = max.value else { panic!() };
            let psi_cap = (0..m).map(|i| psi[(i, i)]).fold(0.0f64, f64::max);
            prop_assert!(mx >= x_hat.max() - 5.0 * psi_cap.sqrt());
        }
    }
}
