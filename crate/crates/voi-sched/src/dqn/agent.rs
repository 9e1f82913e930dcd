//! Q-learning machinery: TD targets against a frozen target network, softmax
//! exploration, one-batch training steps, observation encoding, and the
//! greedy policy wrapper for a trained network.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::dynamics::SystemModel;
use crate::error::{Error, Result};
use crate::kalman::BeliefState;
use crate::policies::{Policy, SchedulerContext};
use crate::query_process::ClientSnapshot;

use super::network::{loss_and_gradients, Adam, Mode, QNetwork};
use super::replay::{Experience, ReplayMemory};

/// Training hyperparameters. Defaults follow the reference setup: γ = 0.9,
/// 100 episodes of 100 slots, batch 128, replay 10000, target sync every 10
/// steps, Adam at 1e-4, dropout 0.1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub gamma: f64,
    pub train_episodes: usize,
    pub test_episodes: usize,
    pub episode_len: usize,
    pub batch_size: usize,
    pub target_update_period: usize,
    pub replay_capacity: usize,
    pub learning_rate: f64,
    pub dropout_p: f64,
    /// Softmax temperature schedule τ(ep) = max(floor, initial·decay^ep).
    pub temperature_initial: f64,
    pub temperature_decay: f64,
    pub temperature_floor: f64,
    /// Monte Carlo draws per query-answer during training rewards.
    pub estimate_samples: usize,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            gamma: 0.9,
            train_episodes: 100,
            test_episodes: 10,
            episode_len: 100,
            batch_size: 128,
            target_update_period: 10,
            replay_capacity: 10_000,
            learning_rate: 1e-4,
            dropout_p: 0.1,
            temperature_initial: 1.0,
            temperature_decay: 0.98,
            temperature_floor: 0.05,
            estimate_samples: 1000,
            seed: 1,
        }
    }
}

impl TrainConfig {
    /// Exploration temperature for a training episode.
    pub fn temperature(&self, episode: usize) -> f64 {
        (self.temperature_initial * self.temperature_decay.powi(episode as i32))
            .max(self.temperature_floor)
    }

    /// Stable hash of the configuration, recorded in checkpoints.
    pub fn hash(&self) -> String {
        let json = serde_json::to_string(self).expect("config serializes");
        let digest = Sha256::digest(json.as_bytes());
        let mut out = String::with_capacity(64);
        for byte in digest {
            out.push_str(&format!("{byte:02x}"));
        }
        out
    }
}

/// Softmax probabilities over Q-values at temperature `tau`, computed with
/// max-subtraction.
pub fn softmax_probs(q: &[f64], tau: f64) -> Result<Vec<f64>> {
    if tau <= 0.0 || tau.is_nan() {
        return Err(Error::InvalidArgument(format!(
            "temperature {tau} must be positive"
        )));
    }
    if q.is_empty() {
        return Err(Error::InvalidArgument("empty Q-value vector".into()));
    }
    let max = q.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = q.iter().map(|v| ((v - max) / tau).exp()).collect();
    let sum: f64 = exps.iter().sum();
    Ok(exps.into_iter().map(|e| e / sum).collect())
}

/// Sample an action from the softmax distribution over Q-values.
pub fn softmax_select<R: Rng + ?Sized>(q: &[f64], tau: f64, rng: &mut R) -> Result<usize> {
    let probs = softmax_probs(q, tau)?;
    let draw: f64 = rng.random();
    let mut acc = 0.0;
    for (i, p) in probs.iter().enumerate() {
        acc += p;
        if draw < acc {
            return Ok(i);
        }
    }
    Ok(probs.len() - 1)
}

/// The bootstrapped return estimate `r + γ·q`.
fn bootstrap(reward: f64, gamma: f64, best_next_q: f64) -> f64 {
    reward + gamma * best_next_q
}

/// TD target for one experience: the stored reward plus the discounted best
/// Q-value of the target network at the next observation.
pub fn td_target(experience: &Experience, target_net: &QNetwork, gamma: f64) -> Result<f64> {
    let next_q = target_net.q_values(&experience.next_state)?;
    Ok(bootstrap(experience.reward, gamma, next_q.max()))
}

/// One gradient step on a uniformly sampled batch. Returns `None` (skip)
/// while the memory holds fewer than `batch_size` items; otherwise the TD
/// regression loss of the batch.
///
/// The loss flows only through each sample's taken action; the regression
/// label for the raw network output is the negated TD target.
pub fn train_step<R: Rng + ?Sized>(
    update_net: &mut QNetwork,
    target_net: &QNetwork,
    memory: &ReplayMemory,
    optimizer: &mut Adam,
    config: &TrainConfig,
    rng: &mut R,
) -> Result<Option<f64>> {
    if memory.len() < config.batch_size {
        return Ok(None);
    }
    let batch = memory.sample(config.batch_size, rng);
    let dim = update_net.input_dim();
    let mut inputs = DMatrix::zeros(dim, batch.len());
    let mut actions = Vec::with_capacity(batch.len());
    let mut labels = Vec::with_capacity(batch.len());
    for (b, e) in batch.iter().enumerate() {
        inputs.column_mut(b).copy_from(&e.state);
        actions.push(e.action);
        labels.push(-td_target(e, target_net, config.gamma)?);
    }
    let (loss, grads) =
        loss_and_gradients(update_net, &inputs, &actions, &labels, Mode::Train, rng)?;
    optimizer.apply(update_net, &grads);
    Ok(Some(loss))
}

/// Overwrite the target network's parameters with the update network's.
pub fn sync_target(update_net: &QNetwork, target_net: &mut QNetwork) {
    target_net.copy_params_from(update_net);
}

/// Scales raw observations into network inputs: covariance entries by the
/// stationary trace, estimate entries by the per-component stationary RMS,
/// and each τ by its client's nominal query period (clipped at 100).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ObservationScaler {
    pub psi_scale: f64,
    pub x_scale: f64,
    pub tau_scales: Vec<f64>,
    pub tau_clip: f64,
}

impl ObservationScaler {
    pub fn new(model: &SystemModel, clients: &[ClientSnapshot]) -> Result<Self> {
        let stationary_trace = model.stationary_covariance()?.trace();
        Ok(Self {
            psi_scale: stationary_trace,
            x_scale: (stationary_trace / model.state_dim() as f64).sqrt(),
            tau_scales: clients.iter().map(|c| c.nominal_period).collect(),
            tau_clip: 100.0,
        })
    }

    /// Observation vector length `M² + M + C`.
    pub fn encode(&self, belief: &BeliefState, clients: &[ClientSnapshot]) -> DVector<f64> {
        let m = belief.x_hat.len();
        let mut out = DVector::zeros(m * m + m + clients.len());
        let mut k = 0;
        for i in 0..m {
            for j in 0..m {
                out[k] = belief.psi[(i, j)] / self.psi_scale;
                k += 1;
            }
        }
        for i in 0..m {
            out[k] = belief.x_hat[i] / self.x_scale;
            k += 1;
        }
        for (c, snap) in clients.iter().enumerate() {
            out[k] = (snap.tau as f64 / self.tau_scales[c]).min(self.tau_clip);
            k += 1;
        }
        out
    }
}

/// Greedy scheduler backed by a trained network; ties go to the lowest
/// sensor index.
#[derive(Debug, Clone)]
pub struct DqnPolicy {
    pub net: QNetwork,
    pub scaler: ObservationScaler,
}

impl DqnPolicy {
    pub fn new(net: QNetwork, scaler: ObservationScaler) -> Self {
        Self { net, scaler }
    }
}

impl Policy for DqnPolicy {
    fn decide(&mut self, ctx: &SchedulerContext<'_>, _rng: &mut ChaCha8Rng) -> Result<usize> {
        let obs = self.scaler.encode(ctx.belief_prior, ctx.clients);
        let q = self.net.q_values(&obs)?;
        let mut best = 0;
        for i in 1..q.len() {
            if q[i] > q[best] {
                best = i;
            }
        }
        Ok(best)
    }

    fn name(&self) -> &str {
        "dqn"
    }
}
