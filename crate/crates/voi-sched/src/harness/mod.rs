//! Scenario execution: slot-by-slot episodes, rewards, DQN training against
//! the simulated environment, metric aggregation and the CLI surface.

pub mod cli;
pub mod metrics;
pub mod scenario;

use nalgebra::DVector;

use crate::dqn::{self, Adam, Experience, ObservationScaler, QNetwork, ReplayMemory, TrainConfig};
use crate::dynamics::{SystemModel, TrueState};
use crate::error::{Error, Result};
use crate::kalman::{self, BeliefState};
use crate::linalg;
use crate::policies::{Policy, SchedulerContext};
use crate::queries::{self, QueryValue};
use crate::query_process::{ClientProcess, ClientSnapshot};
use crate::rng::{RunRng, Stream};

pub use scenario::{build_scenario, load_scenario_file, Scenario};

/// One answered query in a slot.
#[derive(Debug, Clone, PartialEq)]
pub struct QueryRecord {
    pub client: usize,
    pub kind: &'static str,
    /// Scalar response; `None` for the vector-valued state query.
    pub estimate: Option<f64>,
    pub true_value: Option<f64>,
    pub squared_error: f64,
    pub expected_mse: f64,
    pub alpha: f64,
}

/// Everything logged about one slot.
#[derive(Debug, Clone, PartialEq)]
pub struct SlotRecord {
    pub slot: u64,
    /// Polled sensor (0-based).
    pub action: usize,
    /// Whether the poll survived the erasure channel.
    pub delivered: bool,
    pub reward: f64,
    /// trace(ψ) after the slot's update.
    pub psi_trace: f64,
    /// End-of-slot age of information per sensor: 1 exactly when this slot's
    /// poll was delivered, otherwise 1 + slots since the last delivery.
    pub aoi: Vec<u64>,
    pub queries: Vec<QueryRecord>,
}

/// Per-slot records of one episode.
#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeLog {
    pub episode: u64,
    pub slots: Vec<SlotRecord>,
}

/// Slot reward: the α-weighted sum of expected MSEs over active queries,
/// negated.
pub fn reward(active: &[(f64, f64)]) -> f64 {
    -active.iter().map(|(alpha, mse)| alpha * mse).sum::<f64>()
}

/// Environment state threaded through one episode.
struct EpisodeEnv {
    truth: TrueState,
    belief: BeliefState,
    clients: Vec<ClientProcess>,
    aoi: Vec<u64>,
    process_rng: rand_chacha::ChaCha8Rng,
    measurement_rng: rand_chacha::ChaCha8Rng,
    channel_rng: rand_chacha::ChaCha8Rng,
    estimator_rng: rand_chacha::ChaCha8Rng,
    client_rngs: Vec<rand_chacha::ChaCha8Rng>,
}

impl EpisodeEnv {
    fn new(scenario: &Scenario, run: &RunRng) -> Result<Self> {
        let model = &scenario.model;
        let mut init_rng = run.stream(Stream::Init);
        let sqrt_inf = linalg::symmetric_sqrt(&scenario.initial_psi)?;
        let truth = TrueState::new(linalg::sample_gaussian(
            &DVector::zeros(model.state_dim()),
            &sqrt_inf,
            &mut init_rng,
        ));
        Ok(Self {
            truth,
            belief: BeliefState::new(
                DVector::zeros(model.state_dim()),
                scenario.initial_psi.clone(),
            ),
            clients: scenario.clients.clone(),
            // ages start staggered (sensor n at n+1), the steady state of a
            // one-poll-per-slot rotation; an all-equal cold start biases the
            // first window's age averages well below their stationary values
            aoi: (1..=model.sensor_count() as u64).collect(),
            process_rng: run.stream(Stream::Process),
            measurement_rng: run.stream(Stream::Measurement),
            channel_rng: run.stream(Stream::Channel),
            estimator_rng: run.stream(Stream::Estimator),
            client_rngs: (0..scenario.clients.len())
                .map(|c| run.stream(Stream::Client(c as u32)))
                .collect(),
        })
    }

    /// Advance truth, belief prediction and query chains; returns the prior
    /// belief and the indices of clients whose query is active this slot.
    fn begin_slot(&mut self, model: &SystemModel) -> Result<(BeliefState, Vec<usize>)> {
        self.truth = model.step(&self.truth, &mut self.process_rng)?;
        let prior = kalman::predict(model, &self.belief)?;
        let mut active = Vec::new();
        for (c, client) in self.clients.iter_mut().enumerate() {
            if client.advance(&mut self.client_rngs[c]) {
                active.push(c);
            }
        }
        Ok((prior, active))
    }

    /// Erasure draw, observation on success, Kalman update, query answering,
    /// reward and bookkeeping. Returns the slot record.
    fn finish_slot(
        &mut self,
        scenario: &Scenario,
        prior: &BeliefState,
        active: &[usize],
        slot: u64,
        action: usize,
    ) -> Result<SlotRecord> {
        let model = &scenario.model;
        if action >= model.sensor_count() {
            return Err(Error::SensorIndex {
                index: action,
                count: model.sensor_count(),
            });
        }
        let delivered = model.attempt_transmission(action, &mut self.channel_rng)?;
        let observation = if delivered {
            Some(model.observe(&self.truth, action, &mut self.measurement_rng)?)
        } else {
            None
        };
        self.belief = kalman::update(model, prior, action, observation)?;

        let mut records = Vec::with_capacity(active.len());
        let mut weighted = Vec::with_capacity(active.len());
        for &c in active {
            let client = &self.clients[c];
            let est = queries::estimate(
                &client.kind,
                &self.belief,
                scenario.estimate_samples,
                &mut self.estimator_rng,
            )?;
            let truth_value = queries::evaluate(&client.kind, &self.truth.x)?;
            let squared_error = est.value.squared_error(&truth_value)?;
            let (estimate, true_value) = match (&est.value, &truth_value) {
                (QueryValue::Scalar(a), QueryValue::Scalar(b)) => (Some(*a), Some(*b)),
                _ => (None, None),
            };
            weighted.push((client.alpha, est.expected_mse));
            records.push(QueryRecord {
                client: c,
                kind: client.kind.label(),
                estimate,
                true_value,
                squared_error,
                expected_mse: est.expected_mse,
                alpha: client.alpha,
            });
        }
        let slot_reward = reward(&weighted);

        for age in self.aoi.iter_mut() {
            *age += 1;
        }
        if delivered {
            self.aoi[action] = 1;
        }
        Ok(SlotRecord {
            slot,
            action,
            delivered,
            reward: slot_reward,
            psi_trace: self.belief.psi.trace(),
            aoi: self.aoi.clone(),
            queries: records,
        })
    }

    fn snapshots(&self) -> Vec<ClientSnapshot> {
        self.clients.iter().map(ClientProcess::snapshot).collect()
    }
}

/// Run one episode under `policy`. Episode streams derive from
/// `base.episode(episode_index)`, so logs are a pure function of
/// (scenario, policy, seed, index).
pub fn run_episode(
    scenario: &Scenario,
    policy: &mut dyn Policy,
    episode_index: u64,
    base: &RunRng,
) -> Result<EpisodeLog> {
    let run = base.episode(episode_index);
    let mut env = EpisodeEnv::new(scenario, &run)?;
    let mut policy_rng = run.stream(Stream::Policy);
    let mut slots = Vec::with_capacity(scenario.episode_len);
    for t in 0..scenario.episode_len as u64 {
        let (prior, active) = env.begin_slot(&scenario.model)?;
        let snapshots = env.snapshots();
        let action = policy.decide(
            &SchedulerContext {
                belief_prior: &prior,
                aoi: &env.aoi,
                clients: &snapshots,
                slot: t,
            },
            &mut policy_rng,
        )?;
        slots.push(env.finish_slot(scenario, &prior, &active, t, action)?);
    }
    Ok(EpisodeLog {
        episode: episode_index,
        slots,
    })
}

/// Run `episodes` seeded episodes and collect the logs.
pub fn evaluate_policy(
    scenario: &Scenario,
    policy: &mut dyn Policy,
    episodes: usize,
    seed: u64,
) -> Result<Vec<EpisodeLog>> {
    let base = RunRng::new(seed);
    (0..episodes as u64)
        .map(|e| run_episode(scenario, policy, e, &base))
        .collect()
}

/// One row of the training curve.
#[derive(Debug, Clone)]
pub struct TrainingEpisode {
    pub episode: usize,
    pub temperature: f64,
    pub total_reward: f64,
    pub mean_loss: f64,
    pub train_steps: usize,
}

/// A trained scheduler network plus its provenance.
pub struct TrainingOutput {
    pub net: QNetwork,
    pub scaler: ObservationScaler,
    pub curve: Vec<TrainingEpisode>,
    pub config_hash: String,
}

/// Train a DQN scheduler on the scenario's environment.
///
/// One environment step per training step; learning starts once the replay
/// memory holds a full batch, and the target network is re-synced every
/// `target_update_period` training steps. Action selection is softmax over
/// the update network's Q-values with the per-episode temperature schedule.
/// The whole run is a pure function of (scenario, config).
pub fn train_dqn(scenario: &Scenario, config: &TrainConfig) -> Result<TrainingOutput> {
    let model = &scenario.model;
    let run = RunRng::new(config.seed);
    let template_snapshots: Vec<ClientSnapshot> = scenario
        .clients
        .iter()
        .map(ClientProcess::snapshot)
        .collect();
    let scaler = ObservationScaler::new(model, &template_snapshots)?;
    let sizes = dqn::scheduler_layer_sizes(
        model.state_dim(),
        scenario.clients.len(),
        model.sensor_count(),
    );
    let mut update_net = QNetwork::new(sizes, config.dropout_p, &mut run.stream(Stream::Weights))?;
    let mut target_net = update_net.clone();
    let mut optimizer = Adam::new(&update_net, config.learning_rate);
    let mut memory = ReplayMemory::new(config.replay_capacity);
    let mut train_rng = run.stream(Stream::Replay);
    let mut train_steps = 0usize;
    let mut curve = Vec::with_capacity(config.train_episodes);

    let episode_scenario = Scenario {
        episode_len: config.episode_len,
        estimate_samples: config.estimate_samples,
        ..scenario.clone()
    };

    for episode in 0..config.train_episodes {
        let ep_run = run.episode(episode as u64);
        let mut env = EpisodeEnv::new(&episode_scenario, &ep_run)?;
        let mut explore_rng = ep_run.stream(Stream::Policy);
        let temperature = config.temperature(episode);
        let mut pending: Option<(DVector<f64>, usize, f64)> = None;
        let mut total_reward = 0.0;
        let mut loss_sum = 0.0;
        let mut loss_count = 0usize;

        for t in 0..config.episode_len as u64 {
            let (prior, active) = env.begin_slot(model)?;
            let observation = scaler.encode(&prior, &env.snapshots());
            if let Some((state, action, step_reward)) = pending.take() {
                memory.push(Experience {
                    state,
                    action,
                    reward: step_reward,
                    next_state: observation.clone(),
                });
            }
            let q = update_net.q_values(&observation)?;
            let action = dqn::softmax_select(q.as_slice(), temperature, &mut explore_rng)?;
            let record = env.finish_slot(&episode_scenario, &prior, &active, t, action)?;
            total_reward += record.reward;
            pending = Some((observation, action, record.reward));

            if let Some(loss) = dqn::train_step(
                &mut update_net,
                &target_net,
                &memory,
                &mut optimizer,
                config,
                &mut train_rng,
            )? {
                loss_sum += loss;
                loss_count += 1;
                train_steps += 1;
                if train_steps.is_multiple_of(config.target_update_period) {
                    dqn::sync_target(&update_net, &mut target_net);
                }
            }
        }

        // close the final transition with the next slot's observation
        let (prior, _) = env.begin_slot(model)?;
        let final_observation = scaler.encode(&prior, &env.snapshots());
        if let Some((state, action, step_reward)) = pending.take() {
            memory.push(Experience {
                state,
                action,
                reward: step_reward,
                next_state: final_observation,
            });
        }

        if !update_net.is_finite() {
            return Err(Error::Numeric(format!(
                "network diverged in training episode {episode}"
            )));
        }
        curve.push(TrainingEpisode {
            episode,
            temperature,
            total_reward,
            mean_loss: if loss_count > 0 {
                loss_sum / loss_count as f64
            } else {
                0.0
            },
            train_steps,
        });
    }

    Ok(TrainingOutput {
        net: update_net,
        scaler,
        curve,
        config_hash: config.hash(),
    })
}
