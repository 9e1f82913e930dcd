//! Exact treatment of the two-sensor binary example.
//!
//! Two independent binary chains flip with probabilities `p_1`, `p_2`; the
//! edge node polls one per slot over an error-free channel and answers a
//! maximum or count query every slot. Because observations are exact, the
//! pair (age of last observation, observed value) per chain fully describes
//! the belief, so the scheduling problem becomes a finite MDP once ages are
//! capped, and policy iteration solves it exactly.

use std::io::Write;

use crate::error::{Error, Result};

/// Flip probabilities, age cap and discount of the two-chain instance.
#[derive(Debug, Clone, Copy)]
pub struct ToyModel {
    pub flip_probs: (f64, f64),
    pub max_age: usize,
    pub gamma: f64,
}

impl ToyModel {
    pub fn new(p1: f64, p2: f64, max_age: usize, gamma: f64) -> Result<Self> {
        for p in [p1, p2] {
            if !(p > 0.0 && p < 1.0) {
                return Err(Error::Config(format!(
                    "flip probability {p} outside (0, 1)"
                )));
            }
        }
        if max_age < 2 {
            return Err(Error::Config("age cap must be at least 2".into()));
        }
        if !(0.0..1.0).contains(&gamma) {
            return Err(Error::Config(format!("discount {gamma} outside [0, 1)")));
        }
        Ok(Self {
            flip_probs: (p1, p2),
            max_age,
            gamma,
        })
    }
}

/// Which query the single client asks every slot.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ToyQuery {
    Max,
    Count,
}

/// Expanded MDP state: per-chain observation ages (1..=max_age) and the last
/// observed values.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ToyState {
    pub ages: (usize, usize),
    pub obs: (u8, u8),
}

/// Probability that a chain with flip probability `p` is in state
/// (0, 1) given the value `obs` observed `age` transitions ago:
/// the observed value keeps probability `(1 + (1−2p)^age) / 2`.
pub fn posterior(p: f64, age: u32, obs: u8) -> (f64, f64) {
    let stick = 0.5 * (1.0 + (1.0 - 2.0 * p).powi(age as i32));
    let flip = 1.0 - stick;
    if obs == 0 {
        (stick, flip)
    } else {
        (flip, stick)
    }
}

/// Closed-form MMSE responses and errors for both query kinds at a state.
#[derive(Debug, Clone, Copy)]
pub struct ToyResponses {
    pub z_max: f64,
    pub z_cnt: f64,
    pub mse_max: f64,
    pub mse_cnt: f64,
}

/// `ẑ_max = 1 − P_{1,0}·P_{2,0}`, `ẑ_cnt = P_{1,1} + P_{2,1}`, with the
/// Bernoulli MSEs that follow.
pub fn mmse_responses(model: &ToyModel, state: &ToyState) -> ToyResponses {
    let (p1_0, p1_1) = posterior(model.flip_probs.0, state.ages.0 as u32, state.obs.0);
    let (p2_0, p2_1) = posterior(model.flip_probs.1, state.ages.1 as u32, state.obs.1);
    let z_max = 1.0 - p1_0 * p2_0;
    let z_cnt = p1_1 + p2_1;
    ToyResponses {
        z_max,
        z_cnt,
        mse_max: p1_0 * p2_0 * (1.0 - p1_0 * p2_0),
        mse_cnt: p1_0 + p2_0 - p1_0 * p1_0 - p2_0 * p2_0,
    }
}

fn query_mse(model: &ToyModel, query: ToyQuery, state: &ToyState) -> f64 {
    let r = mmse_responses(model, state);
    match query {
        ToyQuery::Max => r.mse_max,
        ToyQuery::Count => r.mse_cnt,
    }
}

/// Explicit finite MDP over the expanded states.
///
/// Ages count transitions since capture as of the slot's decision instant,
/// so polling chain `a` draws the fresh observation from
/// `posterior(p_a, Δ_a, o_a)`. The slot's query is answered right after the
/// poll: the polled chain is known exactly (age 0) and the other chain sits
/// at its recorded age. The per-action cost is that answer-time query MSE,
/// averaged over the poll outcome. In the successor the polled age is 1 and
/// the other age increments, saturating at the cap.
#[derive(Debug, Clone)]
pub struct ToyMdp {
    pub states: Vec<ToyState>,
    /// `transitions[s][a]` = two (successor index, probability) pairs.
    pub transitions: Vec<[[(usize, f64); 2]; 2]>,
    /// `costs[s][a]` = expected answer-time query MSE after polling `a`.
    pub costs: Vec<[f64; 2]>,
}

impl ToyMdp {
    pub fn state_index(&self, max_age: usize, s: &ToyState) -> usize {
        (((s.ages.0 - 1) * max_age + (s.ages.1 - 1)) * 2 + s.obs.0 as usize) * 2 + s.obs.1 as usize
    }
}

pub fn build_mdp(model: &ToyModel, query: ToyQuery) -> ToyMdp {
    let cap = model.max_age;
    let mut states = Vec::with_capacity(cap * cap * 4);
    for age1 in 1..=cap {
        for age2 in 1..=cap {
            for o1 in 0..2u8 {
                for o2 in 0..2u8 {
                    states.push(ToyState {
                        ages: (age1, age2),
                        obs: (o1, o2),
                    });
                }
            }
        }
    }
    let index = |s: &ToyState| {
        (((s.ages.0 - 1) * cap + (s.ages.1 - 1)) * 2 + s.obs.0 as usize) * 2 + s.obs.1 as usize
    };
    let mut transitions = Vec::with_capacity(states.len());
    let mut costs = Vec::with_capacity(states.len());
    for s in &states {
        let mut per_action_t = [[(0usize, 0.0f64); 2]; 2];
        let mut per_action_c = [0.0f64; 2];
        for action in 0..2usize {
            let (p, age, obs) = if action == 0 {
                (model.flip_probs.0, s.ages.0, s.obs.0)
            } else {
                (model.flip_probs.1, s.ages.1, s.obs.1)
            };
            let (fresh0, fresh1) = posterior(p, age as u32, obs);
            let other_age = if action == 0 { s.ages.1 } else { s.ages.0 };
            let grown = (other_age + 1).min(cap);
            let mut cost = 0.0;
            for (slot, new_obs) in [(0usize, 0u8), (1, 1)] {
                let prob = if new_obs == 0 { fresh0 } else { fresh1 };
                let (succ, answer) = if action == 0 {
                    (
                        ToyState {
                            ages: (1, grown),
                            obs: (new_obs, s.obs.1),
                        },
                        ToyState {
                            ages: (0, s.ages.1),
                            obs: (new_obs, s.obs.1),
                        },
                    )
                } else {
                    (
                        ToyState {
                            ages: (grown, 1),
                            obs: (s.obs.0, new_obs),
                        },
                        ToyState {
                            ages: (s.ages.0, 0),
                            obs: (s.obs.0, new_obs),
                        },
                    )
                };
                per_action_t[action][slot] = (index(&succ), prob);
                cost += prob * query_mse(model, query, &answer);
            }
            per_action_c[action] = cost;
        }
        transitions.push(per_action_t);
        costs.push(per_action_c);
    }
    ToyMdp {
        states,
        transitions,
        costs,
    }
}

/// A deterministic stationary policy and its value function
/// (long-term discounted reward, i.e. negative discounted cost).
#[derive(Debug, Clone)]
pub struct ToySolution {
    pub policy: Vec<usize>,
    pub values: Vec<f64>,
    pub iterations: usize,
}

/// Exact policy iteration: fixed-point policy evaluation to `1e-10` followed
/// by greedy improvement, repeated until the policy stops changing. Ties in
/// the improvement step go to action 0 (chain 1).
pub fn policy_iteration(mdp: &ToyMdp, gamma: f64) -> Result<ToySolution> {
    if !(0.0..1.0).contains(&gamma) {
        return Err(Error::Config(format!("discount {gamma} outside [0, 1)")));
    }
    let n = mdp.states.len();
    let mut policy = vec![0usize; n];
    let mut values = vec![0.0f64; n];
    const EVAL_TOL: f64 = 1e-10;
    const MAX_SWEEPS: usize = 1_000_000;
    for round in 1..=1000 {
        // evaluation
        let mut sweeps = 0;
        loop {
            let mut delta = 0.0f64;
            for s in 0..n {
                let a = policy[s];
                let mut v = -mdp.costs[s][a];
                for (succ, prob) in mdp.transitions[s][a] {
                    v += gamma * prob * values[succ];
                }
                delta = delta.max((v - values[s]).abs());
                values[s] = v;
            }
            sweeps += 1;
            if delta < EVAL_TOL {
                break;
            }
            if sweeps >= MAX_SWEEPS {
                return Err(Error::Numeric("policy evaluation did not converge".into()));
            }
        }
        // improvement
        let mut changed = false;
        for (s, chosen) in policy.iter_mut().enumerate() {
            let mut best = 0usize;
            let mut best_q = f64::NEG_INFINITY;
            for a in 0..2 {
                let mut q = -mdp.costs[s][a];
                for (succ, prob) in mdp.transitions[s][a] {
                    q += gamma * prob * values[succ];
                }
                if q > best_q {
                    best_q = q;
                    best = a;
                }
            }
            if *chosen != best {
                *chosen = best;
                changed = true;
            }
        }
        if !changed {
            return Ok(ToySolution {
                policy,
                values,
                iterations: round,
            });
        }
    }
    Err(Error::Numeric("policy iteration did not converge".into()))
}

/// Write the solved policy as CSV rows `(delta1, delta2, o1, o2, action,
/// value)` with 1-based actions, for heatmap plotting.
pub fn write_policy_csv<W: Write>(mdp: &ToyMdp, solution: &ToySolution, mut out: W) -> Result<()> {
    writeln!(out, "delta1,delta2,o1,o2,action,value")?;
    for (i, s) in mdp.states.iter().enumerate() {
        writeln!(
            out,
            "{},{},{},{},{},{}",
            s.ages.0,
            s.ages.1,
            s.obs.0,
            s.obs.1,
            solution.policy[i] + 1,
            solution.values[i]
        )?;
    }
    Ok(())
}
