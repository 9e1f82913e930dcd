//! Per-client query generation.
//!
//! Each client follows an independent finite Markov chain and issues its
//! query whenever the chain lands in one of its designated query states. The
//! periodic and memoryless processes used by the shipped scenarios are the
//! two observable special cases; general hidden chains are supported by the
//! type and can be tested for observability.

use std::collections::BTreeSet;

use nalgebra::DMatrix;
use rand::Rng;

use crate::error::{Error, Result};
use crate::queries::QueryKind;

const ROW_SUM_TOL: f64 = 1e-12;

/// One client's query chain, query function and importance weight.
#[derive(Debug, Clone)]
pub struct ClientProcess {
    pub id: usize,
    pub kind: QueryKind,
    pub alpha: f64,
    transition: DMatrix<f64>,
    query_states: BTreeSet<usize>,
    state: usize,
    tau: u64,
    /// Nominal inter-query period, used to scale the τ observation.
    nominal_period: f64,
}

impl ClientProcess {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        id: usize,
        kind: QueryKind,
        alpha: f64,
        transition: DMatrix<f64>,
        query_states: BTreeSet<usize>,
        initial_state: usize,
        initial_tau: u64,
        nominal_period: f64,
    ) -> Result<Self> {
        let k = transition.nrows();
        if k == 0 || transition.ncols() != k {
            return Err(Error::Config(
                "transition matrix must be square and non-empty".into(),
            ));
        }
        for i in 0..k {
            let mut sum = 0.0;
            for j in 0..k {
                let p = transition[(i, j)];
                if !(0.0..=1.0 + ROW_SUM_TOL).contains(&p) || p.is_nan() {
                    return Err(Error::Config(format!("transition entry ({i},{j}) = {p}")));
                }
                sum += p;
            }
            if (sum - 1.0).abs() > ROW_SUM_TOL {
                return Err(Error::Config(format!("transition row {i} sums to {sum}")));
            }
        }
        if query_states.is_empty() {
            return Err(Error::Config("query-state set must be non-empty".into()));
        }
        if query_states.iter().any(|q| *q >= k) {
            return Err(Error::Config("query state outside the chain".into()));
        }
        if initial_state >= k {
            return Err(Error::Config("initial state outside the chain".into()));
        }
        if alpha < 0.0 || !alpha.is_finite() {
            return Err(Error::Config(format!(
                "client weight {alpha} must be non-negative"
            )));
        }
        if nominal_period <= 0.0 || nominal_period.is_nan() {
            return Err(Error::Config("nominal period must be positive".into()));
        }
        Ok(Self {
            id,
            kind,
            alpha,
            transition,
            query_states,
            state: initial_state,
            tau: initial_tau,
            nominal_period,
        })
    }

    /// Deterministic cycle of length `period`; the query fires first at slot
    /// `phase` and every `period` slots afterwards.
    pub fn periodic(
        id: usize,
        period: usize,
        phase: usize,
        kind: QueryKind,
        alpha: f64,
    ) -> Result<Self> {
        if period < 1 {
            return Err(Error::Config("period must be at least 1".into()));
        }
        if phase >= period {
            return Err(Error::Config(format!(
                "phase {phase} must be below period {period}"
            )));
        }
        let mut transition = DMatrix::zeros(period, period);
        for i in 0..period {
            transition[(i, (i + 1) % period)] = 1.0;
        }
        // The chain advances once per slot before the activity check, so
        // starting at period−1−phase lands on the query state 0 at slot
        // `phase`; τ starts at period−phase−1 so the observed value at
        // slot t is (t − phase) mod period throughout.
        let initial_state = (period - 1 - phase) % period;
        let initial_tau = (period - 1 - phase) as u64;
        Self::new(
            id,
            kind,
            alpha,
            transition,
            BTreeSet::from([0]),
            initial_state,
            initial_tau,
            period as f64,
        )
    }

    /// Two-state chain with identical rows: a query fires each slot with
    /// probability `p`, independently of the past.
    pub fn memoryless(id: usize, p: f64, kind: QueryKind, alpha: f64) -> Result<Self> {
        if !(p > 0.0 && p <= 1.0) {
            return Err(Error::Config(format!(
                "memoryless probability {p} outside (0, 1]"
            )));
        }
        let transition = DMatrix::from_row_slice(2, 2, &[1.0 - p, p, 1.0 - p, p]);
        Self::new(
            id,
            kind,
            alpha,
            transition,
            BTreeSet::from([1]),
            0,
            0,
            1.0 / p,
        )
    }

    /// Slots since the last query (0 exactly in query slots).
    pub fn tau(&self) -> u64 {
        self.tau
    }

    pub fn nominal_period(&self) -> f64 {
        self.nominal_period
    }

    /// Advance the chain one slot; returns whether the query is active.
    pub fn advance<R: Rng + ?Sized>(&mut self, rng: &mut R) -> bool {
        let row = self.transition.row(self.state);
        let draw: f64 = rng.random();
        let mut acc = 0.0;
        let mut next = row.len() - 1;
        for (j, p) in row.iter().enumerate() {
            acc += p;
            if draw < acc {
                next = j;
                break;
            }
        }
        self.state = next;
        let active = self.query_states.contains(&next);
        if active {
            self.tau = 0;
        } else {
            self.tau += 1;
        }
        active
    }

    /// Whether the slots-since-last-query count is a sufficient statistic
    /// for the next-slot query probability.
    ///
    /// Enumerates every set of chain states compatible with a common τ
    /// history (reachable query states, then repeated "no query" steps, plus
    /// the pre-first-query frontier from the initial state) and checks that
    /// the one-step query probability is constant on each set within `1e-12`.
    pub fn is_fully_observable(&self) -> bool {
        let k = self.transition.nrows();
        let query_prob = |q: usize| -> f64 {
            self.query_states
                .iter()
                .map(|j| self.transition[(q, *j)])
                .sum()
        };

        // States reachable from the current one.
        let mut reachable = BTreeSet::from([self.state]);
        loop {
            let mut grew = false;
            for q in reachable.clone() {
                for j in 0..k {
                    if self.transition[(q, j)] > 0.0 && reachable.insert(j) {
                        grew = true;
                    }
                }
            }
            if !grew {
                break;
            }
        }

        let successors_outside_queries = |set: &BTreeSet<usize>| -> BTreeSet<usize> {
            let mut out = BTreeSet::new();
            for q in set {
                for j in 0..k {
                    if self.transition[(*q, j)] > 0.0 && !self.query_states.contains(&j) {
                        out.insert(j);
                    }
                }
            }
            out
        };

        let tau_zero: BTreeSet<usize> = reachable
            .intersection(&self.query_states)
            .copied()
            .collect();
        let mut worklist = vec![BTreeSet::from([self.state])];
        if !tau_zero.is_empty() {
            worklist.push(tau_zero);
        }
        let mut seen: BTreeSet<BTreeSet<usize>> = BTreeSet::new();
        while let Some(set) = worklist.pop() {
            if set.is_empty() || !seen.insert(set.clone()) {
                continue;
            }
            let probs: Vec<f64> = set.iter().map(|q| query_prob(*q)).collect();
            if probs.iter().any(|p| (p - probs[0]).abs() > 1e-12) {
                return false;
            }
            worklist.push(successors_outside_queries(&set));
        }
        true
    }

    /// Immutable view used by schedulers: query kind, weight, τ.
    pub fn snapshot(&self) -> ClientSnapshot {
        ClientSnapshot {
            kind: self.kind.clone(),
            alpha: self.alpha,
            tau: self.tau,
            nominal_period: self.nominal_period,
        }
    }
}

/// What a scheduler is allowed to see of a client.
#[derive(Debug, Clone)]
pub struct ClientSnapshot {
    pub kind: QueryKind,
    pub alpha: f64,
    pub tau: u64,
    pub nominal_period: f64,
}
