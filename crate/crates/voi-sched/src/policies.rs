//! Scheduler interface and the non-learning benchmark policies.

use rand_chacha::ChaCha8Rng;

use crate::dynamics::SystemModel;
use crate::error::Result;
use crate::kalman::BeliefState;
use crate::queries::{self, QueryKind, VoiParams};
use crate::query_process::ClientSnapshot;

/// Everything a scheduler may look at when picking the slot's sensor.
pub struct SchedulerContext<'a> {
    /// Prior-phase belief for the current slot.
    pub belief_prior: &'a BeliefState,
    /// Age of information per sensor (slots since last successful reception,
    /// never below 1).
    pub aoi: &'a [u64],
    /// Client views: query kind, weight, slots since the last query.
    pub clients: &'a [ClientSnapshot],
    pub slot: u64,
}

/// A sensor-polling policy: one decision per slot.
pub trait Policy {
    fn decide(&mut self, ctx: &SchedulerContext<'_>, rng: &mut ChaCha8Rng) -> Result<usize>;
    fn name(&self) -> &str;
}

/// Index of the stalest sensor; ties go to the lowest index.
pub fn maf_decide(ctx: &SchedulerContext<'_>) -> usize {
    let mut best = 0;
    for (n, age) in ctx.aoi.iter().enumerate() {
        if *age > ctx.aoi[best] {
            best = n;
        }
    }
    best
}

/// Maximum Age First: poll whichever sensor has gone unheard the longest.
#[derive(Debug, Default, Clone)]
pub struct MaxAgeFirst;

impl Policy for MaxAgeFirst {
    fn decide(&mut self, ctx: &SchedulerContext<'_>, _rng: &mut ChaCha8Rng) -> Result<usize> {
        Ok(maf_decide(ctx))
    }

    fn name(&self) -> &str {
        "maf"
    }
}

/// One-step optimal scheduling for `target`: poll the sensor with the highest
/// value of information for that query, ignoring the query process entirely.
///
/// Every candidate sensor is scored with a clone of the same slot generator
/// (common random numbers), so the shared Monte Carlo noise cancels in the
/// comparison and the decision is a pure function of the seed.
pub fn greedy_voi_decide(
    ctx: &SchedulerContext<'_>,
    target: &QueryKind,
    model: &SystemModel,
    params: &VoiParams,
    rng: &mut ChaCha8Rng,
) -> Result<usize> {
    let slot_rng = rng.clone();
    let mut best = 0usize;
    let mut best_theta = f64::NEG_INFINITY;
    for sensor in 0..model.sensor_count() {
        let mut sensor_rng = slot_rng.clone();
        let theta = queries::voi(
            target,
            ctx.belief_prior,
            model,
            sensor,
            params,
            &mut sensor_rng,
        )?;
        if theta > best_theta + 1e-12 {
            best = sensor;
            best_theta = theta;
        }
    }
    Ok(best)
}

/// Greedy value-of-information policy for a fixed query kind.
#[derive(Debug, Clone)]
pub struct GreedyVoi {
    pub model: SystemModel,
    pub target: QueryKind,
    pub params: VoiParams,
    name: String,
}

impl GreedyVoi {
    pub fn new(model: SystemModel, target: QueryKind, params: VoiParams) -> Self {
        let name = format!("greedy-{}", short_kind(&target));
        Self {
            model,
            target,
            params,
            name,
        }
    }
}

fn short_kind(kind: &QueryKind) -> &'static str {
    match kind {
        QueryKind::State => "state",
        QueryKind::Mean => "mean",
        QueryKind::Variance => "var",
        QueryKind::Max => "max",
        QueryKind::CountRange { .. } => "cnt",
    }
}

impl Policy for GreedyVoi {
    fn decide(&mut self, ctx: &SchedulerContext<'_>, rng: &mut ChaCha8Rng) -> Result<usize> {
        greedy_voi_decide(ctx, &self.target, &self.model, &self.params, rng)
    }

    fn name(&self) -> &str {
        &self.name
    }
}
