//! Score every sensor of the reference 20-sensor scenario by its value of
//! information for a maximum query and show what the greedy scheduler picks.
//!
//! ```bash
//! cargo run --release -p voi-sched --example voi_polling
//! ```

use voi_sched::harness::build_scenario;
use voi_sched::kalman;
use voi_sched::policies::{greedy_voi_decide, SchedulerContext};
use voi_sched::queries::{voi, QueryKind, VoiParams};
use voi_sched::rng::{RunRng, Stream};

fn main() -> voi_sched::Result<()> {
    let scenario = build_scenario("periodic")?;
    let model = &scenario.model;
    let belief = kalman::initial_belief(model)?;
    let prior = kalman::predict(model, &belief)?;

    let params = VoiParams {
        hypothetical_obs: 100,
        inner_samples: 300,
    };
    let run = RunRng::new(3);

    println!("per-sensor VoI for the max query at the stationary prior:");
    let mut thetas = Vec::new();
    for sensor in 0..model.sensor_count() {
        let mut rng = run.stream(Stream::Policy);
        let theta = voi(&QueryKind::Max, &prior, model, sensor, &params, &mut rng)?;
        thetas.push(theta);
        println!(
            "  sensor {:>2}: theta = {theta:>8.4}  (epsilon = {})",
            sensor + 1,
            model.epsilon()[sensor]
        );
    }

    let aoi = vec![1u64; model.sensor_count()];
    let ctx = SchedulerContext {
        belief_prior: &prior,
        aoi: &aoi,
        clients: &[],
        slot: 0,
    };
    let mut rng = run.stream(Stream::Policy);
    let pick = greedy_voi_decide(&ctx, &QueryKind::Max, model, &params, &mut rng)?;
    println!("greedy pick: sensor {}", pick + 1);

    let best = thetas
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.partial_cmp(b.1).unwrap())
        .map(|(i, _)| i)
        .unwrap();
    assert_eq!(
        pick, best,
        "greedy matches the argmax of the printed scores"
    );
    Ok(())
}
