//! Train the deep Q-learning scheduler for a few episodes on the periodic
//! scenario, watch the return improve, and compare the greedy result with
//! Maximum Age First. Full-length training lives behind `voi-sched train`.
//!
//! ```bash
//! cargo run --release -p voi-sched --example train_scheduler
//! ```

use voi_sched::dqn::{DqnPolicy, TrainConfig};
use voi_sched::harness::metrics::aggregate;
use voi_sched::harness::{build_scenario, evaluate_policy, train_dqn};
use voi_sched::policies::MaxAgeFirst;

fn main() -> voi_sched::Result<()> {
    let scenario = build_scenario("periodic")?;
    let config = TrainConfig {
        train_episodes: 30,
        seed: 5,
        ..TrainConfig::default()
    };

    println!("training for {} episodes...", config.train_episodes);
    let output = train_dqn(&scenario, &config)?;
    for point in output.curve.iter().step_by(5) {
        println!(
            "  episode {:>3}: return {:>9.2}, temperature {:.3}, mean TD loss {:.4}",
            point.episode, point.total_reward, point.temperature, point.mean_loss
        );
    }

    let eval_episodes = 5;
    let eval_seed = 99;
    let mut dqn_policy = DqnPolicy::new(output.net, output.scaler);
    let dqn_logs = evaluate_policy(&scenario, &mut dqn_policy, eval_episodes, eval_seed)?;
    let dqn_report = aggregate("dqn", &scenario.name, &dqn_logs)?;

    let mut maf = MaxAgeFirst;
    let maf_logs = evaluate_policy(&scenario, &mut maf, eval_episodes, eval_seed)?;
    let maf_report = aggregate("maf", &scenario.name, &maf_logs)?;

    println!("\ngreedy evaluation over {eval_episodes} fresh episodes:");
    println!("  dqn overall cost: {:.4}", dqn_report.overall_cost_mean);
    println!("  maf overall cost: {:.4}", maf_report.overall_cost_mean);
    println!("(longer training widens the gap; see `voi-sched train --help`)");
    Ok(())
}
