//! Compare Maximum Age First against the greedy value-of-information
//! policies on the periodic reference scenario (trimmed budgets so the
//! example finishes in seconds).
//!
//! ```bash
//! cargo run --release -p voi-sched --example benchmark_policies
//! ```

use voi_sched::harness::metrics::aggregate;
use voi_sched::harness::{build_scenario, evaluate_policy};
use voi_sched::policies::{GreedyVoi, MaxAgeFirst, Policy};
use voi_sched::queries::VoiParams;

fn main() -> voi_sched::Result<()> {
    let scenario = build_scenario("periodic")?;
    let episodes = 3;
    let seed = 7;
    let params = VoiParams {
        hypothetical_obs: 60,
        inner_samples: 200,
    };

    let mut policies: Vec<Box<dyn Policy>> = vec![
        Box::new(MaxAgeFirst),
        Box::new(GreedyVoi::new(
            scenario.model.clone(),
            scenario.count_range_kind().unwrap(),
            params,
        )),
        Box::new(GreedyVoi::new(
            scenario.model.clone(),
            voi_sched::queries::QueryKind::Max,
            params,
        )),
    ];

    println!(
        "{:<12} {:>12} {:>12} {:>12}",
        "policy", "overall cost", "cnt MSE", "max MSE"
    );
    for policy in policies.iter_mut() {
        let logs = evaluate_policy(&scenario, policy.as_mut(), episodes, seed)?;
        let report = aggregate(policy.name(), &scenario.name, &logs)?;
        let cnt = report
            .clients
            .iter()
            .find(|c| c.kind == "count_range")
            .unwrap();
        let max = report.clients.iter().find(|c| c.kind == "max").unwrap();
        println!(
            "{:<12} {:>12.4} {:>12.4} {:>12.4}",
            report.policy, report.overall_cost_mean, cnt.mse_mean, max.mse_mean
        );
    }
    println!("\n(each greedy policy should win on its own query)");
    Ok(())
}
