//! Solve the two-sensor binary example exactly and print the optimal policy
//! grids for both query kinds and all observation pairs.
//!
//! ```bash
//! cargo run --release -p voi-sched --example toy_policy_iteration -- 0.0
//! ```
//!
//! The optional argument is the discount factor (default 0.9). At 0.0 the
//! myopic structure appears: the count-query policy depends only on the two
//! ages, and the max-query policy always polls the chain whose last observed
//! value was 1.

use voi_sched::toy::{build_mdp, policy_iteration, ToyModel, ToyQuery, ToyState};

fn main() -> voi_sched::Result<()> {
    let gamma: f64 = std::env::args()
        .nth(1)
        .and_then(|a| a.parse().ok())
        .unwrap_or(0.9);
    let cap = 12usize;
    let model = ToyModel::new(0.1, 0.2, cap, gamma)?;
    println!("flip probabilities (0.1, 0.2), age cap {cap}, discount {gamma}\n");

    for (query, label) in [(ToyQuery::Count, "count"), (ToyQuery::Max, "max")] {
        let mdp = build_mdp(&model, query);
        let solution = policy_iteration(&mdp, gamma)?;
        println!(
            "{label} query ({} policy-iteration rounds):",
            solution.iterations
        );
        for obs in [(0u8, 0u8), (0, 1), (1, 0), (1, 1)] {
            println!("  observations {obs:?} (rows age1 = 1..{cap}, cols age2 = 1..{cap}):");
            for age1 in 1..=cap {
                let row: String = (1..=cap)
                    .map(|age2| {
                        let idx = mdp.state_index(
                            cap,
                            &ToyState {
                                ages: (age1, age2),
                                obs,
                            },
                        );
                        char::from(b'1' + solution.policy[idx] as u8)
                    })
                    .collect();
                println!("    {row}");
            }
        }
        println!();
    }
    Ok(())
}
