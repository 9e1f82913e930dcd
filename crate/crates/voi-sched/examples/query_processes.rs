//! Query chains: the periodic and memoryless arrival patterns, and the
//! observability check that separates them from genuinely hidden chains.
//!
//! ```bash
//! cargo run --release -p voi-sched --example query_processes
//! ```

use std::collections::BTreeSet;

use nalgebra::DMatrix;
use voi_sched::queries::QueryKind;
use voi_sched::query_process::ClientProcess;
use voi_sched::rng::{RunRng, Stream};

fn activity_strip(client: &mut ClientProcess, rng_seed: u32, slots: usize) -> String {
    let mut rng = RunRng::new(0).stream(Stream::Client(rng_seed));
    (0..slots)
        .map(|_| if client.advance(&mut rng) { 'Q' } else { '.' })
        .collect()
}

fn main() -> voi_sched::Result<()> {
    let mut periodic = ClientProcess::periodic(0, 6, 2, QueryKind::Max, 1.0)?;
    let mut memoryless = ClientProcess::memoryless(1, 1.0 / 6.0, QueryKind::Mean, 1.0)?;

    println!(
        "periodic period 6, phase 2:  {}",
        activity_strip(&mut periodic, 0, 48)
    );
    println!(
        "memoryless p = 1/6:          {}",
        activity_strip(&mut memoryless, 1, 48)
    );

    println!("\nobservability (can τ alone predict the next query?):");
    println!("  periodic    -> {}", periodic.is_fully_observable());
    println!("  memoryless  -> {}", memoryless.is_fully_observable());

    // a chain that hides its phase: after a query it lands in one of two
    // states with very different continuation behavior
    let transition = DMatrix::from_row_slice(
        3,
        3,
        &[
            0.7, 0.0, 0.3, //
            0.0, 0.1, 0.9, //
            0.5, 0.5, 0.0,
        ],
    );
    let hidden = ClientProcess::new(
        2,
        QueryKind::Max,
        1.0,
        transition,
        BTreeSet::from([2]),
        2,
        0,
        3.0,
    )?;
    println!("  hidden 3-state chain -> {}", hidden.is_fully_observable());
    Ok(())
}
