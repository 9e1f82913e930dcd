//! Answer every query kind from one belief state: closed forms where they
//! exist, Monte Carlo for the rest, with the expected MSE of each response.
//!
//! ```bash
//! cargo run --release -p voi-sched --example query_estimates
//! ```

use nalgebra::{DMatrix, DVector};
use voi_sched::kalman::BeliefState;
use voi_sched::queries::{estimate, evaluate, QueryKind, QueryValue};
use voi_sched::rng::{RunRng, Stream};

fn main() -> voi_sched::Result<()> {
    let x_hat = DVector::from_vec(vec![1.0, -2.0, 4.5, 0.3]);
    let psi = DMatrix::from_row_slice(
        4,
        4,
        &[
            2.0, 0.3, 0.0, 0.1, //
            0.3, 1.5, 0.2, 0.0, //
            0.0, 0.2, 3.0, 0.4, //
            0.1, 0.0, 0.4, 1.0,
        ],
    );
    let belief = BeliefState::new(x_hat.clone(), psi);
    let mut rng = RunRng::new(7).stream(Stream::Estimator);

    let kinds = [
        QueryKind::State,
        QueryKind::Mean,
        QueryKind::Variance,
        QueryKind::Max,
        QueryKind::CountRange { lo: -1.0, hi: 1.0 },
    ];
    println!("belief mean: {:?}", x_hat.as_slice());
    println!(
        "{:<14} {:>12} {:>12} {:>8}",
        "query", "estimate", "exp. MSE", "draws"
    );
    for kind in kinds {
        let est = estimate(&kind, &belief, 100_000, &mut rng)?;
        let shown = match &est.value {
            QueryValue::Scalar(v) => format!("{v:.4}"),
            QueryValue::Vector(_) => "(vector)".to_string(),
        };
        println!(
            "{:<14} {shown:>12} {:>12.4} {:>8}",
            kind.label(),
            est.expected_mse,
            est.samples_used
        );
    }

    // the estimators are conditional means: on the true state they are exact
    let truth = DVector::from_vec(vec![0.9, -1.8, 4.4, 0.2]);
    let z = evaluate(&QueryKind::Max, &truth)?;
    println!("\ntrue max of {:?} = {:?}", truth.as_slice(), z);
    Ok(())
}
