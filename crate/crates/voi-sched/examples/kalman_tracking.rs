//! Track a small linear-Gaussian process over a lossy channel and check the
//! filter's calibration: the realized squared estimation error should match
//! the covariance trace the filter reports.
//!
//! ```bash
//! cargo run --release -p voi-sched --example kalman_tracking
//! ```

use nalgebra::{DMatrix, DVector};
use voi_sched::dynamics::{SystemModel, TrueState};
use voi_sched::kalman;
use voi_sched::linalg;
use voi_sched::rng::{RunRng, Stream};

fn main() -> voi_sched::Result<()> {
    let model = SystemModel::new(
        DMatrix::from_row_slice(2, 2, &[0.9, 0.1, 0.0, 0.8]),
        DMatrix::identity(2, 2),
        DMatrix::identity(2, 2) * 0.5,
        DMatrix::identity(2, 2) * 0.2,
        vec![0.3, 0.3],
    )?;

    let run = RunRng::new(42);
    let mut process_rng = run.stream(Stream::Process);
    let mut measurement_rng = run.stream(Stream::Measurement);
    let mut channel_rng = run.stream(Stream::Channel);

    let mut belief = kalman::initial_belief(&model)?;
    let sqrt_inf = linalg::symmetric_sqrt(&belief.psi)?;
    let mut truth = TrueState::new(linalg::sample_gaussian(
        &DVector::zeros(2),
        &sqrt_inf,
        &mut run.stream(Stream::Init),
    ));

    println!("slot | sensor | delivered | true err²  | trace(psi)");
    let mut err_sum = 0.0;
    let mut trace_sum = 0.0;
    let slots = 2000;
    for t in 0..slots {
        truth = model.step(&truth, &mut process_rng)?;
        let prior = kalman::predict(&model, &belief)?;
        let sensor = (t % 2) as usize; // alternate polls
        let delivered = model.attempt_transmission(sensor, &mut channel_rng)?;
        let observation = if delivered {
            Some(model.observe(&truth, sensor, &mut measurement_rng)?)
        } else {
            None
        };
        belief = kalman::update(&model, &prior, sensor, observation)?;

        let err = (&truth.x - &belief.x_hat).norm_squared();
        err_sum += err;
        trace_sum += belief.psi.trace();
        if t < 10 {
            println!(
                "{t:4} | {sensor:6} | {delivered:9} | {err:10.4} | {:10.4}",
                belief.psi.trace()
            );
        }
    }
    println!("...");
    println!(
        "over {slots} slots: mean realized err² = {:.4}, mean trace(psi) = {:.4}",
        err_sum / slots as f64,
        trace_sum / slots as f64
    );
    println!("a calibrated filter keeps these two numbers close");
    Ok(())
}
