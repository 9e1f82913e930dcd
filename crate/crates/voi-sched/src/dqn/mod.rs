//! From-scratch deep Q-learning scheduler: a three-layer ReLU network with
//! manual backpropagation and Adam, replay memory, a frozen target network
//! synced every few steps, and softmax exploration.

mod agent;
mod checkpoint;
mod network;
mod replay;

pub use agent::{
    softmax_probs, softmax_select, sync_target, td_target, train_step, DqnPolicy,
    ObservationScaler, TrainConfig,
};
pub use checkpoint::{from_string, load, save, to_string, CheckpointHeader};
pub use network::{loss_and_gradients, scheduler_layer_sizes, Adam, Gradients, Mode, QNetwork};
pub use replay::{Experience, ReplayMemory};

/// Basic operations of one forward pass: `C_f(ℓ) = Σ ℓ_{i+1}·(2ℓ_i + k)`,
/// with `k` the per-activation cost.
pub fn count_operations(layer_sizes: &[usize], activation_ops: usize) -> u64 {
    layer_sizes
        .windows(2)
        .map(|pair| pair[1] as u64 * (2 * pair[0] as u64 + activation_ops as u64))
        .sum()
}

/// Basic operations of one training step: `C_b = B·C_f` (backpropagation
/// costs one forward-pass-equivalent per batch sample).
pub fn count_train(layer_sizes: &[usize], activation_ops: usize, batch_size: usize) -> u64 {
    batch_size as u64 * count_operations(layer_sizes, activation_ops)
}
