//! Experience replay: a fixed-capacity FIFO ring of transitions sampled
//! uniformly at random for each training batch.

use std::collections::VecDeque;

use nalgebra::DVector;
use rand::Rng;

/// One transition. The observation vectors hold `ψ_pri` flattened row-major,
/// then `x̂_pri`, then the per-client slots-since-query counters, scaled by
/// [`super::ObservationScaler`].
#[derive(Debug, Clone)]
pub struct Experience {
    pub state: DVector<f64>,
    pub action: usize,
    pub reward: f64,
    pub next_state: DVector<f64>,
}

/// Ring buffer of experiences with FIFO eviction.
#[derive(Debug, Clone)]
pub struct ReplayMemory {
    buffer: VecDeque<Experience>,
    capacity: usize,
}

impl ReplayMemory {
    pub fn new(capacity: usize) -> Self {
        Self {
            buffer: VecDeque::with_capacity(capacity.min(1 << 20)),
            capacity,
        }
    }

    pub fn push(&mut self, experience: Experience) {
        if self.buffer.len() == self.capacity {
            self.buffer.pop_front();
        }
        self.buffer.push_back(experience);
    }

    pub fn len(&self) -> usize {
        self.buffer.len()
    }

    pub fn is_empty(&self) -> bool {
        self.buffer.is_empty()
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn get(&self, index: usize) -> Option<&Experience> {
        self.buffer.get(index)
    }

    /// `count` experiences drawn uniformly with replacement.
    pub fn sample<R: Rng + ?Sized>(&self, count: usize, rng: &mut R) -> Vec<&Experience> {
        (0..count)
            .map(|_| &self.buffer[rng.random_range(0..self.buffer.len())])
            .collect()
    }
}
