//! Experience replay: a bounded ring of transitions with uniform
//! without-replacement batch sampling.

use std::collections::VecDeque;

use rand::Rng;

/// One environment interaction.
#[derive(Debug, Clone, PartialEq)]
pub struct Transition {
    pub observation: Vec<f64>,
    pub action: u8,
    pub reward: f64,
    pub next_observation: Vec<f64>,
    pub done: bool,
}

/// Ring buffer of the most recent `capacity` transitions; the oldest entry
/// is evicted first.
#[derive(Debug)]
pub struct ReplayBuffer {
    buffer: VecDeque<Transition>,
    capacity: usize,
}

impl ReplayBuffer {
    pub fn new(capacity: usize) -> Self {
        assert!(capacity > 0, "capacity must be positive");
        Self { buffer: VecDeque::with_capacity(capacity), capacity }
    }

    pub fn push(&mut self, transition: Transition) {
        if self.buffer.len() == self.capacity {
            self.buffer.pop_front();
        }
        self.buffer.push_back(transition);
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

    /// Uniform sample of `batch` distinct transitions. Panics if fewer are
    /// stored; callers gate on [`len`](Self::len).
    pub fn sample(&self, batch: usize, rng: &mut impl Rng) -> Vec<&Transition> {
        assert!(batch <= self.buffer.len(), "batch larger than buffer");
        rand::seq::index::sample(rng, self.buffer.len(), batch)
            .iter()
            .map(|i| &self.buffer[i])
            .collect()
    }
}
