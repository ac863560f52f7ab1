use std::collections::HashMap;

use crate::gridworld::EncodedTensor;

/// Stable 64-bit FNV-1a hash of an encoded tensor's byte serialization.
pub fn observation_key(obs: &EncodedTensor) -> u64 {
    const OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
    const PRIME: u64 = 0x0000_0100_0000_01b3;
    obs.to_bytes().iter().fold(OFFSET, |h, &b| (h ^ b as u64).wrapping_mul(PRIME))
}

/// Per-episode visitation counts keyed by observation hash.
#[derive(Debug, Clone, Default)]
pub struct EpisodicCounter {
    counts: HashMap<u64, u32>,
    episode_id: u64,
}

impl EpisodicCounter {
    pub fn new() -> Self {
        Self::default()
    }

    /// Records one visit and returns the updated count. When `done` is set
    /// the counter is cleared after the count is taken, starting a new
    /// episode.
    pub fn observe(&mut self, obs: &EncodedTensor, done: bool) -> u32 {
        let slot = self.counts.entry(observation_key(obs)).or_insert(0);
        *slot += 1;
        let count = *slot;
        if done {
            self.reset();
        }
        count
    }

    pub fn reset(&mut self) {
        self.counts.clear();
        self.episode_id += 1;
    }

    pub fn episode_id(&self) -> u64 {
        self.episode_id
    }

    pub fn count(&self, obs: &EncodedTensor) -> u32 {
        self.counts.get(&observation_key(obs)).copied().unwrap_or(0)
    }

    pub fn distinct(&self) -> usize {
        self.counts.len()
    }
}
