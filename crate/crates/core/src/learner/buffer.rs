//! Rollout storage and advantage estimation.

use super::PpoConfig;
use crate::error::{Error, Result};
use crate::gridworld::EncodedTensor;

/// One environment's transition at one time step.
#[derive(Debug, Clone, PartialEq)]
pub struct StepRecord {
    pub obs: EncodedTensor,
    pub action: usize,
    pub log_prob: f64,
    pub value: f64,
    pub extrinsic_reward: f64,
    pub intrinsic_reward: f64,
    pub combined_reward: f64,
    pub done: bool,
}

/// Fixed-capacity `[rollout_len, n_envs]` storage, time-major: entry
/// `t * n_envs + e` belongs to environment `e` at step `t`.
#[derive(Debug, Clone)]
pub struct RolloutBuffer {
    pub n_envs: usize,
    pub rollout_len: usize,
    pub steps: Vec<StepRecord>,
    /// Intrinsic-module view of (s_t, s_{t+1}) per entry; only filled when
    /// a learned embedding needs training data.
    pub intrinsic_views: Vec<(EncodedTensor, EncodedTensor)>,
    /// V(s_T) per environment for the state after the last stored step.
    pub bootstrap_values: Option<Vec<f64>>,
}

impl RolloutBuffer {
    pub fn new(n_envs: usize, rollout_len: usize) -> Self {
        RolloutBuffer {
            n_envs,
            rollout_len,
            steps: Vec::with_capacity(n_envs * rollout_len),
            intrinsic_views: Vec::new(),
            bootstrap_values: None,
        }
    }

    pub fn capacity(&self) -> usize {
        self.n_envs * self.rollout_len
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    pub fn is_full(&self) -> bool {
        self.steps.len() == self.capacity()
    }

    pub fn clear(&mut self) {
        self.steps.clear();
        self.intrinsic_views.clear();
        self.bootstrap_values = None;
    }

    /// Appends one time step across all environments.
    pub fn push_step(&mut self, records: Vec<StepRecord>) -> Result<()> {
        if records.len() != self.n_envs {
            return Err(Error::usage(format!("expected {} records, got {}", self.n_envs, records.len())));
        }
        if self.is_full() {
            return Err(Error::usage("rollout buffer is already full"));
        }
        self.steps.extend(records);
        Ok(())
    }

    pub fn set_bootstrap(&mut self, values: Vec<f64>) -> Result<()> {
        if values.len() != self.n_envs {
            return Err(Error::usage(format!("expected {} bootstrap values, got {}", self.n_envs, values.len())));
        }
        self.bootstrap_values = Some(values);
        Ok(())
    }

    pub fn get(&self, env: usize, t: usize) -> &StepRecord {
        &self.steps[t * self.n_envs + env]
    }
}

/// Generalized advantage estimates and returns (same layout as the buffer),
/// computed on the combined reward.
pub fn compute_gae(buffer: &RolloutBuffer, config: &PpoConfig) -> Result<(Vec<f64>, Vec<f64>)> {
    if !buffer.is_full() {
        return Err(Error::usage(format!(
            "advantages need a full buffer ({} of {} entries)",
            buffer.len(),
            buffer.capacity()
        )));
    }
    let bootstrap = buffer
        .bootstrap_values
        .as_ref()
        .ok_or_else(|| Error::usage("advantages need bootstrap values"))?;
    let n = buffer.n_envs;
    let mut adv = vec![0.0; buffer.capacity()];
    for e in 0..n {
        let mut next_adv = 0.0;
        for t in (0..buffer.rollout_len).rev() {
            let s = buffer.get(e, t);
            let next_value = if t + 1 == buffer.rollout_len {
                bootstrap[e]
            } else {
                buffer.get(e, t + 1).value
            };
            let live = if s.done { 0.0 } else { 1.0 };
            let delta = s.combined_reward + config.gamma * next_value * live - s.value;
            next_adv = delta + config.gamma * config.gae_lambda * live * next_adv;
            adv[t * n + e] = next_adv;
        }
    }
    let returns = adv.iter().zip(&buffer.steps).map(|(a, s)| a + s.value).collect();
    Ok((adv, returns))
}
