//! PPO with generalized advantage estimation over a vector of environments.
//! The policy always sees the encoded egocentric view; rewards come from
//! the intrinsic module combined with the environment's own.

mod buffer;
mod checkpoint;
mod net;
mod ppo;
mod rollout;
mod sample;

use serde::{Deserialize, Serialize};

pub use buffer::{compute_gae, RolloutBuffer, StepRecord};
pub use checkpoint::{Checkpoint, MAGIC as CHECKPOINT_MAGIC, VERSION as CHECKPOINT_VERSION};
pub use net::{policy_forward, scale_observations, ActorCriticNet, NetCache, HIDDEN, INPUT_LEN};
pub use ppo::{normalize_advantages, ppo_loss_and_grad, ppo_update, Minibatch, PpoReport, PpoStats};
pub use rollout::{collect_rollout, train_intrinsic, EpisodeStats, RolloutStats, VecEnv};
pub use sample::{entropy, sample_action, ActionSample};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PpoConfig {
    pub gamma: f64,
    pub gae_lambda: f64,
    pub clip_epsilon: f64,
    pub epochs: usize,
    pub n_envs: usize,
    pub rollout_len: usize,
    pub learning_rate: f64,
    pub entropy_coef: f64,
    pub value_coef: f64,
    pub max_grad_norm: f64,
    pub minibatch_count: usize,
}

impl Default for PpoConfig {
    fn default() -> Self {
        PpoConfig {
            gamma: 0.99,
            gae_lambda: 0.95,
            clip_epsilon: 0.2,
            epochs: 4,
            n_envs: 16,
            rollout_len: 128,
            learning_rate: 1e-4,
            entropy_coef: 5e-4,
            value_coef: 0.5,
            max_grad_norm: 0.5,
            minibatch_count: 8,
        }
    }
}

impl PpoConfig {
    /// Environment steps per update.
    pub fn horizon(&self) -> usize {
        self.n_envs * self.rollout_len
    }

    pub fn validate(&self) -> Result<()> {
        let unit = |field: &str, v: f64| {
            if (0.0..=1.0).contains(&v) {
                Ok(())
            } else {
                Err(Error::config(field, format!("{v} is outside [0, 1]")))
            }
        };
        unit("ppo.gamma", self.gamma)?;
        unit("ppo.gae_lambda", self.gae_lambda)?;
        let positive = |field: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::config(field, format!("{v} must be positive")))
            }
        };
        positive("ppo.clip_epsilon", self.clip_epsilon)?;
        positive("ppo.learning_rate", self.learning_rate)?;
        positive("ppo.max_grad_norm", self.max_grad_norm)?;
        for (field, v) in [("ppo.entropy_coef", self.entropy_coef), ("ppo.value_coef", self.value_coef)] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::config(field, format!("{v} must be non-negative")));
            }
        }
        for (field, v) in [
            ("ppo.epochs", self.epochs),
            ("ppo.n_envs", self.n_envs),
            ("ppo.rollout_len", self.rollout_len),
            ("ppo.minibatch_count", self.minibatch_count),
        ] {
            if v == 0 {
                return Err(Error::config(field, "must be at least 1"));
            }
        }
        if self.minibatch_count > self.horizon() {
            return Err(Error::config("ppo.minibatch_count", "more minibatches than samples"));
        }
        Ok(())
    }
}
