//! Clipped-surrogate policy optimization.

use rand::seq::SliceRandom;
use rand::Rng;

use super::buffer::RolloutBuffer;
use super::net::{scale_observations, ActorCriticNet, INPUT_LEN};
use super::sample::entropy;
use super::PpoConfig;
use crate::error::{Error, Result};
use crate::gridworld::NUM_ACTIONS;
use crate::nn::{clip_grad_norm, log_softmax, Adam, Module};

/// Batch-mean statistics of one or more minibatch updates.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct PpoStats {
    pub policy_loss: f64,
    pub value_loss: f64,
    pub entropy: f64,
    pub clip_fraction: f64,
    pub approx_kl: f64,
}

impl PpoStats {
    fn mean(all: &[PpoStats]) -> PpoStats {
        let n = all.len().max(1) as f64;
        let mut m = PpoStats::default();
        for s in all {
            m.policy_loss += s.policy_loss / n;
            m.value_loss += s.value_loss / n;
            m.entropy += s.entropy / n;
            m.clip_fraction += s.clip_fraction / n;
            m.approx_kl += s.approx_kl / n;
        }
        m
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PpoReport {
    pub mean: PpoStats,
    /// Per-minibatch stats in execution order (epoch-major).
    pub minibatches: Vec<PpoStats>,
}

/// Training samples for one gradient step.
#[derive(Debug, Clone)]
pub struct Minibatch {
    pub inputs: Vec<f64>,
    pub actions: Vec<usize>,
    pub old_log_probs: Vec<f64>,
    pub advantages: Vec<f64>,
    pub returns: Vec<f64>,
}

impl Minibatch {
    pub fn len(&self) -> usize {
        self.actions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.actions.is_empty()
    }
}

/// Shifts and scales `adv` in place to mean 0 and standard deviation 1.
pub fn normalize_advantages(adv: &mut [f64]) {
    if adv.is_empty() {
        return;
    }
    let n = adv.len() as f64;
    let mean = adv.iter().sum::<f64>() / n;
    let std = (adv.iter().map(|a| (a - mean).powi(2)).sum::<f64>() / n).sqrt();
    for a in adv.iter_mut() {
        *a = (*a - mean) / (std + 1e-8);
    }
}

/// Zeroes gradients, then accumulates gradients of the PPO loss on `mb`.
/// Returns the total loss and its components.
pub fn ppo_loss_and_grad(net: &mut ActorCriticNet, mb: &Minibatch, config: &PpoConfig) -> Result<(f64, PpoStats)> {
    let n = mb.len();
    if n == 0 {
        return Err(Error::usage("empty minibatch"));
    }
    net.zero_grad();
    let nf = n as f64;
    let (logits, values, cache) = net.forward(&mb.inputs, n);
    let mut dlogits = vec![0.0; n * NUM_ACTIONS];
    let mut dvalues = vec![0.0; n];
    let mut stats = PpoStats::default();
    let eps = config.clip_epsilon;
    for i in 0..n {
        let row = &logits[i * NUM_ACTIONS..(i + 1) * NUM_ACTIONS];
        let lp = log_softmax(row);
        let a = mb.actions[i];
        let adv = mb.advantages[i];
        let log_ratio = lp[a] - mb.old_log_probs[i];
        let ratio = log_ratio.exp();
        let unclipped = ratio * adv;
        let clipped = ratio.clamp(1.0 - eps, 1.0 + eps) * adv;
        stats.policy_loss -= unclipped.min(clipped) / nf;
        // The clipped branch is constant in the parameters.
        let dlp_a = if unclipped <= clipped { -adv * ratio / nf } else { 0.0 };
        if (ratio - 1.0).abs() > eps {
            stats.clip_fraction += 1.0 / nf;
        }
        stats.approx_kl += ((ratio - 1.0) - log_ratio) / nf;

        let h = entropy(&lp);
        stats.entropy += h / nf;
        let d = &mut dlogits[i * NUM_ACTIONS..(i + 1) * NUM_ACTIONS];
        for j in 0..NUM_ACTIONS {
            let p = lp[j].exp();
            let onehot = if j == a { 1.0 } else { 0.0 };
            d[j] = dlp_a * (onehot - p) + config.entropy_coef * p * (lp[j] + h) / nf;
        }

        let err = values[i] - mb.returns[i];
        stats.value_loss += err * err / nf;
        dvalues[i] = 2.0 * config.value_coef * err / nf;
    }
    let total = stats.policy_loss + config.value_coef * stats.value_loss - config.entropy_coef * stats.entropy;
    if !total.is_finite() {
        return Err(Error::numeric(format!(
            "PPO loss is not finite: policy {}, value {}, entropy {}",
            stats.policy_loss, stats.value_loss, stats.entropy
        )));
    }
    net.backward(&cache, &dlogits, &dvalues);
    Ok((total, stats))
}

/// `epochs` passes of shuffled minibatch updates over a full buffer.
pub fn ppo_update(
    net: &mut ActorCriticNet,
    optimizer: &mut Adam,
    buffer: &RolloutBuffer,
    advantages: &[f64],
    returns: &[f64],
    config: &PpoConfig,
    rng: &mut impl Rng,
) -> Result<PpoReport> {
    let total = buffer.len();
    if total == 0 || advantages.len() != total || returns.len() != total {
        return Err(Error::usage(format!(
            "ppo_update got {} samples, {} advantages, {} returns",
            total,
            advantages.len(),
            returns.len()
        )));
    }
    let obs: Vec<_> = buffer.steps.iter().map(|s| &s.obs).collect();
    let inputs = scale_observations(&obs)?;
    let mb_size = total.div_ceil(config.minibatch_count.max(1));
    let mut order: Vec<usize> = (0..total).collect();
    let mut minibatches = Vec::new();
    for epoch in 0..config.epochs {
        order.shuffle(rng);
        for (k, chunk) in order.chunks(mb_size).enumerate() {
            let mut mb = Minibatch {
                inputs: Vec::with_capacity(chunk.len() * INPUT_LEN),
                actions: Vec::with_capacity(chunk.len()),
                old_log_probs: Vec::with_capacity(chunk.len()),
                advantages: Vec::with_capacity(chunk.len()),
                returns: Vec::with_capacity(chunk.len()),
            };
            for &i in chunk {
                let s = &buffer.steps[i];
                mb.inputs.extend_from_slice(&inputs[i * INPUT_LEN..(i + 1) * INPUT_LEN]);
                mb.actions.push(s.action);
                mb.old_log_probs.push(s.log_prob);
                mb.advantages.push(advantages[i]);
                mb.returns.push(returns[i]);
            }
            normalize_advantages(&mut mb.advantages);
            let (_, stats) = ppo_loss_and_grad(net, &mb, config)
                .map_err(|e| Error::numeric(format!("epoch {epoch}, minibatch {k}: {e}")))?;
            let mut params = net.params_mut();
            let norm = clip_grad_norm(&mut params, config.max_grad_norm);
            if !norm.is_finite() {
                return Err(Error::numeric(format!(
                    "epoch {epoch}, minibatch {k}: gradient norm {norm} (policy loss {}, value loss {})",
                    stats.policy_loss, stats.value_loss
                )));
            }
            optimizer.step(&mut params);
            minibatches.push(stats);
        }
    }
    Ok(PpoReport {
        mean: PpoStats::mean(&minibatches),
        minibatches,
    })
}
