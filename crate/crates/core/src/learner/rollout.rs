//! Vectorized environment stepping and rollout collection.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::buffer::{RolloutBuffer, StepRecord};
use super::net::{scale_observations, ActorCriticNet};
use super::sample::sample_action;
use crate::error::{Error, Result};
use crate::gridworld::{encode_partial, reset, Action, EncodedTensor, EnvConfig, GridState, NUM_ACTIONS};
use crate::intrinsic::{EpisodicCounter, IntrinsicModule, RideLosses, Transition};

/// Summary of one finished episode.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpisodeStats {
    pub extrinsic_return: f64,
    pub intrinsic_return: f64,
    pub length: u32,
    pub success: bool,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct RolloutStats {
    pub episodes: Vec<EpisodeStats>,
    pub mean_intrinsic: f64,
}

#[derive(Debug, Clone, Copy, Default)]
struct Running {
    extrinsic: f64,
    intrinsic: f64,
    length: u32,
}

/// Independent environment instances, each with its own visitation counter.
/// Episode seeds come from one run-level generator.
#[derive(Debug, Clone)]
pub struct VecEnv {
    pub config: EnvConfig,
    pub envs: Vec<GridState>,
    pub counters: Vec<EpisodicCounter>,
    rng: ChaCha8Rng,
    running: Vec<Running>,
}

impl VecEnv {
    pub fn new(config: EnvConfig, n_envs: usize, seed: u64) -> Result<Self> {
        if n_envs == 0 {
            return Err(Error::config("ppo.n_envs", "need at least one environment"));
        }
        config.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let envs = (0..n_envs).map(|_| reset(&config, rng.random())).collect::<Result<Vec<_>>>()?;
        Ok(VecEnv {
            config,
            envs,
            counters: vec![EpisodicCounter::default(); n_envs],
            rng,
            running: vec![Running::default(); n_envs],
        })
    }

    pub fn len(&self) -> usize {
        self.envs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.envs.is_empty()
    }

    fn reset_env(&mut self, e: usize) -> Result<()> {
        self.envs[e] = reset(&self.config, self.rng.random())?;
        self.running[e] = Running::default();
        Ok(())
    }
}

/// Steps every environment `buffer.rollout_len` times under `net`, storing
/// combined rewards. Rewards are computed against the intrinsic module's
/// current parameters, which stay fixed for the whole rollout.
pub fn collect_rollout(
    envs: &mut VecEnv,
    net: &ActorCriticNet,
    intrinsic: &mut IntrinsicModule,
    buffer: &mut RolloutBuffer,
    rng: &mut impl Rng,
) -> Result<RolloutStats> {
    let n = envs.len();
    if buffer.n_envs != n {
        return Err(Error::usage(format!("buffer is sized for {} envs, got {n}", buffer.n_envs)));
    }
    buffer.clear();
    let keep_views = intrinsic.ride.is_some();
    let mut stats = RolloutStats::default();
    let mut intrinsic_sum = 0.0;

    let mut cur_obs: Vec<EncodedTensor> = envs.envs.iter().map(encode_partial).collect();
    let mut cur_views: Vec<EncodedTensor> = envs.envs.iter().map(|s| intrinsic.view_of(s)).collect();
    let mut cur_emb = intrinsic.embed_views(&cur_views)?;

    for _ in 0..buffer.rollout_len {
        let obs_refs: Vec<&EncodedTensor> = cur_obs.iter().collect();
        let (logits, values, _) = net.forward(&scale_observations(&obs_refs)?, n);

        let mut samples = Vec::with_capacity(n);
        let mut outcomes = Vec::with_capacity(n);
        for e in 0..n {
            let s = sample_action(&logits[e * NUM_ACTIONS..(e + 1) * NUM_ACTIONS], rng)?;
            outcomes.push(envs.envs[e].step_mut(Action::from_id(s.action)?)?);
            samples.push(s);
        }
        let next_obs: Vec<EncodedTensor> = envs.envs.iter().map(encode_partial).collect();
        let next_views: Vec<EncodedTensor> = envs.envs.iter().map(|s| intrinsic.view_of(s)).collect();
        let next_emb = intrinsic.embed_views(&next_views)?;

        let mut records = Vec::with_capacity(n);
        let mut resets = Vec::new();
        for e in 0..n {
            let done = outcomes[e].done;
            let count = envs.counters[e].observe(&next_obs[e], done);
            let r_i = intrinsic.reward(&cur_emb[e], &next_emb[e], count)?;
            let r_e = outcomes[e].reward;
            intrinsic_sum += r_i;
            records.push(StepRecord {
                obs: std::mem::replace(&mut cur_obs[e], next_obs[e].clone()),
                action: samples[e].action,
                log_prob: samples[e].log_prob,
                value: values[e],
                extrinsic_reward: r_e,
                intrinsic_reward: r_i,
                combined_reward: intrinsic.combine(r_e, r_i),
                done,
            });
            if keep_views {
                buffer.intrinsic_views.push((cur_views[e].clone(), next_views[e].clone()));
            }
            let run = &mut envs.running[e];
            run.extrinsic += r_e;
            run.intrinsic += r_i;
            run.length += 1;
            if done {
                stats.episodes.push(EpisodeStats {
                    extrinsic_return: run.extrinsic,
                    intrinsic_return: run.intrinsic,
                    length: run.length,
                    success: envs.envs[e].success,
                });
                envs.reset_env(e)?;
                cur_obs[e] = encode_partial(&envs.envs[e]);
                cur_views[e] = intrinsic.view_of(&envs.envs[e]);
                resets.push(e);
            } else {
                cur_views[e] = next_views[e].clone();
                cur_emb[e] = next_emb[e].clone();
            }
        }
        buffer.push_step(records)?;
        if !resets.is_empty() {
            let views: Vec<EncodedTensor> = resets.iter().map(|&e| cur_views[e].clone()).collect();
            for (e, emb) in resets.into_iter().zip(intrinsic.embed_views(&views)?) {
                cur_emb[e] = emb;
            }
        }
    }

    let obs_refs: Vec<&EncodedTensor> = cur_obs.iter().collect();
    let (_, bootstrap, _) = net.forward(&scale_observations(&obs_refs)?, n);
    buffer.set_bootstrap(bootstrap)?;
    stats.mean_intrinsic = intrinsic_sum / buffer.len() as f64;
    Ok(stats)
}

/// One shuffled pass of learned-embedding updates over the rollout, split
/// into `minibatch_count` steps. Returns mean losses, or `None` when the
/// intrinsic module has nothing to train.
pub fn train_intrinsic(
    intrinsic: &mut IntrinsicModule,
    buffer: &RolloutBuffer,
    minibatch_count: usize,
    rng: &mut impl Rng,
) -> Result<Option<RideLosses>> {
    if intrinsic.ride.is_none() || buffer.intrinsic_views.is_empty() {
        return Ok(None);
    }
    let mut order: Vec<usize> = (0..buffer.intrinsic_views.len()).collect();
    order.shuffle(rng);
    let size = order.len().div_ceil(minibatch_count.max(1));
    let mut total = RideLosses { forward: 0.0, inverse: 0.0 };
    let mut steps = 0.0;
    for chunk in order.chunks(size) {
        let batch: Vec<Transition> = chunk
            .iter()
            .map(|&i| Transition {
                obs: &buffer.intrinsic_views[i].0,
                action: buffer.steps[i].action,
                next_obs: &buffer.intrinsic_views[i].1,
            })
            .collect();
        if let Some(l) = intrinsic.update(&batch)? {
            total.forward += l.forward;
            total.inverse += l.inverse;
            steps += 1.0;
        }
    }
    Ok(Some(RideLosses {
        forward: total.forward / steps,
        inverse: total.inverse / steps,
    }))
}
