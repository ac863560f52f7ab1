//! Single training runs.

use std::collections::VecDeque;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::config::ExperimentConfig;
use super::convergence::optimal_return_estimate;
use super::metrics::{MetricsRow, MetricsWriter};
use crate::error::Result;
use crate::intrinsic::IntrinsicModule;
use crate::learner::{collect_rollout, compute_gae, ppo_update, train_intrinsic, ActorCriticNet, Checkpoint, RolloutBuffer, VecEnv};
use crate::nn::{Adam, Module};

pub const METRICS_FILE: &str = "metrics.csv";
pub const CHECKPOINT_FILE: &str = "final.gckp";

#[derive(Debug, Clone, PartialEq)]
pub struct RunSummary {
    pub metrics_path: PathBuf,
    pub checkpoint_path: PathBuf,
    pub updates: usize,
    pub global_step: u64,
    pub episodes: u64,
    /// True when the run ended on its stop rule rather than its budget.
    pub stopped_early: bool,
}

/// Output directory for one seed of a config.
pub fn run_dir(config: &ExperimentConfig, seed: u64) -> PathBuf {
    config.run.output_dir.join(format!("seed-{seed}"))
}

/// Trains until `run.total_steps` (or the stop rule fires), appending a
/// metrics row every `run.metrics_every` steps and writing a final
/// checkpoint. Deterministic in `(config, seed)` with local providers.
pub fn run_experiment(config: &ExperimentConfig, seed: u64) -> Result<RunSummary> {
    let optimal = match config.run.stop_fraction {
        Some(_) => Some(optimal_return_estimate(&config.env)?),
        None => None,
    };
    run_experiment_in(config, seed, &run_dir(config, seed), optimal)
}

/// Like [`run_experiment`] but writes into `dir` and takes the
/// optimal-return estimate used by the stop rule from the caller.
pub fn run_experiment_in(config: &ExperimentConfig, seed: u64, dir: &Path, optimal: Option<f64>) -> Result<RunSummary> {
    config.validate()?;
    std::fs::create_dir_all(dir)?;
    let started = Instant::now();
    let metrics_path = dir.join(METRICS_FILE);
    let checkpoint_path = dir.join(CHECKPOINT_FILE);
    let mut metrics = MetricsWriter::create(&metrics_path)?;

    let mut master = ChaCha8Rng::seed_from_u64(seed);
    let net_seed: u64 = master.random();
    let ride_seed: u64 = master.random();
    let env_seed: u64 = master.random();
    let mut rng = ChaCha8Rng::seed_from_u64(master.random());

    let ppo = &config.ppo;
    let mut net = ActorCriticNet::new(net_seed);
    let mut optimizer = Adam::new(ppo.learning_rate);
    let mut intrinsic = IntrinsicModule::new(config.intrinsic.clone(), config.env.grid_dims(), config.env.tile_size, ride_seed)?;
    let mut envs = VecEnv::new(config.env.clone(), ppo.n_envs, env_seed)?;
    let mut buffer = RolloutBuffer::new(ppo.n_envs, ppo.rollout_len);

    let window = config.run.convergence_window;
    let mut returns: VecDeque<f64> = VecDeque::with_capacity(window);
    let mut lengths: VecDeque<f64> = VecDeque::with_capacity(window);
    let mut episodes = 0u64;
    let mut global_step = 0u64;
    let mut updates = 0usize;
    let mut above_since: Option<u64> = None;
    let mut stopped_early = false;

    while global_step < config.run.total_steps {
        let stats = collect_rollout(&mut envs, &net, &mut intrinsic, &mut buffer, &mut rng)?;
        let ride = train_intrinsic(&mut intrinsic, &buffer, config.intrinsic.ride_minibatches, &mut rng)?;
        let (advantages, targets) = compute_gae(&buffer, ppo)?;
        let report = ppo_update(&mut net, &mut optimizer, &buffer, &advantages, &targets, ppo, &mut rng)?;
        updates += 1;
        global_step += ppo.horizon() as u64;
        for ep in &stats.episodes {
            if returns.len() == window {
                returns.pop_front();
                lengths.pop_front();
            }
            returns.push_back(ep.extrinsic_return);
            lengths.push_back(ep.length as f64);
        }
        episodes += stats.episodes.len() as u64;
        let mean = |q: &VecDeque<f64>| (!q.is_empty()).then(|| q.iter().sum::<f64>() / q.len() as f64);
        let mean_return = mean(&returns);

        if global_step % config.run.metrics_every == 0 {
            metrics.append(&MetricsRow {
                global_step,
                episodes_completed: episodes,
                mean_return,
                mean_episode_length: mean(&lengths),
                mean_intrinsic_reward: stats.mean_intrinsic,
                forward_loss: ride.map(|l| l.forward),
                inverse_loss: ride.map(|l| l.inverse),
                policy_loss: report.mean.policy_loss,
                value_loss: report.mean.value_loss,
                entropy: report.mean.entropy,
                wall_clock_seconds: started.elapsed().as_secs_f64(),
            })?;
        }

        if let (Some(fraction), Some(opt)) = (config.run.stop_fraction, optimal) {
            // Only a full window of episodes counts.
            let full = returns.len() == window;
            if full && mean_return.is_some_and(|r| r >= fraction * opt) {
                let since = *above_since.get_or_insert(global_step);
                if global_step - since >= config.run.stop_patience {
                    stopped_early = global_step < config.run.total_steps;
                    break;
                }
            } else {
                above_since = None;
            }
        }
    }

    let mut params = net.params();
    if let Some(r) = intrinsic.ride.as_ref() {
        params.extend(r.params());
    }
    Checkpoint::from_params(params, &format!("{}run.seed = {seed}\n", config.to_text())).save(&checkpoint_path)?;
    log::info!("seed {seed}: {updates} updates, {global_step} steps, {episodes} episodes");
    Ok(RunSummary {
        metrics_path,
        checkpoint_path,
        updates,
        global_step,
        episodes,
        stopped_early,
    })
}
