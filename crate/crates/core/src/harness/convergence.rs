use std::path::Path;

use super::metrics::{read_metrics, MetricsRow};
use crate::error::{Error, Result};
use crate::gridworld::{reset, solve, EnvConfig};

/// Seeds averaged by [`optimal_return_estimate`].
pub const OPTIMAL_ESTIMATE_SEEDS: u64 = 100;

/// First logged step from which the return (averaged over the last
/// `window` rows) stays at or above `threshold * optimal_return` for the
/// rest of the run. Rows without a return count as zero.
pub fn convergence_step(rows: &[MetricsRow], optimal_return: f64, threshold: f64, window: usize) -> Option<u64> {
    let window = window.max(1);
    let target = threshold * optimal_return;
    let values: Vec<f64> = rows.iter().map(|r| r.mean_return.unwrap_or(0.0)).collect();
    let smoothed: Vec<f64> = (0..values.len())
        .map(|i| {
            let lo = (i + 1).saturating_sub(window);
            values[lo..=i].iter().sum::<f64>() / (i + 1 - lo) as f64
        })
        .collect();
    let mut first = None;
    for i in (0..rows.len()).rev() {
        if smoothed[i] >= target {
            first = Some(rows[i].global_step);
        } else {
            break;
        }
    }
    first
}

pub fn steps_to_convergence(path: &Path, optimal_return: f64, threshold: f64, window: usize) -> Result<Option<u64>> {
    Ok(convergence_step(&read_metrics(path)?, optimal_return, threshold, window))
}

/// Expected return of a shortest-plan policy: `1 - 0.9 * L / max_steps`
/// with `L` the planner's mean plan length over the first 100 layouts.
pub fn optimal_return_estimate(env: &EnvConfig) -> Result<f64> {
    env.validate()?;
    let mut total = 0usize;
    let mut solved = 0usize;
    for seed in 0..OPTIMAL_ESTIMATE_SEEDS {
        let state = reset(env, seed)?;
        match solve(&state) {
            Some(plan) => {
                total += plan.len();
                solved += 1;
            }
            None => log::warn!("{env} layout {seed} has no plan within budget"),
        }
    }
    if solved == 0 {
        return Err(Error::usage(format!("no {env} layout could be solved")));
    }
    let mean_len = total as f64 / solved as f64;
    Ok(1.0 - 0.9 * mean_len / env.max_steps() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rows(values: &[(u64, f64)]) -> Vec<MetricsRow> {
        values
            .iter()
            .map(|&(s, r)| MetricsRow {
                global_step: s,
                episodes_completed: 0,
                mean_return: Some(r),
                mean_episode_length: None,
                mean_intrinsic_reward: 0.0,
                forward_loss: None,
                inverse_loss: None,
                policy_loss: 0.0,
                value_loss: 0.0,
                entropy: 0.0,
                wall_clock_seconds: 0.0,
            })
            .collect()
    }

    #[test]
    fn jump_to_optimal_is_found() {
        let r = rows(&[(250_000, 0.0), (500_000, 0.8), (750_000, 0.8)]);
        assert_eq!(convergence_step(&r, 0.8, 0.95, 1), Some(500_000));
    }

    #[test]
    fn never_reaching_threshold_is_none() {
        let r = rows(&[(1, 0.1), (2, 0.5), (3, 0.7)]);
        assert_eq!(convergence_step(&r, 0.8, 0.95, 1), None);
    }

    #[test]
    fn dip_moves_the_answer_later() {
        let r = rows(&[(1, 0.8), (2, 0.8), (3, 0.1), (4, 0.8), (5, 0.79)]);
        assert_eq!(convergence_step(&r, 0.8, 0.95, 1), Some(4));
    }

    #[test]
    fn row_window_smooths() {
        let r = rows(&[(1, 0.0), (2, 1.0), (3, 1.0)]);
        assert_eq!(convergence_step(&r, 1.0, 0.95, 2), Some(3));
    }

    #[test]
    fn optimal_estimate_is_in_reward_range() {
        let est = optimal_return_estimate(&EnvConfig::multi_room(2, 4)).unwrap();
        assert!(est > 0.5 && est < 1.0, "{est}");
    }
}
