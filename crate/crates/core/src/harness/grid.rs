//! Beta sweeps.

use std::fmt::Write as _;

use super::config::ExperimentConfig;
use super::convergence::steps_to_convergence;
use super::run::run_experiment_in;
use crate::error::{Error, Result};

/// The sweep used for every method/view combination.
pub const DEFAULT_BETA_GRID: [f64; 7] = [0.1, 0.05, 0.01, 0.005, 0.001, 0.0005, 0.0001];

#[derive(Debug, Clone, PartialEq)]
pub struct GridRow {
    pub beta: f64,
    /// Convergence step per seed, `None` for runs that never converged or
    /// failed outright.
    pub per_seed: Vec<Option<u64>>,
    pub median: Option<u64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridTable {
    pub rows: Vec<GridRow>,
}

/// Median with "never" ranked above every finite value. An even count
/// averages the middle pair, and is `None` if either is.
pub fn median_steps(values: &[Option<u64>]) -> Option<u64> {
    if values.is_empty() {
        return None;
    }
    let mut v: Vec<Option<u64>> = values.to_vec();
    v.sort_by_key(|x| x.unwrap_or(u64::MAX));
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        Some((v[n / 2 - 1]? + v[n / 2]?) / 2)
    }
}

impl GridTable {
    /// Smallest median wins; runs that never converge rank last.
    pub fn best(&self) -> Option<f64> {
        self.rows
            .iter()
            .filter(|r| r.median.is_some())
            .min_by_key(|r| r.median)
            .map(|r| r.beta)
    }

    pub fn to_markdown(&self) -> String {
        let mut s = String::from("| beta | median steps to convergence | per seed |\n|---|---|---|\n");
        let fmt = |v: Option<u64>| v.map_or_else(|| "-".to_string(), |x| format!("{:.2}M", x as f64 / 1e6));
        for r in &self.rows {
            let seeds: Vec<String> = r.per_seed.iter().map(|&v| fmt(v)).collect();
            let _ = writeln!(s, "| {} | {} | {} |", r.beta, fmt(r.median), seeds.join(", "));
        }
        if let Some(b) = self.best() {
            let _ = writeln!(s, "\nbest beta: {b}");
        }
        s
    }
}

/// Runs every `(beta, seed)` pair of the grid and reports median
/// convergence steps. A failing run is recorded as not converged.
pub fn beta_grid_search(base: &ExperimentConfig, grid: &[f64], optimal_return: f64) -> Result<GridTable> {
    if grid.is_empty() {
        return Err(Error::usage("beta grid is empty"));
    }
    let mut rows = Vec::with_capacity(grid.len());
    for &beta in grid {
        let mut cfg = base.clone();
        cfg.intrinsic.beta = beta;
        let mut per_seed = Vec::with_capacity(cfg.run.seeds.len());
        for &seed in &cfg.run.seeds {
            let dir = cfg.run.output_dir.join(format!("beta-{beta}")).join(format!("seed-{seed}"));
            let outcome = run_experiment_in(&cfg, seed, &dir, Some(optimal_return)).and_then(|summary| {
                steps_to_convergence(&summary.metrics_path, optimal_return, cfg.run.convergence_threshold, 1)
            });
            per_seed.push(match outcome {
                Ok(step) => step,
                Err(e) => {
                    log::warn!("beta {beta} seed {seed} failed: {e}");
                    None
                }
            });
        }
        rows.push(GridRow {
            beta,
            median: median_steps(&per_seed),
            per_seed,
        });
    }
    Ok(GridTable { rows })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn median_ranks_never_last() {
        assert_eq!(median_steps(&[Some(5), None, Some(1)]), Some(5));
        assert_eq!(median_steps(&[None, None, Some(1)]), None);
        assert_eq!(median_steps(&[Some(4), Some(2)]), Some(3));
        assert_eq!(median_steps(&[Some(4), None]), None);
        assert_eq!(median_steps(&[]), None);
    }

    #[test]
    fn best_prefers_smallest_median() {
        let t = GridTable {
            rows: vec![
                GridRow { beta: 0.1, per_seed: vec![None], median: None },
                GridRow { beta: 0.01, per_seed: vec![Some(9)], median: Some(9) },
                GridRow { beta: 0.05, per_seed: vec![Some(3)], median: Some(3) },
            ],
        };
        assert_eq!(t.best(), Some(0.05));
        let md = t.to_markdown();
        assert_eq!(md.lines().filter(|l| l.starts_with("| 0")).count(), 3);
        assert!(md.contains("| 0.1 | - |"));
    }
}
