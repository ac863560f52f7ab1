//! Experiment orchestration: configs, training runs, metrics, convergence,
//! beta sweeps and plots.

mod config;
mod convergence;
mod grid;
mod metrics;
mod plot;
mod run;

pub use config::{parse_pairs, ExperimentConfig, RunConfig};
pub use convergence::{convergence_step, optimal_return_estimate, steps_to_convergence, OPTIMAL_ESTIMATE_SEEDS};
pub use grid::{beta_grid_search, median_steps, GridRow, GridTable, DEFAULT_BETA_GRID};
pub use metrics::{read_metrics, MetricsRow, MetricsWriter};
pub use plot::{build_series, emit_plot, render_svg, Series};
pub use run::{run_dir, run_experiment, run_experiment_in, RunSummary, CHECKPOINT_FILE, METRICS_FILE};
