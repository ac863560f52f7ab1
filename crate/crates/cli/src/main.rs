use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};

use gridcurio::gridworld::{encode_full, encode_partial, render_rgb, reset, EnvConfig};
use gridcurio::harness::{beta_grid_search, emit_plot, optimal_return_estimate, run_experiment, steps_to_convergence, ExperimentConfig, DEFAULT_BETA_GRID};

#[derive(Parser)]
#[command(name = "gridcurio", version, about = "Intrinsic-reward PPO on procedurally generated gridworlds")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum ViewArg {
    Full,
    Partial,
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Enc,
    Rgb,
}

#[derive(Subcommand)]
enum Command {
    /// Train one seed of a config.
    Train {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        seed: u64,
        /// `key=value`, applied after the config file; repeatable.
        #[arg(long = "override", value_name = "KEY=VALUE")]
        overrides: Vec<String>,
    },
    /// Sweep intrinsic.beta over a grid for every configured seed.
    Gridsearch {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, value_delimiter = ',')]
        grid: Option<Vec<f64>>,
        /// Optimal return; estimated with the planner when omitted.
        #[arg(long)]
        optimal: Option<f64>,
    },
    /// First step from which a run stays converged ("-" if never).
    Convergence {
        #[arg(long)]
        metrics: PathBuf,
        #[arg(long)]
        optimal: f64,
        #[arg(long, default_value_t = 0.95)]
        threshold: f64,
        /// Trailing rows to average.
        #[arg(long, default_value_t = 1)]
        window: usize,
    },
    /// Plot return curves from metrics files as SVG.
    Plot {
        #[arg(long)]
        out: PathBuf,
        #[arg(required = true)]
        metrics: Vec<PathBuf>,
        /// One label per file; files sharing a label are aggregated.
        /// Defaults to the parent directory names.
        #[arg(long, value_delimiter = ',')]
        labels: Vec<String>,
        #[arg(long)]
        optimal: Option<f64>,
    },
    /// Write one observation of a fresh episode as text or PNG.
    Render {
        #[arg(long)]
        env: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, value_enum, default_value_t = ViewArg::Full)]
        view: ViewArg,
        #[arg(long, value_enum, default_value_t = FormatArg::Enc)]
        format: FormatArg,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 8)]
        tile_size: usize,
    },
}

fn default_label(path: &std::path::Path) -> String {
    path.parent()
        .and_then(|p| p.file_name())
        .map_or_else(|| path.display().to_string(), |n| n.to_string_lossy().into_owned())
}

fn main() -> Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match Cli::parse().command {
        Command::Train { config, seed, overrides } => {
            let cfg = ExperimentConfig::load_with_overrides(&config, &overrides)?;
            let summary = run_experiment(&cfg, seed)?;
            println!("{}", summary.metrics_path.display());
        }
        Command::Gridsearch { config, grid, optimal } => {
            let cfg = ExperimentConfig::load(&config)?;
            let grid = grid.unwrap_or_else(|| DEFAULT_BETA_GRID.to_vec());
            let optimal = match optimal {
                Some(o) => o,
                None => optimal_return_estimate(&cfg.env)?,
            };
            log::info!("optimal return for {}: {optimal:.4}", cfg.env);
            let table = beta_grid_search(&cfg, &grid, optimal)?;
            print!("{}", table.to_markdown());
        }
        Command::Convergence { metrics, optimal, threshold, window } => {
            match steps_to_convergence(&metrics, optimal, threshold, window)? {
                Some(step) => println!("{step}"),
                None => println!("-"),
            }
        }
        Command::Plot { out, metrics, labels, optimal } => {
            let labels = if labels.is_empty() {
                metrics.iter().map(|p| default_label(p)).collect()
            } else {
                labels
            };
            emit_plot(&metrics, &labels, optimal, &out)?;
        }
        Command::Render { env, seed, view, format, out, tile_size } => {
            let config: EnvConfig = env.parse()?;
            if tile_size == 0 {
                bail!("--tile-size must be positive");
            }
            let state = reset(&config, seed)?;
            let tensor = match view {
                ViewArg::Full => encode_full(&state),
                ViewArg::Partial => encode_partial(&state),
            };
            match format {
                FormatArg::Enc => std::fs::write(&out, tensor.to_text()),
                FormatArg::Rgb => std::fs::write(&out, render_rgb(&tensor, tile_size).to_png()),
            }
            .with_context(|| format!("writing {}", out.display()))?;
        }
    }
    Ok(())
}
