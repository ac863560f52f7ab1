//! Flat `key = value` experiment configuration.
//!
//! ```text
//! # comments start with '#'
//! env.id = MultiRoom-N2-S4
//! intrinsic.method = ride
//! intrinsic.beta = 0.05
//! ppo.learning_rate = 0.0001
//! run.total_steps = 2000000
//! run.seeds = 0, 1, 2
//! ```
//!
//! Keys outside the known set are errors. `intrinsic.input_format`
//! defaults to the format the chosen method works with.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::gridworld::EnvConfig;
use crate::intrinsic::{Format, IntrinsicConfig, Method};
use crate::learner::PpoConfig;

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub total_steps: u64,
    pub seeds: Vec<u64>,
    /// Episodes in the return window.
    pub convergence_window: usize,
    /// Fraction of the optimal-return estimate that counts as converged.
    pub convergence_threshold: f64,
    pub metrics_every: u64,
    pub output_dir: PathBuf,
    /// Stop once the windowed return has stayed at or above
    /// `stop_fraction * optimal` for `stop_patience` steps.
    pub stop_fraction: Option<f64>,
    pub stop_patience: u64,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            total_steps: 2_048_000,
            seeds: vec![0, 1, 2],
            convergence_window: 100,
            convergence_threshold: 0.95,
            metrics_every: 2048,
            output_dir: PathBuf::from("runs"),
            stop_fraction: None,
            stop_patience: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub env: EnvConfig,
    pub intrinsic: IntrinsicConfig,
    pub ppo: PpoConfig,
    pub run: RunConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            env: EnvConfig::multi_room(2, 4),
            intrinsic: IntrinsicConfig::default(),
            ppo: PpoConfig::default(),
            run: RunConfig::default(),
        }
    }
}

const KEYS: &[&str] = &[
    "env.id",
    "env.max_steps",
    "env.grid_size",
    "env.tile_size",
    "env.seed",
    "intrinsic.method",
    "intrinsic.beta",
    "intrinsic.episodic",
    "intrinsic.input_view",
    "intrinsic.input_format",
    "intrinsic.embed_dim",
    "intrinsic.provider",
    "intrinsic.provider_seed",
    "intrinsic.endpoint",
    "intrinsic.learning_rate",
    "intrinsic.ride_minibatches",
    "ppo.gamma",
    "ppo.gae_lambda",
    "ppo.clip_epsilon",
    "ppo.epochs",
    "ppo.n_envs",
    "ppo.rollout_len",
    "ppo.learning_rate",
    "ppo.entropy_coef",
    "ppo.value_coef",
    "ppo.max_grad_norm",
    "ppo.minibatch_count",
    "run.total_steps",
    "run.seeds",
    "run.convergence_window",
    "run.convergence_threshold",
    "run.metrics_every",
    "run.output_dir",
    "run.stop_fraction",
    "run.stop_patience",
];

fn parse_value<T: FromStr>(key: &str, value: &str) -> Result<T>
where
    T::Err: std::fmt::Display,
{
    value
        .trim()
        .parse()
        .map_err(|e| Error::config(key, format!("cannot parse `{value}`: {e}")))
}

fn parse_bool(key: &str, value: &str) -> Result<bool> {
    match value.trim() {
        "true" | "yes" | "on" | "1" => Ok(true),
        "false" | "no" | "off" | "0" => Ok(false),
        other => Err(Error::config(key, format!("expected a boolean, got `{other}`"))),
    }
}

/// Parses `key = value` lines into a map; line numbers are 1-based.
pub fn parse_pairs(text: &str, path: &Path) -> Result<BTreeMap<String, String>> {
    let mut pairs = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let err = |reason: String| Error::Parse {
            path: path.to_path_buf(),
            line: i + 1,
            reason,
        };
        let (key, value) = line.split_once('=').ok_or_else(|| err(format!("expected `key = value`, got `{line}`")))?;
        let key = key.trim();
        if !KEYS.contains(&key) {
            return Err(err(format!("unknown key `{key}`")));
        }
        if pairs.insert(key.to_string(), value.trim().to_string()).is_some() {
            return Err(err(format!("duplicate key `{key}`")));
        }
    }
    Ok(pairs)
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::parse(&text, path)
    }

    pub fn parse(text: &str, path: &Path) -> Result<Self> {
        Self::from_pairs(&parse_pairs(text, path)?)
    }

    /// Loads `path`, then applies `key=value` overrides.
    pub fn load_with_overrides(path: &Path, overrides: &[String]) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let mut pairs = parse_pairs(&text, path)?;
        for o in overrides {
            let (k, v) = o
                .split_once('=')
                .ok_or_else(|| Error::usage(format!("override `{o}` is not key=value")))?;
            let k = k.trim();
            if !KEYS.contains(&k) {
                return Err(Error::config(k, "unknown key"));
            }
            pairs.insert(k.to_string(), v.trim().to_string());
        }
        Self::from_pairs(&pairs)
    }

    pub fn from_pairs(pairs: &BTreeMap<String, String>) -> Result<Self> {
        let mut cfg = ExperimentConfig::default();
        if let Some(key) = pairs.keys().find(|k| !KEYS.contains(&k.as_str())) {
            return Err(Error::config(key.as_str(), "unknown key"));
        }
        let get = |k: &str| pairs.get(k).map(String::as_str);

        if let Some(v) = get("env.id") {
            cfg.env = v.parse()?;
        }
        if let Some(v) = get("env.max_steps") {
            cfg.env.max_steps = Some(parse_value("env.max_steps", v)?);
        }
        if let Some(v) = get("env.grid_size") {
            cfg.env.grid_size = Some(parse_value("env.grid_size", v)?);
        }
        if let Some(v) = get("env.tile_size") {
            cfg.env.tile_size = parse_value("env.tile_size", v)?;
        }
        if let Some(v) = get("env.seed") {
            cfg.env.seed = parse_value("env.seed", v)?;
        }

        let i = &mut cfg.intrinsic;
        if let Some(v) = get("intrinsic.method") {
            i.method = v.parse()?;
        }
        i.input_format = match get("intrinsic.input_format") {
            Some(v) => v.parse()?,
            None if i.method == Method::EmbeddingNovelty => Format::Rgb,
            None => Format::Encoded,
        };
        if let Some(v) = get("intrinsic.beta") {
            i.beta = parse_value("intrinsic.beta", v)?;
        }
        if let Some(v) = get("intrinsic.episodic") {
            i.episodic_enabled = parse_bool("intrinsic.episodic", v)?;
        }
        if let Some(v) = get("intrinsic.input_view") {
            i.input_view = v.parse()?;
        }
        if let Some(v) = get("intrinsic.embed_dim") {
            i.embed_dim = parse_value("intrinsic.embed_dim", v)?;
        }
        if let Some(v) = get("intrinsic.provider") {
            i.provider = v.parse()?;
        }
        if let Some(v) = get("intrinsic.provider_seed") {
            i.provider_seed = parse_value("intrinsic.provider_seed", v)?;
        }
        if let Some(v) = get("intrinsic.endpoint") {
            i.endpoint = v.to_string();
        }
        if let Some(v) = get("intrinsic.learning_rate") {
            i.ride_learning_rate = parse_value("intrinsic.learning_rate", v)?;
        }
        if let Some(v) = get("intrinsic.ride_minibatches") {
            i.ride_minibatches = parse_value("intrinsic.ride_minibatches", v)?;
        }

        let p = &mut cfg.ppo;
        macro_rules! ppo_field {
            ($($name:ident),+) => {
                $(if let Some(v) = get(concat!("ppo.", stringify!($name))) {
                    p.$name = parse_value(concat!("ppo.", stringify!($name)), v)?;
                })+
            };
        }
        ppo_field!(gamma, gae_lambda, clip_epsilon, epochs, n_envs, rollout_len, learning_rate, entropy_coef, value_coef, max_grad_norm, minibatch_count);

        let r = &mut cfg.run;
        if let Some(v) = get("run.total_steps") {
            r.total_steps = parse_value("run.total_steps", v)?;
        }
        if let Some(v) = get("run.seeds") {
            r.seeds = v
                .split(',')
                .map(|s| parse_value("run.seeds", s))
                .collect::<Result<Vec<u64>>>()?;
        }
        if let Some(v) = get("run.convergence_window") {
            r.convergence_window = parse_value("run.convergence_window", v)?;
        }
        if let Some(v) = get("run.convergence_threshold") {
            r.convergence_threshold = parse_value("run.convergence_threshold", v)?;
        }
        if let Some(v) = get("run.metrics_every") {
            r.metrics_every = parse_value("run.metrics_every", v)?;
        }
        if let Some(v) = get("run.output_dir") {
            r.output_dir = PathBuf::from(v);
        }
        if let Some(v) = get("run.stop_fraction") {
            r.stop_fraction = Some(parse_value("run.stop_fraction", v)?);
        }
        if let Some(v) = get("run.stop_patience") {
            r.stop_patience = parse_value("run.stop_patience", v)?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        self.env.validate()?;
        self.intrinsic.validate()?;
        self.ppo.validate()?;
        let horizon = self.ppo.horizon() as u64;
        let r = &self.run;
        if r.total_steps == 0 || r.total_steps % horizon != 0 {
            return Err(Error::config(
                "run.total_steps",
                format!("{} is not a positive multiple of the {horizon}-step update horizon", r.total_steps),
            ));
        }
        if r.metrics_every == 0 || r.metrics_every % horizon != 0 {
            return Err(Error::config(
                "run.metrics_every",
                format!("{} is not a positive multiple of the {horizon}-step update horizon", r.metrics_every),
            ));
        }
        if r.seeds.is_empty() {
            return Err(Error::config("run.seeds", "need at least one seed"));
        }
        if r.convergence_window == 0 {
            return Err(Error::config("run.convergence_window", "must be at least 1"));
        }
        if !(r.convergence_threshold > 0.0 && r.convergence_threshold <= 1.0) {
            return Err(Error::config("run.convergence_threshold", "must be in (0, 1]"));
        }
        if let Some(f) = r.stop_fraction {
            if !(f > 0.0 && f <= 1.0) {
                return Err(Error::config("run.stop_fraction", "must be in (0, 1]"));
            }
        }
        Ok(())
    }

    /// Canonical text form; parsing it yields an equal config.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let e = &self.env;
        let _ = writeln!(s, "env.id = {}", e.env_id());
        if let Some(m) = e.max_steps {
            let _ = writeln!(s, "env.max_steps = {m}");
        }
        if let Some(g) = e.grid_size {
            let _ = writeln!(s, "env.grid_size = {g}");
        }
        let _ = writeln!(s, "env.tile_size = {}", e.tile_size);
        let _ = writeln!(s, "env.seed = {}", e.seed);
        let i = &self.intrinsic;
        let _ = writeln!(s, "intrinsic.method = {}", i.method);
        let _ = writeln!(s, "intrinsic.beta = {}", i.beta);
        let _ = writeln!(s, "intrinsic.episodic = {}", i.episodic_enabled);
        let _ = writeln!(s, "intrinsic.input_view = {}", i.input_view);
        let _ = writeln!(s, "intrinsic.input_format = {}", i.input_format);
        let _ = writeln!(s, "intrinsic.embed_dim = {}", i.embed_dim);
        let _ = writeln!(s, "intrinsic.provider = {}", i.provider);
        let _ = writeln!(s, "intrinsic.provider_seed = {}", i.provider_seed);
        let _ = writeln!(s, "intrinsic.endpoint = {}", i.endpoint);
        let _ = writeln!(s, "intrinsic.learning_rate = {}", i.ride_learning_rate);
        let _ = writeln!(s, "intrinsic.ride_minibatches = {}", i.ride_minibatches);
        let p = &self.ppo;
        let _ = writeln!(s, "ppo.gamma = {}", p.gamma);
        let _ = writeln!(s, "ppo.gae_lambda = {}", p.gae_lambda);
        let _ = writeln!(s, "ppo.clip_epsilon = {}", p.clip_epsilon);
        let _ = writeln!(s, "ppo.epochs = {}", p.epochs);
        let _ = writeln!(s, "ppo.n_envs = {}", p.n_envs);
        let _ = writeln!(s, "ppo.rollout_len = {}", p.rollout_len);
        let _ = writeln!(s, "ppo.learning_rate = {}", p.learning_rate);
        let _ = writeln!(s, "ppo.entropy_coef = {}", p.entropy_coef);
        let _ = writeln!(s, "ppo.value_coef = {}", p.value_coef);
        let _ = writeln!(s, "ppo.max_grad_norm = {}", p.max_grad_norm);
        let _ = writeln!(s, "ppo.minibatch_count = {}", p.minibatch_count);
        let r = &self.run;
        let _ = writeln!(s, "run.total_steps = {}", r.total_steps);
        let seeds: Vec<String> = r.seeds.iter().map(u64::to_string).collect();
        let _ = writeln!(s, "run.seeds = {}", seeds.join(", "));
        let _ = writeln!(s, "run.convergence_window = {}", r.convergence_window);
        let _ = writeln!(s, "run.convergence_threshold = {}", r.convergence_threshold);
        let _ = writeln!(s, "run.metrics_every = {}", r.metrics_every);
        let _ = writeln!(s, "run.output_dir = {}", r.output_dir.display());
        if let Some(f) = r.stop_fraction {
            let _ = writeln!(s, "run.stop_fraction = {f}");
        }
        let _ = writeln!(s, "run.stop_patience = {}", r.stop_patience);
        s
    }
}
