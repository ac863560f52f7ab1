//! Intrinsic rewards: impact-driven (learned embedding) and frozen-embedding
//! novelty, both divided by an optional per-episode visitation term.

mod counter;
mod provider;
pub mod remote;
mod reward;
mod ride;

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use counter::{observation_key, EpisodicCounter};
pub use provider::{area_downscale, EmbeddingProvider, EmbeddingProviderSpec, FrozenRandomProvider, DEFAULT_FROZEN_DIM, FROZEN_INPUT_SIDE};
pub use remote::RemoteProvider;
pub use reward::{combine_reward, embedding_distance, embedding_novelty_reward, episodic_divisor, ride_reward};
pub use ride::{Mlp, RideLosses, RideNets, Transition, DEFAULT_EMBED_DIM};

use crate::error::{Error, Result};
use crate::gridworld::{encode_full, encode_partial, render_rgb, EncodedTensor, GridState, RgbImage};

const EMBED_CACHE_LIMIT: usize = 50_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Ride,
    EmbeddingNovelty,
    None,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum View {
    Partial,
    Full,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    Encoded,
    Rgb,
}

/// Which frozen provider backs `Method::EmbeddingNovelty`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProviderKind {
    FrozenRandom,
    RemoteService,
}

macro_rules! str_enum {
    ($ty:ident, $field:literal, { $($name:literal => $variant:expr),+ $(,)? }) => {
        impl FromStr for $ty {
            type Err = Error;
            fn from_str(s: &str) -> Result<Self> {
                match s.trim() {
                    $($name => Ok($variant),)+
                    other => Err(Error::config($field, format!("unknown value `{other}`"))),
                }
            }
        }

        impl fmt::Display for $ty {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                let name = match self {
                    $(v if *v == $variant => $name,)+
                    _ => unreachable!(),
                };
                f.write_str(name)
            }
        }
    };
}

str_enum!(Method, "intrinsic.method", {
    "ride" => Method::Ride,
    "embedding_novelty" => Method::EmbeddingNovelty,
    "none" => Method::None,
});
str_enum!(View, "intrinsic.input_view", { "partial" => View::Partial, "full" => View::Full });
str_enum!(Format, "intrinsic.input_format", { "encoded" => Format::Encoded, "rgb" => Format::Rgb });
str_enum!(ProviderKind, "intrinsic.provider", {
    "frozen_random" => ProviderKind::FrozenRandom,
    "remote_service" => ProviderKind::RemoteService,
});

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntrinsicConfig {
    pub method: Method,
    pub beta: f64,
    pub episodic_enabled: bool,
    pub input_view: View,
    pub input_format: Format,
    pub embed_dim: usize,
    pub provider: ProviderKind,
    pub provider_seed: u64,
    pub endpoint: String,
    pub ride_learning_rate: f64,
    /// Gradient steps the learned embedding takes per rollout, each on an
    /// equal share of the rollout's transitions.
    pub ride_minibatches: usize,
}

impl Default for IntrinsicConfig {
    fn default() -> Self {
        IntrinsicConfig {
            method: Method::Ride,
            beta: 0.05,
            episodic_enabled: true,
            input_view: View::Full,
            input_format: Format::Encoded,
            embed_dim: DEFAULT_EMBED_DIM,
            provider: ProviderKind::FrozenRandom,
            provider_seed: 0,
            endpoint: "http://127.0.0.1:8099".to_string(),
            ride_learning_rate: 1e-4,
            ride_minibatches: 1,
        }
    }
}

impl IntrinsicConfig {
    pub fn none() -> Self {
        IntrinsicConfig {
            method: Method::None,
            ..Default::default()
        }
    }

    pub fn ride(view: View, beta: f64, episodic: bool) -> Self {
        IntrinsicConfig {
            method: Method::Ride,
            beta,
            episodic_enabled: episodic,
            input_view: view,
            input_format: Format::Encoded,
            ..Default::default()
        }
    }

    pub fn embedding_novelty(view: View, beta: f64, episodic: bool) -> Self {
        IntrinsicConfig {
            method: Method::EmbeddingNovelty,
            beta,
            episodic_enabled: episodic,
            input_view: view,
            input_format: Format::Rgb,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.beta > 0.0) || !self.beta.is_finite() {
            return Err(Error::config("intrinsic.beta", "beta must be a positive number"));
        }
        match (self.method, self.input_format) {
            (Method::Ride, Format::Rgb) => Err(Error::config(
                "intrinsic.input_format",
                "the learned embedding works on encoded inputs",
            )),
            (Method::EmbeddingNovelty, Format::Encoded) => Err(Error::config(
                "intrinsic.input_format",
                "frozen image embeddings need rgb inputs",
            )),
            _ if self.embed_dim == 0 => Err(Error::config("intrinsic.embed_dim", "must be positive")),
            _ if self.ride_minibatches == 0 => Err(Error::config("intrinsic.ride_minibatches", "must be at least 1")),
            _ => Ok(()),
        }
    }
}

/// Configured intrinsic-reward machinery for one training run.
pub struct IntrinsicModule {
    pub config: IntrinsicConfig,
    pub ride: Option<RideNets>,
    provider: Option<Box<dyn EmbeddingProvider>>,
    tile_size: usize,
    cache: HashMap<EncodedTensor, Vec<f64>>,
}

impl IntrinsicModule {
    /// `full_dims` is the (width, height) of the environment grid; `seed`
    /// initializes learned networks.
    pub fn new(config: IntrinsicConfig, full_dims: (usize, usize), tile_size: usize, seed: u64) -> Result<Self> {
        config.validate()?;
        let mut ride = None;
        let mut provider: Option<Box<dyn EmbeddingProvider>> = None;
        match config.method {
            Method::Ride => {
                let dims = match config.input_view {
                    View::Full => full_dims,
                    View::Partial => (crate::gridworld::VIEW_SIZE, crate::gridworld::VIEW_SIZE),
                };
                ride = Some(RideNets::new(dims, config.embed_dim, config.ride_learning_rate, seed));
            }
            Method::EmbeddingNovelty => {
                provider = Some(match config.provider {
                    ProviderKind::FrozenRandom => Box::new(FrozenRandomProvider::new(config.embed_dim, config.provider_seed)?),
                    ProviderKind::RemoteService => {
                        let endpoint = remote::resolve_endpoint(&config.endpoint);
                        Box::new(RemoteProvider::connect(&endpoint, config.embed_dim)?)
                    }
                });
            }
            Method::None => {}
        }
        Ok(IntrinsicModule {
            config,
            ride,
            provider,
            tile_size,
            cache: HashMap::new(),
        })
    }

    /// Replaces the embedding provider (e.g. with a test double).
    pub fn with_provider(mut self, provider: Box<dyn EmbeddingProvider>) -> Self {
        self.provider = Some(provider);
        self.cache.clear();
        self
    }

    /// The configured view of a state in encoded form.
    pub fn view_of(&self, state: &GridState) -> EncodedTensor {
        match self.config.input_view {
            View::Full => encode_full(state),
            View::Partial => encode_partial(state),
        }
    }

    pub fn render(&self, tensor: &EncodedTensor) -> RgbImage {
        render_rgb(tensor, self.tile_size)
    }

    /// Embeddings of the configured view/format, one per state. Empty
    /// vectors when the method is `none`.
    pub fn embed_states(&mut self, states: &[&GridState]) -> Result<Vec<Vec<f64>>> {
        let views: Vec<EncodedTensor> = states.iter().map(|s| self.view_of(s)).collect();
        self.embed_views(&views)
    }

    pub fn embed_views(&mut self, views: &[EncodedTensor]) -> Result<Vec<Vec<f64>>> {
        match self.config.method {
            Method::None => Ok(vec![Vec::new(); views.len()]),
            Method::Ride => {
                let nets = self.ride.as_ref().expect("ride nets exist for method ride");
                let refs: Vec<&EncodedTensor> = views.iter().collect();
                nets.embed(&refs)
            }
            Method::EmbeddingNovelty => {
                let provider = self.provider.as_ref().expect("provider exists for embedding_novelty");
                let missing: Vec<usize> = (0..views.len()).filter(|&i| !self.cache.contains_key(&views[i])).collect();
                let mut fresh_views: Vec<&EncodedTensor> = Vec::new();
                for &i in &missing {
                    if !fresh_views.contains(&&views[i]) {
                        fresh_views.push(&views[i]);
                    }
                }
                if !fresh_views.is_empty() {
                    let images: Vec<RgbImage> = fresh_views.iter().map(|v| render_rgb(v, self.tile_size)).collect();
                    let vectors = provider.embed_batch(&images)?;
                    if self.cache.len() + vectors.len() > EMBED_CACHE_LIMIT {
                        self.cache.clear();
                    }
                    for (v, e) in fresh_views.into_iter().zip(vectors) {
                        self.cache.insert(v.clone(), e);
                    }
                }
                Ok(views.iter().map(|v| self.cache[v].clone()).collect())
            }
        }
    }

    /// Intrinsic reward for one transition given its successor's visit count.
    pub fn reward(&self, emb_t: &[f64], emb_next: &[f64], count: u32) -> Result<f64> {
        let divisor = episodic_divisor(count, self.config.episodic_enabled)?;
        match self.config.method {
            Method::None => Ok(0.0),
            Method::Ride => ride_reward(emb_t, emb_next, divisor),
            Method::EmbeddingNovelty => embedding_novelty_reward(emb_t, emb_next, divisor),
        }
    }

    pub fn combine(&self, extrinsic: f64, intrinsic: f64) -> f64 {
        match self.config.method {
            Method::None => extrinsic,
            _ => combine_reward(extrinsic, intrinsic, self.config.beta),
        }
    }

    /// One learned-embedding update on `batch`; `None` for frozen methods.
    pub fn update(&mut self, batch: &[Transition<'_>]) -> Result<Option<RideLosses>> {
        match self.ride.as_mut() {
            Some(nets) => nets.update(batch).map(Some),
            None => Ok(None),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gridworld::{reset, EnvConfig};

    #[test]
    fn method_format_pairing_is_enforced() {
        let mut cfg = IntrinsicConfig::ride(View::Full, 0.05, true);
        assert!(cfg.validate().is_ok());
        cfg.input_format = Format::Rgb;
        assert!(cfg.validate().is_err());
        let mut cfg = IntrinsicConfig::embedding_novelty(View::Partial, 0.005, true);
        assert!(cfg.validate().is_ok());
        cfg.input_format = Format::Encoded;
        assert!(cfg.validate().is_err());
        cfg = IntrinsicConfig::none();
        cfg.beta = 0.0;
        assert!(matches!(cfg.validate(), Err(Error::Config { ref field, .. }) if field == "intrinsic.beta"));
    }

    #[test]
    fn enums_parse_and_print() {
        for m in ["ride", "embedding_novelty", "none"] {
            assert_eq!(m.parse::<Method>().unwrap().to_string(), m);
        }
        assert!("curiosity".parse::<Method>().is_err());
        assert_eq!("full".parse::<View>().unwrap(), View::Full);
        assert_eq!("rgb".parse::<Format>().unwrap(), Format::Rgb);
    }

    #[test]
    fn beta_scales_the_intrinsic_term() {
        let cfg = IntrinsicConfig::ride(View::Full, 0.05, true);
        let m = IntrinsicModule::new(cfg, (7, 7), 8, 0).unwrap();
        assert!((m.combine(0.0, 2.0) - 0.1).abs() < 1e-15);
    }

    #[test]
    fn none_method_passes_extrinsic_through() {
        let m = IntrinsicModule::new(IntrinsicConfig::none(), (7, 7), 8, 0).unwrap();
        assert_eq!(m.combine(0.7, 123.0), 0.7);
        assert_eq!(m.reward(&[], &[], 3).unwrap(), 0.0);
    }

    #[test]
    fn frozen_embeddings_are_cached_consistently() {
        let env = EnvConfig::multi_room(2, 4);
        let s = reset(&env, 1).unwrap();
        let t = reset(&env, 2).unwrap();
        let mut cfg = IntrinsicConfig::embedding_novelty(View::Full, 0.005, true);
        cfg.embed_dim = 32;
        let mut m = IntrinsicModule::new(cfg, env.grid_dims(), 8, 0).unwrap();
        let a = m.embed_states(&[&s, &t, &s]).unwrap();
        assert_eq!(a[0], a[2]);
        assert_eq!(a[0].len(), 32);
        let b = m.embed_states(&[&t]).unwrap();
        assert_eq!(a[1], b[0]);
    }
}
