//! Learned embedding for the impact-driven reward, trained with forward and
//! inverse dynamics losses.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::gridworld::{EncodedTensor, NUM_ACTIONS};
use crate::nn::{clip_grad_norm, log_softmax, push_tensor_input, relu, relu_backward, Adam, ConvTrunk, ConvTrunkCache, Linear, Module, Param};

pub const DEFAULT_EMBED_DIM: usize = 128;
const HIDDEN: usize = 256;
const MAX_GRAD_NORM: f64 = 40.0;

/// One training transition.
#[derive(Debug, Clone, Copy)]
pub struct Transition<'a> {
    pub obs: &'a EncodedTensor,
    pub action: usize,
    pub next_obs: &'a EncodedTensor,
}

/// Two-layer MLP with a ReLU hidden layer.
#[derive(Debug, Clone, PartialEq)]
pub struct Mlp {
    pub hidden: Linear,
    pub out: Linear,
}

struct MlpCache {
    input: Vec<f64>,
    hidden: Vec<f64>,
}

impl Mlp {
    fn new(name: &str, input: usize, output: usize, rng: &mut ChaCha8Rng) -> Self {
        Mlp {
            hidden: Linear::new(&format!("{name}.hidden"), input, HIDDEN, 1.0, rng),
            out: Linear::new(&format!("{name}.out"), HIDDEN, output, 1.0, rng),
        }
    }

    fn forward(&self, input: Vec<f64>, batch: usize) -> (Vec<f64>, MlpCache) {
        let mut hidden = self.hidden.forward(&input, batch);
        hidden.iter_mut().for_each(|v| *v = relu(*v));
        let out = self.out.forward(&hidden, batch);
        (out, MlpCache { input, hidden })
    }

    fn backward(&mut self, cache: &MlpCache, dout: &[f64], batch: usize) -> Vec<f64> {
        let mut dh = self.out.backward(&cache.hidden, dout, batch);
        for (g, h) in dh.iter_mut().zip(&cache.hidden) {
            *g *= relu_backward(*h);
        }
        self.hidden.backward(&cache.input, &dh, batch)
    }
}

impl Module for Mlp {
    fn params(&self) -> Vec<&Param> {
        let mut v = self.hidden.params();
        v.extend(self.out.params());
        v
    }

    fn params_mut(&mut self) -> Vec<&mut Param> {
        let mut v = self.hidden.params_mut();
        v.extend(self.out.params_mut());
        v
    }
}

/// Embedder (conv trunk + linear head), forward model and inverse model.
#[derive(Debug, Clone)]
pub struct RideNets {
    pub dim: usize,
    pub input_dims: (usize, usize),
    pub trunk: ConvTrunk,
    pub head: Linear,
    pub forward_model: Mlp,
    pub inverse_model: Mlp,
    optimizer: Adam,
}

struct EmbedCache {
    trunk: ConvTrunkCache,
    features: Vec<f64>,
}

/// Batch-mean losses of one update.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RideLosses {
    pub forward: f64,
    pub inverse: f64,
}

impl RideNets {
    /// `input_dims` is (width, height) of the encoded view fed to the
    /// embedder.
    pub fn new(input_dims: (usize, usize), dim: usize, learning_rate: f64, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let trunk = ConvTrunk::new("ride.embed", 3, &mut rng);
        let feat = trunk.feature_len(input_dims.1, input_dims.0);
        RideNets {
            dim,
            input_dims,
            head: Linear::new("ride.embed.head", feat, dim, 1.0, &mut rng),
            trunk,
            forward_model: Mlp::new("ride.forward", dim + NUM_ACTIONS, dim, &mut rng),
            inverse_model: Mlp::new("ride.inverse", 2 * dim, NUM_ACTIONS, &mut rng),
            optimizer: Adam::new(learning_rate),
        }
    }

    fn check_inputs<'a>(&self, obs: impl IntoIterator<Item = &'a EncodedTensor>) -> Result<()> {
        for o in obs {
            if (o.width, o.height) != self.input_dims {
                return Err(Error::usage(format!(
                    "embedder expects {}x{} inputs, got {}x{}",
                    self.input_dims.0, self.input_dims.1, o.width, o.height
                )));
            }
        }
        Ok(())
    }

    fn embed_with_cache(&self, obs: &[&EncodedTensor]) -> (Vec<f64>, EmbedCache) {
        let (w, h) = self.input_dims;
        let mut input = Vec::with_capacity(obs.len() * 3 * w * h);
        for o in obs {
            push_tensor_input(o, &mut input);
        }
        let (features, trunk) = self.trunk.forward(&input, obs.len(), h, w);
        let emb = self.head.forward(&features, obs.len());
        (emb, EmbedCache { trunk, features })
    }

    /// Embeddings of a batch, one `dim`-vector per observation.
    pub fn embed(&self, obs: &[&EncodedTensor]) -> Result<Vec<Vec<f64>>> {
        self.check_inputs(obs.iter().copied())?;
        if obs.is_empty() {
            return Ok(Vec::new());
        }
        let (emb, _) = self.embed_with_cache(obs);
        Ok(emb.chunks(self.dim).map(|c| c.to_vec()).collect())
    }

    /// Zeroes gradients, then accumulates the gradients of
    /// `forward_loss + inverse_loss` on `batch`. The forward model sees both
    /// embeddings as constants, so the embedder is trained only through the
    /// inverse model.
    pub fn accumulate_gradients(&mut self, batch: &[Transition<'_>]) -> Result<RideLosses> {
        if batch.is_empty() {
            return Err(Error::usage("ride_update needs a non-empty batch"));
        }
        self.check_inputs(batch.iter().flat_map(|t| [t.obs, t.next_obs]))?;
        if let Some(t) = batch.iter().find(|t| t.action >= NUM_ACTIONS) {
            return Err(Error::usage(format!("action {} out of range", t.action)));
        }
        self.zero_grad();
        let n = batch.len();
        let d = self.dim;
        let nf = n as f64;

        // Current and next observations go through the embedder as one batch.
        let all: Vec<&EncodedTensor> = batch.iter().map(|t| t.obs).chain(batch.iter().map(|t| t.next_obs)).collect();
        let (emb, cache) = self.embed_with_cache(&all);
        let (emb_t, emb_next) = emb.split_at(n * d);

        // Forward dynamics on detached embeddings.
        let mut fwd_in = Vec::with_capacity(n * (d + NUM_ACTIONS));
        for (i, t) in batch.iter().enumerate() {
            fwd_in.extend_from_slice(&emb_t[i * d..(i + 1) * d]);
            let mut onehot = [0.0; NUM_ACTIONS];
            onehot[t.action] = 1.0;
            fwd_in.extend_from_slice(&onehot);
        }
        let (pred, fwd_cache) = self.forward_model.forward(fwd_in, n);
        let mut forward_loss = 0.0;
        let mut dpred = vec![0.0; n * d];
        for i in 0..n * d {
            let diff = pred[i] - emb_next[i];
            forward_loss += diff * diff;
            dpred[i] = 2.0 * diff / nf;
        }
        forward_loss /= nf;
        self.forward_model.backward(&fwd_cache, &dpred, n);

        // Inverse dynamics, gradients flow into the embedder.
        let mut inv_in = Vec::with_capacity(n * 2 * d);
        for i in 0..n {
            inv_in.extend_from_slice(&emb_t[i * d..(i + 1) * d]);
            inv_in.extend_from_slice(&emb_next[i * d..(i + 1) * d]);
        }
        let (logits, inv_cache) = self.inverse_model.forward(inv_in, n);
        let mut inverse_loss = 0.0;
        let mut dlogits = vec![0.0; n * NUM_ACTIONS];
        for (i, t) in batch.iter().enumerate() {
            let row = &logits[i * NUM_ACTIONS..(i + 1) * NUM_ACTIONS];
            let lp = log_softmax(row);
            inverse_loss -= lp[t.action];
            for a in 0..NUM_ACTIONS {
                let target = if a == t.action { 1.0 } else { 0.0 };
                dlogits[i * NUM_ACTIONS + a] = (lp[a].exp() - target) / nf;
            }
        }
        inverse_loss /= nf;
        let dinv_in = self.inverse_model.backward(&inv_cache, &dlogits, n);

        let mut demb = vec![0.0; 2 * n * d];
        for i in 0..n {
            demb[i * d..(i + 1) * d].copy_from_slice(&dinv_in[i * 2 * d..i * 2 * d + d]);
            demb[(n + i) * d..(n + i + 1) * d].copy_from_slice(&dinv_in[i * 2 * d + d..(i + 1) * 2 * d]);
        }
        let dfeat = self.head.backward(&cache.features, &demb, 2 * n);
        self.trunk.backward(&cache.trunk, &dfeat);

        if !forward_loss.is_finite() || !inverse_loss.is_finite() {
            return Err(Error::numeric(format!(
                "RIDE losses not finite (forward {forward_loss}, inverse {inverse_loss})"
            )));
        }
        Ok(RideLosses {
            forward: forward_loss,
            inverse: inverse_loss,
        })
    }

    /// One optimizer step on `batch`; returns the losses before the step.
    pub fn update(&mut self, batch: &[Transition<'_>]) -> Result<RideLosses> {
        let losses = self.accumulate_gradients(batch)?;
        let mut params = self.params_mut();
        clip_grad_norm(&mut params, MAX_GRAD_NORM);
        let mut opt = std::mem::replace(&mut self.optimizer, Adam::new(0.0));
        opt.step(&mut self.params_mut());
        self.optimizer = opt;
        Ok(losses)
    }
}

impl Module for RideNets {
    fn params(&self) -> Vec<&Param> {
        let mut v = self.trunk.params();
        v.extend(self.head.params());
        v.extend(self.forward_model.params());
        v.extend(self.inverse_model.params());
        v
    }

    fn params_mut(&mut self) -> Vec<&mut Param> {
        let mut v = self.trunk.params_mut();
        v.extend(self.head.params_mut());
        v.extend(self.forward_model.params_mut());
        v.extend(self.inverse_model.params_mut());
        v
    }
}
