//! Shared-trunk actor-critic over the encoded 7x7 egocentric view.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::gridworld::{EncodedTensor, NUM_ACTIONS, VIEW_SIZE};
use crate::nn::{elu, elu_backward, push_tensor_input, ConvTrunk, ConvTrunkCache, Linear, Module, Param};

pub const HIDDEN: usize = 256;
/// Values per scaled input row.
pub const INPUT_LEN: usize = 3 * VIEW_SIZE * VIEW_SIZE;

#[derive(Debug, Clone, PartialEq)]
pub struct ActorCriticNet {
    pub trunk: ConvTrunk,
    pub fc: Linear,
    pub actor: Linear,
    pub critic: Linear,
}

/// Activations kept for the backward pass.
pub struct NetCache {
    batch: usize,
    trunk: ConvTrunkCache,
    features: Vec<f64>,
    hidden: Vec<f64>,
}

impl ActorCriticNet {
    pub fn new(seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let trunk = ConvTrunk::new("policy", 3, &mut rng);
        let feat = trunk.feature_len(VIEW_SIZE, VIEW_SIZE);
        ActorCriticNet {
            fc: Linear::new("policy.fc", feat, HIDDEN, 1.0, &mut rng),
            // Small actor init keeps the initial policy close to uniform.
            actor: Linear::new("policy.actor", HIDDEN, NUM_ACTIONS, 0.01, &mut rng),
            critic: Linear::new("policy.critic", HIDDEN, 1, 1.0, &mut rng),
            trunk,
        }
    }

    /// Forward pass on already scaled inputs (`batch * INPUT_LEN` values).
    /// Returns flat logits `[batch, 7]` and values `[batch]`.
    pub fn forward(&self, inputs: &[f64], batch: usize) -> (Vec<f64>, Vec<f64>, NetCache) {
        debug_assert_eq!(inputs.len(), batch * INPUT_LEN);
        let (features, trunk) = self.trunk.forward(inputs, batch, VIEW_SIZE, VIEW_SIZE);
        let mut hidden = self.fc.forward(&features, batch);
        hidden.iter_mut().for_each(|v| *v = elu(*v));
        let logits = self.actor.forward(&hidden, batch);
        let values = self.critic.forward(&hidden, batch);
        (
            logits,
            values,
            NetCache {
                batch,
                trunk,
                features,
                hidden,
            },
        )
    }

    /// Accumulates parameter gradients given dL/dlogits and dL/dvalues.
    pub fn backward(&mut self, cache: &NetCache, dlogits: &[f64], dvalues: &[f64]) {
        let mut dh = self.actor.backward(&cache.hidden, dlogits, cache.batch);
        let dh_critic = self.critic.backward(&cache.hidden, dvalues, cache.batch);
        for ((g, gc), h) in dh.iter_mut().zip(&dh_critic).zip(&cache.hidden) {
            *g = (*g + gc) * elu_backward(*h);
        }
        let dfeat = self.fc.backward(&cache.features, &dh, cache.batch);
        self.trunk.backward(&cache.trunk, &dfeat);
    }
}

impl Module for ActorCriticNet {
    fn params(&self) -> Vec<&Param> {
        let mut v = self.trunk.params();
        v.extend(self.fc.params());
        v.extend(self.actor.params());
        v.extend(self.critic.params());
        v
    }

    fn params_mut(&mut self) -> Vec<&mut Param> {
        let mut v = self.trunk.params_mut();
        v.extend(self.fc.params_mut());
        v.extend(self.actor.params_mut());
        v.extend(self.critic.params_mut());
        v
    }
}

/// Scales a batch of 7x7 observations into network input.
pub fn scale_observations(obs: &[&EncodedTensor]) -> Result<Vec<f64>> {
    let mut input = Vec::with_capacity(obs.len() * INPUT_LEN);
    for o in obs {
        if (o.width, o.height) != (VIEW_SIZE, VIEW_SIZE) {
            return Err(Error::usage(format!(
                "policy expects {VIEW_SIZE}x{VIEW_SIZE} observations, got {}x{}",
                o.width, o.height
            )));
        }
        push_tensor_input(o, &mut input);
    }
    Ok(input)
}

/// Logits `(batch, 7)` and values `(batch,)` for a batch of encoded
/// partial observations.
pub fn policy_forward(net: &ActorCriticNet, obs: &[&EncodedTensor]) -> Result<(Vec<[f64; NUM_ACTIONS]>, Vec<f64>)> {
    if obs.is_empty() {
        return Err(Error::usage("policy_forward needs at least one observation"));
    }
    let input = scale_observations(obs)?;
    let (logits, values, _) = net.forward(&input, obs.len());
    let rows = logits
        .chunks_exact(NUM_ACTIONS)
        .map(|c| c.try_into().expect("chunk of NUM_ACTIONS"))
        .collect();
    Ok((rows, values))
}
