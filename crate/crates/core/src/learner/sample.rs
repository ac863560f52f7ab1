use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::Rng;

use crate::error::{Error, Result};
use crate::nn::log_softmax;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ActionSample {
    pub action: usize,
    pub log_prob: f64,
    pub entropy: f64,
}

/// Entropy of the categorical distribution given by `log_probs`.
pub fn entropy(log_probs: &[f64]) -> f64 {
    -log_probs.iter().map(|lp| lp.exp() * lp).sum::<f64>()
}

/// Draws from `softmax(logits)`.
pub fn sample_action(logits: &[f64], rng: &mut impl Rng) -> Result<ActionSample> {
    if logits.is_empty() || logits.iter().any(|l| !l.is_finite()) {
        return Err(Error::numeric(format!("non-finite policy logits {logits:?}")));
    }
    let lp = log_softmax(logits);
    let probs: Vec<f64> = lp.iter().map(|l| l.exp()).collect();
    let dist = WeightedIndex::new(&probs).map_err(|e| Error::numeric(format!("bad action distribution: {e}")))?;
    let action = dist.sample(rng);
    Ok(ActionSample {
        action,
        log_prob: lp[action],
        entropy: entropy(&lp),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn uniform_logits_have_max_entropy() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let s = sample_action(&[0.3; 7], &mut rng).unwrap();
        assert!((s.entropy - 7f64.ln()).abs() < 1e-12);
        assert!((s.log_prob + 7f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn dominant_logit_is_almost_always_chosen() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut logits = [0.0; 7];
        logits[4] = 20.0;
        let hits = (0..10_000).filter(|_| sample_action(&logits, &mut rng).unwrap().action == 4).count();
        assert!(hits as f64 / 10_000.0 > 0.999);
        let p = (-log_softmax(&logits)[4]).exp();
        assert!(p > 0.999);
    }

    #[test]
    fn non_finite_logits_are_numeric_errors() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        for bad in [f64::NAN, f64::INFINITY, f64::NEG_INFINITY] {
            let mut logits = [0.0; 7];
            logits[2] = bad;
            assert!(matches!(sample_action(&logits, &mut rng), Err(Error::Numeric(_))));
        }
    }
}
