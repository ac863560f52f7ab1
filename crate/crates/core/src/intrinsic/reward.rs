use crate::error::{Error, Result};

/// `sqrt(count)` when the episodic term is enabled, exactly 1 otherwise.
pub fn episodic_divisor(count: u32, enabled: bool) -> Result<f64> {
    if count < 1 {
        return Err(Error::usage("visitation count must be at least 1"));
    }
    Ok(if enabled { (count as f64).sqrt() } else { 1.0 })
}

/// Shared kernel: `||next - current||_2 / divisor`.
pub fn embedding_distance(current: &[f64], next: &[f64], divisor: f64) -> Result<f64> {
    if current.len() != next.len() {
        return Err(Error::usage(format!(
            "embedding dimensions differ: {} vs {}",
            current.len(),
            next.len()
        )));
    }
    if divisor < 1.0 || divisor.is_nan() {
        return Err(Error::usage(format!("episodic divisor must be >= 1, got {divisor}")));
    }
    // Scaled accumulation avoids overflow for large-magnitude embeddings.
    let scale = current
        .iter()
        .zip(next)
        .map(|(a, b)| (b - a).abs())
        .fold(0.0f64, f64::max);
    if scale == 0.0 {
        return Ok(0.0);
    }
    let sum: f64 = current
        .iter()
        .zip(next)
        .map(|(a, b)| {
            let d = (b - a) / scale;
            d * d
        })
        .sum();
    Ok(scale * sum.sqrt() / divisor)
}

/// Impact-driven reward on learned embeddings of consecutive states.
pub fn ride_reward(emb_t: &[f64], emb_next: &[f64], divisor: f64) -> Result<f64> {
    embedding_distance(emb_t, emb_next, divisor)
}

/// The same reward shape on frozen (pretrained or random) image embeddings.
pub fn embedding_novelty_reward(e_t: &[f64], e_next: &[f64], divisor: f64) -> Result<f64> {
    embedding_distance(e_t, e_next, divisor)
}

/// `r_e + beta * r_i`.
pub fn combine_reward(extrinsic: f64, intrinsic: f64, beta: f64) -> f64 {
    extrinsic + beta * intrinsic
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn divisor_examples() {
        assert_eq!(episodic_divisor(4, true).unwrap(), 2.0);
        assert_eq!(episodic_divisor(9, false).unwrap(), 1.0);
        assert_eq!(episodic_divisor(1, true).unwrap(), 1.0);
        assert!(matches!(episodic_divisor(0, true), Err(Error::Usage(_))));
    }

    #[test]
    fn ride_examples() {
        assert_eq!(ride_reward(&[0.0, 0.0], &[3.0, 4.0], 1.0).unwrap(), 5.0);
        assert_eq!(ride_reward(&[0.0, 0.0], &[3.0, 4.0], 2.0).unwrap(), 2.5);
        assert_eq!(ride_reward(&[1.5, -2.0], &[1.5, -2.0], 3.0).unwrap(), 0.0);
        assert!(matches!(ride_reward(&[0.0], &[0.0, 1.0], 1.0), Err(Error::Usage(_))));
        assert!(matches!(ride_reward(&[0.0], &[1.0], 0.5), Err(Error::Usage(_))));
    }

    #[test]
    fn novelty_examples() {
        let r = embedding_novelty_reward(&[1.0, 0.0, 0.0], &[0.0, 1.0, 0.0], 1.0).unwrap();
        assert!((r - 2f64.sqrt()).abs() < 1e-15);
        assert_eq!(embedding_novelty_reward(&[0.2; 4], &[0.2; 4], 1.0).unwrap(), 0.0);
    }

    #[test]
    fn combine_examples() {
        assert!((combine_reward(0.91, 2.0, 0.005) - 0.92).abs() < 1e-12);
        assert_eq!(combine_reward(0.0, 3.0, 0.05), 0.15000000000000002);
    }

    fn vec_pair() -> impl Strategy<Value = (Vec<f64>, Vec<f64>)> {
        (1usize..32).prop_flat_map(|n| {
            (
                prop::collection::vec(-100.0f64..100.0, n),
                prop::collection::vec(-100.0f64..100.0, n),
            )
        })
    }

    proptest! {
        #[test]
        fn both_rewards_agree((a, b) in vec_pair(), div in 1.0f64..10.0) {
            prop_assert_eq!(ride_reward(&a, &b, div).unwrap(), embedding_novelty_reward(&a, &b, div).unwrap());
        }

        #[test]
        fn reward_scales_with_embeddings((a, b) in vec_pair(), k in -10.0f64..10.0, div in 1.0f64..10.0) {
            let base = ride_reward(&a, &b, div).unwrap();
            let ka: Vec<f64> = a.iter().map(|x| k * x).collect();
            let kb: Vec<f64> = b.iter().map(|x| k * x).collect();
            let scaled = ride_reward(&ka, &kb, div).unwrap();
            prop_assert!((scaled - k.abs() * base).abs() <= 1e-9 * (1.0 + scaled.abs()));
        }

        #[test]
        fn doubling_divisor_halves((a, b) in vec_pair(), div in 1.0f64..10.0) {
            let r1 = embedding_novelty_reward(&a, &b, div).unwrap();
            let r2 = embedding_novelty_reward(&a, &b, 2.0 * div).unwrap();
            prop_assert!((r1 - 2.0 * r2).abs() <= 1e-12 * (1.0 + r1));
            prop_assert!(r2 >= 0.0);
        }
    }
}
