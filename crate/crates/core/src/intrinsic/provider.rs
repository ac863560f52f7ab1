//! Image embedding providers.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gridworld::RgbImage;
use crate::nn::gemm;

pub const FROZEN_INPUT_SIDE: usize = 56;
pub const DEFAULT_FROZEN_DIM: usize = 128;
const FROZEN_HIDDEN: usize = 128;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum EmbeddingProviderSpec {
    /// Learned embedder trained alongside the policy.
    RideLearned { dim: usize },
    /// Seeded random network, never trained.
    FrozenRandom { dim: usize, seed: u64 },
    /// HTTP embedding service; `dim` must match what the service advertises.
    RemoteService { dim: usize, endpoint: String },
}

impl EmbeddingProviderSpec {
    pub fn dim(&self) -> usize {
        match self {
            EmbeddingProviderSpec::RideLearned { dim }
            | EmbeddingProviderSpec::FrozenRandom { dim, .. }
            | EmbeddingProviderSpec::RemoteService { dim, .. } => *dim,
        }
    }
}

/// A frozen image-to-vector function. Implementations must be pure: the
/// same image always maps to the same vector for the provider's lifetime.
pub trait EmbeddingProvider: Send + Sync {
    fn dim(&self) -> usize;

    fn embed_batch(&self, images: &[RgbImage]) -> Result<Vec<Vec<f64>>>;

    fn embed(&self, image: &RgbImage) -> Result<Vec<f64>> {
        Ok(self.embed_batch(std::slice::from_ref(image))?.remove(0))
    }
}

/// Area-averaging resample of an RGB image to `side x side`, channels in
/// [0, 1], laid out row-major with interleaved channels.
pub fn area_downscale(image: &RgbImage, side: usize) -> Vec<f64> {
    let mut out = vec![0.0; side * side * 3];
    let sx = image.width as f64 / side as f64;
    let sy = image.height as f64 / side as f64;
    for oy in 0..side {
        let y0 = oy as f64 * sy;
        let y1 = y0 + sy;
        for ox in 0..side {
            let x0 = ox as f64 * sx;
            let x1 = x0 + sx;
            let mut acc = [0.0; 3];
            let mut area = 0.0;
            let mut py = y0.floor() as usize;
            while (py as f64) < y1 && py < image.height {
                let wy = (y1.min(py as f64 + 1.0) - y0.max(py as f64)).max(0.0);
                let mut px = x0.floor() as usize;
                while (px as f64) < x1 && px < image.width {
                    let wx = (x1.min(px as f64 + 1.0) - x0.max(px as f64)).max(0.0);
                    let w = wx * wy;
                    if w > 0.0 {
                        let p = image.pixel(px, py);
                        for c in 0..3 {
                            acc[c] += w * p[c] as f64;
                        }
                        area += w;
                    }
                    px += 1;
                }
                py += 1;
            }
            for c in 0..3 {
                out[(oy * side + ox) * 3 + c] = acc[c] / (area * 255.0);
            }
        }
    }
    out
}

/// Seeded two-layer random network over a 56x56 downscale, tanh hidden
/// units, unit-norm output.
#[derive(Debug, Clone)]
pub struct FrozenRandomProvider {
    dim: usize,
    w1: Vec<f64>,
    b1: Vec<f64>,
    w2: Vec<f64>,
}

impl FrozenRandomProvider {
    pub fn new(dim: usize, seed: u64) -> Result<Self> {
        if dim == 0 {
            return Err(Error::config("intrinsic.embed_dim", "embedding dimension must be positive"));
        }
        let input = FROZEN_INPUT_SIDE * FROZEN_INPUT_SIDE * 3;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        // Uniform(-a, a) with variance 1/fan_in.
        let a1 = (3.0 / input as f64).sqrt() * 4.0;
        let w1 = (0..FROZEN_HIDDEN * input).map(|_| rng.random_range(-a1..a1)).collect();
        let b1 = (0..FROZEN_HIDDEN).map(|_| rng.random_range(-0.5..0.5)).collect();
        let a2 = (3.0 / FROZEN_HIDDEN as f64).sqrt();
        let w2 = (0..dim * FROZEN_HIDDEN).map(|_| rng.random_range(-a2..a2)).collect();
        Ok(FrozenRandomProvider { dim, w1, b1, w2 })
    }

    fn embed_images(&self, images: &[RgbImage]) -> Vec<Vec<f64>> {
        let n = images.len();
        let input = FROZEN_INPUT_SIDE * FROZEN_INPUT_SIDE * 3;
        let mut x = Vec::with_capacity(n * input);
        for img in images {
            x.extend(area_downscale(img, FROZEN_INPUT_SIDE).into_iter().map(|v| v - 0.5));
        }
        let mut hidden = vec![0.0; n * FROZEN_HIDDEN];
        gemm(n, input, FROZEN_HIDDEN, &x, false, &self.w1, true, 0.0, &mut hidden);
        for row in hidden.chunks_exact_mut(FROZEN_HIDDEN) {
            for (h, b) in row.iter_mut().zip(&self.b1) {
                *h = (*h + b).tanh();
            }
        }
        let mut out = vec![0.0; n * self.dim];
        gemm(n, FROZEN_HIDDEN, self.dim, &hidden, false, &self.w2, true, 0.0, &mut out);
        out.chunks_exact(self.dim)
            .map(|row| {
                let mut v = row.to_vec();
                let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
                if norm > 0.0 {
                    v.iter_mut().for_each(|x| *x /= norm);
                } else {
                    v[0] = 1.0;
                }
                v
            })
            .collect()
    }
}

impl EmbeddingProvider for FrozenRandomProvider {
    fn dim(&self) -> usize {
        self.dim
    }

    fn embed_batch(&self, images: &[RgbImage]) -> Result<Vec<Vec<f64>>> {
        Ok(self.embed_images(images))
    }
}
