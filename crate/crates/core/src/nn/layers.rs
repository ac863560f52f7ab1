use rand::Rng;

use super::{gemm, Module, Param};

pub fn elu(x: f64) -> f64 {
    if x > 0.0 {
        x
    } else {
        x.exp_m1()
    }
}

/// Derivative of ELU expressed through its output.
#[inline]
pub fn elu_backward(y: f64) -> f64 {
    if y > 0.0 {
        1.0
    } else {
        y + 1.0
    }
}

pub fn relu(x: f64) -> f64 {
    x.max(0.0)
}

#[inline]
pub fn relu_backward(y: f64) -> f64 {
    if y > 0.0 {
        1.0
    } else {
        0.0
    }
}

/// Fully connected layer, weights stored `[out, in]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Linear {
    pub input: usize,
    pub output: usize,
    pub weight: Param,
    pub bias: Param,
}

impl Linear {
    /// PyTorch-style uniform init, optionally scaled (small heads).
    pub fn new(name: &str, input: usize, output: usize, scale: f64, rng: &mut impl Rng) -> Self {
        let bound = scale / (input as f64).sqrt();
        Linear {
            input,
            output,
            weight: Param::uniform(format!("{name}.weight"), &[output, input], bound, rng),
            bias: Param::zeros(format!("{name}.bias"), &[output]),
        }
    }

    pub fn forward(&self, x: &[f64], batch: usize) -> Vec<f64> {
        let mut out = vec![0.0; batch * self.output];
        gemm(batch, self.input, self.output, x, false, &self.weight.value, true, 0.0, &mut out);
        add_bias(&mut out, &self.bias.value);
        out
    }

    /// Accumulates parameter gradients and returns dL/dx.
    pub fn backward(&mut self, x: &[f64], dout: &[f64], batch: usize) -> Vec<f64> {
        gemm(self.output, batch, self.input, dout, true, x, false, 1.0, &mut self.weight.grad);
        sum_rows(dout, &mut self.bias.grad);
        let mut dx = vec![0.0; batch * self.input];
        gemm(batch, self.output, self.input, dout, false, &self.weight.value, false, 0.0, &mut dx);
        dx
    }
}

fn add_bias(out: &mut [f64], bias: &[f64]) {
    for row in out.chunks_exact_mut(bias.len()) {
        for (v, b) in row.iter_mut().zip(bias) {
            *v += b;
        }
    }
}

fn sum_rows(m: &[f64], acc: &mut [f64]) {
    for row in m.chunks_exact(acc.len()) {
        for (a, v) in acc.iter_mut().zip(row) {
            *a += v;
        }
    }
}

impl Module for Linear {
    fn params(&self) -> Vec<&Param> {
        vec![&self.weight, &self.bias]
    }

    fn params_mut(&mut self) -> Vec<&mut Param> {
        vec![&mut self.weight, &mut self.bias]
    }
}

const KERNEL: usize = 3;

/// 3x3 convolution over channels-last `[batch, height, width, channels]`
/// input, computed as one matrix product over unfolded patches.
#[derive(Debug, Clone, PartialEq)]
pub struct Conv2d {
    pub in_channels: usize,
    pub out_channels: usize,
    pub stride: usize,
    pub padding: usize,
    /// `[out, 3, 3, in]`
    pub weight: Param,
    pub bias: Param,
}

impl Conv2d {
    pub fn new(name: &str, in_channels: usize, out_channels: usize, stride: usize, padding: usize, rng: &mut impl Rng) -> Self {
        let fan_in = in_channels * KERNEL * KERNEL;
        let bound = 1.0 / (fan_in as f64).sqrt();
        Conv2d {
            in_channels,
            out_channels,
            stride,
            padding,
            weight: Param::uniform(format!("{name}.weight"), &[out_channels, KERNEL, KERNEL, in_channels], bound, rng),
            bias: Param::uniform(format!("{name}.bias"), &[out_channels], bound, rng),
        }
    }

    pub fn out_dims(&self, h: usize, w: usize) -> (usize, usize) {
        let f = |n: usize| (n + 2 * self.padding - KERNEL) / self.stride + 1;
        (f(h), f(w))
    }

    fn patch_len(&self) -> usize {
        self.in_channels * KERNEL * KERNEL
    }

    /// Calls `f(patch_offset, input_offset)` for every in-bounds kernel tap,
    /// each covering `in_channels` contiguous values.
    fn for_each_tap(&self, batch: usize, h: usize, w: usize, mut f: impl FnMut(usize, usize)) {
        let (oh, ow) = self.out_dims(h, w);
        let c = self.in_channels;
        let k = self.patch_len();
        for b in 0..batch {
            for oy in 0..oh {
                for ox in 0..ow {
                    let row = ((b * oh + oy) * ow + ox) * k;
                    for ky in 0..KERNEL {
                        let iy = (oy * self.stride + ky) as i64 - self.padding as i64;
                        if iy < 0 || iy as usize >= h {
                            continue;
                        }
                        for kx in 0..KERNEL {
                            let ix = (ox * self.stride + kx) as i64 - self.padding as i64;
                            if ix < 0 || ix as usize >= w {
                                continue;
                            }
                            f(row + (ky * KERNEL + kx) * c, ((b * h + iy as usize) * w + ix as usize) * c);
                        }
                    }
                }
            }
        }
    }

    /// Returns `(output [batch, oh, ow, out], unfolded patches)`.
    pub fn forward(&self, x: &[f64], batch: usize, h: usize, w: usize) -> (Vec<f64>, Vec<f64>) {
        debug_assert_eq!(x.len(), batch * h * w * self.in_channels);
        let (oh, ow) = self.out_dims(h, w);
        let k = self.patch_len();
        let rows = batch * oh * ow;
        let c = self.in_channels;
        let mut cols = vec![0.0; rows * k];
        self.for_each_tap(batch, h, w, |dst, src| cols[dst..dst + c].copy_from_slice(&x[src..src + c]));
        let mut out = vec![0.0; rows * self.out_channels];
        gemm(rows, k, self.out_channels, &cols, false, &self.weight.value, true, 0.0, &mut out);
        add_bias(&mut out, &self.bias.value);
        (out, cols)
    }

    /// Accumulates gradients; returns dL/dx when `need_input_grad`.
    pub fn backward(&mut self, cols: &[f64], dout: &[f64], batch: usize, h: usize, w: usize, need_input_grad: bool) -> Option<Vec<f64>> {
        let (oh, ow) = self.out_dims(h, w);
        let k = self.patch_len();
        let rows = batch * oh * ow;
        let o = self.out_channels;
        gemm(o, rows, k, dout, true, cols, false, 1.0, &mut self.weight.grad);
        sum_rows(dout, &mut self.bias.grad);
        if !need_input_grad {
            return None;
        }
        let mut dcols = vec![0.0; rows * k];
        gemm(rows, o, k, dout, false, &self.weight.value, false, 0.0, &mut dcols);
        let c = self.in_channels;
        let mut dx = vec![0.0; batch * h * w * c];
        self.for_each_tap(batch, h, w, |src, dst| {
            for (d, s) in dx[dst..dst + c].iter_mut().zip(&dcols[src..src + c]) {
                *d += s;
            }
        });
        Some(dx)
    }
}

impl Module for Conv2d {
    fn params(&self) -> Vec<&Param> {
        vec![&self.weight, &self.bias]
    }

    fn params_mut(&mut self) -> Vec<&mut Param> {
        vec![&mut self.weight, &mut self.bias]
    }
}

/// Three stride-2 3x3 convolutions with 32 filters each and ELU after every
/// layer.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvTrunk {
    pub layers: [Conv2d; 3],
    pub in_channels: usize,
}

/// Intermediate values of one trunk forward pass.
#[derive(Debug, Clone)]
pub struct ConvTrunkCache {
    batch: usize,
    dims: [(usize, usize); 3],
    cols: [Vec<f64>; 3],
    acts: [Vec<f64>; 3],
}

impl ConvTrunk {
    pub const FILTERS: usize = 32;

    pub fn new(name: &str, in_channels: usize, rng: &mut impl Rng) -> Self {
        let f = Self::FILTERS;
        ConvTrunk {
            layers: [
                Conv2d::new(&format!("{name}.conv1"), in_channels, f, 2, 1, rng),
                Conv2d::new(&format!("{name}.conv2"), f, f, 2, 1, rng),
                Conv2d::new(&format!("{name}.conv3"), f, f, 2, 1, rng),
            ],
            in_channels,
        }
    }

    /// Flattened feature length for an `h x w` input.
    pub fn feature_len(&self, h: usize, w: usize) -> usize {
        let mut d = (h, w);
        for l in &self.layers {
            d = l.out_dims(d.0, d.1);
        }
        Self::FILTERS * d.0 * d.1
    }

    pub fn forward(&self, x: &[f64], batch: usize, h: usize, w: usize) -> (Vec<f64>, ConvTrunkCache) {
        let mut dims = [(0, 0); 3];
        let mut cols: [Vec<f64>; 3] = Default::default();
        let mut acts: [Vec<f64>; 3] = Default::default();
        let mut cur = (h, w);
        for (i, layer) in self.layers.iter().enumerate() {
            dims[i] = cur;
            let input = if i == 0 { x } else { &acts[i - 1] };
            let (mut out, c) = layer.forward(input, batch, cur.0, cur.1);
            out.iter_mut().for_each(|v| *v = elu(*v));
            cols[i] = c;
            acts[i] = out;
            cur = layer.out_dims(cur.0, cur.1);
        }
        let features = acts[2].clone();
        (features, ConvTrunkCache { batch, dims, cols, acts })
    }

    /// Backpropagates dL/dfeatures; input gradients are not needed.
    pub fn backward(&mut self, cache: &ConvTrunkCache, dfeatures: &[f64]) {
        let mut grad = dfeatures.to_vec();
        for i in (0..3).rev() {
            for (g, y) in grad.iter_mut().zip(&cache.acts[i]) {
                *g *= elu_backward(*y);
            }
            let (h, w) = cache.dims[i];
            match self.layers[i].backward(&cache.cols[i], &grad, cache.batch, h, w, i > 0) {
                Some(dx) => grad = dx,
                None => break,
            }
        }
    }
}

impl Module for ConvTrunk {
    fn params(&self) -> Vec<&Param> {
        self.layers.iter().flat_map(|l| l.params()).collect()
    }

    fn params_mut(&mut self) -> Vec<&mut Param> {
        self.layers.iter_mut().flat_map(|l| l.params_mut()).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::dot;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn rng() -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(5)
    }

    #[test]
    fn conv_output_dims() {
        let c = Conv2d::new("c", 3, 32, 2, 1, &mut rng());
        assert_eq!(c.out_dims(7, 7), (4, 4));
        assert_eq!(c.out_dims(4, 4), (2, 2));
        assert_eq!(c.out_dims(2, 2), (1, 1));
        assert_eq!(c.out_dims(16, 16), (8, 8));
        let t = ConvTrunk::new("t", 3, &mut rng());
        assert_eq!(t.feature_len(7, 7), 32);
        assert_eq!(t.feature_len(16, 16), 32 * 4);
    }

    #[test]
    fn conv_matches_direct_convolution() {
        let mut r = rng();
        let c = Conv2d::new("c", 2, 3, 2, 1, &mut r);
        let (h, w) = (5, 4);
        let x: Vec<f64> = (0..2 * h * w).map(|_| r.random_range(-1.0..1.0)).collect();
        let (out, _) = c.forward(&x, 1, h, w);
        let (oh, ow) = c.out_dims(h, w);
        for o in 0..3 {
            for oy in 0..oh {
                for ox in 0..ow {
                    let mut acc = c.bias.value[o];
                    for ch in 0..2 {
                        for ky in 0..3 {
                            for kx in 0..3 {
                                let iy = (oy * 2 + ky) as i64 - 1;
                                let ix = (ox * 2 + kx) as i64 - 1;
                                if iy >= 0 && ix >= 0 && (iy as usize) < h && (ix as usize) < w {
                                    acc += c.weight.value[((o * 3 + ky) * 3 + kx) * 2 + ch] * x[(iy as usize * w + ix as usize) * 2 + ch];
                                }
                            }
                        }
                    }
                    assert!((out[(oy * ow + ox) * 3 + o] - acc).abs() < 1e-12);
                }
            }
        }
    }

    /// Central differences on sum(out * probe) for conv input and weights.
    #[test]
    fn conv_backward_matches_finite_differences() {
        let mut r = rng();
        let mut c = Conv2d::new("c", 2, 3, 2, 1, &mut r);
        let (h, w, batch) = (5, 5, 2);
        let x: Vec<f64> = (0..batch * 2 * h * w).map(|_| r.random_range(-1.0..1.0)).collect();
        let (out, cols) = c.forward(&x, batch, h, w);
        let probe: Vec<f64> = (0..out.len()).map(|_| r.random_range(-1.0..1.0)).collect();
        let loss = |c: &Conv2d, x: &[f64]| -> f64 {
            let (o, _) = c.forward(x, batch, h, w);
            dot(&o, &probe)
        };
        let dx = c.backward(&cols, &probe, batch, h, w, true).unwrap();
        let eps = 1e-6;
        for i in [0, 7, 19, 33, 49] {
            let mut xp = x.clone();
            xp[i] += eps;
            let mut xm = x.clone();
            xm[i] -= eps;
            let fd = (loss(&c, &xp) - loss(&c, &xm)) / (2.0 * eps);
            assert!((fd - dx[i]).abs() < 1e-7, "dx[{i}] {fd} vs {}", dx[i]);
        }
        for i in [0, 5, 17, 40, 53] {
            let mut cp = c.clone();
            cp.weight.value[i] += eps;
            let mut cm = c.clone();
            cm.weight.value[i] -= eps;
            let fd = (loss(&cp, &x) - loss(&cm, &x)) / (2.0 * eps);
            assert!((fd - c.weight.grad[i]).abs() < 1e-7);
        }
    }

    #[test]
    fn linear_backward_matches_finite_differences() {
        let mut r = rng();
        let mut l = Linear::new("l", 4, 3, 1.0, &mut r);
        let x: Vec<f64> = (0..8).map(|_| r.random_range(-1.0..1.0)).collect();
        let probe: Vec<f64> = (0..6).map(|_| r.random_range(-1.0..1.0)).collect();
        let dx = l.backward(&x, &probe, 2);
        let eps = 1e-6;
        for i in 0..8 {
            let mut xp = x.clone();
            xp[i] += eps;
            let mut xm = x.clone();
            xm[i] -= eps;
            let fd = (dot(&l.forward(&xp, 2), &probe) - dot(&l.forward(&xm, 2), &probe)) / (2.0 * eps);
            assert!((fd - dx[i]).abs() < 1e-8);
        }
    }
}
