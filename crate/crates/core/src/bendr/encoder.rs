//! The convolutional encoder: six blocks of strided 1-D convolution,
//! group normalization, and GELU, mapping a C x n window to T' x d
//! convolved features.
//!
//! Each block shortens time by exactly `floor(L / stride)` (inputs are
//! zero-padded as needed), so the end-to-end length is the floor division
//! of n by the stride product.

use ndarray::{Array1, Array2, Array3, Axis, Ix1, Ix3};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nn::ops::{gelu, gelu_prime};
use crate::nn::{DiffBlock, ParamDyn, Parameter, Real};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConvBlockSpec {
    pub kernel: usize,
    pub stride: usize,
}

/// Encoder hyperparameters. The block count is fixed at six.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EncoderConfig {
    pub blocks: Vec<ConvBlockSpec>,
    pub feature_dim: usize,
    #[serde(default = "default_groups")]
    pub groups: usize,
}

fn default_groups() -> usize {
    8
}

impl Default for EncoderConfig {
    fn default() -> Self {
        let strides = [3usize, 2, 2, 2, 2, 2];
        EncoderConfig {
            blocks: strides
                .iter()
                .map(|&stride| ConvBlockSpec { kernel: 3, stride })
                .collect(),
            feature_dim: 64,
            groups: 8,
        }
    }
}

impl EncoderConfig {
    pub fn validate(&self) -> Result<()> {
        if self.blocks.len() != 6 {
            return Err(Error::config(format!(
                "encoder must have exactly 6 blocks, got {}",
                self.blocks.len()
            )));
        }
        for (i, b) in self.blocks.iter().enumerate() {
            if b.kernel == 0 || b.stride == 0 {
                return Err(Error::config(format!(
                    "block {i}: kernel and stride must be positive"
                )));
            }
        }
        if self.feature_dim < 8 {
            return Err(Error::config(format!(
                "feature_dim must be at least 8, got {}",
                self.feature_dim
            )));
        }
        if self.groups == 0 || self.feature_dim % self.groups != 0 {
            return Err(Error::config(format!(
                "groups ({}) must divide feature_dim ({})",
                self.groups, self.feature_dim
            )));
        }
        Ok(())
    }

    pub fn downsample_factor(&self) -> usize {
        self.blocks.iter().map(|b| b.stride).product()
    }

    /// Output length for an input of `n` samples.
    pub fn output_len(&self, n: usize) -> Result<usize> {
        let factor = self.downsample_factor();
        if n < factor {
            return Err(Error::validation(format!(
                "input length {n} is below the encoder minimum {factor}"
            )));
        }
        Ok(self
            .blocks
            .iter()
            .fold(n, |len, b| len / b.stride))
    }
}

/// Padding for a strided convolution whose output length is exactly
/// `floor(len / stride)`.
fn pad_amounts(len: usize, kernel: usize, stride: usize) -> (usize, usize, usize) {
    let out = len / stride;
    let needed = (out.saturating_sub(1)) * stride + kernel;
    let pad_total = needed.saturating_sub(len);
    let pad_left = pad_total / 2;
    (out, pad_left, pad_total - pad_left)
}

/// One encoder block: conv -> group norm -> GELU.
#[derive(Debug, Clone)]
pub struct ConvBlock<F: Real> {
    name: String,
    stride: usize,
    kernel: usize,
    groups: usize,
    pub weight: Parameter<F, Ix3>, // (c_out, c_in, kernel)
    pub bias: Parameter<F, Ix1>,
    pub gn_gamma: Parameter<F, Ix1>,
    pub gn_beta: Parameter<F, Ix1>,
    cache: Option<BlockCache<F>>,
}

#[derive(Debug, Clone)]
struct BlockCache<F> {
    input_len: usize,
    pad_left: usize,
    patches: Array2<F>, // (l_out, c_in * kernel)
    normed: Array2<F>,  // group-normalized, pre-scale
    inv_std: Vec<F>,    // per group
    pre_act: Array2<F>, // gn output, pre-GELU
}

impl<F: Real> ConvBlock<F> {
    pub fn new(
        name: impl Into<String>,
        rng: &mut ChaCha8Rng,
        c_in: usize,
        c_out: usize,
        kernel: usize,
        stride: usize,
        groups: usize,
    ) -> Result<Self> {
        if c_out % groups != 0 {
            return Err(Error::config(format!(
                "groups ({groups}) must divide output channels ({c_out})"
            )));
        }
        let name = name.into();
        let fan_in = c_in * kernel;
        let bound = (1.0 / fan_in as f64).sqrt();
        let weight = Parameter::new(
            format!("{name}.w"),
            Array3::from_shape_simple_fn((c_out, c_in, kernel), || {
                F::from_f64(rng.random::<f64>() * 2.0 * bound - bound)
            }),
        );
        let bias = Parameter::new(format!("{name}.b"), Array1::zeros(c_out));
        let gn_gamma = Parameter::new(format!("{name}.gn_gamma"), Array1::ones(c_out));
        let gn_beta = Parameter::new(format!("{name}.gn_beta"), Array1::zeros(c_out));
        Ok(ConvBlock {
            name,
            stride,
            kernel,
            groups,
            weight,
            bias,
            gn_gamma,
            gn_beta,
            cache: None,
        })
    }

    fn c_in(&self) -> usize {
        self.weight.value.dim().1
    }

    fn c_out(&self) -> usize {
        self.weight.value.dim().0
    }

    pub fn output_len(&self, len: usize) -> usize {
        len / self.stride
    }
}

const GN_EPS: f64 = 1e-5;

impl<F: Real> DiffBlock<F> for ConvBlock<F> {
    fn name(&self) -> &str {
        &self.name
    }

    fn forward(&mut self, input: &Array2<F>) -> Array2<F> {
        let (c_in, len) = input.dim();
        assert_eq!(c_in, self.c_in(), "conv input channels");
        let (l_out, pad_left, _pad_right) = pad_amounts(len, self.kernel, self.stride);
        assert!(l_out > 0, "input too short for block {}", self.name);
        let c_out = self.c_out();

        // im2col: one row per output position.
        let kc = c_in * self.kernel;
        let mut patches = Array2::<F>::zeros((l_out, kc));
        for t in 0..l_out {
            let start = (t * self.stride) as isize - pad_left as isize;
            for c in 0..c_in {
                for q in 0..self.kernel {
                    let src = start + q as isize;
                    if src >= 0 && (src as usize) < len {
                        patches[[t, c * self.kernel + q]] = input[[c, src as usize]];
                    }
                }
            }
        }
        let w2 = self
            .weight
            .value
            .view()
            .into_shape_with_order((c_out, kc))
            .expect("contiguous weight");
        // (l_out, c_out) -> transpose to channel-major.
        let conv = patches.dot(&w2.t());
        let mut z = conv.t().to_owned();
        for c in 0..c_out {
            let b = self.bias.value[c];
            z.row_mut(c).mapv_inplace(|v| v + b);
        }

        // Group norm over (channels-in-group x time), then scale/shift.
        let gsize = c_out / self.groups;
        let mut normed = Array2::<F>::zeros(z.raw_dim());
        let mut inv_std = Vec::with_capacity(self.groups);
        let count = F::from_f64((gsize * l_out) as f64);
        for g in 0..self.groups {
            let rows = g * gsize..(g + 1) * gsize;
            let mut mean = F::zero();
            for r in rows.clone() {
                for t in 0..l_out {
                    mean = mean + z[[r, t]];
                }
            }
            mean = mean / count;
            let mut var = F::zero();
            for r in rows.clone() {
                for t in 0..l_out {
                    let d = z[[r, t]] - mean;
                    var = var + d * d;
                }
            }
            var = var / count;
            let istd = F::one() / (var + F::from_f64(GN_EPS)).sqrt();
            inv_std.push(istd);
            for r in rows {
                for t in 0..l_out {
                    normed[[r, t]] = (z[[r, t]] - mean) * istd;
                }
            }
        }
        let mut pre_act = Array2::<F>::zeros(z.raw_dim());
        for c in 0..c_out {
            let (gamma, beta) = (self.gn_gamma.value[c], self.gn_beta.value[c]);
            for t in 0..l_out {
                pre_act[[c, t]] = gamma * normed[[c, t]] + beta;
            }
        }
        let out = pre_act.mapv(gelu);
        self.cache = Some(BlockCache {
            input_len: len,
            pad_left,
            patches,
            normed,
            inv_std,
            pre_act,
        });
        out
    }

    fn backward(&mut self, grad_out: &Array2<F>) -> Array2<F> {
        let cache = self.cache.take().expect("backward before forward");
        let (c_out, l_out) = grad_out.dim();
        let c_in = self.c_in();
        let gsize = c_out / self.groups;

        // GELU.
        let mut dy = grad_out.clone();
        dy.zip_mut_with(&cache.pre_act, |g, &p| *g = *g * gelu_prime(p));

        // Scale/shift + group norm.
        let mut dz = Array2::<F>::zeros((c_out, l_out));
        let count = F::from_f64((gsize * l_out) as f64);
        for g in 0..self.groups {
            let rows = g * gsize..(g + 1) * gsize;
            // d gamma / d beta and dxhat.
            let mut sum_dxhat = F::zero();
            let mut sum_dxhat_xhat = F::zero();
            for r in rows.clone() {
                let gamma = self.gn_gamma.value[r];
                for t in 0..l_out {
                    let d = dy[[r, t]];
                    let xhat = cache.normed[[r, t]];
                    self.gn_gamma.grad[r] = self.gn_gamma.grad[r] + d * xhat;
                    self.gn_beta.grad[r] = self.gn_beta.grad[r] + d;
                    let dxhat = d * gamma;
                    sum_dxhat = sum_dxhat + dxhat;
                    sum_dxhat_xhat = sum_dxhat_xhat + dxhat * xhat;
                }
            }
            let mean_dxhat = sum_dxhat / count;
            let mean_dxhat_xhat = sum_dxhat_xhat / count;
            let istd = cache.inv_std[g];
            for r in rows {
                let gamma = self.gn_gamma.value[r];
                for t in 0..l_out {
                    let dxhat = dy[[r, t]] * gamma;
                    let xhat = cache.normed[[r, t]];
                    dz[[r, t]] = istd * (dxhat - mean_dxhat - xhat * mean_dxhat_xhat);
                }
            }
        }

        // Bias.
        for c in 0..c_out {
            let mut acc = F::zero();
            for t in 0..l_out {
                acc = acc + dz[[c, t]];
            }
            self.bias.grad[c] = self.bias.grad[c] + acc;
        }

        // Convolution: dW via patches, dX via col2im.
        let kc = c_in * self.kernel;
        let dconv = dz.t().to_owned(); // (l_out, c_out)
        let dw2 = dconv.t().dot(&cache.patches); // (c_out, kc)
        {
            let mut wgrad = self
                .weight
                .grad
                .view_mut()
                .into_shape_with_order((c_out, kc))
                .expect("contiguous weight grad");
            wgrad += &dw2;
        }
        let w2 = self
            .weight
            .value
            .view()
            .into_shape_with_order((c_out, kc))
            .expect("contiguous weight");
        let dpatches = dconv.dot(&w2); // (l_out, kc)
        let mut dx = Array2::<F>::zeros((c_in, cache.input_len));
        for t in 0..l_out {
            let start = (t * self.stride) as isize - cache.pad_left as isize;
            for c in 0..c_in {
                for q in 0..self.kernel {
                    let src = start + q as isize;
                    if src >= 0 && (src as usize) < cache.input_len {
                        dx[[c, src as usize]] =
                            dx[[c, src as usize]] + dpatches[[t, c * self.kernel + q]];
                    }
                }
            }
        }
        dx
    }

    fn params(&mut self) -> Vec<&mut dyn ParamDyn<F>> {
        vec![
            &mut self.weight,
            &mut self.bias,
            &mut self.gn_gamma,
            &mut self.gn_beta,
        ]
    }
}

/// The six-block encoder; output is time-major (T' x d).
#[derive(Debug, Clone)]
pub struct Encoder<F: Real> {
    name: String,
    pub blocks: Vec<ConvBlock<F>>,
    factor: usize,
}

impl<F: Real> Encoder<F> {
    pub fn new(rng: &mut ChaCha8Rng, cfg: &EncoderConfig, input_channels: usize) -> Result<Self> {
        cfg.validate()?;
        let d = cfg.feature_dim;
        let mut blocks = Vec::with_capacity(cfg.blocks.len());
        for (i, spec) in cfg.blocks.iter().enumerate() {
            let c_in = if i == 0 { input_channels } else { d };
            blocks.push(ConvBlock::new(
                format!("encoder.block{i}"),
                rng,
                c_in,
                d,
                spec.kernel,
                spec.stride,
                cfg.groups,
            )?);
        }
        Ok(Encoder {
            name: "encoder".to_string(),
            blocks,
            factor: cfg.downsample_factor(),
        })
    }

    pub fn downsample_factor(&self) -> usize {
        self.factor
    }

    pub fn check_input_len(&self, n: usize) -> Result<()> {
        if n < self.factor {
            return Err(Error::validation(format!(
                "input length {n} is below the encoder minimum {}",
                self.factor
            )));
        }
        Ok(())
    }
}

impl<F: Real> DiffBlock<F> for Encoder<F> {
    fn name(&self) -> &str {
        &self.name
    }

    /// (C, n) in, (T', d) out.
    fn forward(&mut self, input: &Array2<F>) -> Array2<F> {
        self.check_input_len(input.ncols()).expect("encoder input length");
        let mut h = input.clone();
        for block in &mut self.blocks {
            h = block.forward(&h);
        }
        h.t().to_owned()
    }

    fn backward(&mut self, grad_out: &Array2<F>) -> Array2<F> {
        let mut g = grad_out.t().to_owned();
        for block in self.blocks.iter_mut().rev() {
            g = block.backward(&g);
        }
        g
    }

    fn params(&mut self) -> Vec<&mut dyn ParamDyn<F>> {
        self.blocks.iter_mut().flat_map(|b| b.params()).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::{grad_check, Seeds, StreamKind};

    fn rng(seed: u64) -> ChaCha8Rng {
        Seeds::new(seed).stream(StreamKind::Init)
    }

    fn toy_config() -> EncoderConfig {
        EncoderConfig {
            blocks: vec![
                ConvBlockSpec { kernel: 3, stride: 2 },
                ConvBlockSpec { kernel: 3, stride: 2 },
                ConvBlockSpec { kernel: 3, stride: 1 },
                ConvBlockSpec { kernel: 3, stride: 1 },
                ConvBlockSpec { kernel: 3, stride: 1 },
                ConvBlockSpec { kernel: 3, stride: 1 },
            ],
            feature_dim: 8,
            groups: 2,
        }
    }

    #[test]
    fn zero_input_zero_biases_propagates_zeros() {
        let cfg = toy_config();
        let mut enc = Encoder::<f64>::new(&mut rng(1), &cfg, 3).unwrap();
        let x = Array2::<f64>::zeros((3, 32));
        let out = enc.forward(&x);
        assert_eq!(out.dim(), (8, 8));
        for &v in out.iter() {
            assert_eq!(v, 0.0);
        }
    }

    #[test]
    fn output_length_is_floor_division_by_stride_product() {
        let cfg = EncoderConfig::default();
        assert_eq!(cfg.downsample_factor(), 96);
        assert_eq!(cfg.output_len(15360).unwrap(), 160);
        assert_eq!(cfg.output_len(96).unwrap(), 1);
        assert_eq!(cfg.output_len(100).unwrap(), 1);
        assert!(cfg.output_len(95).is_err());

        // The realized encoder agrees with the arithmetic.
        let mut enc = Encoder::<f32>::new(&mut rng(2), &cfg, 19).unwrap();
        let x = Array2::<f32>::ones((19, 960));
        let out = enc.forward(&x);
        assert_eq!(out.dim(), (10, 64));
    }

    #[test]
    fn single_block_matches_hand_computation() {
        // One block, 3-tap kernel, stride 2, length-6 signal: the conv
        // stage is hand-computed per window, then group norm (one group,
        // gamma 1, beta 0) and GELU are applied to the expected values.
        let mut block = ConvBlock::<f64>::new("b", &mut rng(3), 1, 2, 3, 2, 1).unwrap();
        let x = ndarray::array![[1.0, 2.0, -1.0, 0.5, 3.0, -2.0]];
        let w = block.weight.value.clone();
        let b = block.bias.value.clone();
        // Stride-2 windows with one zero pad on the right.
        let windows = [[1.0, 2.0, -1.0], [-1.0, 0.5, 3.0], [3.0, -2.0, 0.0]];
        let mut expect = Array2::<f64>::zeros((2, 3));
        for c in 0..2 {
            for (t, win) in windows.iter().enumerate() {
                let mut acc = b[c];
                for q in 0..3 {
                    acc += w[[c, 0, q]] * win[q];
                }
                expect[[c, t]] = acc;
            }
        }
        let out = block.forward(&x);
        let n = 6.0;
        let mean = expect.iter().sum::<f64>() / n;
        let var = expect.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
        let istd = 1.0 / (var + 1e-5).sqrt();
        for c in 0..2 {
            for t in 0..3 {
                let e = crate::nn::ops::gelu((expect[[c, t]] - mean) * istd);
                assert!((out[[c, t]] - e).abs() < 1e-6, "({c},{t})");
            }
        }
    }

    #[test]
    fn encoder_passes_grad_check() {
        let cfg = toy_config();
        let mut enc = Encoder::<f64>::new(&mut rng(40), &cfg, 2).unwrap();
        let mut r = rng(41);
        use rand::Rng;
        let x = Array2::from_shape_simple_fn((2, 16), || r.random::<f64>() * 2.0 - 1.0);
        let report = grad_check(&mut enc, &x, 1e-5, 1e-4).unwrap();
        assert!(report.pass, "max rel err {}", report.max_rel_err);
    }

    #[test]
    fn each_block_passes_grad_check() {
        for (i, (cin, cout, k, s, g)) in
            [(3usize, 4usize, 3usize, 2usize, 2usize), (4, 4, 3, 1, 4), (4, 8, 2, 2, 2)]
                .into_iter()
                .enumerate()
        {
            let mut block = ConvBlock::<f64>::new(format!("b{i}"), &mut rng(50 + i as u64), cin, cout, k, s, g)
                .unwrap();
            let mut r = rng(60 + i as u64);
            use rand::Rng;
            let x = Array2::from_shape_simple_fn((cin, 11), || r.random::<f64>() * 2.0 - 1.0);
            let report = grad_check(&mut block, &x, 1e-5, 1e-4).unwrap();
            assert!(report.pass, "block {i}: max rel err {}", report.max_rel_err);
        }
    }
}
