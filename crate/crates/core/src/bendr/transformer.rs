//! Transformer reconstruction stage: learned mask vector and positional
//! embeddings, then pre-norm encoder layers (multi-head self-attention
//! and a GELU FFN, residual connections).

use ndarray::{Array1, Array2, Ix1, Ix2};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nn::ops::{gelu, gelu_prime, init_uniform, init_uniform_vec, softmax_rows_inplace};
use crate::nn::{Affine, DiffBlock, ParamDyn, Parameter, Real};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TransformerConfig {
    pub layers: usize,
    pub heads: usize,
    pub ffn_dim: usize,
    #[serde(default = "default_dropout")]
    pub dropout: f64,
}

fn default_dropout() -> f64 {
    0.1
}

impl Default for TransformerConfig {
    fn default() -> Self {
        TransformerConfig {
            layers: 2,
            heads: 4,
            ffn_dim: 256,
            dropout: 0.1,
        }
    }
}

impl TransformerConfig {
    pub fn validate(&self, model_dim: usize) -> Result<()> {
        if self.layers > 0 && self.heads == 0 {
            return Err(Error::config("transformer heads must be at least 1"));
        }
        if self.layers > 0 && model_dim % self.heads != 0 {
            return Err(Error::config(format!(
                "model dim {model_dim} must be divisible by heads {}",
                self.heads
            )));
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return Err(Error::config(format!(
                "dropout must be in [0, 1), got {}",
                self.dropout
            )));
        }
        if self.layers > 0 && self.ffn_dim == 0 {
            return Err(Error::config("ffn_dim must be positive"));
        }
        Ok(())
    }
}

/// Replace masked positions with a learned vector and add learned
/// positional embeddings. With no mask set, only the positions are added.
#[derive(Debug, Clone)]
pub struct MaskEmbed<F: Real> {
    name: String,
    pub mask_vec: Parameter<F, Ix1>,
    pub pos: Parameter<F, Ix2>,
    current_mask: Option<Vec<bool>>,
}

impl<F: Real> MaskEmbed<F> {
    pub fn new(rng: &mut ChaCha8Rng, t_prime: usize, d: usize) -> Self {
        MaskEmbed {
            name: "embed".to_string(),
            mask_vec: Parameter::new("embed.mask_vec", init_uniform_vec(rng, d, d)),
            pos: Parameter::new("embed.pos", init_uniform(rng, t_prime, d, d)),
            current_mask: None,
        }
    }

    pub fn t_prime(&self) -> usize {
        self.pos.value.nrows()
    }

    /// Set (or clear) the mask applied by the next forward/backward pair.
    pub fn set_mask(&mut self, mask: Option<&[bool]>) {
        self.current_mask = mask.map(|m| m.to_vec());
    }
}

impl<F: Real> DiffBlock<F> for MaskEmbed<F> {
    fn name(&self) -> &str {
        &self.name
    }

    fn forward(&mut self, input: &Array2<F>) -> Array2<F> {
        assert_eq!(input.nrows(), self.t_prime(), "positional table length");
        let mut out = input.clone();
        if let Some(mask) = &self.current_mask {
            assert_eq!(mask.len(), input.nrows(), "mask length");
            for (t, &m) in mask.iter().enumerate() {
                if m {
                    out.row_mut(t).assign(&self.mask_vec.value);
                }
            }
        }
        out + &self.pos.value
    }

    fn backward(&mut self, grad_out: &Array2<F>) -> Array2<F> {
        self.pos.grad = &self.pos.grad + grad_out;
        let mut grad_in = grad_out.clone();
        if let Some(mask) = &self.current_mask {
            for (t, &m) in mask.iter().enumerate() {
                if m {
                    self.mask_vec.grad = &self.mask_vec.grad + &grad_out.row(t);
                    grad_in.row_mut(t).fill(F::zero());
                }
            }
        }
        grad_in
    }

    fn params(&mut self) -> Vec<&mut dyn ParamDyn<F>> {
        vec![&mut self.mask_vec, &mut self.pos]
    }
}

/// Per-position layer normalization with learned scale and shift.
#[derive(Debug, Clone)]
pub struct LayerNorm<F: Real> {
    name: String,
    pub gamma: Parameter<F, Ix1>,
    pub beta: Parameter<F, Ix1>,
    cache: Option<(Array2<F>, Vec<F>)>, // normalized rows, inv std per row
}

const LN_EPS: f64 = 1e-5;

impl<F: Real> LayerNorm<F> {
    pub fn new(name: impl Into<String>, d: usize) -> Self {
        let name = name.into();
        LayerNorm {
            gamma: Parameter::new(format!("{name}.gamma"), Array1::ones(d)),
            beta: Parameter::new(format!("{name}.beta"), Array1::zeros(d)),
            name,
            cache: None,
        }
    }
}

impl<F: Real> DiffBlock<F> for LayerNorm<F> {
    fn name(&self) -> &str {
        &self.name
    }

    fn forward(&mut self, input: &Array2<F>) -> Array2<F> {
        let d = input.ncols();
        let count = F::from_f64(d as f64);
        let mut normed = Array2::<F>::zeros(input.raw_dim());
        let mut inv_std = Vec::with_capacity(input.nrows());
        for (r, row) in input.rows().into_iter().enumerate() {
            let mean = row.sum() / count;
            let mut var = F::zero();
            for &v in row.iter() {
                let e = v - mean;
                var = var + e * e;
            }
            var = var / count;
            let istd = F::one() / (var + F::from_f64(LN_EPS)).sqrt();
            inv_std.push(istd);
            for (c, &v) in row.iter().enumerate() {
                normed[[r, c]] = (v - mean) * istd;
            }
        }
        let mut out = Array2::<F>::zeros(input.raw_dim());
        for r in 0..input.nrows() {
            for c in 0..d {
                out[[r, c]] = self.gamma.value[c] * normed[[r, c]] + self.beta.value[c];
            }
        }
        self.cache = Some((normed, inv_std));
        out
    }

    fn backward(&mut self, grad_out: &Array2<F>) -> Array2<F> {
        let (normed, inv_std) = self.cache.take().expect("backward before forward");
        let (rows, d) = grad_out.dim();
        let count = F::from_f64(d as f64);
        let mut grad_in = Array2::<F>::zeros(grad_out.raw_dim());
        for r in 0..rows {
            let mut sum_dxhat = F::zero();
            let mut sum_dxhat_xhat = F::zero();
            for c in 0..d {
                let g = grad_out[[r, c]];
                let xhat = normed[[r, c]];
                self.gamma.grad[c] = self.gamma.grad[c] + g * xhat;
                self.beta.grad[c] = self.beta.grad[c] + g;
                let dxhat = g * self.gamma.value[c];
                sum_dxhat = sum_dxhat + dxhat;
                sum_dxhat_xhat = sum_dxhat_xhat + dxhat * xhat;
            }
            let mean_dxhat = sum_dxhat / count;
            let mean_dxhat_xhat = sum_dxhat_xhat / count;
            for c in 0..d {
                let dxhat = grad_out[[r, c]] * self.gamma.value[c];
                grad_in[[r, c]] =
                    inv_std[r] * (dxhat - mean_dxhat - normed[[r, c]] * mean_dxhat_xhat);
            }
        }
        grad_in
    }

    fn params(&mut self) -> Vec<&mut dyn ParamDyn<F>> {
        vec![&mut self.gamma, &mut self.beta]
    }
}

/// Inverted dropout over a whole activation map.
#[derive(Debug, Clone)]
struct Dropout<F: Real> {
    p: f64,
    rng: ChaCha8Rng,
    training: bool,
    mask: Option<Array2<F>>,
}

impl<F: Real> Dropout<F> {
    fn new(p: f64, rng: ChaCha8Rng) -> Self {
        Dropout {
            p,
            rng,
            training: false,
            mask: None,
        }
    }

    fn forward(&mut self, input: Array2<F>) -> Array2<F> {
        if !self.training || self.p == 0.0 {
            self.mask = None;
            return input;
        }
        let keep = 1.0 - self.p;
        let scale = F::from_f64(1.0 / keep);
        let mask = Array2::from_shape_simple_fn(input.raw_dim(), || {
            if self.rng.random::<f64>() < keep {
                scale
            } else {
                F::zero()
            }
        });
        let out = &input * &mask;
        self.mask = Some(mask);
        out
    }

    fn backward(&self, grad_out: &Array2<F>) -> Array2<F> {
        match &self.mask {
            Some(mask) => grad_out * mask,
            None => grad_out.clone(),
        }
    }
}

/// One pre-norm encoder layer.
#[derive(Debug, Clone)]
pub struct TransformerBlock<F: Real> {
    name: String,
    heads: usize,
    ln1: LayerNorm<F>,
    wq: Affine<F>,
    wk: Affine<F>,
    wv: Affine<F>,
    wo: Affine<F>,
    ln2: LayerNorm<F>,
    w1: Affine<F>,
    w2: Affine<F>,
    drop_attn: Dropout<F>,
    drop_ffn: Dropout<F>,
    cache: Option<BlockCache<F>>,
}

#[derive(Debug, Clone)]
struct BlockCache<F> {
    q: Array2<F>,
    k: Array2<F>,
    v: Array2<F>,
    attn_rows: Vec<Array2<F>>, // per head
    ffn_pre: Array2<F>,
}

impl<F: Real> TransformerBlock<F> {
    pub fn new(
        name: impl Into<String>,
        rng: &mut ChaCha8Rng,
        d: usize,
        heads: usize,
        ffn_dim: usize,
        dropout: f64,
        dropout_rng: ChaCha8Rng,
    ) -> Result<Self> {
        if heads == 0 || d % heads != 0 {
            return Err(Error::config(format!(
                "model dim {d} must be divisible by heads {heads}"
            )));
        }
        let name = name.into();
        let mut drop_rng_ffn = dropout_rng.clone();
        drop_rng_ffn.set_stream(dropout_rng.get_stream() ^ (1 << 63));
        Ok(TransformerBlock {
            ln1: LayerNorm::new(format!("{name}.ln1"), d),
            wq: Affine::new(format!("{name}.wq"), rng, d, d),
            wk: Affine::new(format!("{name}.wk"), rng, d, d),
            wv: Affine::new(format!("{name}.wv"), rng, d, d),
            wo: Affine::new(format!("{name}.wo"), rng, d, d),
            ln2: LayerNorm::new(format!("{name}.ln2"), d),
            w1: Affine::new(format!("{name}.ffn1"), rng, d, ffn_dim),
            w2: Affine::new(format!("{name}.ffn2"), rng, ffn_dim, d),
            drop_attn: Dropout::new(dropout, dropout_rng),
            drop_ffn: Dropout::new(dropout, drop_rng_ffn),
            heads,
            name,
            cache: None,
        })
    }

    /// Attention rows of the last forward, per head. Test hook.
    pub fn last_attention(&self) -> Option<&[Array2<F>]> {
        self.cache.as_ref().map(|c| c.attn_rows.as_slice())
    }
}

impl<F: Real> DiffBlock<F> for TransformerBlock<F> {
    fn name(&self) -> &str {
        &self.name
    }

    fn forward(&mut self, input: &Array2<F>) -> Array2<F> {
        let (t, d) = input.dim();
        let dh = d / self.heads;
        let scale = F::from_f64(1.0 / (dh as f64).sqrt());

        let y1 = self.ln1.forward(input);
        let q = self.wq.forward(&y1);
        let k = self.wk.forward(&y1);
        let v = self.wv.forward(&y1);

        let mut attn_out = Array2::<F>::zeros((t, d));
        let mut attn_rows = Vec::with_capacity(self.heads);
        for h in 0..self.heads {
            let cols = h * dh..(h + 1) * dh;
            let qh = q.slice(ndarray::s![.., cols.clone()]);
            let kh = k.slice(ndarray::s![.., cols.clone()]);
            let vh = v.slice(ndarray::s![.., cols.clone()]);
            let mut scores = qh.dot(&kh.t());
            scores.mapv_inplace(|s| s * scale);
            softmax_rows_inplace(&mut scores);
            let oh = scores.dot(&vh);
            attn_out.slice_mut(ndarray::s![.., cols]).assign(&oh);
            attn_rows.push(scores);
        }
        let a = self.wo.forward(&attn_out);
        let a = self.drop_attn.forward(a);
        let x2 = input + &a;

        let y2 = self.ln2.forward(&x2);
        let ffn_pre = self.w1.forward(&y2);
        let g1 = ffn_pre.mapv(gelu);
        let f2 = self.w2.forward(&g1);
        let f2 = self.drop_ffn.forward(f2);
        let out = &x2 + &f2;

        self.cache = Some(BlockCache {
            q,
            k,
            v,
            attn_rows,
            ffn_pre,
        });
        out
    }

    fn backward(&mut self, grad_out: &Array2<F>) -> Array2<F> {
        let cache = self.cache.take().expect("backward before forward");
        let (t, d) = grad_out.dim();
        let dh = d / self.heads;
        let scale = F::from_f64(1.0 / (dh as f64).sqrt());

        // FFN branch.
        let df2 = self.drop_ffn.backward(grad_out);
        let dg1 = self.w2.backward(&df2);
        let mut df1 = dg1;
        df1.zip_mut_with(&cache.ffn_pre, |g, &p| *g = *g * gelu_prime(p));
        let dy2 = self.w1.backward(&df1);
        let dx2 = grad_out + &self.ln2.backward(&dy2);

        // Attention branch.
        let da = self.drop_attn.backward(&dx2);
        let dattn = self.wo.backward(&da);
        let mut dq = Array2::<F>::zeros((t, d));
        let mut dk = Array2::<F>::zeros((t, d));
        let mut dv = Array2::<F>::zeros((t, d));
        for h in 0..self.heads {
            let cols = h * dh..(h + 1) * dh;
            let doh = dattn.slice(ndarray::s![.., cols.clone()]);
            let qh = cache.q.slice(ndarray::s![.., cols.clone()]);
            let kh = cache.k.slice(ndarray::s![.., cols.clone()]);
            let vh = cache.v.slice(ndarray::s![.., cols.clone()]);
            let p = &cache.attn_rows[h];

            let dp = doh.dot(&vh.t());
            dv.slice_mut(ndarray::s![.., cols.clone()])
                .assign(&p.t().dot(&doh));
            // Softmax rows backward.
            let mut ds = Array2::<F>::zeros((t, t));
            for i in 0..t {
                let mut dot = F::zero();
                for j in 0..t {
                    dot = dot + p[[i, j]] * dp[[i, j]];
                }
                for j in 0..t {
                    ds[[i, j]] = p[[i, j]] * (dp[[i, j]] - dot) * scale;
                }
            }
            dq.slice_mut(ndarray::s![.., cols.clone()])
                .assign(&ds.dot(&kh));
            dk.slice_mut(ndarray::s![.., cols]).assign(&ds.t().dot(&qh));
        }
        let dy1 = self.wq.backward(&dq) + self.wk.backward(&dk) + self.wv.backward(&dv);
        &dx2 + &self.ln1.backward(&dy1)
    }

    fn params(&mut self) -> Vec<&mut dyn ParamDyn<F>> {
        let mut p: Vec<&mut dyn ParamDyn<F>> = Vec::new();
        p.extend(self.ln1.params());
        p.extend(self.wq.params());
        p.extend(self.wk.params());
        p.extend(self.wv.params());
        p.extend(self.wo.params());
        p.extend(self.ln2.params());
        p.extend(self.w1.params());
        p.extend(self.w2.params());
        p
    }

    fn set_training(&mut self, on: bool) {
        self.drop_attn.training = on;
        self.drop_ffn.training = on;
    }
}

/// A stack of pre-norm layers; zero layers is the identity.
#[derive(Debug, Clone)]
pub struct Transformer<F: Real> {
    name: String,
    pub blocks: Vec<TransformerBlock<F>>,
}

impl<F: Real> Transformer<F> {
    pub fn new(
        rng: &mut ChaCha8Rng,
        cfg: &TransformerConfig,
        d: usize,
        dropout_seed: u64,
    ) -> Result<Self> {
        cfg.validate(d)?;
        let mut blocks = Vec::with_capacity(cfg.layers);
        for i in 0..cfg.layers {
            let mut drop_rng: ChaCha8Rng = rand::SeedableRng::seed_from_u64(dropout_seed);
            drop_rng.set_stream(crate::nn::StreamKind::Dropout as u64 + ((i as u64) << 8));
            blocks.push(TransformerBlock::new(
                format!("tx.b{i}"),
                rng,
                d,
                cfg.heads,
                cfg.ffn_dim,
                cfg.dropout,
                drop_rng,
            )?);
        }
        Ok(Transformer {
            name: "tx".to_string(),
            blocks,
        })
    }
}

impl<F: Real> DiffBlock<F> for Transformer<F> {
    fn name(&self) -> &str {
        &self.name
    }

    fn forward(&mut self, input: &Array2<F>) -> Array2<F> {
        let mut h = input.clone();
        for block in &mut self.blocks {
            h = block.forward(&h);
        }
        h
    }

    fn backward(&mut self, grad_out: &Array2<F>) -> Array2<F> {
        let mut g = grad_out.clone();
        for block in self.blocks.iter_mut().rev() {
            g = block.backward(&g);
        }
        g
    }

    fn params(&mut self) -> Vec<&mut dyn ParamDyn<F>> {
        self.blocks.iter_mut().flat_map(|b| b.params()).collect()
    }

    fn set_training(&mut self, on: bool) {
        for block in &mut self.blocks {
            block.set_training(on);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::{grad_check, Seeds, StreamKind};

    fn rng(seed: u64) -> ChaCha8Rng {
        Seeds::new(seed).stream(StreamKind::Init)
    }

    fn random_input(t: usize, d: usize, seed: u64) -> Array2<f64> {
        let mut r = rng(seed);
        Array2::from_shape_simple_fn((t, d), || r.random::<f64>() * 2.0 - 1.0)
    }

    fn no_dropout(layers: usize, heads: usize, ffn: usize) -> TransformerConfig {
        TransformerConfig {
            layers,
            heads,
            ffn_dim: ffn,
            dropout: 0.0,
        }
    }

    #[test]
    fn empty_stack_is_identity_after_embedding() {
        let mut embed = MaskEmbed::<f64>::new(&mut rng(1), 5, 4);
        let mut tx = Transformer::<f64>::new(&mut rng(2), &no_dropout(0, 1, 8), 4, 0).unwrap();
        let x = random_input(5, 4, 3);
        let mask = vec![false, true, false, false, true];
        embed.set_mask(Some(&mask));
        let h = embed.forward(&x);
        let out = tx.forward(&h);
        assert_eq!(out, h);
        // Masked rows are the mask vector plus position embedding.
        for (t, &m) in mask.iter().enumerate() {
            for c in 0..4 {
                let base = if m { embed.mask_vec.value[c] } else { x[[t, c]] };
                assert_eq!(h[[t, c]], base + embed.pos.value[[t, c]]);
            }
        }
    }

    #[test]
    fn attention_rows_sum_to_one() {
        let mut tx = Transformer::<f64>::new(&mut rng(4), &no_dropout(2, 2, 16), 8, 0).unwrap();
        let x = random_input(6, 8, 5);
        let _ = tx.forward(&x);
        for block in &tx.blocks {
            for head in block.last_attention().unwrap() {
                for row in head.rows() {
                    assert!((row.sum() - 1.0).abs() < 1e-6);
                }
            }
        }
    }

    #[test]
    fn single_layer_matches_scalar_recomputation() {
        // H = 1, d = 4, T' = 3: recompute QKV, softmax, aggregation, and
        // the FFN with explicit loops.
        let mut tx = Transformer::<f64>::new(&mut rng(6), &no_dropout(1, 1, 8), 4, 0).unwrap();
        let x = random_input(3, 4, 7);
        let out = tx.forward(&x);

        let b = &tx.blocks[0];
        let ln = |v: &mut [f64], gamma: &Array1<f64>, beta: &Array1<f64>| {
            let mean = v.iter().sum::<f64>() / v.len() as f64;
            let var = v.iter().map(|u| (u - mean).powi(2)).sum::<f64>() / v.len() as f64;
            let istd = 1.0 / (var + 1e-5).sqrt();
            for (c, u) in v.iter_mut().enumerate() {
                *u = gamma[c] * (*u - mean) * istd + beta[c];
            }
        };
        let affine = |row: &[f64], w: &Array2<f64>, bias: &Array1<f64>| -> Vec<f64> {
            (0..w.ncols())
                .map(|j| bias[j] + (0..w.nrows()).map(|i| row[i] * w[[i, j]]).sum::<f64>())
                .collect()
        };

        let mut y1: Vec<Vec<f64>> = Vec::new();
        for t in 0..3 {
            let mut row: Vec<f64> = x.row(t).to_vec();
            ln(&mut row, &b.ln1.gamma.value, &b.ln1.beta.value);
            y1.push(row);
        }
        let q: Vec<Vec<f64>> = y1.iter().map(|r| affine(r, &b.wq.w.value, &b.wq.b.value)).collect();
        let k: Vec<Vec<f64>> = y1.iter().map(|r| affine(r, &b.wk.w.value, &b.wk.b.value)).collect();
        let v: Vec<Vec<f64>> = y1.iter().map(|r| affine(r, &b.wv.w.value, &b.wv.b.value)).collect();
        let scale = 1.0 / 2.0; // sqrt(4)
        let mut x2 = Array2::<f64>::zeros((3, 4));
        for i in 0..3 {
            let logits: Vec<f64> = (0..3)
                .map(|j| (0..4).map(|c| q[i][c] * k[j][c]).sum::<f64>() * scale)
                .collect();
            let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let exps: Vec<f64> = logits.iter().map(|l| (l - max).exp()).collect();
            let z: f64 = exps.iter().sum();
            let mut attn = vec![0.0; 4];
            for j in 0..3 {
                for c in 0..4 {
                    attn[c] += exps[j] / z * v[j][c];
                }
            }
            let a = affine(&attn, &b.wo.w.value, &b.wo.b.value);
            for c in 0..4 {
                x2[[i, c]] = x[[i, c]] + a[c];
            }
        }
        let mut expect = Array2::<f64>::zeros((3, 4));
        for i in 0..3 {
            let mut row: Vec<f64> = x2.row(i).to_vec();
            ln(&mut row, &b.ln2.gamma.value, &b.ln2.beta.value);
            let f1 = affine(&row, &b.w1.w.value, &b.w1.b.value);
            let g1: Vec<f64> = f1.iter().map(|&u| crate::nn::ops::gelu(u)).collect();
            let f2 = affine(&g1, &b.w2.w.value, &b.w2.b.value);
            for c in 0..4 {
                expect[[i, c]] = x2[[i, c]] + f2[c];
            }
        }
        for (a, e) in out.iter().zip(expect.iter()) {
            assert!((a - e).abs() < 1e-5, "{a} vs {e}");
        }
    }

    #[test]
    fn transformer_block_passes_grad_check() {
        let mut tx = Transformer::<f64>::new(&mut rng(8), &no_dropout(1, 2, 12), 8, 0).unwrap();
        let x = random_input(4, 8, 9);
        let report = grad_check(&mut tx, &x, 1e-5, 1e-4).unwrap();
        assert!(report.pass, "max rel err {}", report.max_rel_err);
    }

    #[test]
    fn mask_embed_passes_grad_check() {
        let mut embed = MaskEmbed::<f64>::new(&mut rng(10), 5, 6);
        embed.set_mask(Some(&[true, false, false, true, false]));
        let x = random_input(5, 6, 11);
        let report = grad_check(&mut embed, &x, 1e-5, 1e-6).unwrap();
        assert!(report.pass, "max rel err {}", report.max_rel_err);
    }

    #[test]
    fn layer_norm_passes_grad_check() {
        let mut ln = LayerNorm::<f64>::new("ln", 7);
        let x = random_input(4, 7, 12);
        let report = grad_check(&mut ln, &x, 1e-5, 1e-4).unwrap();
        assert!(report.pass, "max rel err {}", report.max_rel_err);
    }

    #[test]
    fn dropout_is_training_only_and_deterministic() {
        let cfg = TransformerConfig {
            layers: 1,
            heads: 1,
            ffn_dim: 8,
            dropout: 0.5,
        };
        let x = random_input(4, 4, 13);
        let mut tx1 = Transformer::<f64>::new(&mut rng(14), &cfg, 4, 99).unwrap();
        let eval_out = tx1.forward(&x);
        tx1.set_training(true);
        let train_out = tx1.forward(&x);
        assert_ne!(eval_out, train_out, "dropout must act in training mode");

        let mut tx2 = Transformer::<f64>::new(&mut rng(14), &cfg, 4, 99).unwrap();
        let eval_out2 = tx2.forward(&x);
        tx2.set_training(true);
        let train_out2 = tx2.forward(&x);
        assert_eq!(eval_out, eval_out2);
        assert_eq!(train_out, train_out2, "dropout stream is deterministic");
    }
}
