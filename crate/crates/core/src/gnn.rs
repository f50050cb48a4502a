//! Dense GCN, GAT, and GraphSAGE layers over the fully connected channel
//! graph, plus the two-layer stack inserted before the encoder.
//!
//! The channel count is tiny (19 for the shipped montage), so everything
//! is dense matrix algebra; node features are rows.

use ndarray::{Array1, Array2, Axis, Ix1, Ix2};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::EdgeWeightMatrix;
use crate::nn::ops::{init_uniform, init_uniform_vec, leaky_relu, leaky_relu_prime, relu, relu_prime};
use crate::nn::{DiffBlock, ParamDyn, Parameter, Real};

/// LeakyReLU slope inside GAT attention logits.
const GAT_SLOPE: f64 = 0.2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GnnArchitecture {
    Gcn,
    Gat,
    Sage,
}

impl std::fmt::Display for GnnArchitecture {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            GnnArchitecture::Gcn => write!(f, "gcn"),
            GnnArchitecture::Gat => write!(f, "gat"),
            GnnArchitecture::Sage => write!(f, "sage"),
        }
    }
}

/// Configuration of the GNN front-end.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GnnConfig {
    pub architecture: GnnArchitecture,
    pub use_edge_weights: bool,
    /// Two layers is the supported depth; other values require
    /// `experimental_depth`.
    #[serde(default = "default_layers")]
    pub layers: usize,
    #[serde(default)]
    pub experimental_depth: bool,
    /// Hidden width between the layers; defaults to the sequence length
    /// (shape-preserving throughout).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hidden_dim: Option<usize>,
    #[serde(default = "default_activation")]
    pub activation: String,
    #[serde(default = "default_heads")]
    pub gat_heads: usize,
    #[serde(default = "default_edge_dim")]
    pub gat_edge_dim: usize,
}

fn default_layers() -> usize {
    2
}
fn default_activation() -> String {
    "relu".to_string()
}
fn default_heads() -> usize {
    1
}
fn default_edge_dim() -> usize {
    4
}

impl GnnConfig {
    pub fn new(architecture: GnnArchitecture, use_edge_weights: bool) -> Self {
        GnnConfig {
            architecture,
            use_edge_weights,
            layers: 2,
            experimental_depth: false,
            hidden_dim: None,
            activation: default_activation(),
            gat_heads: 1,
            gat_edge_dim: default_edge_dim(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.architecture == GnnArchitecture::Sage && self.use_edge_weights {
            return Err(Error::config(
                "GraphSAGE does not support edge weights; use --edge-weights off",
            ));
        }
        if self.layers != 2 && !self.experimental_depth {
            return Err(Error::config(format!(
                "{} layers requires experimental_depth = true (supported depth is 2)",
                self.layers
            )));
        }
        if self.layers == 0 {
            return Err(Error::config("gnn needs at least one layer"));
        }
        if self.activation != "relu" {
            return Err(Error::config(format!(
                "unsupported activation '{}' (only relu)",
                self.activation
            )));
        }
        if self.gat_heads == 0 {
            return Err(Error::config("gat_heads must be at least 1"));
        }
        if self.gat_edge_dim == 0 {
            return Err(Error::config("gat_edge_dim must be at least 1"));
        }
        Ok(())
    }

    /// Short key used in file names and report rows.
    pub fn model_key(&self) -> String {
        let mut key = self.architecture.to_string();
        if self.use_edge_weights {
            key.push_str("_ew");
        }
        key
    }
}

fn check_input<F: Real>(x: &Array2<F>, c: usize, f_in: usize, name: &str) -> Result<()> {
    if x.nrows() != c || x.ncols() != f_in {
        return Err(Error::shape(format!(
            "{name}: expected {c}x{f_in} input, got {}x{}",
            x.nrows(),
            x.ncols()
        )));
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// GCN
// ---------------------------------------------------------------------------

/// Graph convolution with the renormalization-trick operator
/// `D^{-1/2} (A + I) D^{-1/2}`, where A is either the edge-weight matrix
/// or the unweighted fully connected adjacency.
#[derive(Debug, Clone)]
pub struct Gcn<F: Real> {
    name: String,
    c: usize,
    theta: Parameter<F, Ix2>,
    bias: Parameter<F, Ix1>,
    norm_op: Array2<F>,
    cache_h: Option<Array2<F>>,
}

/// The normalized operator, computed in double precision.
pub fn gcn_norm_operator(c: usize, weights: Option<&Array2<f64>>) -> Result<Array2<f64>> {
    let mut a_tilde = match weights {
        Some(w) => {
            if w.nrows() != c || w.ncols() != c {
                return Err(Error::shape(format!(
                    "edge weights are {}x{}, expected {c}x{c}",
                    w.nrows(),
                    w.ncols()
                )));
            }
            w.clone()
        }
        None => {
            let mut ones = Array2::<f64>::ones((c, c));
            for i in 0..c {
                ones[[i, i]] = 0.0;
            }
            ones
        }
    };
    for i in 0..c {
        a_tilde[[i, i]] += 1.0;
    }
    let degrees = a_tilde.sum_axis(Axis(1));
    for (i, &d) in degrees.iter().enumerate() {
        if d <= 0.0 {
            return Err(Error::validation(format!(
                "row {i} of the augmented adjacency has non-positive degree {d}"
            )));
        }
    }
    let inv_sqrt: Vec<f64> = degrees.iter().map(|&d| 1.0 / d.sqrt()).collect();
    let mut norm = a_tilde;
    for i in 0..c {
        for j in 0..c {
            norm[[i, j]] *= inv_sqrt[i] * inv_sqrt[j];
        }
    }
    Ok(norm)
}

impl<F: Real> Gcn<F> {
    pub fn new(
        name: impl Into<String>,
        rng: &mut ChaCha8Rng,
        c: usize,
        f_in: usize,
        f_out: usize,
        weights: Option<&EdgeWeightMatrix>,
    ) -> Result<Self> {
        let name = name.into();
        let norm = gcn_norm_operator(c, weights.map(|w| &w.weights))?;
        let norm_op = norm.mapv(F::from_f64);
        let theta = Parameter::new(format!("{name}.theta"), init_uniform(rng, f_in, f_out, f_in));
        let bias = Parameter::new(format!("{name}.bias"), Array1::zeros(f_out));
        Ok(Gcn {
            name,
            c,
            theta,
            bias,
            norm_op,
            cache_h: None,
        })
    }

    fn f_in(&self) -> usize {
        self.theta.value.nrows()
    }
}

impl<F: Real> DiffBlock<F> for Gcn<F> {
    fn name(&self) -> &str {
        &self.name
    }

    fn forward(&mut self, input: &Array2<F>) -> Array2<F> {
        check_input(input, self.c, self.f_in(), &self.name).expect("gcn input shape");
        let h = self.norm_op.dot(input);
        let out = h.dot(&self.theta.value) + &self.bias.value;
        self.cache_h = Some(h);
        out
    }

    fn backward(&mut self, grad_out: &Array2<F>) -> Array2<F> {
        let h = self.cache_h.as_ref().expect("backward before forward");
        self.theta.grad = &self.theta.grad + &h.t().dot(grad_out);
        self.bias.grad = &self.bias.grad + &grad_out.sum_axis(Axis(0));
        let dh = grad_out.dot(&self.theta.value.t());
        self.norm_op.t().dot(&dh)
    }

    fn params(&mut self) -> Vec<&mut dyn ParamDyn<F>> {
        vec![&mut self.theta, &mut self.bias]
    }
}

// ---------------------------------------------------------------------------
// GraphSAGE
// ---------------------------------------------------------------------------

/// Mean-aggregator GraphSAGE over the full non-self neighborhood:
/// `out_i = x_i Th_self + mean_{j != i}(x_j) Th_neigh + b`.
#[derive(Debug, Clone)]
pub struct Sage<F: Real> {
    name: String,
    c: usize,
    theta_self: Parameter<F, Ix2>,
    theta_neigh: Parameter<F, Ix2>,
    bias: Parameter<F, Ix1>,
    cache_x: Option<Array2<F>>,
    cache_mean: Option<Array2<F>>,
}

impl<F: Real> Sage<F> {
    pub fn new(
        name: impl Into<String>,
        rng: &mut ChaCha8Rng,
        c: usize,
        f_in: usize,
        f_out: usize,
    ) -> Result<Self> {
        if c < 2 {
            return Err(Error::validation(
                "GraphSAGE needs at least 2 nodes (non-self neighborhood is empty)",
            ));
        }
        let name = name.into();
        let theta_self = Parameter::new(
            format!("{name}.theta_self"),
            init_uniform(rng, f_in, f_out, f_in),
        );
        let theta_neigh = Parameter::new(
            format!("{name}.theta_neigh"),
            init_uniform(rng, f_in, f_out, f_in),
        );
        let bias = Parameter::new(format!("{name}.bias"), Array1::zeros(f_out));
        Ok(Sage {
            name,
            c,
            theta_self,
            theta_neigh,
            bias,
            cache_x: None,
            cache_mean: None,
        })
    }

    /// Row-wise mean over the other rows; symmetric as a linear operator.
    fn neighbor_mean(&self, x: &Array2<F>) -> Array2<F> {
        let total = x.sum_axis(Axis(0));
        let denom = F::from_f64((self.c - 1) as f64);
        let mut out = Array2::zeros(x.raw_dim());
        for i in 0..x.nrows() {
            let mut row = out.row_mut(i);
            for (j, r) in row.iter_mut().enumerate() {
                *r = (total[j] - x[[i, j]]) / denom;
            }
        }
        out
    }
}

impl<F: Real> DiffBlock<F> for Sage<F> {
    fn name(&self) -> &str {
        &self.name
    }

    fn forward(&mut self, input: &Array2<F>) -> Array2<F> {
        check_input(input, self.c, self.theta_self.value.nrows(), &self.name)
            .expect("sage input shape");
        let mean = self.neighbor_mean(input);
        let out = input.dot(&self.theta_self.value) + mean.dot(&self.theta_neigh.value)
            + &self.bias.value;
        self.cache_x = Some(input.clone());
        self.cache_mean = Some(mean);
        out
    }

    fn backward(&mut self, grad_out: &Array2<F>) -> Array2<F> {
        let x = self.cache_x.as_ref().expect("backward before forward");
        let mean = self.cache_mean.as_ref().expect("backward before forward");
        self.theta_self.grad = &self.theta_self.grad + &x.t().dot(grad_out);
        self.theta_neigh.grad = &self.theta_neigh.grad + &mean.t().dot(grad_out);
        self.bias.grad = &self.bias.grad + &grad_out.sum_axis(Axis(0));
        let d_self = grad_out.dot(&self.theta_self.value.t());
        let d_neigh = grad_out.dot(&self.theta_neigh.value.t());
        &d_self + &self.neighbor_mean(&d_neigh)
    }

    fn params(&mut self) -> Vec<&mut dyn ParamDyn<F>> {
        vec![&mut self.theta_self, &mut self.theta_neigh, &mut self.bias]
    }
}

// ---------------------------------------------------------------------------
// GAT
// ---------------------------------------------------------------------------

/// Multi-head graph attention with optional scalar edge weights embedded
/// through a learned vector and concatenated into the attention input.
/// Self-loops are included and carry edge weight 0.
#[derive(Debug, Clone)]
pub struct Gat<F: Real> {
    name: String,
    c: usize,
    heads: usize,
    f_head: usize,
    theta: Parameter<F, Ix2>,
    att_src: Parameter<F, Ix2>,
    att_dst: Parameter<F, Ix2>,
    /// Edge pathway, present only with edge weights: per-head attention
    /// over the embedded edge scalar, and the shared embedding vector.
    att_edge: Option<Parameter<F, Ix2>>,
    edge_embed: Option<Parameter<F, Ix1>>,
    bias: Parameter<F, Ix1>,
    edge_weights: Option<Array2<F>>,
    cache: Option<GatCache<F>>,
}

#[derive(Debug, Clone)]
struct GatCache<F> {
    x: Array2<F>,
    z: Array2<F>,
    pre: Vec<Array2<F>>,   // per head, pre-activation logits
    alpha: Vec<Array2<F>>, // per head, attention rows
}

impl<F: Real> Gat<F> {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        name: impl Into<String>,
        rng: &mut ChaCha8Rng,
        c: usize,
        f_in: usize,
        f_out: usize,
        heads: usize,
        edge_dim: usize,
        weights: Option<&EdgeWeightMatrix>,
    ) -> Result<Self> {
        let name = name.into();
        if heads == 0 || f_out % heads != 0 {
            return Err(Error::config(format!(
                "gat output dim {f_out} must be divisible by heads {heads}"
            )));
        }
        let f_head = f_out / heads;
        let theta = Parameter::new(format!("{name}.theta"), init_uniform(rng, f_in, f_out, f_in));
        let att_src = Parameter::new(
            format!("{name}.att_src"),
            init_uniform(rng, heads, f_head, f_head),
        );
        let att_dst = Parameter::new(
            format!("{name}.att_dst"),
            init_uniform(rng, heads, f_head, f_head),
        );
        let (att_edge, edge_embed, edge_weights) = match weights {
            Some(w) => {
                if w.weights.nrows() != c {
                    return Err(Error::shape(format!(
                        "edge weights are {}x{}, expected {c}x{c}",
                        w.weights.nrows(),
                        w.weights.ncols()
                    )));
                }
                (
                    Some(Parameter::new(
                        format!("{name}.att_edge"),
                        init_uniform(rng, heads, edge_dim, edge_dim),
                    )),
                    Some(Parameter::new(
                        format!("{name}.edge_embed"),
                        init_uniform_vec(rng, edge_dim, 1),
                    )),
                    Some(w.weights.mapv(F::from_f64)),
                )
            }
            None => (None, None, None),
        };
        let bias = Parameter::new(format!("{name}.bias"), Array1::zeros(f_out));
        Ok(Gat {
            name,
            c,
            heads,
            f_head,
            theta,
            att_src,
            att_dst,
            att_edge,
            edge_embed,
            bias,
            edge_weights,
            cache: None,
        })
    }

    /// Per-head scalar multiplier of w_ij in the attention logit:
    /// `kappa_h = att_edge_h . edge_embed`.
    fn kappa(&self, head: usize) -> F {
        match (&self.att_edge, &self.edge_embed) {
            (Some(ae), Some(emb)) => ae.value.row(head).dot(&emb.value),
            _ => F::zero(),
        }
    }

    /// Attention rows of the last forward, per head. Test hook.
    pub fn last_attention(&self) -> Option<&[Array2<F>]> {
        self.cache.as_ref().map(|c| c.alpha.as_slice())
    }
}

impl<F: Real> DiffBlock<F> for Gat<F> {
    fn name(&self) -> &str {
        &self.name
    }

    fn forward(&mut self, input: &Array2<F>) -> Array2<F> {
        check_input(input, self.c, self.theta.value.nrows(), &self.name).expect("gat input shape");
        let c = self.c;
        let slope = F::from_f64(GAT_SLOPE);
        let z = input.dot(&self.theta.value);
        let mut out = Array2::<F>::zeros((c, self.heads * self.f_head));
        let mut pre_all = Vec::with_capacity(self.heads);
        let mut alpha_all = Vec::with_capacity(self.heads);
        for h in 0..self.heads {
            let cols = h * self.f_head..(h + 1) * self.f_head;
            let z_h = z.slice(ndarray::s![.., cols.clone()]);
            let s = z_h.dot(&self.att_src.value.row(h));
            let t = z_h.dot(&self.att_dst.value.row(h));
            let kappa = self.kappa(h);
            let mut pre = Array2::<F>::zeros((c, c));
            for i in 0..c {
                for j in 0..c {
                    let mut logit = s[i] + t[j];
                    if let Some(w) = &self.edge_weights {
                        logit = logit + kappa * w[[i, j]];
                    }
                    pre[[i, j]] = logit;
                }
            }
            let mut alpha = pre.mapv(|v| leaky_relu(v, slope));
            crate::nn::ops::softmax_rows_inplace(&mut alpha);
            let agg = alpha.dot(&z_h);
            out.slice_mut(ndarray::s![.., cols]).assign(&agg);
            pre_all.push(pre);
            alpha_all.push(alpha);
        }
        out = out + &self.bias.value;
        self.cache = Some(GatCache {
            x: input.clone(),
            z,
            pre: pre_all,
            alpha: alpha_all,
        });
        out
    }

    fn backward(&mut self, grad_out: &Array2<F>) -> Array2<F> {
        let cache = self.cache.take().expect("backward before forward");
        let c = self.c;
        let slope = F::from_f64(GAT_SLOPE);
        let mut dz = Array2::<F>::zeros(cache.z.raw_dim());
        self.bias.grad = &self.bias.grad + &grad_out.sum_axis(Axis(0));
        for h in 0..self.heads {
            let cols = h * self.f_head..(h + 1) * self.f_head;
            let g_h = grad_out.slice(ndarray::s![.., cols.clone()]);
            let z_h = cache.z.slice(ndarray::s![.., cols.clone()]);
            let alpha = &cache.alpha[h];
            let pre = &cache.pre[h];

            // Aggregation term: out_i = sum_j alpha_ij z_j.
            let dz_agg = alpha.t().dot(&g_h);
            // d loss / d alpha.
            let m = g_h.dot(&z_h.t());
            // Softmax backward per row, then the LeakyReLU.
            let mut dpre = Array2::<F>::zeros((c, c));
            for i in 0..c {
                let mut dot = F::zero();
                for k in 0..c {
                    dot = dot + alpha[[i, k]] * m[[i, k]];
                }
                for j in 0..c {
                    let de = alpha[[i, j]] * (m[[i, j]] - dot);
                    dpre[[i, j]] = de * leaky_relu_prime(pre[[i, j]], slope);
                }
            }
            let ds = dpre.sum_axis(Axis(1));
            let dt = dpre.sum_axis(Axis(0));

            let mut dz_h = dz_agg;
            for i in 0..c {
                for f in 0..self.f_head {
                    dz_h[[i, f]] = dz_h[[i, f]]
                        + ds[i] * self.att_src.value[[h, f]]
                        + dt[i] * self.att_dst.value[[h, f]];
                }
            }

            let da_src = z_h.t().dot(&ds);
            let da_dst = z_h.t().dot(&dt);
            for f in 0..self.f_head {
                self.att_src.grad[[h, f]] = self.att_src.grad[[h, f]] + da_src[f];
                self.att_dst.grad[[h, f]] = self.att_dst.grad[[h, f]] + da_dst[f];
            }

            if let Some(w) = &self.edge_weights {
                let mut dkappa = F::zero();
                for i in 0..c {
                    for j in 0..c {
                        dkappa = dkappa + dpre[[i, j]] * w[[i, j]];
                    }
                }
                let (ae, emb) = (
                    self.att_edge.as_mut().expect("edge params"),
                    self.edge_embed.as_mut().expect("edge params"),
                );
                for e in 0..emb.value.len() {
                    ae.grad[[h, e]] = ae.grad[[h, e]] + dkappa * emb.value[e];
                    emb.grad[e] = emb.grad[e] + dkappa * ae.value[[h, e]];
                }
            }

            dz.slice_mut(ndarray::s![.., cols]).assign(&dz_h);
        }
        self.theta.grad = &self.theta.grad + &cache.x.t().dot(&dz);
        dz.dot(&self.theta.value.t())
    }

    fn params(&mut self) -> Vec<&mut dyn ParamDyn<F>> {
        let mut params: Vec<&mut dyn ParamDyn<F>> =
            vec![&mut self.theta, &mut self.att_src, &mut self.att_dst];
        if let Some(ae) = self.att_edge.as_mut() {
            params.push(ae);
        }
        if let Some(emb) = self.edge_embed.as_mut() {
            params.push(emb);
        }
        params.push(&mut self.bias);
        params
    }
}

// ---------------------------------------------------------------------------
// Layer dispatch and the two-layer stack
// ---------------------------------------------------------------------------

#[derive(Debug, Clone)]
pub enum GnnLayer<F: Real> {
    Gcn(Gcn<F>),
    Gat(Gat<F>),
    Sage(Sage<F>),
}

impl<F: Real> DiffBlock<F> for GnnLayer<F> {
    fn name(&self) -> &str {
        match self {
            GnnLayer::Gcn(l) => l.name(),
            GnnLayer::Gat(l) => l.name(),
            GnnLayer::Sage(l) => l.name(),
        }
    }
    fn forward(&mut self, input: &Array2<F>) -> Array2<F> {
        match self {
            GnnLayer::Gcn(l) => l.forward(input),
            GnnLayer::Gat(l) => l.forward(input),
            GnnLayer::Sage(l) => l.forward(input),
        }
    }
    fn backward(&mut self, grad_out: &Array2<F>) -> Array2<F> {
        match self {
            GnnLayer::Gcn(l) => l.backward(grad_out),
            GnnLayer::Gat(l) => l.backward(grad_out),
            GnnLayer::Sage(l) => l.backward(grad_out),
        }
    }
    fn params(&mut self) -> Vec<&mut dyn ParamDyn<F>> {
        match self {
            GnnLayer::Gcn(l) => l.params(),
            GnnLayer::Gat(l) => l.params(),
            GnnLayer::Sage(l) => l.params(),
        }
    }
}

/// The GNN front-end: layer -> ReLU -> layer, shape-preserving (C x n in,
/// C x n out).
#[derive(Debug, Clone)]
pub struct GnnStack<F: Real> {
    name: String,
    layers: Vec<GnnLayer<F>>,
    cache_pre_relu: Vec<Array2<F>>,
}

impl<F: Real> GnnStack<F> {
    /// Build the stack for `n`-length node features over the graph
    /// described by `weights` (always consulted for the node count; the
    /// values feed the layers only when the config asks for edge weights).
    pub fn from_config(
        rng: &mut ChaCha8Rng,
        cfg: &GnnConfig,
        weights: &EdgeWeightMatrix,
        n: usize,
    ) -> Result<Self> {
        cfg.validate()?;
        let c = weights.num_channels();
        let hidden = cfg.hidden_dim.unwrap_or(n);
        let w = if cfg.use_edge_weights { Some(weights) } else { None };
        let mut dims = Vec::with_capacity(cfg.layers + 1);
        dims.push(n);
        for _ in 0..cfg.layers.saturating_sub(1) {
            dims.push(hidden);
        }
        dims.push(n);
        let mut layers = Vec::with_capacity(cfg.layers);
        for l in 0..cfg.layers {
            let (f_in, f_out) = (dims[l], dims[l + 1]);
            let name = format!("gnn.l{}", l + 1);
            let layer = match cfg.architecture {
                GnnArchitecture::Gcn => GnnLayer::Gcn(Gcn::new(name, rng, c, f_in, f_out, w)?),
                GnnArchitecture::Gat => GnnLayer::Gat(Gat::new(
                    name,
                    rng,
                    c,
                    f_in,
                    f_out,
                    cfg.gat_heads,
                    cfg.gat_edge_dim,
                    w,
                )?),
                GnnArchitecture::Sage => GnnLayer::Sage(Sage::new(name, rng, c, f_in, f_out)?),
            };
            layers.push(layer);
        }
        Ok(GnnStack {
            name: "gnn.stack".to_string(),
            layers,
            cache_pre_relu: Vec::new(),
        })
    }

    pub fn layers_mut(&mut self) -> &mut [GnnLayer<F>] {
        &mut self.layers
    }
}

impl<F: Real> DiffBlock<F> for GnnStack<F> {
    fn name(&self) -> &str {
        &self.name
    }

    fn forward(&mut self, input: &Array2<F>) -> Array2<F> {
        self.cache_pre_relu.clear();
        let mut h = input.clone();
        let last = self.layers.len() - 1;
        for (l, layer) in self.layers.iter_mut().enumerate() {
            h = layer.forward(&h);
            if l != last {
                self.cache_pre_relu.push(h.clone());
                h.mapv_inplace(relu);
            }
        }
        h
    }

    fn backward(&mut self, grad_out: &Array2<F>) -> Array2<F> {
        let last = self.layers.len() - 1;
        let mut g = grad_out.clone();
        for (l, layer) in self.layers.iter_mut().enumerate().rev() {
            if l != last {
                let pre = &self.cache_pre_relu[l];
                g.zip_mut_with(pre, |gv, &pv| *gv = *gv * relu_prime(pv));
            }
            g = layer.backward(&g);
        }
        g
    }

    fn params(&mut self) -> Vec<&mut dyn ParamDyn<F>> {
        self.layers.iter_mut().flat_map(|l| l.params()).collect()
    }
}
