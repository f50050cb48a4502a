//! Sequence-length adjusters: standardize per-channel length m to the
//! pre-training length n before the GNN, via a learned linear map or
//! repeat-last padding, with a bit-exact bypass when m = n.

use ndarray::{Array2, Ix2};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nn::{DiffBlock, ParamDyn, Parameter, Real};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AdjusterKind {
    Linear,
    Padding,
    Identity,
}

impl std::fmt::Display for AdjusterKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            AdjusterKind::Linear => write!(f, "linear"),
            AdjusterKind::Padding => write!(f, "padding"),
            AdjusterKind::Identity => write!(f, "identity"),
        }
    }
}

impl std::str::FromStr for AdjusterKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "linear" => Ok(AdjusterKind::Linear),
            "padding" => Ok(AdjusterKind::Padding),
            "identity" => Ok(AdjusterKind::Identity),
            other => Err(Error::config(format!("unknown adjuster '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct AdjusterConfig {
    pub kind: AdjusterKind,
    pub m: usize,
    pub n: usize,
}

/// Resolve the adjuster for a source length m and target length n: the
/// bypass applies whenever m = n, and padding cannot shorten.
pub fn select_adjuster(m: usize, n: usize, kind: AdjusterKind) -> Result<AdjusterConfig> {
    if n == 0 {
        return Err(Error::config("target length n must be positive"));
    }
    if m == 0 {
        return Err(Error::config("source length m must be positive"));
    }
    if m == n {
        return Ok(AdjusterConfig {
            kind: AdjusterKind::Identity,
            m,
            n,
        });
    }
    match kind {
        AdjusterKind::Identity => Err(Error::config(format!(
            "identity adjuster requires m = n, got m = {m}, n = {n}"
        ))),
        AdjusterKind::Padding if m > n => Err(Error::config(format!(
            "padding cannot shorten: m = {m} > n = {n}"
        ))),
        _ => Ok(AdjusterConfig { kind, m, n }),
    }
}

/// A learned m x n map shared across channels, initialized to a
/// linear-interpolation stencil whose columns sum to 1, so training
/// starts from a signal-preserving stretch.
#[derive(Debug, Clone)]
pub struct LinearAdjuster<F: Real> {
    name: String,
    pub map: Parameter<F, Ix2>,
    cache_x: Option<Array2<F>>,
}

/// Interpolation stencil mapping m samples onto n positions; every output
/// column is a convex combination of at most two inputs.
pub fn interpolation_stencil<F: Real>(m: usize, n: usize) -> Array2<F> {
    let mut map = Array2::<F>::zeros((m, n));
    for j in 0..n {
        let u = if n == 1 {
            0.0
        } else {
            j as f64 * (m as f64 - 1.0) / (n as f64 - 1.0)
        };
        let i0 = u.floor() as usize;
        let frac = u - i0 as f64;
        let i1 = (i0 + 1).min(m - 1);
        map[[i0, j]] = map[[i0, j]] + F::from_f64(1.0 - frac);
        map[[i1, j]] = map[[i1, j]] + F::from_f64(frac);
    }
    map
}

impl<F: Real> LinearAdjuster<F> {
    pub fn new(m: usize, n: usize) -> Self {
        LinearAdjuster {
            name: "adjuster.linear".to_string(),
            map: Parameter::new("adjuster.map", interpolation_stencil(m, n)),
            cache_x: None,
        }
    }

    pub fn m(&self) -> usize {
        self.map.value.nrows()
    }

    pub fn n(&self) -> usize {
        self.map.value.ncols()
    }
}

impl<F: Real> DiffBlock<F> for LinearAdjuster<F> {
    fn name(&self) -> &str {
        &self.name
    }

    fn forward(&mut self, input: &Array2<F>) -> Array2<F> {
        assert_eq!(input.ncols(), self.m(), "adjuster input length");
        self.cache_x = Some(input.clone());
        input.dot(&self.map.value)
    }

    fn backward(&mut self, grad_out: &Array2<F>) -> Array2<F> {
        let x = self.cache_x.as_ref().expect("backward before forward");
        self.map.grad = &self.map.grad + &x.t().dot(grad_out);
        grad_out.dot(&self.map.value.t())
    }

    fn params(&mut self) -> Vec<&mut dyn ParamDyn<F>> {
        vec![&mut self.map]
    }
}

/// Repeat-last padding: the original prefix is copied bit-exactly and the
/// per-channel last value fills columns m..n.
#[derive(Debug, Clone)]
pub struct PaddingAdjuster<F: Real> {
    name: String,
    m: usize,
    n: usize,
    _marker: std::marker::PhantomData<F>,
}

impl<F: Real> PaddingAdjuster<F> {
    pub fn new(m: usize, n: usize) -> Result<Self> {
        if m > n {
            return Err(Error::config(format!(
                "padding cannot shorten: m = {m} > n = {n}"
            )));
        }
        if m == 0 {
            return Err(Error::config("padding needs at least one sample"));
        }
        Ok(PaddingAdjuster {
            name: "adjuster.padding".to_string(),
            m,
            n,
            _marker: std::marker::PhantomData,
        })
    }
}

impl<F: Real> DiffBlock<F> for PaddingAdjuster<F> {
    fn name(&self) -> &str {
        &self.name
    }

    fn forward(&mut self, input: &Array2<F>) -> Array2<F> {
        assert_eq!(input.ncols(), self.m, "adjuster input length");
        let c = input.nrows();
        let mut out = Array2::<F>::zeros((c, self.n));
        out.slice_mut(ndarray::s![.., ..self.m]).assign(input);
        for ch in 0..c {
            let last = input[[ch, self.m - 1]];
            for j in self.m..self.n {
                out[[ch, j]] = last;
            }
        }
        out
    }

    fn backward(&mut self, grad_out: &Array2<F>) -> Array2<F> {
        let c = grad_out.nrows();
        let mut grad_in = grad_out.slice(ndarray::s![.., ..self.m]).to_owned();
        for ch in 0..c {
            let mut acc = F::zero();
            for j in self.m..self.n {
                acc = acc + grad_out[[ch, j]];
            }
            grad_in[[ch, self.m - 1]] = grad_in[[ch, self.m - 1]] + acc;
        }
        grad_in
    }

    fn params(&mut self) -> Vec<&mut dyn ParamDyn<F>> {
        Vec::new()
    }
}

/// The adjuster stage of a fine-tuning model.
#[derive(Debug, Clone)]
pub enum Adjuster<F: Real> {
    Identity,
    Linear(LinearAdjuster<F>),
    Padding(PaddingAdjuster<F>),
}

impl<F: Real> Adjuster<F> {
    pub fn build(config: AdjusterConfig) -> Result<Self> {
        Ok(match config.kind {
            AdjusterKind::Identity => {
                if config.m != config.n {
                    return Err(Error::config(format!(
                        "identity adjuster requires m = n, got m = {}, n = {}",
                        config.m, config.n
                    )));
                }
                Adjuster::Identity
            }
            AdjusterKind::Linear => Adjuster::Linear(LinearAdjuster::new(config.m, config.n)),
            AdjusterKind::Padding => Adjuster::Padding(PaddingAdjuster::new(config.m, config.n)?),
        })
    }
}

impl<F: Real> DiffBlock<F> for Adjuster<F> {
    fn name(&self) -> &str {
        match self {
            Adjuster::Identity => "adjuster.identity",
            Adjuster::Linear(a) => a.name(),
            Adjuster::Padding(a) => a.name(),
        }
    }

    fn forward(&mut self, input: &Array2<F>) -> Array2<F> {
        match self {
            Adjuster::Identity => input.clone(),
            Adjuster::Linear(a) => a.forward(input),
            Adjuster::Padding(a) => a.forward(input),
        }
    }

    fn backward(&mut self, grad_out: &Array2<F>) -> Array2<F> {
        match self {
            Adjuster::Identity => grad_out.clone(),
            Adjuster::Linear(a) => a.backward(grad_out),
            Adjuster::Padding(a) => a.backward(grad_out),
        }
    }

    fn params(&mut self) -> Vec<&mut dyn ParamDyn<F>> {
        match self {
            Adjuster::Identity => Vec::new(),
            Adjuster::Linear(a) => a.params(),
            Adjuster::Padding(a) => a.params(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::grad_check;
    use ndarray::array;

    #[test]
    fn padding_repeats_the_last_value() {
        let mut pad = PaddingAdjuster::<f64>::new(3, 5).unwrap();
        let x = array![[1.0, 2.0, 3.0]];
        let out = pad.forward(&x);
        assert_eq!(out, array![[1.0, 2.0, 3.0, 3.0, 3.0]]);
    }

    #[test]
    fn padding_with_equal_lengths_is_identity() {
        let mut pad = PaddingAdjuster::<f64>::new(4, 4).unwrap();
        let x = array![[1.0, -2.0, 3.5, 0.25]];
        assert_eq!(pad.forward(&x), x);
    }

    #[test]
    fn padding_extends_single_sample() {
        let mut pad = PaddingAdjuster::<f64>::new(1, 4).unwrap();
        let x = array![[7.0]];
        assert_eq!(pad.forward(&x), array![[7.0, 7.0, 7.0, 7.0]]);
    }

    #[test]
    fn padding_cannot_shorten() {
        assert!(PaddingAdjuster::<f64>::new(5, 3).is_err());
    }

    #[test]
    fn padding_prefix_is_bit_exact_and_suffix_constant() {
        use rand::Rng;
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        for _ in 0..50 {
            let m = rng.random_range(1..20usize);
            let n = m + rng.random_range(0..20usize);
            let c = rng.random_range(1..4usize);
            let x = Array2::from_shape_simple_fn((c, m), || rng.random::<f64>() * 4.0 - 2.0);
            let mut pad = PaddingAdjuster::<f64>::new(m, n).unwrap();
            let out = pad.forward(&x);
            for ch in 0..c {
                for j in 0..m {
                    assert!(out[[ch, j]] == x[[ch, j]], "prefix must be bit-exact");
                }
                for j in m..n {
                    assert!(out[[ch, j]] == x[[ch, m - 1]], "suffix must equal column m-1");
                }
            }
        }
    }

    #[test]
    fn linear_identity_matrix_is_identity() {
        let mut adj = LinearAdjuster::<f64>::new(4, 4);
        adj.map.value.assign(&Array2::eye(4));
        let x = array![[0.5, -1.0, 2.0, 0.0], [1.0, 1.0, 1.0, 1.0]];
        assert_eq!(adj.forward(&x), x);
    }

    #[test]
    fn linear_zero_matrix_gives_zeros() {
        let mut adj = LinearAdjuster::<f64>::new(3, 5);
        adj.map.value.fill(0.0);
        let x = array![[1.0, 2.0, 3.0]];
        assert_eq!(adj.forward(&x), Array2::<f64>::zeros((1, 5)));
    }

    #[test]
    fn linear_matches_dot_product_oracle_and_grad_check() {
        let mut adj = LinearAdjuster::<f64>::new(3, 5);
        // Fixed non-trivial map.
        for i in 0..3 {
            for j in 0..5 {
                adj.map.value[[i, j]] = ((i * 5 + j) as f64 * 0.37).sin();
            }
        }
        let x = array![[0.3, -0.7, 1.1], [2.0, 0.0, -0.5]];
        let out = adj.forward(&x);
        for c in 0..2 {
            for j in 0..5 {
                let mut expect = 0.0;
                for i in 0..3 {
                    expect += x[[c, i]] * adj.map.value[[i, j]];
                }
                assert!((out[[c, j]] - expect).abs() < 1e-6);
            }
        }
        let report = grad_check(&mut adj, &x, 1e-5, 1e-4).unwrap();
        assert!(report.pass, "max rel err {}", report.max_rel_err);
    }

    #[test]
    fn interpolation_init_preserves_constants() {
        let mut adj = LinearAdjuster::<f64>::new(7, 19);
        let x = Array2::from_elem((3, 7), 2.5);
        let out = adj.forward(&x);
        for &v in out.iter() {
            assert!((v - 2.5).abs() < 1e-6);
        }
    }

    #[test]
    fn padding_grad_check_routes_gradients() {
        let mut pad = PaddingAdjuster::<f64>::new(3, 6).unwrap();
        let x = array![[0.3, -0.7, 1.1], [2.0, 0.1, -0.5]];
        let report = grad_check(&mut pad, &x, 1e-5, 1e-7).unwrap();
        assert!(report.pass);
    }

    #[test]
    fn select_bypasses_on_equal_lengths() {
        let cfg = select_adjuster(15360, 15360, AdjusterKind::Linear).unwrap();
        assert_eq!(cfg.kind, AdjusterKind::Identity);
        let cfg = select_adjuster(512, 15360, AdjusterKind::Padding).unwrap();
        assert_eq!(cfg.kind, AdjusterKind::Padding);
        assert!(select_adjuster(512, 256, AdjusterKind::Padding).is_err());
    }

    #[test]
    fn identity_bypass_is_bit_exact() {
        let mut adj = Adjuster::<f32>::build(AdjusterConfig {
            kind: AdjusterKind::Identity,
            m: 8,
            n: 8,
        })
        .unwrap();
        let x = Array2::from_shape_fn((2, 8), |(i, j)| (i as f32 + 1.0) * (j as f32 + 0.1));
        assert_eq!(adj.forward(&x), x);
    }
}
