//! Shared numeric pieces: activations, softmax, initialization, and the
//! affine layer.

use ndarray::{Array1, Array2, Ix1, Ix2};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::{DiffBlock, ParamDyn, Parameter, Real};

/// GELU, tanh form. Smooth, so finite differences agree with the
/// analytic derivative everywhere.
pub fn gelu<F: Real>(x: F) -> F {
    let k = F::from_f64(0.797_884_560_802_865_4); // sqrt(2/pi)
    let c = F::from_f64(0.044_715);
    let half = F::from_f64(0.5);
    let u = k * (x + c * x * x * x);
    half * x * (F::one() + u.tanh())
}

pub fn gelu_prime<F: Real>(x: F) -> F {
    let k = F::from_f64(0.797_884_560_802_865_4);
    let c = F::from_f64(0.044_715);
    let half = F::from_f64(0.5);
    let three = F::from_f64(3.0);
    let u = k * (x + c * x * x * x);
    let t = u.tanh();
    let sech2 = F::one() - t * t;
    half * (F::one() + t) + half * x * sech2 * k * (F::one() + three * c * x * x)
}

pub fn relu<F: Real>(x: F) -> F {
    if x > F::zero() {
        x
    } else {
        F::zero()
    }
}

pub fn relu_prime<F: Real>(x: F) -> F {
    if x > F::zero() {
        F::one()
    } else {
        F::zero()
    }
}

pub fn leaky_relu<F: Real>(x: F, slope: F) -> F {
    if x > F::zero() {
        x
    } else {
        slope * x
    }
}

pub fn leaky_relu_prime<F: Real>(x: F, slope: F) -> F {
    if x > F::zero() {
        F::one()
    } else {
        slope
    }
}

/// Numerically stable softmax along each row, in place.
pub fn softmax_rows_inplace<F: Real>(a: &mut Array2<F>) {
    for mut row in a.rows_mut() {
        let max = row.iter().fold(F::neg_infinity(), |m, &v| m.max(v));
        let mut sum = F::zero();
        for v in row.iter_mut() {
            *v = (*v - max).exp();
            sum = sum + *v;
        }
        for v in row.iter_mut() {
            *v = *v / sum;
        }
    }
}

/// Draw from uniform(-sqrt(1/fan_in), +sqrt(1/fan_in)).
pub fn init_uniform<F: Real>(rng: &mut ChaCha8Rng, rows: usize, cols: usize, fan_in: usize) -> Array2<F> {
    let bound = (1.0 / fan_in as f64).sqrt();
    Array2::from_shape_simple_fn((rows, cols), || {
        F::from_f64(rng.random::<f64>() * 2.0 * bound - bound)
    })
}

pub fn init_uniform_vec<F: Real>(rng: &mut ChaCha8Rng, len: usize, fan_in: usize) -> Array1<F> {
    let bound = (1.0 / fan_in as f64).sqrt();
    Array1::from_shape_simple_fn(len, || F::from_f64(rng.random::<f64>() * 2.0 * bound - bound))
}

/// y = x W + b, applied row-wise.
#[derive(Debug, Clone)]
pub struct Affine<F: Real> {
    pub name: String,
    pub w: Parameter<F, Ix2>,
    pub b: Parameter<F, Ix1>,
    cache_input: Option<Array2<F>>,
}

impl<F: Real> Affine<F> {
    pub fn new(name: impl Into<String>, rng: &mut ChaCha8Rng, dim_in: usize, dim_out: usize) -> Self {
        let name = name.into();
        let w = Parameter::new(format!("{name}.w"), init_uniform(rng, dim_in, dim_out, dim_in));
        let b = Parameter::new(format!("{name}.b"), Array1::zeros(dim_out));
        Affine {
            name,
            w,
            b,
            cache_input: None,
        }
    }

    pub fn dim_in(&self) -> usize {
        self.w.value.nrows()
    }

    pub fn dim_out(&self) -> usize {
        self.w.value.ncols()
    }
}

impl<F: Real> DiffBlock<F> for Affine<F> {
    fn name(&self) -> &str {
        &self.name
    }

    fn forward(&mut self, input: &Array2<F>) -> Array2<F> {
        self.cache_input = Some(input.clone());
        input.dot(&self.w.value) + &self.b.value
    }

    fn backward(&mut self, grad_out: &Array2<F>) -> Array2<F> {
        let input = self
            .cache_input
            .as_ref()
            .expect("backward called before forward");
        self.w.grad = &self.w.grad + &input.t().dot(grad_out);
        self.b.grad = &self.b.grad + &grad_out.sum_axis(ndarray::Axis(0));
        grad_out.dot(&self.w.value.t())
    }

    fn params(&mut self) -> Vec<&mut dyn ParamDyn<F>> {
        vec![&mut self.w, &mut self.b]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::{grad_check, Seeds, StreamKind};
    use ndarray::Array2;

    #[test]
    fn affine_grad_check_is_exact_to_rounding() {
        let mut rng = Seeds::new(7).stream(StreamKind::Init);
        let mut layer = Affine::<f64>::new("affine", &mut rng, 4, 3);
        let input = Array2::from_shape_fn((5, 4), |(i, j)| ((i * 4 + j) as f64 * 0.17).sin());
        let report = grad_check(&mut layer, &input, 1e-5, 1e-7).unwrap();
        assert!(report.pass, "max rel err {}", report.max_rel_err);
        assert!(report.max_rel_err < 1e-7);
    }

    #[test]
    fn affine_bias_gradient_is_row_count_under_sum_loss() {
        // With loss = sum(outputs), d loss / d b_j = number of rows.
        let mut rng = Seeds::new(7).stream(StreamKind::Init);
        let mut layer = Affine::<f64>::new("affine", &mut rng, 3, 2);
        let input = Array2::zeros((6, 3));
        let out = layer.forward(&input);
        layer.backward(&Array2::ones(out.raw_dim()));
        for &g in layer.b.grad.iter() {
            assert_eq!(g, 6.0);
        }
    }

    #[test]
    fn gelu_matches_numeric_derivative() {
        for &x in &[-3.0, -0.5, 0.0, 0.2, 1.7] {
            let eps = 1e-6;
            let numeric = (gelu::<f64>(x + eps) - gelu::<f64>(x - eps)) / (2.0 * eps);
            assert!((gelu_prime::<f64>(x) - numeric).abs() < 1e-8, "at {x}");
        }
        assert_eq!(gelu::<f64>(0.0), 0.0);
    }

    #[test]
    fn softmax_rows_sum_to_one() {
        let mut a = Array2::from_shape_fn((3, 5), |(i, j)| (i as f64 - j as f64) * 0.3);
        softmax_rows_inplace(&mut a);
        for row in a.rows() {
            assert!((row.sum() - 1.0).abs() < 1e-12);
        }
    }
}
