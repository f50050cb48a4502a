//! Trainable parameters: a value tensor paired with a gradient tensor of
//! the same shape.

use ndarray::{Array, Dimension};

use super::Real;

/// A named trainable tensor. The gradient starts zeroed and is
/// accumulated by `backward` calls until the optimizer consumes it.
#[derive(Debug, Clone)]
pub struct Parameter<F, D: Dimension> {
    pub name: String,
    pub value: Array<F, D>,
    pub grad: Array<F, D>,
}

impl<F: Real, D: Dimension> Parameter<F, D> {
    pub fn new(name: impl Into<String>, value: Array<F, D>) -> Self {
        let grad = Array::zeros(value.raw_dim());
        Parameter {
            name: name.into(),
            value,
            grad,
        }
    }

    pub fn zero_grad(&mut self) {
        self.grad.fill(F::zero());
    }
}

/// Shape-erased view of a parameter, used by the optimizer, the gradient
/// checker, and checkpoint serialization. Parameters are always stored in
/// standard (row-major, contiguous) layout.
pub trait ParamDyn<F> {
    fn name(&self) -> &str;
    fn shape(&self) -> Vec<usize>;
    fn len(&self) -> usize;
    fn is_empty(&self) -> bool {
        self.len() == 0
    }
    fn value_slice(&self) -> &[F];
    fn value_slice_mut(&mut self) -> &mut [F];
    fn grad_slice(&self) -> &[F];
    fn grad_slice_mut(&mut self) -> &mut [F];
}

impl<F: Real, D: Dimension> ParamDyn<F> for Parameter<F, D> {
    fn name(&self) -> &str {
        &self.name
    }
    fn shape(&self) -> Vec<usize> {
        self.value.shape().to_vec()
    }
    fn len(&self) -> usize {
        self.value.len()
    }
    fn value_slice(&self) -> &[F] {
        self.value.as_slice().expect("parameter in standard layout")
    }
    fn value_slice_mut(&mut self) -> &mut [F] {
        self.value
            .as_slice_mut()
            .expect("parameter in standard layout")
    }
    fn grad_slice(&self) -> &[F] {
        self.grad.as_slice().expect("gradient in standard layout")
    }
    fn grad_slice_mut(&mut self) -> &mut [F] {
        self.grad
            .as_slice_mut()
            .expect("gradient in standard layout")
    }
}
