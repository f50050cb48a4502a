//! The layer contract and the finite-difference gradient checker.

use ndarray::Array2;

use crate::error::{Error, Result};

use super::{ParamDyn, Real};

/// A differentiable block.
///
/// `forward` is a pure function of the input and the current parameter
/// values (it may cache activations for the following `backward`).
/// `backward` consumes the gradient of a scalar loss with respect to the
/// block output, accumulates parameter gradients, and returns the
/// gradient with respect to the input. A forward/backward pair leaves no
/// state that changes a later forward.
pub trait DiffBlock<F: Real> {
    fn name(&self) -> &str;
    fn forward(&mut self, input: &Array2<F>) -> Array2<F>;
    fn backward(&mut self, grad_out: &Array2<F>) -> Array2<F>;
    fn params(&mut self) -> Vec<&mut dyn ParamDyn<F>>;

    fn zero_grad(&mut self) {
        for p in self.params() {
            for g in p.grad_slice_mut() {
                *g = F::zero();
            }
        }
    }

    /// Toggle training-only behaviour (dropout). Defaults to a no-op.
    fn set_training(&mut self, _on: bool) {}
}

/// Result of a finite-difference check of one block.
#[derive(Debug, Clone)]
pub struct GradReport {
    pub block: String,
    /// Worst relative error over all parameter entries and input entries.
    pub max_rel_err: f64,
    /// Worst relative error per parameter.
    pub per_param: Vec<(String, f64)>,
    /// Worst relative error over input entries.
    pub input_rel_err: f64,
    pub pass: bool,
}

fn rel_err(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(1e-8)
}

/// Compare analytic gradients of the scalar loss `sum(forward(input))`
/// against central finite differences, for every parameter entry and
/// every input entry. Runs in double precision by construction.
pub fn grad_check<B: DiffBlock<f64> + ?Sized>(
    block: &mut B,
    input: &Array2<f64>,
    eps: f64,
    tol: f64,
) -> Result<GradReport> {
    assert!(eps > 0.0, "eps must be positive");
    block.set_training(false);
    block.zero_grad();

    let out = block.forward(input);
    if out.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite(format!(
            "forward output of block '{}'",
            block.name()
        )));
    }
    let ones = Array2::<f64>::ones(out.raw_dim());
    let analytic_input = block.backward(&ones);

    // Snapshot analytic parameter gradients.
    let analytic_params: Vec<(String, Vec<f64>)> = block
        .params()
        .iter()
        .map(|p| (p.name().to_string(), p.grad_slice().to_vec()))
        .collect();

    let loss_at = |block: &mut B, input: &Array2<f64>| -> f64 { block.forward(input).sum() };

    let mut per_param = Vec::with_capacity(analytic_params.len());
    let mut max_rel = 0.0f64;
    for (pi, (pname, analytic)) in analytic_params.iter().enumerate() {
        let mut worst = 0.0f64;
        for k in 0..analytic.len() {
            let orig = {
                let mut params = block.params();
                let slice = params[pi].value_slice_mut();
                let orig = slice[k];
                slice[k] = orig + eps;
                orig
            };
            let plus = loss_at(block, input);
            {
                let mut params = block.params();
                params[pi].value_slice_mut()[k] = orig - eps;
            }
            let minus = loss_at(block, input);
            {
                let mut params = block.params();
                params[pi].value_slice_mut()[k] = orig;
            }
            let numeric = (plus - minus) / (2.0 * eps);
            worst = worst.max(rel_err(analytic[k], numeric));
        }
        max_rel = max_rel.max(worst);
        per_param.push((pname.clone(), worst));
    }

    let mut input_rel = 0.0f64;
    let mut probe = input.clone();
    for idx in 0..probe.len() {
        let flat = probe.as_slice_mut().expect("standard layout");
        let orig = flat[idx];
        flat[idx] = orig + eps;
        let plus = loss_at(block, &probe);
        let flat = probe.as_slice_mut().expect("standard layout");
        flat[idx] = orig - eps;
        let minus = loss_at(block, &probe);
        let flat = probe.as_slice_mut().expect("standard layout");
        flat[idx] = orig;
        let numeric = (plus - minus) / (2.0 * eps);
        let analytic = analytic_input.as_slice().expect("standard layout")[idx];
        input_rel = input_rel.max(rel_err(analytic, numeric));
    }
    max_rel = max_rel.max(input_rel);

    Ok(GradReport {
        block: block.name().to_string(),
        max_rel_err: max_rel,
        per_param,
        input_rel_err: input_rel,
        pass: max_rel <= tol,
    })
}
