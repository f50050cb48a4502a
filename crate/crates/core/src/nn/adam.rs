//! Adam with bias correction.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::{ParamDyn, Real};

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct AdamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        AdamConfig {
            lr: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

impl AdamConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.lr > 0.0 && self.lr.is_finite()) {
            return Err(Error::config("optimizer lr must be positive"));
        }
        for (name, b) in [("beta1", self.beta1), ("beta2", self.beta2)] {
            if !(0.0..1.0).contains(&b) {
                return Err(Error::config(format!("optimizer {name} must be in [0, 1)")));
            }
        }
        if !(self.eps > 0.0) {
            return Err(Error::config("optimizer eps must be positive"));
        }
        Ok(())
    }
}

/// Optimizer state: first/second moment per parameter entry, tracked by
/// parameter position, which must stay stable across steps.
#[derive(Debug)]
pub struct Adam<F> {
    pub cfg: AdamConfig,
    step: u64,
    moments: Vec<(Vec<F>, Vec<F>)>,
}

impl<F: Real> Adam<F> {
    pub fn new(cfg: AdamConfig) -> Self {
        Adam {
            cfg,
            step: 0,
            moments: Vec::new(),
        }
    }

    pub fn step_count(&self) -> u64 {
        self.step
    }

    /// One bias-corrected update over all parameters; gradients are
    /// zeroed afterwards. Non-finite gradients abort before any update.
    pub fn step(&mut self, params: &mut [&mut dyn ParamDyn<F>]) -> Result<()> {
        if self.moments.is_empty() {
            self.moments = params
                .iter()
                .map(|p| (vec![F::zero(); p.len()], vec![F::zero(); p.len()]))
                .collect();
        }
        if self.moments.len() != params.len() {
            return Err(Error::shape(format!(
                "optimizer tracks {} parameters, got {}",
                self.moments.len(),
                params.len()
            )));
        }
        for p in params.iter() {
            if p.grad_slice().iter().any(|g| !g.is_finite()) {
                return Err(Error::NonFinite(format!("gradient of parameter '{}'", p.name())));
            }
        }
        self.step += 1;
        let t = self.step as i32;
        let lr = F::from_f64(self.cfg.lr);
        let b1 = F::from_f64(self.cfg.beta1);
        let b2 = F::from_f64(self.cfg.beta2);
        let eps = F::from_f64(self.cfg.eps);
        let bias1 = F::one() - b1.powi(t);
        let bias2 = F::one() - b2.powi(t);
        for (p, (m, v)) in params.iter_mut().zip(self.moments.iter_mut()) {
            debug_assert_eq!(p.len(), m.len(), "parameter '{}' resized", p.name());
            {
                let grad = p.grad_slice();
                for k in 0..grad.len() {
                    let g = grad[k];
                    m[k] = b1 * m[k] + (F::one() - b1) * g;
                    v[k] = b2 * v[k] + (F::one() - b2) * g * g;
                }
            }
            {
                let value = p.value_slice_mut();
                for k in 0..value.len() {
                    let m_hat = m[k] / bias1;
                    let v_hat = v[k] / bias2;
                    value[k] = value[k] - lr * m_hat / (v_hat.sqrt() + eps);
                }
            }
            for g in p.grad_slice_mut() {
                *g = F::zero();
            }
        }
        Ok(())
    }
}
