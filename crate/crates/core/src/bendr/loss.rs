//! Training objectives: the contrastive reconstruction loss for
//! pre-training and softmax cross-entropy for fine-tuning.
//!
//! The contrastive loss scores each masked position's reconstruction
//! against its pre-mask target (positive) and K other masked targets
//! (negatives) by temperature-scaled cosine similarity. Gradients flow to
//! both the reconstructions and the targets.

use ndarray::Array2;
use rand_chacha::ChaCha8Rng;

use crate::bendr::mask::MaskSpec;
use crate::error::{Error, Result};
use crate::nn::Real;

/// Negative-sample assignment: for each masked position (kept in index
/// order), K distinct other masked positions.
pub type NegativeAssignment = Vec<(usize, Vec<usize>)>;

/// Draw K negatives per masked position, uniformly without replacement
/// from the other masked positions.
pub fn sample_negatives(
    mask: &MaskSpec,
    k: usize,
    rng: &mut ChaCha8Rng,
) -> Result<NegativeAssignment> {
    let masked = mask.masked_indices();
    if masked.is_empty() {
        return Err(Error::validation("mask selects no positions"));
    }
    if k >= masked.len() && k > 0 {
        return Err(Error::validation(format!(
            "{k} negatives requested but only {} masked positions exist",
            masked.len()
        )));
    }
    let mut out = Vec::with_capacity(masked.len());
    for &t in &masked {
        let mut pool: Vec<usize> = masked.iter().copied().filter(|&u| u != t).collect();
        // Partial Fisher-Yates: the first k entries are the sample.
        for j in 0..k {
            let pick = j + (rand::Rng::random_range(rng, 0..(pool.len() - j) as u64)) as usize;
            pool.swap(j, pick);
        }
        pool.truncate(k);
        out.push((t, pool));
    }
    Ok(out)
}

/// Value and gradients of the contrastive loss.
#[derive(Debug, Clone)]
pub struct ContrastiveOutcome<F> {
    pub loss: F,
    /// Fraction of masked positions whose positive logit is the maximum.
    pub accuracy: f64,
    pub d_recon: Array2<F>,
    pub d_targets: Array2<F>,
}

fn cosine_parts<F: Real>(u: &[F], v: &[F]) -> (F, F, F, F) {
    let mut dot = F::zero();
    let mut nu = F::zero();
    let mut nv = F::zero();
    for i in 0..u.len() {
        dot = dot + u[i] * v[i];
        nu = nu + u[i] * u[i];
        nv = nv + v[i] * v[i];
    }
    let floor = F::from_f64(1e-30);
    let nu = nu.sqrt().max(floor);
    let nv = nv.sqrt().max(floor);
    (dot / (nu * nv), dot, nu, nv)
}

/// Mean over masked positions of the softmax cross-entropy between the
/// positive cosine logit and the negative logits, all scaled by 1/tau.
/// `assignment` comes from `sample_negatives` (or is constructed directly
/// in tests); K = 0 gives exactly zero loss.
pub fn contrastive_loss<F: Real>(
    recon: &Array2<F>,
    targets: &Array2<F>,
    assignment: &NegativeAssignment,
    temperature: f64,
) -> Result<ContrastiveOutcome<F>> {
    if recon.dim() != targets.dim() {
        return Err(Error::shape(format!(
            "reconstruction is {:?} but targets are {:?}",
            recon.dim(),
            targets.dim()
        )));
    }
    if assignment.is_empty() {
        return Err(Error::validation("no masked positions to score"));
    }
    if !(temperature > 0.0) {
        return Err(Error::validation("temperature must be positive"));
    }
    let inv_tau = F::from_f64(1.0 / temperature);
    let count = F::from_f64(assignment.len() as f64);
    let mut loss = F::zero();
    let mut hits = 0usize;
    let mut d_recon = Array2::<F>::zeros(recon.raw_dim());
    let mut d_targets = Array2::<F>::zeros(targets.raw_dim());

    for (t, negatives) in assignment {
        let r = recon.row(*t);
        let r_slice = r.as_slice().expect("row view");
        // Logits: positive first, then negatives.
        let mut candidates = Vec::with_capacity(negatives.len() + 1);
        candidates.push(*t);
        candidates.extend_from_slice(negatives);
        let mut logits = Vec::with_capacity(candidates.len());
        let mut parts = Vec::with_capacity(candidates.len());
        for &c in &candidates {
            let y = targets.row(c);
            let (cos, dot, nu, nv) = cosine_parts(r_slice, y.as_slice().expect("row view"));
            logits.push(cos * inv_tau);
            parts.push((dot, nu, nv));
        }
        let max = logits.iter().fold(F::neg_infinity(), |m, &v| m.max(v));
        let exps: Vec<F> = logits.iter().map(|&l| (l - max).exp()).collect();
        let z = exps.iter().fold(F::zero(), |a, &b| a + b);
        loss = loss - (exps[0] / z).ln();
        if logits[1..].iter().all(|&l| logits[0] > l) {
            hits += 1;
        }

        // d loss / d logit_k = p_k - [k == 0], averaged over positions.
        for (k, &c) in candidates.iter().enumerate() {
            let p = exps[k] / z;
            let dlogit = (p - if k == 0 { F::one() } else { F::zero() }) / count;
            if dlogit == F::zero() {
                continue;
            }
            let (dot, nu, nv) = parts[k];
            let coeff = dlogit * inv_tau;
            let y = targets.row(c);
            // d cos / d r = y/(|r||y|) - dot * r / (|r|^3 |y|)
            let inv_nunv = F::one() / (nu * nv);
            let r_coeff = dot / (nu * nu * nu * nv);
            let y_coeff = dot / (nu * nv * nv * nv);
            for i in 0..r.len() {
                d_recon[[*t, i]] =
                    d_recon[[*t, i]] + coeff * (y[i] * inv_nunv - r[i] * r_coeff);
                d_targets[[c, i]] =
                    d_targets[[c, i]] + coeff * (r[i] * inv_nunv - y[i] * y_coeff);
            }
        }
    }

    Ok(ContrastiveOutcome {
        loss: loss / count,
        accuracy: hits as f64 / assignment.len() as f64,
        d_recon,
        d_targets,
    })
}

/// Softmax cross-entropy over one row of logits; returns the loss and
/// d loss / d logits.
pub fn softmax_cross_entropy<F: Real>(logits: &Array2<F>, label: usize) -> (F, Array2<F>) {
    assert_eq!(logits.nrows(), 1, "one window at a time");
    let row = logits.row(0);
    assert!(label < row.len(), "label out of range");
    let max = row.iter().fold(F::neg_infinity(), |m, &v| m.max(v));
    let exps: Vec<F> = row.iter().map(|&l| (l - max).exp()).collect();
    let z = exps.iter().fold(F::zero(), |a, &b| a + b);
    let loss = -(exps[label] / z).ln();
    let mut grad = Array2::<F>::zeros(logits.raw_dim());
    for (k, &e) in exps.iter().enumerate() {
        grad[[0, k]] = e / z - if k == label { F::one() } else { F::zero() };
    }
    (loss, grad)
}
