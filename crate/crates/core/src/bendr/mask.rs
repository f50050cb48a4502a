//! Span masking over convolved-feature positions.

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// A sampled mask: unions of length-`span` runs (clipped at the end),
/// with at least one and at most T'-1 positions masked.
#[derive(Debug, Clone, PartialEq)]
pub struct MaskSpec {
    pub p_start: f64,
    pub span: usize,
    pub mask: Vec<bool>,
}

impl MaskSpec {
    pub fn masked_count(&self) -> usize {
        self.mask.iter().filter(|&&m| m).count()
    }

    pub fn masked_indices(&self) -> Vec<usize> {
        self.mask
            .iter()
            .enumerate()
            .filter_map(|(i, &m)| m.then_some(i))
            .collect()
    }

    pub fn len(&self) -> usize {
        self.mask.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mask.is_empty()
    }
}

const MAX_RESAMPLES: usize = 16;

/// Sample a span mask: each position starts a span with probability
/// `p_start`; spans are clipped at the sequence end. Degenerate draws
/// (nothing or everything masked) are resampled a bounded number of
/// times, after which a single span at a random start is forced.
pub fn sample_mask(
    t_prime: usize,
    p_start: f64,
    span: usize,
    rng: &mut ChaCha8Rng,
) -> Result<MaskSpec> {
    if span < 1 {
        return Err(Error::validation("span must be at least 1"));
    }
    if t_prime <= span {
        return Err(Error::validation(format!(
            "sequence length {t_prime} must exceed span {span}"
        )));
    }
    if !(p_start > 0.0 && p_start < 1.0) {
        return Err(Error::validation(format!(
            "p_start must be in (0, 1), got {p_start}"
        )));
    }
    for _ in 0..MAX_RESAMPLES {
        let mut mask = vec![false; t_prime];
        for t in 0..t_prime {
            if rng.random::<f64>() < p_start {
                for m in mask.iter_mut().skip(t).take(span) {
                    *m = true;
                }
            }
        }
        let count = mask.iter().filter(|&&m| m).count();
        if count > 0 && count < t_prime {
            return Ok(MaskSpec {
                p_start,
                span,
                mask,
            });
        }
    }
    // Force one span at a random start; span < t_prime keeps at least
    // one position unmasked.
    let start = rng.random_range(0..t_prime);
    let mut mask = vec![false; t_prime];
    for m in mask.iter_mut().skip(start).take(span) {
        *m = true;
    }
    Ok(MaskSpec {
        p_start,
        span,
        mask,
    })
}
