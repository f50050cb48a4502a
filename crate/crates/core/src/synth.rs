//! Synthetic EEG generators.
//!
//! The pre-training corpus mimics resting multichannel EEG: per-channel
//! oscillations mixed across channels with geometry-dependent strength.
//! The task generator plants a class label in the phase relation between
//! one electrode pair, keeping single-channel marginals identical across
//! classes, so the label is recoverable only from inter-channel structure.

use ndarray::Array2;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::graph::geodesic_distance;
use crate::montage::Montage;
use crate::preprocess::zscore_channels;
use crate::signal::{EegWindow, Metric, Recording, TaskDataset};

const CORPUS_STREAM_BASE: u64 = 1 << 32;
const TASK_STREAM_BASE: u64 = 2 << 32;

fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

fn uniform(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    lo + (hi - lo) * rng.random::<f64>()
}

/// Generate `num_recordings` synthetic recordings over the montage.
///
/// Each channel carries band-limited oscillations at channel-distinct
/// frequencies; channels are then mixed by a matrix whose off-diagonal
/// strength decays with geodesic distance, white noise is added, and each
/// channel is z-scored. Fully determined by `seed`.
pub fn generate_pretrain_corpus(
    seed: u64,
    num_recordings: usize,
    montage: &Montage,
    duration_s: f64,
    sfreq: f64,
) -> Result<Vec<Recording>> {
    if num_recordings < 1 {
        return Err(Error::validation("num_recordings must be at least 1"));
    }
    montage.validate()?;
    if !(sfreq > 0.0 && duration_s > 0.0) {
        return Err(Error::validation("duration and sfreq must be positive"));
    }
    let c = montage.num_channels();
    let t = (duration_s * sfreq).floor() as usize;
    if t < 2 {
        return Err(Error::validation("duration too short"));
    }

    // Geometry-dependent mixing: identity plus distance-decaying coupling.
    let mixing_gamma = 0.5;
    let mixing_lambda = 0.5; // radians of arc
    let mut mixing = Array2::<f64>::eye(c);
    for i in 0..c {
        for j in 0..c {
            if i != j {
                let d = geodesic_distance(
                    montage.electrodes[i].position(),
                    montage.electrodes[j].position(),
                    montage.radius,
                )?;
                mixing[[i, j]] = mixing_gamma * (-d / mixing_lambda).exp();
            }
        }
    }

    let nyquist_cap = (0.45 * sfreq).min(40.0);
    let f_lo = 1.0f64.min(nyquist_cap * 0.5);

    let mut out = Vec::with_capacity(num_recordings);
    for rec_idx in 0..num_recordings {
        let mut rng = stream_rng(seed, CORPUS_STREAM_BASE + rec_idx as u64);
        // Channel-distinct base frequencies on a jittered grid.
        let mut sources = Array2::<f64>::zeros((c, t));
        for ch in 0..c {
            let grid = f_lo + (nyquist_cap - f_lo) * (ch as f64 + uniform(&mut rng, 0.1, 0.9))
                / c as f64;
            let comp2 = uniform(&mut rng, f_lo, nyquist_cap);
            let comp3 = uniform(&mut rng, f_lo, nyquist_cap);
            let phases = [
                uniform(&mut rng, 0.0, std::f64::consts::TAU),
                uniform(&mut rng, 0.0, std::f64::consts::TAU),
                uniform(&mut rng, 0.0, std::f64::consts::TAU),
            ];
            for ti in 0..t {
                let time = ti as f64 / sfreq;
                let tau = std::f64::consts::TAU;
                sources[[ch, ti]] = (tau * grid * time + phases[0]).sin()
                    + 0.5 * (tau * comp2 * time + phases[1]).sin()
                    + 0.25 * (tau * comp3 * time + phases[2]).sin();
            }
        }
        let mixed = mixing.dot(&sources);
        let mut samples = Array2::<f32>::zeros((c, t));
        for ch in 0..c {
            for ti in 0..t {
                let noise = 0.1 * (rng.random::<f64>() * 2.0 - 1.0);
                samples[[ch, ti]] = (mixed[[ch, ti]] + noise) as f32;
            }
        }
        let rec = Recording::new(
            montage.labels(),
            sfreq,
            samples,
            format!("synth-{seed}-{rec_idx:04}"),
        )?;
        out.push(zscore_channels(&rec));
    }
    Ok(out)
}

/// Parameters of the planted inter-channel task.
#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TaskGenParams {
    /// Frequency of the planted oscillation (Hz).
    pub planted_freq_hz: f64,
    /// Lag (in samples) of the coupled channel relative to its partner.
    pub planted_lag: usize,
    /// Amplitude of the planted oscillation on the coupled pair.
    pub planted_amp: f64,
    /// Amplitude of the channel-specific background component.
    pub channel_amp: f64,
    /// White-noise amplitude.
    pub noise_amp: f64,
    /// Amplitude of the same-frequency distractor on non-coupled channels.
    pub distractor_amp: f64,
    /// Negative-class phase offsets are drawn uniformly from
    /// [margin, 360 - margin] degrees, keeping them away from coherence.
    pub neg_phase_margin_deg: f64,
}

impl Default for TaskGenParams {
    fn default() -> Self {
        TaskGenParams {
            planted_freq_hz: 10.0,
            planted_lag: 3,
            planted_amp: 1.0,
            channel_amp: 0.3,
            noise_amp: 0.2,
            distractor_amp: 1.0,
            neg_phase_margin_deg: 72.0,
        }
    }
}

/// Specification of a synthetic task dataset.
#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TaskSpec {
    pub num_windows: usize,
    pub window_s: f64,
    pub sfreq: f64,
    pub coupled_pair: (String, String),
    pub class_balance: f64,
    pub metric: Metric,
    pub folds: usize,
    #[serde(default)]
    pub gen: TaskGenParams,
}

/// Generate a labeled task dataset whose classes differ only in the
/// phase relation of the coupled electrode pair.
pub fn generate_task(seed: u64, montage: &Montage, spec: &TaskSpec) -> Result<TaskDataset> {
    montage.validate()?;
    let a = montage.index_of(&spec.coupled_pair.0).ok_or_else(|| {
        Error::validation(format!(
            "coupled channel '{}' not in montage",
            spec.coupled_pair.0
        ))
    })?;
    let b = montage.index_of(&spec.coupled_pair.1).ok_or_else(|| {
        Error::validation(format!(
            "coupled channel '{}' not in montage",
            spec.coupled_pair.1
        ))
    })?;
    if a == b {
        return Err(Error::validation("coupled pair must be two distinct channels"));
    }
    if !(spec.class_balance > 0.0 && spec.class_balance < 1.0) {
        return Err(Error::validation(format!(
            "class_balance must be in (0, 1), got {}",
            spec.class_balance
        )));
    }
    if spec.folds < 1 {
        return Err(Error::validation("folds must be at least 1"));
    }
    let c = montage.num_channels();
    let m = (spec.window_s * spec.sfreq).floor() as usize;
    if m < 2 {
        return Err(Error::validation("window too short"));
    }
    let num_pos = ((spec.num_windows as f64) * spec.class_balance).round() as usize;
    if num_pos == 0 || num_pos == spec.num_windows {
        return Err(Error::validation(
            "class balance leaves one class empty at this window count",
        ));
    }

    let tau = std::f64::consts::TAU;
    let p = &spec.gen;
    let omega = tau * p.planted_freq_hz / spec.sfreq; // rad per sample
    let lag_phase = omega * p.planted_lag as f64;
    let margin = p.neg_phase_margin_deg.to_radians();

    let nyquist_cap = 0.45 * spec.sfreq;
    let mut windows = Vec::with_capacity(spec.num_windows);
    for idx in 0..spec.num_windows {
        let positive = idx < num_pos;
        let mut rng = stream_rng(seed, TASK_STREAM_BASE + idx as u64);
        let mut samples = Array2::<f32>::zeros((c, m));
        // Phase of the planted oscillation on channel `a`.
        let phi_a = uniform(&mut rng, 0.0, tau);
        let delta = if positive {
            0.0
        } else {
            uniform(&mut rng, margin, tau - margin)
        };
        let phi_b = phi_a - lag_phase + delta;
        for ch in 0..c {
            let own_freq = uniform(&mut rng, 1.0f64.min(nyquist_cap * 0.5), nyquist_cap);
            let own_phase = uniform(&mut rng, 0.0, tau);
            let distractor_phase = uniform(&mut rng, 0.0, tau);
            for ti in 0..m {
                let mut v = p.channel_amp * (tau * own_freq * ti as f64 / spec.sfreq + own_phase)
                    .sin()
                    + p.noise_amp * (rng.random::<f64>() * 2.0 - 1.0);
                if ch == a {
                    v += p.planted_amp * (omega * ti as f64 + phi_a).sin();
                } else if ch == b {
                    v += p.planted_amp * (omega * ti as f64 + phi_b).sin();
                } else {
                    v += p.distractor_amp * (omega * ti as f64 + distractor_phase).sin();
                }
                samples[[ch, ti]] = v as f32;
            }
        }
        let rec = Recording::new(
            montage.labels(),
            spec.sfreq,
            samples,
            format!("task-{seed}-{idx:05}"),
        )?;
        let rec = zscore_channels(&rec);
        windows.push(EegWindow {
            samples: rec.samples,
            sfreq: spec.sfreq,
            label: Some(if positive { 1 } else { 0 }),
            source: (rec.subject_id, 0),
        });
    }

    // Stratified round-robin fold assignment within each class.
    let mut fold_assignment = vec![0usize; spec.num_windows];
    let mut per_class_count = [0usize; 2];
    for (i, w) in windows.iter().enumerate() {
        let label = w.label.unwrap();
        fold_assignment[i] = per_class_count[label] % spec.folds;
        per_class_count[label] += 1;
    }

    let dataset = TaskDataset {
        windows,
        num_classes: 2,
        metric: spec.metric,
        folds: spec.folds,
        fold_assignment,
        balanced: (spec.class_balance - 0.5).abs() < 1e-9,
    };
    dataset.validate()?;
    Ok(dataset)
}

/// Normalized cross-correlation of two rows at the given non-negative lag
/// (`y` shifted back by `lag`). Used as the oracle for planted coupling.
pub fn cross_correlation_at_lag(x: &[f32], y: &[f32], lag: usize) -> f64 {
    assert_eq!(x.len(), y.len());
    assert!(lag < x.len());
    let n = x.len() - lag;
    let (mut num, mut dx, mut dy) = (0.0f64, 0.0f64, 0.0f64);
    for t in 0..n {
        let a = x[t] as f64;
        let b = y[t + lag] as f64;
        num += a * b;
        dx += a * a;
        dy += b * b;
    }
    if dx == 0.0 || dy == 0.0 {
        return 0.0;
    }
    num / (dx * dy).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn task_spec() -> TaskSpec {
        TaskSpec {
            num_windows: 200,
            window_s: 2.0,
            sfreq: 64.0,
            coupled_pair: ("P3".into(), "Pz".into()),
            class_balance: 0.5,
            metric: Metric::Accuracy,
            folds: 4,
            gen: TaskGenParams::default(),
        }
    }

    #[test]
    fn corpus_is_deterministic_and_seed_sensitive() {
        let montage = Montage::shipped_10_20();
        let a = generate_pretrain_corpus(1, 2, &montage, 4.0, 64.0).unwrap();
        let b = generate_pretrain_corpus(1, 2, &montage, 4.0, 64.0).unwrap();
        assert_eq!(a, b);
        let c = generate_pretrain_corpus(2, 2, &montage, 4.0, 64.0).unwrap();
        assert!(a[0].samples != c[0].samples);
    }

    #[test]
    fn corpus_channels_are_normalized() {
        let montage = Montage::shipped_10_20();
        let recs = generate_pretrain_corpus(7, 1, &montage, 60.0, 64.0).unwrap();
        for row in recs[0].samples.rows() {
            let n = row.len() as f64;
            let mean = row.iter().map(|&v| v as f64).sum::<f64>() / n;
            let var = row.iter().map(|&v| (v as f64 - mean).powi(2)).sum::<f64>() / n;
            assert!(mean.abs() < 0.1, "mean {mean}");
            assert!((var - 1.0).abs() < 0.05, "var {var}");
        }
    }

    #[test]
    fn task_is_deterministic() {
        let montage = Montage::shipped_10_20();
        let spec = task_spec();
        let a = generate_task(3, &montage, &spec).unwrap();
        let b = generate_task(3, &montage, &spec).unwrap();
        assert_eq!(a.fold_assignment, b.fold_assignment);
        assert_eq!(a.labels(), b.labels());
        for (wa, wb) in a.windows.iter().zip(&b.windows) {
            assert_eq!(wa.samples, wb.samples);
        }
    }

    #[test]
    fn class_balance_is_exact() {
        let montage = Montage::shipped_10_20();
        let mut spec = task_spec();
        spec.num_windows = 100;
        let ds = generate_task(5, &montage, &spec).unwrap();
        let pos = ds.labels().iter().filter(|&&l| l == 1).count();
        assert_eq!(pos, 50);

        spec.num_windows = 200;
        spec.class_balance = 0.3;
        spec.metric = Metric::Auroc;
        let ds = generate_task(5, &montage, &spec).unwrap();
        let pos = ds.labels().iter().filter(|&&l| l == 1).count();
        assert_eq!(pos, 60);
        assert!(!ds.balanced);
    }

    #[test]
    fn planted_lag_cross_correlation_separates_classes() {
        let montage = Montage::shipped_10_20();
        let spec = task_spec();
        let ds = generate_task(11, &montage, &spec).unwrap();
        let a = montage.index_of("P3").unwrap();
        let b = montage.index_of("Pz").unwrap();
        let lag = spec.gen.planted_lag;
        let (mut pos_sum, mut pos_n, mut neg_sum, mut neg_n) = (0.0, 0, 0.0, 0);
        for w in &ds.windows {
            let xa: Vec<f32> = w.samples.row(a).to_vec();
            let xb: Vec<f32> = w.samples.row(b).to_vec();
            let r = cross_correlation_at_lag(&xa, &xb, lag);
            if w.label == Some(1) {
                pos_sum += r;
                pos_n += 1;
            } else {
                neg_sum += r;
                neg_n += 1;
            }
        }
        let mean_pos = pos_sum / pos_n as f64;
        let mean_neg = neg_sum / neg_n as f64;
        assert!(
            mean_pos - mean_neg >= 0.4,
            "separation {mean_pos} - {mean_neg}"
        );
        assert!(mean_pos >= 0.6, "positive coupling too weak: {mean_pos}");
        assert!(mean_neg <= 0.2, "negative coupling too strong: {mean_neg}");
    }

    #[test]
    fn marginals_match_across_classes() {
        // Per-channel variance must not leak the label.
        let montage = Montage::shipped_10_20();
        let ds = generate_task(13, &montage, &task_spec()).unwrap();
        let c = ds.windows[0].num_channels();
        for ch in 0..c {
            let (mut vp, mut np, mut vn, mut nn) = (0.0f64, 0, 0.0f64, 0);
            for w in &ds.windows {
                let var = w
                    .samples
                    .row(ch)
                    .iter()
                    .map(|&v| (v as f64).powi(2))
                    .sum::<f64>()
                    / w.len() as f64;
                if w.label == Some(1) {
                    vp += var;
                    np += 1;
                } else {
                    vn += var;
                    nn += 1;
                }
            }
            let ratio = (vp / np as f64) / (vn / nn as f64);
            assert!((ratio - 1.0).abs() < 0.05, "channel {ch} variance ratio {ratio}");
        }
    }

    #[test]
    fn missing_coupled_channel_is_an_error() {
        let montage = Montage::shipped_10_20();
        let mut spec = task_spec();
        spec.coupled_pair = ("P3".into(), "Nope".into());
        assert!(generate_task(1, &montage, &spec).is_err());
    }

    #[test]
    fn folds_are_stratified() {
        let montage = Montage::shipped_10_20();
        let ds = generate_task(17, &montage, &task_spec()).unwrap();
        for fold in 0..ds.folds {
            let pos = ds
                .fold_assignment
                .iter()
                .zip(&ds.windows)
                .filter(|(&f, w)| f == fold && w.label == Some(1))
                .count();
            let neg = ds
                .fold_assignment
                .iter()
                .zip(&ds.windows)
                .filter(|(&f, w)| f == fold && w.label == Some(0))
                .count();
            assert_eq!(pos, 25);
            assert_eq!(neg, 25);
        }
    }
}
