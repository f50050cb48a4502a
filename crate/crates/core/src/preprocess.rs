//! Deterministic preprocessing: resampling, channel selection, windowing,
//! and per-channel normalization.

use ndarray::Array2;

use crate::error::{Error, Result};
use crate::montage::Montage;
use crate::signal::{EegWindow, Recording};

/// 10/20 label synonyms (old/new naming), applied case-insensitively in
/// both directions during channel selection.
const LABEL_SYNONYMS: [(&str, &str); 4] = [("t3", "t7"), ("t4", "t8"), ("t5", "p7"), ("t6", "p8")];

fn canonical(label: &str) -> String {
    label.to_ascii_lowercase()
}

fn synonym_of(label_ci: &str) -> Option<&'static str> {
    for (a, b) in LABEL_SYNONYMS {
        if label_ci == a {
            return Some(b);
        }
        if label_ci == b {
            return Some(a);
        }
    }
    None
}

/// Select and reorder channels to match the montage.
///
/// Matching is case-insensitive and applies the T3/T7-style synonym table;
/// output rows follow montage order and take the montage's labels.
pub fn select_channels(recording: &Recording, montage: &Montage) -> Result<Recording> {
    let mut by_label = std::collections::HashMap::new();
    for (row, label) in recording.channel_labels.iter().enumerate() {
        by_label.insert(canonical(label), row);
    }
    let mut rows = Vec::with_capacity(montage.num_channels());
    let mut missing = Vec::new();
    for e in &montage.electrodes {
        let ci = canonical(&e.label);
        let found = by_label
            .get(&ci)
            .or_else(|| synonym_of(&ci).and_then(|s| by_label.get(s)));
        match found {
            Some(&row) => rows.push(row),
            None => missing.push(e.label.clone()),
        }
    }
    if !missing.is_empty() {
        return Err(Error::MissingChannels(missing));
    }
    let t = recording.num_samples();
    let mut samples = Array2::<f32>::zeros((rows.len(), t));
    for (out_row, &src_row) in rows.iter().enumerate() {
        samples
            .row_mut(out_row)
            .assign(&recording.samples.row(src_row));
    }
    Recording::new(
        montage.labels(),
        recording.sfreq,
        samples,
        recording.subject_id.clone(),
    )
}

/// Cut consecutive non-overlapping windows of `floor(length_s * sfreq)`
/// samples; a trailing remainder shorter than one window is dropped.
pub fn window(recording: &Recording, length_s: f64) -> Result<Vec<EegWindow>> {
    let len = (length_s * recording.sfreq).floor() as usize;
    if len < 1 {
        return Err(Error::validation(format!(
            "window of {length_s} s at {} Hz holds no samples",
            recording.sfreq
        )));
    }
    let t = recording.num_samples();
    let mut windows = Vec::with_capacity(t / len);
    let mut offset = 0;
    while offset + len <= t {
        let samples = recording
            .samples
            .slice(ndarray::s![.., offset..offset + len])
            .to_owned();
        windows.push(EegWindow {
            samples,
            sfreq: recording.sfreq,
            label: None,
            source: (recording.subject_id.clone(), offset),
        });
        offset += len;
    }
    Ok(windows)
}

/// Z-score each channel in place: zero mean, unit variance (population),
/// computed in double precision. Constant channels become all zeros.
pub fn zscore_channels(recording: &Recording) -> Recording {
    let mut out = recording.clone();
    for mut row in out.samples.rows_mut() {
        let n = row.len() as f64;
        let mean = row.iter().map(|&v| v as f64).sum::<f64>() / n;
        let var = row.iter().map(|&v| (v as f64 - mean).powi(2)).sum::<f64>() / n;
        let std = var.sqrt().max(1e-12);
        for v in row.iter_mut() {
            *v = ((*v as f64 - mean) / std) as f32;
        }
    }
    out
}

/// Best rational approximation L/M of `ratio` found by continued
/// fractions, with denominator capped at `max_den`.
fn rationalize(ratio: f64, max_den: u64, rel_tol: f64) -> Option<(u64, u64)> {
    let (mut h0, mut h1, mut k0, mut k1) = (0u64, 1u64, 1u64, 0u64);
    let mut x = ratio;
    for _ in 0..64 {
        let a = x.floor();
        if a < 0.0 || a > u64::MAX as f64 {
            return None;
        }
        let a_u = a as u64;
        let h2 = a_u.checked_mul(h1)?.checked_add(h0)?;
        let k2 = a_u.checked_mul(k1)?.checked_add(k0)?;
        if k2 > max_den || h2 > max_den {
            return None;
        }
        h0 = h1;
        h1 = h2;
        k0 = k1;
        k1 = k2;
        let approx = h1 as f64 / k1 as f64;
        if (approx - ratio).abs() <= rel_tol * ratio {
            return Some((h1, k1));
        }
        let frac = x - a;
        if frac.abs() < 1e-15 {
            return None;
        }
        x = 1.0 / frac;
    }
    None
}

/// Polyphase band-limited rational resampler over one channel, with edge
/// replication. The per-phase tap sums are normalized so constants are
/// exact fixed points.
struct PolyphaseResampler {
    up: u64,
    down: u64,
    taps: Vec<f64>,
    half: i64,
}

impl PolyphaseResampler {
    /// Zero crossings of the sinc per side, measured at the cutoff.
    const ZERO_CROSSINGS: u64 = 16;

    fn new(up: u64, down: u64) -> Self {
        let half = (Self::ZERO_CROSSINGS * up.max(down)) as i64;
        let n = (2 * half + 1) as usize;
        let fc = 0.5 / up.max(down) as f64; // cycles per upsampled sample
        let mut taps = vec![0.0f64; n];
        for (k, tap) in taps.iter_mut().enumerate() {
            let t = k as i64 - half;
            let sinc = if t == 0 {
                2.0 * fc
            } else {
                let arg = std::f64::consts::PI * 2.0 * fc * t as f64;
                2.0 * fc * arg.sin() / arg
            };
            // Hamming window
            let w = 0.54
                - 0.46 * (2.0 * std::f64::consts::PI * k as f64 / (n as f64 - 1.0)).cos();
            *tap = sinc * w;
        }
        PolyphaseResampler {
            up,
            down,
            taps,
            half,
        }
    }

    fn output_len(&self, input_len: usize) -> usize {
        ((input_len as f64) * (self.up as f64) / (self.down as f64)).round() as usize
    }

    fn resample(&self, x: &[f64]) -> Vec<f64> {
        let t = x.len() as i64;
        let out_len = self.output_len(x.len());
        let l = self.up as i64;
        let m = self.down as i64;
        let mut out = Vec::with_capacity(out_len);
        for j in 0..out_len as i64 {
            let p = j * m; // position on the upsampled grid
            // Input samples i with |p - i*L| <= half contribute.
            let i_lo = (p - self.half).div_euclid(l) + i64::from((p - self.half).rem_euclid(l) != 0);
            let i_hi = (p + self.half).div_euclid(l);
            let mut acc = 0.0f64;
            let mut tap_sum = 0.0f64;
            for i in i_lo..=i_hi {
                let tap = self.taps[(self.half + p - i * l) as usize];
                let xi = x[i.clamp(0, t - 1) as usize];
                acc += tap * xi;
                tap_sum += tap;
            }
            out.push(acc / tap_sum);
        }
        out
    }
}

fn linear_resample(x: &[f64], ratio: f64, out_len: usize) -> Vec<f64> {
    let t = x.len();
    let mut out = Vec::with_capacity(out_len);
    for j in 0..out_len {
        let u = j as f64 / ratio;
        let i0 = u.floor() as usize;
        let frac = u - i0 as f64;
        let a = x[i0.min(t - 1)];
        let b = x[(i0 + 1).min(t - 1)];
        out.push(a * (1.0 - frac) + b * frac);
    }
    out
}

/// Resample every channel to `target_sfreq`.
///
/// Rational ratios go through a polyphase windowed-sinc filter; ratios
/// with no small rational form fall back to linear interpolation. The
/// identity ratio returns a bit-identical copy. Output length is
/// `round(T * target / source)`.
pub fn resample(recording: &Recording, target_sfreq: f64) -> Result<Recording> {
    if !(target_sfreq.is_finite() && target_sfreq > 0.0) {
        return Err(Error::validation(format!(
            "target sampling frequency must be positive, got {target_sfreq}"
        )));
    }
    recording.validate()?;
    if target_sfreq == recording.sfreq {
        return Ok(recording.clone());
    }
    let ratio = target_sfreq / recording.sfreq;
    let t = recording.num_samples();
    if t == 0 {
        return Recording::new(
            recording.channel_labels.clone(),
            target_sfreq,
            Array2::zeros((recording.num_channels(), 0)),
            recording.subject_id.clone(),
        );
    }
    let rational = rationalize(ratio, 1024, 1e-12);
    let out_len = ((t as f64) * ratio).round() as usize;
    let mut samples = Array2::<f32>::zeros((recording.num_channels(), out_len));
    for (c, row) in recording.samples.rows().into_iter().enumerate() {
        let x: Vec<f64> = row.iter().map(|&v| v as f64).collect();
        let y = match rational {
            Some((up, down)) => PolyphaseResampler::new(up, down).resample(&x),
            None => linear_resample(&x, ratio, out_len),
        };
        debug_assert_eq!(y.len(), out_len);
        for (j, &v) in y.iter().enumerate() {
            samples[[c, j]] = v as f32;
        }
    }
    Recording::new(
        recording.channel_labels.clone(),
        target_sfreq,
        samples,
        recording.subject_id.clone(),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::Array2;

    fn rec(labels: &[&str], sfreq: f64, samples: Array2<f32>) -> Recording {
        Recording::new(
            labels.iter().map(|s| s.to_string()).collect(),
            sfreq,
            samples,
            "test-subject",
        )
        .unwrap()
    }

    fn sine_recording(freq_hz: f64, sfreq: f64, t: usize) -> Recording {
        let samples = Array2::from_shape_fn((1, t), |(_, j)| {
            (2.0 * std::f64::consts::PI * freq_hz * j as f64 / sfreq).sin() as f32
        });
        rec(&["ch0"], sfreq, samples)
    }

    #[test]
    fn resample_identity_is_bit_identical() {
        let r = sine_recording(10.0, 256.0, 512);
        let out = resample(&r, 256.0).unwrap();
        assert_eq!(out, r);
    }

    #[test]
    fn resample_constant_stays_constant() {
        let r = rec(&["a"], 160.0, Array2::from_elem((1, 480), 3.0f32));
        let out = resample(&r, 256.0).unwrap();
        assert_eq!(out.num_samples(), (480.0f64 * 1.6).round() as usize);
        assert_eq!(out.sfreq, 256.0);
        for &v in out.samples.iter() {
            assert!((v as f64 - 3.0).abs() <= 1e-9, "got {v}");
        }
    }

    #[test]
    fn resample_sinusoid_matches_analytic_oracle() {
        // 10 Hz at 160 Hz, two seconds, up to 256 Hz.
        let r = sine_recording(10.0, 160.0, 320);
        let out = resample(&r, 256.0).unwrap();
        assert_eq!(out.num_samples(), 512);
        let margin = 40; // boundary samples excluded
        let mut max_err = 0.0f64;
        for j in margin..out.num_samples() - margin {
            let expect = (2.0 * std::f64::consts::PI * 10.0 * j as f64 / 256.0).sin();
            max_err = max_err.max((out.samples[[0, j]] as f64 - expect).abs());
        }
        assert!(max_err < 0.05, "max interior error {max_err}");
    }

    #[test]
    fn resample_round_trip_correlates_for_band_limited_input() {
        // Band-limited mixture below 0.4 * min(160, 256) = 64 Hz.
        let sfreq = 160.0;
        let t = 800;
        let samples = Array2::from_shape_fn((1, t), |(_, j)| {
            let time = j as f64 / sfreq;
            ((2.0 * std::f64::consts::PI * 7.0 * time).sin()
                + 0.5 * (2.0 * std::f64::consts::PI * 23.0 * time + 1.0).sin()
                + 0.25 * (2.0 * std::f64::consts::PI * 41.0 * time + 2.0).sin()) as f32
        });
        let r = rec(&["a"], sfreq, samples);
        let up = resample(&r, 256.0).unwrap();
        let back = resample(&up, 160.0).unwrap();
        let n = r.num_samples().min(back.num_samples());
        let a: Vec<f64> = (0..n).map(|j| r.samples[[0, j]] as f64).collect();
        let b: Vec<f64> = (0..n).map(|j| back.samples[[0, j]] as f64).collect();
        let mean_a = a.iter().sum::<f64>() / n as f64;
        let mean_b = b.iter().sum::<f64>() / n as f64;
        let mut num = 0.0;
        let mut da = 0.0;
        let mut db = 0.0;
        for j in 0..n {
            num += (a[j] - mean_a) * (b[j] - mean_b);
            da += (a[j] - mean_a).powi(2);
            db += (b[j] - mean_b).powi(2);
        }
        let corr = num / (da * db).sqrt();
        assert!(corr > 0.99, "round-trip correlation {corr}");
    }

    #[test]
    fn resample_rejects_non_finite() {
        let mut samples = Array2::from_elem((1, 16), 0.0f32);
        samples[[0, 3]] = f32::NAN;
        let r = Recording {
            channel_labels: vec!["a".into()],
            sfreq: 100.0,
            samples,
            subject_id: "s".into(),
        };
        assert!(resample(&r, 200.0).is_err());
    }

    #[test]
    fn select_drops_extras_and_orders_by_montage() {
        let montage = Montage::shipped_10_20();
        let mut labels: Vec<&str> = vec!["EKG", "Cz"];
        for l in [
            "Fp1", "Fp2", "F7", "F3", "Fz", "F4", "F8", "T3", "C3", "C4", "T4", "T5", "P3", "Pz",
            "P4", "T6", "O1", "O2", "PHOTIC",
        ] {
            labels.push(l);
        }
        let c = labels.len();
        let samples = Array2::from_shape_fn((c, 4), |(i, j)| (i * 10 + j) as f32);
        let r = rec(&labels, 256.0, samples);
        let out = select_channels(&r, &montage).unwrap();
        assert_eq!(out.num_channels(), 19);
        assert_eq!(out.channel_labels, montage.labels());
        // Row for Cz must be the original row 1.
        let cz = out.samples.row(9);
        assert_eq!(cz[0], 10.0);
    }

    #[test]
    fn select_is_identity_when_already_matching() {
        let montage = Montage::shipped_10_20();
        let labels: Vec<String> = montage.labels();
        let samples = Array2::from_shape_fn((19, 8), |(i, j)| (i + j) as f32);
        let r = Recording::new(labels, 256.0, samples, "s").unwrap();
        let out = select_channels(&r, &montage).unwrap();
        assert_eq!(out, r);
    }

    #[test]
    fn select_reports_missing_channels() {
        let montage = Montage::shipped_10_20();
        let labels: Vec<String> = montage
            .labels()
            .into_iter()
            .filter(|l| l != "Cz")
            .collect();
        let samples = Array2::zeros((18, 4));
        let r = Recording::new(labels, 256.0, samples, "s").unwrap();
        let err = select_channels(&r, &montage).unwrap_err();
        assert!(err.to_string().contains("Cz"), "error was: {err}");
    }

    #[test]
    fn select_applies_synonyms() {
        let montage = Montage::shipped_10_20();
        let labels: Vec<String> = montage
            .labels()
            .iter()
            .map(|l| match l.as_str() {
                "T3" => "T7".to_string(),
                "T4" => "t8".to_string(),
                "T5" => "P7".to_string(),
                "T6" => "p8".to_string(),
                other => other.to_ascii_uppercase(),
            })
            .collect();
        let samples = Array2::from_shape_fn((19, 2), |(i, _)| i as f32);
        let r = Recording::new(labels, 256.0, samples, "s").unwrap();
        let out = select_channels(&r, &montage).unwrap();
        assert_eq!(out.channel_labels, montage.labels());
        assert_eq!(out.samples[[7, 0]], 7.0); // T3 row preserved via T7
    }

    #[test]
    fn select_is_idempotent() {
        let montage = Montage::shipped_10_20();
        let mut labels: Vec<String> = montage.labels();
        labels.push("EXTRA".into());
        let samples = Array2::from_shape_fn((20, 4), |(i, j)| (i * 4 + j) as f32);
        let r = Recording::new(labels, 256.0, samples, "s").unwrap();
        let once = select_channels(&r, &montage).unwrap();
        let twice = select_channels(&once, &montage).unwrap();
        assert_eq!(once, twice);
    }

    #[test]
    fn window_tiles_exactly() {
        let l = 64usize;
        let r = rec(
            &["a"],
            64.0,
            Array2::from_shape_fn((1, 3 * l), |(_, j)| j as f32),
        );
        let ws = window(&r, 1.0).unwrap();
        assert_eq!(ws.len(), 3);
        for (k, w) in ws.iter().enumerate() {
            assert_eq!(w.len(), l);
            assert_eq!(w.source.1, k * l);
            assert_eq!(w.samples[[0, 0]], (k * l) as f32);
        }
    }

    #[test]
    fn window_drops_remainder() {
        let l = 64usize;
        let r = rec(&["a"], 64.0, Array2::zeros((1, 3 * l + 7)));
        let ws = window(&r, 1.0).unwrap();
        assert_eq!(ws.len(), 3);
    }

    #[test]
    fn window_short_recording_is_empty() {
        let r = rec(&["a"], 64.0, Array2::zeros((1, 63)));
        let ws = window(&r, 1.0).unwrap();
        assert!(ws.is_empty());
    }

    #[test]
    fn zscore_normalizes_each_channel() {
        let samples = Array2::from_shape_fn((2, 100), |(i, j)| (i as f32 + 1.0) * j as f32);
        let r = rec(&["a", "b"], 64.0, samples);
        let z = zscore_channels(&r);
        for row in z.samples.rows() {
            let n = row.len() as f64;
            let mean = row.iter().map(|&v| v as f64).sum::<f64>() / n;
            let var = row.iter().map(|&v| (v as f64 - mean).powi(2)).sum::<f64>() / n;
            assert!(mean.abs() < 1e-6);
            assert!((var - 1.0).abs() < 1e-5);
        }
    }
}
