//! On-disk formats: the binary recording container and the JSON manifests
//! for pre-training corpora and task datasets.
//!
//! Recording container layout:
//!   8-byte magic `EEGREC01`
//!   u32 little-endian header length
//!   UTF-8 JSON header {channel_labels, sfreq, n_channels, n_samples, subject_id}
//!   payload: n_channels * n_samples IEEE-754 f32 little-endian, row-major

use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::signal::{EegWindow, Metric, Recording, TaskDataset};

pub const RECORDING_MAGIC: &[u8; 8] = b"EEGREC01";

#[derive(Debug, Serialize, Deserialize)]
struct RecordingHeader {
    channel_labels: Vec<String>,
    sfreq: f64,
    n_channels: usize,
    n_samples: usize,
    subject_id: String,
}

pub fn save_recording(recording: &Recording, path: impl AsRef<Path>) -> Result<()> {
    recording.validate()?;
    let header = RecordingHeader {
        channel_labels: recording.channel_labels.clone(),
        sfreq: recording.sfreq,
        n_channels: recording.num_channels(),
        n_samples: recording.num_samples(),
        subject_id: recording.subject_id.clone(),
    };
    let header_bytes = serde_json::to_vec(&header)?;
    let mut file = std::io::BufWriter::new(std::fs::File::create(path)?);
    file.write_all(RECORDING_MAGIC)?;
    file.write_all(&(header_bytes.len() as u32).to_le_bytes())?;
    file.write_all(&header_bytes)?;
    for &v in recording.samples.iter() {
        file.write_all(&v.to_le_bytes())?;
    }
    file.flush()?;
    Ok(())
}

pub fn load_recording(path: impl AsRef<Path>) -> Result<Recording> {
    let mut file = std::io::BufReader::new(std::fs::File::open(path.as_ref())?);
    let mut magic = [0u8; 8];
    file.read_exact(&mut magic)
        .map_err(|_| Error::format("file too short for a recording header"))?;
    if &magic != RECORDING_MAGIC {
        return Err(Error::format(format!(
            "unknown recording format version (magic {:?})",
            String::from_utf8_lossy(&magic)
        )));
    }
    let mut len_bytes = [0u8; 4];
    file.read_exact(&mut len_bytes)
        .map_err(|_| Error::format("truncated header length"))?;
    let header_len = u32::from_le_bytes(len_bytes) as usize;
    let mut header_bytes = vec![0u8; header_len];
    file.read_exact(&mut header_bytes)
        .map_err(|_| Error::format("truncated header"))?;
    let header: RecordingHeader = serde_json::from_slice(&header_bytes)
        .map_err(|e| Error::format(format!("malformed header: {e}")))?;
    if header.channel_labels.len() != header.n_channels {
        return Err(Error::format(format!(
            "header declares {} channels but lists {} labels",
            header.n_channels,
            header.channel_labels.len()
        )));
    }
    let expected = header.n_channels * header.n_samples * 4;
    let mut payload = Vec::with_capacity(expected);
    file.read_to_end(&mut payload)?;
    if payload.len() != expected {
        return Err(Error::format(format!(
            "payload size mismatch: expected {} bytes for {}x{}, found {}",
            expected,
            header.n_channels,
            header.n_samples,
            payload.len()
        )));
    }
    let mut samples = Array2::<f32>::zeros((header.n_channels, header.n_samples));
    for (k, chunk) in payload.chunks_exact(4).enumerate() {
        let v = f32::from_le_bytes([chunk[0], chunk[1], chunk[2], chunk[3]]);
        samples[[k / header.n_samples, k % header.n_samples]] = v;
    }
    Recording::new(header.channel_labels, header.sfreq, samples, header.subject_id)
}

/// Manifest listing the recordings of a pre-training corpus. Paths are
/// relative to the manifest file.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CorpusManifest {
    pub sfreq: f64,
    pub recordings: Vec<String>,
}

impl CorpusManifest {
    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, serde_json::to_string_pretty(self)?)?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<(Self, PathBuf)> {
        let path = path.as_ref();
        let manifest: CorpusManifest = serde_json::from_str(&std::fs::read_to_string(path)?)?;
        let base = path.parent().unwrap_or(Path::new(".")).to_path_buf();
        Ok((manifest, base))
    }

    pub fn load_recordings(&self, base: &Path) -> Result<Vec<Recording>> {
        self.recordings
            .iter()
            .map(|rel| load_recording(base.join(rel)))
            .collect()
    }
}

/// One labeled window entry in a task manifest.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TaskWindowEntry {
    pub path: String,
    pub label: usize,
    pub fold: usize,
}

/// Manifest describing a task dataset: window files, labels, folds,
/// metric, and class-balance declaration.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TaskManifest {
    pub metric: Metric,
    pub folds: usize,
    pub num_classes: usize,
    pub balanced: bool,
    pub windows: Vec<TaskWindowEntry>,
}

/// Write a task dataset into `dir`: one recording file per window plus
/// `manifest.json`.
pub fn save_task_dataset(dataset: &TaskDataset, dir: impl AsRef<Path>) -> Result<PathBuf> {
    dataset.validate()?;
    let dir = dir.as_ref();
    std::fs::create_dir_all(dir)?;
    let mut entries = Vec::with_capacity(dataset.windows.len());
    for (i, w) in dataset.windows.iter().enumerate() {
        let name = format!("w{i:05}.eegrec");
        let rec = Recording {
            channel_labels: (0..w.num_channels()).map(|c| format!("ch{c}")).collect(),
            sfreq: w.sfreq,
            samples: w.samples.clone(),
            subject_id: w.source.0.clone(),
        };
        save_recording(&rec, dir.join(&name))?;
        entries.push(TaskWindowEntry {
            path: name,
            label: w.label.unwrap(),
            fold: dataset.fold_assignment[i],
        });
    }
    let manifest = TaskManifest {
        metric: dataset.metric,
        folds: dataset.folds,
        num_classes: dataset.num_classes,
        balanced: dataset.balanced,
        windows: entries,
    };
    let manifest_path = dir.join("manifest.json");
    std::fs::write(&manifest_path, serde_json::to_string_pretty(&manifest)?)?;
    Ok(manifest_path)
}

/// Load a task dataset from its manifest file.
pub fn load_task_dataset(manifest_path: impl AsRef<Path>) -> Result<TaskDataset> {
    let manifest_path = manifest_path.as_ref();
    let manifest: TaskManifest =
        serde_json::from_str(&std::fs::read_to_string(manifest_path)?)?;
    let base = manifest_path.parent().unwrap_or(Path::new("."));
    let mut windows = Vec::with_capacity(manifest.windows.len());
    let mut fold_assignment = Vec::with_capacity(manifest.windows.len());
    for entry in &manifest.windows {
        let rec = load_recording(base.join(&entry.path))?;
        windows.push(EegWindow {
            samples: rec.samples,
            sfreq: rec.sfreq,
            label: Some(entry.label),
            source: (rec.subject_id, 0),
        });
        fold_assignment.push(entry.fold);
    }
    let dataset = TaskDataset {
        windows,
        num_classes: manifest.num_classes,
        metric: manifest.metric,
        folds: manifest.folds,
        fold_assignment,
        balanced: manifest.balanced,
    };
    dataset.validate()?;
    Ok(dataset)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::Array2;

    fn sample_recording() -> Recording {
        let samples = Array2::from_shape_fn((3, 17), |(i, j)| (i as f32 + 0.25) * (j as f32 - 3.5));
        Recording::new(
            vec!["a".into(), "b".into(), "c".into()],
            250.0,
            samples,
            "subj-1",
        )
        .unwrap()
    }

    #[test]
    fn round_trip_is_bit_exact() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("r.eegrec");
        let rec = sample_recording();
        save_recording(&rec, &path).unwrap();
        let loaded = load_recording(&path).unwrap();
        assert_eq!(loaded, rec);
        // Byte-identical on re-save as well.
        let path2 = dir.path().join("r2.eegrec");
        save_recording(&loaded, &path2).unwrap();
        assert_eq!(std::fs::read(&path).unwrap(), std::fs::read(&path2).unwrap());
    }

    #[test]
    fn truncated_payload_is_detected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("r.eegrec");
        save_recording(&sample_recording(), &path).unwrap();
        let bytes = std::fs::read(&path).unwrap();
        std::fs::write(&path, &bytes[..bytes.len() - 4]).unwrap();
        let err = load_recording(&path).unwrap_err();
        assert!(
            err.to_string().contains("payload size mismatch"),
            "error was: {err}"
        );
    }

    #[test]
    fn unknown_magic_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("r.eegrec");
        save_recording(&sample_recording(), &path).unwrap();
        let mut bytes = std::fs::read(&path).unwrap();
        bytes[7] = b'9';
        std::fs::write(&path, &bytes).unwrap();
        let err = load_recording(&path).unwrap_err();
        assert!(
            err.to_string().contains("unknown recording format version"),
            "error was: {err}"
        );
    }

    #[test]
    fn malformed_header_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("r.eegrec");
        let mut bytes = Vec::new();
        bytes.extend_from_slice(RECORDING_MAGIC);
        bytes.extend_from_slice(&8u32.to_le_bytes());
        bytes.extend_from_slice(b"not json");
        std::fs::write(&path, &bytes).unwrap();
        let err = load_recording(&path).unwrap_err();
        assert!(err.to_string().contains("malformed header"));
    }
}
