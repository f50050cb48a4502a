//! Core data model: recordings, windows, and labeled task datasets.

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Evaluation metric declared by a task dataset.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Metric {
    Accuracy,
    Auroc,
}

impl std::fmt::Display for Metric {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Metric::Accuracy => write!(f, "accuracy"),
            Metric::Auroc => write!(f, "auroc"),
        }
    }
}

impl std::str::FromStr for Metric {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "accuracy" => Ok(Metric::Accuracy),
            "auroc" => Ok(Metric::Auroc),
            other => Err(Error::config(format!("unknown metric '{other}'"))),
        }
    }
}

/// A continuous multichannel recording: `samples` is channels x time.
#[derive(Debug, Clone, PartialEq)]
pub struct Recording {
    pub channel_labels: Vec<String>,
    pub sfreq: f64,
    pub samples: Array2<f32>,
    pub subject_id: String,
}

impl Recording {
    pub fn new(
        channel_labels: Vec<String>,
        sfreq: f64,
        samples: Array2<f32>,
        subject_id: impl Into<String>,
    ) -> Result<Self> {
        let rec = Recording {
            channel_labels,
            sfreq,
            samples,
            subject_id: subject_id.into(),
        };
        rec.validate()?;
        Ok(rec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.channel_labels.len() != self.samples.nrows() {
            return Err(Error::shape(format!(
                "{} channel labels but {} sample rows",
                self.channel_labels.len(),
                self.samples.nrows()
            )));
        }
        if !(self.sfreq.is_finite() && self.sfreq > 0.0) {
            return Err(Error::validation(format!(
                "sampling frequency must be positive, got {}",
                self.sfreq
            )));
        }
        if self.samples.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!(
                "recording '{}' samples",
                self.subject_id
            )));
        }
        Ok(())
    }

    pub fn num_channels(&self) -> usize {
        self.samples.nrows()
    }

    pub fn num_samples(&self) -> usize {
        self.samples.ncols()
    }
}

/// A fixed-length slice of a recording, optionally labeled.
#[derive(Debug, Clone, PartialEq)]
pub struct EegWindow {
    pub samples: Array2<f32>,
    pub sfreq: f64,
    pub label: Option<usize>,
    /// (subject id, sample offset into the source recording)
    pub source: (String, usize),
}

impl EegWindow {
    pub fn num_channels(&self) -> usize {
        self.samples.nrows()
    }

    pub fn len(&self) -> usize {
        self.samples.ncols()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.ncols() == 0
    }
}

/// Labeled windows with a cross-validation fold assignment.
#[derive(Debug, Clone)]
pub struct TaskDataset {
    pub windows: Vec<EegWindow>,
    pub num_classes: usize,
    pub metric: Metric,
    pub folds: usize,
    /// `fold_assignment[i]` is the fold of `windows[i]`.
    pub fold_assignment: Vec<usize>,
    pub balanced: bool,
}

impl TaskDataset {
    pub fn validate(&self) -> Result<()> {
        if self.folds < 1 {
            return Err(Error::validation("dataset needs at least one fold"));
        }
        if self.fold_assignment.len() != self.windows.len() {
            return Err(Error::shape(format!(
                "{} windows but {} fold assignments",
                self.windows.len(),
                self.fold_assignment.len()
            )));
        }
        let (mut c, mut m) = (None, None);
        for (i, w) in self.windows.iter().enumerate() {
            let label = w
                .label
                .ok_or_else(|| Error::validation(format!("window {i} is unlabeled")))?;
            if label >= self.num_classes {
                return Err(Error::validation(format!(
                    "window {i} has label {label} >= num_classes {}",
                    self.num_classes
                )));
            }
            if w.samples.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFinite(format!("window {i} samples")));
            }
            match (c, m) {
                (None, None) => {
                    c = Some(w.num_channels());
                    m = Some(w.len());
                }
                (Some(c0), Some(m0)) => {
                    if w.num_channels() != c0 || w.len() != m0 {
                        return Err(Error::shape(format!(
                            "window {i} is {}x{} but the dataset is {c0}x{m0}",
                            w.num_channels(),
                            w.len()
                        )));
                    }
                }
                _ => unreachable!(),
            }
        }
        // Each fold must be non-empty and contain every class.
        for fold in 0..self.folds {
            let mut class_seen = vec![false; self.num_classes];
            let mut any = false;
            for (i, &f) in self.fold_assignment.iter().enumerate() {
                if f >= self.folds {
                    return Err(Error::validation(format!(
                        "window {i} assigned to fold {f} >= folds {}",
                        self.folds
                    )));
                }
                if f == fold {
                    any = true;
                    class_seen[self.windows[i].label.unwrap()] = true;
                }
            }
            if !any {
                return Err(Error::validation(format!("fold {fold} is empty")));
            }
            if class_seen.iter().any(|&s| !s) {
                return Err(Error::validation(format!(
                    "fold {fold} does not contain every class"
                )));
            }
        }
        Ok(())
    }

    pub fn labels(&self) -> Vec<usize> {
        self.windows.iter().map(|w| w.label.unwrap()).collect()
    }

    /// Indices belonging to / excluded from the given fold.
    pub fn fold_split(&self, fold: usize) -> (Vec<usize>, Vec<usize>) {
        let mut train = Vec::new();
        let mut test = Vec::new();
        for (i, &f) in self.fold_assignment.iter().enumerate() {
            if f == fold {
                test.push(i);
            } else {
                train.push(i);
            }
        }
        (train, test)
    }
}
