//! A desk-scale foundation model for multichannel EEG that couples a
//! channel-graph GNN front-end with a masked-autoencoder backbone:
//! montage geometry, graph construction, GCN/GAT/GraphSAGE layers,
//! sequence-length adjusters, convolutional + transformer pre-training
//! with a contrastive objective, two fine-tuning head configurations, and
//! a cross-validated evaluation harness over synthetic EEG with planted
//! inter-channel structure.

pub mod adjuster;
pub mod bendr;


pub mod error;
pub mod gnn;
pub mod graph;
pub mod montage;
pub mod nn;
pub mod pipeline;
pub mod preprocess;
pub mod signal;
pub mod storage;
pub mod synth;

pub use error::{Error, Result};
pub use graph::{build_edge_weights, geodesic_distance, EdgeWeightMatrix};
pub use montage::{Electrode, Montage};
pub use signal::{EegWindow, Metric, Recording, TaskDataset};
