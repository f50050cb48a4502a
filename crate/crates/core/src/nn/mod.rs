//! Differentiation and optimization substrate: trainable parameters, the
//! forward/backward block contract, finite-difference gradient checking,
//! Adam, and deterministic RNG streams.
//!
//! Training runs in `f32`; gradient checks instantiate the same blocks in
//! `f64`, where central differences are meaningful.

pub mod adam;
pub mod block;
pub mod ops;
pub mod param;
pub mod rng;

pub use adam::{Adam, AdamConfig};
pub use block::{grad_check, DiffBlock, GradReport};
pub use ops::Affine;
pub use param::{ParamDyn, Parameter};
pub use rng::{Seeds, StreamKind};

/// Scalar type the numeric stack is generic over (`f32` or `f64`).
pub trait Real: ndarray::NdFloat {
    fn from_f64(x: f64) -> Self;
    fn to_f64(self) -> f64;
    fn from_f32(x: f32) -> Self;
    fn to_f32(self) -> f32;
}

impl Real for f32 {
    fn from_f64(x: f64) -> Self {
        x as f32
    }
    fn to_f64(self) -> f64 {
        self as f64
    }
    fn from_f32(x: f32) -> Self {
        x
    }
    fn to_f32(self) -> f32 {
        self
    }
}

impl Real for f64 {
    fn from_f64(x: f64) -> Self {
        x
    }
    fn to_f64(self) -> f64 {
        self
    }
    fn from_f32(x: f32) -> Self {
        x as f64
    }
    fn to_f32(self) -> f32 {
        self as f32
    }
}
