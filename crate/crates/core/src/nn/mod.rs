//! Small network engine: tensors, layers with exact backward passes, losses,
//! Adam, finite-difference checks and checkpoints.
//!
//! Everything runs one sample at a time in `f64`. Sequences are `[T, C]`,
//! images `[H, W, C]`, vectors `[N]`.

mod activation;
mod adam;
mod attention;
pub mod checkpoint;
mod conv;
mod dense;
mod dropout;
pub mod gradcheck;
mod layer;
pub mod loss;
mod lstm;
mod network;

pub use activation::{softmax, Activation};
pub use adam::{Adam, AdamConfig};
pub use attention::FeatureAttention;
pub use conv::{Conv1d, Conv2d, MaxPool1d};
pub use dense::Dense;
pub use dropout::{Dropout, Reshape};
pub use layer::{Layer, LayerSpec};
pub use lstm::Lstm;
pub use network::Network;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum NnError {
    #[error("shape mismatch in {layer}: expected {expected:?}, got {got:?}")]
    ShapeMismatch { layer: &'static str, expected: Vec<usize>, got: Vec<usize> },
    #[error("kernel of {kernel} does not fit input length {len}")]
    KernelTooLarge { kernel: usize, len: usize },
    #[error("non-finite value produced by {0}")]
    NonFinite(String),
    #[error("invalid layer: {0}")]
    InvalidLayer(String),
    #[error("checkpoint: {0}")]
    Checkpoint(String),
    #[error("i/o: {0}")]
    Io(String),
}

impl From<std::io::Error> for NnError {
    fn from(e: std::io::Error) -> Self {
        NnError::Io(e.to_string())
    }
}

/// Dense n-dimensional array, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor {
    pub shape: Vec<usize>,
    pub data: Vec<f64>,
}

impl Tensor {
    pub fn new(shape: Vec<usize>, data: Vec<f64>) -> Result<Self, NnError> {
        if shape.iter().product::<usize>() != data.len() {
            return Err(NnError::ShapeMismatch { layer: "tensor", expected: shape, got: vec![data.len()] });
        }
        Ok(Self { shape, data })
    }

    pub fn zeros(shape: Vec<usize>) -> Self {
        let n = shape.iter().product();
        Self { shape, data: vec![0.0; n] }
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn all_finite(&self) -> bool {
        self.data.iter().all(|x| x.is_finite())
    }
}

/// A trainable tensor and its accumulated gradient.
#[derive(Debug, Clone, PartialEq)]
pub struct Param {
    pub shape: Vec<usize>,
    pub value: Vec<f64>,
    pub grad: Vec<f64>,
}

impl Param {
    pub fn zeros(shape: Vec<usize>) -> Self {
        let n: usize = shape.iter().product();
        Self { shape, value: vec![0.0; n], grad: vec![0.0; n] }
    }

    /// Glorot-style uniform initialisation in `±sqrt(6 / (fan_in + fan_out))`.
    pub fn glorot(shape: Vec<usize>, fan_in: usize, fan_out: usize, rng: &mut ChaCha8Rng) -> Self {
        let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
        let mut p = Self::zeros(shape);
        for v in &mut p.value {
            *v = rng.gen_range(-limit..limit);
        }
        p
    }

    pub fn len(&self) -> usize {
        self.value.len()
    }

    pub fn is_empty(&self) -> bool {
        self.value.is_empty()
    }

    pub fn zero_grad(&mut self) {
        self.grad.iter_mut().for_each(|g| *g = 0.0);
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Train,
    Eval,
}

/// Per-forward context: mode plus the random stream used by dropout.
#[derive(Debug)]
pub struct Ctx<'a> {
    pub mode: Mode,
    pub rng: &'a mut ChaCha8Rng,
}

/// `y += a * x`.
#[inline]
pub(crate) fn axpy(y: &mut [f64], a: f64, x: &[f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += a * xi;
    }
}

#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    // Four accumulators let the compiler vectorise without reassociating.
    let mut acc = [0.0f64; 4];
    let chunks = a.len() / 4;
    for k in 0..chunks {
        for j in 0..4 {
            acc[j] += a[4 * k + j] * b[4 * k + j];
        }
    }
    let mut s = (acc[0] + acc[1]) + (acc[2] + acc[3]);
    for k in 4 * chunks..a.len() {
        s += a[k] * b[k];
    }
    s
}
