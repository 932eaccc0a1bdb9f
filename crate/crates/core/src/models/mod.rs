//! The five architectures, training, prediction and attention export.

mod arch;
mod train;

pub use arch::{
    build_cnn, build_cnn_lstm_attention, build_lstm, build_mlp, build_v10_baseline, three_class_variant, CnnParams,
    CnnLstmParams, LstmParams, MlpParams,
};
pub use train::{balanced_class_weights, curriculum_blocks, train, EpochStats, TrainConfig, TrainHistory};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::dataset::Sample;
use crate::features::{slot_names, N_SLOTS, V1, V10};
use crate::nn::{Layer, LayerSpec, Mode, Network, NnError, Tensor};

#[derive(Debug, Error, PartialEq)]
pub enum ModelError {
    #[error(transparent)]
    Nn(#[from] NnError),
    #[error("sample shape {got:?} does not fit model input {expected:?}")]
    ShapeMismatch { expected: Vec<usize>, got: Vec<usize> },
    #[error("training diverged at epoch {epoch}: {reason}")]
    DivergenceDetected { epoch: usize, reason: String },
    #[error("{0} has no attention layer")]
    UnsupportedArchitecture(String),
    #[error("invalid training config: {0}")]
    InvalidConfig(String),
    #[error("model spec: {0}")]
    Spec(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Architecture {
    Mlp,
    Cnn,
    Lstm,
    CnnLstmA,
    CnnLstmV10,
}

impl Architecture {
    pub const ALL: [Architecture; 5] =
        [Architecture::Mlp, Architecture::Cnn, Architecture::Lstm, Architecture::CnnLstmA, Architecture::CnnLstmV10];

    pub fn as_str(self) -> &'static str {
        match self {
            Architecture::Mlp => "mlp",
            Architecture::Cnn => "cnn",
            Architecture::Lstm => "lstm",
            Architecture::CnnLstmA => "cnn_lstm_a",
            Architecture::CnnLstmV10 => "cnn_lstm_v10",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|a| a.as_str() == s)
    }

    /// Full-size spec for 139-slot samples of `steps` rows.
    pub fn full_spec(self, steps: usize) -> ModelSpec {
        match self {
            Architecture::Mlp => build_mlp(N_SLOTS, steps, &MlpParams::default()),
            Architecture::Cnn => build_cnn(steps, &CnnParams::default()),
            Architecture::Lstm => build_lstm(N_SLOTS, steps, &LstmParams::default()),
            Architecture::CnnLstmA => build_cnn_lstm_attention(N_SLOTS, steps, &CnnLstmParams::default()),
            Architecture::CnnLstmV10 => build_v10_baseline(steps, &CnnLstmParams::default()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutputMode {
    Binary,
    ThreeClass,
}

impl OutputMode {
    pub fn n_classes(self) -> usize {
        match self {
            OutputMode::Binary => 2,
            OutputMode::ThreeClass => 3,
        }
    }
}

/// Which sample columns a model reads.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeatureSelection {
    /// Every column of the sample.
    All,
    /// The 40 raw book slots.
    Basic,
    /// The wall-clock hour slot only.
    ClockOnly,
}

impl FeatureSelection {
    pub fn columns(&self, available: usize) -> Result<Vec<usize>, ModelError> {
        let need = |n: usize| {
            if available < n {
                Err(ModelError::ShapeMismatch { expected: vec![n], got: vec![available] })
            } else {
                Ok(())
            }
        };
        match self {
            FeatureSelection::All => Ok((0..available).collect()),
            FeatureSelection::Basic => {
                need(V1.end)?;
                Ok(V1.collect())
            }
            FeatureSelection::ClockOnly => {
                need(V10 + 1)?;
                Ok(vec![V10])
            }
        }
    }
}

/// Declarative model: architecture, input layout and layer stack.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub architecture: Architecture,
    pub output: OutputMode,
    pub steps: usize,
    pub features: usize,
    pub selection: FeatureSelection,
    /// Tensor shape fed to the first layer, `[steps, features]` or with a
    /// trailing channel axis for 2-D convolution.
    pub input_shape: Vec<usize>,
    pub layers: Vec<LayerSpec>,
}

impl ModelSpec {
    /// Input shape followed by each layer's output shape.
    pub fn shape_chain(&self) -> Result<Vec<Vec<usize>>, ModelError> {
        let mut chain = vec![self.input_shape.clone()];
        for l in &self.layers {
            let next = l.output_shape(chain.last().unwrap())?;
            chain.push(next);
        }
        Ok(chain)
    }

    pub fn to_text(&self) -> String {
        toml::to_string(self).expect("model spec serialises")
    }

    pub fn from_text(s: &str) -> Result<Self, ModelError> {
        let spec: ModelSpec = toml::from_str(s).map_err(|e| ModelError::Spec(e.to_string()))?;
        spec.shape_chain()?;
        Ok(spec)
    }

    /// Stable hash of the textual spec, stored in checkpoints.
    pub fn arch_hash(&self) -> u64 {
        let d = Sha256::digest(self.to_text().as_bytes());
        u64::from_le_bytes(d[..8].try_into().unwrap())
    }
}

/// A spec with live weights.
#[derive(Debug, Clone)]
pub struct Model {
    pub spec: ModelSpec,
    pub net: Network,
    columns: Vec<usize>,
}

/// Per-feature attention weights of one sample.
#[derive(Debug, Clone, PartialEq)]
pub struct AttentionReport {
    pub weights: Vec<f64>,
    pub names: Vec<String>,
}

impl AttentionReport {
    /// Indices of the `k` largest weights, descending, ties by index.
    pub fn top(&self, k: usize) -> Vec<usize> {
        let mut idx: Vec<usize> = (0..self.weights.len()).collect();
        idx.sort_by(|&a, &b| self.weights[b].total_cmp(&self.weights[a]).then(a.cmp(&b)));
        idx.truncate(k);
        idx
    }
}

impl Model {
    pub fn new(spec: ModelSpec, seed: u64) -> Result<Self, ModelError> {
        spec.shape_chain()?;
        let net = Network::new(&spec.input_shape, &spec.layers, seed)?;
        let columns = match spec.selection {
            FeatureSelection::All => (0..spec.features).collect(),
            ref s => s.columns(N_SLOTS)?,
        };
        if columns.len() != spec.features {
            return Err(ModelError::ShapeMismatch { expected: vec![spec.features], got: vec![columns.len()] });
        }
        Ok(Self { spec, net, columns })
    }

    /// Selects the model's columns from a sample and shapes them for the network.
    pub fn input(&self, s: &Sample) -> Result<Tensor, ModelError> {
        let fits = s.steps == self.spec.steps
            && match self.spec.selection {
                FeatureSelection::All => s.features == self.spec.features,
                _ => s.features > *self.columns.iter().max().unwrap(),
            };
        if !fits {
            return Err(ModelError::ShapeMismatch {
                expected: vec![self.spec.steps, self.spec.features],
                got: vec![s.steps, s.features],
            });
        }
        let data = if self.spec.selection == FeatureSelection::All {
            s.matrix.clone()
        } else {
            let mut d = Vec::with_capacity(s.steps * self.columns.len());
            for t in 0..s.steps {
                let row = s.row(t);
                d.extend(self.columns.iter().map(|&c| row[c]));
            }
            d
        };
        Ok(Tensor::new(self.spec.input_shape.clone(), data)?)
    }

    /// Class probabilities: one value for binary models, three for the
    /// direction variant.
    pub fn predict(&mut self, s: &Sample) -> Result<Vec<f64>, ModelError> {
        let x = self.input(s)?;
        Ok(self.net.forward(&x, Mode::Eval)?.data)
    }

    /// Predicted class: `p >= 0.5` for binary, argmax for three classes.
    pub fn predict_class(&mut self, s: &Sample) -> Result<u8, ModelError> {
        let p = self.predict(s)?;
        Ok(if p.len() == 1 { classify(p[0]) } else { argmax(&p) as u8 })
    }

    pub fn predict_batch(&mut self, samples: &[&Sample]) -> Result<Vec<Vec<f64>>, ModelError> {
        samples.iter().map(|s| self.predict(s)).collect()
    }

    pub fn export_attention(&mut self, s: &Sample) -> Result<AttentionReport, ModelError> {
        let x = self.input(s)?;
        let Some(Layer::FeatureAttention(att)) = self.net.layers().first() else {
            return Err(ModelError::UnsupportedArchitecture(self.spec.architecture.as_str().into()));
        };
        let weights = att.weights(&x.data);
        let all = slot_names();
        let names = if self.spec.selection == FeatureSelection::All && self.spec.features != N_SLOTS {
            (0..self.spec.features).map(|k| format!("f{k}")).collect()
        } else {
            self.columns.iter().map(|&c| all[c].clone()).collect()
        };
        Ok(AttentionReport { weights, names })
    }
}

/// Rounds a probability: `p >= 0.5` is a jump.
pub fn classify(p: f64) -> u8 {
    (p >= 0.5) as u8
}

pub fn argmax(v: &[f64]) -> usize {
    let mut best = 0;
    for (k, x) in v.iter().enumerate() {
        if *x > v[best] {
            best = k;
        }
    }
    best
}
