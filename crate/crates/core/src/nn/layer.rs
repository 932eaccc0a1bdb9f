use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{
    Activation, Conv1d, Conv2d, Ctx, Dense, Dropout, FeatureAttention, Lstm, MaxPool1d, NnError, Param, Reshape,
    Tensor,
};

/// Declarative layer description; input sizes come from the preceding shape.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum LayerSpec {
    Dense { units: usize, activation: Activation },
    Conv1d { filters: usize, kernel: usize, activation: Activation },
    Conv2d { filters: usize, kernel_h: usize, kernel_w: usize, activation: Activation },
    MaxPool1d { size: usize },
    Lstm { units: usize, hidden_activation: Activation, input_dropout: f64, recurrent_dropout: f64, return_sequences: bool },
    FeatureAttention,
    Dropout { p: f64 },
    Reshape { shape: Vec<usize> },
    Flatten,
}

impl LayerSpec {
    /// Output shape for a given input shape, without allocating parameters.
    pub fn output_shape(&self, input: &[usize]) -> Result<Vec<usize>, NnError> {
        let n: usize = input.iter().product();
        let valid = |len: usize, k: usize| {
            if len < k {
                Err(NnError::KernelTooLarge { kernel: k, len })
            } else {
                Ok(len - k + 1)
            }
        };
        let rank = |r: usize, layer: &'static str| {
            if input.len() != r {
                Err(NnError::ShapeMismatch { layer, expected: vec![0; r], got: input.to_vec() })
            } else {
                Ok(())
            }
        };
        match self {
            LayerSpec::Dense { units, .. } => Ok(vec![*units]),
            LayerSpec::Conv1d { filters, kernel, .. } => {
                rank(2, "conv1d")?;
                Ok(vec![valid(input[0], *kernel)?, *filters])
            }
            LayerSpec::Conv2d { filters, kernel_h, kernel_w, .. } => {
                rank(3, "conv2d")?;
                Ok(vec![valid(input[0], *kernel_h)?, valid(input[1], *kernel_w)?, *filters])
            }
            LayerSpec::MaxPool1d { size } => {
                rank(2, "maxpool1d")?;
                if input[0] < *size || *size == 0 {
                    return Err(NnError::KernelTooLarge { kernel: *size, len: input[0] });
                }
                Ok(vec![input[0] / size, input[1]])
            }
            LayerSpec::Lstm { units, return_sequences, .. } => {
                rank(2, "lstm")?;
                Ok(if *return_sequences { vec![input[0], *units] } else { vec![*units] })
            }
            LayerSpec::FeatureAttention => {
                rank(2, "feature_attention")?;
                Ok(input.to_vec())
            }
            LayerSpec::Dropout { .. } => Ok(input.to_vec()),
            LayerSpec::Reshape { shape } => {
                if shape.iter().product::<usize>() != n {
                    return Err(NnError::ShapeMismatch { layer: "reshape", expected: shape.clone(), got: input.to_vec() });
                }
                Ok(shape.clone())
            }
            LayerSpec::Flatten => Ok(vec![n]),
        }
    }
}

/// A live layer with parameters and forward caches.
#[derive(Debug, Clone)]
pub enum Layer {
    Dense(Dense),
    Conv1d(Conv1d),
    Conv2d(Conv2d),
    MaxPool1d(MaxPool1d),
    Lstm(Lstm),
    FeatureAttention(FeatureAttention),
    Dropout(Dropout),
    Reshape(Reshape),
}

impl Layer {
    pub fn build(spec: &LayerSpec, input: &[usize], rng: &mut ChaCha8Rng) -> Result<Layer, NnError> {
        let out = spec.output_shape(input)?;
        let n: usize = input.iter().product();
        Ok(match spec {
            LayerSpec::Dense { units, activation } => Layer::Dense(Dense::new(n, *units, *activation, rng)),
            LayerSpec::Conv1d { filters, kernel, activation } => {
                Layer::Conv1d(Conv1d::new(*kernel, input[1], *filters, *activation, rng))
            }
            LayerSpec::Conv2d { filters, kernel_h, kernel_w, activation } => {
                Layer::Conv2d(Conv2d::new(*kernel_h, *kernel_w, input[2], *filters, *activation, rng))
            }
            LayerSpec::MaxPool1d { size } => Layer::MaxPool1d(MaxPool1d::new(*size)),
            LayerSpec::Lstm { units, hidden_activation, input_dropout, recurrent_dropout, return_sequences } => {
                for p in [input_dropout, recurrent_dropout] {
                    if !(0.0..1.0).contains(p) {
                        return Err(NnError::InvalidLayer(format!("dropout probability {p} outside [0, 1)")));
                    }
                }
                Layer::Lstm(Lstm::new(
                    input[1],
                    *units,
                    *hidden_activation,
                    *input_dropout,
                    *recurrent_dropout,
                    *return_sequences,
                    rng,
                ))
            }
            LayerSpec::FeatureAttention => Layer::FeatureAttention(FeatureAttention::new(input[0], input[1], rng)),
            LayerSpec::Dropout { p } => Layer::Dropout(Dropout::new(*p)?),
            LayerSpec::Reshape { .. } | LayerSpec::Flatten => Layer::Reshape(Reshape::new(out)),
        })
    }

    pub fn name(&self) -> &'static str {
        match self {
            Layer::Dense(_) => "dense",
            Layer::Conv1d(_) => "conv1d",
            Layer::Conv2d(_) => "conv2d",
            Layer::MaxPool1d(_) => "maxpool1d",
            Layer::Lstm(_) => "lstm",
            Layer::FeatureAttention(_) => "feature_attention",
            Layer::Dropout(_) => "dropout",
            Layer::Reshape(_) => "reshape",
        }
    }

    pub fn forward(&mut self, x: &Tensor, ctx: &mut Ctx) -> Result<Tensor, NnError> {
        match self {
            Layer::Dense(l) => l.forward(x),
            Layer::Conv1d(l) => l.forward(x),
            Layer::Conv2d(l) => l.forward(x),
            Layer::MaxPool1d(l) => l.forward(x),
            Layer::Lstm(l) => l.forward(x, ctx),
            Layer::FeatureAttention(l) => l.forward(x),
            Layer::Dropout(l) => Ok(l.forward(x, ctx)),
            Layer::Reshape(l) => l.forward(x),
        }
    }

    /// Accumulates parameter gradients; returns the input gradient when asked.
    pub fn backward(&mut self, dy: &Tensor, need_dx: bool) -> Option<Tensor> {
        match self {
            Layer::Dense(l) => l.backward(dy, need_dx),
            Layer::Conv1d(l) => l.backward(dy, need_dx),
            Layer::Conv2d(l) => l.backward(dy, need_dx),
            Layer::MaxPool1d(l) => l.backward(dy, need_dx),
            Layer::Lstm(l) => l.backward(dy, need_dx),
            Layer::FeatureAttention(l) => l.backward(dy, need_dx),
            Layer::Dropout(l) => need_dx.then(|| l.backward(dy)),
            Layer::Reshape(l) => need_dx.then(|| l.backward(dy)),
        }
    }

    pub fn params(&self) -> Vec<&Param> {
        match self {
            Layer::Dense(l) => l.params(),
            Layer::Conv1d(l) => l.params(),
            Layer::Conv2d(l) => l.params(),
            Layer::Lstm(l) => l.params(),
            Layer::FeatureAttention(l) => l.params(),
            Layer::MaxPool1d(_) | Layer::Dropout(_) | Layer::Reshape(_) => Vec::new(),
        }
    }

    pub fn params_mut(&mut self) -> Vec<&mut Param> {
        match self {
            Layer::Dense(l) => l.params_mut(),
            Layer::Conv1d(l) => l.params_mut(),
            Layer::Conv2d(l) => l.params_mut(),
            Layer::Lstm(l) => l.params_mut(),
            Layer::FeatureAttention(l) => l.params_mut(),
            Layer::MaxPool1d(_) | Layer::Dropout(_) | Layer::Reshape(_) => Vec::new(),
        }
    }
}
