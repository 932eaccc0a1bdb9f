use super::{Architecture, FeatureSelection, ModelSpec, OutputMode};
use crate::features::V1;
use crate::nn::{Activation, LayerSpec};

#[derive(Debug, Clone, PartialEq)]
pub struct MlpParams {
    pub hidden: [usize; 2],
}

impl Default for MlpParams {
    fn default() -> Self {
        Self { hidden: [40, 40] }
    }
}

impl MlpParams {
    pub fn tiny() -> Self {
        Self { hidden: [3, 3] }
    }
}

/// Layer sizes of the convolutional stack. The 2-D kernel always spans the
/// full feature width.
#[derive(Debug, Clone, PartialEq)]
pub struct CnnParams {
    pub features: usize,
    pub conv2d: (usize, usize),
    pub conv_a: (usize, usize),
    pub pool_a: usize,
    pub conv_b: (usize, usize),
    pub conv_c: (usize, usize),
    pub pool_b: usize,
    pub dense: usize,
}

impl Default for CnnParams {
    fn default() -> Self {
        Self {
            features: V1.len(),
            conv2d: (16, 4),
            conv_a: (16, 4),
            pool_a: 2,
            conv_b: (32, 3),
            conv_c: (32, 3),
            pool_b: 2,
            dense: 32,
        }
    }
}

impl CnnParams {
    /// Smallest useful stack for `T=8`, `F=5`.
    pub fn tiny() -> Self {
        Self {
            features: 5,
            conv2d: (2, 2),
            conv_a: (2, 2),
            pool_a: 2,
            conv_b: (2, 2),
            conv_c: (2, 1),
            pool_b: 2,
            dense: 3,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LstmParams {
    pub units: usize,
    pub dense: usize,
}

impl Default for LstmParams {
    fn default() -> Self {
        Self { units: 40, dense: 40 }
    }
}

impl LstmParams {
    pub fn tiny() -> Self {
        Self { units: 3, dense: 3 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CnnLstmParams {
    pub filters: usize,
    pub kernel: usize,
    pub pool: usize,
    pub units: usize,
    pub dropout: f64,
    pub dense: usize,
}

impl Default for CnnLstmParams {
    fn default() -> Self {
        Self { filters: 32, kernel: 5, pool: 2, units: 40, dropout: 0.5, dense: 40 }
    }
}

impl CnnLstmParams {
    pub fn tiny() -> Self {
        Self { filters: 2, kernel: 2, pool: 2, units: 3, dropout: 0.5, dense: 3 }
    }
}

fn head(hidden: usize) -> [LayerSpec; 2] {
    [
        LayerSpec::Dense { units: hidden, activation: Activation::leaky() },
        LayerSpec::Dense { units: 1, activation: Activation::Sigmoid },
    ]
}

fn spec(
    architecture: Architecture,
    steps: usize,
    features: usize,
    selection: FeatureSelection,
    input_shape: Vec<usize>,
    layers: Vec<LayerSpec>,
) -> ModelSpec {
    ModelSpec { architecture, output: OutputMode::Binary, steps, features, selection, input_shape, layers }
}

pub fn build_mlp(features: usize, steps: usize, p: &MlpParams) -> ModelSpec {
    let mut layers = vec![
        LayerSpec::Flatten,
        LayerSpec::Dense { units: p.hidden[0], activation: Activation::leaky() },
    ];
    layers.extend(head(p.hidden[1]));
    spec(Architecture::Mlp, steps, features, FeatureSelection::All, vec![steps, features], layers)
}

/// Convolutional model on the raw book slots. With the default parameters
/// it reads the 40 `v1` columns of a full sample.
pub fn build_cnn(steps: usize, p: &CnnParams) -> ModelSpec {
    let leaky = Activation::leaky();
    let rows = steps.saturating_sub(p.conv2d.1) + 1;
    let mut layers = vec![
        LayerSpec::Conv2d { filters: p.conv2d.0, kernel_h: p.conv2d.1, kernel_w: p.features, activation: leaky },
        LayerSpec::Reshape { shape: vec![rows, p.conv2d.0] },
        LayerSpec::Conv1d { filters: p.conv_a.0, kernel: p.conv_a.1, activation: leaky },
        LayerSpec::MaxPool1d { size: p.pool_a },
        LayerSpec::Conv1d { filters: p.conv_b.0, kernel: p.conv_b.1, activation: leaky },
        LayerSpec::Conv1d { filters: p.conv_c.0, kernel: p.conv_c.1, activation: leaky },
        LayerSpec::MaxPool1d { size: p.pool_b },
        LayerSpec::Flatten,
    ];
    layers.extend(head(p.dense));
    let selection = if p.features == V1.len() { FeatureSelection::Basic } else { FeatureSelection::All };
    spec(Architecture::Cnn, steps, p.features, selection, vec![steps, p.features, 1], layers)
}

pub fn build_lstm(features: usize, steps: usize, p: &LstmParams) -> ModelSpec {
    let mut layers = vec![LayerSpec::Lstm {
        units: p.units,
        hidden_activation: Activation::Tanh,
        input_dropout: 0.0,
        recurrent_dropout: 0.0,
        return_sequences: false,
    }];
    layers.extend(head(p.dense));
    spec(Architecture::Lstm, steps, features, FeatureSelection::All, vec![steps, features], layers)
}

fn attention_stack(p: &CnnLstmParams) -> Vec<LayerSpec> {
    let mut layers = vec![
        LayerSpec::FeatureAttention,
        LayerSpec::Conv1d { filters: p.filters, kernel: p.kernel, activation: Activation::leaky() },
        LayerSpec::MaxPool1d { size: p.pool },
        LayerSpec::Lstm {
            units: p.units,
            hidden_activation: Activation::Relu,
            input_dropout: p.dropout,
            recurrent_dropout: p.dropout,
            return_sequences: false,
        },
    ];
    layers.extend(head(p.dense));
    layers
}

pub fn build_cnn_lstm_attention(features: usize, steps: usize, p: &CnnLstmParams) -> ModelSpec {
    spec(Architecture::CnnLstmA, steps, features, FeatureSelection::All, vec![steps, features], attention_stack(p))
}

/// The attention stack fed only the clock slot.
pub fn build_v10_baseline(steps: usize, p: &CnnLstmParams) -> ModelSpec {
    spec(Architecture::CnnLstmV10, steps, 1, FeatureSelection::ClockOnly, vec![steps, 1], attention_stack(p))
}

/// Replaces the single sigmoid output with a three-way softmax.
pub fn three_class_variant(s: &ModelSpec) -> ModelSpec {
    let mut out = s.clone();
    out.output = OutputMode::ThreeClass;
    if let Some(last) = out.layers.last_mut() {
        *last = LayerSpec::Dense { units: 3, activation: Activation::Softmax };
    }
    out
}
