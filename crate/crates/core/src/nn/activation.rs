use serde::{Deserialize, Serialize};

/// Elementwise activations, plus softmax over a whole layer output.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    Identity,
    Relu,
    LeakyRelu(f64),
    Tanh,
    Sigmoid,
    Softmax,
}

pub(crate) fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Numerically stable softmax (max subtraction).
pub fn softmax(z: &[f64]) -> Vec<f64> {
    let m = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let e: Vec<f64> = z.iter().map(|v| (v - m).exp()).collect();
    let s: f64 = e.iter().sum();
    e.into_iter().map(|v| v / s).collect()
}

impl Activation {
    pub fn leaky() -> Self {
        Activation::LeakyRelu(0.01)
    }

    pub fn apply(self, z: &[f64]) -> Vec<f64> {
        match self {
            Activation::Softmax => softmax(z),
            _ => z.iter().map(|&v| self.scalar(v)).collect(),
        }
    }

    pub fn scalar(self, v: f64) -> f64 {
        match self {
            Activation::Identity => v,
            Activation::Relu => v.max(0.0),
            Activation::LeakyRelu(a) => {
                if v > 0.0 {
                    v
                } else {
                    a * v
                }
            }
            Activation::Tanh => v.tanh(),
            Activation::Sigmoid => sigmoid(v),
            Activation::Softmax => panic!("softmax is not elementwise"),
        }
    }

    /// Derivative from the pre-activation `v` and output `y`.
    pub fn scalar_grad(self, v: f64, y: f64) -> f64 {
        match self {
            Activation::Identity => 1.0,
            Activation::Relu => {
                if v > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::LeakyRelu(a) => {
                if v > 0.0 {
                    1.0
                } else {
                    a
                }
            }
            Activation::Tanh => 1.0 - y * y,
            Activation::Sigmoid => y * (1.0 - y),
            Activation::Softmax => panic!("softmax is not elementwise"),
        }
    }

    /// Maps the output gradient `dy` to the pre-activation gradient.
    pub fn backward(self, z: &[f64], y: &[f64], dy: &[f64]) -> Vec<f64> {
        match self {
            Activation::Softmax => {
                let s: f64 = dy.iter().zip(y).map(|(d, p)| d * p).sum();
                y.iter().zip(dy).map(|(p, d)| p * (d - s)).collect()
            }
            Activation::Identity => dy.to_vec(),
            _ => z.iter().zip(y).zip(dy).map(|((&v, &o), &d)| d * self.scalar_grad(v, o)).collect(),
        }
    }
}
