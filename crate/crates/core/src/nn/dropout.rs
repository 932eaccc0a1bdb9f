use rand::Rng;

use super::{Ctx, Mode, NnError, Tensor};

/// Inverted dropout: in training each unit is zeroed with probability `p`
/// and survivors are scaled by `1 / (1 - p)`; evaluation is the identity.
#[derive(Debug, Clone)]
pub struct Dropout {
    pub p: f64,
    mask: Vec<f64>,
}

impl Dropout {
    pub fn new(p: f64) -> Result<Self, NnError> {
        if !(0.0..1.0).contains(&p) {
            return Err(NnError::InvalidLayer(format!("dropout probability {p} outside [0, 1)")));
        }
        Ok(Self { p, mask: Vec::new() })
    }

    pub fn forward(&mut self, x: &Tensor, ctx: &mut Ctx) -> Tensor {
        if ctx.mode == Mode::Eval || self.p == 0.0 {
            self.mask.clear();
            return x.clone();
        }
        let keep = 1.0 / (1.0 - self.p);
        self.mask = (0..x.len()).map(|_| if ctx.rng.gen::<f64>() < self.p { 0.0 } else { keep }).collect();
        Tensor { shape: x.shape.clone(), data: x.data.iter().zip(&self.mask).map(|(v, m)| v * m).collect() }
    }

    pub fn backward(&self, dy: &Tensor) -> Tensor {
        if self.mask.is_empty() {
            return dy.clone();
        }
        Tensor { shape: dy.shape.clone(), data: dy.data.iter().zip(&self.mask).map(|(d, m)| d * m).collect() }
    }
}

/// Reinterprets the input with a new shape of equal size.
#[derive(Debug, Clone)]
pub struct Reshape {
    pub shape: Vec<usize>,
    in_shape: Vec<usize>,
}

impl Reshape {
    pub fn new(shape: Vec<usize>) -> Self {
        Self { shape, in_shape: Vec::new() }
    }

    pub fn output_shape(&self, input: &[usize]) -> Result<Vec<usize>, NnError> {
        if input.iter().product::<usize>() != self.shape.iter().product::<usize>() {
            return Err(NnError::ShapeMismatch { layer: "reshape", expected: self.shape.clone(), got: input.to_vec() });
        }
        Ok(self.shape.clone())
    }

    pub fn forward(&mut self, x: &Tensor) -> Result<Tensor, NnError> {
        let shape = self.output_shape(&x.shape)?;
        self.in_shape = x.shape.clone();
        Ok(Tensor { shape, data: x.data.clone() })
    }

    pub fn backward(&self, dy: &Tensor) -> Tensor {
        Tensor { shape: self.in_shape.clone(), data: dy.data.clone() }
    }
}
