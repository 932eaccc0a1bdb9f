use rand_chacha::ChaCha8Rng;

use super::{axpy, dot, Activation, NnError, Param, Tensor};

/// Fully connected layer on the flattened input: `y = act(x W + b)`, with
/// `W` stored `in x out`.
#[derive(Debug, Clone)]
pub struct Dense {
    pub n_in: usize,
    pub n_out: usize,
    pub activation: Activation,
    pub w: Param,
    pub b: Param,
    cache_x: Vec<f64>,
    cache_z: Vec<f64>,
    cache_y: Vec<f64>,
    in_shape: Vec<usize>,
}

impl Dense {
    pub fn new(n_in: usize, n_out: usize, activation: Activation, rng: &mut ChaCha8Rng) -> Self {
        Self {
            n_in,
            n_out,
            activation,
            w: Param::glorot(vec![n_in, n_out], n_in, n_out, rng),
            b: Param::zeros(vec![n_out]),
            cache_x: Vec::new(),
            cache_z: Vec::new(),
            cache_y: Vec::new(),
            in_shape: Vec::new(),
        }
    }

    pub fn output_shape(&self, input: &[usize]) -> Result<Vec<usize>, NnError> {
        if input.iter().product::<usize>() != self.n_in {
            return Err(NnError::ShapeMismatch { layer: "dense", expected: vec![self.n_in], got: input.to_vec() });
        }
        Ok(vec![self.n_out])
    }

    /// Pre-activation values.
    pub fn linear(&self, x: &[f64]) -> Vec<f64> {
        let mut z = self.b.value.clone();
        for (i, &xi) in x.iter().enumerate() {
            if xi != 0.0 {
                axpy(&mut z, xi, &self.w.value[i * self.n_out..(i + 1) * self.n_out]);
            }
        }
        z
    }

    pub fn forward(&mut self, x: &Tensor) -> Result<Tensor, NnError> {
        self.output_shape(&x.shape)?;
        let z = self.linear(&x.data);
        let y = self.activation.apply(&z);
        self.in_shape = x.shape.clone();
        self.cache_x = x.data.clone();
        self.cache_z = z;
        self.cache_y = y.clone();
        Ok(Tensor { shape: vec![self.n_out], data: y })
    }

    pub fn backward(&mut self, dy: &Tensor, need_dx: bool) -> Option<Tensor> {
        let dz = self.activation.backward(&self.cache_z, &self.cache_y, &dy.data);
        self.backward_preactivation(&dz, need_dx)
    }

    /// Backward from a gradient on the pre-activation, used by fused loss heads.
    pub fn backward_preactivation(&mut self, dz: &[f64], need_dx: bool) -> Option<Tensor> {
        for (gb, d) in self.b.grad.iter_mut().zip(dz) {
            *gb += d;
        }
        for (i, &xi) in self.cache_x.iter().enumerate() {
            if xi != 0.0 {
                axpy(&mut self.w.grad[i * self.n_out..(i + 1) * self.n_out], xi, dz);
            }
        }
        if !need_dx {
            return None;
        }
        let dx = (0..self.n_in).map(|i| dot(&self.w.value[i * self.n_out..(i + 1) * self.n_out], dz)).collect();
        Some(Tensor { shape: self.in_shape.clone(), data: dx })
    }

    pub fn params(&self) -> Vec<&Param> {
        vec![&self.w, &self.b]
    }

    pub fn params_mut(&mut self) -> Vec<&mut Param> {
        vec![&mut self.w, &mut self.b]
    }

    pub fn last_output(&self) -> &[f64] {
        &self.cache_y
    }
}
