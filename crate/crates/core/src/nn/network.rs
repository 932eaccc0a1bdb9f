use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{Ctx, Layer, LayerSpec, Mode, NnError, Param, Tensor};

/// A sequential stack of layers.
#[derive(Debug, Clone)]
pub struct Network {
    specs: Vec<LayerSpec>,
    layers: Vec<Layer>,
    shapes: Vec<Vec<usize>>,
    rng: ChaCha8Rng,
}

impl Network {
    /// Builds and initialises every layer from `seed`; dropout draws from a
    /// separate stream derived from the same seed.
    pub fn new(input_shape: &[usize], specs: &[LayerSpec], seed: u64) -> Result<Self, NnError> {
        let mut init = ChaCha8Rng::seed_from_u64(seed);
        let mut shapes = vec![input_shape.to_vec()];
        let mut layers = Vec::with_capacity(specs.len());
        for spec in specs {
            let input = shapes.last().unwrap().clone();
            layers.push(Layer::build(spec, &input, &mut init)?);
            shapes.push(spec.output_shape(&input)?);
        }
        Ok(Self { specs: specs.to_vec(), layers, shapes, rng: ChaCha8Rng::seed_from_u64(seed ^ 0xD80F_0A7E) })
    }

    /// Input shape followed by every layer's output shape.
    pub fn shape_chain(&self) -> &[Vec<usize>] {
        &self.shapes
    }

    pub fn input_shape(&self) -> &[usize] {
        &self.shapes[0]
    }

    pub fn output_size(&self) -> usize {
        self.shapes.last().unwrap().iter().product()
    }

    pub fn specs(&self) -> &[LayerSpec] {
        &self.specs
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    pub fn layers_mut(&mut self) -> &mut [Layer] {
        &mut self.layers
    }

    /// Reseeds the dropout stream.
    pub fn reseed_dropout(&mut self, seed: u64) {
        self.rng = ChaCha8Rng::seed_from_u64(seed);
    }

    pub fn forward(&mut self, x: &Tensor, mode: Mode) -> Result<Tensor, NnError> {
        let mut rng = std::mem::replace(&mut self.rng, ChaCha8Rng::seed_from_u64(0));
        let out = self.forward_with(x, &mut Ctx { mode, rng: &mut rng });
        self.rng = rng;
        out
    }

    pub fn forward_with(&mut self, x: &Tensor, ctx: &mut Ctx) -> Result<Tensor, NnError> {
        if x.shape != self.shapes[0] {
            return Err(NnError::ShapeMismatch { layer: "input", expected: self.shapes[0].clone(), got: x.shape.clone() });
        }
        let mut h = x.clone();
        for (k, layer) in self.layers.iter_mut().enumerate() {
            h = layer.forward(&h, ctx)?;
            debug_assert_eq!(h.shape, self.shapes[k + 1]);
        }
        if !h.all_finite() {
            return Err(NnError::NonFinite("network output".into()));
        }
        Ok(h)
    }

    /// Backpropagates an output gradient through the last forward pass.
    pub fn backward(&mut self, dy: &Tensor) {
        self.backprop(dy, false);
    }

    /// Like [`Network::backward`] but also returns the gradient on the input.
    pub fn backward_input(&mut self, dy: &Tensor) -> Tensor {
        self.backprop(dy, true).expect("input gradient requested")
    }

    fn backprop(&mut self, dy: &Tensor, need_input: bool) -> Option<Tensor> {
        let mut g = dy.clone();
        let n = self.layers.len();
        for k in (0..n).rev() {
            g = self.layers[k].backward(&g, k > 0 || need_input)?;
        }
        Some(g)
    }

    /// Backpropagates from the pre-activation of a final dense layer, the
    /// stable path for sigmoid and softmax heads trained with cross-entropy.
    pub fn backward_from_logits(&mut self, dz: &[f64]) -> Result<(), NnError> {
        let n = self.layers.len();
        let Some(Layer::Dense(last)) = self.layers.last_mut() else {
            return Err(NnError::InvalidLayer("fused loss needs a dense output layer".into()));
        };
        let Some(mut g) = last.backward_preactivation(dz, n > 1) else {
            return Ok(());
        };
        for k in (0..n - 1).rev() {
            match self.layers[k].backward(&g, k > 0) {
                Some(dx) => g = dx,
                None => break,
            }
        }
        Ok(())
    }

    pub fn params(&self) -> Vec<&Param> {
        self.layers.iter().flat_map(|l| l.params()).collect()
    }

    pub fn params_mut(&mut self) -> Vec<&mut Param> {
        self.layers.iter_mut().flat_map(|l| l.params_mut()).collect()
    }

    pub fn param_count(&self) -> usize {
        self.params().iter().map(|p| p.len()).sum()
    }

    pub fn zero_grad(&mut self) {
        self.params_mut().into_iter().for_each(Param::zero_grad);
    }

    pub fn param_values(&self) -> Vec<Vec<f64>> {
        self.params().iter().map(|p| p.value.clone()).collect()
    }

    pub fn set_param_values(&mut self, values: &[Vec<f64>]) -> Result<(), NnError> {
        let mut params = self.params_mut();
        if params.len() != values.len() || params.iter().zip(values).any(|(p, v)| p.len() != v.len()) {
            return Err(NnError::ShapeMismatch {
                layer: "parameters",
                expected: params.iter().map(|p| p.len()).collect(),
                got: values.iter().map(Vec::len).collect(),
            });
        }
        for (p, v) in params.iter_mut().zip(values) {
            p.value.copy_from_slice(v);
        }
        Ok(())
    }
}
