use rand_chacha::ChaCha8Rng;

use super::{softmax, NnError, Param, Tensor};

/// Softmax weighting over the feature axis of a `[T, F]` input.
///
/// Each feature's time series is scored as `s_f = tanh(sum_t w_t X[t, f] + b)`;
/// `alpha = softmax(s)` over features is repeated on every time step and
/// multiplied into the input.
#[derive(Debug, Clone)]
pub struct FeatureAttention {
    pub steps: usize,
    pub features: usize,
    pub w: Param,
    pub b: Param,
    cache_x: Vec<f64>,
    cache_s: Vec<f64>,
    cache_alpha: Vec<f64>,
}

impl FeatureAttention {
    pub fn new(steps: usize, features: usize, rng: &mut ChaCha8Rng) -> Self {
        Self {
            steps,
            features,
            w: Param::glorot(vec![steps], steps, 1, rng),
            b: Param::zeros(vec![1]),
            cache_x: Vec::new(),
            cache_s: Vec::new(),
            cache_alpha: Vec::new(),
        }
    }

    pub fn output_shape(&self, input: &[usize]) -> Result<Vec<usize>, NnError> {
        if input != [self.steps, self.features] {
            return Err(NnError::ShapeMismatch {
                layer: "feature_attention",
                expected: vec![self.steps, self.features],
                got: input.to_vec(),
            });
        }
        Ok(input.to_vec())
    }

    /// Attention weights for an input, without caching.
    pub fn weights(&self, x: &[f64]) -> Vec<f64> {
        softmax(&self.scores(x))
    }

    fn scores(&self, x: &[f64]) -> Vec<f64> {
        let f = self.features;
        let mut z = vec![self.b.value[0]; f];
        for t in 0..self.steps {
            let wt = self.w.value[t];
            for (zf, xv) in z.iter_mut().zip(&x[t * f..(t + 1) * f]) {
                *zf += wt * xv;
            }
        }
        z.into_iter().map(f64::tanh).collect()
    }

    pub fn forward(&mut self, x: &Tensor) -> Result<Tensor, NnError> {
        let shape = self.output_shape(&x.shape)?;
        let s = self.scores(&x.data);
        let alpha = softmax(&s);
        let f = self.features;
        let y = x.data.iter().enumerate().map(|(k, v)| v * alpha[k % f]).collect();
        self.cache_x = x.data.clone();
        self.cache_s = s;
        self.cache_alpha = alpha;
        Ok(Tensor { shape, data: y })
    }

    pub fn last_weights(&self) -> &[f64] {
        &self.cache_alpha
    }

    pub fn backward(&mut self, dy: &Tensor, need_dx: bool) -> Option<Tensor> {
        let f = self.features;
        let x = &self.cache_x;
        let alpha = &self.cache_alpha;
        let mut dalpha = vec![0.0; f];
        for (k, (d, v)) in dy.data.iter().zip(x).enumerate() {
            dalpha[k % f] += d * v;
        }
        let mix: f64 = dalpha.iter().zip(alpha).map(|(d, a)| d * a).sum();
        let dz: Vec<f64> = (0..f)
            .map(|j| {
                let ds = alpha[j] * (dalpha[j] - mix);
                ds * (1.0 - self.cache_s[j] * self.cache_s[j])
            })
            .collect();
        self.b.grad[0] += dz.iter().sum::<f64>();
        for t in 0..self.steps {
            let row = &x[t * f..(t + 1) * f];
            self.w.grad[t] += row.iter().zip(&dz).map(|(v, d)| v * d).sum::<f64>();
        }
        if !need_dx {
            return None;
        }
        let mut dx = Vec::with_capacity(x.len());
        for t in 0..self.steps {
            let wt = self.w.value[t];
            for j in 0..f {
                dx.push(dy.data[t * f + j] * alpha[j] + dz[j] * wt);
            }
        }
        Some(Tensor { shape: vec![self.steps, f], data: dx })
    }

    pub fn params(&self) -> Vec<&Param> {
        vec![&self.w, &self.b]
    }

    pub fn params_mut(&mut self) -> Vec<&mut Param> {
        vec![&mut self.w, &mut self.b]
    }
}
