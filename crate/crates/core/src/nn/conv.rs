use rand_chacha::ChaCha8Rng;

use super::{axpy, dot, Activation, NnError, Param, Tensor};

/// Valid 1-D cross-correlation over `[T, C_in]`; kernel stored `k x C_in x C_out`.
#[derive(Debug, Clone)]
pub struct Conv1d {
    pub kernel: usize,
    pub c_in: usize,
    pub c_out: usize,
    pub activation: Activation,
    pub w: Param,
    pub b: Param,
    cache_x: Vec<f64>,
    cache_z: Vec<f64>,
    cache_y: Vec<f64>,
    t_in: usize,
}

impl Conv1d {
    pub fn new(kernel: usize, c_in: usize, c_out: usize, activation: Activation, rng: &mut ChaCha8Rng) -> Self {
        Self {
            kernel,
            c_in,
            c_out,
            activation,
            w: Param::glorot(vec![kernel, c_in, c_out], kernel * c_in, kernel * c_out, rng),
            b: Param::zeros(vec![c_out]),
            cache_x: Vec::new(),
            cache_z: Vec::new(),
            cache_y: Vec::new(),
            t_in: 0,
        }
    }

    pub fn output_shape(&self, input: &[usize]) -> Result<Vec<usize>, NnError> {
        if input.len() != 2 || input[1] != self.c_in {
            return Err(NnError::ShapeMismatch { layer: "conv1d", expected: vec![0, self.c_in], got: input.to_vec() });
        }
        if input[0] < self.kernel {
            return Err(NnError::KernelTooLarge { kernel: self.kernel, len: input[0] });
        }
        Ok(vec![input[0] - self.kernel + 1, self.c_out])
    }

    pub fn forward(&mut self, x: &Tensor) -> Result<Tensor, NnError> {
        let shape = self.output_shape(&x.shape)?;
        let (t_out, co) = (shape[0], self.c_out);
        let span = self.kernel * self.c_in;
        let mut z = Vec::with_capacity(t_out * co);
        for t in 0..t_out {
            z.extend_from_slice(&self.b.value);
            let out = &mut z[t * co..(t + 1) * co];
            let window = &x.data[t * self.c_in..t * self.c_in + span];
            for (r, &xv) in window.iter().enumerate() {
                if xv != 0.0 {
                    axpy(out, xv, &self.w.value[r * co..(r + 1) * co]);
                }
            }
        }
        let y = self.activation.apply(&z);
        self.t_in = x.shape[0];
        self.cache_x = x.data.clone();
        self.cache_z = z;
        self.cache_y = y.clone();
        Ok(Tensor { shape, data: y })
    }

    pub fn backward(&mut self, dy: &Tensor, need_dx: bool) -> Option<Tensor> {
        let dz = self.activation.backward(&self.cache_z, &self.cache_y, &dy.data);
        let co = self.c_out;
        let span = self.kernel * self.c_in;
        let t_out = dz.len() / co;
        let mut dx = if need_dx { vec![0.0; self.cache_x.len()] } else { Vec::new() };
        for t in 0..t_out {
            let g = &dz[t * co..(t + 1) * co];
            for (gb, d) in self.b.grad.iter_mut().zip(g) {
                *gb += d;
            }
            let base = t * self.c_in;
            for r in 0..span {
                let xv = self.cache_x[base + r];
                if xv != 0.0 {
                    axpy(&mut self.w.grad[r * co..(r + 1) * co], xv, g);
                }
                if need_dx {
                    dx[base + r] += dot(&self.w.value[r * co..(r + 1) * co], g);
                }
            }
        }
        need_dx.then(|| Tensor { shape: vec![self.t_in, self.c_in], data: dx })
    }

    pub fn params(&self) -> Vec<&Param> {
        vec![&self.w, &self.b]
    }

    pub fn params_mut(&mut self) -> Vec<&mut Param> {
        vec![&mut self.w, &mut self.b]
    }
}

/// Valid 2-D cross-correlation over `[H, W, C_in]`; kernel `kh x kw x C_in x C_out`.
#[derive(Debug, Clone)]
pub struct Conv2d {
    pub kh: usize,
    pub kw: usize,
    pub c_in: usize,
    pub c_out: usize,
    pub activation: Activation,
    pub w: Param,
    pub b: Param,
    cache_x: Vec<f64>,
    cache_z: Vec<f64>,
    cache_y: Vec<f64>,
    in_shape: Vec<usize>,
}

impl Conv2d {
    pub fn new(
        kh: usize,
        kw: usize,
        c_in: usize,
        c_out: usize,
        activation: Activation,
        rng: &mut ChaCha8Rng,
    ) -> Self {
        let area = kh * kw;
        Self {
            kh,
            kw,
            c_in,
            c_out,
            activation,
            w: Param::glorot(vec![kh, kw, c_in, c_out], area * c_in, area * c_out, rng),
            b: Param::zeros(vec![c_out]),
            cache_x: Vec::new(),
            cache_z: Vec::new(),
            cache_y: Vec::new(),
            in_shape: Vec::new(),
        }
    }

    pub fn output_shape(&self, input: &[usize]) -> Result<Vec<usize>, NnError> {
        if input.len() != 3 || input[2] != self.c_in {
            return Err(NnError::ShapeMismatch { layer: "conv2d", expected: vec![0, 0, self.c_in], got: input.to_vec() });
        }
        if input[0] < self.kh {
            return Err(NnError::KernelTooLarge { kernel: self.kh, len: input[0] });
        }
        if input[1] < self.kw {
            return Err(NnError::KernelTooLarge { kernel: self.kw, len: input[1] });
        }
        Ok(vec![input[0] - self.kh + 1, input[1] - self.kw + 1, self.c_out])
    }

    pub fn forward(&mut self, x: &Tensor) -> Result<Tensor, NnError> {
        let shape = self.output_shape(&x.shape)?;
        let (ho, wo, co) = (shape[0], shape[1], self.c_out);
        let width = x.shape[1];
        let row = self.kw * self.c_in;
        let mut z = Vec::with_capacity(ho * wo * co);
        for i in 0..ho {
            for j in 0..wo {
                let o = z.len();
                z.extend_from_slice(&self.b.value);
                for a in 0..self.kh {
                    let xs = ((i + a) * width + j) * self.c_in;
                    for r in 0..row {
                        let xv = x.data[xs + r];
                        if xv != 0.0 {
                            let wr = (a * row + r) * co;
                            axpy(&mut z[o..o + co], xv, &self.w.value[wr..wr + co]);
                        }
                    }
                }
            }
        }
        let y = self.activation.apply(&z);
        self.in_shape = x.shape.clone();
        self.cache_x = x.data.clone();
        self.cache_z = z;
        self.cache_y = y.clone();
        Ok(Tensor { shape, data: y })
    }

    pub fn backward(&mut self, dy: &Tensor, need_dx: bool) -> Option<Tensor> {
        let dz = self.activation.backward(&self.cache_z, &self.cache_y, &dy.data);
        let (width, co) = (self.in_shape[1], self.c_out);
        let ho = self.in_shape[0] - self.kh + 1;
        let wo = width - self.kw + 1;
        let row = self.kw * self.c_in;
        let mut dx = if need_dx { vec![0.0; self.cache_x.len()] } else { Vec::new() };
        for i in 0..ho {
            for j in 0..wo {
                let o = (i * wo + j) * co;
                let g = &dz[o..o + co];
                for (gb, d) in self.b.grad.iter_mut().zip(g) {
                    *gb += d;
                }
                for a in 0..self.kh {
                    let xs = ((i + a) * width + j) * self.c_in;
                    for r in 0..row {
                        let wr = (a * row + r) * co;
                        let xv = self.cache_x[xs + r];
                        if xv != 0.0 {
                            axpy(&mut self.w.grad[wr..wr + co], xv, g);
                        }
                        if need_dx {
                            dx[xs + r] += dot(&self.w.value[wr..wr + co], g);
                        }
                    }
                }
            }
        }
        need_dx.then(|| Tensor { shape: self.in_shape.clone(), data: dx })
    }

    pub fn params(&self) -> Vec<&Param> {
        vec![&self.w, &self.b]
    }

    pub fn params_mut(&mut self) -> Vec<&mut Param> {
        vec![&mut self.w, &mut self.b]
    }
}

/// Non-overlapping max pooling along time of a `[T, C]` input; the tail
/// shorter than one window is dropped.
#[derive(Debug, Clone)]
pub struct MaxPool1d {
    pub size: usize,
    argmax: Vec<usize>,
    in_shape: Vec<usize>,
}

impl MaxPool1d {
    pub fn new(size: usize) -> Self {
        assert!(size > 0, "pool size must be positive");
        Self { size, argmax: Vec::new(), in_shape: Vec::new() }
    }

    pub fn output_shape(&self, input: &[usize]) -> Result<Vec<usize>, NnError> {
        if input.len() != 2 {
            return Err(NnError::ShapeMismatch { layer: "maxpool1d", expected: vec![0, 0], got: input.to_vec() });
        }
        if input[0] < self.size {
            return Err(NnError::KernelTooLarge { kernel: self.size, len: input[0] });
        }
        Ok(vec![input[0] / self.size, input[1]])
    }

    pub fn forward(&mut self, x: &Tensor) -> Result<Tensor, NnError> {
        let shape = self.output_shape(&x.shape)?;
        let c = x.shape[1];
        let mut y = Vec::with_capacity(shape[0] * c);
        self.argmax.clear();
        for p in 0..shape[0] {
            for ch in 0..c {
                let mut best = p * self.size * c + ch;
                for k in 1..self.size {
                    let idx = (p * self.size + k) * c + ch;
                    // Strict comparison keeps the first index on ties.
                    if x.data[idx] > x.data[best] {
                        best = idx;
                    }
                }
                self.argmax.push(best);
                y.push(x.data[best]);
            }
        }
        self.in_shape = x.shape.clone();
        Ok(Tensor { shape, data: y })
    }

    pub fn backward(&mut self, dy: &Tensor, need_dx: bool) -> Option<Tensor> {
        if !need_dx {
            return None;
        }
        let mut dx = vec![0.0; self.in_shape.iter().product()];
        for (&i, &g) in self.argmax.iter().zip(&dy.data) {
            dx[i] += g;
        }
        Some(Tensor { shape: self.in_shape.clone(), data: dx })
    }
}
