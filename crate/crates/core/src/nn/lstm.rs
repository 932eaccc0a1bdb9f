use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::activation::sigmoid;
use super::{axpy, dot, Activation, Ctx, Mode, NnError, Param, Tensor};

/// Gated recurrent layer over `[T, C]`.
///
/// Gate blocks are ordered `i, f, g, o` in the `4U` columns of `wx`
/// (`C x 4U`), `wh` (`U x 4U`) and `b`. Gates use the logistic function, the
/// cell candidate uses tanh and the hidden output squash is configurable.
/// Dropout masks on the input and recurrent connections are drawn once per
/// sequence and scaled by `1 / (1 - p)`.
#[derive(Debug, Clone)]
pub struct Lstm {
    pub c_in: usize,
    pub units: usize,
    pub hidden_activation: Activation,
    pub input_dropout: f64,
    pub recurrent_dropout: f64,
    pub return_sequences: bool,
    pub wx: Param,
    pub wh: Param,
    pub b: Param,
    cache: Vec<Step>,
    mask_x: Vec<f64>,
    mask_h: Vec<f64>,
}

#[derive(Debug, Clone)]
struct Step {
    x: Vec<f64>,
    h_prev: Vec<f64>,
    c_prev: Vec<f64>,
    /// Gate activations `i, f, g, o`.
    gates: Vec<f64>,
    c: Vec<f64>,
    hc: Vec<f64>,
}

impl Lstm {
    pub fn new(
        c_in: usize,
        units: usize,
        hidden_activation: Activation,
        input_dropout: f64,
        recurrent_dropout: f64,
        return_sequences: bool,
        rng: &mut ChaCha8Rng,
    ) -> Self {
        let g = 4 * units;
        let mut b = Param::zeros(vec![g]);
        b.value[units..2 * units].iter_mut().for_each(|v| *v = 1.0);
        Self {
            c_in,
            units,
            hidden_activation,
            input_dropout,
            recurrent_dropout,
            return_sequences,
            wx: Param::glorot(vec![c_in, g], c_in, g, rng),
            wh: Param::glorot(vec![units, g], units, g, rng),
            b,
            cache: Vec::new(),
            mask_x: Vec::new(),
            mask_h: Vec::new(),
        }
    }

    pub fn output_shape(&self, input: &[usize]) -> Result<Vec<usize>, NnError> {
        if input.len() != 2 || input[1] != self.c_in || input[0] == 0 {
            return Err(NnError::ShapeMismatch { layer: "lstm", expected: vec![0, self.c_in], got: input.to_vec() });
        }
        Ok(if self.return_sequences { vec![input[0], self.units] } else { vec![self.units] })
    }

    fn mask(n: usize, p: f64, ctx: &mut Ctx) -> Vec<f64> {
        if ctx.mode == Mode::Eval || p == 0.0 {
            return Vec::new();
        }
        let keep = 1.0 / (1.0 - p);
        (0..n).map(|_| if ctx.rng.gen::<f64>() < p { 0.0 } else { keep }).collect()
    }

    pub fn forward(&mut self, x: &Tensor, ctx: &mut Ctx) -> Result<Tensor, NnError> {
        let shape = self.output_shape(&x.shape)?;
        let (t_len, u) = (x.shape[0], self.units);
        self.mask_x = Self::mask(self.c_in, self.input_dropout, ctx);
        self.mask_h = Self::mask(u, self.recurrent_dropout, ctx);
        self.cache.clear();
        let mut h = vec![0.0; u];
        let mut c = vec![0.0; u];
        let mut out = Vec::with_capacity(if self.return_sequences { t_len * u } else { u });
        for t in 0..t_len {
            let mut xt = x.data[t * self.c_in..(t + 1) * self.c_in].to_vec();
            if !self.mask_x.is_empty() {
                xt.iter_mut().zip(&self.mask_x).for_each(|(v, m)| *v *= m);
            }
            let mut hp = h.clone();
            if !self.mask_h.is_empty() {
                hp.iter_mut().zip(&self.mask_h).for_each(|(v, m)| *v *= m);
            }
            let mut a = self.b.value.clone();
            for (k, &v) in xt.iter().enumerate() {
                if v != 0.0 {
                    axpy(&mut a, v, &self.wx.value[k * 4 * u..(k + 1) * 4 * u]);
                }
            }
            for (k, &v) in hp.iter().enumerate() {
                if v != 0.0 {
                    axpy(&mut a, v, &self.wh.value[k * 4 * u..(k + 1) * 4 * u]);
                }
            }
            for j in 0..u {
                a[j] = sigmoid(a[j]);
                a[u + j] = sigmoid(a[u + j]);
                a[2 * u + j] = a[2 * u + j].tanh();
                a[3 * u + j] = sigmoid(a[3 * u + j]);
            }
            let c_prev = c.clone();
            for j in 0..u {
                c[j] = a[u + j] * c_prev[j] + a[j] * a[2 * u + j];
            }
            let hc: Vec<f64> = c.iter().map(|&v| self.hidden_activation.scalar(v)).collect();
            h = (0..u).map(|j| a[3 * u + j] * hc[j]).collect();
            if self.return_sequences {
                out.extend_from_slice(&h);
            }
            self.cache.push(Step { x: xt, h_prev: hp, c_prev, gates: a, c: c.clone(), hc });
        }
        if !self.return_sequences {
            out = h;
        }
        Ok(Tensor { shape, data: out })
    }

    pub fn backward(&mut self, dy: &Tensor, need_dx: bool) -> Option<Tensor> {
        let u = self.units;
        let t_len = self.cache.len();
        let mut dx = if need_dx { vec![0.0; t_len * self.c_in] } else { Vec::new() };
        let mut dh_next = vec![0.0; u];
        let mut dc_next = vec![0.0; u];
        let mut da = vec![0.0; 4 * u];
        for t in (0..t_len).rev() {
            let s = &self.cache[t];
            let mut dh = dh_next.clone();
            if self.return_sequences {
                axpy(&mut dh, 1.0, &dy.data[t * u..(t + 1) * u]);
            } else if t == t_len - 1 {
                axpy(&mut dh, 1.0, &dy.data);
            }
            for j in 0..u {
                let (i, f, g, o) = (s.gates[j], s.gates[u + j], s.gates[2 * u + j], s.gates[3 * u + j]);
                let dc = dh[j] * o * self.hidden_activation.scalar_grad(s.c[j], s.hc[j]) + dc_next[j];
                da[j] = dc * g * i * (1.0 - i);
                da[u + j] = dc * s.c_prev[j] * f * (1.0 - f);
                da[2 * u + j] = dc * i * (1.0 - g * g);
                da[3 * u + j] = dh[j] * s.hc[j] * o * (1.0 - o);
                dc_next[j] = dc * f;
            }
            for (gb, d) in self.b.grad.iter_mut().zip(&da) {
                *gb += d;
            }
            for (k, &v) in s.x.iter().enumerate() {
                if v != 0.0 {
                    axpy(&mut self.wx.grad[k * 4 * u..(k + 1) * 4 * u], v, &da);
                }
            }
            for (k, &v) in s.h_prev.iter().enumerate() {
                if v != 0.0 {
                    axpy(&mut self.wh.grad[k * 4 * u..(k + 1) * 4 * u], v, &da);
                }
            }
            for k in 0..u {
                let mut d = dot(&self.wh.value[k * 4 * u..(k + 1) * 4 * u], &da);
                if !self.mask_h.is_empty() {
                    d *= self.mask_h[k];
                }
                dh_next[k] = d;
            }
            if need_dx {
                for k in 0..self.c_in {
                    let mut d = dot(&self.wx.value[k * 4 * u..(k + 1) * 4 * u], &da);
                    if !self.mask_x.is_empty() {
                        d *= self.mask_x[k];
                    }
                    dx[t * self.c_in + k] = d;
                }
            }
        }
        need_dx.then(|| Tensor { shape: vec![t_len, self.c_in], data: dx })
    }

    pub fn params(&self) -> Vec<&Param> {
        vec![&self.wx, &self.wh, &self.b]
    }

    pub fn params_mut(&mut self) -> Vec<&mut Param> {
        vec![&mut self.wx, &mut self.wh, &mut self.b]
    }
}
