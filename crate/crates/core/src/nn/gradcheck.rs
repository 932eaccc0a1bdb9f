//! Central finite-difference verification of analytic gradients.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{loss, Mode, Network, NnError, Tensor};

/// Floor on the relative-error denominator. Central differences at
/// `eps = 1e-5` carry about 1e-11 of roundoff on O(1) losses, so gradients
/// below this are compared on an absolute scale.
pub const REL_FLOOR: f64 = 1e-6;

pub fn rel_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(REL_FLOOR)
}

/// Scalar objective placed on the network output.
#[derive(Debug, Clone)]
pub enum Objective {
    /// `sum_k r_k y_k` for fixed random `r`.
    Projection(Vec<f64>),
    /// Binary cross-entropy on a single sigmoid output, fused backward.
    Bce(f64),
    /// Categorical cross-entropy on a softmax output, fused backward.
    Categorical(Vec<f64>),
}

impl Objective {
    pub fn random_projection(n: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Objective::Projection((0..n).map(|_| rng.gen_range(-1.0..1.0)).collect())
    }

    fn value(&self, y: &[f64]) -> f64 {
        match self {
            Objective::Projection(r) => r.iter().zip(y).map(|(a, b)| a * b).sum(),
            Objective::Bce(t) => loss::bce(*t, y[0]),
            Objective::Categorical(t) => loss::categorical(t, y),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GradCheckReport {
    pub max_rel_error: f64,
    pub checked: usize,
    /// `(parameter tensor, element)` of the worst entry; `usize::MAX` marks the input.
    pub worst: (usize, usize),
    pub analytic: f64,
    pub numeric: f64,
}

struct Probe<'a> {
    net: &'a mut Network,
    mode: Mode,
    seed: u64,
    objective: &'a Objective,
}

impl Probe<'_> {
    fn eval(&mut self, x: &Tensor) -> Result<f64, NnError> {
        self.net.reseed_dropout(self.seed);
        let y = self.net.forward(x, self.mode)?;
        Ok(self.objective.value(&y.data))
    }

    fn analytic(&mut self, x: &Tensor) -> Result<(Vec<Vec<f64>>, Tensor), NnError> {
        self.net.zero_grad();
        self.net.reseed_dropout(self.seed);
        let y = self.net.forward(x, self.mode)?;
        let dx = match self.objective {
            Objective::Projection(r) => self.net.backward_input(&Tensor { shape: y.shape.clone(), data: r.clone() }),
            Objective::Bce(t) => {
                self.net.backward_from_logits(&[y.data[0] - t])?;
                Tensor::zeros(x.shape.clone())
            }
            Objective::Categorical(t) => {
                let dz: Vec<f64> = y.data.iter().zip(t).map(|(p, q)| p - q).collect();
                self.net.backward_from_logits(&dz)?;
                Tensor::zeros(x.shape.clone())
            }
        };
        Ok((self.net.params().iter().map(|p| p.grad.clone()).collect(), dx))
    }
}

/// Compares analytic and central-difference gradients for every parameter
/// element (at most `max_per_tensor` per tensor, spread evenly) and, for
/// projection objectives, every input element.
///
/// Dropout masks are frozen by reseeding before each evaluation.
pub fn check_network(
    net: &mut Network,
    x: &Tensor,
    objective: &Objective,
    mode: Mode,
    eps: f64,
    max_per_tensor: usize,
) -> Result<GradCheckReport, NnError> {
    let mut probe = Probe { net, mode, seed: 0x5EED, objective };
    let (grads, dx) = probe.analytic(x)?;
    let mut report = GradCheckReport { max_rel_error: 0.0, checked: 0, worst: (0, 0), analytic: 0.0, numeric: 0.0 };
    let record = |r: &mut GradCheckReport, at: (usize, usize), a: f64, n: f64| {
        let e = rel_error(a, n);
        r.checked += 1;
        if e > r.max_rel_error {
            *r = GradCheckReport { max_rel_error: e, checked: r.checked, worst: at, analytic: a, numeric: n };
        }
    };
    for (pi, g) in grads.iter().enumerate() {
        let stride = (g.len() / max_per_tensor.max(1)).max(1);
        for k in (0..g.len()).step_by(stride) {
            let orig = probe.net.params()[pi].value[k];
            probe.net.params_mut()[pi].value[k] = orig + eps;
            let hi = probe.eval(x)?;
            probe.net.params_mut()[pi].value[k] = orig - eps;
            let lo = probe.eval(x)?;
            probe.net.params_mut()[pi].value[k] = orig;
            record(&mut report, (pi, k), g[k], (hi - lo) / (2.0 * eps));
        }
    }
    if matches!(objective, Objective::Projection(_)) {
        let stride = (x.len() / max_per_tensor.max(1)).max(1);
        for k in (0..x.len()).step_by(stride) {
            let mut xp = x.clone();
            xp.data[k] += eps;
            let hi = probe.eval(&xp)?;
            xp.data[k] -= 2.0 * eps;
            let lo = probe.eval(&xp)?;
            record(&mut report, (usize::MAX, k), dx.data[k], (hi - lo) / (2.0 * eps));
        }
    }
    Ok(report)
}
