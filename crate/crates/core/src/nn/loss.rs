//! Cross-entropy losses and their gradients.

/// Probabilities are clamped to `[EPS, 1 - EPS]` before taking logs.
pub const EPS: f64 = 1e-12;

fn clamp(p: f64) -> f64 {
    p.clamp(EPS, 1.0 - EPS)
}

/// Binary cross-entropy for one prediction.
pub fn bce(y: f64, p: f64) -> f64 {
    let p = clamp(p);
    -(y * p.ln() + (1.0 - y) * (1.0 - p).ln())
}

/// d bce / d p.
pub fn bce_grad(y: f64, p: f64) -> f64 {
    let p = clamp(p);
    -y / p + (1.0 - y) / (1.0 - p)
}

/// Categorical cross-entropy against a one-hot or soft target.
pub fn categorical(target: &[f64], q: &[f64]) -> f64 {
    -target.iter().zip(q).map(|(t, p)| t * clamp(*p).ln()).sum::<f64>()
}

/// d categorical / d q.
pub fn categorical_grad(target: &[f64], q: &[f64]) -> Vec<f64> {
    target.iter().zip(q).map(|(t, p)| -t / clamp(*p)).collect()
}
