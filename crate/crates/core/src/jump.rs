//! Nonparametric jump test on minute mid-prices.
//!
//! Each minute return is scaled by a local volatility estimated with bipower
//! variation over the trailing `window` returns, and the scaled statistic is
//! compared with the Gumbel limit of the maximum of `n` such statistics.
//!
//! ```text
//! sigma^2(i) = 1/(K-2) * sum_{j=i-K+2}^{i-1} |r_j| |r_{j-1}|
//! L(i)       = r_i / sigma(i)
//! reject if (|L(i)| - C_n) / S_n > -ln(-ln(1 - alpha))
//! ```

use std::f64::consts::PI;
use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::MINUTES_PER_SESSION;

#[derive(Debug, Error, PartialEq)]
pub enum JumpError {
    #[error("price {price} at index {index} is not positive")]
    NonPositivePrice { index: usize, price: f64 },
    #[error("need at least {needed} returns before index {index}")]
    InsufficientHistory { index: usize, needed: usize },
    #[error("bipower volatility is zero at index {index}")]
    ZeroVolatility { index: usize },
    #[error("series of {len} prices is too short for a window of {window}")]
    SeriesTooShort { len: usize, window: usize },
    #[error("invalid detector configuration: {0}")]
    InvalidConfig(String),
    #[error("label file line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("i/o: {0}")]
    Io(String),
}

impl From<std::io::Error> for JumpError {
    fn from(e: std::io::Error) -> Self {
        JumpError::Io(e.to_string())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DetectorConfig {
    /// Bipower estimation window K, in observations.
    pub window: usize,
    /// Significance level of the test.
    pub alpha: f64,
    /// Observations per trading day; sets n in the threshold constants and
    /// the day grid used for open-suppression and warm-up.
    pub obs_per_day: usize,
}

impl Default for DetectorConfig {
    fn default() -> Self {
        Self { window: 600, alpha: 0.01, obs_per_day: MINUTES_PER_SESSION }
    }
}

impl DetectorConfig {
    pub fn validate(&self) -> Result<(), JumpError> {
        if self.window < 3 {
            return Err(JumpError::InvalidConfig(format!("window {} < 3", self.window)));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(JumpError::InvalidConfig(format!("alpha {} outside (0,1)", self.alpha)));
        }
        if self.obs_per_day < 2 {
            return Err(JumpError::InvalidConfig("obs_per_day < 2".into()));
        }
        Ok(())
    }

    /// First price index with a usable label: the window must be filled and
    /// the warm-up rounds up to whole days.
    pub fn warmup(&self) -> usize {
        self.window.div_ceil(self.obs_per_day) * self.obs_per_day
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum JumpDirection {
    Up,
    Down,
    None,
}

impl JumpDirection {
    pub fn as_str(self) -> &'static str {
        match self {
            JumpDirection::Up => "up",
            JumpDirection::Down => "down",
            JumpDirection::None => "none",
        }
    }
}

/// Test outcome for the return that ends at price index `minute_index`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JumpLabel {
    pub minute_index: usize,
    /// False during warm-up, where no statistic can be formed.
    pub detectable: bool,
    pub is_jump: bool,
    pub direction: JumpDirection,
    pub statistic: f64,
}

impl JumpLabel {
    fn undetectable(minute_index: usize) -> Self {
        Self { minute_index, detectable: false, is_jump: false, direction: JumpDirection::None, statistic: f64::NAN }
    }
}

/// Log returns `r[j] = ln(p[j+1] / p[j])`.
pub fn log_returns(prices: &[f64]) -> Result<Vec<f64>, JumpError> {
    if let Some((index, &price)) = prices.iter().enumerate().find(|(_, p)| !(**p > 0.0) || !p.is_finite()) {
        return Err(JumpError::NonPositivePrice { index, price });
    }
    Ok(prices.windows(2).map(|w| (w[1] / w[0]).ln()).collect())
}

/// Bipower volatility for return `i`, using the `window - 1` returns before it.
///
/// Indices are zero-based into `returns`, so `i >= window - 1` is required.
pub fn bipower_sigma(returns: &[f64], i: usize, window: usize) -> Result<f64, JumpError> {
    if window < 3 || i + 1 < window || i >= returns.len() {
        return Err(JumpError::InsufficientHistory { index: i, needed: window.saturating_sub(1) });
    }
    let mut acc = 0.0;
    for j in (i + 2 - window)..i {
        acc += returns[j].abs() * returns[j - 1].abs();
    }
    Ok((acc / (window - 2) as f64).sqrt())
}

pub fn jump_statistic(returns: &[f64], i: usize, window: usize) -> Result<f64, JumpError> {
    let sigma = bipower_sigma(returns, i, window)?;
    if sigma == 0.0 {
        return Err(JumpError::ZeroVolatility { index: i });
    }
    Ok(returns[i] / sigma)
}

/// Smallest |L| that rejects the no-jump hypothesis for `n` observations.
pub fn rejection_threshold(n: usize, alpha: f64) -> f64 {
    let c = (2.0 / PI).sqrt();
    let ln_n = (n as f64).ln();
    let root = (2.0 * ln_n).sqrt();
    let c_n = root / c - (PI.ln() + ln_n.ln()) / (2.0 * c * root);
    let s_n = 1.0 / (c * root);
    let beta = -(-(1.0 - alpha).ln()).ln();
    c_n + s_n * beta
}

/// Labels every price index of a contiguous minute series.
///
/// Index 0 and the warm-up days are `detectable = false`. The first
/// observation of each day (the overnight return) is never flagged. Flat
/// windows with zero bipower volatility are reported as no-jump with a zero
/// statistic.
pub fn detect_jumps(prices: &[f64], config: &DetectorConfig) -> Result<Vec<JumpLabel>, JumpError> {
    config.validate()?;
    if prices.len() <= config.window {
        return Err(JumpError::SeriesTooShort { len: prices.len(), window: config.window });
    }
    let returns = log_returns(prices)?;
    let threshold = rejection_threshold(config.obs_per_day, config.alpha);
    let warmup = config.warmup().max(config.window);
    let mut labels = Vec::with_capacity(prices.len());
    for m in 0..prices.len() {
        if m < warmup {
            labels.push(JumpLabel::undetectable(m));
            continue;
        }
        let i = m - 1;
        let (statistic, exceeds) = match jump_statistic(&returns, i, config.window) {
            Ok(l) => (l, l.abs() > threshold),
            Err(JumpError::ZeroVolatility { .. }) => (0.0, false),
            Err(e) => return Err(e),
        };
        let is_jump = exceeds && m % config.obs_per_day != 0;
        let direction = match (is_jump, returns[i] > 0.0) {
            (false, _) => JumpDirection::None,
            (true, true) => JumpDirection::Up,
            (true, false) => JumpDirection::Down,
        };
        labels.push(JumpLabel { minute_index: m, detectable: true, is_jump, direction, statistic });
    }
    Ok(labels)
}

/// Binary class per minute; `None` for minutes excluded from sampling.
pub fn label_minutes(labels: &[JumpLabel]) -> Vec<Option<u8>> {
    labels.iter().map(|l| l.detectable.then_some(l.is_jump as u8)).collect()
}

/// Writes `minute_index,is_jump,direction,L`. Undetectable minutes carry the
/// direction `undetectable` and an `nan` statistic.
pub fn write_labels(w: &mut impl Write, labels: &[JumpLabel]) -> Result<(), JumpError> {
    writeln!(w, "minute_index,is_jump,direction,L")?;
    for l in labels {
        let dir = if l.detectable { l.direction.as_str() } else { "undetectable" };
        writeln!(w, "{},{},{},{}", l.minute_index, l.is_jump as u8, dir, l.statistic)?;
    }
    Ok(())
}

pub fn read_labels(r: impl BufRead) -> Result<Vec<JumpLabel>, JumpError> {
    let mut out = Vec::new();
    for (n, line) in r.lines().enumerate() {
        let line = line?;
        if n == 0 || line.trim().is_empty() {
            continue;
        }
        let err = |m: &str| JumpError::Parse { line: n + 1, message: m.to_string() };
        let f: Vec<&str> = line.trim().split(',').collect();
        if f.len() != 4 {
            return Err(err("expected 4 fields"));
        }
        let minute_index = f[0].parse().map_err(|_| err("bad minute index"))?;
        let is_jump = match f[1] {
            "0" => false,
            "1" => true,
            _ => return Err(err("bad is_jump")),
        };
        let (detectable, direction) = match f[2] {
            "up" => (true, JumpDirection::Up),
            "down" => (true, JumpDirection::Down),
            "none" => (true, JumpDirection::None),
            "undetectable" => (false, JumpDirection::None),
            _ => return Err(err("bad direction")),
        };
        let statistic = f[3].parse().map_err(|_| err("bad statistic"))?;
        out.push(JumpLabel { minute_index, detectable, is_jump, direction, statistic });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, Normal};

    fn brute_sigma(r: &[f64], i: usize, k: usize) -> f64 {
        let mut acc = 0.0;
        let mut j = i + 2 - k;
        while j < i {
            acc += r[j].abs() * r[j - 1].abs();
            j += 1;
        }
        (acc / (k as f64 - 2.0)).sqrt()
    }

    #[test]
    fn log_return_examples() {
        assert_eq!(log_returns(&[100.0, 100.0, 100.0]).unwrap(), vec![0.0, 0.0]);
        let r = log_returns(&[100.0, 100.0 * 0.01f64.exp()]).unwrap();
        assert!((r[0] - 0.01).abs() < 1e-15);
        assert!(matches!(log_returns(&[1.0, 0.0]), Err(JumpError::NonPositivePrice { index: 1, .. })));
    }

    #[test]
    fn bipower_examples() {
        let r = vec![0.003; 50];
        assert!((bipower_sigma(&r, 49, 20).unwrap() - 0.003).abs() < 1e-15);
        let r = vec![-0.003; 50];
        assert!((bipower_sigma(&r, 49, 20).unwrap() - 0.003).abs() < 1e-15);
        assert_eq!(bipower_sigma(&[0.0; 30], 29, 10).unwrap(), 0.0);
        assert!(matches!(bipower_sigma(&[0.0; 30], 8, 10), Err(JumpError::InsufficientHistory { .. })));
    }

    #[test]
    fn bipower_matches_direct_summation_on_gaussian_returns() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let n = Normal::new(0.0, 0.01).unwrap();
        let r: Vec<f64> = (0..2000).map(|_| n.sample(&mut rng)).collect();
        let c = (2.0 / PI).sqrt();
        for i in [599, 1000, 1999] {
            let s = bipower_sigma(&r, i, 600).unwrap();
            assert_eq!(s, brute_sigma(&r, i, 600));
            assert!((s - c * 0.01).abs() < 0.15 * c * 0.01, "sigma {s}");
        }
    }

    #[test]
    fn statistic_examples() {
        let mut r = vec![0.001; 40];
        r[30] = 0.0;
        assert_eq!(jump_statistic(&r, 30, 20).unwrap(), 0.0);
        r[30] = 0.01;
        let l = jump_statistic(&r, 30, 20).unwrap();
        assert!((l - 10.0).abs() < 1e-9, "{l}");
        assert_eq!(jump_statistic(&[0.0; 40], 30, 20), Err(JumpError::ZeroVolatility { index: 30 }));
    }

    #[test]
    fn threshold_value() {
        // n = 390, alpha = 0.01, evaluated independently in double precision.
        let t = rejection_threshold(390, 0.01);
        assert!((t - 5.466_704).abs() < 1e-6, "{t}");
    }

    #[test]
    fn constant_series_has_no_jumps() {
        let labels = detect_jumps(&vec![100.0; 2000], &DetectorConfig::default()).unwrap();
        assert_eq!(labels.len(), 2000);
        assert!(labels.iter().all(|l| !l.is_jump));
        assert!(labels[..780].iter().all(|l| !l.detectable));
        assert!(labels[780..].iter().all(|l| l.detectable));
    }

    #[test]
    fn too_short_and_bad_config() {
        let cfg = DetectorConfig::default();
        assert!(matches!(detect_jumps(&[1.0; 600], &cfg), Err(JumpError::SeriesTooShort { .. })));
        let bad = DetectorConfig { alpha: 1.0, ..cfg };
        assert!(detect_jumps(&[1.0; 900], &bad).is_err());
    }

    #[test]
    fn label_projection() {
        let mut labels = detect_jumps(&vec![50.0; 1200], &DetectorConfig::default()).unwrap();
        let proj = label_minutes(&labels);
        assert!(proj[..780].iter().all(|c| c.is_none()));
        assert!(proj[780..].iter().all(|c| *c == Some(0)));
        labels[900].is_jump = true;
        let proj = label_minutes(&labels);
        assert_eq!(proj.iter().filter(|c| **c == Some(1)).count(), 1);
        assert_eq!(proj[900], Some(1));
    }

    #[test]
    fn label_file_roundtrip() {
        let mut labels = detect_jumps(&vec![50.0; 800], &DetectorConfig::default()).unwrap();
        labels[790] = JumpLabel { minute_index: 790, detectable: true, is_jump: true, direction: JumpDirection::Down, statistic: -7.25 };
        let mut buf = Vec::new();
        write_labels(&mut buf, &labels).unwrap();
        let back = read_labels(buf.as_slice()).unwrap();
        assert_eq!(back.len(), labels.len());
        assert_eq!(back[790], labels[790]);
        assert!(!back[3].detectable && back[3].statistic.is_nan());
    }
}
