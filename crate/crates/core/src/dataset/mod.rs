//! Labelled 120-step windows over the per-second frame stream.
//!
//! Minute `m` of the glued stream covers global seconds `(60m, 60(m+1)]`. Its
//! base window ends at second `60m`; row `t` of the matrix is the frame at
//! `end - (T - 1 - t) * step`. Duplicates and jittered negatives move the end
//! backwards by a few seconds, so every frame in a window precedes the
//! labelled minute.

pub mod io;
mod split;

pub use split::{split, SplitPlan, SplitSet};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::features::FeatureMatrix;
use crate::jump::{JumpDirection, JumpLabel};

#[derive(Debug, Error, PartialEq)]
pub enum DatasetError {
    #[error("window for minute {minute} needs frames from second {first_second}, stream starts at 1")]
    InsufficientHistory { minute: usize, first_second: i64 },
    #[error("no frame for second {second}")]
    MissingFrame { second: u64 },
    #[error("no label for minute {minute}")]
    MissingLabel { minute: usize },
    #[error("shift of {shift} s does not fit inside one step of {step} s")]
    ShiftTooLarge { shift: u32, step: u32 },
    #[error("zero shift would duplicate the base sample")]
    ZeroShift,
    #[error("split overlap: {0}")]
    OverlapViolation(String),
    #[error("invalid dataset config: {0}")]
    InvalidConfig(String),
    #[error("dataset file: {0}")]
    Format(String),
    #[error("i/o: {0}")]
    Io(String),
}

impl From<std::io::Error> for DatasetError {
    fn from(e: std::io::Error) -> Self {
        DatasetError::Io(e.to_string())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DatasetConfig {
    pub steps: usize,
    pub step_seconds: u32,
    /// Backward shifts, in seconds, of the extra copies of each positive.
    pub duplicate_shifts: Vec<u32>,
    /// Negatives move back by a uniform draw from `0..=negative_jitter_max` seconds.
    pub negative_jitter_max: u32,
    /// Share of positives after duplication, reached by subsampling
    /// negatives; `None` keeps every negative.
    pub target_positive_share: Option<f64>,
    pub n_classes: u8,
    pub normalize: bool,
    pub seed: u64,
}

impl Default for DatasetConfig {
    fn default() -> Self {
        Self {
            steps: 120,
            step_seconds: 60,
            duplicate_shifts: vec![5, 10, 15, 20],
            negative_jitter_max: 20,
            target_positive_share: Some(0.25),
            n_classes: 2,
            normalize: true,
            seed: 0,
        }
    }
}

impl DatasetConfig {
    pub fn validate(&self) -> Result<(), DatasetError> {
        if self.steps == 0 || self.step_seconds == 0 {
            return Err(DatasetError::InvalidConfig("steps and step_seconds must be positive".into()));
        }
        for &s in &self.duplicate_shifts {
            if s == 0 {
                return Err(DatasetError::ZeroShift);
            }
            if s >= self.step_seconds {
                return Err(DatasetError::ShiftTooLarge { shift: s, step: self.step_seconds });
            }
        }
        if self.negative_jitter_max >= self.step_seconds {
            return Err(DatasetError::ShiftTooLarge { shift: self.negative_jitter_max, step: self.step_seconds });
        }
        if let Some(p) = self.target_positive_share {
            if !(p > 0.0 && p < 1.0) {
                return Err(DatasetError::InvalidConfig(format!("positive share {p} outside (0, 1)")));
            }
        }
        if !(self.n_classes == 2 || self.n_classes == 3) {
            return Err(DatasetError::InvalidConfig(format!("{} classes", self.n_classes)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SampleKind {
    Base,
    Duplicate,
    Jittered,
}

impl SampleKind {
    pub fn code(self) -> u8 {
        match self {
            SampleKind::Base => 0,
            SampleKind::Duplicate => 1,
            SampleKind::Jittered => 2,
        }
    }

    pub fn from_code(c: u8) -> Option<Self> {
        match c {
            0 => Some(SampleKind::Base),
            1 => Some(SampleKind::Duplicate),
            2 => Some(SampleKind::Jittered),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct SampleMeta {
    pub stock: u32,
    /// Calendar day of the labelled minute, counted from the stream start.
    pub day: u32,
    /// Labelled minute index in the glued stream.
    pub end_minute: u32,
    pub shift_seconds: u32,
    pub kind: SampleKind,
}

impl SampleMeta {
    /// Global second of the last row.
    pub fn end_second(&self, step_seconds: u32) -> i64 {
        self.end_minute as i64 * step_seconds as i64 - self.shift_seconds as i64
    }
}

/// A `steps x features` row-major window with its label.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub steps: usize,
    pub features: usize,
    pub matrix: Vec<f64>,
    pub label: u8,
    pub meta: SampleMeta,
}

impl Sample {
    pub fn row(&self, t: usize) -> &[f64] {
        &self.matrix[t * self.features..(t + 1) * self.features]
    }

    pub fn is_positive(&self) -> bool {
        self.label != 0
    }
}

/// Per-minute classes: `0` no jump, `1` jump (binary) or `1` up / `2` down.
/// Undetectable minutes map to `None`.
pub fn minute_classes(labels: &[JumpLabel], n_classes: u8) -> Vec<Option<u8>> {
    labels
        .iter()
        .map(|l| {
            l.detectable.then(|| match (l.direction, n_classes) {
                (JumpDirection::None, _) => 0,
                (_, 2) => 1,
                (JumpDirection::Up, _) => 1,
                (JumpDirection::Down, _) => 2,
            })
        })
        .collect()
}

/// Class of the minute right after a window.
pub fn label_window(meta: &SampleMeta, classes: &[Option<u8>]) -> Result<u8, DatasetError> {
    let m = meta.end_minute as usize;
    classes.get(m).copied().flatten().ok_or(DatasetError::MissingLabel { minute: m })
}

/// Source of frames by global second (row `j` of a stream is second `j + 1`).
pub trait FrameSource {
    fn n_slots(&self) -> usize;
    fn frame(&self, second: u64) -> Option<&[f64]>;
}

impl FrameSource for FeatureMatrix {
    fn n_slots(&self) -> usize {
        FeatureMatrix::n_slots(self)
    }

    fn frame(&self, second: u64) -> Option<&[f64]> {
        let j = second.checked_sub(1)? as usize;
        (j < self.n_frames()).then(|| self.row(j))
    }
}

/// Holds the most recent frames of a day-by-day stream.
#[derive(Debug, Clone)]
pub struct RollingFrames {
    n_slots: usize,
    keep: usize,
    first_second: u64,
    data: Vec<f64>,
}

impl RollingFrames {
    pub fn new(n_slots: usize, keep_frames: usize) -> Self {
        Self { n_slots, keep: keep_frames, first_second: 1, data: Vec::new() }
    }

    /// Appends frames after trimming the held history to `keep_frames`, so
    /// the buffer always spans the new frames plus that much history.
    pub fn push(&mut self, m: &FeatureMatrix) {
        assert_eq!(m.n_slots(), self.n_slots);
        let have = self.data.len() / self.n_slots;
        if have > self.keep {
            let drop = have - self.keep;
            self.data.drain(..drop * self.n_slots);
            self.first_second += drop as u64;
        }
        self.data.extend_from_slice(m.data());
    }

    /// Last second held, 0 when empty.
    pub fn last_second(&self) -> u64 {
        self.first_second + (self.data.len() / self.n_slots) as u64 - 1
    }
}

impl FrameSource for RollingFrames {
    fn n_slots(&self) -> usize {
        self.n_slots
    }

    fn frame(&self, second: u64) -> Option<&[f64]> {
        if second < self.first_second || second > self.last_second() {
            return None;
        }
        let j = (second - self.first_second) as usize;
        Some(&self.data[j * self.n_slots..(j + 1) * self.n_slots])
    }
}

/// One base sample per labelled minute with enough history and frames.
pub fn base_requests(
    classes: &[Option<u8>],
    n_frames: u64,
    stock: u32,
    minutes_per_day: usize,
    cfg: &DatasetConfig,
) -> Vec<(SampleMeta, u8)> {
    let step = cfg.step_seconds as u64;
    let span = (cfg.steps as u64 - 1) * step;
    let max_shift = cfg.duplicate_shifts.iter().copied().max().unwrap_or(0).max(cfg.negative_jitter_max) as u64;
    classes
        .iter()
        .enumerate()
        .filter_map(|(m, c)| {
            let c = (*c)?;
            let end = m as u64 * step;
            // Every shifted variant must still start at or after second 1.
            if end < span + max_shift + 1 || end > n_frames {
                return None;
            }
            let meta = SampleMeta {
                stock,
                day: (m / minutes_per_day) as u32,
                end_minute: m as u32,
                shift_seconds: 0,
                kind: SampleKind::Base,
            };
            Some((meta, c))
        })
        .collect()
}

/// Shifted copies of a positive, one per configured shift.
pub fn duplicate_positives(meta: &SampleMeta, shifts: &[u32], step: u32) -> Result<Vec<SampleMeta>, DatasetError> {
    shifts
        .iter()
        .map(|&s| {
            if s == 0 {
                return Err(DatasetError::ZeroShift);
            }
            if s >= step {
                return Err(DatasetError::ShiftTooLarge { shift: s, step });
            }
            Ok(SampleMeta { shift_seconds: s, kind: SampleKind::Duplicate, ..*meta })
        })
        .collect()
}

/// Moves a negative back by a random number of seconds.
///
/// A shift exposes the tail of the previous minute to the label horizon, so
/// when that minute is a jump the draw is forced to zero.
pub fn jitter_negative(meta: &SampleMeta, classes: &[Option<u8>], max: u32, rng: &mut impl Rng) -> SampleMeta {
    if max == 0 {
        return *meta;
    }
    let m = meta.end_minute as usize;
    let prev_is_jump = m > 0 && matches!(classes.get(m - 1), Some(Some(c)) if *c != 0);
    let j = rng.gen_range(0..=max);
    if prev_is_jump || j == 0 {
        return *meta;
    }
    SampleMeta { shift_seconds: j, kind: SampleKind::Jittered, ..*meta }
}

/// Plans every sample of a stream: base windows, duplicated positives,
/// jittered negatives and negative subsampling. Output is ordered by end
/// second.
pub fn plan_samples(
    classes: &[Option<u8>],
    n_frames: u64,
    stock: u32,
    minutes_per_day: usize,
    cfg: &DatasetConfig,
) -> Result<Vec<(SampleMeta, u8)>, DatasetError> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ (stock as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    let base = base_requests(classes, n_frames, stock, minutes_per_day, cfg);
    let mut positives = Vec::new();
    let mut negatives = Vec::new();
    for (meta, c) in base {
        if c != 0 {
            positives.push((meta, c));
            for d in duplicate_positives(&meta, &cfg.duplicate_shifts, cfg.step_seconds)? {
                positives.push((d, c));
            }
        } else {
            negatives.push((jitter_negative(&meta, classes, cfg.negative_jitter_max, &mut rng), 0));
        }
    }
    if let Some(share) = cfg.target_positive_share {
        let keep = ((positives.len() as f64) * (1.0 - share) / share).round() as usize;
        if keep < negatives.len() {
            let mut idx: Vec<usize> = (0..negatives.len()).collect();
            let mut chosen = idx.partial_shuffle(&mut rng, keep).0.to_vec();
            chosen.sort_unstable();
            negatives = chosen.into_iter().map(|i| negatives[i]).collect();
        }
    }
    let mut all = positives;
    all.extend(negatives);
    all.sort_by_key(|(m, _)| (m.end_second(cfg.step_seconds), m.end_minute, m.shift_seconds));
    Ok(all)
}

/// Cuts one window from a frame source.
pub fn extract(
    source: &impl FrameSource,
    meta: SampleMeta,
    label: u8,
    cfg: &DatasetConfig,
) -> Result<Sample, DatasetError> {
    let end = meta.end_second(cfg.step_seconds);
    let first = end - (cfg.steps as i64 - 1) * cfg.step_seconds as i64;
    if first < 1 {
        return Err(DatasetError::InsufficientHistory { minute: meta.end_minute as usize, first_second: first });
    }
    let f = source.n_slots();
    let mut matrix = Vec::with_capacity(cfg.steps * f);
    for t in 0..cfg.steps {
        let s = (first + t as i64 * cfg.step_seconds as i64) as u64;
        matrix.extend_from_slice(source.frame(s).ok_or(DatasetError::MissingFrame { second: s })?);
    }
    let mut sample = Sample { steps: cfg.steps, features: f, matrix, label, meta };
    if cfg.normalize {
        znormalize(&mut sample);
    }
    Ok(sample)
}

/// Plans and extracts every sample from an in-memory frame stream.
pub fn make_windows(
    frames: &FeatureMatrix,
    classes: &[Option<u8>],
    stock: u32,
    minutes_per_day: usize,
    cfg: &DatasetConfig,
) -> Result<Vec<Sample>, DatasetError> {
    plan_samples(classes, frames.n_frames() as u64, stock, minutes_per_day, cfg)?
        .into_iter()
        .map(|(m, c)| extract(frames, m, c, cfg))
        .collect()
}

/// Extracts planned samples as days of frames arrive.
#[derive(Debug)]
pub struct StreamingExtractor {
    plan: Vec<(SampleMeta, u8)>,
    next: usize,
    frames: RollingFrames,
    cfg: DatasetConfig,
}

impl StreamingExtractor {
    pub fn new(plan: Vec<(SampleMeta, u8)>, n_slots: usize, cfg: DatasetConfig) -> Self {
        let reach = cfg.steps * cfg.step_seconds as usize + 2 * cfg.step_seconds as usize;
        Self { plan, next: 0, frames: RollingFrames::new(n_slots, reach), cfg }
    }

    /// Appends frames and returns every planned sample that is now complete.
    pub fn push(&mut self, frames: &FeatureMatrix) -> Result<Vec<Sample>, DatasetError> {
        self.frames.push(frames);
        let last = self.frames.last_second() as i64;
        let mut out = Vec::new();
        while let Some(&(meta, label)) = self.plan.get(self.next) {
            if meta.end_second(self.cfg.step_seconds) > last {
                break;
            }
            out.push(extract(&self.frames, meta, label, &self.cfg)?);
            self.next += 1;
        }
        Ok(out)
    }

    pub fn remaining(&self) -> usize {
        self.plan.len() - self.next
    }
}

/// Column-wise z-score over the time axis; constant columns become zeros.
pub fn znormalize(s: &mut Sample) {
    let (t_len, f) = (s.steps, s.features);
    for j in 0..f {
        let first = s.matrix[j];
        if (0..t_len).all(|t| s.matrix[t * f + j] == first) {
            for t in 0..t_len {
                s.matrix[t * f + j] = 0.0;
            }
            continue;
        }
        let mean = (0..t_len).map(|t| s.matrix[t * f + j]).sum::<f64>() / t_len as f64;
        let var = (0..t_len).map(|t| (s.matrix[t * f + j] - mean).powi(2)).sum::<f64>() / t_len as f64;
        let sd = var.sqrt();
        for t in 0..t_len {
            s.matrix[t * f + j] = (s.matrix[t * f + j] - mean) / sd;
        }
    }
}
