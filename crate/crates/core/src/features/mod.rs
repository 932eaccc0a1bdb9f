//! Per-second feature frames.
//!
//! Slot layout (139 values, fixed order):
//!
//! | set | slots | content |
//! |-----|-------|---------|
//! | v1  | 0..40    | per level i: ask price, ask volume, bid price, bid volume |
//! | v2  | 40..60   | per level i: spread, mid |
//! | v3  | 60..78   | per i = 1..9: abs ask price step, abs bid price step |
//! | v4  | 78..82   | mean ask price, mean bid price, mean ask volume, mean bid volume |
//! | v5  | 82..84   | mean (ask - bid) price, mean (ask - bid) volume |
//! | v6  | 84..124  | per level i: d ask price, d bid price, d ask volume, d bid volume (per second) |
//! | v7  | 124..130 | intensities la, lb, ma, mb, ca, cb (events per second) |
//! | v8  | 130..134 | short > long intensity indicators for la, lb, ma, mb |
//! | v9  | 134..138 | intensity accelerations for ma, lb, mb, la |
//! | v10 | 138      | wall-clock hour |

mod compute;
pub mod io;

pub use compute::{
    assemble, basic_v1, clock_v10, derivatives_v6, intensities_v7_v9, time_insensitive_v2_v5, ClassCounts,
    EventClass, FeatureAssembler, IntensityCounters,
};

use std::sync::OnceLock;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::SESSION_SECONDS;

pub const N_SLOTS: usize = 139;
pub const V1: std::ops::Range<usize> = 0..40;
pub const V2: std::ops::Range<usize> = 40..60;
pub const V3: std::ops::Range<usize> = 60..78;
pub const V4: std::ops::Range<usize> = 78..82;
pub const V5: std::ops::Range<usize> = 82..84;
pub const V6: std::ops::Range<usize> = 84..124;
pub const V7: std::ops::Range<usize> = 124..130;
pub const V8: std::ops::Range<usize> = 130..134;
pub const V9: std::ops::Range<usize> = 134..138;
pub const V10: usize = 138;

#[derive(Debug, Error, PartialEq)]
pub enum FeatureError {
    #[error("need {needed} frames of history, have {available}")]
    InsufficientHistory { needed: usize, available: usize },
    #[error("stream misalignment: {0}")]
    StreamMisalignment(String),
    #[error("feature file: {0}")]
    Format(String),
    #[error("i/o: {0}")]
    Io(String),
}

impl From<std::io::Error> for FeatureError {
    fn from(e: std::io::Error) -> Self {
        FeatureError::Io(e.to_string())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FeatureConfig {
    /// Short window for intensities and derivatives, seconds.
    pub short_window: usize,
    /// Long window for the relative intensity indicators, seconds.
    pub long_window: usize,
    pub seconds_per_day: u32,
    /// Session open as seconds since midnight (09:30).
    pub open_second_of_day: u32,
}

impl Default for FeatureConfig {
    fn default() -> Self {
        Self { short_window: 60, long_window: 600, seconds_per_day: SESSION_SECONDS, open_second_of_day: 34_200 }
    }
}

/// Stable slot names, index-aligned with the frame layout.
pub fn slot_names() -> &'static [String] {
    static NAMES: OnceLock<Vec<String>> = OnceLock::new();
    NAMES.get_or_init(|| {
        let mut n = Vec::with_capacity(N_SLOTS);
        for i in 1..=10 {
            for f in ["ask_price", "ask_volume", "bid_price", "bid_volume"] {
                n.push(format!("v1.{f}.{i}"));
            }
        }
        for i in 1..=10 {
            n.push(format!("v2.spread.{i}"));
            n.push(format!("v2.mid.{i}"));
        }
        for i in 1..=9 {
            n.push(format!("v3.ask_step.{i}"));
            n.push(format!("v3.bid_step.{i}"));
        }
        for f in ["ask_price_mean", "bid_price_mean", "ask_volume_mean", "bid_volume_mean"] {
            n.push(format!("v4.{f}"));
        }
        n.push("v5.price_diff_mean".into());
        n.push("v5.volume_diff_mean".into());
        for i in 1..=10 {
            for f in ["d_ask_price", "d_bid_price", "d_ask_volume", "d_bid_volume"] {
                n.push(format!("v6.{f}.{i}"));
            }
        }
        for c in ["la", "lb", "ma", "mb", "ca", "cb"] {
            n.push(format!("v7.lambda_{c}"));
        }
        for c in ["la", "lb", "ma", "mb"] {
            n.push(format!("v8.rising_{c}"));
        }
        for c in ["ma", "lb", "mb", "la"] {
            n.push(format!("v9.accel_{c}"));
        }
        n.push("v10.hour".into());
        debug_assert_eq!(n.len(), N_SLOTS);
        n
    })
}

pub fn slot_index(name: &str) -> Option<usize> {
    slot_names().iter().position(|n| n == name)
}

/// Row-major frames, one per second; row `j` is global second `j + 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    n_slots: usize,
    data: Vec<f64>,
}

impl FeatureMatrix {
    pub fn new(n_slots: usize) -> Self {
        Self { n_slots, data: Vec::new() }
    }

    pub fn from_data(n_slots: usize, data: Vec<f64>) -> Result<Self, FeatureError> {
        if n_slots == 0 || data.len() % n_slots != 0 {
            return Err(FeatureError::Format(format!("{} values do not fill rows of {n_slots}", data.len())));
        }
        Ok(Self { n_slots, data })
    }

    pub fn with_capacity(n_slots: usize, rows: usize) -> Self {
        Self { n_slots, data: Vec::with_capacity(n_slots * rows) }
    }

    pub fn n_slots(&self) -> usize {
        self.n_slots
    }

    pub fn n_frames(&self) -> usize {
        self.data.len() / self.n_slots
    }

    pub fn row(&self, j: usize) -> &[f64] {
        &self.data[j * self.n_slots..(j + 1) * self.n_slots]
    }

    pub fn push_row(&mut self, row: &[f64]) {
        assert_eq!(row.len(), self.n_slots);
        self.data.extend_from_slice(row);
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }
}
