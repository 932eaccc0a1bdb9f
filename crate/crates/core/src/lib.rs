//! Jump-arrival forecasting from limit order book data.
//!
//! The crate is organised as a pipeline:
//!
//! * [`lob`] rebuilds an order book from an event stream and samples ten-level
//!   snapshots once per second.
//! * [`jump`] runs a bipower-variation jump test on minute mid-prices.
//! * [`features`] turns snapshots and event intensities into 139-slot frames.
//! * [`dataset`] cuts labelled, z-normalised 120-step windows and rolling splits.
//! * [`nn`] is a small self-contained network engine with exact backward passes.
//! * [`models`] assembles the five architectures, trains and predicts.
//! * [`eval`] scores predictions (precision, recall, F1, Cohen's kappa).
//! * [`synth`] produces synthetic event streams with known jumps.

pub mod dataset;
pub mod eval;
pub mod features;
pub mod jump;
pub mod lob;
pub mod models;
pub mod nn;
pub mod synth;

pub use dataset::{Sample, SampleMeta, SplitPlan};
pub use eval::{ConfusionMatrix, EvalReport};
pub use features::{FeatureMatrix, N_SLOTS};
pub use jump::{DetectorConfig, JumpDirection, JumpLabel};
pub use lob::{Action, BookSnapshot, OrderBook, OrderEvent, Side};
pub use models::{Architecture, Model, ModelSpec, OutputMode, TrainConfig};
pub use nn::Network;
pub use synth::{PlantedJump, ScenarioConfig};

/// Seconds in one regular trading session (09:30 to 16:00).
pub const SESSION_SECONDS: u32 = 23_400;
/// One-minute observations per trading session.
pub const MINUTES_PER_SESSION: usize = 390;
