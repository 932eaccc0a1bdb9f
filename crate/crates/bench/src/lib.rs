//! Shared fixtures for the benchmarks.

use jumpcast_core::dataset::{SampleKind, SampleMeta};
use jumpcast_core::lob::{replay, BookSnapshot, OrderEvent};
use jumpcast_core::synth::{ScenarioConfig, ScenarioStream};
use jumpcast_core::Sample;

/// One session of demo-scenario flow with its snapshots.
pub fn demo_day(seed: u64) -> (ScenarioConfig, Vec<OrderEvent>, Vec<BookSnapshot>) {
    let cfg = ScenarioConfig { days: 1, seed, ..ScenarioConfig::demo() };
    let events = ScenarioStream::new(&cfg).expect("demo preset is valid").next_day().expect("one day");
    let snaps = replay(events.iter().copied(), 1, cfg.seconds_per_day).expect("generated streams replay");
    (cfg, events, snaps)
}

/// A deterministic, roughly standardised window.
pub fn sample(steps: usize, features: usize, label: u8) -> Sample {
    let matrix = (0..steps * features).map(|i| ((i as f64) * 0.618_034).fract() * 3.4 - 1.7).collect();
    let meta = SampleMeta { stock: 0, day: 0, end_minute: 0, shift_seconds: 0, kind: SampleKind::Base };
    Sample { steps, features, matrix, label, meta }
}
