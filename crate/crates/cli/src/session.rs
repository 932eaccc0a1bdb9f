//! Day-by-day processing of a glued multi-day stream.
//!
//! Event files carry stream-global timestamps while snapshots and feature
//! days are session-relative (seconds `1..=seconds_per_day`).

use anyhow::{anyhow, Result};
use jumpcast_core::features::{FeatureAssembler, FeatureConfig, FeatureMatrix, N_SLOTS};
use jumpcast_core::lob::{mid_price, BookSnapshot, OrderEvent, Replayer};

const NS: u64 = 1_000_000_000;

/// Replays one continuous stream and hands back each day's snapshots.
#[derive(Debug)]
pub struct SessionReplay {
    replayer: Replayer,
    seconds_per_day: u32,
    day: u32,
}

impl SessionReplay {
    pub fn new(seconds_per_day: u32, days: u32) -> Self {
        Self { replayer: Replayer::new(1, seconds_per_day * days), seconds_per_day, day: 0 }
    }

    /// Feeds the next day's events and returns its snapshots, renumbered to
    /// session seconds.
    pub fn next_day(&mut self, events: &[OrderEvent]) -> Result<Vec<BookSnapshot>> {
        let day = self.day;
        let mut snaps = Vec::with_capacity(self.seconds_per_day as usize);
        let mut sink = |s: BookSnapshot| snaps.push(s);
        for e in events {
            self.replayer.push(e, &mut sink).map_err(|e| anyhow!("day {day}: {e}"))?;
        }
        let end = (day + 1) * self.seconds_per_day;
        self.replayer.advance_to(end, &mut sink).map_err(|e| anyhow!("day {day}: {e}"))?;
        let base = day * self.seconds_per_day;
        for s in &mut snaps {
            s.second -= base;
        }
        self.day += 1;
        Ok(snaps)
    }
}

/// Shifts global timestamps of day `day` into session time.
pub fn rebase_events(events: &[OrderEvent], day: u32, seconds_per_day: u32) -> Vec<OrderEvent> {
    let base = day as u64 * seconds_per_day as u64 * NS;
    events.iter().map(|e| OrderEvent { timestamp_ns: e.timestamp_ns - base, ..*e }).collect()
}

/// Mid-prices at the end of every minute of a day, in ticks.
pub fn minute_mids(snaps: &[BookSnapshot], day: u32) -> Result<Vec<f64>> {
    snaps
        .iter()
        .filter(|s| s.second % 60 == 0)
        .map(|s| mid_price(s).map_err(|e| anyhow!("day {day}, second {}: {e}", s.second)))
        .collect()
}

/// Builds feature frames day after day, keeping the cross-day windows.
#[derive(Debug)]
pub struct FeatureDays {
    assembler: FeatureAssembler,
    seconds_per_day: u32,
}

impl FeatureDays {
    pub fn new(cfg: &FeatureConfig) -> Self {
        Self { assembler: FeatureAssembler::new(cfg.clone()), seconds_per_day: cfg.seconds_per_day }
    }

    /// Frames of the next day from its session snapshots and global events.
    pub fn next_day(&mut self, snaps: &[BookSnapshot], events: &[OrderEvent]) -> Result<FeatureMatrix> {
        let day = self.assembler.days_pushed();
        let local = rebase_events(events, day, self.seconds_per_day);
        let mut out = FeatureMatrix::with_capacity(N_SLOTS, snaps.len());
        self.assembler.push_day(snaps, &local, &mut out).map_err(|e| anyhow!("day {day}: {e}"))?;
        Ok(out)
    }
}
