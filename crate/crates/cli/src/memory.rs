//! In-memory scenario runs: synthesize, replay, detect and cut samples
//! without touching disk.
//!
//! The stream is generated twice. The first pass only collects minute
//! mid-prices for the detector; the second rebuilds the frames and extracts
//! the planned windows as the days go by, so no more than a few days of
//! frames are held at once.

use anyhow::Result;
use jumpcast_core::dataset::{minute_classes, plan_samples, split, SampleMeta, SplitSet, StreamingExtractor};
use jumpcast_core::jump::detect_jumps;
use jumpcast_core::synth::ScenarioStream;
use jumpcast_core::{JumpLabel, PlantedJump, Sample, N_SLOTS};

use crate::config::PipelineConfig;
use crate::session::{minute_mids, FeatureDays, SessionReplay};

#[derive(Debug)]
pub struct ScenarioData {
    pub samples: Vec<Sample>,
    pub labels: Vec<JumpLabel>,
    pub jumps: Vec<PlantedJump>,
    pub n_days: u32,
    /// Planned windows before `keep` was applied.
    pub planned: usize,
}

impl ScenarioData {
    pub fn metas(&self) -> Vec<SampleMeta> {
        self.samples.iter().map(|s| s.meta).collect()
    }

    pub fn split(&self, cfg: &PipelineConfig) -> Result<Vec<SplitSet>> {
        Ok(split(&self.metas(), &cfg.split, self.n_days)?)
    }
}

/// Minute mid-prices of the whole scenario.
pub fn scenario_prices(cfg: &PipelineConfig) -> Result<(Vec<f64>, Vec<PlantedJump>)> {
    let sc = &cfg.scenario;
    let mut stream = ScenarioStream::new(sc)?;
    let mut session = SessionReplay::new(sc.seconds_per_day, sc.days);
    let mut prices = Vec::with_capacity(sc.days as usize * cfg.minutes_per_day());
    let mut day = 0;
    while let Some(events) = stream.next_day() {
        let snaps = session.next_day(&events)?;
        prices.extend(minute_mids(&snaps, day)?);
        day += 1;
    }
    Ok((prices, stream.jumps().to_vec()))
}

/// Runs the scenario of `cfg` through detection and windowing. `keep`
/// filters the planned windows before any frame is extracted.
pub fn build_samples(cfg: &PipelineConfig, keep: impl Fn(&SampleMeta, u8) -> bool) -> Result<ScenarioData> {
    cfg.validate()?;
    let sc = &cfg.scenario;
    let mpd = cfg.minutes_per_day();
    let (prices, jumps) = scenario_prices(cfg)?;
    let labels = detect_jumps(&prices, &cfg.detector)?;
    let classes = minute_classes(&labels, cfg.dataset.n_classes);
    let plan = plan_samples(&classes, sc.total_seconds(), 0, mpd, &cfg.dataset)?;
    let planned = plan.len();
    let plan: Vec<_> = plan.into_iter().filter(|(m, c)| keep(m, *c)).collect();

    let mut stream = ScenarioStream::new(sc)?;
    let mut session = SessionReplay::new(sc.seconds_per_day, sc.days);
    let mut frames = FeatureDays::new(&cfg.features);
    let mut extractor = StreamingExtractor::new(plan, N_SLOTS, cfg.dataset.clone());
    let mut samples = Vec::new();
    while let Some(events) = stream.next_day() {
        if extractor.remaining() == 0 {
            break;
        }
        let snaps = session.next_day(&events)?;
        let m = frames.next_day(&snaps, &events)?;
        samples.extend(extractor.push(&m)?);
    }
    Ok(ScenarioData { samples, labels, jumps, n_days: sc.days, planned })
}
