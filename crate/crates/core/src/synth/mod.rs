//! Synthetic event streams with known jumps.
//!
//! A per-second geometric Brownian mid-price carries Poisson-planted jumps.
//! [`FlowGenerator`] quotes a ten-level ladder around it and adds random
//! submissions, executions and cancels; [`SignalInjector`] optionally thins
//! one or both sides of the book shortly before each jump.
//!
//! Days are glued into one continuous stream: the book persists overnight and
//! timestamps run on from one session to the next.

mod flow;
mod price;
mod random;
mod signal;

pub use flow::FlowGenerator;
pub use price::{gen_price_path, PricePath};
pub use random::random_events;
pub use signal::{inject_liquidity_signal, SignalInjector};

use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::jump::JumpDirection;
use crate::lob::OrderEvent;
use crate::SESSION_SECONDS;

const NS: u64 = 1_000_000_000;

#[derive(Debug, Error, PartialEq)]
pub enum SynthError {
    #[error("invalid scenario: {0}")]
    InvalidConfig(String),
    #[error("truth file line {line}: {message}")]
    Format { line: usize, message: String },
    #[error("i/o: {0}")]
    Io(String),
}

impl From<std::io::Error> for SynthError {
    fn from(e: std::io::Error) -> Self {
        SynthError::Io(e.to_string())
    }
}

/// Pre-jump liquidity withdrawal.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SignalConfig {
    /// Seconds before the start of the jump minute at which depth is pulled.
    pub lead_seconds: u32,
    /// Share of resting volume cancelled on the thinned side; new orders on
    /// that side are scaled down by the same share until replenishment.
    pub withdrawal_fraction: f64,
    /// Thin both sides regardless of the jump direction.
    pub symmetric: bool,
}

impl Default for SignalConfig {
    fn default() -> Self {
        Self { lead_seconds: 120, withdrawal_fraction: 0.0, symmetric: false }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ScenarioConfig {
    pub days: u32,
    pub seconds_per_day: u32,
    pub start_price: f64,
    pub tick_size: f64,
    /// Diffusive volatility of one-minute log returns.
    pub sigma_per_minute: f64,
    /// Expected planted jumps per day.
    pub jump_intensity: f64,
    /// Jump log-return size in multiples of `sigma_per_minute`.
    pub jump_size: f64,
    /// Submissions per minute, both sides together.
    pub add_rate: f64,
    /// Executions per minute.
    pub execute_rate: f64,
    /// Cancels per minute.
    pub cancel_rate: f64,
    /// Ladder levels holding less volume than this are topped up each second.
    pub min_level_volume: u64,
    pub signal: SignalConfig,
    pub seed: u64,
}

impl Default for ScenarioConfig {
    /// Full-session days with AAPL-like per-minute order flow.
    fn default() -> Self {
        Self {
            days: 62,
            seconds_per_day: SESSION_SECONDS,
            start_price: 100.0,
            tick_size: 0.01,
            sigma_per_minute: 5e-4,
            jump_intensity: 2.0,
            jump_size: 10.0,
            add_rate: 1963.37,
            execute_rate: 181.33,
            cancel_rate: 1870.52,
            min_level_volume: 1000,
            signal: SignalConfig { withdrawal_fraction: 0.8, ..Default::default() },
            seed: 0,
        }
    }
}

impl ScenarioConfig {
    /// Signalled scenario with light flow, sized for quick end-to-end runs.
    pub fn demo() -> Self {
        Self { add_rate: 120.0, execute_rate: 12.0, cancel_rate: 110.0, ..Default::default() }
    }

    /// [`ScenarioConfig::demo`] without the pre-jump signal.
    pub fn nosignal() -> Self {
        let mut c = Self::demo();
        c.signal.withdrawal_fraction = 0.0;
        c
    }

    /// Three one-hour days; enough to exercise every stage quickly.
    pub fn tiny() -> Self {
        Self { days: 3, seconds_per_day: 3_600, ..Self::demo() }
    }

    pub fn preset(name: &str) -> Option<Self> {
        match name {
            "demo" => Some(Self::demo()),
            "nosignal" => Some(Self::nosignal()),
            "tiny" => Some(Self::tiny()),
            "aapl" => Some(Self::default()),
            _ => None,
        }
    }

    pub fn minutes_per_day(&self) -> usize {
        (self.seconds_per_day / 60) as usize
    }

    pub fn total_seconds(&self) -> u64 {
        self.days as u64 * self.seconds_per_day as u64
    }

    pub fn validate(&self) -> Result<(), SynthError> {
        let bad = |m: String| Err(SynthError::InvalidConfig(m));
        if self.seconds_per_day == 0 || self.seconds_per_day % 60 != 0 {
            return bad(format!("seconds_per_day {} must be a positive multiple of 60", self.seconds_per_day));
        }
        if !(self.start_price > 0.0 && self.tick_size > 0.0) {
            return bad("start_price and tick_size must be positive".into());
        }
        if self.start_price / self.tick_size < 100.0 {
            return bad("start price must be at least 100 ticks".into());
        }
        for (name, v) in [
            ("sigma_per_minute", self.sigma_per_minute),
            ("jump_intensity", self.jump_intensity),
            ("jump_size", self.jump_size),
            ("add_rate", self.add_rate),
            ("execute_rate", self.execute_rate),
            ("cancel_rate", self.cancel_rate),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                return bad(format!("{name} must be a nonnegative number"));
            }
        }
        let f = self.signal.withdrawal_fraction;
        if !(0.0..=1.0).contains(&f) {
            return bad(format!("withdrawal fraction {f} outside [0, 1]"));
        }
        if self.minutes_per_day() < 2 {
            return bad("a day needs at least two minutes".into());
        }
        Ok(())
    }
}

/// Ground truth for one planted jump.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlantedJump {
    pub day: u32,
    pub minute_of_day: u32,
    /// Minute index in the glued stream; the jump lands in
    /// `(60 * minute, 60 * (minute + 1)]` seconds.
    pub minute: u32,
    /// Global second at which the jump is applied.
    pub second: u64,
    pub direction: JumpDirection,
    /// Log-return of the jump.
    pub size: f64,
}

pub fn write_truth(w: &mut impl Write, jumps: &[PlantedJump]) -> Result<(), SynthError> {
    writeln!(w, "day,minute,direction,size")?;
    for j in jumps {
        writeln!(w, "{},{},{},{:.9}", j.day, j.minute_of_day, j.direction.as_str(), j.size)?;
    }
    Ok(())
}

/// Reads a truth file back; `seconds_per_day` restores the global indices,
/// with the jump second placed at the end of its minute.
pub fn read_truth(r: impl BufRead, seconds_per_day: u32) -> Result<Vec<PlantedJump>, SynthError> {
    let mpd = seconds_per_day / 60;
    let mut out = Vec::new();
    for (i, line) in r.lines().enumerate() {
        let line = line?;
        if i == 0 || line.trim().is_empty() {
            continue;
        }
        let err = |m: &str| SynthError::Format { line: i + 1, message: m.to_string() };
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 4 {
            return Err(err("expected 4 fields"));
        }
        let day: u32 = f[0].parse().map_err(|_| err("bad day"))?;
        let minute_of_day: u32 = f[1].parse().map_err(|_| err("bad minute"))?;
        let direction = match f[2] {
            "up" => JumpDirection::Up,
            "down" => JumpDirection::Down,
            _ => return Err(err("bad direction")),
        };
        let size: f64 = f[3].parse().map_err(|_| err("bad size"))?;
        let minute = day * mpd + minute_of_day;
        out.push(PlantedJump { day, minute_of_day, minute, second: 60 * (minute as u64 + 1), direction, size });
    }
    Ok(out)
}

/// A full scenario produced one day at a time.
#[derive(Debug)]
pub struct ScenarioStream {
    cfg: ScenarioConfig,
    path: PricePath,
    flow: FlowGenerator,
    injector: Option<SignalInjector>,
    day: u32,
}

impl ScenarioStream {
    pub fn new(cfg: &ScenarioConfig) -> Result<Self, SynthError> {
        cfg.validate()?;
        let path = gen_price_path(cfg)?;
        let injector = (cfg.signal.withdrawal_fraction > 0.0).then(|| SignalInjector::new(&cfg.signal, &path.jumps));
        Ok(Self { cfg: cfg.clone(), flow: FlowGenerator::new(cfg), path, injector, day: 0 })
    }

    pub fn config(&self) -> &ScenarioConfig {
        &self.cfg
    }

    pub fn jumps(&self) -> &[PlantedJump] {
        &self.path.jumps
    }

    pub fn path(&self) -> &PricePath {
        &self.path
    }

    /// Events of the next day, or `None` after the last day.
    pub fn next_day(&mut self) -> Option<Vec<OrderEvent>> {
        if self.day >= self.cfg.days {
            return None;
        }
        let spd = self.cfg.seconds_per_day as u64;
        let first = self.day as u64 * spd + 1;
        let mut raw = Vec::new();
        self.flow.start_day(self.day);
        for s in first..first + spd {
            self.flow.second(s, self.path.price_ticks(s), &mut raw);
        }
        self.day += 1;
        Some(match &mut self.injector {
            None => raw,
            Some(inj) => {
                let mut out = Vec::with_capacity(raw.len());
                for e in raw {
                    inj.push(e, &mut out);
                }
                inj.flush((first + spd - 1) * NS, &mut out);
                out
            }
        })
    }
}

/// Every event of a scenario plus its truth list.
pub fn generate(cfg: &ScenarioConfig) -> Result<(Vec<OrderEvent>, Vec<PlantedJump>), SynthError> {
    let mut stream = ScenarioStream::new(cfg)?;
    let mut events = Vec::new();
    while let Some(day) = stream.next_day() {
        events.extend(day);
    }
    Ok((events, stream.path.jumps.clone()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn truth_roundtrip() {
        let jumps = vec![
            PlantedJump { day: 0, minute_of_day: 5, minute: 5, second: 360, direction: JumpDirection::Up, size: 0.005 },
            PlantedJump {
                day: 2,
                minute_of_day: 389,
                minute: 1169,
                second: 70_200,
                direction: JumpDirection::Down,
                size: -0.004,
            },
        ];
        let mut buf = Vec::new();
        write_truth(&mut buf, &jumps).unwrap();
        let back = read_truth(&buf[..], SESSION_SECONDS).unwrap();
        assert_eq!(back, jumps);
    }

    #[test]
    fn presets_validate() {
        for name in ["demo", "nosignal", "tiny", "aapl"] {
            ScenarioConfig::preset(name).unwrap().validate().unwrap();
        }
        let mut c = ScenarioConfig::tiny();
        c.signal.withdrawal_fraction = 1.5;
        assert!(c.validate().is_err());
        c = ScenarioConfig { seconds_per_day: 61, ..ScenarioConfig::tiny() };
        assert!(c.validate().is_err());
    }
}
