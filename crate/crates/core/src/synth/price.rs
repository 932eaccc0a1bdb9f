use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson, StandardNormal};

use super::{PlantedJump, ScenarioConfig, SynthError};
use crate::jump::JumpDirection;

/// Per-second reference mid-price; `prices[s]` is the level after second `s`
/// of the glued stream, `prices[0]` the opening level.
#[derive(Debug, Clone, PartialEq)]
pub struct PricePath {
    pub prices: Vec<f64>,
    pub tick_size: f64,
    pub jumps: Vec<PlantedJump>,
}

impl PricePath {
    pub fn price_ticks(&self, second: u64) -> f64 {
        self.prices[second as usize] / self.tick_size
    }
}

pub(crate) fn day_rng(seed: u64, day: u32, stream: u64) -> ChaCha8Rng {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    r.set_stream(stream);
    r.set_word_pos(day as u128 * (1u128 << 40));
    r
}

/// Brownian log-price with Poisson-many planted jumps per day.
///
/// Jumps never land in the first minute of a day. Each jump has a random sign
/// and an intra-minute offset of 1 to 60 seconds.
pub fn gen_price_path(cfg: &ScenarioConfig) -> Result<PricePath, SynthError> {
    cfg.validate()?;
    let spd = cfg.seconds_per_day as u64;
    let mpd = cfg.minutes_per_day();
    let sigma_s = cfg.sigma_per_minute / 60f64.sqrt();
    let mut prices = Vec::with_capacity(cfg.total_seconds() as usize + 1);
    let mut log_p = cfg.start_price.ln();
    prices.push(cfg.start_price);
    let mut jumps = Vec::new();
    for day in 0..cfg.days {
        let mut rng = day_rng(cfg.seed, day, 1);
        let n_jumps = if cfg.jump_intensity > 0.0 {
            let draw: f64 = Poisson::new(cfg.jump_intensity).expect("positive intensity").sample(&mut rng);
            (draw as usize).min(mpd - 1)
        } else {
            0
        };
        let mut minutes: Vec<usize> = sample(&mut rng, mpd - 1, n_jumps).into_iter().map(|m| m + 1).collect();
        minutes.sort_unstable();
        let mut day_jumps: Vec<PlantedJump> = minutes
            .into_iter()
            .map(|mod_| {
                let up = rng.gen_bool(0.5);
                let offset: u64 = rng.gen_range(1..=60);
                let minute = day * mpd as u32 + mod_ as u32;
                let size = cfg.jump_size * cfg.sigma_per_minute * if up { 1.0 } else { -1.0 };
                PlantedJump {
                    day,
                    minute_of_day: mod_ as u32,
                    minute,
                    second: 60 * minute as u64 + offset,
                    direction: if up { JumpDirection::Up } else { JumpDirection::Down },
                    size,
                }
            })
            .collect();
        let mut next = 0;
        let first = day as u64 * spd + 1;
        for s in first..first + spd {
            let z: f64 = rng.sample(StandardNormal);
            log_p += sigma_s * z - 0.5 * sigma_s * sigma_s;
            if next < day_jumps.len() && day_jumps[next].second == s {
                log_p += day_jumps[next].size;
                next += 1;
            }
            prices.push(log_p.exp());
        }
        jumps.append(&mut day_jumps);
    }
    Ok(PricePath { prices, tick_size: cfg.tick_size, jumps })
}
