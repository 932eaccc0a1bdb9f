//! Detector calibration on simulated diffusions with planted jumps.

use jumpcast_core::jump::{detect_jumps, DetectorConfig, JumpDirection};
use jumpcast_core::synth::{gen_price_path, ScenarioConfig};

fn minute_prices(prices: &[f64]) -> Vec<f64> {
    prices.iter().skip(60).step_by(60).copied().collect()
}

/// Central interval of Binomial(n, p) holding at least `level` of the mass.
fn binomial_interval(n: u64, p: f64, level: f64) -> (u64, u64) {
    let tail = (1.0 - level) / 2.0;
    let mut pmf = (1.0 - p).powi(n as i32);
    let mut cdf = 0.0;
    let (mut lo, mut hi) = (None, n);
    for k in 0..=n {
        cdf += pmf;
        if lo.is_none() && cdf > tail {
            lo = Some(k);
        }
        if cdf >= 1.0 - tail {
            hi = k;
            break;
        }
        pmf *= (n - k) as f64 / (k + 1) as f64 * p / (1.0 - p);
    }
    (lo.unwrap_or(0), hi)
}

#[test]
fn binomial_interval_reference_values() {
    // Bin(98, 0.01): P(X <= 3) = 0.9828, P(X <= 4) = 0.9969.
    assert_eq!(binomial_interval(98, 0.01, 0.99), (0, 4));
    assert_eq!(binomial_interval(10, 0.5, 0.99), (1, 9));
}

#[test]
fn false_alarm_days_match_alpha() {
    let cfg = ScenarioConfig { days: 100, jump_intensity: 0.0, ..ScenarioConfig::default() };
    let det = DetectorConfig::default();
    let path = gen_price_path(&cfg).unwrap();
    let labels = detect_jumps(&minute_prices(&path.prices), &det).unwrap();
    let mpd = cfg.minutes_per_day();
    let mut days = 0;
    let mut alarm_days = 0;
    for d in 0..cfg.days as usize {
        let day = &labels[d * mpd..(d + 1) * mpd];
        if !day.iter().any(|l| l.detectable) {
            continue;
        }
        days += 1;
        alarm_days += day.iter().any(|l| l.is_jump) as u64;
    }
    assert_eq!(days, 98);
    let (lo, hi) = binomial_interval(days, det.alpha, 0.99);
    assert!((lo..=hi).contains(&alarm_days), "{alarm_days} alarm days outside [{lo}, {hi}]");
}

#[test]
fn planted_jumps_are_found_with_their_sign() {
    let cfg = ScenarioConfig { days: 40, jump_intensity: 2.0, jump_size: 10.0, ..ScenarioConfig::default() };
    let det = DetectorConfig::default();
    let path = gen_price_path(&cfg).unwrap();
    let labels = detect_jumps(&minute_prices(&path.prices), &det).unwrap();
    let planted: Vec<_> = path.jumps.iter().filter(|j| labels[j.minute as usize].detectable).collect();
    assert!(planted.len() > 50);
    let mut hits = 0;
    for j in &planted {
        let l = labels[j.minute as usize];
        if l.is_jump {
            hits += 1;
            assert_eq!(l.direction, j.direction, "minute {}", j.minute);
        }
    }
    let recall = hits as f64 / planted.len() as f64;
    assert!(recall >= 0.95, "recall {recall}");
    let jump_minutes: Vec<usize> = path.jumps.iter().map(|j| j.minute as usize).collect();
    let spurious = labels.iter().filter(|l| l.is_jump && !jump_minutes.contains(&l.minute_index)).count();
    assert!(spurious <= 3, "{spurious} spurious detections");
    assert!(labels.iter().all(|l| l.direction == JumpDirection::None || l.is_jump));
}
