//! Scenario generator: jump counts, flow rates, replayability and the
//! pre-jump liquidity signal.

use jumpcast_core::features::{slot_index, FeatureAssembler, FeatureConfig, FeatureMatrix, N_SLOTS};
use jumpcast_core::jump::JumpDirection;
use jumpcast_core::lob::{Action, BookSnapshot, OrderEvent, Replayer, Side};
use jumpcast_core::synth::{gen_price_path, generate, ScenarioConfig, ScenarioStream};

const NS: u64 = 1_000_000_000;

#[test]
fn jump_count_is_poisson() {
    let cfg = ScenarioConfig { days: 400, seconds_per_day: 600, jump_intensity: 2.0, ..ScenarioConfig::demo() };
    let n = gen_price_path(&cfg).unwrap().jumps.len() as f64;
    let mean = cfg.jump_intensity * cfg.days as f64;
    assert!((n - mean).abs() <= 3.0 * mean.sqrt(), "{n} jumps, expected {mean}");
}

#[test]
fn flow_rates_follow_configuration() {
    for (base, fraction) in [(ScenarioConfig::default(), 0.0), (ScenarioConfig::default(), 0.8), (ScenarioConfig::demo(), 0.8)] {
        let mut cfg = ScenarioConfig { days: 1, ..base };
        cfg.signal.withdrawal_fraction = fraction;
        let (ev, _) = generate(&cfg).unwrap();
        let minutes = cfg.minutes_per_day() as f64;
        let rate = |a: Action| ev.iter().filter(|e| e.action == a).count() as f64 / minutes;
        for (a, want) in [(Action::Add, cfg.add_rate), (Action::Execute, cfg.execute_rate), (Action::Cancel, cfg.cancel_rate)]
        {
            let got = rate(a);
            assert!((got / want - 1.0).abs() <= 0.05, "fraction {fraction} {a:?}: {got:.1}/min vs {want}");
        }
    }
}

/// Replays a glued scenario and collects every per-second snapshot.
fn snapshots(cfg: &ScenarioConfig) -> (Vec<BookSnapshot>, Vec<Vec<OrderEvent>>, ScenarioStream) {
    let mut stream = ScenarioStream::new(cfg).unwrap();
    let mut r = Replayer::new(1, cfg.total_seconds() as u32);
    let mut snaps = Vec::new();
    let mut days = Vec::new();
    while let Some(day) = stream.next_day() {
        for e in &day {
            r.push(e, &mut |s| snaps.push(s)).unwrap();
        }
        days.push(day);
    }
    r.finish(&mut |s| snaps.push(s)).unwrap();
    (snaps, days, stream)
}

#[test]
fn generated_streams_replay_cleanly_and_deterministically() {
    let cfg = ScenarioConfig { days: 4, ..ScenarioConfig::demo() };
    let (snaps, days, _) = snapshots(&cfg);
    assert_eq!(snaps.len() as u64, cfg.total_seconds());
    for s in &snaps {
        s.validate().unwrap();
        assert!(s.best_ask().is_some() && s.best_bid().is_some());
    }
    let again: Vec<OrderEvent> = days.into_iter().flatten().collect();
    assert_eq!(generate(&cfg).unwrap().0, again);
    let other = generate(&ScenarioConfig { seed: 1, ..cfg }).unwrap().0;
    assert_ne!(other, again);
}

/// Mean depth on `side` over global seconds `from..=to`.
fn mean_depth(snaps: &[BookSnapshot], side: Side, from: u64, to: u64) -> f64 {
    let v: Vec<f64> = (from..=to).map(|s| snaps[s as usize - 1].depth(side) as f64).collect();
    v.iter().sum::<f64>() / v.len() as f64
}

#[test]
fn withdrawal_thins_the_jump_side() {
    let cfg = ScenarioConfig { days: 6, ..ScenarioConfig::demo() };
    let lead = cfg.signal.lead_seconds as u64;
    let (snaps, _, stream) = snapshots(&cfg);
    let mut checked = 0;
    for j in stream.jumps() {
        let start = 60 * j.minute as u64;
        if start < lead + 300 {
            continue;
        }
        let side = if j.direction == JumpDirection::Up { Side::Ask } else { Side::Bid };
        let before = mean_depth(&snaps, side, start - lead - 120, start - lead - 1);
        let during = mean_depth(&snaps, side, start - lead + 1, start);
        assert!(during <= 0.4 * before, "jump at minute {}: depth {during:.0} vs {before:.0}", j.minute);
        checked += 1;
    }
    assert!(checked >= 5);
}

#[test]
fn volume_imbalance_flips_before_jumps() {
    let cfg = ScenarioConfig { days: 6, ..ScenarioConfig::demo() };
    let share = |cfg: &ScenarioConfig| {
        let (snaps, days, stream) = snapshots(cfg);
        let fc = FeatureConfig { seconds_per_day: cfg.seconds_per_day, ..FeatureConfig::default() };
        let spd = cfg.seconds_per_day as u64;
        let mut a = FeatureAssembler::new(fc);
        let mut frames = FeatureMatrix::new(N_SLOTS);
        for (d, day) in days.iter().enumerate() {
            let lo = d as u64 * spd;
            let ev: Vec<OrderEvent> =
                day.iter().map(|e| OrderEvent { timestamp_ns: e.timestamp_ns - lo * NS, ..*e }).collect();
            let sn: Vec<BookSnapshot> = snaps[lo as usize..(lo + spd) as usize]
                .iter()
                .map(|s| BookSnapshot { second: s.second - lo as u32, ..*s })
                .collect();
            a.push_day(&sn, &ev, &mut frames).unwrap();
        }
        let k = slot_index("v5.volume_diff_mean").unwrap();
        let mut agree = 0;
        let mut total = 0;
        for j in stream.jumps() {
            // The frame at the last second before the jump minute.
            let v = frames.row(60 * j.minute as usize - 1)[k];
            let thin_ask = v < 0.0;
            agree += (thin_ask == (j.direction == JumpDirection::Up)) as usize;
            total += 1;
        }
        agree as f64 / total as f64
    };
    let with_signal = share(&cfg);
    let mut quiet = cfg.clone();
    quiet.signal.withdrawal_fraction = 0.0;
    let without = share(&quiet);
    assert!(with_signal >= 0.9, "{with_signal}");
    assert!((0.2..=0.8).contains(&without), "{without}");
}

#[test]
fn every_event_falls_inside_its_own_day() {
    // Dense jumps on short days put withdrawal windows across session edges.
    let cfg = ScenarioConfig { days: 6, seconds_per_day: 1_800, jump_intensity: 40.0, ..ScenarioConfig::demo() };
    let mut stream = ScenarioStream::new(&cfg).unwrap();
    let spd = cfg.seconds_per_day as u64 * 1_000_000_000;
    let mut day = 0;
    while let Some(events) = stream.next_day() {
        let (lo, hi) = (day * spd, (day + 1) * spd);
        assert!(events.iter().all(|e| e.timestamp_ns > lo && e.timestamp_ns <= hi), "day {day}");
        assert!(events.windows(2).all(|w| w[0].timestamp_ns <= w[1].timestamp_ns));
        day += 1;
    }
    let first_minutes = stream.jumps().iter().filter(|j| j.minute_of_day < 2).count();
    assert!(first_minutes > 0, "no jump near an open");
}
