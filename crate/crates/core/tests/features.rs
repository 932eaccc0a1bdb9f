//! Frame assembly against a slot-by-slot brute-force recomputation.

use jumpcast_core::features::{
    assemble, clock_v10, slot_index, slot_names, ClassCounts, FeatureAssembler, FeatureConfig, FeatureMatrix,
    N_SLOTS,
};
use jumpcast_core::lob::{replay, Action, BookSnapshot, OrderEvent, Side};
use jumpcast_core::synth::random_events;

const NS: u64 = 1_000_000_000;

fn slot(name: &str) -> usize {
    slot_index(name).unwrap_or_else(|| panic!("no slot {name}"))
}

fn side_arrays(s: &BookSnapshot) -> [[f64; 10]; 4] {
    [
        s.asks.map(|l| l.price as f64),
        s.asks.map(|l| l.volume as f64),
        s.bids.map(|l| l.price as f64),
        s.bids.map(|l| l.volume as f64),
    ]
}

/// Counts events of one kind with timestamps in `(from, to]` seconds.
fn count(events: &[OrderEvent], action: Action, side: Side, from: i64, to: i64) -> f64 {
    events
        .iter()
        .filter(|e| e.action == action && e.side == side)
        .filter(|e| {
            let t = e.timestamp_ns as i128;
            t > from as i128 * NS as i128 && t <= to as i128 * NS as i128
        })
        .count() as f64
}

/// Every slot of the frame at global second `g`, recomputed directly.
fn oracle(snaps: &[BookSnapshot], events: &[OrderEvent], g: usize, cfg: &FeatureConfig) -> Vec<(usize, f64)> {
    let dt = cfg.short_window as i64;
    let long = cfg.long_window as i64;
    let now = &snaps[g - 1];
    let past = &snaps[(g as i64 - dt).max(1) as usize - 1];
    let [pa, va, pb, vb] = side_arrays(now);
    let [ppa, pva, ppb, pvb] = side_arrays(past);
    let mut out = Vec::new();
    for i in 0..10 {
        let n = i + 1;
        out.push((slot(&format!("v1.ask_price.{n}")), pa[i]));
        out.push((slot(&format!("v1.ask_volume.{n}")), va[i]));
        out.push((slot(&format!("v1.bid_price.{n}")), pb[i]));
        out.push((slot(&format!("v1.bid_volume.{n}")), vb[i]));
        out.push((slot(&format!("v2.spread.{n}")), pa[i] - pb[i]));
        out.push((slot(&format!("v2.mid.{n}")), 0.5 * (pa[i] + pb[i])));
        out.push((slot(&format!("v6.d_ask_price.{n}")), (pa[i] - ppa[i]) / dt as f64));
        out.push((slot(&format!("v6.d_bid_price.{n}")), (pb[i] - ppb[i]) / dt as f64));
        out.push((slot(&format!("v6.d_ask_volume.{n}")), (va[i] - pva[i]) / dt as f64));
        out.push((slot(&format!("v6.d_bid_volume.{n}")), (vb[i] - pvb[i]) / dt as f64));
    }
    for i in 0..9 {
        out.push((slot(&format!("v3.ask_step.{}", i + 1)), (pa[i + 1] - pa[i]).abs()));
        out.push((slot(&format!("v3.bid_step.{}", i + 1)), (pb[i + 1] - pb[i]).abs()));
    }
    let mean = |x: &[f64; 10]| x.iter().sum::<f64>() / 10.0;
    out.push((slot("v4.ask_price_mean"), mean(&pa)));
    out.push((slot("v4.bid_price_mean"), mean(&pb)));
    out.push((slot("v4.ask_volume_mean"), mean(&va)));
    out.push((slot("v4.bid_volume_mean"), mean(&vb)));
    let diff = |a: &[f64; 10], b: &[f64; 10]| a.iter().zip(b).map(|(x, y)| x - y).sum::<f64>() / 10.0;
    out.push((slot("v5.price_diff_mean"), diff(&pa, &pb)));
    out.push((slot("v5.volume_diff_mean"), diff(&va, &vb)));

    let t = g as i64;
    let classes = [
        ("la", Action::Add, Side::Ask),
        ("lb", Action::Add, Side::Bid),
        ("ma", Action::Execute, Side::Ask),
        ("mb", Action::Execute, Side::Bid),
        ("ca", Action::Cancel, Side::Ask),
        ("cb", Action::Cancel, Side::Bid),
    ];
    for (name, a, s) in classes {
        let short = count(events, a, s, t - dt, t) / dt as f64;
        out.push((slot(&format!("v7.lambda_{name}")), short));
        if !name.starts_with('c') {
            let long_rate = count(events, a, s, t - long, t) / long as f64;
            out.push((slot(&format!("v8.rising_{name}")), if short > long_rate { 1.0 } else { 0.0 }));
            let prev = count(events, a, s, t - 2 * dt, t - dt) / dt as f64;
            out.push((slot(&format!("v9.accel_{name}")), (short - prev) / dt as f64));
        }
    }
    let second_of_day = (g - 1) % cfg.seconds_per_day as usize + 1;
    out.push((slot("v10.hour"), ((cfg.open_second_of_day as usize + second_of_day) / 3600) as f64));
    out
}

fn small_cfg() -> FeatureConfig {
    FeatureConfig { short_window: 60, long_window: 600, seconds_per_day: 900, open_second_of_day: 34_200 }
}

/// Builds frames for consecutive days of a glued stream.
fn frames_for(events: &[OrderEvent], days: u32, cfg: &FeatureConfig) -> (Vec<BookSnapshot>, FeatureMatrix) {
    let spd = cfg.seconds_per_day;
    let snaps = replay(events.iter().copied(), 1, days * spd).unwrap();
    let mut a = FeatureAssembler::new(cfg.clone());
    let mut out = FeatureMatrix::new(N_SLOTS);
    for d in 0..days {
        let lo = d as u64 * spd as u64 * NS;
        let day_events: Vec<OrderEvent> = events
            .iter()
            .filter(|e| e.timestamp_ns > lo && e.timestamp_ns <= lo + spd as u64 * NS)
            .map(|e| OrderEvent { timestamp_ns: e.timestamp_ns - lo, ..*e })
            .collect();
        let day_snaps: Vec<BookSnapshot> = snaps[(d * spd) as usize..((d + 1) * spd) as usize]
            .iter()
            .map(|s| BookSnapshot { second: s.second - d * spd, ..*s })
            .collect();
        a.push_day(&day_snaps, &day_events, &mut out).unwrap();
    }
    (snaps, out)
}

#[test]
fn every_slot_matches_brute_force() {
    let cfg = small_cfg();
    let ev = random_events(30_000, 1_800, 11);
    let (snaps, frames) = frames_for(&ev, 2, &cfg);
    assert_eq!(frames.n_frames(), 1_800);
    for g in 1..=1_800 {
        let row = frames.row(g - 1);
        let expected = oracle(&snaps, &ev, g, &cfg);
        assert_eq!(expected.len(), N_SLOTS);
        for (k, v) in expected {
            assert!((row[k] - v).abs() <= 1e-9 * v.abs().max(1.0), "second {g} slot {}: {} vs {v}", slot_names()[k], row[k]);
        }
    }
}

#[test]
fn indicators_are_binary_and_intensities_nonnegative() {
    let cfg = small_cfg();
    let ev = random_events(5_000, 900, 5);
    let (_, frames) = frames_for(&ev, 1, &cfg);
    for j in 0..frames.n_frames() {
        let r = frames.row(j);
        assert!(r[124..130].iter().all(|&x| x >= 0.0));
        assert!(r[130..134].iter().all(|&x| x == 0.0 || x == 1.0));
        assert_eq!(r[138].fract(), 0.0);
    }
}

#[test]
fn price_shift_moves_levels_only() {
    let cfg = small_cfg();
    let ev = random_events(20_000, 900, 21);
    let c = 37;
    let shifted: Vec<OrderEvent> = ev.iter().map(|e| OrderEvent { price: e.price + c, ..*e }).collect();
    let (snaps, a) = frames_for(&ev, 1, &cfg);
    let (_, b) = frames_for(&shifted, 1, &cfg);
    let full = |s: &BookSnapshot| s.asks.iter().chain(&s.bids).all(|l| l.price != 0);
    let mut checked = 0;
    for g in 61..=900usize {
        if !full(&snaps[g - 1]) || !full(&snaps[g - 61]) {
            continue;
        }
        checked += 1;
        let (ra, rb) = (a.row(g - 1), b.row(g - 1));
        for (k, name) in slot_names().iter().enumerate() {
            let moves = name.contains("_price.") || name.starts_with("v2.mid") || name.ends_with("price_mean");
            let expected = if moves && !name.starts_with("v6") { ra[k] + c as f64 } else { ra[k] };
            assert!((rb[k] - expected).abs() < 1e-9, "{name}: {} vs {expected}", rb[k]);
        }
    }
    assert!(checked > 500);
}

#[test]
fn counters_add_over_adjacent_windows() {
    let ev = random_events(10_000, 600, 8);
    let counts = ClassCounts::from_events(&ev, 600).unwrap();
    for t in [1, 59, 60, 300, 599, 600] {
        for (a, b) in [(1, 1), (10, 50), (60, 540), (7, 700)] {
            assert_eq!(counts.window(t, a + b), counts.window(t, a) + counts.window(t.saturating_sub(a), b));
        }
    }
}

#[test]
fn empty_day_has_only_the_clock() {
    let cfg = FeatureConfig::default();
    let snaps = replay(Vec::new(), 1, cfg.seconds_per_day).unwrap();
    let m = assemble(&snaps, &[], &cfg).unwrap();
    assert_eq!(m.n_frames(), 23_400);
    for j in [0, 1_799, 23_399] {
        let r = m.row(j);
        assert!(r[..138].iter().all(|&x| x == 0.0));
        assert_eq!(r[138], clock_v10(34_200 + j as u32 + 1));
    }
    assert_eq!(m.row(1_798)[138], 9.0);
    assert_eq!(m.row(1_799)[138], 10.0);
}

#[test]
fn burst_of_ask_adds_gives_rate_two() {
    let cfg = small_cfg();
    let ev: Vec<OrderEvent> =
        (0..120).map(|k| OrderEvent::add(60 * NS + 1 + k * NS / 2, k + 1, Side::Ask, 200, 1)).collect();
    let snaps = replay(ev.iter().copied(), 1, 900).unwrap();
    let m = assemble(&snaps, &ev, &cfg).unwrap();
    let r = m.row(119);
    assert_eq!(r[slot("v7.lambda_la")], 2.0);
    assert_eq!(r[slot("v8.rising_la")], 1.0);
    assert_eq!(r[slot("v9.accel_la")], 2.0 / 60.0);
}

#[test]
fn misaligned_inputs_are_rejected() {
    let cfg = small_cfg();
    let snaps = replay(Vec::new(), 1, 899).unwrap();
    assert!(assemble(&snaps, &[], &cfg).is_err());
    let snaps = replay(Vec::new(), 1, 900).unwrap();
    let late = [OrderEvent::add(901 * NS, 1, Side::Ask, 10, 1)];
    assert!(assemble(&snaps, &late, &cfg).is_err());
}
