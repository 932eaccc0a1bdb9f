use std::ops::Add;

use super::{FeatureConfig, FeatureError, FeatureMatrix, N_SLOTS};
use crate::lob::{Action, BookSnapshot, OrderEvent, Side, BOOK_LEVELS};

const NS_PER_SEC: u64 = 1_000_000_000;

/// Event taxonomy for intensities: limit adds, executions, cancels per side.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EventClass {
    La,
    Lb,
    Ma,
    Mb,
    Ca,
    Cb,
}

impl EventClass {
    pub const ALL: [EventClass; 6] =
        [EventClass::La, EventClass::Lb, EventClass::Ma, EventClass::Mb, EventClass::Ca, EventClass::Cb];

    pub fn of(action: Action, side: Side) -> Self {
        match (action, side) {
            (Action::Add, Side::Ask) => EventClass::La,
            (Action::Add, Side::Bid) => EventClass::Lb,
            (Action::Execute, Side::Ask) => EventClass::Ma,
            (Action::Execute, Side::Bid) => EventClass::Mb,
            (Action::Cancel, Side::Ask) => EventClass::Ca,
            (Action::Cancel, Side::Bid) => EventClass::Cb,
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }
}

/// Second bucket of an event: `(s - 1, s]` maps to `s`, with the open itself folded into second 1.
pub fn event_second(timestamp_ns: u64) -> u64 {
    timestamp_ns.div_ceil(NS_PER_SEC).max(1)
}

/// Event counts per class over a window of `seconds` seconds.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct IntensityCounters {
    pub counts: [u64; 6],
    pub seconds: u64,
}

impl IntensityCounters {
    /// Events per second for one class; zero for an empty window.
    pub fn rate(&self, class: EventClass) -> f64 {
        if self.seconds == 0 {
            return 0.0;
        }
        self.counts[class.index()] as f64 / self.seconds as f64
    }

    pub fn rates(&self) -> [f64; 6] {
        EventClass::ALL.map(|c| self.rate(c))
    }
}

impl Add for IntensityCounters {
    type Output = Self;

    fn add(self, rhs: Self) -> Self {
        let mut counts = self.counts;
        for (c, r) in counts.iter_mut().zip(rhs.counts) {
            *c += r;
        }
        Self { counts, seconds: self.seconds + rhs.seconds }
    }
}

/// Cumulative per-second class counts over one stream; `cum[s]` counts events
/// with bucket `<= s`.
#[derive(Debug, Clone)]
pub struct ClassCounts {
    cum: Vec<[u64; 6]>,
}

impl ClassCounts {
    pub fn from_events<'a>(
        events: impl IntoIterator<Item = &'a OrderEvent>,
        n_seconds: usize,
    ) -> Result<Self, FeatureError> {
        let mut per = vec![[0u64; 6]; n_seconds + 1];
        for e in events {
            let s = event_second(e.timestamp_ns) as usize;
            if s > n_seconds {
                return Err(FeatureError::StreamMisalignment(format!(
                    "event at {} ns lies after second {n_seconds}",
                    e.timestamp_ns
                )));
            }
            per[s][EventClass::of(e.action, e.side).index()] += 1;
        }
        for s in 1..per.len() {
            let prev = per[s - 1];
            for (c, p) in per[s].iter_mut().zip(prev) {
                *c += p;
            }
        }
        Ok(Self { cum: per })
    }

    pub fn n_seconds(&self) -> usize {
        self.cum.len() - 1
    }

    fn cum_at(&self, s: i64) -> [u64; 6] {
        if s < 0 {
            [0; 6]
        } else {
            self.cum[(s as usize).min(self.cum.len() - 1)]
        }
    }

    /// Counts over `(t - len, t]`; the part before the stream start is empty.
    pub fn window(&self, t: usize, len: usize) -> IntensityCounters {
        window_from(|s| self.cum_at(s), t as i64, len)
    }
}

fn window_from(cum_at: impl Fn(i64) -> [u64; 6], t: i64, len: usize) -> IntensityCounters {
    let hi = cum_at(t);
    let lo = cum_at(t - len as i64);
    let mut counts = [0u64; 6];
    for k in 0..6 {
        counts[k] = hi[k] - lo[k];
    }
    IntensityCounters { counts, seconds: len as u64 }
}

fn intensity_slots(cum_at: impl Fn(i64) -> [u64; 6], t: i64, dt: usize, long: usize) -> [f64; 14] {
    let short = window_from(&cum_at, t, dt);
    let long_w = window_from(&cum_at, t, long);
    let prev = window_from(&cum_at, t - dt as i64, dt);
    let mut out = [0.0; 14];
    out[..6].copy_from_slice(&short.rates());
    use EventClass::*;
    for (k, c) in [La, Lb, Ma, Mb].into_iter().enumerate() {
        out[6 + k] = if short.rate(c) > long_w.rate(c) { 1.0 } else { 0.0 };
    }
    for (k, c) in [Ma, Lb, Mb, La].into_iter().enumerate() {
        out[10 + k] = (short.rate(c) - prev.rate(c)) / dt as f64;
    }
    out
}

/// v7 rates, v8 indicators and v9 accelerations at second `t`.
pub fn intensities_v7_v9(counts: &ClassCounts, t: usize, dt: usize, long: usize) -> [f64; 14] {
    intensity_slots(|s| counts.cum_at(s), t as i64, dt, long)
}

pub fn basic_v1(s: &BookSnapshot) -> [f64; 40] {
    let mut out = [0.0; 40];
    for i in 0..BOOK_LEVELS {
        out[4 * i] = s.asks[i].price as f64;
        out[4 * i + 1] = s.asks[i].volume as f64;
        out[4 * i + 2] = s.bids[i].price as f64;
        out[4 * i + 3] = s.bids[i].volume as f64;
    }
    out
}

pub fn time_insensitive_v2_v5(s: &BookSnapshot) -> [f64; 44] {
    let mut out = [0.0; 44];
    let pa = s.asks.map(|l| l.price as f64);
    let pb = s.bids.map(|l| l.price as f64);
    let va = s.asks.map(|l| l.volume as f64);
    let vb = s.bids.map(|l| l.volume as f64);
    for i in 0..BOOK_LEVELS {
        out[2 * i] = pa[i] - pb[i];
        out[2 * i + 1] = (pa[i] + pb[i]) / 2.0;
    }
    for i in 0..BOOK_LEVELS - 1 {
        out[20 + 2 * i] = (pa[i + 1] - pa[i]).abs();
        out[20 + 2 * i + 1] = (pb[i + 1] - pb[i]).abs();
    }
    let n = BOOK_LEVELS as f64;
    let mean = |x: &[f64]| x.iter().sum::<f64>() / n;
    out[38] = mean(&pa);
    out[39] = mean(&pb);
    out[40] = mean(&va);
    out[41] = mean(&vb);
    out[42] = out[38] - out[39];
    out[43] = out[40] - out[41];
    out
}

/// Difference quotients over `dt` seconds from a trailing per-second v1
/// history whose last entry is the current second.
pub fn derivatives_v6(history: &[[f64; 40]], dt: usize) -> Result<[f64; 40], FeatureError> {
    if dt == 0 || history.len() <= dt {
        return Err(FeatureError::InsufficientHistory { needed: dt + 1, available: history.len() });
    }
    let now = &history[history.len() - 1];
    let past = &history[history.len() - 1 - dt];
    Ok(quotient(now, past, dt))
}

fn quotient(now: &[f64; 40], past: &[f64; 40], dt: usize) -> [f64; 40] {
    let mut out = [0.0; 40];
    for i in 0..BOOK_LEVELS {
        // v1 order is (Pa, Va, Pb, Vb); v6 order is (dPa, dPb, dVa, dVb).
        for (dst, src) in [(0, 0), (1, 2), (2, 1), (3, 3)] {
            out[4 * i + dst] = (now[4 * i + src] - past[4 * i + src]) / dt as f64;
        }
    }
    out
}

/// Wall-clock hour for a time given in seconds since midnight.
pub fn clock_v10(seconds_since_midnight: u32) -> f64 {
    (seconds_since_midnight / 3600) as f64
}

/// Streaming frame builder over consecutive trading days.
///
/// Days are glued end to end: the second `s` of day `d` is global second
/// `d * seconds_per_day + s`, so trailing windows reach into the previous day.
#[derive(Debug, Clone)]
pub struct FeatureAssembler {
    cfg: FeatureConfig,
    cum_ring: Vec<[u64; 6]>,
    v1_ring: Vec<[f64; 40]>,
    /// Last global second pushed.
    last: i64,
    first: i64,
    days: u32,
}

impl FeatureAssembler {
    pub fn new(cfg: FeatureConfig) -> Self {
        assert!(cfg.short_window > 0 && cfg.long_window > 0, "windows must be positive");
        let h = cfg.long_window.max(2 * cfg.short_window) + 1;
        Self { cum_ring: vec![[0; 6]; h], v1_ring: vec![[0.0; 40]; cfg.short_window + 1], cfg, last: 0, first: 1, days: 0 }
    }

    pub fn config(&self) -> &FeatureConfig {
        &self.cfg
    }

    pub fn days_pushed(&self) -> u32 {
        self.days
    }

    fn cum_at(&self, g: i64) -> [u64; 6] {
        if g < self.first {
            return [0; 6];
        }
        debug_assert!(self.last - g < self.cum_ring.len() as i64);
        self.cum_ring[(g as usize) % self.cum_ring.len()]
    }

    /// Appends one day's frames to `out`. Snapshots must cover seconds
    /// `1..=seconds_per_day`, events must lie inside the session.
    pub fn push_day(
        &mut self,
        snapshots: &[BookSnapshot],
        events: &[OrderEvent],
        out: &mut FeatureMatrix,
    ) -> Result<(), FeatureError> {
        let spd = self.cfg.seconds_per_day as usize;
        if out.n_slots() != N_SLOTS {
            return Err(FeatureError::StreamMisalignment(format!("output has {} slots", out.n_slots())));
        }
        if snapshots.len() != spd {
            return Err(FeatureError::StreamMisalignment(format!(
                "expected {spd} snapshots, got {}",
                snapshots.len()
            )));
        }
        if let Some((k, s)) = snapshots.iter().enumerate().find(|(k, s)| s.second as usize != k + 1) {
            return Err(FeatureError::StreamMisalignment(format!(
                "snapshot {k} is for second {}, expected {}",
                s.second,
                k + 1
            )));
        }
        let day_counts = ClassCounts::from_events(events, spd)?;
        let base = self.days as i64 * spd as i64;
        let dt = self.cfg.short_window;
        let mut row = [0.0; N_SLOTS];
        for (k, snap) in snapshots.iter().enumerate() {
            let s = k + 1;
            let g = base + s as i64;
            let prev = self.cum_at(g - 1);
            let here = day_counts.cum_at(s as i64);
            let before = day_counts.cum_at(s as i64 - 1);
            let mut c = prev;
            for j in 0..6 {
                c[j] += here[j] - before[j];
            }
            let n = self.cum_ring.len();
            self.cum_ring[(g as usize) % n] = c;
            self.last = g;

            let v1 = basic_v1(snap);
            let m = self.v1_ring.len();
            self.v1_ring[(g as usize) % m] = v1;
            let past_g = (g - dt as i64).max(self.first);
            let past = self.v1_ring[(past_g as usize) % m];

            row[..40].copy_from_slice(&v1);
            row[40..84].copy_from_slice(&time_insensitive_v2_v5(snap));
            row[84..124].copy_from_slice(&quotient(&v1, &past, dt));
            row[124..138].copy_from_slice(&intensity_slots(|x| self.cum_at(x), g, dt, self.cfg.long_window));
            row[138] = clock_v10(self.cfg.open_second_of_day + s as u32);
            out.push_row(&row);
        }
        self.days += 1;
        Ok(())
    }
}

/// Frames for a single day stream.
pub fn assemble(
    snapshots: &[BookSnapshot],
    events: &[OrderEvent],
    cfg: &FeatureConfig,
) -> Result<FeatureMatrix, FeatureError> {
    let mut a = FeatureAssembler::new(cfg.clone());
    let mut out = FeatureMatrix::with_capacity(N_SLOTS, snapshots.len());
    a.push_day(snapshots, events, &mut out)?;
    Ok(out)
}
