use std::collections::HashMap;

use super::{PlantedJump, SignalConfig};
use crate::jump::JumpDirection;
use crate::lob::{Action, OrderBook, OrderEvent, Side};

const NS: u64 = 1_000_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum Phase {
    // Ends sort before starts at the same instant.
    End,
    Start,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
struct Boundary {
    at_ns: u64,
    phase: Phase,
    side: Side,
}

/// Thins resting depth ahead of each planted jump and restores it after.
///
/// For a jump in minute `m` the window opens `lead_seconds` before the
/// minute starts and closes when the minute ends. On opening, a fraction
/// `f` of every resting order on the affected side is cancelled, deeper
/// levels included so that a drifting touch does not uncover full depth; while open, adds on that side are scaled by `1 - f`. After
/// closing, later adds on that side are enlarged until the withdrawn volume
/// has been posted back.
///
/// Orders keep their ids, so every later cancel or execution still refers
/// to a live order: removals are clamped to what rests, and an event that
/// empties an order in the input stream empties it in the output too.
#[derive(Debug)]
pub struct SignalInjector {
    fraction: f64,
    boundaries: Vec<Boundary>,
    next: usize,
    active: [u32; 2],
    owed: [u64; 2],
    withdrawing: [u64; 2],
    book: OrderBook,
    /// Remaining size of each live order in the input stream.
    raw: HashMap<u64, u64>,
    dropped: usize,
    last_ts: u64,
}

impl SignalInjector {
    pub fn new(cfg: &SignalConfig, jumps: &[PlantedJump]) -> Self {
        let mut boundaries = Vec::new();
        for j in jumps {
            let minute_start = 60 * j.minute as u64;
            let start = minute_start.saturating_sub(cfg.lead_seconds as u64) * NS;
            let end = (minute_start + 60) * NS + 1;
            let sides: &[Side] = match (cfg.symmetric, j.direction) {
                (true, _) => &[Side::Bid, Side::Ask],
                (false, JumpDirection::Down) => &[Side::Bid],
                (false, _) => &[Side::Ask],
            };
            for &side in sides {
                boundaries.push(Boundary { at_ns: start, phase: Phase::Start, side });
                boundaries.push(Boundary { at_ns: end, phase: Phase::End, side });
            }
        }
        boundaries.sort();
        Self {
            fraction: cfg.withdrawal_fraction,
            boundaries,
            next: 0,
            active: [0; 2],
            owed: [0; 2],
            withdrawing: [0; 2],
            book: OrderBook::new(),
            raw: HashMap::new(),
            dropped: 0,
            last_ts: 0,
        }
    }

    fn emit(&mut self, e: OrderEvent, out: &mut Vec<OrderEvent>) {
        self.book.apply(&e).expect("injector keeps the stream consistent");
        self.last_ts = e.timestamp_ns;
        out.push(e);
    }

    fn open(&mut self, side: Side, ts: u64, out: &mut Vec<OrderEvent>) {
        self.active[side.index()] += 1;
        let mut victims: Vec<(u64, i64, u64)> = self
            .book
            .live_orders()
            .into_iter()
            .filter(|(_, o)| o.side == side)
            .map(|(id, o)| (id, o.price, o.remaining))
            .collect();
        victims.sort_unstable();
        for (id, price, remaining) in victims {
            let q = (self.fraction * remaining as f64).floor() as u64;
            if q > 0 {
                self.withdrawing[side.index()] += q;
                self.emit(OrderEvent::cancel(ts, id, side, price, q), out);
            }
        }
    }

    fn close(&mut self, side: Side) {
        let i = side.index();
        self.active[i] -= 1;
        if self.active[i] == 0 {
            self.owed[i] += std::mem::take(&mut self.withdrawing[i]);
        }
    }

    fn advance(&mut self, until_ns: u64, out: &mut Vec<OrderEvent>) {
        while let Some(&b) = self.boundaries.get(self.next) {
            if b.at_ns > until_ns {
                break;
            }
            self.next += 1;
            match b.phase {
                Phase::Start => self.open(b.side, b.at_ns.max(self.last_ts), out),
                Phase::End => self.close(b.side),
            }
        }
    }

    /// Transforms one event, emitting any window openings that precede it.
    pub fn push(&mut self, e: OrderEvent, out: &mut Vec<OrderEvent>) {
        self.advance(e.timestamp_ns, out);
        let mut e = e;
        let i = e.side.index();
        match e.action {
            Action::Add => {
                self.raw.insert(e.order_id, e.quantity);
                let q = e.quantity as f64;
                if self.active[i] > 0 {
                    e.quantity = (q * (1.0 - self.fraction)).round().max(1.0) as u64;
                } else if self.owed[i] > 0 {
                    let bonus = (q * self.fraction / (1.0 - self.fraction).max(0.05)).round() as u64;
                    let bonus = bonus.min(self.owed[i]);
                    self.owed[i] -= bonus;
                    e.quantity += bonus;
                }
                self.emit(e, out);
            }
            Action::Cancel | Action::Execute => {
                let raw = self.raw.get_mut(&e.order_id).expect("input stream is consistent");
                *raw -= e.quantity;
                let emptied = *raw == 0;
                if emptied {
                    self.raw.remove(&e.order_id);
                }
                let Some(o) = self.book.order(e.order_id) else {
                    self.dropped += 1;
                    return;
                };
                e.quantity = if emptied { o.remaining } else { e.quantity.min(o.remaining) };
                self.emit(e, out);
            }
        }
    }

    /// Emits the window openings due at or before `until_ns`. Call it at a
    /// day's close so those cancels are not stamped into the next day.
    pub fn flush(&mut self, until_ns: u64, out: &mut Vec<OrderEvent>) {
        self.advance(until_ns, out);
    }

    /// Input events that were dropped because their order had been withdrawn.
    pub fn dropped(&self) -> usize {
        self.dropped
    }
}

/// Applies [`SignalInjector`] to a whole stream. A zero fraction returns the
/// stream unchanged.
pub fn inject_liquidity_signal(events: &[OrderEvent], jumps: &[PlantedJump], cfg: &SignalConfig) -> Vec<OrderEvent> {
    if cfg.withdrawal_fraction == 0.0 {
        return events.to_vec();
    }
    let mut inj = SignalInjector::new(cfg, jumps);
    let mut out = Vec::with_capacity(events.len());
    for &e in events {
        inj.push(e, &mut out);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn jump(minute: u32, direction: JumpDirection) -> PlantedJump {
        PlantedJump { day: 0, minute_of_day: minute, minute, second: 60 * minute as u64 + 30, direction, size: 0.0 }
    }

    #[test]
    fn withdraws_then_replenishes() {
        let mut ev = Vec::new();
        for k in 0..10 {
            ev.push(OrderEvent::add(k + 1, 1 + k, Side::Ask, 101 + k as i64, 1000));
            ev.push(OrderEvent::add(k + 1, 100 + k, Side::Bid, 100 - k as i64, 1000));
        }
        // A partial cancel of a thinned ask, then one that empties another.
        ev.push(OrderEvent::cancel(400 * NS, 1, Side::Ask, 101, 100));
        ev.push(OrderEvent::cancel(401 * NS, 2, Side::Ask, 102, 1000));
        // Asks after the window are enlarged until 8000 is repaid.
        ev.push(OrderEvent::add(500 * NS, 500, Side::Ask, 111, 1000));
        ev.push(OrderEvent::add(501 * NS, 501, Side::Ask, 111, 1000));
        ev.push(OrderEvent::add(502 * NS, 502, Side::Ask, 111, 1000));
        let cfg = SignalConfig { lead_seconds: 120, withdrawal_fraction: 0.8, symmetric: false };
        let out = inject_liquidity_signal(&ev, &[jump(5, JumpDirection::Up)], &cfg);
        let mut book = OrderBook::new();
        let mut ask_depth_in_window = None;
        for e in &out {
            if e.timestamp_ns > 180 * NS && ask_depth_in_window.is_none() {
                ask_depth_in_window = Some(book.levels(Side::Ask).map(|(_, v)| v).sum::<u64>());
            }
            book.apply(e).unwrap();
        }
        assert!(out.windows(2).all(|w| w[0].timestamp_ns <= w[1].timestamp_ns));
        assert_eq!(ask_depth_in_window, Some(10 * 200));
        assert_eq!(book.order(1).unwrap().remaining, 100);
        assert!(book.order(2).is_none());
        // Bonuses of 4000, 4000 and 0 (the debt is paid).
        assert_eq!(book.order(500).unwrap().remaining, 5000);
        assert_eq!(book.order(501).unwrap().remaining, 5000);
        assert_eq!(book.order(502).unwrap().remaining, 1000);
        let bids: u64 = book.levels(Side::Bid).map(|(_, v)| v).sum();
        assert_eq!(bids, 10 * 1000);
    }

    #[test]
    fn zero_fraction_is_identity() {
        let ev = vec![OrderEvent::add(1, 1, Side::Ask, 101, 10)];
        let cfg = SignalConfig::default();
        assert_eq!(inject_liquidity_signal(&ev, &[jump(5, JumpDirection::Up)], &cfg), ev);
    }
}
