use std::collections::{BTreeMap, HashMap, VecDeque};

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};

use super::price::day_rng;
use super::ScenarioConfig;
use crate::lob::{OrderEvent, Price, Side, BOOK_LEVELS};

const NS: u64 = 1_000_000_000;
/// Resting orders further than this many ticks outside the touch are pulled.
const STALE_TICKS: Price = 20;
const LOT: u64 = 100;

#[derive(Debug, Clone, Copy)]
struct Resting {
    side: Side,
    price: Price,
    remaining: u64,
}

#[derive(Debug, Clone, Copy)]
enum Kind {
    Add,
    Execute,
    Cancel,
}

/// Order flow around a moving reference price.
///
/// Each second the generator first cancels orders the new reference has
/// crossed, then draws Poisson-many random adds, executions and cancels, and
/// finally pulls stale orders and tops up every ladder level holding less
/// than the configured minimum volume, so that the best bid and ask straddle
/// the reference at one tick spread and depth stays near a stable level. Those forced
/// adds and cancels are charged against the random budget of the following
/// seconds, keeping realised rates close to the configured ones.
#[derive(Debug)]
pub struct FlowGenerator {
    seed: u64,
    rates: [f64; 3],
    rng: ChaCha8Rng,
    orders: HashMap<u64, Resting>,
    levels: [BTreeMap<Price, VecDeque<u64>>; 2],
    ids: Vec<u64>,
    pos: HashMap<u64, usize>,
    next_id: u64,
    debt_add: u64,
    debt_cancel: u64,
    floor: u64,
}

impl FlowGenerator {
    pub fn new(cfg: &ScenarioConfig) -> Self {
        Self {
            seed: cfg.seed,
            rates: [cfg.add_rate / 60.0, cfg.execute_rate / 60.0, cfg.cancel_rate / 60.0],
            rng: day_rng(cfg.seed, 0, 2),
            orders: HashMap::new(),
            levels: [BTreeMap::new(), BTreeMap::new()],
            ids: Vec::new(),
            pos: HashMap::new(),
            next_id: 1,
            debt_add: 0,
            debt_cancel: 0,
            floor: cfg.min_level_volume.max(1),
        }
    }

    /// Switches to the random stream of `day`.
    pub fn start_day(&mut self, day: u32) {
        self.rng = day_rng(self.seed, day, 2);
    }

    pub fn live_orders(&self) -> usize {
        self.orders.len()
    }

    fn add(&mut self, ts: u64, side: Side, price: Price, qty: u64, out: &mut Vec<OrderEvent>) {
        let id = self.next_id;
        self.next_id += 1;
        self.orders.insert(id, Resting { side, price, remaining: qty });
        self.levels[side.index()].entry(price).or_default().push_back(id);
        self.pos.insert(id, self.ids.len());
        self.ids.push(id);
        out.push(OrderEvent::add(ts, id, side, price, qty));
    }

    /// Removes `qty` from order `id`, dropping it when exhausted.
    fn reduce(&mut self, id: u64, qty: u64) {
        let o = self.orders.get_mut(&id).expect("live order");
        o.remaining -= qty;
        if o.remaining > 0 {
            return;
        }
        let o = self.orders.remove(&id).unwrap();
        let book = &mut self.levels[o.side.index()];
        let q = book.get_mut(&o.price).unwrap();
        q.retain(|&x| x != id);
        if q.is_empty() {
            book.remove(&o.price);
        }
        let p = self.pos.remove(&id).unwrap();
        self.ids.swap_remove(p);
        if let Some(&moved) = self.ids.get(p) {
            self.pos.insert(moved, p);
        }
    }

    fn cancel_all(&mut self, ts: &mut u64, ids: Vec<u64>, out: &mut Vec<OrderEvent>) -> u64 {
        let n = ids.len() as u64;
        for id in ids {
            let o = self.orders[&id];
            out.push(OrderEvent::cancel(*ts, id, o.side, o.price, o.remaining));
            *ts += 1;
            self.reduce(id, o.remaining);
        }
        n
    }

    fn ids_in(&self, side: Side, range: impl std::ops::RangeBounds<Price>) -> Vec<u64> {
        self.levels[side.index()].range(range).flat_map(|(_, q)| q.iter().copied()).collect()
    }

    fn level_volume(&self, side: Side, price: Price) -> u64 {
        self.levels[side.index()].get(&price).map_or(0, |q| q.iter().map(|id| self.orders[id].remaining).sum())
    }

    fn lot(&mut self, max: u64) -> u64 {
        LOT * self.rng.gen_range(1..=max)
    }

    fn draw(&mut self, k: usize) -> u64 {
        if self.rates[k] > 0.0 {
            Poisson::new(self.rates[k]).unwrap().sample(&mut self.rng) as u64
        } else {
            0
        }
    }

    /// Emits the events of global second `second` (timestamps in
    /// `((second - 1) s, second s]`) for a reference price in ticks. With
    /// every rate at zero there is no flow at all, not even quotes.
    pub fn second(&mut self, second: u64, reference: f64, out: &mut Vec<OrderEvent>) {
        if self.rates.iter().all(|&r| r == 0.0) {
            return;
        }
        let bid = reference.floor() as Price;
        let ask = bid + 1;
        let base = (second - 1) * NS;

        let mut ts = base + 1;
        let crossed: Vec<u64> =
            self.ids_in(Side::Bid, ask..).into_iter().chain(self.ids_in(Side::Ask, ..=bid)).collect();
        let forced_cancels = self.cancel_all(&mut ts, crossed, out);

        let n_add = self.draw(0);
        let n_exec = self.draw(1);
        let n_cancel = self.draw(2);
        let pay = |budget: u64, debt: &mut u64| {
            let paid = budget.min(*debt);
            *debt -= paid;
            budget - paid
        };
        let n_add = pay(n_add, &mut self.debt_add);
        let n_cancel = pay(n_cancel, &mut self.debt_cancel);
        let mut kinds: Vec<Kind> = std::iter::repeat(Kind::Add)
            .take(n_add as usize)
            .chain(std::iter::repeat(Kind::Execute).take(n_exec as usize))
            .chain(std::iter::repeat(Kind::Cancel).take(n_cancel as usize))
            .collect();
        kinds.shuffle(&mut self.rng);
        let mut offsets: Vec<u64> = (0..kinds.len()).map(|_| self.rng.gen_range(1_000_000..NS - 2_000_000)).collect();
        offsets.sort_unstable();
        for (kind, off) in kinds.into_iter().zip(offsets) {
            let ts = base + off;
            match kind {
                Kind::Add => {
                    let side = if self.rng.gen_bool(0.5) { Side::Bid } else { Side::Ask };
                    let mut k: Price = 0;
                    while k + 1 < BOOK_LEVELS as Price && self.rng.gen_bool(0.7) {
                        k += 1;
                    }
                    let price = match side {
                        Side::Bid => bid - k,
                        Side::Ask => ask + k,
                    };
                    let qty = self.lot(5);
                    self.add(ts, side, price, qty, out);
                }
                Kind::Execute => {
                    let side = if self.rng.gen_bool(0.5) { Side::Bid } else { Side::Ask };
                    let best = match side {
                        Side::Bid => self.levels[0].iter().next_back(),
                        Side::Ask => self.levels[1].iter().next(),
                    };
                    let Some(&id) = best.and_then(|(_, q)| q.front()) else { continue };
                    let o = self.orders[&id];
                    let qty = self.lot(3).min(o.remaining);
                    out.push(OrderEvent::execute(ts, id, side, o.price, qty));
                    self.reduce(id, qty);
                }
                Kind::Cancel => {
                    if self.ids.is_empty() {
                        continue;
                    }
                    let id = self.ids[self.rng.gen_range(0..self.ids.len())];
                    let o = self.orders[&id];
                    out.push(OrderEvent::cancel(ts, id, o.side, o.price, o.remaining));
                    self.reduce(id, o.remaining);
                }
            }
        }

        let mut ts = base + NS - 1_000_000;
        let stale: Vec<u64> = self
            .ids_in(Side::Bid, ..bid - STALE_TICKS)
            .into_iter()
            .chain(self.ids_in(Side::Ask, ask + STALE_TICKS + 1..))
            .collect();
        let forced_cancels = forced_cancels + self.cancel_all(&mut ts, stale, out);
        let mut forced_adds = 0;
        for k in 0..BOOK_LEVELS as Price {
            for (side, price) in [(Side::Bid, bid - k), (Side::Ask, ask + k)] {
                if self.level_volume(side, price) < self.floor {
                    let qty = self.lot(5);
                    self.add(ts, side, price, qty, out);
                    ts += 1;
                    forced_adds += 1;
                }
            }
        }
        self.debt_add += forced_adds;
        self.debt_cancel += forced_cancels;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lob::{mid_price, replay};

    #[test]
    fn ladder_straddles_reference() {
        let cfg = ScenarioConfig::tiny();
        let mut g = FlowGenerator::new(&cfg);
        let mut ev = Vec::new();
        let refs = [10_000.3, 10_000.9, 10_004.2, 9_990.0, 9_990.5];
        for (i, r) in refs.iter().enumerate() {
            g.second(i as u64 + 1, *r, &mut ev);
        }
        let snaps = replay(ev.iter().copied(), 1, refs.len() as u32).unwrap();
        for (s, r) in snaps.iter().zip(refs) {
            s.validate().unwrap();
            assert_eq!(mid_price(s).unwrap(), r.floor() + 0.5);
            assert!(s.asks.iter().chain(&s.bids).all(|l| l.volume > 0));
        }
    }

    #[test]
    fn zero_rates_give_empty_stream() {
        let cfg = ScenarioConfig { add_rate: 0.0, execute_rate: 0.0, cancel_rate: 0.0, ..ScenarioConfig::tiny() };
        let mut g = FlowGenerator::new(&cfg);
        let mut ev = Vec::new();
        for s in 1..=50 {
            g.second(s, 10_000.5, &mut ev);
        }
        assert!(ev.is_empty());
    }
}
