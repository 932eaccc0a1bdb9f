use std::collections::HashMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::lob::{OrderEvent, Price, Side};

const NS: u64 = 1_000_000_000;
const BASE: Price = 1_000;

/// A valid, uncrossable random stream of `n_events` over `seconds` seconds.
///
/// Bids rest in `[BASE - 100, BASE - 1]` and asks in `[BASE + 1, BASE + 100]`,
/// so the book never crosses. Roughly half the events are adds; the rest are
/// partial or full cancels and executions of random live orders.
pub fn random_events(n_events: usize, seconds: u32, seed: u64) -> Vec<OrderEvent> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let span = seconds as u64 * NS;
    let mut ts: Vec<u64> = (0..n_events).map(|_| rng.gen_range(1..=span.max(1))).collect();
    ts.sort_unstable();
    let mut live: Vec<u64> = Vec::new();
    let mut orders: HashMap<u64, (Side, Price, u64)> = HashMap::new();
    let mut next_id = 1;
    let mut out = Vec::with_capacity(n_events);
    for t in ts {
        if live.is_empty() || rng.gen_bool(0.5) {
            let side = if rng.gen_bool(0.5) { Side::Bid } else { Side::Ask };
            let offset = rng.gen_range(1..=100);
            let price = match side {
                Side::Bid => BASE - offset,
                Side::Ask => BASE + offset,
            };
            let qty = rng.gen_range(1..=500);
            orders.insert(next_id, (side, price, qty));
            live.push(next_id);
            out.push(OrderEvent::add(t, next_id, side, price, qty));
            next_id += 1;
            continue;
        }
        let k = rng.gen_range(0..live.len());
        let id = live[k];
        let (side, price, remaining) = orders[&id];
        let qty = if rng.gen_bool(0.5) { remaining } else { rng.gen_range(1..=remaining) };
        out.push(if rng.gen_bool(0.5) {
            OrderEvent::cancel(t, id, side, price, qty)
        } else {
            OrderEvent::execute(t, id, side, price, qty)
        });
        if qty == remaining {
            orders.remove(&id);
            live.swap_remove(k);
        } else {
            orders.get_mut(&id).unwrap().2 -= qty;
        }
    }
    out
}
