use std::collections::{BTreeMap, HashMap};

use super::{Action, BookSnapshot, Level, LobError, OrderEvent, Price, Side, BOOK_LEVELS};

/// A resting order.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LiveOrder {
    pub side: Side,
    pub price: Price,
    pub remaining: u64,
}

/// Incrementally maintained order book.
///
/// Level aggregates always equal the sum of remaining quantities of the live
/// orders at that price; empty levels are removed.
#[derive(Debug, Clone, Default)]
pub struct OrderBook {
    orders: HashMap<u64, LiveOrder>,
    bids: BTreeMap<Price, u64>,
    asks: BTreeMap<Price, u64>,
}

impl OrderBook {
    pub fn new() -> Self {
        Self::default()
    }

    /// Applies one event. On error the book is left untouched.
    pub fn apply(&mut self, event: &OrderEvent) -> Result<(), LobError> {
        if event.quantity == 0 {
            return Err(LobError::ZeroQuantity { order_id: event.order_id });
        }
        match event.action {
            Action::Add => {
                if event.price <= 0 {
                    return Err(LobError::InvalidPrice { order_id: event.order_id, price: event.price });
                }
                if self.orders.contains_key(&event.order_id) {
                    return Err(LobError::DuplicateOrderId { order_id: event.order_id });
                }
                self.orders.insert(
                    event.order_id,
                    LiveOrder { side: event.side, price: event.price, remaining: event.quantity },
                );
                *self.levels_mut(event.side).entry(event.price).or_insert(0) += event.quantity;
            }
            Action::Cancel | Action::Execute => {
                let order = *self
                    .orders
                    .get(&event.order_id)
                    .ok_or(LobError::UnknownOrderId { order_id: event.order_id })?;
                if event.quantity > order.remaining {
                    return Err(LobError::OverRemoval {
                        order_id: event.order_id,
                        requested: event.quantity,
                        remaining: order.remaining,
                    });
                }
                let left = order.remaining - event.quantity;
                if left == 0 {
                    self.orders.remove(&event.order_id);
                } else if let Some(o) = self.orders.get_mut(&event.order_id) {
                    o.remaining = left;
                }
                let levels = self.levels_mut(order.side);
                let agg = levels.get_mut(&order.price).expect("level exists for live order");
                *agg -= event.quantity;
                if *agg == 0 {
                    levels.remove(&order.price);
                }
            }
        }
        Ok(())
    }

    fn levels_mut(&mut self, side: Side) -> &mut BTreeMap<Price, u64> {
        match side {
            Side::Bid => &mut self.bids,
            Side::Ask => &mut self.asks,
        }
    }

    pub fn order(&self, order_id: u64) -> Option<&LiveOrder> {
        self.orders.get(&order_id)
    }

    pub fn live_count(&self) -> usize {
        self.orders.len()
    }

    /// Live orders sorted by id.
    pub fn live_orders(&self) -> Vec<(u64, LiveOrder)> {
        let mut v: Vec<_> = self.orders.iter().map(|(&id, &o)| (id, o)).collect();
        v.sort_unstable_by_key(|(id, _)| *id);
        v
    }

    /// Aggregated resting volume at a price, zero when absent.
    pub fn level_volume(&self, side: Side, price: Price) -> u64 {
        match side {
            Side::Bid => self.bids.get(&price).copied().unwrap_or(0),
            Side::Ask => self.asks.get(&price).copied().unwrap_or(0),
        }
    }

    /// Levels best-first.
    pub fn levels(&self, side: Side) -> Box<dyn Iterator<Item = (Price, u64)> + '_> {
        match side {
            Side::Bid => Box::new(self.bids.iter().rev().map(|(&p, &v)| (p, v))),
            Side::Ask => Box::new(self.asks.iter().map(|(&p, &v)| (p, v))),
        }
    }

    pub fn best_bid(&self) -> Option<Price> {
        self.bids.keys().next_back().copied()
    }

    pub fn best_ask(&self) -> Option<Price> {
        self.asks.keys().next().copied()
    }

    /// Samples the best `n_levels` (at most ten) per side, zero-padded.
    ///
    /// A crossed or locked book is reported as [`LobError::InvariantViolation`].
    pub fn snapshot(&self, n_levels: usize, second: u32) -> Result<BookSnapshot, LobError> {
        if let (Some(b), Some(a)) = (self.best_bid(), self.best_ask()) {
            if b >= a {
                return Err(LobError::InvariantViolation(format!("crossed book: bid {b} >= ask {a}")));
            }
        }
        let n = n_levels.min(BOOK_LEVELS);
        let mut snap = BookSnapshot::empty(second);
        for (slot, (p, v)) in snap.asks.iter_mut().zip(self.levels(Side::Ask)).take(n) {
            *slot = Level { price: p, volume: v as i64 };
        }
        for (slot, (p, v)) in snap.bids.iter_mut().zip(self.levels(Side::Bid)).take(n) {
            *slot = Level { price: p, volume: v as i64 };
        }
        Ok(snap)
    }

    /// Recomputes every level from the live orders and compares with the
    /// maintained aggregates.
    pub fn check_consistency(&self) -> bool {
        let mut bids: BTreeMap<Price, u64> = BTreeMap::new();
        let mut asks: BTreeMap<Price, u64> = BTreeMap::new();
        for o in self.orders.values() {
            let m = if o.side == Side::Bid { &mut bids } else { &mut asks };
            *m.entry(o.price).or_insert(0) += o.remaining;
        }
        bids == self.bids && asks == self.asks
    }
}
