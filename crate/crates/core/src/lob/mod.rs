//! Limit order book state machine.
//!
//! Prices are integer ticks. The book is driven by add / cancel / execute
//! events and sampled into fixed-depth [`BookSnapshot`]s; matching is not
//! simulated, executions are taken as reported by the stream.

mod book;
pub mod io;
mod replay;

pub use book::{LiveOrder, OrderBook};
pub use replay::{replay, Replayer};

use thiserror::Error;

/// Price in integer ticks.
pub type Price = i64;

/// Depth of a snapshot on each side.
pub const BOOK_LEVELS: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Side {
    Bid,
    Ask,
}

impl Side {
    pub fn opposite(self) -> Side {
        match self {
            Side::Bid => Side::Ask,
            Side::Ask => Side::Bid,
        }
    }

    pub fn index(self) -> usize {
        match self {
            Side::Bid => 0,
            Side::Ask => 1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Action {
    Add,
    Cancel,
    Execute,
}

/// One order book event.
///
/// For cancels and executions `quantity` is the amount removed; a quantity
/// smaller than the remaining size is a partial fill or partial cancel.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct OrderEvent {
    /// Nanoseconds since the first session open of the stream.
    pub timestamp_ns: u64,
    pub order_id: u64,
    pub side: Side,
    pub action: Action,
    /// Limit price; only meaningful for adds.
    pub price: Price,
    pub quantity: u64,
}

impl OrderEvent {
    pub fn add(timestamp_ns: u64, order_id: u64, side: Side, price: Price, quantity: u64) -> Self {
        Self { timestamp_ns, order_id, side, action: Action::Add, price, quantity }
    }

    pub fn cancel(timestamp_ns: u64, order_id: u64, side: Side, price: Price, quantity: u64) -> Self {
        Self { timestamp_ns, order_id, side, action: Action::Cancel, price, quantity }
    }

    pub fn execute(timestamp_ns: u64, order_id: u64, side: Side, price: Price, quantity: u64) -> Self {
        Self { timestamp_ns, order_id, side, action: Action::Execute, price, quantity }
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum LobError {
    #[error("order {order_id} is not live")]
    UnknownOrderId { order_id: u64 },
    #[error("order {order_id}: removing {requested} exceeds remaining {remaining}")]
    OverRemoval { order_id: u64, requested: u64, remaining: u64 },
    #[error("order {order_id} is already live")]
    DuplicateOrderId { order_id: u64 },
    #[error("event quantity must be positive (order {order_id})")]
    ZeroQuantity { order_id: u64 },
    #[error("add for order {order_id} has non-positive price {price}")]
    InvalidPrice { order_id: u64, price: Price },
    #[error("timestamp {timestamp_ns} precedes previous event at {previous_ns}")]
    OutOfOrder { previous_ns: u64, timestamp_ns: u64 },
    #[error("event at {timestamp_ns} ns lies after the session end")]
    AfterSessionEnd { timestamp_ns: u64 },
    #[error("best level missing on one side")]
    EmptySide,
    #[error("book invariant violated: {0}")]
    InvariantViolation(String),
    #[error("event #{position}: {source}")]
    AtEvent {
        position: usize,
        #[source]
        source: Box<LobError>,
    },
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("i/o: {0}")]
    Io(String),
}

impl From<std::io::Error> for LobError {
    fn from(e: std::io::Error) -> Self {
        LobError::Io(e.to_string())
    }
}

/// A price level as (price, resting volume); `(0, 0)` marks an empty slot.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Level {
    pub price: Price,
    pub volume: i64,
}

/// Ten best levels per side at a sampling instant.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BookSnapshot {
    /// Sampling boundary in seconds since the first session open.
    pub second: u32,
    pub asks: [Level; BOOK_LEVELS],
    pub bids: [Level; BOOK_LEVELS],
}

impl BookSnapshot {
    pub fn empty(second: u32) -> Self {
        Self { second, asks: [Level::default(); BOOK_LEVELS], bids: [Level::default(); BOOK_LEVELS] }
    }

    pub fn best_ask(&self) -> Option<Level> {
        Some(self.asks[0]).filter(|l| l.price != 0)
    }

    pub fn best_bid(&self) -> Option<Level> {
        Some(self.bids[0]).filter(|l| l.price != 0)
    }

    /// Total resting volume over all sampled levels of one side.
    pub fn depth(&self, side: Side) -> i64 {
        let levels = match side {
            Side::Ask => &self.asks,
            Side::Bid => &self.bids,
        };
        levels.iter().map(|l| l.volume).sum()
    }

    /// Checks ordering, compaction and the no-cross rule.
    pub fn validate(&self) -> Result<(), LobError> {
        check_side(&self.asks, |a, b| a < b, "ask")?;
        check_side(&self.bids, |a, b| a > b, "bid")?;
        if let (Some(a), Some(b)) = (self.best_ask(), self.best_bid()) {
            if a.price <= b.price {
                return Err(LobError::InvariantViolation(format!(
                    "crossed book: bid {} >= ask {}",
                    b.price, a.price
                )));
            }
        }
        Ok(())
    }
}

fn check_side(levels: &[Level], ordered: impl Fn(Price, Price) -> bool, name: &str) -> Result<(), LobError> {
    let filled = levels.iter().take_while(|l| l.price != 0).count();
    if levels[filled..].iter().any(|l| l.price != 0 || l.volume != 0) {
        return Err(LobError::InvariantViolation(format!("{name} side has an interior gap")));
    }
    for w in levels[..filled].windows(2) {
        if !ordered(w[0].price, w[1].price) {
            return Err(LobError::InvariantViolation(format!("{name} prices out of order")));
        }
    }
    if levels[..filled].iter().any(|l| l.volume <= 0) {
        return Err(LobError::InvariantViolation(format!("{name} level with non-positive volume")));
    }
    Ok(())
}

/// Mid-price of the best levels, in ticks (may land on a half tick).
pub fn mid_price(s: &BookSnapshot) -> Result<f64, LobError> {
    match (s.best_ask(), s.best_bid()) {
        (Some(a), Some(b)) => Ok((a.price as f64 + b.price as f64) / 2.0),
        _ => Err(LobError::EmptySide),
    }
}
