use super::{BookSnapshot, LobError, OrderBook, OrderEvent, BOOK_LEVELS};

const NS_PER_SEC: u64 = 1_000_000_000;

/// Streaming replay that emits one snapshot per sampling boundary.
///
/// Boundaries sit at `interval, 2*interval, ...` seconds, the last one clipped
/// to the session end. A snapshot reflects every event whose timestamp is at
/// or before its boundary.
#[derive(Debug)]
pub struct Replayer {
    book: OrderBook,
    interval: u32,
    session_seconds: u32,
    next_boundary: u32,
    done: bool,
    last_ts: u64,
    position: usize,
}

impl Replayer {
    pub fn new(interval: u32, session_seconds: u32) -> Self {
        assert!(interval > 0, "sampling interval must be positive");
        Self {
            book: OrderBook::new(),
            interval,
            session_seconds,
            next_boundary: interval.min(session_seconds),
            done: session_seconds == 0,
            last_ts: 0,
            position: 0,
        }
    }

    pub fn book(&self) -> &OrderBook {
        &self.book
    }

    /// Number of snapshots a full replay produces.
    pub fn snapshot_count(&self) -> usize {
        self.session_seconds.div_ceil(self.interval) as usize
    }

    fn emit_until(&mut self, ts: u64, sink: &mut impl FnMut(BookSnapshot)) -> Result<(), LobError> {
        while !self.done && (self.next_boundary as u64) * NS_PER_SEC < ts {
            sink(self.book.snapshot(BOOK_LEVELS, self.next_boundary)?);
            self.advance_boundary();
        }
        Ok(())
    }

    fn advance_boundary(&mut self) {
        if self.next_boundary >= self.session_seconds {
            self.done = true;
        } else {
            self.next_boundary = (self.next_boundary + self.interval).min(self.session_seconds);
        }
    }

    /// Feeds one event, first emitting every boundary that precedes it.
    pub fn push(&mut self, event: &OrderEvent, sink: &mut impl FnMut(BookSnapshot)) -> Result<(), LobError> {
        let position = self.position;
        self.position += 1;
        let at = |e: LobError| LobError::AtEvent { position, source: Box::new(e) };
        if event.timestamp_ns < self.last_ts {
            return Err(at(LobError::OutOfOrder { previous_ns: self.last_ts, timestamp_ns: event.timestamp_ns }));
        }
        if event.timestamp_ns > self.session_seconds as u64 * NS_PER_SEC {
            return Err(at(LobError::AfterSessionEnd { timestamp_ns: event.timestamp_ns }));
        }
        self.last_ts = event.timestamp_ns;
        self.emit_until(event.timestamp_ns, sink).map_err(at)?;
        self.book.apply(event).map_err(at)
    }

    /// Emits every boundary at or before `second`. Later events must be
    /// strictly after that second.
    pub fn advance_to(&mut self, second: u32, sink: &mut impl FnMut(BookSnapshot)) -> Result<(), LobError> {
        let ts = second as u64 * NS_PER_SEC + 1;
        self.emit_until(ts, sink)?;
        self.last_ts = self.last_ts.max(ts);
        Ok(())
    }

    /// Emits the remaining boundaries up to the session end.
    pub fn finish(mut self, sink: &mut impl FnMut(BookSnapshot)) -> Result<OrderBook, LobError> {
        self.emit_until(u64::MAX, sink)?;
        Ok(self.book)
    }
}

/// Replays a whole stream and collects its snapshots.
pub fn replay(
    events: impl IntoIterator<Item = OrderEvent>,
    interval: u32,
    session_seconds: u32,
) -> Result<Vec<BookSnapshot>, LobError> {
    let mut r = Replayer::new(interval, session_seconds);
    let mut out = Vec::with_capacity(r.snapshot_count());
    let mut sink = |s| out.push(s);
    for e in events {
        r.push(&e, &mut sink)?;
    }
    r.finish(&mut sink)?;
    Ok(out)
}
