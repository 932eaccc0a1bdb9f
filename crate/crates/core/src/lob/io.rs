//! Plain-text event files and the binary snapshot stream.
//!
//! Event file: a `ticksize=<decimal>` header line followed by one
//! `timestamp_ns,order_id,side(B|A),action(ADD|CXL|EXE),price_ticks,quantity`
//! record per line.
//!
//! Snapshot stream: little-endian records of `u32 second` followed by ten
//! `(i64 price, i64 volume)` ask levels and ten bid levels.

use std::io::{BufRead, Read, Write};

use super::{Action, BookSnapshot, Level, LobError, OrderEvent, Side, BOOK_LEVELS};

/// Size of one snapshot record in bytes.
pub const SNAPSHOT_RECORD_BYTES: usize = 4 + 2 * BOOK_LEVELS * 16;

pub fn write_event_header(w: &mut impl Write, tick_size: f64) -> Result<(), LobError> {
    writeln!(w, "ticksize={tick_size}")?;
    Ok(())
}

pub fn write_event(w: &mut impl Write, e: &OrderEvent) -> Result<(), LobError> {
    let side = match e.side {
        Side::Bid => 'B',
        Side::Ask => 'A',
    };
    let action = match e.action {
        Action::Add => "ADD",
        Action::Cancel => "CXL",
        Action::Execute => "EXE",
    };
    writeln!(w, "{},{},{},{},{},{}", e.timestamp_ns, e.order_id, side, action, e.price, e.quantity)?;
    Ok(())
}

pub fn parse_event(line: &str, line_no: usize) -> Result<OrderEvent, LobError> {
    let err = |m: &str| LobError::Parse { line: line_no, message: m.to_string() };
    let mut it = line.trim().split(',');
    let mut field = |name: &str| it.next().ok_or_else(|| err(&format!("missing {name}")));
    let timestamp_ns = field("timestamp")?.parse().map_err(|_| err("bad timestamp"))?;
    let order_id = field("order_id")?.parse().map_err(|_| err("bad order id"))?;
    let side = match field("side")? {
        "B" => Side::Bid,
        "A" => Side::Ask,
        s => return Err(err(&format!("bad side {s:?}"))),
    };
    let action = match field("action")? {
        "ADD" => Action::Add,
        "CXL" => Action::Cancel,
        "EXE" => Action::Execute,
        s => return Err(err(&format!("bad action {s:?}"))),
    };
    let price = field("price")?.parse().map_err(|_| err("bad price"))?;
    let quantity = field("quantity")?.parse().map_err(|_| err("bad quantity"))?;
    if it.next().is_some() {
        return Err(err("trailing fields"));
    }
    Ok(OrderEvent { timestamp_ns, order_id, side, action, price, quantity })
}

/// Streaming reader over an event file.
pub struct EventReader<R> {
    lines: std::io::Lines<R>,
    line_no: usize,
    tick_size: f64,
}

impl<R: BufRead> EventReader<R> {
    pub fn new(reader: R) -> Result<Self, LobError> {
        let mut lines = reader.lines();
        let header = lines.next().ok_or(LobError::Parse { line: 1, message: "empty file".into() })??;
        let tick_size = header
            .trim()
            .strip_prefix("ticksize=")
            .and_then(|v| v.parse::<f64>().ok())
            .filter(|t| *t > 0.0)
            .ok_or(LobError::Parse { line: 1, message: format!("bad header {header:?}") })?;
        Ok(Self { lines, line_no: 1, tick_size })
    }

    pub fn tick_size(&self) -> f64 {
        self.tick_size
    }
}

impl<R: BufRead> Iterator for EventReader<R> {
    type Item = Result<OrderEvent, LobError>;

    fn next(&mut self) -> Option<Self::Item> {
        loop {
            let line = match self.lines.next()? {
                Ok(l) => l,
                Err(e) => return Some(Err(e.into())),
            };
            self.line_no += 1;
            if line.trim().is_empty() {
                continue;
            }
            return Some(parse_event(&line, self.line_no));
        }
    }
}

pub fn write_snapshot(w: &mut impl Write, s: &BookSnapshot) -> Result<(), LobError> {
    let mut buf = [0u8; SNAPSHOT_RECORD_BYTES];
    buf[..4].copy_from_slice(&s.second.to_le_bytes());
    for (i, l) in s.asks.iter().chain(s.bids.iter()).enumerate() {
        let off = 4 + i * 16;
        buf[off..off + 8].copy_from_slice(&l.price.to_le_bytes());
        buf[off + 8..off + 16].copy_from_slice(&l.volume.to_le_bytes());
    }
    w.write_all(&buf)?;
    Ok(())
}

/// Reads the next snapshot record; `Ok(None)` at a clean end of stream.
pub fn read_snapshot(r: &mut impl Read) -> Result<Option<BookSnapshot>, LobError> {
    let mut buf = [0u8; SNAPSHOT_RECORD_BYTES];
    let mut filled = 0;
    while filled < buf.len() {
        let n = r.read(&mut buf[filled..])?;
        if n == 0 {
            if filled == 0 {
                return Ok(None);
            }
            return Err(LobError::Io("truncated snapshot record".into()));
        }
        filled += n;
    }
    let mut s = BookSnapshot::empty(u32::from_le_bytes(buf[..4].try_into().unwrap()));
    for i in 0..2 * BOOK_LEVELS {
        let off = 4 + i * 16;
        let level = Level {
            price: i64::from_le_bytes(buf[off..off + 8].try_into().unwrap()),
            volume: i64::from_le_bytes(buf[off + 8..off + 16].try_into().unwrap()),
        };
        if i < BOOK_LEVELS {
            s.asks[i] = level;
        } else {
            s.bids[i - BOOK_LEVELS] = level;
        }
    }
    Ok(Some(s))
}

pub fn read_snapshots(r: &mut impl Read) -> Result<Vec<BookSnapshot>, LobError> {
    let mut out = Vec::new();
    while let Some(s) = read_snapshot(r)? {
        out.push(s);
    }
    Ok(out)
}
