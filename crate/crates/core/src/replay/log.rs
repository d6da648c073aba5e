//! Line-delimited JSON event logs.
//!
//! ```text
//! {"kind":"trade","timestamp":10,"deltas":["10",null],"solve":2}
//! {"kind":"quote","timestamp":11,"lp":"A","deltas":["5","5"]}
//! {"kind":"quote","timestamp":12,"lp":"B","deltas":["1","2"],"range":["0.5","2"]}
//! {"kind":"price_update","timestamp":13,"prices":["4","1"]}
//! ```
//!
//! Quantities and prices are decimal strings, parsed to the nearest double.
//! Blank lines are skipped.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::events::{QuoteEvent, TradeEvent};
use crate::types::FiatPriceVector;

#[derive(Debug, Clone, PartialEq)]
pub enum EventPayload {
    Trade(TradeEvent),
    /// A quote; `range` holds tick prices for concentrated pools.
    Quote {
        quote: QuoteEvent,
        range: Option<(f64, f64)>,
    },
    PriceUpdate(FiatPriceVector),
}

#[derive(Debug, Clone, PartialEq)]
pub struct EventRecord {
    pub timestamp: i64,
    /// 1-based line in the source file, 0 for records built in memory.
    pub line: usize,
    pub payload: EventPayload,
}

impl EventRecord {
    pub fn trade(event: TradeEvent) -> Self {
        EventRecord {
            timestamp: event.timestamp,
            line: 0,
            payload: EventPayload::Trade(event),
        }
    }

    pub fn quote(quote: QuoteEvent, range: Option<(f64, f64)>) -> Self {
        EventRecord {
            timestamp: quote.timestamp,
            line: 0,
            payload: EventPayload::Quote { quote, range },
        }
    }

    pub fn price_update(timestamp: i64, prices: FiatPriceVector) -> Self {
        EventRecord {
            timestamp,
            line: 0,
            payload: EventPayload::PriceUpdate(prices),
        }
    }

    pub fn is_price_update(&self) -> bool {
        matches!(self.payload, EventPayload::PriceUpdate(_))
    }

    fn width(&self) -> usize {
        match &self.payload {
            EventPayload::Trade(t) => t.deltas.len(),
            EventPayload::Quote { quote, .. } => quote.deltas.len(),
            EventPayload::PriceUpdate(p) => p.len(),
        }
    }

    /// One log line with `kind` first.
    pub fn to_line(&self) -> String {
        let dec = |x: &f64| x.to_string();
        let line = match &self.payload {
            EventPayload::Trade(t) => serde_json::to_string(&TradeLine {
                kind: "trade",
                timestamp: self.timestamp,
                deltas: t.deltas.iter().map(|d| d.as_ref().map(dec)).collect(),
                solve: t.solve_for,
            }),
            EventPayload::Quote { quote, range } => serde_json::to_string(&QuoteLine {
                kind: "quote",
                timestamp: self.timestamp,
                lp: &quote.lp_id,
                deltas: quote.deltas.iter().map(dec).collect(),
                range: range.map(|(lo, hi)| [dec(&lo), dec(&hi)]),
            }),
            EventPayload::PriceUpdate(p) => serde_json::to_string(&PriceLine {
                kind: "price_update",
                timestamp: self.timestamp,
                prices: p.iter().map(dec).collect(),
            }),
        };
        line.expect("event records always serialize")
    }
}

#[derive(Serialize)]
struct TradeLine {
    kind: &'static str,
    timestamp: i64,
    deltas: Vec<Option<String>>,
    solve: usize,
}

#[derive(Serialize)]
struct QuoteLine<'a> {
    kind: &'static str,
    timestamp: i64,
    lp: &'a str,
    deltas: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    range: Option<[String; 2]>,
}

#[derive(Serialize)]
struct PriceLine {
    kind: &'static str,
    timestamp: i64,
    prices: Vec<String>,
}

#[derive(Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
enum RawRecord {
    Trade {
        timestamp: i64,
        deltas: Vec<Option<String>>,
        solve: usize,
    },
    Quote {
        timestamp: i64,
        lp: String,
        deltas: Vec<String>,
        #[serde(default)]
        range: Option<[String; 2]>,
    },
    PriceUpdate {
        timestamp: i64,
        prices: Vec<String>,
    },
}

fn decimal(s: &str) -> std::result::Result<f64, String> {
    let x: f64 = s.trim().parse().map_err(|_| format!("`{s}` is not a decimal number"))?;
    if !x.is_finite() {
        return Err(format!("`{s}` is not finite"));
    }
    Ok(x)
}

fn parse_line(text: &str, line: usize) -> Result<EventRecord> {
    let perr = |msg: String| Error::Parse { line, msg };
    let raw: RawRecord = serde_json::from_str(text).map_err(|e| perr(e.to_string()))?;
    let decimals = |v: &[String]| v.iter().map(|s| decimal(s)).collect::<std::result::Result<Vec<_>, _>>();
    let (timestamp, payload) = match raw {
        RawRecord::Trade {
            timestamp,
            deltas,
            solve,
        } => {
            let deltas = deltas
                .iter()
                .map(|d| d.as_deref().map(decimal).transpose())
                .collect::<std::result::Result<Vec<_>, _>>()
                .map_err(perr)?;
            (
                timestamp,
                EventPayload::Trade(TradeEvent {
                    deltas,
                    solve_for: solve,
                    timestamp,
                }),
            )
        }
        RawRecord::Quote {
            timestamp,
            lp,
            deltas,
            range,
        } => {
            let deltas = decimals(&deltas).map_err(perr)?;
            let range = match range {
                Some([lo, hi]) => Some((decimal(&lo).map_err(perr)?, decimal(&hi).map_err(perr)?)),
                None => None,
            };
            (
                timestamp,
                EventPayload::Quote {
                    quote: QuoteEvent {
                        deltas,
                        lp_id: lp,
                        timestamp,
                    },
                    range,
                },
            )
        }
        RawRecord::PriceUpdate { timestamp, prices } => {
            let prices = decimals(&prices).map_err(perr)?;
            let prices = FiatPriceVector::new(prices).map_err(|e| perr(e.to_string()))?;
            (timestamp, EventPayload::PriceUpdate(prices))
        }
    };
    Ok(EventRecord {
        timestamp,
        line,
        payload,
    })
}

/// Parses log text for an `n_assets` pool. Timestamps must not decrease.
pub fn parse_event_log(text: &str, n_assets: usize) -> Result<Vec<EventRecord>> {
    let mut out: Vec<EventRecord> = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        if raw.trim().is_empty() {
            continue;
        }
        let rec = parse_line(raw, line)?;
        if rec.width() != n_assets {
            return Err(Error::AtLine {
                line,
                source: Box::new(Error::DimensionMismatch {
                    expected: n_assets,
                    got: rec.width(),
                }),
            });
        }
        if out.last().is_some_and(|prev| rec.timestamp < prev.timestamp) {
            return Err(Error::NonMonotoneTimestamps { line });
        }
        out.push(rec);
    }
    Ok(out)
}

pub fn load_event_log(path: &Path, n_assets: usize) -> Result<Vec<EventRecord>> {
    parse_event_log(&fs::read_to_string(path)?, n_assets)
}

/// Serializes records one per line.
pub fn format_event_log(records: &[EventRecord]) -> String {
    let mut s = String::new();
    for r in records {
        s.push_str(&r.to_line());
        s.push('\n');
    }
    s
}
