//! Trade and quote events, and their validation against a pool.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::types::{check_dim, AssetIndex};

/// Relative tolerance on quote proportionality.
pub const QUOTE_RATIO_TOL: f64 = 1e-9;

/// An exchange with the pool. Deltas are signed from the pool's point of
/// view; the leg at `solve_for` is unknown until the pool solves it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TradeEvent {
    pub deltas: Vec<Option<f64>>,
    pub solve_for: usize,
    pub timestamp: i64,
}

impl TradeEvent {
    /// Builds a trade from given legs; `deltas[k-1]` is ignored.
    pub fn new(given: &[f64], solve_for: AssetIndex, timestamp: i64) -> Self {
        let deltas = given
            .iter()
            .enumerate()
            .map(|(slot, &d)| (slot != solve_for.slot()).then_some(d))
            .collect();
        TradeEvent {
            deltas,
            solve_for: solve_for.get(),
            timestamp,
        }
    }
}

/// A trade that passed [`validate_trade`]. `given[k]` is zero.
#[derive(Debug, Clone, PartialEq)]
pub struct ValidatedTrade {
    given: Vec<f64>,
    solve_for: AssetIndex,
    timestamp: i64,
}

impl ValidatedTrade {
    pub fn given(&self) -> &[f64] {
        &self.given
    }

    pub fn solve_for(&self) -> AssetIndex {
        self.solve_for
    }

    pub fn timestamp(&self) -> i64 {
        self.timestamp
    }

    pub fn n_assets(&self) -> usize {
        self.given.len()
    }

    /// The same trade with every given leg multiplied by `beta`.
    pub fn scaled(&self, beta: f64) -> ValidatedTrade {
        ValidatedTrade {
            given: self.given.iter().map(|d| d * beta).collect(),
            ..self.clone()
        }
    }

    /// Full delta vector once the pool has solved for the unknown leg.
    pub fn with_solved(&self, delta_k: f64) -> Vec<f64> {
        let mut full = self.given.clone();
        full[self.solve_for.slot()] = delta_k;
        full
    }
}

/// Checks that a trade is well formed for an `n_assets` pool.
///
/// The sign requirement is "at least one inbound and one outbound leg after
/// solving". The unknown leg can always take the sign opposite to the given
/// legs, so the only given-leg pattern that can never satisfy it is the
/// all-zero one.
pub fn validate_trade(event: &TradeEvent, n_assets: usize) -> Result<ValidatedTrade> {
    check_dim(n_assets, event.deltas.len())?;
    let k = AssetIndex::new(event.solve_for, n_assets)?;
    let mut given = Vec::with_capacity(n_assets);
    for (slot, d) in event.deltas.iter().enumerate() {
        match (slot == k.slot(), d) {
            (true, None) => given.push(0.0),
            (false, Some(x)) if x.is_finite() => given.push(*x),
            (false, Some(_)) => return Err(Error::NonFinite("trade delta")),
            _ => {
                return Err(Error::BadSolveIndex {
                    index: event.solve_for,
                    n: n_assets,
                })
            }
        }
    }
    if given.iter().all(|&d| d == 0.0) {
        return Err(Error::AllZeroTrade);
    }
    Ok(ValidatedTrade {
        given,
        solve_for: k,
        timestamp: event.timestamp,
    })
}

/// A liquidity provision (all legs positive) or withdrawal (all negative).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuoteEvent {
    pub deltas: Vec<f64>,
    pub lp_id: String,
    pub timestamp: i64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QuoteDirection {
    Provide,
    Withdraw,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ValidatedQuote {
    pub deltas: Vec<f64>,
    pub lp_id: String,
    pub timestamp: i64,
    pub direction: QuoteDirection,
}

/// Direction of a quote from the signs of its non-zero legs.
pub fn quote_direction(deltas: &[f64]) -> Result<QuoteDirection> {
    if deltas.iter().any(|d| !d.is_finite()) {
        return Err(Error::NonFinite("quote delta"));
    }
    let pos = deltas.iter().any(|&d| d > 0.0);
    let neg = deltas.iter().any(|&d| d < 0.0);
    match (pos, neg) {
        (true, true) => Err(Error::MixedSigns),
        (true, false) => Ok(QuoteDirection::Provide),
        (false, true) => Ok(QuoteDirection::Withdraw),
        (false, false) => Err(Error::ZeroQuote),
    }
}

/// Checks sign agreement and proportionality to `current` reserves.
///
/// An empty pool accepts any same-signed provision; it fixes the ratio that
/// later quotes must respect. Overdraw is checked by the pool, which knows
/// the LP's holdings.
pub fn validate_quote(event: &QuoteEvent, current: &[f64]) -> Result<ValidatedQuote> {
    check_dim(current.len(), event.deltas.len())?;
    let direction = quote_direction(&event.deltas)?;
    let d = &event.deltas;
    if current.iter().any(|&q| q > 0.0) {
        for i in 0..d.len() {
            if current[i] <= 0.0 {
                if d[i] != 0.0 {
                    let j = (0..d.len()).find(|&j| current[j] > 0.0).unwrap_or(i);
                    return Err(Error::DisproportionateQuote { i: i + 1, j: j + 1 });
                }
                continue;
            }
            for j in 0..d.len() {
                if j == i || current[j] <= 0.0 {
                    continue;
                }
                let target = current[i] / current[j];
                let ratio = d[i] / d[j];
                if !ratio.is_finite() || (ratio - target).abs() > QUOTE_RATIO_TOL * target {
                    return Err(Error::DisproportionateQuote { i: i + 1, j: j + 1 });
                }
            }
        }
    }
    Ok(ValidatedQuote {
        deltas: event.deltas.clone(),
        lp_id: event.lp_id.clone(),
        timestamp: event.timestamp,
        direction,
    })
}

/// Componentwise sum of quote deltas over a window.
pub fn aggregate_quotes(quotes: &[QuoteEvent], n_assets: usize) -> Result<Vec<f64>> {
    let mut sum = vec![0.0; n_assets];
    for quote in quotes {
        check_dim(n_assets, quote.deltas.len())?;
        for (s, d) in sum.iter_mut().zip(&quote.deltas) {
            *s += d;
        }
    }
    Ok(sum)
}
