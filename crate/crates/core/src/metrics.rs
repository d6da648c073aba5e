//! Impermanent loss, relative value and fee-adjusted relative value over a
//! window of pool events, plus the LP profitability condition for single
//! trades on two-asset weighted pools.

use std::fmt;
use std::str::FromStr;

use serde::Serialize;

use crate::cfmm::CfmmSpec;
use crate::error::{Error, Result};
use crate::events::ValidatedTrade;
use crate::exec::{self, Execution};
use crate::solver::bracketed_root_solve;
use crate::types::{add_into, check_dim, AssetIndex, FeeParams, FiatPriceVector};
use crate::uniform::UniformPoolState;

/// Tolerance on the window identity `q_start + flows = q_end`.
const LEDGER_TOL: f64 = 1e-9;

/// Unit of account for window values.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Numeraire {
    Fiat,
    Asset(AssetIndex),
}

impl fmt::Display for Numeraire {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Numeraire::Fiat => f.write_str("fiat"),
            Numeraire::Asset(j) => write!(f, "asset{j}"),
        }
    }
}

impl FromStr for Numeraire {
    type Err = Error;

    /// Parses `fiat` or `assetJ` with a 1-based `J`.
    fn from_str(s: &str) -> Result<Self> {
        if s == "fiat" {
            return Ok(Numeraire::Fiat);
        }
        s.strip_prefix("asset")
            .and_then(|j| j.parse::<usize>().ok())
            .filter(|j| *j >= 1)
            .map(|j| Numeraire::Asset(AssetIndex::from_slot(j - 1)))
            .ok_or_else(|| Error::Config(format!("unknown numeraire `{s}`; use fiat or assetJ")))
    }
}

impl Serialize for Numeraire {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricSnapshot {
    pub timestamp: i64,
    pub numeraire: Numeraire,
    pub hold_value: f64,
    pub pool_value: f64,
    pub pool_value_with_fees: f64,
    pub il: f64,
    pub rv: f64,
    pub farv: f64,
}

/// Flows into and out of a pool over `[t, T]`.
///
/// The hold basis `q_start + quote_sum` is accumulated quote by quote in
/// event order, the same order the pool applies them, so a window without
/// trades ends with a hold basis bit-identical to the pool's fee-free
/// reserves.
#[derive(Debug, Clone, PartialEq)]
pub struct WindowLedger {
    q_start: Vec<f64>,
    hold_basis: Vec<f64>,
    quote_sum: Vec<f64>,
    trade_sum: Vec<f64>,
    fee_sum: Vec<f64>,
    q_end_nofee: Vec<f64>,
    prices_end: Option<FiatPriceVector>,
    spot_end: Vec<Vec<f64>>,
}

impl WindowLedger {
    /// Opens a window on fee-free reserves `q_start`.
    pub fn open(q_start: &[f64]) -> Self {
        let n = q_start.len();
        WindowLedger {
            q_start: q_start.to_vec(),
            hold_basis: q_start.to_vec(),
            quote_sum: vec![0.0; n],
            trade_sum: vec![0.0; n],
            fee_sum: vec![0.0; n],
            q_end_nofee: q_start.to_vec(),
            prices_end: None,
            spot_end: identity(n),
        }
    }

    pub fn record_quote(&mut self, deltas: &[f64]) {
        add_into(&mut self.quote_sum, deltas);
        add_into(&mut self.hold_basis, deltas);
    }

    /// Records a trade's fee-free legs and the LP fees it generated.
    pub fn record_trade(&mut self, fee_free: &[f64], lp_fees: &[f64]) {
        add_into(&mut self.trade_sum, fee_free);
        add_into(&mut self.fee_sum, lp_fees);
    }

    /// Records fees without reserve flows (used for per-LP windows).
    pub fn record_fees(&mut self, lp_fees: &[f64]) {
        add_into(&mut self.fee_sum, lp_fees);
    }

    /// Sets the end-of-window state. Can be called repeatedly as the window
    /// grows.
    pub fn set_end(&mut self, q_end_nofee: &[f64], prices_end: Option<FiatPriceVector>, spot_end: Vec<Vec<f64>>) {
        self.q_end_nofee = q_end_nofee.to_vec();
        self.prices_end = prices_end;
        self.spot_end = spot_end;
    }

    pub fn q_start(&self) -> &[f64] {
        &self.q_start
    }

    pub fn hold_basis(&self) -> &[f64] {
        &self.hold_basis
    }

    pub fn quote_sum(&self) -> &[f64] {
        &self.quote_sum
    }

    pub fn trade_sum(&self) -> &[f64] {
        &self.trade_sum
    }

    pub fn fee_sum(&self) -> &[f64] {
        &self.fee_sum
    }

    pub fn q_end_nofee(&self) -> &[f64] {
        &self.q_end_nofee
    }

    /// Checks `q_start + quote_sum + trade_sum = q_end` within tolerance.
    pub fn check_consistency(&self) -> Result<()> {
        let n = self.q_start.len();
        for v in [&self.quote_sum, &self.trade_sum, &self.fee_sum, &self.q_end_nofee] {
            check_dim(n, v.len())?;
        }
        for s in 0..n {
            let flows = self.q_start[s] + self.quote_sum[s] + self.trade_sum[s];
            let scale = self.q_start[s].abs().max(self.q_end_nofee[s].abs()).max(1.0);
            if (flows - self.q_end_nofee[s]).abs() > LEDGER_TOL * scale {
                return Err(Error::InconsistentLedger);
            }
        }
        Ok(())
    }

    fn unit_values(&self, numeraire: Numeraire) -> Result<Vec<f64>> {
        let n = self.q_start.len();
        match numeraire {
            Numeraire::Fiat => {
                let p = self
                    .prices_end
                    .as_ref()
                    .ok_or_else(|| Error::InvalidPrices("no fiat prices at window end".into()))?;
                check_dim(n, p.len())?;
                Ok(p.to_vec())
            }
            Numeraire::Asset(j) => {
                if j.slot() >= n {
                    return Err(Error::BadSolveIndex { index: j.get(), n });
                }
                check_dim(n, self.spot_end.len())?;
                Ok((0..n).map(|i| self.spot_end[i][j.slot()]).collect())
            }
        }
    }

    /// Hold, pool and pool-with-fees values in `numeraire`.
    pub fn values(&self, numeraire: Numeraire) -> Result<(f64, f64, f64)> {
        let z = self.unit_values(numeraire)?;
        let dot = |v: &[f64]| v.iter().zip(&z).map(|(a, b)| a * b).sum::<f64>();
        let with_fees: Vec<f64> = self.q_end_nofee.iter().zip(&self.fee_sum).map(|(a, b)| a + b).collect();
        Ok((dot(&self.hold_basis), dot(&self.q_end_nofee), dot(&with_fees)))
    }

    pub fn snapshot(&self, timestamp: i64, numeraire: Numeraire) -> Result<MetricSnapshot> {
        let (hold, pool, with_fees) = self.values(numeraire)?;
        if !(hold > 0.0) {
            return Err(Error::ZeroHoldValue);
        }
        Ok(MetricSnapshot {
            timestamp,
            numeraire,
            hold_value: hold,
            pool_value: pool,
            pool_value_with_fees: with_fees,
            il: hold - pool,
            rv: pool / hold,
            farv: with_fees / hold,
        })
    }
}

fn identity(n: usize) -> Vec<Vec<f64>> {
    (0..n)
        .map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
        .collect()
}

/// `IL = hold value - pool value`, fees excluded.
pub fn impermanent_loss(ledger: &WindowLedger, numeraire: Numeraire) -> Result<f64> {
    ledger.check_consistency()?;
    let (hold, pool, _) = ledger.values(numeraire)?;
    Ok(hold - pool)
}

/// `V = pool value / hold value`; with fees the LP fees are added to the
/// numerator.
pub fn relative_value(ledger: &WindowLedger, numeraire: Numeraire, with_fees: bool) -> Result<f64> {
    ledger.check_consistency()?;
    let (hold, pool, pool_fees) = ledger.values(numeraire)?;
    if !(hold > 0.0) {
        return Err(Error::ZeroHoldValue);
    }
    Ok(if with_fees { pool_fees } else { pool } / hold)
}

/// Fee-adjusted relative value of one LP's holdings. The LP ledger carries
/// the LP's own quantities, quotes and fees; no trade flows are attributed.
pub fn lp_relative_value(lp_ledger: &WindowLedger, numeraire: Numeraire) -> Result<f64> {
    let (hold, _, with_fees) = lp_ledger.values(numeraire)?;
    if !(hold > 0.0) {
        return Err(Error::ZeroHoldValue);
    }
    Ok(with_fees / hold)
}

fn two_asset_weights(weights: &[f64]) -> Result<(f64, f64)> {
    if weights.len() != 2 {
        return Err(Error::DimensionMismatch {
            expected: 2,
            got: weights.len(),
        });
    }
    CfmmSpec::constant_mean(weights.to_vec())?;
    Ok((weights[0], weights[1]))
}

/// `gamma (1 - phi) / (1 - gamma)`: LP fee per unit of fee-free inbound.
fn lp_fee_rate(fees: FeeParams) -> f64 {
    fees.gamma() * (1.0 - fees.phi()) / (1.0 - fees.gamma())
}

/// LP profitability of depositing `dx` of asset x into a two-asset weighted
/// pool holding `q_x`, in exchange for asset y.
///
/// Evaluates `(dx + lambda_x) Z^_{x,y} + dy >= 0` after dividing through by
/// the positive factor `q_y w_y (q_x + dx + Gamma_x) / (q_x^r (1+dx/q_x)^r)`
/// with `r = w_x / w_y`, which leaves
/// `dx w_x (1 + c) - w_y (q_x + dx / (1 - gamma)) ((1 + dx/q_x)^r - 1) >= 0`.
/// The zero trade is excluded.
pub fn balancer_trade_profitable(q_x: f64, weights: &[f64], fees: FeeParams, dx: f64) -> Result<bool> {
    let (wx, wy) = two_asset_weights(weights)?;
    check_qx(q_x)?;
    if !(dx > 0.0) {
        return Ok(false);
    }
    Ok(profit_margin(q_x, wx, wy, fees, dx) >= 0.0)
}

fn check_qx(q_x: f64) -> Result<()> {
    if !(q_x.is_finite() && q_x > 0.0) {
        return Err(Error::NonPositiveQuantity { index: 1 });
    }
    Ok(())
}

/// Left side of the reduced inequality divided by `dx`.
fn profit_margin(q_x: f64, wx: f64, wy: f64, fees: FeeParams, dx: f64) -> f64 {
    let c = lp_fee_rate(fees);
    let r = wx / wy;
    let growth = (r * (dx / q_x).ln_1p()).exp_m1() / dx;
    wx * (1.0 + c) - wy * (q_x + dx / (1.0 - fees.gamma())) * growth
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProfitBound {
    /// Largest profitable `dq_x`; zero when no trade is profitable.
    pub bound: f64,
    /// `bound / q_x`.
    pub fraction: f64,
    /// Closed-form fraction `gamma (1 - phi)`, available for 50/50 weights.
    pub closed_form_fraction: Option<f64>,
}

/// Upper end of the profitable region `0 < dq_x <= bound`, found by
/// bisection on the profitability predicate.
pub fn balancer_profitable_bound(q_x: f64, weights: &[f64], fees: FeeParams) -> Result<ProfitBound> {
    let (wx, wy) = two_asset_weights(weights)?;
    check_qx(q_x)?;
    let closed_form_fraction = balancer_closed_form_fraction(weights, fees).ok();
    if fees.gamma() == 0.0 {
        return Ok(ProfitBound {
            bound: 0.0,
            fraction: 0.0,
            closed_form_fraction,
        });
    }
    let margin = |dx: f64| {
        if dx == 0.0 {
            // Limit of the margin as dx -> 0+.
            wx * lp_fee_rate(fees)
        } else {
            profit_margin(q_x, wx, wy, fees, dx)
        }
    };
    let mut hi = q_x * fees.gamma();
    let mut grown = 0;
    while margin(hi) >= 0.0 {
        hi *= 2.0;
        grown += 1;
        if grown > 2000 || !hi.is_finite() {
            return Err(Error::SolverNoConverge(grown));
        }
    }
    let bound = bracketed_root_solve(margin, 0.0, hi, 1e-15)?;
    Ok(ProfitBound {
        bound,
        fraction: bound / q_x,
        closed_form_fraction,
    })
}

/// `gamma (1 - phi)` for equal weights, where the inequality is quadratic
/// in `dq_x`.
pub fn balancer_closed_form_fraction(weights: &[f64], fees: FeeParams) -> Result<f64> {
    let (wx, wy) = two_asset_weights(weights)?;
    if (wx - wy).abs() > 1e-12 {
        return Err(Error::UnsupportedWeights);
    }
    Ok(fees.gamma() * (1.0 - fees.phi()))
}

/// Coefficients `(a, b)` of the equal-weight inequality
/// `a q_y dq_x^2 + b q_y q_x dq_x >= 0`.
pub fn balancer_reduced_coefficients(weights: &[f64], fees: FeeParams) -> Result<(f64, f64)> {
    balancer_closed_form_fraction(weights, fees)?;
    let w = weights[0];
    Ok((-w / (1.0 - fees.gamma()), w * lp_fee_rate(fees)))
}

/// Best rational approximation `num / den` with `den <= max_den`, accepted
/// only if it reproduces `x` to relative `rel_tol`.
pub fn rational_approximation(x: f64, max_den: u64, rel_tol: f64) -> Option<(i64, u64)> {
    if !x.is_finite() {
        return None;
    }
    let (mut h0, mut h1) = (0i128, 1i128);
    let (mut k0, mut k1) = (1i128, 0i128);
    let mut rest = x;
    for _ in 0..64 {
        let a = rest.floor();
        if a.abs() > 1e15 {
            break;
        }
        let a = a as i128;
        let (h2, k2) = (a * h1 + h0, a * k1 + k0);
        if k2 > max_den as i128 {
            break;
        }
        (h0, h1, k0, k1) = (h1, h2, k1, k2);
        if (h1 as f64 / k1 as f64 - x).abs() <= rel_tol * x.abs() {
            return Some((h1 as i64, k1 as u64));
        }
        let frac = rest - a as f64;
        if frac == 0.0 {
            break;
        }
        rest = 1.0 / frac;
    }
    None
}

/// LP value change of one trade executed in isolation on `pool`, as a
/// fee-adjusted relative value against post-trade prices `Z^`.
///
/// `Z^` is the spot price on the reserves `q + dq + Gamma`, where `Gamma`
/// counts every fee the trade pays, the treasury's cut included. The
/// numeraire is the solved-for asset.
pub fn trade_farv(pool: &UniformPoolState, trade: &ValidatedTrade) -> Result<f64> {
    let (gain, hold) = trade_gain(pool, trade)?;
    Ok(1.0 + gain / hold)
}

/// `(sum_i (dq_i + lambda_i) Z^_{i,y}, sum_i q_i Z^_{i,y})`.
fn trade_gain(pool: &UniformPoolState, trade: &ValidatedTrade) -> Result<(f64, f64)> {
    if pool.is_empty() {
        return Err(Error::ZeroValuePool);
    }
    let out = pool.apply_trade(trade)?;
    let q = pool.quantities();
    let post: Vec<f64> = (0..q.len())
        .map(|s| q[s] + out.fee_free[s] + out.accrual.lp_fees[s] + out.accrual.treasury_fees[s])
        .collect();
    let y = trade.solve_for();
    let z: Vec<f64> = (0..q.len())
        .map(|s| pool.spec().spot_price(&post, AssetIndex::from_slot(s), y))
        .collect::<Result<_>>()?;
    let gain: f64 = (0..q.len())
        .map(|s| (out.fee_free[s] + out.accrual.lp_fees[s]) * z[s])
        .sum();
    let hold: f64 = q.iter().zip(&z).map(|(a, b)| a * b).sum();
    Ok((gain, hold))
}

/// Whether LPs profit from `trade` in isolation: `FARV >= 1` at `Z^`.
/// The comparison is made on the value gain itself to avoid cancelling
/// against the much larger reserve value.
pub fn trade_profitability_scan(pool: &UniformPoolState, trade: &ValidatedTrade) -> Result<bool> {
    Ok(trade_gain(pool, trade)?.0 >= 0.0)
}

/// Scans many trades against the same pool state.
pub fn scan_trades(pool: &UniformPoolState, trades: &[ValidatedTrade], exec: Execution) -> Vec<Result<bool>> {
    exec::map(trades, exec, |t| trade_profitability_scan(pool, t))
}
