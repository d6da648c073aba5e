//! Two-asset constant-product pool with concentrated liquidity.
//!
//! Each position carries a liquidity `L = sqrt(K_v)` spread evenly over the
//! unit ranges it covers, so the virtual depth of a unit range is the
//! square of the summed liquidity of the positions covering it. Trades run
//! against the active range's virtual reserves and are split into segments
//! at every tick they cross. Fees are charged per segment, credited to the
//! positions covering that segment's range in proportion to their
//! liquidity, and held outside the reserves until withdrawal.

use std::collections::BTreeMap;

use crate::cfmm::CfmmSpec;
use crate::error::{Error, Result};
use crate::events::{quote_direction, QuoteDirection, ValidatedTrade};
use crate::types::{add_into, AssetIndex, FeeAccrual, FeeParams};

use super::grid::{active_index, PriceRange, TickGrid};

/// Slack allowed when a withdrawal matches a position's liquidity.
const OVERDRAW_TOL: f64 = 1e-9;
/// Relative tolerance on the amounts of a concentrated provision.
const AMOUNT_TOL: f64 = 1e-9;

/// An LP's real holdings over a price range.
///
/// When used with [`range_quantities`] and [`range_share`], `quantities`
/// are the holdings attributed to each unit range the position covers;
/// [`ConcentratedPool::unit_positions`] produces exactly that breakdown.
#[derive(Debug, Clone, PartialEq)]
pub struct LpPosition {
    pub lp_id: String,
    pub range: PriceRange,
    pub quantities: Vec<f64>,
    pub uncollected_fees: Vec<f64>,
}

/// Real quantities of unit range `unit_range`: the sum over positions whose
/// range contains it.
pub fn range_quantities(grid: &TickGrid, positions: &[LpPosition], unit_range: &PriceRange) -> Result<Vec<f64>> {
    if !grid.is_unit_range(unit_range) {
        return Err(Error::OffGridRange);
    }
    let n = grid.dims() + 1;
    let mut total = vec![0.0; n];
    for p in positions.iter().filter(|p| unit_range.is_within(&p.range)) {
        add_into(&mut total, &p.quantities);
    }
    Ok(total)
}

/// Share of unit range `unit_range` owned by `lp_id`, measured by summed
/// asset quantities.
pub fn range_share(grid: &TickGrid, positions: &[LpPosition], lp_id: &str, unit_range: &PriceRange) -> Result<f64> {
    let total: f64 = range_quantities(grid, positions, unit_range)?.iter().sum();
    if !(total > 0.0) {
        return Err(Error::EmptyRange);
    }
    let own: f64 = positions
        .iter()
        .filter(|p| p.lp_id == lp_id && unit_range.is_within(&p.range))
        .flat_map(|p| p.quantities.iter())
        .sum();
    Ok(own / total)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Boundary {
    Lower,
    Upper,
    None,
}

/// Virtual view of the active unit range.
#[derive(Debug, Clone, PartialEq)]
pub struct ActiveRangeState {
    pub active: PriceRange,
    pub virtual_q: Vec<f64>,
    pub virtual_depth: f64,
    pub real_q_in_range: Vec<f64>,
}

impl ActiveRangeState {
    fn bounds(&self) -> (f64, f64) {
        self.active.bounds[0]
    }
}

/// Smallest control `beta` at which the trade pushes the price onto a
/// bound of the active range, and which bound. `(1, None)` when the whole
/// trade fits inside the range. A price already sitting on the bound it is
/// moving towards yields `beta = 0`.
pub fn solve_crossing_control(state: &ActiveRangeState, trade: &ValidatedTrade) -> Result<(f64, Boundary)> {
    if trade.n_assets() != 2 {
        return Err(Error::UnsupportedSpec("concentrated pools hold two assets".into()));
    }
    let (lo, hi) = state.bounds();
    let k = state.virtual_depth;
    let ks = trade.solve_for().slot();
    let gs = 1 - ks;
    let d = trade.given()[gs];
    if d == 0.0 {
        return Ok((1.0, Boundary::None));
    }
    let v = state.virtual_q[gs];
    // Price Z_{1,2} = K / x^2 = y^2 / K. Adding asset 1 or removing asset 2
    // lowers it.
    let (target, boundary) = match (gs, d > 0.0) {
        (0, true) => ((k / lo).sqrt(), Boundary::Lower),
        (0, false) => ((k / hi).sqrt(), Boundary::Upper),
        (_, true) => ((k * hi).sqrt(), Boundary::Upper),
        (_, false) => ((k * lo).sqrt(), Boundary::Lower),
    };
    let beta = (target - v) / d;
    if beta >= 1.0 {
        Ok((1.0, Boundary::None))
    } else {
        Ok((beta.max(0.0), boundary))
    }
}

/// One range's worth of an executed trade.
#[derive(Debug, Clone, PartialEq)]
pub struct TradeSegment {
    pub range: PriceRange,
    pub beta: f64,
    /// Fee-free legs executed in this range.
    pub fee_free: Vec<f64>,
    /// Fee-inclusive legs.
    pub executed: Vec<f64>,
    pub fees: FeeAccrual,
    /// Remaining real reserve of the asset that ran out, when this segment
    /// ended on a tick.
    pub depleted_reserve: Option<f64>,
    pub price_after: f64,
}

#[derive(Debug, Clone)]
pub struct ClTradeOutcome {
    pub state: ConcentratedPool,
    pub segments: Vec<TradeSegment>,
    /// Fees credited to each LP by this trade.
    pub lp_fees: BTreeMap<String, Vec<f64>>,
    pub accrual: FeeAccrual,
    pub fee_free: Vec<f64>,
    pub executed: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
struct Position {
    liquidity: f64,
    uncollected: Vec<f64>,
}

type PositionKey = (String, usize, usize);

#[derive(Debug, Clone)]
pub struct ConcentratedPool {
    grid: TickGrid,
    fees: FeeParams,
    price: f64,
    active: usize,
    positions: BTreeMap<PositionKey, Position>,
    range_liquidity: Vec<f64>,
    cumulative_lp_fees: Vec<f64>,
    treasury: Vec<f64>,
    lp_earned: BTreeMap<String, Vec<f64>>,
    reserves: Vec<f64>,
}

/// Real amounts held by liquidity `l` in unit range `(a, b]` at price `p`.
fn unit_amounts(a: f64, b: f64, l: f64, p: f64) -> [f64; 2] {
    if p <= a {
        [l * (1.0 / a.sqrt() - 1.0 / b.sqrt()), 0.0]
    } else if p >= b {
        [0.0, l * (b.sqrt() - a.sqrt())]
    } else {
        [l * (1.0 / p.sqrt() - 1.0 / b.sqrt()), l * (p.sqrt() - a.sqrt())]
    }
}

impl ConcentratedPool {
    /// An unfunded pool at `price` (`Z_{1,2}`), which must lie inside the
    /// grid.
    pub fn new(grid: TickGrid, fees: FeeParams, price: f64) -> Result<Self> {
        if grid.dims() != 1 {
            return Err(Error::UnsupportedSpec(
                "concentrated execution is implemented for two-asset pools".into(),
            ));
        }
        let active = active_index(grid.ticks(0), price)?;
        let units = grid.n_unit_ranges(0);
        Ok(ConcentratedPool {
            grid,
            fees,
            price,
            active,
            positions: BTreeMap::new(),
            range_liquidity: vec![0.0; units],
            cumulative_lp_fees: vec![0.0; 2],
            treasury: vec![0.0; 2],
            lp_earned: BTreeMap::new(),
            reserves: vec![0.0; 2],
        })
    }

    pub fn spec(&self) -> CfmmSpec {
        CfmmSpec::constant_product()
    }

    pub fn grid(&self) -> &TickGrid {
        &self.grid
    }

    pub fn fees(&self) -> FeeParams {
        self.fees
    }

    /// Instantaneous price `Z_{1,2}`.
    pub fn price(&self) -> f64 {
        self.price
    }

    pub fn active_index(&self) -> usize {
        self.active
    }

    pub fn spot_matrix(&self) -> Vec<Vec<f64>> {
        vec![vec![1.0, self.price], vec![1.0 / self.price, 1.0]]
    }

    pub fn spot_price(&self, i: AssetIndex, j: AssetIndex) -> f64 {
        self.spot_matrix()[i.slot()][j.slot()]
    }

    pub fn range_liquidity(&self, unit: usize) -> f64 {
        self.range_liquidity[unit]
    }

    pub fn cumulative_lp_fees(&self) -> &[f64] {
        &self.cumulative_lp_fees
    }

    pub fn treasury(&self) -> &[f64] {
        &self.treasury
    }

    /// Total fees ever credited to `lp_id`, collected or not.
    pub fn lp_fees_earned(&self, lp_id: &str) -> Result<Vec<f64>> {
        self.lp_earned
            .get(lp_id)
            .cloned()
            .ok_or_else(|| Error::UnknownLp(lp_id.to_string()))
    }

    pub fn lp_ids(&self) -> Vec<String> {
        self.lp_earned.keys().cloned().collect()
    }

    pub fn position_liquidity(&self, lp_id: &str, lower: usize, upper: usize) -> f64 {
        self.positions
            .get(&(lp_id.to_string(), lower, upper))
            .map_or(0.0, |p| p.liquidity)
    }

    fn amounts_for(&self, lower: usize, upper: usize, l: f64, price: f64) -> [f64; 2] {
        let mut total = [0.0; 2];
        for u in lower..upper {
            let (a, b) = self.grid.unit_bounds(u);
            let amt = unit_amounts(a, b, l, price);
            total[0] += amt[0];
            total[1] += amt[1];
        }
        total
    }

    /// Real quantities held by all positions of `lp_id` at the current price.
    pub fn lp_quantities(&self, lp_id: &str) -> Vec<f64> {
        let mut total = vec![0.0; 2];
        for ((id, lo, hi), p) in &self.positions {
            if id == lp_id {
                add_into(&mut total, &self.amounts_for(*lo, *hi, p.liquidity, self.price));
            }
        }
        total
    }

    /// Real quantities of the whole pool, fees excluded.
    pub fn real_quantities(&self) -> Vec<f64> {
        let mut total = vec![0.0; 2];
        for u in 0..self.range_liquidity.len() {
            let (a, b) = self.grid.unit_bounds(u);
            add_into(&mut total, &unit_amounts(a, b, self.range_liquidity[u], self.price));
        }
        total
    }

    /// Reserves tracked from deposits, withdrawals and fee-free trade legs.
    /// Agrees with [`Self::real_quantities`] up to rounding.
    pub fn reserves(&self) -> &[f64] {
        &self.reserves
    }

    /// Each position broken down by unit range, with the holdings of that
    /// unit range as `quantities`. Fees stay on the position's lowest unit.
    pub fn unit_positions(&self) -> Vec<LpPosition> {
        let mut out = Vec::new();
        for ((id, lo, hi), p) in &self.positions {
            for u in *lo..*hi {
                let (a, b) = self.grid.unit_bounds(u);
                out.push(LpPosition {
                    lp_id: id.clone(),
                    range: self.grid.unit_range(u),
                    quantities: unit_amounts(a, b, p.liquidity, self.price).to_vec(),
                    uncollected_fees: if u == *lo { p.uncollected.clone() } else { vec![0.0; 2] },
                });
            }
        }
        out
    }

    /// Whole positions with their total real holdings.
    pub fn positions(&self) -> Vec<LpPosition> {
        self.positions
            .iter()
            .map(|((id, lo, hi), p)| LpPosition {
                lp_id: id.clone(),
                range: PriceRange {
                    bounds: vec![(self.grid.ticks(0)[*lo], self.grid.ticks(0)[*hi])],
                },
                quantities: self.amounts_for(*lo, *hi, p.liquidity, self.price).to_vec(),
                uncollected_fees: p.uncollected.clone(),
            })
            .collect()
    }

    pub fn active_state(&self) -> ActiveRangeState {
        let (lo, hi) = self.grid.unit_bounds(self.active);
        let l = self.range_liquidity[self.active];
        let sp = self.price.sqrt();
        let virtual_q = vec![l / sp, l * sp];
        let real_q_in_range = vec![virtual_q[0] - l / hi.sqrt(), virtual_q[1] - l * lo.sqrt()];
        ActiveRangeState {
            active: self.grid.unit_range(self.active),
            virtual_q,
            virtual_depth: l * l,
            real_q_in_range,
        }
    }

    fn check_ticks(&self, lower: usize, upper: usize) -> Result<()> {
        if lower >= upper || upper >= self.grid.ticks(0).len() {
            return Err(Error::OffGridRange);
        }
        Ok(())
    }

    /// Liquidity that `amounts` fund over ticks `[lower, upper]`, requiring
    /// the amounts to match the range's composition at the current price.
    pub fn liquidity_for_amounts(&self, lower: usize, upper: usize, amounts: &[f64]) -> Result<f64> {
        self.check_ticks(lower, upper)?;
        let unit = self.amounts_for(lower, upper, 1.0, self.price);
        let mut l = f64::INFINITY;
        for s in 0..2 {
            if unit[s] > 0.0 {
                l = l.min(amounts[s] / unit[s]);
            }
        }
        if !(l.is_finite() && l > 0.0) {
            return Err(Error::ZeroQuote);
        }
        for s in 0..2 {
            let need = l * unit[s];
            if (amounts[s] - need).abs() > AMOUNT_TOL * amounts[s].abs().max(need) {
                return Err(Error::DisproportionateQuote { i: s + 1, j: 2 - s });
            }
        }
        Ok(l)
    }

    /// Adds liquidity `l` over ticks `[lower, upper]`; returns the pool
    /// state and the real amounts deposited.
    pub fn add_liquidity(&self, lp_id: &str, lower: usize, upper: usize, l: f64) -> Result<(Self, Vec<f64>)> {
        self.check_ticks(lower, upper)?;
        if !(l.is_finite() && l > 0.0) {
            return Err(Error::ZeroQuote);
        }
        let mut next = self.clone();
        let pos = next
            .positions
            .entry((lp_id.to_string(), lower, upper))
            .or_insert_with(|| Position {
                liquidity: 0.0,
                uncollected: vec![0.0; 2],
            });
        pos.liquidity += l;
        for u in lower..upper {
            next.range_liquidity[u] += l;
        }
        next.lp_earned.entry(lp_id.to_string()).or_insert_with(|| vec![0.0; 2]);
        let deposit = self.amounts_for(lower, upper, l, self.price).to_vec();
        add_into(&mut next.reserves, &deposit);
        Ok((next, deposit))
    }

    /// Removes liquidity `l`; returns the state, the (negative) reserve legs
    /// and the uncollected fees paid out with them.
    pub fn remove_liquidity(
        &self,
        lp_id: &str,
        lower: usize,
        upper: usize,
        l: f64,
    ) -> Result<(Self, Vec<f64>, Vec<f64>)> {
        self.check_ticks(lower, upper)?;
        let key = (lp_id.to_string(), lower, upper);
        let held = self
            .positions
            .get(&key)
            .ok_or_else(|| Error::UnknownLp(lp_id.to_string()))?
            .liquidity;
        if l > held * (1.0 + OVERDRAW_TOL) {
            return Err(Error::Overdraw(lp_id.to_string()));
        }
        let l = l.min(held);
        let mut next = self.clone();
        let amounts = self.amounts_for(lower, upper, l, self.price);
        let pos = next.positions.get_mut(&key).expect("position exists");
        let paid = std::mem::replace(&mut pos.uncollected, vec![0.0; 2]);
        pos.liquidity -= l;
        let emptied = pos.liquidity <= OVERDRAW_TOL * held;
        if emptied {
            next.positions.remove(&key);
        }
        for u in lower..upper {
            let rebuilt: f64 = next
                .positions
                .iter()
                .filter(|((_, lo, hi), _)| *lo <= u && u < *hi)
                .map(|(_, p)| p.liquidity)
                .sum();
            next.range_liquidity[u] = rebuilt;
        }
        let legs: Vec<f64> = amounts.iter().map(|a| -a).collect();
        add_into(&mut next.reserves, &legs);
        Ok((next, legs, paid))
    }

    /// Applies a signed quote over ticks `[lower, upper]`. Provisions must
    /// match the range composition; withdrawals release the matching
    /// liquidity and pay out the position's uncollected fees.
    pub fn apply_quote(
        &self,
        lp_id: &str,
        lower: usize,
        upper: usize,
        deltas: &[f64],
    ) -> Result<(Self, Vec<f64>, Vec<f64>)> {
        match quote_direction(deltas)? {
            QuoteDirection::Provide => {
                let l = self.liquidity_for_amounts(lower, upper, deltas)?;
                let (next, dep) = self.add_liquidity(lp_id, lower, upper, l)?;
                Ok((next, dep, vec![0.0; 2]))
            }
            QuoteDirection::Withdraw => {
                let amounts: Vec<f64> = deltas.iter().map(|d| -d).collect();
                let l = self.liquidity_for_amounts(lower, upper, &amounts)?;
                self.remove_liquidity(lp_id, lower, upper, l)
            }
        }
    }

    fn credit(&mut self, unit: usize, lp_fees: &[f64], credited: &mut BTreeMap<String, Vec<f64>>) {
        let total = self.range_liquidity[unit];
        for ((id, lo, hi), p) in self.positions.iter_mut() {
            if *lo <= unit && unit < *hi {
                let r = p.liquidity / total;
                let share: Vec<f64> = lp_fees.iter().map(|f| r * f).collect();
                add_into(&mut p.uncollected, &share);
                add_into(self.lp_earned.get_mut(id).expect("lp registered"), &share);
                add_into(credited.entry(id.clone()).or_insert_with(|| vec![0.0; 2]), &share);
            }
        }
    }

    pub fn execute_trade(&self, trade: &ValidatedTrade) -> Result<ClTradeOutcome> {
        self.execute_trade_with(trade, true)
    }

    /// Executes a trade range by range.
    pub fn execute_trade_with(&self, trade: &ValidatedTrade, charge_fees: bool) -> Result<ClTradeOutcome> {
        if trade.n_assets() != 2 {
            return Err(Error::UnsupportedSpec("concentrated pools hold two assets".into()));
        }
        let fees = if charge_fees { self.fees } else { FeeParams::zero() };
        let ks = trade.solve_for().slot();
        let gs = 1 - ks;
        let total_given = trade.given()[gs];
        let price_up = (gs == 0) == (total_given < 0.0);
        let units = self.range_liquidity.len();

        let mut next = self.clone();
        let mut segments = Vec::new();
        let mut credited = BTreeMap::new();
        let mut accrual = FeeAccrual::zeros(2);
        let mut fee_free = vec![0.0; 2];
        let mut executed = vec![0.0; 2];
        let mut remaining = total_given;

        loop {
            let (_, hi) = next.grid.unit_bounds(next.active);
            if price_up && next.price >= hi {
                if next.active + 1 >= units {
                    return Err(Error::LiquidityExhausted);
                }
                next.active += 1;
            }
            let l = next.range_liquidity[next.active];
            if !(l > 0.0) {
                return Err(Error::LiquidityExhausted);
            }
            let state = next.active_state();
            let (lo, hi) = state.bounds();
            let mut given = vec![0.0; 2];
            given[gs] = remaining;
            let sub = trade_with_given(trade, given);
            let (_, boundary) = solve_crossing_control(&state, &sub)?;
            let (xv, yv) = (state.virtual_q[0], state.virtual_q[1]);

            let mut seg = vec![0.0; 2];
            let new_price;
            match boundary {
                Boundary::None => {
                    seg[gs] = remaining;
                    let (vg, vk) = (state.virtual_q[gs], state.virtual_q[ks]);
                    seg[ks] = -vk * remaining / (vg + remaining);
                    new_price = (yv + seg[1]) / (xv + seg[0]);
                }
                Boundary::Lower | Boundary::Upper => {
                    let bound = if boundary == Boundary::Lower { lo } else { hi };
                    seg[0] = l / bound.sqrt() - xv;
                    seg[1] = l * bound.sqrt() - yv;
                    new_price = bound;
                }
            }
            let depleted_reserve = match boundary {
                Boundary::Upper => Some(state.real_q_in_range[0] + seg[0]),
                Boundary::Lower => Some(state.real_q_in_range[1] + seg[1]),
                Boundary::None => None,
            };
            let seg_exec: Vec<f64> = seg.iter().map(|&d| fees.gross_up(d)).collect();
            let seg_fees = fees.accrue(&seg_exec);
            next.credit(next.active, &seg_fees.lp_fees, &mut credited);
            add_into(&mut accrual.lp_fees, &seg_fees.lp_fees);
            add_into(&mut accrual.treasury_fees, &seg_fees.treasury_fees);
            add_into(&mut fee_free, &seg);
            add_into(&mut executed, &seg_exec);
            segments.push(TradeSegment {
                range: state.active.clone(),
                beta: seg[gs] / total_given,
                fee_free: seg.clone(),
                executed: seg_exec,
                fees: seg_fees,
                depleted_reserve,
                price_after: new_price,
            });
            next.price = new_price;
            remaining -= seg[gs];

            let done = boundary == Boundary::None || remaining.abs() <= 1e-15 * total_given.abs();
            if boundary == Boundary::Lower || (done && next.price <= lo) {
                // Landing on the lower tick puts the price in the range below.
                if next.active == 0 {
                    return Err(Error::LiquidityExhausted);
                }
                next.active -= 1;
            }
            if done {
                break;
            }
        }

        add_into(&mut next.cumulative_lp_fees, &accrual.lp_fees);
        add_into(&mut next.treasury, &accrual.treasury_fees);
        add_into(&mut next.reserves, &fee_free);
        Ok(ClTradeOutcome {
            state: next,
            segments,
            lp_fees: credited,
            accrual,
            fee_free,
            executed,
        })
    }

    /// Amount of asset 1 (positive in, negative out) that moves the price
    /// to `target` along the funded ranges.
    pub fn amount_to_price(&self, target: f64) -> Result<f64> {
        let ticks = self.grid.ticks(0);
        if !(target > ticks[0] && target <= ticks[ticks.len() - 1]) {
            return Err(Error::LiquidityExhausted);
        }
        let mut p = self.price;
        let mut unit = self.active;
        let mut dx = 0.0;
        loop {
            let (lo, hi) = self.grid.unit_bounds(unit);
            let l = self.range_liquidity[unit];
            let stop = target.clamp(lo, hi);
            if stop != p {
                if !(l > 0.0) {
                    return Err(Error::LiquidityExhausted);
                }
                dx += l * (1.0 / stop.sqrt() - 1.0 / p.sqrt());
            }
            p = stop;
            if p == target {
                return Ok(dx);
            }
            if target > p {
                unit += 1;
            } else {
                unit -= 1;
            }
        }
    }
}

fn trade_with_given(trade: &ValidatedTrade, given: Vec<f64>) -> ValidatedTrade {
    let ratio = if trade.given().iter().any(|g| *g != 0.0) {
        let slot = trade.given().iter().position(|g| *g != 0.0).unwrap();
        given[slot] / trade.given()[slot]
    } else {
        1.0
    };
    trade.scaled(ratio)
}
