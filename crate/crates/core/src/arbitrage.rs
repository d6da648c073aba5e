//! Price balance against external prices and the trades that restore it.

use serde::{Deserialize, Serialize};

use crate::cfmm::CfmmSpec;
use crate::concentrated::ConcentratedPool;
use crate::error::{Error, Result};
use crate::events::{validate_trade, TradeEvent};
use crate::solver::bracketed_root_solve;
use crate::types::{check_dim, AssetIndex, FiatPriceVector};
use crate::uniform::{TradeOutcome, UniformPoolState};

/// Relative tolerance on each pairwise price `Z_{i,j}` vs `p_i / p_j`.
pub const EQUILIBRIUM_TOL: f64 = 1e-9;
const MAX_SWEEPS: usize = 200;

/// `delta_{i,j} = Z_{i,j} - p_i / p_j`.
pub fn specific_arbitrage(z: &[Vec<f64>], p: &FiatPriceVector, i: AssetIndex, j: AssetIndex) -> f64 {
    if i == j {
        return 0.0;
    }
    z[i.slot()][j.slot()] - p.ratio(i, j)
}

/// `delta_j = sum_i delta_{i,j}`.
pub fn total_arbitrage(z: &[Vec<f64>], p: &FiatPriceVector, j: AssetIndex) -> f64 {
    (0..z.len())
        .map(|s| specific_arbitrage(z, p, AssetIndex::from_slot(s), j))
        .sum()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ArbitrageReport {
    pub specific: Vec<Vec<f64>>,
    pub total: Vec<f64>,
    pub in_equilibrium: bool,
}

impl ArbitrageReport {
    pub fn new(z: &[Vec<f64>], p: &FiatPriceVector) -> Result<Self> {
        let n = z.len();
        check_dim(n, p.len())?;
        let a = AssetIndex::from_slot;
        let specific: Vec<Vec<f64>> = (0..n)
            .map(|i| (0..n).map(|j| specific_arbitrage(z, p, a(i), a(j))).collect())
            .collect();
        let total = (0..n).map(|j| total_arbitrage(z, p, a(j))).collect();
        let in_equilibrium =
            (0..n).all(|i| (0..n).all(|j| specific[i][j].abs() <= EQUILIBRIUM_TOL * p.ratio(a(i), a(j))));
        Ok(ArbitrageReport {
            specific,
            total,
            in_equilibrium,
        })
    }

    /// Largest `|delta_{i,j}| / (p_i / p_j)` over all pairs.
    pub fn max_relative(&self, p: &FiatPriceVector) -> f64 {
        let n = self.specific.len();
        let a = AssetIndex::from_slot;
        let mut worst: f64 = 0.0;
        for i in 0..n {
            for j in 0..n {
                worst = worst.max(self.specific[i][j].abs() / p.ratio(a(i), a(j)));
            }
        }
        worst
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EquilibrationMode {
    /// Execute the balancing trade without charging fees.
    #[default]
    FeeFree,
    /// Balance the fee-free legs, then charge fees on the inbound legs when
    /// the trade executes. Live prices end slightly off balance.
    FeeAware,
}

impl EquilibrationMode {
    pub fn charges_fees(self) -> bool {
        self == EquilibrationMode::FeeAware
    }
}

/// Quantities on the level set of `q` at which every spot price equals the
/// external price ratio.
pub fn equilibrium_quantities(spec: &CfmmSpec, q: &[f64], p: &FiatPriceVector) -> Result<Vec<f64>> {
    check_dim(spec.n_assets(), p.len())?;
    let k = spec.invariant(q)?;
    match spec {
        CfmmSpec::ConstantProduct => Ok(vec![(k * p[1] / p[0]).sqrt(), (k * p[0] / p[1]).sqrt()]),
        CfmmSpec::ConstantMean { weights } => {
            // Value fractions equal the weights: q_i p_i = c w_i.
            let log_c = k.ln()
                - weights
                    .iter()
                    .zip(p.iter())
                    .map(|(w, pi)| w * (w / pi).ln())
                    .sum::<f64>();
            Ok(weights
                .iter()
                .zip(p.iter())
                .map(|(w, pi)| (log_c + (w / pi).ln()).exp())
                .collect())
        }
        CfmmSpec::Custom(_) => pairwise_sweeps(spec, q, p),
    }
}

/// Moves `q_slot` along the level set, letting the last asset absorb the
/// change, until `Z_{slot,last} = p_slot / p_last`.
fn balance_pair(spec: &CfmmSpec, q: &[f64], p: &FiatPriceVector, slot: usize) -> Result<Vec<f64>> {
    let n = q.len();
    let last = AssetIndex::from_slot(n - 1);
    let target = (p[slot] / p[n - 1]).ln();
    let point = |x: f64| -> Result<Vec<f64>> {
        let mut given = vec![0.0; n];
        given[slot] = x - q[slot];
        let dk = spec.solve_trade(q, &given, last)?;
        let mut moved = q.to_vec();
        moved[slot] = x;
        moved[n - 1] += dk;
        Ok(moved)
    };
    let gap = |x: f64| -> f64 {
        point(x)
            .and_then(|m| spec.spot_price(&m, AssetIndex::from_slot(slot), last))
            .map_or(f64::NAN, |z| z.ln() - target)
    };
    let g0 = gap(q[slot]);
    if !g0.is_finite() {
        return Err(Error::SolverNoConverge(0));
    }
    if g0.abs() <= EQUILIBRIUM_TOL * 1e-3 {
        return Ok(q.to_vec());
    }
    // Z_{slot,last} falls as q_slot grows.
    let step = if g0 > 0.0 { 2.0 } else { 0.5 };
    let mut far = q[slot];
    let mut grown = 0;
    loop {
        far *= step;
        let g = gap(far);
        if g.is_finite() && g.signum() != g0.signum() {
            break;
        }
        grown += 1;
        if grown > 1000 || !g.is_finite() {
            return Err(Error::SolverNoConverge(grown));
        }
    }
    let near = far / step;
    let x = bracketed_root_solve(gap, near, far, 1e-15)?;
    point(x)
}

fn pairwise_sweeps(spec: &CfmmSpec, q: &[f64], p: &FiatPriceVector) -> Result<Vec<f64>> {
    let n = q.len();
    let mut cur = q.to_vec();
    for _ in 0..MAX_SWEEPS {
        for slot in 0..n - 1 {
            cur = balance_pair(spec, &cur, p, slot)?;
        }
        if ArbitrageReport::new(&spec.spot_matrix(&cur)?, p)?.in_equilibrium {
            return Ok(cur);
        }
        if n == 2 {
            break;
        }
    }
    Err(Error::SolverNoConverge(MAX_SWEEPS))
}

/// Trade moving a uniform pool to the price balance condition, or `None`
/// when it already holds within tolerance.
///
/// The target lies on the level set of the live reserves. Every leg except
/// the last is given; the last is solved for. The legs are the same in
/// both modes; the mode only decides whether the pool charges fees when the
/// trade is applied.
pub fn equilibrate(
    pool: &UniformPoolState,
    p: &FiatPriceVector,
    _mode: EquilibrationMode,
) -> Result<Option<TradeEvent>> {
    if pool.is_empty() {
        return Err(Error::ZeroValuePool);
    }
    let q = pool.quantities();
    check_dim(q.len(), p.len())?;
    if ArbitrageReport::new(&pool.spot_matrix()?, p)?.in_equilibrium {
        return Ok(None);
    }
    let target = equilibrium_quantities(pool.spec(), q, p)?;
    let n = q.len();
    let given: Vec<f64> = (0..n)
        .map(|s| if s == n - 1 { 0.0 } else { target[s] - q[s] })
        .collect();
    if given.iter().all(|d| *d == 0.0) {
        return Ok(None);
    }
    Ok(Some(TradeEvent::new(&given, AssetIndex::from_slot(n - 1), 0)))
}

/// Finds and applies the balancing trade; fees are charged only in
/// [`EquilibrationMode::FeeAware`].
pub fn apply_equilibration(
    pool: &UniformPoolState,
    p: &FiatPriceVector,
    mode: EquilibrationMode,
    timestamp: i64,
) -> Result<Option<TradeOutcome>> {
    let Some(mut ev) = equilibrate(pool, p, mode)? else {
        return Ok(None);
    };
    ev.timestamp = timestamp;
    let v = validate_trade(&ev, pool.n_assets())?;
    pool.apply_trade_with(&v, mode.charges_fees()).map(Some)
}

/// Balancing trade for a concentrated pool: the asset-1 amount that walks
/// the price through the funded ranges to `p_1 / p_2`, solved for asset 2.
/// Fails with `LiquidityExhausted` when the target lies off the grid or
/// beyond an unfunded range.
pub fn equilibrate_concentrated(pool: &ConcentratedPool, p: &FiatPriceVector) -> Result<Option<TradeEvent>> {
    check_dim(2, p.len())?;
    let target = p[0] / p[1];
    if (pool.price() - target).abs() <= EQUILIBRIUM_TOL * target {
        return Ok(None);
    }
    let dx = pool.amount_to_price(target)?;
    if dx == 0.0 {
        return Ok(None);
    }
    Ok(Some(TradeEvent::new(&[dx, 0.0], AssetIndex::from_slot(1), 0)))
}
