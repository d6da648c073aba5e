//! Full-range pool: trades with fee gross-up, proportional quotes, and
//! pro-rata LP fee bookkeeping.
//!
//! Two reserve vectors are kept side by side. `q` is the live, fee-inclusive
//! reserve the invariant runs on; `q_nofee` advances only by fee-free trade
//! legs and quote legs. Their difference is exactly the LP fees compounded
//! into the pool, so `q == q_nofee` whenever `gamma == 0`. Protocol fees go
//! to a treasury bucket outside the reserves.

use std::collections::BTreeMap;

use crate::cfmm::CfmmSpec;
use crate::error::{Error, Result};
use crate::events::{QuoteDirection, ValidatedQuote, ValidatedTrade};
use crate::types::{add_into, check_dim, AssetIndex, FeeAccrual, FeeParams};

/// Relative slack allowed when a withdrawal matches an LP's holdings.
const OVERDRAW_TOL: f64 = 1e-9;

#[derive(Debug, Clone)]
pub struct UniformPoolState {
    spec: CfmmSpec,
    fees: FeeParams,
    q: Vec<f64>,
    q_nofee: Vec<f64>,
    depth: f64,
    shares: BTreeMap<String, f64>,
    cumulative_lp_fees: Vec<f64>,
    treasury: Vec<f64>,
    lp_fees: BTreeMap<String, Vec<f64>>,
}

/// Result of applying one trade.
#[derive(Debug, Clone)]
pub struct TradeOutcome {
    pub state: UniformPoolState,
    pub accrual: FeeAccrual,
    /// Fee-inclusive legs `dq^gamma` as seen by the trader.
    pub executed: Vec<f64>,
    /// Fee-free legs `dq` with the solved leg filled in.
    pub fee_free: Vec<f64>,
}

impl UniformPoolState {
    /// An empty pool; the first provision seeds it.
    pub fn new(spec: CfmmSpec, fees: FeeParams) -> Self {
        let n = spec.n_assets();
        UniformPoolState {
            spec,
            fees,
            q: vec![0.0; n],
            q_nofee: vec![0.0; n],
            depth: 0.0,
            shares: BTreeMap::new(),
            cumulative_lp_fees: vec![0.0; n],
            treasury: vec![0.0; n],
            lp_fees: BTreeMap::new(),
        }
    }

    pub fn spec(&self) -> &CfmmSpec {
        &self.spec
    }

    pub fn fees(&self) -> FeeParams {
        self.fees
    }

    pub fn n_assets(&self) -> usize {
        self.q.len()
    }

    pub fn quantities(&self) -> &[f64] {
        &self.q
    }

    pub fn quantities_without_fees(&self) -> &[f64] {
        &self.q_nofee
    }

    pub fn depth(&self) -> f64 {
        self.depth
    }

    pub fn is_empty(&self) -> bool {
        self.shares.is_empty()
    }

    pub fn shares(&self) -> &BTreeMap<String, f64> {
        &self.shares
    }

    pub fn share(&self, lp_id: &str) -> f64 {
        self.shares.get(lp_id).copied().unwrap_or(0.0)
    }

    pub fn cumulative_lp_fees(&self) -> &[f64] {
        &self.cumulative_lp_fees
    }

    pub fn treasury(&self) -> &[f64] {
        &self.treasury
    }

    /// Asset quantities attributable to one LP (share of live reserves).
    pub fn lp_holdings(&self, lp_id: &str) -> Vec<f64> {
        let r = self.share(lp_id);
        self.q.iter().map(|x| r * x).collect()
    }

    /// The LP's share of the fee-free reserves.
    pub fn lp_holdings_without_fees(&self, lp_id: &str) -> Vec<f64> {
        let r = self.share(lp_id);
        self.q_nofee.iter().map(|x| r * x).collect()
    }

    pub fn lp_ids(&self) -> Vec<String> {
        self.lp_fees.keys().cloned().collect()
    }

    pub fn spot_price(&self, i: AssetIndex, j: AssetIndex) -> Result<f64> {
        self.spec.spot_price(&self.q, i, j)
    }

    pub fn spot_matrix(&self) -> Result<Vec<Vec<f64>>> {
        self.spec.spot_matrix(&self.q)
    }

    /// Fees credited to `lp_id` over its share trajectory.
    pub fn lp_fee_share(&self, lp_id: &str) -> Result<Vec<f64>> {
        self.lp_fees
            .get(lp_id)
            .cloned()
            .ok_or_else(|| Error::UnknownLp(lp_id.to_string()))
    }

    pub fn apply_trade(&self, trade: &ValidatedTrade) -> Result<TradeOutcome> {
        self.apply_trade_with(trade, true)
    }

    /// Applies a trade, optionally bypassing fees (used for fee-free
    /// arbitrage equilibration).
    pub fn apply_trade_with(&self, trade: &ValidatedTrade, charge_fees: bool) -> Result<TradeOutcome> {
        check_dim(self.n_assets(), trade.n_assets())?;
        let k = trade.solve_for();
        let dk = self.spec.solve_trade(&self.q, trade.given(), k)?;
        let fee_free = trade.with_solved(dk);
        if self.q_nofee.iter().zip(&fee_free).any(|(a, d)| !(a + d > 0.0)) {
            return Err(Error::InsolventTrade);
        }
        let fees = if charge_fees { self.fees } else { FeeParams::zero() };
        let executed: Vec<f64> = fee_free.iter().map(|&d| fees.gross_up(d)).collect();
        let accrual = fees.accrue(&executed);

        let mut next = self.clone();
        for s in 0..next.q.len() {
            next.q[s] += executed[s] - accrual.treasury_fees[s];
            next.q_nofee[s] += fee_free[s];
        }
        next.depth = next.spec.invariant(&next.q)?;
        add_into(&mut next.cumulative_lp_fees, &accrual.lp_fees);
        add_into(&mut next.treasury, &accrual.treasury_fees);
        for (lp, r) in &self.shares {
            let acc = next
                .lp_fees
                .entry(lp.clone())
                .or_insert_with(|| vec![0.0; self.q.len()]);
            for (a, l) in acc.iter_mut().zip(&accrual.lp_fees) {
                *a += r * l;
            }
        }
        Ok(TradeOutcome {
            state: next,
            accrual,
            executed,
            fee_free,
        })
    }

    /// Applies a validated quote. Shares are recomputed from each LP's
    /// summed asset quantities and renormalized.
    pub fn apply_quote(&self, quote: &ValidatedQuote) -> Result<UniformPoolState> {
        let n = self.n_assets();
        check_dim(n, quote.deltas.len())?;
        let mut holdings: BTreeMap<String, Vec<f64>> = self
            .shares
            .keys()
            .map(|lp| (lp.clone(), self.lp_holdings(lp)))
            .collect();
        let lp = quote.lp_id.clone();
        match quote.direction {
            QuoteDirection::Provide => {
                let h = holdings.entry(lp.clone()).or_insert_with(|| vec![0.0; n]);
                add_into(h, &quote.deltas);
            }
            QuoteDirection::Withdraw => {
                let h = holdings.get_mut(&lp).ok_or_else(|| Error::UnknownLp(lp.clone()))?;
                for (held, d) in h.iter_mut().zip(&quote.deltas) {
                    if -d > *held * (1.0 + OVERDRAW_TOL) + f64::MIN_POSITIVE {
                        return Err(Error::Overdraw(lp.clone()));
                    }
                    *held = (*held + d).max(0.0);
                }
                let left: f64 = h.iter().sum();
                let total: f64 = self.q.iter().sum();
                if left <= OVERDRAW_TOL * total {
                    holdings.remove(&lp);
                }
            }
        }

        let mut next = self.clone();
        add_into(&mut next.q_nofee, &quote.deltas);
        next.lp_fees.entry(lp).or_insert_with(|| vec![0.0; n]);
        if holdings.is_empty() {
            next.q = vec![0.0; n];
            next.depth = 0.0;
            next.shares.clear();
            return Ok(next);
        }
        add_into(&mut next.q, &quote.deltas);
        for x in next.q.iter_mut() {
            *x = x.max(0.0);
        }
        next.depth = next.spec.invariant(&next.q)?;
        let total: f64 = next.q.iter().sum();
        let mut shares: BTreeMap<String, f64> = holdings
            .into_iter()
            .map(|(id, h)| (id, h.iter().sum::<f64>() / total))
            .collect();
        let norm: f64 = shares.values().sum();
        for r in shares.values_mut() {
            *r /= norm;
        }
        next.shares = shares;
        Ok(next)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::events::{validate_quote, validate_trade, QuoteEvent, TradeEvent};

    fn cp(gamma: f64, phi: f64) -> UniformPoolState {
        UniformPoolState::new(CfmmSpec::constant_product(), FeeParams::new(gamma, phi).unwrap())
    }

    fn quote(pool: &UniformPoolState, lp: &str, d: &[f64]) -> UniformPoolState {
        let ev = QuoteEvent {
            deltas: d.to_vec(),
            lp_id: lp.into(),
            timestamp: 0,
        };
        let v = validate_quote(&ev, pool.quantities()).unwrap();
        pool.apply_quote(&v).unwrap()
    }

    fn trade(given: &[f64], k: usize) -> ValidatedTrade {
        let ev = TradeEvent::new(given, AssetIndex::from_slot(k - 1), 0);
        validate_trade(&ev, given.len()).unwrap()
    }

    #[test]
    fn fee_free_trade_leaves_depth() {
        let pool = quote(&cp(0.0, 0.0), "A", &[10.0, 10.0]);
        let out = pool.apply_trade(&trade(&[10.0, 0.0], 2)).unwrap();
        assert_eq!(out.executed, out.fee_free);
        assert_eq!(out.accrual.lp_fees, vec![0.0, 0.0]);
        assert!((out.state.depth() - 100.0).abs() < 1e-12);
        assert_eq!(out.state.quantities(), out.state.quantities_without_fees());
    }

    #[test]
    fn fee_gross_up_example() {
        let pool = quote(&cp(0.003, 0.0), "A", &[10.0, 10.0]);
        let out = pool.apply_trade(&trade(&[10.0, 0.0], 2)).unwrap();
        assert!((out.fee_free[1] + 5.0).abs() < 1e-14);
        let grossed = 10.0 / 0.997;
        assert!((out.executed[0] - grossed).abs() < 1e-12);
        assert!((out.executed[0] - 10.030090270812437).abs() < 1e-12);
        assert!((out.accrual.lp_fees[0] - 0.003 * grossed).abs() < 1e-15);
        assert_eq!(out.accrual.lp_fees[1], 0.0);
        let k = (10.0 + grossed) * 5.0;
        assert!((out.state.depth() - k).abs() < 1e-12 * k);
        assert!((out.state.depth() - 100.15045135406219).abs() < 1e-9);
    }

    #[test]
    fn protocol_fee_split_example() {
        let pool = quote(&cp(0.003, 0.1), "A", &[10.0, 10.0]);
        let out = pool.apply_trade(&trade(&[10.0, 0.0], 2)).unwrap();
        let grossed = 10.0 / 0.997;
        assert!((out.accrual.lp_fees[0] - 0.9 * 0.003 * grossed).abs() < 1e-15);
        assert!((out.accrual.lp_fees[0] - 0.027081).abs() < 1e-6);
        assert!((out.accrual.treasury_fees[0] - 0.003009).abs() < 1e-6);
        // Treasury sits outside reserves.
        let q = out.state.quantities();
        assert!((q[0] - (20.0 + out.accrual.lp_fees[0])).abs() < 1e-12);
        assert_eq!(out.state.treasury()[0], out.accrual.treasury_fees[0]);
    }

    #[test]
    fn share_examples() {
        let pool = quote(&cp(0.0, 0.0), "A", &[10.0, 10.0]);
        assert_eq!(pool.share("A"), 1.0);
        let pool = quote(&pool, "B", &[10.0, 10.0]);
        assert!((pool.share("A") - 0.5).abs() < 1e-15);
        assert!((pool.share("B") - 0.5).abs() < 1e-15);
        let partial = quote(&pool, "A", &[-5.0, -5.0]);
        assert!((partial.share("A") - 1.0 / 3.0).abs() < 1e-12);
        assert!((partial.share("B") - 2.0 / 3.0).abs() < 1e-12);
        let exit = quote(&pool, "A", &[-10.0, -10.0]);
        assert_eq!(exit.share("A"), 0.0);
        assert!((exit.share("B") - 1.0).abs() < 1e-15);
    }

    #[test]
    fn last_lp_exit_empties_pool() {
        let pool = quote(&cp(0.0, 0.0), "A", &[10.0, 10.0]);
        let pool = quote(&pool, "A", &[-10.0, -10.0]);
        assert!(pool.is_empty());
        assert_eq!(pool.quantities(), &[0.0, 0.0]);
        assert_eq!(pool.depth(), 0.0);
    }

    #[test]
    fn withdrawal_errors() {
        let pool = quote(&cp(0.0, 0.0), "A", &[10.0, 10.0]);
        let over = ValidatedQuote {
            deltas: vec![-11.0, -11.0],
            lp_id: "A".into(),
            timestamp: 0,
            direction: QuoteDirection::Withdraw,
        };
        assert!(matches!(pool.apply_quote(&over), Err(Error::Overdraw(_))));
        let stranger = ValidatedQuote {
            lp_id: "Z".into(),
            deltas: vec![-1.0, -1.0],
            ..over
        };
        assert!(matches!(pool.apply_quote(&stranger), Err(Error::UnknownLp(_))));
    }

    #[test]
    fn lp_fee_share_examples() {
        let pool = quote(&cp(0.003, 0.0), "A", &[10.0, 10.0]);
        let out = pool.apply_trade(&trade(&[10.0, 0.0], 2)).unwrap();
        assert_eq!(out.state.lp_fee_share("A").unwrap(), out.state.cumulative_lp_fees());

        let pool = quote(&cp(0.003, 0.0), "A", &[10.0, 10.0]);
        let pool = quote(&pool, "B", &[30.0, 30.0]);
        let out = pool.apply_trade(&trade(&[4.0, 0.0], 2)).unwrap();
        let out = out.state.apply_trade(&trade(&[0.0, 8.0], 1)).unwrap();
        let lambda = out.state.cumulative_lp_fees().to_vec();
        let a = out.state.lp_fee_share("A").unwrap();
        let b = out.state.lp_fee_share("B").unwrap();
        for s in 0..2 {
            assert!((a[s] - 0.25 * lambda[s]).abs() < 1e-15);
            assert!((b[s] - 0.75 * lambda[s]).abs() < 1e-15);
        }
        assert!(matches!(out.state.lp_fee_share("nobody"), Err(Error::UnknownLp(_))));
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        #[derive(Debug, Clone)]
        enum Op {
            Trade { frac: f64, into_first: bool },
            Provide { lp: usize, alpha: f64 },
            Withdraw { lp: usize, frac: f64 },
        }

        fn op() -> impl Strategy<Value = Op> {
            prop_oneof![
                (-0.5f64..2.0, proptest::bool::ANY).prop_map(|(frac, into_first)| Op::Trade { frac, into_first }),
                (0usize..3, 0.01f64..2.0).prop_map(|(lp, alpha)| Op::Provide { lp, alpha }),
                (0usize..3, 0.01f64..1.0).prop_map(|(lp, frac)| Op::Withdraw { lp, frac }),
            ]
        }

        fn run(
            gamma: f64,
            phi: f64,
            spec: CfmmSpec,
            ops: &[Op],
            mut check: impl FnMut(&UniformPoolState, &UniformPoolState, Option<&TradeOutcome>),
        ) {
            let lps = ["A", "B", "C"];
            let mut pool = UniformPoolState::new(spec, FeeParams::new(gamma, phi).unwrap());
            pool = quote(&pool, "A", &[100.0, 250.0]);
            for op in ops {
                let before = pool.clone();
                match *op {
                    Op::Trade { frac, into_first } => {
                        if frac.abs() < 1e-6 {
                            continue;
                        }
                        let q = pool.quantities();
                        let t = if into_first {
                            trade(&[frac * q[0], 0.0], 2)
                        } else {
                            trade(&[0.0, frac * q[1]], 1)
                        };
                        if let Ok(out) = pool.apply_trade(&t) {
                            check(&before, &out.state, Some(&out));
                            pool = out.state;
                        }
                    }
                    Op::Provide { lp, alpha } => {
                        let d: Vec<f64> = pool.quantities().iter().map(|x| alpha * x).collect();
                        pool = quote(&pool, lps[lp], &d);
                        check(&before, &pool, None);
                    }
                    Op::Withdraw { lp, frac } => {
                        let h = pool.lp_holdings(lps[lp]);
                        if h.iter().all(|x| *x == 0.0) || pool.shares().len() == 1 {
                            continue;
                        }
                        let d: Vec<f64> = h.iter().map(|x| -frac * x).collect();
                        pool = quote(&pool, lps[lp], &d);
                        check(&before, &pool, None);
                    }
                }
            }
        }

        proptest! {
            #[test]
            fn fee_and_share_invariants(
                ops in proptest::collection::vec(op(), 1..30),
                gamma in 0.0f64..0.05,
                phi in 0.0f64..1.0,
            ) {
                run(gamma, phi, CfmmSpec::constant_product(), &ops, |before, after, out| {
                    let sum: f64 = after.shares().values().sum();
                    assert!((sum - 1.0).abs() <= 1e-12);
                    assert!(after.quantities().iter().zip(after.quantities_without_fees())
                        .all(|(a, b)| a >= b || (b - a) <= 1e-12 * a.max(1.0)));
                    let k = after.spec().invariant(after.quantities()).unwrap();
                    assert!((k - after.depth()).abs() <= 1e-12 * k);
                    if let Some(out) = out {
                        for s in 0..2 {
                            let x_plus = out.executed[s].max(0.0);
                            let total = out.accrual.lp_fees[s] + out.accrual.treasury_fees[s];
                            assert!((total - gamma * x_plus).abs() <= 1e-12 * x_plus.max(1.0));
                        }
                        if gamma > 0.0 && phi < 1.0 {
                            assert!(after.depth() > before.depth());
                        }
                    } else {
                        let z0 = before.spot_price(AssetIndex::from_slot(0), AssetIndex::from_slot(1)).unwrap();
                        let z1 = after.spot_price(AssetIndex::from_slot(0), AssetIndex::from_slot(1)).unwrap();
                        assert!(((z1 - z0) / z0).abs() <= 1e-12);
                    }
                    let lambda = after.cumulative_lp_fees();
                    for s in 0..2 {
                        let per_lp: f64 = ["A", "B", "C"]
                            .iter()
                            .filter_map(|lp| after.lp_fee_share(lp).ok())
                            .map(|v| v[s])
                            .sum();
                        assert!((per_lp - lambda[s]).abs() <= 1e-12 * lambda[s].max(1.0));
                    }
                });
            }

            #[test]
            fn zero_fee_reserves_match_shadow(ops in proptest::collection::vec(op(), 1..30)) {
                run(0.0, 0.0, CfmmSpec::constant_mean(vec![0.3, 0.7]).unwrap(), &ops, |_, after, _| {
                    assert_eq!(after.quantities(), after.quantities_without_fees());
                });
            }
        }
    }
}
