//! Event replay with periodic metric sampling.
//!
//! Events from the log, the optional price feed and inline config prices are
//! merged by timestamp, price updates first within a timestamp. Samples fall
//! at `t0 + k * period` where `t0` is the first event timestamp; a sample at
//! `s` reflects every event with timestamp `<= s`. Each sample covers the
//! window from the start of the replay, after the initial LPs have funded
//! the pool.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::arbitrage::{apply_equilibration, equilibrate_concentrated, EquilibrationMode};
use crate::concentrated::{ConcentratedPool, PriceRange};
use crate::error::{Error, Result};
use crate::events::{validate_quote, validate_trade, QuoteEvent};
use crate::exec::{self, Execution};
use crate::metrics::{lp_relative_value, MetricSnapshot, Numeraire, WindowLedger};
use crate::replay::config::SimulationConfig;
use crate::replay::log::{load_event_log, EventPayload, EventRecord};
use crate::types::{add_into, FeeAccrual, FiatPriceVector};
use crate::uniform::UniformPoolState;

#[derive(Debug, Clone)]
pub enum SimPool {
    Uniform(UniformPoolState),
    Concentrated(ConcentratedPool),
}

impl SimPool {
    pub fn n_assets(&self) -> usize {
        match self {
            SimPool::Uniform(p) => p.n_assets(),
            SimPool::Concentrated(_) => 2,
        }
    }

    /// Reserves without compounded LP fees.
    pub fn fee_free_quantities(&self) -> Vec<f64> {
        match self {
            SimPool::Uniform(p) => p.quantities_without_fees().to_vec(),
            SimPool::Concentrated(p) => p.reserves().to_vec(),
        }
    }

    pub fn is_empty(&self) -> bool {
        match self {
            SimPool::Uniform(p) => p.is_empty(),
            SimPool::Concentrated(p) => p.positions().is_empty(),
        }
    }

    pub fn spot_matrix(&self) -> Result<Vec<Vec<f64>>> {
        match self {
            SimPool::Uniform(p) => p.spot_matrix(),
            SimPool::Concentrated(p) => Ok(p.spot_matrix()),
        }
    }

    pub fn cumulative_lp_fees(&self) -> &[f64] {
        match self {
            SimPool::Uniform(p) => p.cumulative_lp_fees(),
            SimPool::Concentrated(p) => p.cumulative_lp_fees(),
        }
    }

    pub fn treasury(&self) -> &[f64] {
        match self {
            SimPool::Uniform(p) => p.treasury(),
            SimPool::Concentrated(p) => p.treasury(),
        }
    }

    fn lp_holdings(&self, lp: &str) -> Vec<f64> {
        match self {
            SimPool::Uniform(p) => p.lp_holdings_without_fees(lp),
            SimPool::Concentrated(p) => p.lp_quantities(lp),
        }
    }

    fn lp_fees(&self, lp: &str) -> Vec<f64> {
        let fees = match self {
            SimPool::Uniform(p) => p.lp_fee_share(lp),
            SimPool::Concentrated(p) => p.lp_fees_earned(lp),
        };
        fees.unwrap_or_else(|_| vec![0.0; self.n_assets()])
    }

    fn tick_indices(pool: &ConcentratedPool, range: Option<(f64, f64)>) -> Result<(usize, usize)> {
        let (lo, hi) = range.ok_or(Error::OffGridRange)?;
        pool.grid().range_indices(&PriceRange::single(lo, hi)?)
    }

    /// Validates and applies a quote; returns the reserve legs it moved.
    pub fn apply_quote(&mut self, quote: &QuoteEvent, range: Option<(f64, f64)>) -> Result<Vec<f64>> {
        match self {
            SimPool::Uniform(p) => {
                if range.is_some() {
                    return Err(Error::UnsupportedSpec("ranges apply only to concentrated pools".into()));
                }
                let v = validate_quote(quote, p.quantities())?;
                *p = p.apply_quote(&v)?;
                Ok(v.deltas)
            }
            SimPool::Concentrated(p) => {
                let (lo, hi) = Self::tick_indices(p, range)?;
                let (next, legs, _) = p.apply_quote(&quote.lp_id, lo, hi, &quote.deltas)?;
                *p = next;
                Ok(legs)
            }
        }
    }

    /// Funds the pool with `l` units of liquidity (concentrated pools only).
    fn add_liquidity(&mut self, lp: &str, range: Option<(f64, f64)>, l: f64) -> Result<Vec<f64>> {
        match self {
            SimPool::Concentrated(p) => {
                let (lo, hi) = Self::tick_indices(p, range)?;
                let (next, dep) = p.add_liquidity(lp, lo, hi, l)?;
                *p = next;
                Ok(dep)
            }
            SimPool::Uniform(_) => Err(Error::UnsupportedSpec("liquidity is set by quantities here".into())),
        }
    }

    fn apply_trade(&mut self, event: &crate::events::TradeEvent, charge_fees: bool) -> Result<Applied> {
        let v = validate_trade(event, self.n_assets())?;
        match self {
            SimPool::Uniform(p) => {
                let out = p.apply_trade_with(&v, charge_fees)?;
                *p = out.state;
                Ok(Applied {
                    fee_free: out.fee_free,
                    executed: out.executed,
                    accrual: out.accrual,
                })
            }
            SimPool::Concentrated(p) => {
                let out = p.execute_trade_with(&v, charge_fees)?;
                *p = out.state;
                Ok(Applied {
                    fee_free: out.fee_free,
                    executed: out.executed,
                    accrual: out.accrual,
                })
            }
        }
    }

    /// Runs one arbitrage step toward `prices`; `None` when already balanced.
    fn equilibrate(&mut self, prices: &FiatPriceVector, mode: EquilibrationMode, ts: i64) -> Result<Option<Applied>> {
        if self.is_empty() {
            return Ok(None);
        }
        match self {
            SimPool::Uniform(p) => Ok(apply_equilibration(p, prices, mode, ts)?.map(|out| {
                *p = out.state;
                Applied {
                    fee_free: out.fee_free,
                    executed: out.executed,
                    accrual: out.accrual,
                }
            })),
            SimPool::Concentrated(p) => {
                let Some(mut ev) = equilibrate_concentrated(p, prices)? else {
                    return Ok(None);
                };
                ev.timestamp = ts;
                self.apply_trade(&ev, mode.charges_fees()).map(Some)
            }
        }
    }
}

struct Applied {
    fee_free: Vec<f64>,
    executed: Vec<f64>,
    accrual: FeeAccrual,
}

/// Everything a replay needs besides the events.
#[derive(Debug, Clone)]
pub struct SimulationSetup {
    pub pool: SimPool,
    pub numeraires: Vec<Numeraire>,
    pub sampling_period: i64,
    pub equilibrate_each_price_update: bool,
    pub equilibration_mode: EquilibrationMode,
    pub initial_prices: Option<FiatPriceVector>,
    pub strict: bool,
    /// LP holdings deposited before the first event.
    pub initial_lps: BTreeMap<String, Vec<f64>>,
}

impl SimulationSetup {
    /// Builds the pool and funds the configured LPs.
    pub fn from_config(cfg: &SimulationConfig) -> Result<Self> {
        cfg.validate_model()?;
        let fees = cfg.fees()?;
        let mut pool = match &cfg.pool.ticks {
            None => SimPool::Uniform(UniformPoolState::new(cfg.spec()?, fees)),
            Some(t) => {
                let price = cfg.pool.initial_price.expect("checked by validate_model");
                SimPool::Concentrated(ConcentratedPool::new(t.grid()?, fees, price)?)
            }
        };
        let mut initial_lps: BTreeMap<String, Vec<f64>> = BTreeMap::new();
        for lp in &cfg.lps {
            let range = lp.range.map(|[lo, hi]| (lo, hi));
            let legs = match (&lp.quantities, lp.liquidity) {
                (Some(q), _) => {
                    let ev = QuoteEvent {
                        deltas: q.clone(),
                        lp_id: lp.id.clone(),
                        timestamp: 0,
                    };
                    pool.apply_quote(&ev, range)
                }
                (None, Some(l)) => pool.add_liquidity(&lp.id, range, l),
                (None, None) => unreachable!("checked by validate_model"),
            }
            .map_err(|e| Error::Config(format!("lp {}: {e}", lp.id)))?;
            add_into(
                initial_lps
                    .entry(lp.id.clone())
                    .or_insert_with(|| vec![0.0; pool.n_assets()]),
                &legs,
            );
        }
        Ok(SimulationSetup {
            pool,
            numeraires: cfg.numeraires()?,
            sampling_period: cfg.sampling_period,
            equilibrate_each_price_update: cfg.equilibrate_each_price_update,
            equilibration_mode: cfg.equilibration_mode,
            initial_prices: cfg.initial_prices()?,
            strict: cfg.strict,
            initial_lps,
        })
    }
}

/// Reads the event log and price feed named in `cfg` and merges them with
/// the inline prices.
pub fn load_records(cfg: &SimulationConfig) -> Result<Vec<EventRecord>> {
    let n = cfg.spec()?.n_assets();
    let log = load_event_log(&cfg.event_log, n)?;
    let feed = match &cfg.price_feed {
        Some(path) => {
            let recs = load_event_log(path, n)?;
            if let Some(bad) = recs.iter().find(|r| !r.is_price_update()) {
                return Err(Error::AtLine {
                    line: bad.line,
                    source: Box::new(Error::Config("price feeds may only hold price_update records".into())),
                });
            }
            recs
        }
        None => Vec::new(),
    };
    let inline = cfg
        .prices
        .iter()
        .map(|p| {
            Ok(EventRecord::price_update(
                p.timestamp,
                FiatPriceVector::new(p.prices.clone())?,
            ))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(merge_records(vec![log, feed, inline]))
}

/// Stable merge by timestamp, price updates first within a timestamp, then
/// by source and original order.
pub fn merge_records(sources: Vec<Vec<EventRecord>>) -> Vec<EventRecord> {
    let mut all: Vec<(usize, usize, EventRecord)> = sources
        .into_iter()
        .enumerate()
        .flat_map(|(s, recs)| recs.into_iter().enumerate().map(move |(i, r)| (s, i, r)))
        .collect();
    all.sort_by_key(|(s, i, r)| (r.timestamp, !r.is_price_update(), *s, *i));
    all.into_iter().map(|(_, _, r)| r).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Rejection {
    /// Position in the merged event sequence.
    pub index: usize,
    /// Source line, 0 for records without one.
    pub line: usize,
    pub timestamp: i64,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LpSummary {
    pub lp_id: String,
    pub fees: Vec<f64>,
    /// Fee-adjusted relative value per numeraire; `None` when the LP has no
    /// hold value left.
    pub farv: Vec<(Numeraire, Option<f64>)>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimulationReport {
    pub total_events: usize,
    pub applied: usize,
    pub rejected: Vec<Rejection>,
    /// Arbitrage trades added after price updates.
    pub injected_trades: usize,
    pub final_quantities_without_fees: Vec<f64>,
    pub lp_fees: Vec<f64>,
    pub treasury: Vec<f64>,
    /// Sum of positive fee-inclusive legs over all fee-charging trades.
    pub gross_inbound: Vec<f64>,
    pub final_metrics: Vec<MetricSnapshot>,
    pub lps: Vec<LpSummary>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulationOutput {
    pub series: Vec<MetricSnapshot>,
    pub report: SimulationReport,
}

struct Replay {
    setup: SimulationSetup,
    prices: Option<FiatPriceVector>,
    ledger: WindowLedger,
    lp_ledgers: BTreeMap<String, WindowLedger>,
    series: Vec<MetricSnapshot>,
    applied: usize,
    injected: usize,
    rejected: Vec<Rejection>,
    gross_inbound: Vec<f64>,
}

impl Replay {
    fn new(setup: SimulationSetup) -> Self {
        let n = setup.pool.n_assets();
        let ledger = WindowLedger::open(&setup.pool.fee_free_quantities());
        let lp_ledgers = setup
            .initial_lps
            .iter()
            .map(|(id, q)| (id.clone(), WindowLedger::open(q)))
            .collect();
        Replay {
            prices: setup.initial_prices.clone(),
            setup,
            ledger,
            lp_ledgers,
            series: Vec::new(),
            applied: 0,
            injected: 0,
            rejected: Vec::new(),
            gross_inbound: vec![0.0; n],
        }
    }

    fn record_trade(&mut self, t: &Applied, charged: bool) {
        self.ledger.record_trade(&t.fee_free, &t.accrual.lp_fees);
        if charged {
            for (g, x) in self.gross_inbound.iter_mut().zip(&t.executed) {
                *g += x.max(0.0);
            }
        }
    }

    fn process(&mut self, rec: &EventRecord) -> Result<()> {
        let pool = &mut self.setup.pool;
        match &rec.payload {
            EventPayload::Trade(ev) => {
                let t = pool.apply_trade(ev, true)?;
                self.record_trade(&t, true);
            }
            EventPayload::Quote { quote, range } => {
                let legs = pool.apply_quote(quote, *range)?;
                self.ledger.record_quote(&legs);
                let n = legs.len();
                self.lp_ledgers
                    .entry(quote.lp_id.clone())
                    .or_insert_with(|| WindowLedger::open(&vec![0.0; n]))
                    .record_quote(&legs);
            }
            EventPayload::PriceUpdate(p) => {
                if p.len() != pool.n_assets() {
                    return Err(Error::DimensionMismatch {
                        expected: pool.n_assets(),
                        got: p.len(),
                    });
                }
                self.prices = Some(p.clone());
                if self.setup.equilibrate_each_price_update {
                    let mode = self.setup.equilibration_mode;
                    if let Some(t) = pool.equilibrate(p, mode, rec.timestamp)? {
                        self.injected += 1;
                        self.record_trade(&t, mode.charges_fees());
                    }
                }
            }
        }
        Ok(())
    }

    fn snapshots(&mut self, ts: i64) -> Result<Vec<MetricSnapshot>> {
        let pool = &self.setup.pool;
        if pool.is_empty() {
            return Ok(Vec::new());
        }
        self.ledger
            .set_end(&pool.fee_free_quantities(), self.prices.clone(), pool.spot_matrix()?);
        self.ledger.check_consistency()?;
        self.setup
            .numeraires
            .iter()
            .map(|&num| self.ledger.snapshot(ts, num))
            .collect()
    }

    fn sample(&mut self, ts: i64) -> Result<()> {
        let rows = self.snapshots(ts)?;
        self.series.extend(rows);
        Ok(())
    }

    fn finish(mut self, total_events: usize, t_end: i64) -> Result<SimulationOutput> {
        let final_metrics = self.snapshots(t_end)?;
        let pool = &self.setup.pool;
        let spot = pool.spot_matrix().ok();
        let mut lps = Vec::new();
        for (id, ledger) in &self.lp_ledgers {
            let fees = pool.lp_fees(id);
            let mut l = ledger.clone();
            l.record_fees(&fees);
            let farv = match &spot {
                Some(spot) => {
                    l.set_end(&pool.lp_holdings(id), self.prices.clone(), spot.clone());
                    self.setup
                        .numeraires
                        .iter()
                        .map(|&num| (num, lp_relative_value(&l, num).ok()))
                        .collect()
                }
                None => self.setup.numeraires.iter().map(|&num| (num, None)).collect(),
            };
            lps.push(LpSummary {
                lp_id: id.clone(),
                fees,
                farv,
            });
        }
        let report = SimulationReport {
            total_events,
            applied: self.applied,
            rejected: self.rejected,
            injected_trades: self.injected,
            final_quantities_without_fees: pool.fee_free_quantities(),
            lp_fees: pool.cumulative_lp_fees().to_vec(),
            treasury: pool.treasury().to_vec(),
            gross_inbound: self.gross_inbound,
            final_metrics,
            lps,
        };
        Ok(SimulationOutput {
            series: self.series,
            report,
        })
    }
}

/// Replays `records` (already merged and ordered) against `setup`.
pub fn simulate(setup: SimulationSetup, records: &[EventRecord]) -> Result<SimulationOutput> {
    if setup.sampling_period <= 0 {
        return Err(Error::Config("sampling_period must be positive".into()));
    }
    if records.windows(2).any(|w| w[1].timestamp < w[0].timestamp) {
        let bad = records
            .windows(2)
            .position(|w| w[1].timestamp < w[0].timestamp)
            .unwrap()
            + 1;
        return Err(Error::NonMonotoneTimestamps {
            line: records[bad].line,
        });
    }
    let period = setup.sampling_period;
    let t0 = records.first().map_or(0, |r| r.timestamp);
    let t_end = records.last().map_or(0, |r| r.timestamp);
    let n_samples = (t_end - t0 + period - 1) / period;
    let last_sample = t0 + n_samples * period;
    let strict = setup.strict;

    let mut replay = Replay::new(setup);
    let mut next_sample = t0;
    for (index, rec) in records.iter().enumerate() {
        while rec.timestamp > next_sample {
            replay.sample(next_sample)?;
            next_sample += period;
        }
        match replay.process(rec) {
            Ok(()) => replay.applied += 1,
            Err(e) if strict => {
                return Err(match rec.line {
                    0 => e.at_event(index),
                    line => Error::AtLine {
                        line,
                        source: Box::new(e),
                    },
                })
            }
            Err(e) => replay.rejected.push(Rejection {
                index,
                line: rec.line,
                timestamp: rec.timestamp,
                reason: e.to_string(),
            }),
        }
    }
    while next_sample <= last_sample {
        replay.sample(next_sample)?;
        next_sample += period;
    }
    replay.finish(records.len(), last_sample)
}

/// Loads, replays and returns the series for one config.
pub fn run_simulation(cfg: &SimulationConfig) -> Result<SimulationOutput> {
    let setup = SimulationSetup::from_config(cfg)?;
    let records = load_records(cfg)?;
    simulate(setup, &records)
}

/// Independent replays, one per config, in input order.
pub fn run_many(cfgs: &[SimulationConfig], exec: Execution) -> Vec<Result<SimulationOutput>> {
    exec::map(cfgs, exec, run_simulation)
}
