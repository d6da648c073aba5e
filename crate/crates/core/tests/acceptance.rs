//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any fails.

use std::fs;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use num_rational::Ratio;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use cfmm_core::arbitrage::{apply_equilibration, equilibrium_quantities, ArbitrageReport, EquilibrationMode};
use cfmm_core::concentrated::{ConcentratedPool, TickGrid};
use cfmm_core::events::{validate_quote, validate_trade};
use cfmm_core::exec::Execution;
use cfmm_core::metrics::{
    balancer_profitable_bound, balancer_reduced_coefficients, balancer_trade_profitable, impermanent_loss,
    trade_profitability_scan, Numeraire, WindowLedger,
};
use cfmm_core::replay::{
    export_series, format_event_log, parse_event_log, run_many, run_simulation, simulate, EventRecord,
    SimulationConfig, SimulationSetup,
};
use cfmm_core::{AssetIndex, CfmmSpec, FeeParams, FiatPriceVector, QuoteEvent, TradeEvent, UniformPoolState};

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn a(slot: usize) -> AssetIndex {
    AssetIndex::from_slot(slot)
}

fn prices(p: &[f64]) -> FiatPriceVector {
    FiatPriceVector::new(p.to_vec()).unwrap()
}

fn funded(spec: CfmmSpec, fees: FeeParams, q: &[f64]) -> UniformPoolState {
    let pool = UniformPoolState::new(spec, fees);
    let seed = QuoteEvent {
        deltas: q.to_vec(),
        lp_id: "A".into(),
        timestamp: 0,
    };
    pool.apply_quote(&validate_quote(&seed, pool.quantities()).unwrap())
        .unwrap()
}

fn random_weights(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    let w: Vec<f64> = (0..n).map(|_| rng.gen_range(0.1..1.0)).collect();
    let total: f64 = w.iter().sum();
    w.iter().map(|x| x / total).collect()
}

fn random_spec(rng: &mut ChaCha8Rng) -> CfmmSpec {
    if rng.gen_bool(0.5) {
        CfmmSpec::constant_product()
    } else {
        let n = rng.gen_range(2..=4);
        CfmmSpec::constant_mean(random_weights(rng, n)).unwrap()
    }
}

fn setup(text: &str) -> SimulationSetup {
    SimulationSetup::from_config(&SimulationConfig::parse(text).unwrap()).unwrap_or_else(|e| panic!("{e}"))
}

fn criterion_1() -> Outcome {
    let start = Instant::now();
    let mut worst: f64 = 0.0;
    let mut r4 = f64::NAN;
    for r in [0.25, 0.5, 2.0, 4.0, 9.0] {
        let cfg = r#"
event_log = "unused"
sampling_period = 1
equilibrate_each_price_update = true
initial_prices = [1.0, 1.0]
[pool]
kind = "constant_product"
[[lp]]
id = "A"
quantities = [1000.0, 1000.0]
"#;
        let recs = vec![EventRecord::price_update(1, prices(&[r, 1.0]))];
        let out = simulate(setup(cfg), &recs).map_err(|e| e.to_string())?;
        let rv = out.report.final_metrics[0].rv;
        worst = worst.max((rv - 2.0 * r.sqrt() / (1.0 + r)).abs());
        if r == 4.0 {
            r4 = rv;
        }
    }
    let elapsed = start.elapsed();
    check(
        worst <= 1e-9 && (r4 - 0.8).abs() <= 1e-9 && elapsed < Duration::from_secs(1),
        format!("max |V_p - 2 sqrt(r)/(1+r)| = {worst:.2e}, r=4 gives {r4}, {elapsed:.2?}"),
    )
}

fn criterion_2() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut worst = f64::INFINITY;
    let mut trades = 0;
    for _ in 0..1000 {
        let spec = random_spec(&mut rng);
        let n = spec.n_assets();
        let q0: Vec<f64> = (0..n).map(|_| rng.gen_range(1.0..10.0)).collect();
        let mut pool = funded(spec, FeeParams::zero(), &q0);
        let mut ledger = WindowLedger::open(pool.quantities_without_fees());
        for _ in 0..rng.gen_range(1..10) {
            let k = rng.gen_range(0..n);
            let given: Vec<f64> = (0..n)
                .map(|s| {
                    if s == k {
                        0.0
                    } else {
                        pool.quantities()[s] * rng.gen_range(-0.3..0.3)
                    }
                })
                .collect();
            let Ok(t) = validate_trade(&TradeEvent::new(&given, a(k), 0), n) else {
                continue;
            };
            if let Ok(out) = pool.apply_trade(&t) {
                ledger.record_trade(&out.fee_free, &out.accrual.lp_fees);
                pool = out.state;
                trades += 1;
            }
        }
        let p_end: Vec<f64> = (0..n).map(|_| rng.gen_range(0.5..2.0)).collect();
        let p_end = prices(&p_end);
        if let Some(out) =
            apply_equilibration(&pool, &p_end, EquilibrationMode::FeeFree, 0).map_err(|e| e.to_string())?
        {
            ledger.record_trade(&out.fee_free, &out.accrual.lp_fees);
            pool = out.state;
        }
        ledger.set_end(pool.quantities_without_fees(), Some(p_end), pool.spot_matrix().unwrap());
        let mut nums = vec![Numeraire::Fiat];
        nums.extend((0..n).map(|j| Numeraire::Asset(a(j))));
        for num in nums {
            worst = worst.min(impermanent_loss(&ledger, num).map_err(|e| e.to_string())?);
        }
    }
    let elapsed = start.elapsed();
    check(
        worst >= -1e-12 && elapsed < Duration::from_secs(10),
        format!("min IL = {worst:.3e} over 1000 sequences ({trades} trades), {elapsed:.2?}"),
    )
}

/// Builds a random quotes-only log and the matching config.
fn quotes_only_case(rng: &mut ChaCha8Rng) -> (String, String) {
    let concentrated = rng.gen_bool(0.3);
    let mut recs = Vec::new();
    let mut ts = 0;
    if concentrated {
        let ticks = vec![0.25, 0.5, 1.0, 2.0, 4.0];
        let price = rng.gen_range(0.3..3.5);
        let mut pool =
            ConcentratedPool::new(TickGrid::single(ticks.clone()).unwrap(), FeeParams::zero(), price).unwrap();
        let mut held: Vec<(String, usize, usize)> = Vec::new();
        pool = pool.add_liquidity("seed", 0, 4, 100.0).unwrap().0;
        for i in 0..rng.gen_range(1..30) {
            ts += rng.gen_range(0..5);
            if !held.is_empty() && rng.gen_bool(0.3) {
                let (lp, lo, hi) = held[rng.gen_range(0..held.len())].clone();
                let l = pool.position_liquidity(&lp, lo, hi) * rng.gen_range(0.1..0.9);
                let (next, legs, _) = pool.remove_liquidity(&lp, lo, hi, l).unwrap();
                pool = next;
                recs.push(quote_record(ts, &lp, legs, Some((ticks[lo], ticks[hi]))));
            } else {
                let lo = rng.gen_range(0..4);
                let hi = rng.gen_range(lo + 1..=4);
                let lp = format!("lp{}", i % 4);
                let (next, dep) = pool.add_liquidity(&lp, lo, hi, rng.gen_range(1.0..50.0)).unwrap();
                pool = next;
                held.push((lp.clone(), lo, hi));
                recs.push(quote_record(ts, &lp, dep, Some((ticks[lo], ticks[hi]))));
            }
            if rng.gen_bool(0.3) {
                recs.push(EventRecord::price_update(ts, prices(&[rng.gen_range(0.2..5.0), 1.0])));
            }
        }
        let cfg = format!(
            r#"
event_log = "events.jsonl"
sampling_period = {}
numeraires = ["fiat", "asset1", "asset2"]
initial_prices = [1.0, 1.0]
[pool]
kind = "constant_product"
initial_price = {price:?}
ticks = {{ values = [0.25, 0.5, 1.0, 2.0, 4.0] }}
[[lp]]
id = "seed"
liquidity = 100.0
range = [0.25, 4.0]
"#,
            rng.gen_range(1..6)
        );
        (cfg, format_event_log(&recs))
    } else {
        let spec = random_spec(rng);
        let n = spec.n_assets();
        let weights = spec.weights().map(|w| format!("weights = {w:?}\n")).unwrap_or_default();
        let kind = if spec.weights().is_some() {
            "constant_mean"
        } else {
            "constant_product"
        };
        let q0: Vec<f64> = (0..n).map(|_| rng.gen_range(1.0..100.0)).collect();
        let mut pool = funded(spec, FeeParams::zero(), &q0);
        for i in 0..rng.gen_range(1..30) {
            ts += rng.gen_range(0..5);
            let lp = format!("lp{}", i % 3);
            let q = pool.quantities().to_vec();
            let deltas: Vec<f64> = if pool.share(&lp) > 0.0 && rng.gen_bool(0.4) {
                let f = rng.gen_range(0.1..0.9);
                pool.lp_holdings(&lp).iter().map(|h| -h * f).collect()
            } else {
                let s = rng.gen_range(0.01..0.5);
                q.iter().map(|x| x * s).collect()
            };
            let ev = QuoteEvent {
                deltas: deltas.clone(),
                lp_id: lp.clone(),
                timestamp: ts,
            };
            pool = pool
                .apply_quote(&validate_quote(&ev, pool.quantities()).unwrap())
                .unwrap();
            recs.push(quote_record(ts, &lp, deltas, None));
            if rng.gen_bool(0.3) {
                let p: Vec<f64> = (0..n).map(|_| rng.gen_range(0.2..5.0)).collect();
                recs.push(EventRecord::price_update(ts, prices(&p)));
            }
        }
        let mut nums = vec!["\"fiat\"".to_string()];
        nums.extend((1..=n).map(|j| format!("\"asset{j}\"")));
        let cfg = format!(
            r#"
event_log = "events.jsonl"
sampling_period = {}
numeraires = [{}]
initial_prices = {:?}
[pool]
kind = "{kind}"
{weights}
[[lp]]
id = "A"
quantities = {q0:?}
"#,
            rng.gen_range(1..6),
            nums.join(", "),
            vec![1.0; n],
        );
        (cfg, format_event_log(&recs))
    }
}

fn quote_record(ts: i64, lp: &str, deltas: Vec<f64>, range: Option<(f64, f64)>) -> EventRecord {
    EventRecord::quote(
        QuoteEvent {
            deltas,
            lp_id: lp.into(),
            timestamp: ts,
        },
        range,
    )
}

fn criterion_3() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let (mut rows, mut off, mut rejected) = (0, 0, 0);
    for _ in 0..100 {
        let (cfg, log) = quotes_only_case(&mut rng);
        let cfg = SimulationConfig::parse(&cfg).unwrap();
        let n = cfg.spec().unwrap().n_assets();
        let recs = parse_event_log(&log, n).map_err(|e| e.to_string())?;
        let out = simulate(SimulationSetup::from_config(&cfg).unwrap(), &recs).map_err(|e| e.to_string())?;
        rejected += out.report.rejected.len();
        for s in &out.series {
            rows += 1;
            if s.rv != 1.0 || s.farv != 1.0 {
                off += 1;
            }
        }
    }
    check(
        off == 0 && rejected == 0 && rows > 0,
        format!("{rows} snapshots, {off} with RV or FARV != 1, {rejected} rejected quotes"),
    )
}

fn criterion_4() -> Outcome {
    let w = [0.5, 0.5];
    let fees = FeeParams::new(0.0025, 0.1).unwrap();
    let mut worst: f64 = 0.0;
    for q_x in [1.0, 1e3, 1e6] {
        let b = balancer_profitable_bound(q_x, &w, fees).map_err(|e| e.to_string())?;
        let expect = 9.0 / 4000.0 * q_x;
        worst = worst.max((b.bound - expect).abs() / expect);
    }

    // Exact substitution: w = 1/2, gamma = 1/400, phi = 1/10.
    let (hw, g, phi) = (Ratio::new(1i64, 2), Ratio::new(1i64, 400), Ratio::new(1i64, 10));
    let one = Ratio::from_integer(1);
    let qa = -hw / (one - g);
    let qb = hw * g * (one - phi) / (one - g);
    let symbolic = qa == Ratio::new(-200, 399) && qb == Ratio::new(3, 2660);
    let (fa, fb) = balancer_reduced_coefficients(&w, fees).map_err(|e| e.to_string())?;
    let numeric = (fa - -200.0 / 399.0).abs() <= 1e-15 && (fb - 3.0 / 2660.0).abs() <= 1e-15;

    let q_x = 1000.0;
    let bound = 9.0 / 4000.0 * q_x;
    let pool = funded(CfmmSpec::constant_mean(w.to_vec()).unwrap(), fees, &[q_x, q_x]);
    let mut disagree = 0;
    for i in 0..1000 {
        let dx = (i as f64 + 0.5) / 1000.0 * 4.0 * bound;
        let predicate = balancer_trade_profitable(q_x, &w, fees, dx).map_err(|e| e.to_string())?;
        let t = validate_trade(&TradeEvent::new(&[dx, 0.0], a(1), 0), 2).unwrap();
        let simulated = trade_profitability_scan(&pool, &t).map_err(|e| e.to_string())?;
        if predicate != simulated {
            disagree += 1;
        }
    }
    check(
        worst <= 1e-9 && symbolic && numeric && disagree == 0,
        format!(
            "bound rel err {worst:.2e}; coefficients -200/399, 3/2660 exact: {symbolic}, f64: {numeric}; \
             {disagree}/1000 predicate disagreements"
        ),
    )
}

/// Shared by criteria 5 and 6: (max output error, max depleted reserve,
/// number of crossings).
fn cl_equivalence_runs() -> (f64, f64, usize) {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let ticks: Vec<f64> = (-30..=30).map(|i| 1.1f64.powi(i)).collect();
    let (p_min, p_max) = (ticks[0], ticks[ticks.len() - 1]);
    let (mut worst_out, mut worst_depleted, mut crossings, mut runs) = (0.0f64, 0.0f64, 0, 0);
    while runs < 100 {
        let l: f64 = rng.gen_range(1.0..100.0);
        let price: f64 = rng.gen_range(0.2..5.0);
        let grid = TickGrid::single(ticks.clone()).unwrap();
        let mut pool = ConcentratedPool::new(grid, FeeParams::zero(), price).unwrap();
        for u in 0..ticks.len() - 1 {
            pool = pool.add_liquidity("A", u, u + 1, l).unwrap().0;
        }
        let (x, y) = (l / price.sqrt(), l * price.sqrt());
        let buy_x = rng.gen_bool(0.5);
        let frac = rng.gen_range(-0.8..2.0);
        let (given, k) = if buy_x {
            (vec![0.0, frac * y], 0)
        } else {
            (vec![frac * x, 0.0], 1)
        };
        let gs = 1 - k;
        let v = [x, y];
        let new_given = v[gs] + given[gs];
        let new_other = l * l / new_given;
        let p_after = if gs == 1 {
            new_given / new_other
        } else {
            new_other / new_given
        };
        if !(p_after > p_min * 1.001 && p_after < p_max / 1.001) {
            continue;
        }
        runs += 1;
        let t = validate_trade(&TradeEvent::new(&given, a(k), 0), 2).unwrap();
        let out = pool.execute_trade(&t).unwrap();
        let uniform = funded(CfmmSpec::constant_product(), FeeParams::zero(), &[x, y]);
        let u = uniform.apply_trade(&t).unwrap();
        worst_out = worst_out.max((out.fee_free[k] - u.fee_free[k]).abs());
        for seg in &out.segments {
            if let Some(d) = seg.depleted_reserve {
                crossings += 1;
                worst_depleted = worst_depleted.max(d.abs());
            }
        }
    }
    (worst_out, worst_depleted, crossings)
}

fn criterion_5() -> Outcome {
    let (worst, _, crossings) = cl_equivalence_runs();
    check(
        worst <= 1e-9 && crossings > 0,
        format!("max |CL - uniform| = {worst:.2e} over 100 trades, {crossings} tick crossings"),
    )
}

fn criterion_6() -> Outcome {
    let (_, depleted, crossings) = cl_equivalence_runs();
    check(
        depleted <= 1e-9 && crossings > 0,
        format!("max depleted in-range reserve = {depleted:.2e} at {crossings} crossings"),
    )
}

fn criterion_7() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let (mut worst_total, mut worst_split, mut replays) = (0.0f64, 0.0f64, 0);
    for case in 0..40 {
        let concentrated = case % 2 == 1;
        let gamma = rng.gen_range(0.0..0.01);
        let phi = rng.gen_range(0.0..0.5);
        let mode = if rng.gen_bool(0.5) { "fee_aware" } else { "fee_free" };
        let pool_section = if concentrated {
            "initial_price = 1.0\nticks = { min = 0.25, max = 4.0, ratio = 1.189207115002721 }"
        } else {
            ""
        };
        let lps = if concentrated {
            "[[lp]]\nid = \"A\"\nliquidity = 300.0\nrange = [0.25, 4.0]\n[[lp]]\nid = \"B\"\nliquidity = 200.0\nrange = [0.5, 2.0]\n"
        } else {
            "[[lp]]\nid = \"A\"\nquantities = [300.0, 300.0]\n[[lp]]\nid = \"B\"\nquantities = [100.0, 100.0]\n"
        };
        let cfg = format!(
            "event_log = \"unused\"\nsampling_period = 5\nequilibrate_each_price_update = true\n\
             equilibration_mode = \"{mode}\"\nnumeraires = [\"asset2\"]\n[pool]\nkind = \"constant_product\"\n\
             gamma = {gamma:?}\nphi = {phi:?}\n{pool_section}\n{lps}"
        );
        let mut recs = Vec::new();
        for ts in 0..60 {
            match rng.gen_range(0..4) {
                0 => recs.push(EventRecord::price_update(ts, prices(&[rng.gen_range(0.5..2.0), 1.0]))),
                _ => {
                    let k = rng.gen_range(0..2);
                    let mut given = vec![0.0; 2];
                    given[1 - k] = rng.gen_range(-20.0..20.0);
                    recs.push(EventRecord::trade(TradeEvent::new(&given, a(k), ts)));
                }
            }
        }
        let out = simulate(setup(&cfg), &recs).map_err(|e| e.to_string())?;
        replays += 1;
        let r = &out.report;
        for s in 0..2 {
            let total = r.lp_fees[s] + r.treasury[s];
            worst_total = worst_total.max((total - gamma * r.gross_inbound[s]).abs());
            let paid: f64 = r.lps.iter().map(|lp| lp.fees[s]).sum();
            worst_split = worst_split.max((paid - r.lp_fees[s]).abs());
        }
    }
    check(
        worst_total <= 1e-12 && worst_split <= 1e-12,
        format!(
            "{replays} replays: max |LP + treasury - gamma X+| = {worst_total:.2e}, \
             max |sum of LP payouts - lambda| = {worst_split:.2e}"
        ),
    )
}

fn criterion_8() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let (mut worst_balance, mut worst_depth, mut repeats) = (0.0f64, 0.0f64, 0);
    for _ in 0..500 {
        let spec = random_spec(&mut rng);
        let n = spec.n_assets();
        let q: Vec<f64> = (0..n).map(|_| rng.gen_range(1.0..1000.0)).collect();
        let p = prices(&(0..n).map(|_| rng.gen_range(0.1..10.0)).collect::<Vec<_>>());
        let pool = funded(spec.clone(), FeeParams::new(0.003, 0.1).unwrap(), &q);
        let k0 = pool.depth();
        let Some(out) = apply_equilibration(&pool, &p, EquilibrationMode::FeeFree, 0).map_err(|e| e.to_string())?
        else {
            continue;
        };
        let after = out.state;
        let report = ArbitrageReport::new(&after.spot_matrix().unwrap(), &p).unwrap();
        worst_balance = worst_balance.max(report.max_relative(&p));
        worst_depth = worst_depth.max((after.depth() - k0).abs() / k0);
        if apply_equilibration(&after, &p, EquilibrationMode::FeeFree, 0)
            .unwrap()
            .is_some()
        {
            repeats += 1;
        }
        debug_assert!(equilibrium_quantities(&spec, &q, &p).is_ok());
    }
    check(
        worst_balance <= 1e-9 && worst_depth <= 1e-12 && repeats == 0,
        format!(
            "max relative |Z - p_i/p_j| = {worst_balance:.2e}, max relative depth drift = {worst_depth:.2e}, \
             {repeats} second calls traded"
        ),
    )
}

fn criterion_9() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut worst: f64 = 0.0;
    for cmmm in [false, true] {
        for _ in 0..1000 {
            let spec = if cmmm {
                let n = rng.gen_range(2..=4);
                CfmmSpec::constant_mean(random_weights(&mut rng, n)).unwrap()
            } else {
                CfmmSpec::constant_product()
            };
            let n = spec.n_assets();
            let q: Vec<f64> = (0..n).map(|_| rng.gen_range(0.01..1e4)).collect();
            let i = rng.gen_range(0..n);
            let j = (i + rng.gen_range(1..n)) % n;
            let z = spec.spot_price(&q, a(i), a(j)).map_err(|e| e.to_string())?;
            let h = 1e-8 * q[i];
            let mut given = vec![0.0; n];
            given[i] = h;
            let dj = spec.solve_trade(&q, &given, a(j)).map_err(|e| e.to_string())?;
            let fd = -dj / h;
            worst = worst.max((fd - z).abs() / z);
        }
    }
    check(
        worst <= 1e-4,
        format!("max relative |finite difference - Z| = {worst:.2e} over 2000 states"),
    )
}

fn criterion_10() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let mut log = Vec::new();
    for ts in 0..200 {
        if ts % 7 == 0 {
            log.push(EventRecord::price_update(
                ts,
                prices(&[rng.gen_range(0.5..2.0), 1.0, 1.5]),
            ));
        } else {
            let k = rng.gen_range(0..3);
            let given: Vec<f64> = (0..3)
                .map(|s| if s == k { 0.0 } else { rng.gen_range(-5.0..5.0) })
                .collect();
            log.push(EventRecord::trade(TradeEvent::new(&given, a(k), ts)));
        }
    }
    fs::write(dir.path().join("events.jsonl"), format_event_log(&log)).map_err(|e| e.to_string())?;
    let cfg_text = r#"
event_log = "events.jsonl"
sampling_period = 10
equilibrate_each_price_update = true
numeraires = ["fiat", "asset1", "asset3"]
initial_prices = [1.0, 1.0, 1.5]
[pool]
kind = "constant_mean"
weights = [0.2, 0.3, 0.5]
gamma = 0.003
phi = 0.15
[[lp]]
id = "A"
quantities = [400.0, 300.0, 200.0]
"#;
    let cfg_path = dir.path().join("sim.toml");
    fs::write(&cfg_path, cfg_text).map_err(|e| e.to_string())?;
    let mut files = Vec::new();
    for run in 0..2 {
        let cfg = SimulationConfig::load(&cfg_path).map_err(|e| e.to_string())?;
        let out = run_simulation(&cfg).map_err(|e| e.to_string())?;
        let path = dir.path().join(format!("run{run}.csv"));
        export_series(&out.series, &path).map_err(|e| e.to_string())?;
        files.push(fs::read(&path).map_err(|e| e.to_string())?);
    }
    let cfg = SimulationConfig::load(&cfg_path).map_err(|e| e.to_string())?;
    let batch = run_many(&vec![cfg; 4], Execution::Parallel);
    let reference = run_simulation(&SimulationConfig::load(&cfg_path).unwrap()).unwrap();
    let batch_same = batch.iter().all(|r| r.as_ref().is_ok_and(|o| *o == reference));
    check(
        files[0] == files[1] && !files[0].is_empty() && batch_same,
        format!(
            "two runs: {} bytes each, identical: {}; parallel batch matches: {batch_same}",
            files[0].len(),
            files[0] == files[1]
        ),
    )
}

fn main() -> ExitCode {
    let criteria: [Criterion; 10] = [
        ("closed-form RV oracle", criterion_1),
        ("IL non-negativity", criterion_2),
        ("quote neutrality", criterion_3),
        ("weighted-pool profitable region", criterion_4),
        ("CL/uniform equivalence", criterion_5),
        ("tick solvency", criterion_6),
        ("fee conservation", criterion_7),
        ("equilibration", criterion_8),
        ("spot price vs finite difference", criterion_9),
        ("replay determinism", criterion_10),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        match f() {
            Ok(detail) => println!("PASS {:>2} {name}: {detail}", i + 1),
            Err(detail) => {
                failed += 1;
                println!("FAIL {:>2} {name}: {detail}", i + 1);
            }
        }
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
