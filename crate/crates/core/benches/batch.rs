use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use cfmm_core::arbitrage::{apply_equilibration, EquilibrationMode};
use cfmm_core::events::{validate_quote, validate_trade};
use cfmm_core::exec::{self, Execution};
use cfmm_core::metrics::scan_trades;
use cfmm_core::{AssetIndex, CfmmSpec, FeeParams, FiatPriceVector, QuoteEvent, TradeEvent, UniformPoolState};

const BACKENDS: [(&str, Execution); 2] = [("sequential", Execution::Sequential), ("parallel", Execution::Parallel)];

fn funded(spec: CfmmSpec, fees: FeeParams, q: &[f64]) -> UniformPoolState {
    let pool = UniformPoolState::new(spec, fees);
    let seed = QuoteEvent {
        deltas: q.to_vec(),
        lp_id: "lp".into(),
        timestamp: 0,
    };
    pool.apply_quote(&validate_quote(&seed, pool.quantities()).unwrap())
        .unwrap()
}

fn bench_scan(c: &mut Criterion) {
    let fees = FeeParams::new(0.0025, 0.1).unwrap();
    let pool = funded(
        CfmmSpec::constant_mean(vec![0.5, 0.5]).unwrap(),
        fees,
        &[1000.0, 1000.0],
    );
    let trades: Vec<_> = (0..20_000)
        .map(|i| {
            let dx = 5.0 * (i as f64 + 0.5) / 20_000.0;
            validate_trade(&TradeEvent::new(&[dx, 0.0], AssetIndex::from_slot(1), 0), 2).unwrap()
        })
        .collect();
    let mut g = c.benchmark_group("profitability_scan");
    for (name, exec) in BACKENDS {
        g.bench_with_input(BenchmarkId::from_parameter(name), &exec, |b, &exec| {
            b.iter(|| scan_trades(&pool, &trades, exec))
        });
    }
    g.finish();
}

/// Divergence loss of a fee-free pool driven to random prices.
fn bench_il_monte_carlo(c: &mut Criterion) {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let cases: Vec<(Vec<f64>, Vec<f64>, Vec<f64>)> = (0..2_000)
        .map(|_| {
            let w: Vec<f64> = (0..4).map(|_| rng.gen_range(0.1..1.0)).collect();
            let total: f64 = w.iter().sum();
            let w = w.iter().map(|x| x / total).collect();
            let q = (0..4).map(|_| rng.gen_range(10.0..1000.0)).collect();
            let p = (0..4).map(|_| rng.gen_range(0.2..5.0)).collect();
            (w, q, p)
        })
        .collect();
    let il = |(w, q, p): &(Vec<f64>, Vec<f64>, Vec<f64>)| {
        let pool = funded(CfmmSpec::constant_mean(w.clone()).unwrap(), FeeParams::zero(), q);
        let prices = FiatPriceVector::new(p.clone()).unwrap();
        let end = apply_equilibration(&pool, &prices, EquilibrationMode::FeeFree, 0)
            .unwrap()
            .map_or_else(|| q.clone(), |o| o.state.quantities().to_vec());
        q.iter().zip(&end).zip(p).map(|((a, b), z)| (a - b) * z).sum::<f64>()
    };
    let mut g = c.benchmark_group("il_monte_carlo");
    for (name, exec) in BACKENDS {
        g.bench_with_input(BenchmarkId::from_parameter(name), &exec, |b, &exec| {
            b.iter(|| exec::map(&cases, exec, il))
        });
    }
    g.finish();
}

criterion_group!(benches, bench_scan, bench_il_monte_carlo);
criterion_main!(benches);
