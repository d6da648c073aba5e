use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};

use cfmm_core::arbitrage::{apply_equilibration, ArbitrageReport, EquilibrationMode};
use cfmm_core::events::validate_quote;
use cfmm_core::metrics::{balancer_profitable_bound, rational_approximation};
use cfmm_core::replay::{
    export_series, load_event_log, run_simulation, EventPayload, SimulationConfig, SimulationOutput,
};
use cfmm_core::{CfmmSpec, FeeParams, FiatPriceVector, QuoteEvent, UniformPoolState};

#[derive(Parser)]
#[command(name = "cfmm", version, about = "Constant-function market maker simulation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Replay an event log and write the metric series.
    Simulate(SimulateArgs),
    /// Find the trade that restores the price balance condition.
    Equilibrate(EquilibrateArgs),
    /// Largest profitable single trade into a two-asset weighted pool.
    ProfitRegion(ProfitArgs),
    /// Parse and check an event log.
    Validate(ValidateArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Plain,
    Csv,
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    FeeFree,
    FeeAware,
}

impl From<Mode> for EquilibrationMode {
    fn from(m: Mode) -> Self {
        match m {
            Mode::FeeFree => EquilibrationMode::FeeFree,
            Mode::FeeAware => EquilibrationMode::FeeAware,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Kind {
    ConstantProduct,
    ConstantMean,
}

#[derive(clap::Args)]
struct SimulateArgs {
    config: PathBuf,
    #[arg(long)]
    sampling_period: Option<i64>,
    #[arg(long)]
    output: Option<PathBuf>,
    #[arg(long)]
    gamma: Option<f64>,
    #[arg(long)]
    phi: Option<f64>,
    /// Inject the arbitrage trade after each price update.
    #[arg(long)]
    equilibrate_each_price_update: Option<bool>,
    #[arg(long, value_enum)]
    equilibration_mode: Option<Mode>,
    /// Replaces the configured numeraires; repeatable.
    #[arg(long = "numeraire")]
    numeraires: Vec<String>,
    #[arg(long)]
    strict: Option<bool>,
    #[arg(long, value_enum, default_value = "plain")]
    format: Format,
}

#[derive(clap::Args)]
struct EquilibrateArgs {
    #[arg(long, value_enum, default_value = "constant-product")]
    kind: Kind,
    /// Comma-separated weights for constant_mean pools.
    #[arg(long, value_delimiter = ',')]
    weights: Vec<f64>,
    #[arg(long, value_delimiter = ',', required = true)]
    quantities: Vec<f64>,
    #[arg(long, value_delimiter = ',', required = true)]
    prices: Vec<f64>,
    #[arg(long, default_value_t = 0.0)]
    gamma: f64,
    #[arg(long, default_value_t = 0.0)]
    phi: f64,
    #[arg(long, value_enum, default_value = "fee-free")]
    mode: Mode,
    #[arg(long, value_enum, default_value = "plain")]
    format: Format,
}

#[derive(clap::Args)]
struct ProfitArgs {
    #[arg(long, value_delimiter = ',', default_value = "0.5,0.5")]
    weights: Vec<f64>,
    #[arg(long)]
    gamma: f64,
    #[arg(long, default_value_t = 0.0)]
    phi: f64,
    /// Pool holdings of the deposited asset.
    #[arg(long = "qx")]
    q_x: f64,
    #[arg(long, value_enum, default_value = "plain")]
    format: Format,
}

#[derive(clap::Args)]
struct ValidateArgs {
    log: PathBuf,
    #[arg(long, default_value_t = 2)]
    assets: usize,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Simulate(a) => simulate(a),
        Command::Equilibrate(a) => equilibrate(a),
        Command::ProfitRegion(a) => profit_region(a),
        Command::Validate(a) => validate(a),
    };
    match result {
        Ok(text) => {
            print!("{text}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

/// Shortest decimal that survives rounding to 12 significant digits.
fn num(x: f64) -> String {
    let rounded: f64 = format!("{x:.11e}").parse().unwrap_or(x);
    if rounded == 0.0 {
        "0".into()
    } else {
        rounded.to_string()
    }
}

fn vec_str(v: &[f64]) -> String {
    let parts: Vec<String> = v.iter().map(|x| num(*x)).collect();
    format!("[{}]", parts.join(", "))
}

fn default_output(config: &Path) -> PathBuf {
    let stem = config.file_stem().and_then(|s| s.to_str()).unwrap_or("simulation");
    config.with_file_name(format!("{stem}.csv"))
}

fn simulate(a: SimulateArgs) -> Result<String> {
    let mut cfg = SimulationConfig::read(&a.config)?;
    if let Some(p) = a.sampling_period {
        cfg.sampling_period = p;
    }
    if let Some(o) = a.output {
        cfg.output = Some(o);
    }
    if let Some(g) = a.gamma {
        cfg.pool.gamma = g;
    }
    if let Some(p) = a.phi {
        cfg.pool.phi = p;
    }
    if let Some(e) = a.equilibrate_each_price_update {
        cfg.equilibrate_each_price_update = e;
    }
    if let Some(m) = a.equilibration_mode {
        cfg.equilibration_mode = m.into();
    }
    if !a.numeraires.is_empty() {
        cfg.numeraires = a.numeraires;
    }
    if let Some(s) = a.strict {
        cfg.strict = s;
    }
    cfg.validate()?;
    let out = run_simulation(&cfg)?;
    let path = cfg.output.clone().unwrap_or_else(|| default_output(&a.config));
    export_series(&out.series, &path).with_context(|| format!("writing {}", path.display()))?;
    Ok(match a.format {
        Format::Plain => simulate_plain(&out, &path),
        Format::Csv => simulate_csv(&out, &path),
    })
}

fn simulate_plain(out: &SimulationOutput, path: &Path) -> String {
    let r = &out.report;
    let mut s = String::new();
    let _ = writeln!(
        s,
        "events: {} total, {} applied, {} rejected, {} arbitrage trades injected",
        r.total_events,
        r.applied,
        r.rejected.len(),
        r.injected_trades
    );
    for rej in &r.rejected {
        let _ = writeln!(
            s,
            "  rejected #{} (line {}, t={}): {}",
            rej.index, rej.line, rej.timestamp, rej.reason
        );
    }
    match r.final_metrics.first() {
        Some(m) => {
            let _ = writeln!(s, "final metrics at t={}:", m.timestamp);
        }
        None => {
            let _ = writeln!(s, "final metrics: pool is empty");
        }
    }
    for m in &r.final_metrics {
        let _ = writeln!(
            s,
            "  {:<8} il={} rv={} farv={}",
            m.numeraire.to_string(),
            num(m.il),
            num(m.rv),
            num(m.farv)
        );
    }
    let _ = writeln!(s, "lp fees: {}", vec_str(&r.lp_fees));
    let _ = writeln!(s, "treasury: {}", vec_str(&r.treasury));
    for lp in &r.lps {
        let farv: Vec<String> = lp
            .farv
            .iter()
            .map(|(n, v)| format!("{n}={}", v.map_or("n/a".into(), num)))
            .collect();
        let _ = writeln!(s, "lp {}: fees {} farv {}", lp.lp_id, vec_str(&lp.fees), farv.join(" "));
    }
    let _ = writeln!(s, "series: {} ({} rows)", path.display(), out.series.len());
    s
}

fn simulate_csv(out: &SimulationOutput, path: &Path) -> String {
    let r = &out.report;
    let mut s = String::from("field,value\n");
    let mut row = |k: String, v: String| {
        let _ = writeln!(s, "{k},{v}");
    };
    row("events_total".into(), r.total_events.to_string());
    row("events_applied".into(), r.applied.to_string());
    row("events_rejected".into(), r.rejected.len().to_string());
    row("injected_trades".into(), r.injected_trades.to_string());
    for m in &r.final_metrics {
        row(format!("il_{}", m.numeraire), format!("{:.16e}", m.il));
        row(format!("rv_{}", m.numeraire), format!("{:.16e}", m.rv));
        row(format!("farv_{}", m.numeraire), format!("{:.16e}", m.farv));
    }
    for (i, f) in r.lp_fees.iter().enumerate() {
        row(format!("lp_fees_{}", i + 1), format!("{f:.16e}"));
    }
    for (i, f) in r.treasury.iter().enumerate() {
        row(format!("treasury_{}", i + 1), format!("{f:.16e}"));
    }
    row("series_path".into(), path.display().to_string());
    row("series_rows".into(), out.series.len().to_string());
    s
}

fn equilibrate(a: EquilibrateArgs) -> Result<String> {
    let spec = match a.kind {
        Kind::ConstantProduct => {
            if !a.weights.is_empty() {
                bail!("constant-product takes no weights");
            }
            CfmmSpec::constant_product()
        }
        Kind::ConstantMean => CfmmSpec::constant_mean(a.weights.clone())?,
    };
    let fees = FeeParams::new(a.gamma, a.phi)?;
    let prices = FiatPriceVector::new(a.prices.clone())?;
    let empty = UniformPoolState::new(spec, fees);
    let seed = QuoteEvent {
        deltas: a.quantities.clone(),
        lp_id: "lp".into(),
        timestamp: 0,
    };
    if a.quantities.iter().any(|q| q.is_nan() || *q <= 0.0) {
        bail!("quantities must be positive");
    }
    let pool = empty.apply_quote(&validate_quote(&seed, empty.quantities())?)?;
    let before = ArbitrageReport::new(&pool.spot_matrix()?, &prices)?;
    let outcome = apply_equilibration(&pool, &prices, a.mode.into(), 0)?;

    let mut s = String::new();
    match a.format {
        Format::Plain => {
            let _ = writeln!(s, "delta (Z_ij - p_i/p_j):");
            for row in &before.specific {
                let _ = writeln!(s, "  {}", vec_str(row));
            }
            match &outcome {
                None => {
                    let _ = writeln!(s, "no arbitrage");
                    let _ = writeln!(s, "trade: []");
                }
                Some(o) => {
                    let _ = writeln!(s, "trade: {}", vec_str(&o.executed));
                    let _ = writeln!(s, "quantities: {}", vec_str(o.state.quantities()));
                    let _ = writeln!(s, "spot prices:");
                    for row in o.state.spot_matrix()? {
                        let _ = writeln!(s, "  {}", vec_str(&row));
                    }
                }
            }
        }
        Format::Csv => {
            let n = a.quantities.len();
            s.push_str("field,value\n");
            for i in 0..n {
                for j in 0..n {
                    let _ = writeln!(s, "delta_{}_{},{:.16e}", i + 1, j + 1, before.specific[i][j]);
                }
            }
            let _ = writeln!(s, "arbitrage,{}", outcome.is_some());
            if let Some(o) = &outcome {
                for (i, d) in o.executed.iter().enumerate() {
                    let _ = writeln!(s, "trade_{},{d:.16e}", i + 1);
                }
                for (i, q) in o.state.quantities().iter().enumerate() {
                    let _ = writeln!(s, "quantity_{},{q:.16e}", i + 1);
                }
            }
        }
    }
    Ok(s)
}

fn profit_region(a: ProfitArgs) -> Result<String> {
    let fees = FeeParams::new(a.gamma, a.phi)?;
    let b = balancer_profitable_bound(a.q_x, &a.weights, fees)?;
    let mut s = String::new();
    if b.bound == 0.0 {
        match a.format {
            Format::Plain => s.push_str("no profitable trades\n"),
            Format::Csv => s.push_str("field,value\nbound,0\n"),
        }
        return Ok(s);
    }
    let symbolic = b
        .closed_form_fraction
        .and_then(|f| rational_approximation(f, 1_000_000, 1e-12));
    let bound = match symbolic {
        Some((n, d)) => n as f64 * a.q_x / d as f64,
        None => b.bound,
    };
    match a.format {
        Format::Plain => {
            let _ = writeln!(s, "Δq_x ≤ {}", num(bound));
            if let Some((n, d)) = symbolic {
                let _ = writeln!(s, "({n}/{d})·q_x");
            }
            let _ = writeln!(s, "bisection bound: {}", num(b.bound));
        }
        Format::Csv => {
            let _ = writeln!(s, "field,value\nbound,{bound:.16e}\nbisection_bound,{:.16e}", b.bound);
            if let Some((n, d)) = symbolic {
                let _ = writeln!(s, "fraction,{n}/{d}");
            }
        }
    }
    Ok(s)
}

fn validate(a: ValidateArgs) -> Result<String> {
    let recs = load_event_log(&a.log, a.assets).with_context(|| format!("in {}", a.log.display()))?;
    let (mut trades, mut quotes, mut prices) = (0, 0, 0);
    for r in &recs {
        match r.payload {
            EventPayload::Trade(_) => trades += 1,
            EventPayload::Quote { .. } => quotes += 1,
            EventPayload::PriceUpdate(_) => prices += 1,
        }
    }
    Ok(format!(
        "ok: {} records ({trades} trades, {quotes} quotes, {prices} price updates)\n",
        recs.len()
    ))
}
