//! TOML simulation config.
//!
//! ```toml
//! event_log = "events.jsonl"
//! price_feed = "prices.jsonl"     # optional
//! output = "series.csv"           # optional
//! sampling_period = 60
//! equilibrate_each_price_update = true
//! equilibration_mode = "fee_free"
//! numeraires = ["fiat", "asset2"]
//! initial_prices = [1.0, 1.0]
//!
//! [pool]
//! kind = "constant_mean"
//! weights = [0.5, 0.5]
//! gamma = 0.0025
//! phi = 0.1
//!
//! [[lp]]
//! id = "A"
//! quantities = [1000.0, 1000.0]
//!
//! [[price]]
//! timestamp = 60
//! prices = [1.1, 1.0]
//! ```
//!
//! Concentrated pools add `[pool.ticks]` (either `values = [...]` or `min`,
//! `max` and `ratio`) and `initial_price`; their LPs give `range = [lo, hi]`
//! and either `quantities` or `liquidity`. Relative paths resolve against
//! the config file's directory. Unknown keys are errors.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::arbitrage::EquilibrationMode;
use crate::cfmm::CfmmSpec;
use crate::concentrated::TickGrid;
use crate::error::{Error, Result};
use crate::metrics::Numeraire;
use crate::types::{FeeParams, FiatPriceVector};

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulationConfig {
    pub event_log: PathBuf,
    #[serde(default)]
    pub price_feed: Option<PathBuf>,
    #[serde(default)]
    pub output: Option<PathBuf>,
    pub sampling_period: i64,
    #[serde(default)]
    pub equilibrate_each_price_update: bool,
    #[serde(default)]
    pub equilibration_mode: EquilibrationMode,
    #[serde(default = "default_numeraires")]
    pub numeraires: Vec<String>,
    #[serde(default)]
    pub initial_prices: Option<Vec<f64>>,
    /// Abort on the first rejected event instead of recording it.
    #[serde(default)]
    pub strict: bool,
    pub pool: PoolConfig,
    #[serde(default, rename = "lp")]
    pub lps: Vec<LpConfig>,
    #[serde(default, rename = "price")]
    pub prices: Vec<InlinePrice>,
}

fn default_numeraires() -> Vec<String> {
    vec!["fiat".into()]
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PoolKind {
    ConstantProduct,
    ConstantMean,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PoolConfig {
    pub kind: PoolKind,
    #[serde(default)]
    pub weights: Option<Vec<f64>>,
    #[serde(default)]
    pub gamma: f64,
    #[serde(default)]
    pub phi: f64,
    #[serde(default)]
    pub ticks: Option<TickConfig>,
    /// Starting price `Z_{1,2}` of a concentrated pool.
    #[serde(default)]
    pub initial_price: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TickConfig {
    #[serde(default)]
    pub values: Option<Vec<f64>>,
    #[serde(default)]
    pub min: Option<f64>,
    #[serde(default)]
    pub max: Option<f64>,
    #[serde(default)]
    pub ratio: Option<f64>,
}

impl TickConfig {
    pub fn grid(&self) -> Result<TickGrid> {
        match (&self.values, self.min, self.max, self.ratio) {
            (Some(v), None, None, None) => TickGrid::single(v.clone()),
            (None, Some(lo), Some(hi), Some(r)) => TickGrid::geometric(lo, hi, r),
            _ => Err(Error::Config(
                "ticks need either `values` or all of `min`, `max`, `ratio`".into(),
            )),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LpConfig {
    pub id: String,
    #[serde(default)]
    pub quantities: Option<Vec<f64>>,
    #[serde(default)]
    pub liquidity: Option<f64>,
    #[serde(default)]
    pub range: Option<[f64; 2]>,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InlinePrice {
    pub timestamp: i64,
    pub prices: Vec<f64>,
}

impl SimulationConfig {
    /// Reads, resolves and validates a config file.
    pub fn load(path: &Path) -> Result<Self> {
        let cfg = Self::read(path)?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Reads a config file and resolves its paths without validating, so
    /// callers can apply overrides first.
    pub fn read(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| match e.kind() {
            std::io::ErrorKind::NotFound => Error::Config(format!("config not found: {}", path.display())),
            _ => Error::Io(e),
        })?;
        let mut cfg = Self::parse(&text)?;
        let base = path.parent().unwrap_or(Path::new("."));
        cfg.resolve_paths(base);
        Ok(cfg)
    }

    /// Parses TOML without touching the filesystem.
    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn resolve_paths(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        fix(&mut self.event_log);
        if let Some(p) = self.price_feed.as_mut() {
            fix(p);
        }
        if let Some(p) = self.output.as_mut() {
            fix(p);
        }
    }

    /// Checks every field and that referenced input files exist.
    pub fn validate(&self) -> Result<()> {
        if self.sampling_period <= 0 {
            return Err(Error::Config("sampling_period must be positive".into()));
        }
        if !self.event_log.is_file() {
            return Err(Error::Config(format!(
                "event log not found: {}",
                self.event_log.display()
            )));
        }
        if let Some(p) = &self.price_feed {
            if !p.is_file() {
                return Err(Error::Config(format!("price feed not found: {}", p.display())));
            }
        }
        self.validate_model()
    }

    /// Validation that does not look at the filesystem.
    pub fn validate_model(&self) -> Result<()> {
        let spec = self.spec()?;
        let n = spec.n_assets();
        self.fees()?;
        let numeraires = self.numeraires()?;
        for num in &numeraires {
            if let Numeraire::Asset(j) = num {
                if j.get() > n {
                    return Err(Error::Config(format!("numeraire {num} exceeds the {n} pool assets")));
                }
            }
        }
        if numeraires.contains(&Numeraire::Fiat) && self.initial_prices.is_none() {
            return Err(Error::Config("the fiat numeraire needs initial_prices".into()));
        }
        if let Some(p) = &self.initial_prices {
            if p.len() != n {
                return Err(Error::Config(format!("initial_prices needs {n} entries")));
            }
            FiatPriceVector::new(p.clone())?;
        }
        for ip in &self.prices {
            if ip.prices.len() != n {
                return Err(Error::Config(format!(
                    "inline price at {} needs {n} entries",
                    ip.timestamp
                )));
            }
            FiatPriceVector::new(ip.prices.clone())?;
        }
        let concentrated = self.pool.ticks.is_some();
        if concentrated {
            self.pool.ticks.as_ref().map(TickConfig::grid).transpose()?;
            if self.pool.kind != PoolKind::ConstantProduct {
                return Err(Error::Config(
                    "concentrated liquidity needs kind = constant_product".into(),
                ));
            }
            if self.pool.initial_price.is_none() {
                return Err(Error::Config("concentrated pools need initial_price".into()));
            }
        } else if self.pool.initial_price.is_some() {
            return Err(Error::Config("initial_price applies only with [pool.ticks]".into()));
        }
        for lp in &self.lps {
            match (&lp.quantities, lp.liquidity) {
                (Some(q), None) if q.len() == n => {}
                (Some(_), None) => return Err(Error::Config(format!("lp {} needs {n} quantities", lp.id))),
                (None, Some(_)) if concentrated => {}
                _ => {
                    return Err(Error::Config(format!(
                        "lp {} needs exactly one of quantities or liquidity (liquidity only for concentrated pools)",
                        lp.id
                    )))
                }
            }
            if lp.range.is_some() != concentrated {
                return Err(Error::Config(format!(
                    "lp {}: range is required for concentrated pools and invalid otherwise",
                    lp.id
                )));
            }
        }
        Ok(())
    }

    pub fn spec(&self) -> Result<CfmmSpec> {
        match (self.pool.kind, &self.pool.weights) {
            (PoolKind::ConstantProduct, None) => Ok(CfmmSpec::constant_product()),
            (PoolKind::ConstantMean, Some(w)) => CfmmSpec::constant_mean(w.clone()),
            (PoolKind::ConstantProduct, Some(_)) => Err(Error::Config("constant_product takes no weights".into())),
            (PoolKind::ConstantMean, None) => Err(Error::Config("constant_mean needs weights".into())),
        }
    }

    pub fn fees(&self) -> Result<FeeParams> {
        FeeParams::new(self.pool.gamma, self.pool.phi)
    }

    pub fn numeraires(&self) -> Result<Vec<Numeraire>> {
        if self.numeraires.is_empty() {
            return Err(Error::Config("at least one numeraire is required".into()));
        }
        self.numeraires.iter().map(|s| s.parse()).collect()
    }

    pub fn initial_prices(&self) -> Result<Option<FiatPriceVector>> {
        self.initial_prices.clone().map(FiatPriceVector::new).transpose()
    }
}
