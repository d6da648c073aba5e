//! Value types shared across the pool models.
//!
//! Asset indices are 1-based everywhere in the public API so that index `i`
//! names the same asset as subscript `i` in the usual CFMM notation. Vectors
//! are stored 0-based; [`AssetIndex::slot`] does the conversion.

use std::fmt;
use std::ops::Deref;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// 1-based position of an asset within a pool.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct AssetIndex(usize);

impl AssetIndex {
    pub fn new(index: usize, n_assets: usize) -> Result<Self> {
        if index == 0 || index > n_assets {
            return Err(Error::BadSolveIndex { index, n: n_assets });
        }
        Ok(AssetIndex(index))
    }

    /// Builds an index from a 0-based vector slot.
    pub fn from_slot(slot: usize) -> Self {
        AssetIndex(slot + 1)
    }

    pub fn get(self) -> usize {
        self.0
    }

    /// 0-based vector slot.
    pub fn slot(self) -> usize {
        self.0 - 1
    }
}

impl fmt::Display for AssetIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Non-negative, finite token quantities, one per asset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuantityVector(Vec<f64>);

impl QuantityVector {
    pub fn new(q: Vec<f64>) -> Result<Self> {
        for (slot, &x) in q.iter().enumerate() {
            if !x.is_finite() {
                return Err(Error::NonFinite("quantity vector"));
            }
            if x < 0.0 {
                return Err(Error::NonPositiveQuantity { index: slot + 1 });
            }
        }
        Ok(QuantityVector(q))
    }

    pub fn zeros(n: usize) -> Self {
        QuantityVector(vec![0.0; n])
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    pub fn is_empty_pool(&self) -> bool {
        self.0.iter().all(|&x| x == 0.0)
    }
}

impl Deref for QuantityVector {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.0
    }
}

/// External prices, FIAT per token unit, strictly positive.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FiatPriceVector(Vec<f64>);

impl FiatPriceVector {
    pub fn new(p: Vec<f64>) -> Result<Self> {
        if p.is_empty() {
            return Err(Error::InvalidPrices("empty price vector".into()));
        }
        for (slot, &x) in p.iter().enumerate() {
            if !x.is_finite() || x <= 0.0 {
                return Err(Error::InvalidPrices(format!("price of asset {} is {x}", slot + 1)));
            }
        }
        Ok(FiatPriceVector(p))
    }

    /// p_i / p_j.
    pub fn ratio(&self, i: AssetIndex, j: AssetIndex) -> f64 {
        self.0[i.slot()] / self.0[j.slot()]
    }
}

impl Deref for FiatPriceVector {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.0
    }
}

/// Total fee rate `gamma` charged on inbound legs and the protocol's cut `phi`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FeeParams {
    gamma: f64,
    phi: f64,
}

impl FeeParams {
    pub fn new(gamma: f64, phi: f64) -> Result<Self> {
        let ok = gamma.is_finite() && phi.is_finite() && (0.0..1.0).contains(&gamma) && (0.0..=1.0).contains(&phi);
        if !ok {
            return Err(Error::InvalidFees { gamma, phi });
        }
        Ok(FeeParams { gamma, phi })
    }

    pub fn zero() -> Self {
        FeeParams { gamma: 0.0, phi: 0.0 }
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn phi(&self) -> f64 {
        self.phi
    }

    /// Fee-inclusive leg: inbound legs are grossed up by `1/(1-gamma)`.
    pub fn gross_up(&self, delta: f64) -> f64 {
        if delta > 0.0 {
            delta / (1.0 - self.gamma)
        } else {
            delta
        }
    }

    /// Splits the fee charged on the fee-inclusive legs `executed` into the
    /// LP portion and the treasury portion.
    pub fn accrue(&self, executed: &[f64]) -> FeeAccrual {
        let inbound = executed.iter().map(|&d| d.max(0.0));
        let (lp_fees, treasury_fees) = inbound
            .map(|x| {
                let total = self.gamma * x;
                (self.gamma * (1.0 - self.phi) * x, total * self.phi)
            })
            .unzip();
        FeeAccrual { lp_fees, treasury_fees }
    }
}

/// Fees produced by one trade (or one trade segment), per asset.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct FeeAccrual {
    pub lp_fees: Vec<f64>,
    pub treasury_fees: Vec<f64>,
}

impl FeeAccrual {
    pub fn zeros(n: usize) -> Self {
        FeeAccrual {
            lp_fees: vec![0.0; n],
            treasury_fees: vec![0.0; n],
        }
    }

    pub fn add_assign(&mut self, other: &FeeAccrual) {
        add_into(&mut self.lp_fees, &other.lp_fees);
        add_into(&mut self.treasury_fees, &other.treasury_fees);
    }
}

pub(crate) fn add_into(acc: &mut [f64], x: &[f64]) {
    for (a, b) in acc.iter_mut().zip(x) {
        *a += b;
    }
}

pub(crate) fn check_dim(expected: usize, got: usize) -> Result<()> {
    if expected != got {
        return Err(Error::DimensionMismatch { expected, got });
    }
    Ok(())
}

/// Share of pool value held in asset `i`, with prices quoted in a common
/// asset `j` (`prices_in_j[j] == 1`).
pub fn weight(q: &[f64], prices_in_j: &[f64], i: AssetIndex) -> Result<f64> {
    check_dim(q.len(), prices_in_j.len())?;
    if i.get() > q.len() {
        return Err(Error::BadSolveIndex {
            index: i.get(),
            n: q.len(),
        });
    }
    if prices_in_j.iter().any(|z| !z.is_finite() || *z <= 0.0) {
        return Err(Error::InvalidPrices("prices must be positive".into()));
    }
    let total: f64 = q.iter().zip(prices_in_j).map(|(a, z)| a * z).sum();
    if total <= 0.0 {
        return Err(Error::ZeroValuePool);
    }
    Ok(q[i.slot()] * prices_in_j[i.slot()] / total)
}
