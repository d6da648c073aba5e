//! Constant-function market makers: `F(q_1, ..., q_N) = K`.
//!
//! Constant product and constant mean use closed forms throughout. Custom
//! invariants go through the bracketed root solver; they must be increasing
//! in every quantity with convex level sets, which is spot-checked on
//! construction.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::solver::bracketed_root_solve;
use crate::types::{check_dim, AssetIndex};

const WEIGHT_SUM_TOL: f64 = 1e-12;
const CONVEXITY_SAMPLES: usize = 100;

type InvariantFn = dyn Fn(&[f64]) -> f64 + Send + Sync;

/// A user-supplied invariant over a fixed number of assets.
#[derive(Clone)]
pub struct CustomInvariant {
    name: String,
    n_assets: usize,
    eval: Arc<InvariantFn>,
}

impl fmt::Debug for CustomInvariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CustomInvariant")
            .field("name", &self.name)
            .field("n_assets", &self.n_assets)
            .finish()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CfmmKind {
    ConstantProduct,
    ConstantMean,
    Custom,
}

/// An invariant function together with its parameters.
#[derive(Debug, Clone)]
pub enum CfmmSpec {
    /// `q_1 q_2 = K`, two assets only.
    ConstantProduct,
    /// `prod q_i^{w_i} = K` with weights summing to one.
    ConstantMean {
        weights: Vec<f64>,
    },
    Custom(CustomInvariant),
}

impl CfmmSpec {
    pub fn constant_product() -> Self {
        CfmmSpec::ConstantProduct
    }

    pub fn constant_mean(weights: Vec<f64>) -> Result<Self> {
        if weights.len() < 2 {
            return Err(Error::InvalidSpec("constant mean needs at least two assets".into()));
        }
        if weights.iter().any(|w| !(w.is_finite() && *w > 0.0 && *w < 1.0)) {
            return Err(Error::InvalidSpec("weights must lie in (0, 1)".into()));
        }
        let sum: f64 = weights.iter().sum();
        if (sum - 1.0).abs() > WEIGHT_SUM_TOL {
            return Err(Error::InvalidSpec(format!("weights sum to {sum}, not 1")));
        }
        Ok(CfmmSpec::ConstantMean { weights })
    }

    /// Wraps a custom invariant after checking monotonicity and level-set
    /// convexity on a deterministic sample of the positive orthant.
    pub fn custom<F>(name: impl Into<String>, n_assets: usize, eval: F) -> Result<Self>
    where
        F: Fn(&[f64]) -> f64 + Send + Sync + 'static,
    {
        if n_assets < 2 {
            return Err(Error::InvalidSpec("custom invariant needs at least two assets".into()));
        }
        let custom = CustomInvariant {
            name: name.into(),
            n_assets,
            eval: Arc::new(eval),
        };
        check_shape(&custom)?;
        Ok(CfmmSpec::Custom(custom))
    }

    pub fn kind(&self) -> CfmmKind {
        match self {
            CfmmSpec::ConstantProduct => CfmmKind::ConstantProduct,
            CfmmSpec::ConstantMean { .. } => CfmmKind::ConstantMean,
            CfmmSpec::Custom(_) => CfmmKind::Custom,
        }
    }

    pub fn n_assets(&self) -> usize {
        match self {
            CfmmSpec::ConstantProduct => 2,
            CfmmSpec::ConstantMean { weights } => weights.len(),
            CfmmSpec::Custom(c) => c.n_assets,
        }
    }

    pub fn weights(&self) -> Option<&[f64]> {
        match self {
            CfmmSpec::ConstantMean { weights } => Some(weights),
            _ => None,
        }
    }

    fn check_positive(&self, q: &[f64]) -> Result<()> {
        check_dim(self.n_assets(), q.len())?;
        for (slot, &x) in q.iter().enumerate() {
            if !x.is_finite() {
                return Err(Error::NonFinite("pool quantity"));
            }
            if x <= 0.0 {
                return Err(Error::NonPositiveQuantity { index: slot + 1 });
            }
        }
        Ok(())
    }

    fn eval_unchecked(&self, q: &[f64]) -> f64 {
        match self {
            CfmmSpec::ConstantProduct => q[0] * q[1],
            CfmmSpec::ConstantMean { weights } => weights.iter().zip(q).map(|(w, x)| w * x.ln()).sum::<f64>().exp(),
            CfmmSpec::Custom(c) => (c.eval)(q),
        }
    }

    /// Depth `K = F(q)`.
    pub fn invariant(&self, q: &[f64]) -> Result<f64> {
        self.check_positive(q)?;
        let k = self.eval_unchecked(q);
        if !k.is_finite() || k <= 0.0 {
            return Err(Error::InvalidSpec(format!("invariant evaluated to {k}")));
        }
        Ok(k)
    }

    /// Instantaneous price `Z_{i,j} = -dq_j/dq_i` along the level set.
    pub fn spot_price(&self, q: &[f64], i: AssetIndex, j: AssetIndex) -> Result<f64> {
        self.check_positive(q)?;
        let n = self.n_assets();
        if i.get() > n || j.get() > n {
            return Err(Error::BadSolveIndex {
                index: i.get().max(j.get()),
                n,
            });
        }
        if i == j {
            return Ok(1.0);
        }
        let (a, b) = (i.slot(), j.slot());
        match self {
            CfmmSpec::ConstantProduct => Ok(q[b] / q[a]),
            CfmmSpec::ConstantMean { weights } => Ok(q[b] * weights[a] / (q[a] * weights[b])),
            CfmmSpec::Custom(_) => {
                let h = 1e-7 * q[a];
                let mut given = vec![0.0; n];
                given[a] = h;
                let up = self.solve_trade(q, &given, j)?;
                given[a] = -h;
                let down = self.solve_trade(q, &given, j)?;
                Ok(-(up - down) / (2.0 * h))
            }
        }
    }

    /// Full `N x N` matrix of instantaneous prices, `m[i][j] = Z_{i+1,j+1}`.
    pub fn spot_matrix(&self, q: &[f64]) -> Result<Vec<Vec<f64>>> {
        let n = self.n_assets();
        let mut m = vec![vec![1.0; n]; n];
        for (a, row) in m.iter_mut().enumerate() {
            for (b, z) in row.iter_mut().enumerate() {
                if a != b {
                    *z = self.spot_price(q, AssetIndex::from_slot(a), AssetIndex::from_slot(b))?;
                }
            }
        }
        Ok(m)
    }

    /// Solves the unknown leg `dq_k` that keeps the pool on its level set.
    /// `given[k]` is ignored.
    pub fn solve_trade(&self, q: &[f64], given: &[f64], k: AssetIndex) -> Result<f64> {
        self.check_positive(q)?;
        check_dim(q.len(), given.len())?;
        let ks = k.slot();
        if ks >= q.len() {
            return Err(Error::BadSolveIndex {
                index: k.get(),
                n: q.len(),
            });
        }
        for (slot, (&x, &d)) in q.iter().zip(given).enumerate() {
            if slot != ks && !(x + d > 0.0) {
                return Err(Error::InsolventTrade);
            }
        }
        let delta = match self {
            CfmmSpec::ConstantProduct => {
                let o = 1 - ks;
                -q[ks] * given[o] / (q[o] + given[o])
            }
            CfmmSpec::ConstantMean { weights } => {
                let exponent: f64 = (0..q.len())
                    .filter(|&s| s != ks)
                    .map(|s| weights[s] / weights[ks] * (given[s] / q[s]).ln_1p())
                    .sum();
                q[ks] * (-exponent).exp_m1()
            }
            CfmmSpec::Custom(_) => self.solve_numeric(q, given, ks)?,
        };
        if !delta.is_finite() || !(q[ks] + delta > 0.0) {
            return Err(Error::InsolventTrade);
        }
        Ok(delta)
    }

    /// Root-solver route for `dq_k`; works for every spec and backs the
    /// custom case.
    pub fn solve_numeric(&self, q: &[f64], given: &[f64], ks: usize) -> Result<f64> {
        let target = self.eval_unchecked(q);
        let moved: Vec<f64> = q.iter().zip(given).map(|(a, d)| a + d).collect();
        let qk = q[ks];
        let residual = |x: f64| {
            let mut p = moved.clone();
            p[ks] = qk + x;
            self.eval_unchecked(&p) / target - 1.0
        };
        let lo = -qk * (1.0 - 1e-12);
        if residual(lo) >= 0.0 {
            return Err(Error::InsolventTrade);
        }
        let mut hi = qk.max(1.0);
        let mut grown = 0;
        while residual(hi) <= 0.0 {
            hi *= 2.0;
            grown += 1;
            if grown > 1000 || !hi.is_finite() {
                return Err(Error::InsolventTrade);
            }
        }
        let rel = 1e-14 * qk / hi.max(qk);
        bracketed_root_solve(residual, lo, hi, rel)
    }

    /// Depth after adding quote deltas to the reserves.
    pub fn depth_after_quote(&self, q: &[f64], deltas: &[f64]) -> Result<f64> {
        check_dim(q.len(), deltas.len())?;
        let moved: Vec<f64> = q.iter().zip(deltas).map(|(a, d)| a + d).collect();
        self.invariant(&moved)
    }
}

fn halton(mut index: usize, base: usize) -> f64 {
    let mut f = 1.0;
    let mut r = 0.0;
    while index > 0 {
        f /= base as f64;
        r += f * (index % base) as f64;
        index /= base;
    }
    r
}

const PRIMES: [usize; 12] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37];

fn sample_point(index: usize, n: usize) -> Vec<f64> {
    (0..n)
        .map(|d| {
            let u = halton(index + 1, PRIMES[d % PRIMES.len()] + 2 * (d / PRIMES.len()));
            (10f64.ln() * (2.0 * u - 1.0)).exp()
        })
        .collect()
}

fn check_shape(c: &CustomInvariant) -> Result<()> {
    let n = c.n_assets;
    let points: Vec<Vec<f64>> = (0..CONVEXITY_SAMPLES).map(|s| sample_point(s, n)).collect();
    let values: Vec<f64> = points.iter().map(|p| (c.eval)(p)).collect();
    for (p, &v) in points.iter().zip(&values) {
        if !v.is_finite() || v <= 0.0 {
            return Err(Error::InvalidSpec(format!("{} is not positive at {p:?}", c.name)));
        }
        for d in 0..n {
            let mut up = p.clone();
            up[d] *= 1.0 + 1e-6;
            if (c.eval)(&up) <= v {
                return Err(Error::InvalidSpec(format!(
                    "{} is not increasing in asset {}",
                    c.name,
                    d + 1
                )));
            }
        }
    }
    // Quasi-concavity (convex upper level sets) on consecutive sample pairs.
    for s in 0..CONVEXITY_SAMPLES {
        let t = (s + 1) % CONVEXITY_SAMPLES;
        let mid: Vec<f64> = points[s].iter().zip(&points[t]).map(|(a, b)| 0.5 * (a + b)).collect();
        let floor = values[s].min(values[t]);
        if (c.eval)(&mid) < floor * (1.0 - 1e-12) {
            return Err(Error::InvalidSpec(format!("{} has non-convex level sets", c.name)));
        }
    }
    Ok(())
}
