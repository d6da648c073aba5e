//! Tick grids, price ranges and the virtual-reserve transform.

use serde::{Deserialize, Serialize};

use crate::cfmm::{CfmmKind, CfmmSpec};
use crate::error::{Error, Result};

const TICK_MATCH_TOL: f64 = 1e-9;

/// Price ticks for each adjacent pair `(n, n+1)`: `Z_{n,n+1}` values, in
/// units of asset `n+1` per asset `n`, strictly increasing per dimension.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TickGrid {
    ticks: Vec<Vec<f64>>,
}

impl TickGrid {
    pub fn new(ticks: Vec<Vec<f64>>) -> Result<Self> {
        if ticks.is_empty() {
            return Err(Error::InvalidGrid("no dimensions".into()));
        }
        for (d, dim) in ticks.iter().enumerate() {
            if dim.len() < 2 {
                return Err(Error::InvalidGrid(format!(
                    "dimension {} has fewer than 2 ticks",
                    d + 1
                )));
            }
            if dim.iter().any(|t| !t.is_finite() || *t <= 0.0) {
                return Err(Error::InvalidGrid(format!(
                    "dimension {} has a non-positive tick",
                    d + 1
                )));
            }
            if dim.windows(2).any(|w| w[0] >= w[1]) {
                return Err(Error::InvalidGrid(format!(
                    "dimension {} is not strictly increasing",
                    d + 1
                )));
            }
        }
        Ok(TickGrid { ticks })
    }

    /// One-dimensional grid for a two-asset pool.
    pub fn single(ticks: Vec<f64>) -> Result<Self> {
        TickGrid::new(vec![ticks])
    }

    /// `min, min*ratio, min*ratio^2, ...` up to and including `max` (within
    /// rounding).
    pub fn geometric(min: f64, max: f64, ratio: f64) -> Result<Self> {
        if !(min > 0.0 && max > min && ratio > 1.0) || !max.is_finite() {
            return Err(Error::InvalidGrid(format!(
                "geometric grid needs 0 < min < max and ratio > 1 (got {min}, {max}, {ratio})"
            )));
        }
        let steps = ((max / min).ln() / ratio.ln() + 1e-9).floor() as i32;
        if steps > 1_000_000 {
            return Err(Error::InvalidGrid("too many ticks".into()));
        }
        let ticks = (0..=steps).map(|s| min * ratio.powi(s)).collect();
        TickGrid::single(ticks)
    }

    pub fn dims(&self) -> usize {
        self.ticks.len()
    }

    pub fn ticks(&self, dim: usize) -> &[f64] {
        &self.ticks[dim]
    }

    pub fn n_unit_ranges(&self, dim: usize) -> usize {
        self.ticks[dim].len() - 1
    }

    /// Bounds `(Z^l, Z^{l+1}]` of unit range `l` in a 1-D grid.
    pub fn unit_bounds(&self, l: usize) -> (f64, f64) {
        (self.ticks[0][l], self.ticks[0][l + 1])
    }

    pub fn unit_range(&self, l: usize) -> PriceRange {
        let (lo, hi) = self.unit_bounds(l);
        PriceRange { bounds: vec![(lo, hi)] }
    }

    /// Index of the tick equal to `value` up to relative 1e-9, so that
    /// ticks of geometric grids can be written out in decimal.
    fn tick_index(&self, dim: usize, value: f64) -> Option<usize> {
        let ticks = &self.ticks[dim];
        let i = ticks.partition_point(|&t| t < value);
        [i.checked_sub(1), Some(i)]
            .into_iter()
            .flatten()
            .filter(|&j| j < ticks.len())
            .find(|&j| (ticks[j] - value).abs() <= TICK_MATCH_TOL * ticks[j])
    }

    /// Tick indices `(lower, upper)` of a 1-D range, if it lies on the grid.
    pub fn range_indices(&self, range: &PriceRange) -> Result<(usize, usize)> {
        if range.bounds.len() != 1 || self.dims() != 1 {
            return Err(Error::UnsupportedSpec(
                "only one-dimensional ranges have tick indices".into(),
            ));
        }
        let (lo, hi) = range.bounds[0];
        match (self.tick_index(0, lo), self.tick_index(0, hi)) {
            (Some(a), Some(b)) if a < b => Ok((a, b)),
            _ => Err(Error::OffGridRange),
        }
    }

    pub fn is_on_grid(&self, range: &PriceRange) -> bool {
        range.bounds.len() == self.dims()
            && range.bounds.iter().enumerate().all(|(d, &(lo, hi))| {
                matches!((self.tick_index(d, lo), self.tick_index(d, hi)), (Some(a), Some(b)) if a < b)
            })
    }

    pub fn is_unit_range(&self, range: &PriceRange) -> bool {
        range.bounds.len() == self.dims()
            && range.bounds.iter().enumerate().all(|(d, &(lo, hi))| {
                matches!((self.tick_index(d, lo), self.tick_index(d, hi)), (Some(a), Some(b)) if b == a + 1)
            })
    }
}

/// `(lower, upper]` price bounds, one row per adjacent asset pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PriceRange {
    pub bounds: Vec<(f64, f64)>,
}

impl PriceRange {
    pub fn new(bounds: Vec<(f64, f64)>) -> Result<Self> {
        if bounds.is_empty() || bounds.iter().any(|&(lo, hi)| !(lo < hi)) {
            return Err(Error::OffGridRange);
        }
        Ok(PriceRange { bounds })
    }

    pub fn single(lower: f64, upper: f64) -> Result<Self> {
        PriceRange::new(vec![(lower, upper)])
    }

    /// `self ⊆ other`.
    pub fn is_within(&self, other: &PriceRange) -> bool {
        self.bounds.len() == other.bounds.len()
            && self
                .bounds
                .iter()
                .zip(&other.bounds)
                .all(|(&(a, b), &(c, d))| c <= a && b <= d)
    }

    /// Half-open containment `lower < z <= upper` on every row.
    pub fn contains_price(&self, spot: &[f64]) -> bool {
        spot.len() == self.bounds.len() && self.bounds.iter().zip(spot).all(|(&(lo, hi), &z)| lo < z && z <= hi)
    }
}

/// The unit range whose `(Z^l, Z^{l+1}]` bounds contain every pair price.
pub fn find_active_range(grid: &TickGrid, spot: &[f64]) -> Result<PriceRange> {
    if spot.len() != grid.dims() {
        return Err(Error::DimensionMismatch {
            expected: grid.dims(),
            got: spot.len(),
        });
    }
    let mut bounds = Vec::with_capacity(spot.len());
    for (d, &z) in spot.iter().enumerate() {
        bounds.push(unit_bounds_for(grid.ticks(d), z)?);
    }
    Ok(PriceRange { bounds })
}

fn unit_bounds_for(ticks: &[f64], z: f64) -> Result<(f64, f64)> {
    let l = active_index(ticks, z)?;
    Ok((ticks[l], ticks[l + 1]))
}

/// Index `l` with `ticks[l] < z <= ticks[l+1]`.
pub(crate) fn active_index(ticks: &[f64], z: f64) -> Result<usize> {
    if !(z > ticks[0] && z <= ticks[ticks.len() - 1]) {
        return Err(Error::PriceOffGrid(z));
    }
    // First tick >= z is the upper bound.
    let upper = ticks.partition_point(|&t| t < z);
    Ok(upper - 1)
}

/// Virtual reserves of a constant-product range `(Z^l, Z^u]` holding real
/// quantities `real_q` at virtual depth `k_v`:
/// `q1^v = q1 + sqrt(K_v / Z^u)`, `q2^v = q2 + sqrt(K_v Z^l)`.
///
/// With this bound assignment real asset 1 runs out exactly at `Z^u` and
/// real asset 2 exactly at `Z^l`.
pub fn virtualize(spec: &CfmmSpec, real_q: &[f64], range: (f64, f64), k_v: f64) -> Result<Vec<f64>> {
    if spec.kind() != CfmmKind::ConstantProduct || real_q.len() != 2 {
        return Err(Error::UnsupportedSpec(
            "virtual reserves are defined for two-asset constant product pools".into(),
        ));
    }
    let (lo, hi) = range;
    if !(lo > 0.0 && lo < hi) {
        return Err(Error::OffGridRange);
    }
    if !(k_v > 0.0) || real_q.iter().any(|x| !(*x >= 0.0)) {
        return Err(Error::InconsistentDepth);
    }
    let v = vec![real_q[0] + (k_v / hi).sqrt(), real_q[1] + (k_v * lo).sqrt()];
    if ((v[0] * v[1] - k_v) / k_v).abs() > 1e-9 {
        return Err(Error::InconsistentDepth);
    }
    Ok(v)
}

/// Virtual depth `K_v` implied by real quantities in a constant-product
/// range; inverse of [`virtualize`].
pub fn virtual_depth(real_q: &[f64], range: (f64, f64)) -> Result<f64> {
    let (lo, hi) = range;
    let (x, y) = (real_q[0], real_q[1]);
    if x < 0.0 || y < 0.0 || !(lo > 0.0 && lo < hi) {
        return Err(Error::InconsistentDepth);
    }
    // (x + L/sqrt(hi)) (y + L sqrt(lo)) = L^2, solved for L = sqrt(K_v).
    let a = 1.0 - (lo / hi).sqrt();
    let b = -(x * lo.sqrt() + y / hi.sqrt());
    let c = -x * y;
    let disc = b * b - 4.0 * a * c;
    let l = (-b + disc.sqrt()) / (2.0 * a);
    Ok(l * l)
}
