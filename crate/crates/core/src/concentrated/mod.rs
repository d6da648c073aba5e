//! Concentrated liquidity: tick grids, ranged positions and tick-crossing
//! trade execution.

pub mod grid;
pub mod pool;

pub use grid::{find_active_range, virtual_depth, virtualize, PriceRange, TickGrid};
pub use pool::{
    range_quantities, range_share, solve_crossing_control, ActiveRangeState, Boundary, ClTradeOutcome,
    ConcentratedPool, LpPosition, TradeSegment,
};
