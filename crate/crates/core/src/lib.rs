//! Simulation of N-asset constant-function market maker pools.
//!
//! The crate covers uniform (full-range) pools on any convex invariant,
//! concentrated-liquidity pools on the constant product curve, arbitrage
//! equilibration against external prices, and LP value metrics: impermanent
//! loss, relative value and fee-adjusted relative value. [`replay`] drives
//! all of it from line-delimited event logs.

// `!(x > 0.0)` is used on purpose so that NaN fails the check too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod arbitrage;
pub mod cfmm;
pub mod concentrated;
pub mod error;
pub mod events;
pub mod exec;
pub mod metrics;
pub mod replay;
pub mod solver;
pub mod types;
pub mod uniform;

pub use cfmm::{CfmmKind, CfmmSpec};
pub use error::{Error, Result};
pub use events::{QuoteEvent, TradeEvent, ValidatedQuote, ValidatedTrade};
pub use exec::Execution;
pub use types::{AssetIndex, FeeAccrual, FeeParams, FiatPriceVector, QuantityVector};
pub use uniform::UniformPoolState;
