//! Log-driven replay: event log parsing, TOML configs, the simulation loop
//! and CSV export.

pub mod config;
pub mod export;
pub mod log;
pub mod sim;

pub use config::{LpConfig, PoolConfig, PoolKind, SimulationConfig, TickConfig};
pub use export::{export_series, format_series, CSV_HEADER};
pub use log::{format_event_log, load_event_log, parse_event_log, EventPayload, EventRecord};
pub use sim::{
    load_records, merge_records, run_many, run_simulation, simulate, LpSummary, Rejection, SimPool, SimulationOutput,
    SimulationReport, SimulationSetup,
};
