use thiserror::Error;

/// Every failure the simulation library can report.
#[derive(Debug, Error)]
pub enum Error {
    #[error("trade has no non-zero given leg")]
    AllZeroTrade,
    #[error("non-finite value in {0}")]
    NonFinite(&'static str),
    #[error("solve index {index} is invalid for a {n}-asset pool")]
    BadSolveIndex { index: usize, n: usize },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("quote mixes provide and withdraw legs")]
    MixedSigns,
    #[error("quote is not proportional to pool reserves (assets {i} and {j})")]
    DisproportionateQuote { i: usize, j: usize },
    #[error("quote has no non-zero leg")]
    ZeroQuote,
    #[error("withdrawal by `{0}` exceeds its holdings")]
    Overdraw(String),
    #[error("unknown liquidity provider `{0}`")]
    UnknownLp(String),
    #[error("pool holds no value")]
    ZeroValuePool,
    #[error("asset {index} has non-positive quantity")]
    NonPositiveQuantity { index: usize },
    #[error("invalid market maker: {0}")]
    InvalidSpec(String),
    #[error("invalid fee parameters: gamma={gamma}, phi={phi}")]
    InvalidFees { gamma: f64, phi: f64 },
    #[error("invalid prices: {0}")]
    InvalidPrices(String),
    #[error("trade cannot be filled without depleting the pool")]
    InsolventTrade,
    #[error("root bracket does not contain a sign change")]
    NoBracket,
    #[error("solver did not converge after {0} iterations")]
    SolverNoConverge(usize),
    #[error("invalid tick grid: {0}")]
    InvalidGrid(String),
    #[error("range is not aligned to the tick grid")]
    OffGridRange,
    #[error("price {0} lies outside the tick grid")]
    PriceOffGrid(f64),
    #[error("unsupported for this pool: {0}")]
    UnsupportedSpec(String),
    #[error("real quantities are inconsistent with the virtual depth")]
    InconsistentDepth,
    #[error("trade path leaves the funded part of the grid")]
    LiquidityExhausted,
    #[error("unit range holds no liquidity")]
    EmptyRange,
    #[error("window ledger does not balance")]
    InconsistentLedger,
    #[error("hold value is zero")]
    ZeroHoldValue,
    #[error("closed form requires equal weights")]
    UnsupportedWeights,
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("line {line}: {source}")]
    AtLine {
        line: usize,
        #[source]
        source: Box<Error>,
    },
    #[error("line {line}: timestamp goes backwards")]
    NonMonotoneTimestamps { line: usize },
    #[error("{0}")]
    Config(String),
    #[error("event {index}: {source}")]
    AtEvent {
        index: usize,
        #[source]
        source: Box<Error>,
    },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub fn at_event(self, index: usize) -> Error {
        Error::AtEvent {
            index,
            source: Box::new(self),
        }
    }
}
