use std::io;

/// Errors raised across the library.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("alpha must be 1, a finite value above 1, or infinity; got {0}")]
    InvalidAlpha(f64),
    #[error("belief {0} is not a probability in [0, 1]")]
    InvalidBelief(f64),
    #[error("label {0} is not one of -1, +1")]
    InvalidLabel(i64),
    #[error("posterior {0} must lie strictly inside (0, 1)")]
    InvalidPosterior(f64),
    #[error("posterior 1/2 has no preferred label; calibration is undefined there")]
    UndecidedPosterior,
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("dataset is empty")]
    EmptyDataset,
    #[error("row {row} has norm {norm} exceeding the support radius {radius}")]
    OutsideSupport { row: usize, norm: f64, radius: f64 },
    #[error("dataset contains a single class; both labels are required")]
    SingleClass,
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("training diverged at epoch {epoch}: empirical risk is {risk}")]
    Diverged { epoch: usize, risk: f64 },
    #[error("at eta = {eta}: {source}")]
    AtPosterior {
        eta: f64,
        #[source]
        source: Box<Error>,
    },
    #[error("log-loss is unbounded, so the Hoeffding term with range alpha/(alpha-1) is undefined")]
    UnboundedLoss,
    #[error(
        "rejection sampling failed after {attempts} attempts \
         (mean_norm {mean_norm}, noise_scale {noise_scale}, radius {radius})"
    )]
    RejectionLimit {
        attempts: usize,
        mean_norm: f64,
        noise_scale: f64,
        radius: f64,
    },
    #[error("wrong IDX magic number: expected {expected}, found {found}")]
    WrongMagic { expected: u32, found: u32 },
    #[error("truncated IDX data: expected {expected} bytes, found {found}")]
    Truncated { expected: usize, found: usize },
    #[error("IDX data has {0} trailing bytes")]
    TrailingBytes(usize),
    #[error("label byte {value} at index {index} is not a digit")]
    InvalidDigit { index: usize, value: u8 },
    #[error("{images} images but {labels} labels")]
    CountMismatch { images: usize, labels: usize },
    #[error("digit {digit} has {available} examples, {needed} required")]
    InsufficientClass {
        digit: u8,
        needed: usize,
        available: usize,
    },
    #[error(transparent)]
    Io(#[from] io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
