use thiserror::Error;

/// Errors produced by the sparq library and CLI.
#[derive(Debug, Error)]
pub enum SparqError {
    #[error("invalid trim configuration: {0}")]
    InvalidConfig(String),
    #[error("window width {width} is not supported (must be twice {bits} and within 4..=8)")]
    InvalidWidth { width: u32, bits: u32 },
    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("dtype mismatch: expected {expected}, found {found}")]
    DtypeMismatch { expected: String, found: String },
    #[error("shift amount {shift} is not in the shifter table {table:?}")]
    InvalidShift { shift: u8, table: Vec<u8> },
    #[error("mantissa {mantissa} does not fit in {bits} bits")]
    MantissaRange { mantissa: u8, bits: u32 },
    #[error("expected {expected} lanes, got {found}")]
    LaneCount { expected: usize, found: usize },
    #[error("invalid 2:4 mask: {0}")]
    InvalidMask(String),
    #[error("unsigned activation violation: {0}")]
    NegativeActivation(String),
    #[error("invalid scale: {0}")]
    InvalidScale(String),
    #[error("accumulator overflow")]
    AccumulatorOverflow,
    #[error("npy format error: {0}")]
    Npy(String),
    #[error("manifest error: {0}")]
    Manifest(String),
    #[error("usage: {0}")]
    Usage(String),
    #[error("invariant violated: {0}")]
    Invariant(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl SparqError {
    /// Process exit code: 1 for validation errors, 2 for internal invariant failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            SparqError::AccumulatorOverflow | SparqError::Invariant(_) => 2,
            _ => 1,
        }
    }
}

pub type Result<T> = std::result::Result<T, SparqError>;
