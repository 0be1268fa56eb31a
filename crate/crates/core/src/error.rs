use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LatticeError {
    #[error("basis is rank deficient (|det| = {det:e})")]
    RankDeficient { det: f64 },

    #[error("basis must be square: {columns} columns of length {rows}")]
    NotSquare { rows: usize, columns: usize },

    #[error("dimension {n} is not supported here (max {max})")]
    UnsupportedDimension { n: usize, max: usize },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("enumeration box of {candidates} candidates exceeds the cap of {cap}")]
    EnumerationTooLarge { candidates: u128, cap: u128 },

    #[error("no sign pattern of the basis yields an obtuse superbase")]
    NotVoronoiFirstKindViaSignFlips,

    #[error("superbase is not obtuse: Selling parameter p{i}{j} = {value}")]
    NotObtuse { i: usize, j: usize, value: f64 },

    #[error("superbase vectors do not sum to zero (residual {residual:e})")]
    NotSuperbase { residual: f64 },

    #[error("parameters out of regime: {0}")]
    OutOfRegime(String),

    #[error("conorm zero pattern {pattern:?} matches no parallelohedron")]
    UnclassifiableCell { pattern: Vec<usize> },

    #[error("ratio v[{row}][{col}]/v[{row}][{row}] = {value} has no rational form with denominator <= {max_den}")]
    IrrationalRatio {
        row: usize,
        col: usize,
        value: f64,
        max_den: u64,
    },

    #[error("message set is inconsistent: {0}")]
    InconsistentMessages(String),

    #[error("rejection sampling gave up after {0} attempts")]
    AttemptCapExceeded(u64),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

impl LatticeError {
    /// Failures of the numerical machinery itself, as opposed to bad input.
    pub fn is_numeric(&self) -> bool {
        matches!(
            self,
            LatticeError::EnumerationTooLarge { .. }
                | LatticeError::IrrationalRatio { .. }
                | LatticeError::AttemptCapExceeded(_)
                | LatticeError::UnclassifiableCell { .. }
        )
    }
}

pub type Result<T> = std::result::Result<T, LatticeError>;
