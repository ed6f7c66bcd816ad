use thiserror::Error;

/// Coarse failure classes, used by the CLI to pick an exit code.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    Parse,
    Precondition,
    Precision,
    Budget,
    Internal,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Error {
    #[error("valuation of zero undefined")]
    ZeroValuation,
    #[error("{0} is not prime")]
    NotPrime(u64),
    #[error("not invertible at this precision")]
    NotInvertible,
    #[error("matrix not invertible over Z_p")]
    SingularMatrix,
    #[error("insufficient certified precision: need {needed}, have {available}")]
    InsufficientPrecision { needed: u32, available: u32 },
    #[error("precision exhausted at depth {depth}: requires precision {required}, have {available}")]
    PrecisionExhausted {
        depth: usize,
        required: u32,
        available: u32,
    },
    #[error("determinant is not 1 at precision {0}")]
    NotSpecialLinear(u32),
    #[error("transversal too large: {size} cosets exceeds cap {cap}")]
    TransversalTooLarge { size: String, cap: usize },
    #[error("transversal incomplete: reduced matrix has no coset representative")]
    TransversalIncomplete,
    #[error("conjugator not determinant-1: valuations sum to {0}")]
    NotDeterminantOne(i64),
    #[error("degenerate conjugator: valuations must be pairwise distinct")]
    DegenerateConjugator,
    #[error("element outside H0 = Gamma(p^{0})")]
    OutsideDomain(u32),
    #[error("dimension or prime mismatch: {0}")]
    Mismatch(String),
    #[error("point not in general position: {0}")]
    GeneralPosition(String),
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("enumeration cap exceeded: {0}")]
    CapExceeded(String),
    #[error("parse error: {0}")]
    Parse(String),
}

impl Error {
    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::Parse(_) => ErrorKind::Parse,
            Error::InsufficientPrecision { .. }
            | Error::PrecisionExhausted { .. }
            | Error::NotInvertible => ErrorKind::Precision,
            Error::TransversalTooLarge { .. } | Error::CapExceeded(_) => ErrorKind::Budget,
            Error::TransversalIncomplete => ErrorKind::Internal,
            _ => ErrorKind::Precondition,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
