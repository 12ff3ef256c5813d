use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("empty tensor product")]
    EmptyTensor,

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("non-finite entry in operator")]
    NonFinite,

    #[error("requires Hermitian operator")]
    NotHermitian,

    #[error("Popovici–Sebestyén requires PSD operators (min eigenvalue {0:e})")]
    NotPsd(f64),

    #[error("lemma preconditions violated: {0}")]
    LemmaPreconditions(String),

    #[error("dimension cap: {0}")]
    DimensionCap(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("setting-count mismatch: expected {expected}, found {found}")]
    SettingMismatch { expected: usize, found: usize },

    #[error("zero ideal margin: q = {q} is not below the per-click coefficient {coefficient}")]
    ZeroIdealMargin { q: f64, coefficient: f64 },

    #[error("pattern space too large: N = {0} exceeds 3")]
    PatternSpaceTooLarge(usize),

    #[error("incomplete parent POVM (completeness defect {0:e})")]
    IncompletePovm(f64),

    #[error("robustness window empty: denominator {0:e} is not positive")]
    RobustnessWindowEmpty(f64),

    #[error("level parse error at position {position}: {message}")]
    LevelParse { position: usize, message: String },

    #[error("level too high for scenario: basis size {0} exceeds 20000")]
    LevelTooHigh(usize),

    #[error("malformed SDPA data at line {line}: {message}")]
    SdpaParse { line: usize, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
