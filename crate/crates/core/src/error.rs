use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Coarse error classes, used by front ends to pick exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    /// The input does not describe a valid model, sample, or option set.
    Config,
    /// The input is valid but violates a numerical precondition.
    Numeric,
    Io,
    Internal,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("interaction matrix is not symmetric: J[{row}][{col}]={a} but J[{col}][{row}]={b}")]
    NonSymmetricJ { row: usize, col: usize, a: f64, b: f64 },
    #[error("invalid relative sizes: {0}")]
    BadAlpha(String),
    #[error("single-site measure must have at least two support points")]
    DegenerateMeasure,
    #[error("diagonal coupling J[{index}][{index}]={value} must be positive")]
    NonPositiveDiagonal { index: usize, value: f64 },
    #[error("invalid single-site measure: {0}")]
    InvalidMeasure(String),
    #[error("invalid model: {0}")]
    InvalidModel(String),
    #[error("invalid configuration: {0}")]
    InvalidConfiguration(String),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("argument outside the domain: {0}")]
    DomainError(String),
    #[error("operation requires the symmetric ±1 single-site measure")]
    UnsupportedMeasure,
    #[error("species sizes {sizes:?} are incompatible with relative sizes {alpha:?}")]
    IncompatibleSizes { sizes: Vec<usize>, alpha: Vec<f64> },
    #[error("invalid solver options: {0}")]
    InvalidOptions(String),
    #[error("no multistart run converged ({starts} starts)")]
    NoConvergence { starts: usize },
    #[error("point is not a local maximum of the pressure functional: {0}")]
    NotAMaximum(String),
    #[error("unsupported degeneracy: {0}")]
    UnsupportedDegeneracy(String),
    #[error("magnetization {m} is not on the lattice of a block with {size} spins")]
    OffLattice { size: usize, m: f64 },
    #[error("magnetization lattice has {points} points, above the cap of {cap}")]
    LatticeTooLarge { points: u128, cap: u64 },
    #[error("conditioning ball contains no admissible mass")]
    EmptyCondition,
    #[error("degenerate maximum: 1 - J(1 - mu^2) = {0}")]
    DegenerateMaximum(f64),
    #[error("linear system is singular or ill-conditioned (condition number {0:e})")]
    SingularSystem(f64),
    #[error("covariance requires a maximum of type 1, got type {0}")]
    NotK1(usize),
    #[error("D J D is not positive definite")]
    NonPositiveDefiniteA,
    #[error("computed covariance is not positive definite")]
    NotPositiveDefiniteResult,
    #[error("global maxima have differing types: {0:?}")]
    MixedTypes(Vec<usize>),
    #[error("the pressure functional has {0} global maxima; an unconditioned law needs a unique one")]
    NonUniqueMaximum(usize),
    #[error("law is not normalized: {0}")]
    Unnormalized(String),
    #[error("law has no density")]
    NoDensity,
    #[error("sample is empty or too small: {0}")]
    EmptySample(String),
    #[error("inconsistent sample rows: {0}")]
    InconsistentRows(String),
    #[error("magnetization variance vanishes")]
    ZeroVariance,
    #[error("mean magnetization {0} is saturated")]
    MagnetizationSaturated(f64),
    #[error("empirical susceptibility is singular (condition number {0:e})")]
    SingularChi(f64),
    #[error("parse error: {0}")]
    Parse(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn kind(&self) -> ErrorKind {
        use Error::*;
        match self {
            NonSymmetricJ { .. }
            | BadAlpha(_)
            | DegenerateMeasure
            | NonPositiveDiagonal { .. }
            | InvalidMeasure(_)
            | InvalidModel(_)
            | InvalidConfiguration(_)
            | IncompatibleSizes { .. }
            | InvalidOptions(_)
            | UnsupportedMeasure
            | EmptySample(_)
            | InconsistentRows(_)
            | Parse(_)
            | Json(_) => ErrorKind::Config,
            DimensionMismatch { .. } => ErrorKind::Internal,
            Io(_) => ErrorKind::Io,
            _ => ErrorKind::Numeric,
        }
    }

    /// Stable machine-readable name of the variant.
    pub fn code(&self) -> &'static str {
        use Error::*;
        match self {
            NonSymmetricJ { .. } => "NonSymmetricJ",
            BadAlpha(_) => "BadAlpha",
            DegenerateMeasure => "DegenerateMeasure",
            NonPositiveDiagonal { .. } => "NonPositiveDiagonal",
            InvalidMeasure(_) => "InvalidMeasure",
            InvalidModel(_) => "InvalidModel",
            InvalidConfiguration(_) => "InvalidConfiguration",
            DimensionMismatch { .. } => "DimensionMismatch",
            DomainError(_) => "DomainError",
            UnsupportedMeasure => "UnsupportedMeasure",
            IncompatibleSizes { .. } => "IncompatibleSizes",
            InvalidOptions(_) => "InvalidOptions",
            NoConvergence { .. } => "NoConvergence",
            NotAMaximum(_) => "NotAMaximum",
            UnsupportedDegeneracy(_) => "UnsupportedDegeneracy",
            OffLattice { .. } => "OffLattice",
            LatticeTooLarge { .. } => "LatticeTooLarge",
            EmptyCondition => "EmptyCondition",
            DegenerateMaximum(_) => "DegenerateMaximum",
            SingularSystem(_) => "SingularSystem",
            NotK1(_) => "NotK1",
            NonPositiveDefiniteA => "NonPositiveDefiniteA",
            NotPositiveDefiniteResult => "NotPositiveDefiniteResult",
            MixedTypes(_) => "MixedTypes",
            NonUniqueMaximum(_) => "NonUniqueMaximum",
            Unnormalized(_) => "Unnormalized",
            NoDensity => "NoDensity",
            EmptySample(_) => "EmptySample",
            InconsistentRows(_) => "InconsistentRows",
            ZeroVariance => "ZeroVariance",
            MagnetizationSaturated(_) => "MagnetizationSaturated",
            SingularChi(_) => "SingularChi",
            Parse(_) => "Parse",
            Io(_) => "Io",
            Json(_) => "Json",
        }
    }
}
