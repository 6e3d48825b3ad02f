use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("rotation number must lie in (0, 1), got {0}")]
    AngleOutOfRange(f64),
    #[error("continued fraction terms must be positive (term {index} is zero)")]
    ZeroTerm { index: usize },
    #[error("continued fraction has no term at index {index} (finite expansion)")]
    RuleExhausted { index: usize },
    #[error("decimal value {value} is inconsistent with convergent {p}/{q}")]
    InconsistentDecimal { value: f64, p: String, q: String },
    #[error("unknown growth rule `{0}`")]
    UnknownRule(String),
    #[error("phase is not real-valued: coefficient pair at frequency {frequency} differs by {defect:e}")]
    NonRealPhase { frequency: i64, defect: f64 },
    #[error("band must be at least 1")]
    EmptyBand,
    #[error("phase band {phase_band} exceeds the resolution budget {budget} of a {grid}-point grid")]
    GridBudget { phase_band: i64, budget: i64, grid: usize },
    #[error("band overflow: frequency {frequency} exceeds the cap {cap}")]
    BandOverflow { frequency: i64, cap: i64 },
    #[error("V-degree {degree} exceeds the cap {cap}")]
    DegreeOverflow { degree: i64, cap: i64 },
    #[error("expansion of a unitary did not reach tolerance {tol:e} within band {band} (tail {tail:e})")]
    ExpansionBudget { band: i64, tail: f64, tol: f64 },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("generators do not commute as a cocycle (defect {defect:e} between generators {i} and {j})")]
    IncompatibleGenerators { i: usize, j: usize, defect: f64 },
    #[error("rotation angle mismatch: {0} vs {1}")]
    AngleMismatch(f64, f64),
    #[error("detector requires winding zero, got {0}")]
    NonzeroWinding(i64),
    #[error("aliasing estimate {aliasing:e} exceeds 10*tol = {limit:e}; use a larger band")]
    AliasingTooLarge { aliasing: f64, limit: f64 },
    #[error("cocycle is defined by a coefficient law and has no trigonometric realization")]
    AnalyticCocycle,
    #[error("law frequency {0} is not a convergent denominator of the base angle")]
    SupportMismatch(String),
    #[error("law must be real-valued (symmetric) to define a cocycle")]
    AsymmetricLaw,
    #[error("coefficient law depth must be at least 1")]
    EmptyDepth,
    #[error("no witness stored for level {0}")]
    MissingWitness(i64),
    #[error("witness does not solve level {level}: residual {residual:e}")]
    WitnessResidual { level: i64, residual: f64 },
    #[error("invalid measure: {0}")]
    InvalidMeasure(String),
    #[error("measure is not positive: Toeplitz minor of order {order} has determinant {det:e}")]
    NonPositiveMeasure { order: usize, det: f64 },
    #[error("fixed-point level must be positive")]
    ZeroLevel,
    #[error("systems are over different base actions")]
    BaseMismatch,
    #[error("window must be positive")]
    EmptyWindow,
}

pub type Result<T> = std::result::Result<T, Error>;
