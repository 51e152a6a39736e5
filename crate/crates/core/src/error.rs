use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid extent: x_max ({x_max}) must exceed x_min ({x_min})")]
    InvalidExtent { x_min: f64, x_max: f64 },
    #[error("invalid sample count {0}: at least 8 points are required")]
    InvalidCount(usize),
    #[error("{name} must be strictly positive and finite, got {value}")]
    NonPositive { name: &'static str, value: f64 },
    #[error("field has {got} samples but the grid has {expected}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("non-finite value produced at sample {0}")]
    NonFinite(usize),
    #[error("operands live on different grids")]
    GridMismatch,
    #[error("scheme mismatch: {0}")]
    SchemeMismatch(&'static str),
    #[error("unsupported derivative order {0} (expected 1 or 2)")]
    InvalidDerivativeOrder(usize),
    #[error("unsupported finite-difference stencil order {0} (expected 2, 4 or 8)")]
    InvalidStencil(usize),
    #[error("momentum must be non-zero")]
    ZeroMomentum,
    #[error("angular frequency must be non-zero")]
    ZeroFrequency,
    #[error("scale constant must be non-zero")]
    ZeroScale,
    #[error("field has zero norm")]
    ZeroNorm,
    #[error("power outer function evaluated at its branch point (|phi| = {0:e})")]
    BranchPoint(f64),
    #[error("series too short: {got} samples, need at least {min}")]
    SeriesTooShort { got: usize, min: usize },
    #[error("series lengths differ ({0} vs {1})")]
    SeriesLengthMismatch(usize, usize),
    #[error("empty series")]
    EmptySeries,
    #[error("{name} = {value} is out of range {range}")]
    OutOfRange {
        name: &'static str,
        value: i64,
        range: &'static str,
    },
    #[error("operator {0} cannot be applied to a single spatial field")]
    NeedsTimeSeries(&'static str),
    #[error("operator {0} is not supported here")]
    UnsupportedOperator(&'static str),
    #[error("eigenbasis is not orthonormal: |<a_{i}|a_{j}> - delta| = {defect:e}")]
    NonOrthonormal { i: usize, j: usize, defect: f64 },
    #[error("{0} eigenvalues supplied for {1} basis states")]
    EigenvalueCount(usize, usize),
    #[error("rk4-spectral step dt = {dt:e} exceeds stability bound {bound:e}")]
    StabilityViolation { dt: f64, bound: f64 },
    #[error("{0} requires a periodic grid")]
    NonPeriodicGrid(&'static str),
    #[error("zero crossing at sample {index} (|value| = {modulus:e})")]
    ZeroCrossing { index: usize, modulus: f64 },
    #[error("recovery needs an exponential outer function")]
    UnknownOuter,
    #[error("under-resolved input: adjacent phase step {step:.4} rad exceeds pi/4 (fewer than 8 samples per period)")]
    Resolution { step: f64 },
    #[error("input is not a single plane-wave mode (relative off-mode power {0:e})")]
    MultiMode(f64),
    #[error("degenerate denominator |d psi / d phi| = {0:e}")]
    DegenerateDenominator(f64),
    #[error("potential has {got} samples but the grid has {expected}")]
    PotentialLength { expected: usize, got: usize },
    #[error("invalid evolution config: {0}")]
    InvalidConfig(&'static str),
}
