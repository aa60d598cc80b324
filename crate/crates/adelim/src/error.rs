use num_complex::Complex64;

/// Errors raised by the library. Numerical verdicts (CP, Lindblad form, ...)
/// are returned as values; these variants are for preconditions that fail.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("linear algebra failure: {0}")]
    Linalg(String),

    #[error("near-degenerate eigenvalue {value} (eigenvector condition {condition:.3e})")]
    NearDegenerate { value: Complex64, condition: f64 },

    #[error("steady state is not unique: second eigenvalue {second} is within tolerance of zero")]
    NonUniqueSteadyState { second: Complex64 },

    #[error("map does not preserve Hermiticity (defect {defect:.3e})")]
    NotHermitianPreserving { defect: f64 },

    #[error("map does not annihilate the trace (defect {defect:.3e})")]
    NotTraceAnnihilating { defect: f64 },

    #[error("coefficient matrix is not Hermitian (defect {defect:.3e})")]
    NonHermitianInput { defect: f64 },

    #[error("spectrum contains no unit eigenvalue")]
    NoUnitEigenvalue,

    #[error("non-unit eigenvalues are not closed under complex conjugation")]
    NotConjugationClosed,

    #[error("expansion order {order} exceeds the conditioning budget (growth {growth:.3e})")]
    OrderTooHigh { order: usize, growth: f64 },

    #[error("gauge map I + G is not invertible (condition {condition:.3e})")]
    GaugeNotInvertible { condition: f64 },

    #[error("steady state is rank deficient (min eigenvalue {min_eig:.3e})")]
    RankDeficientSteadyState { min_eig: f64 },

    #[error("cannot normalize eigen-operator: |tr| = {trace_abs:.3e}")]
    TraceNormalizationFailure { trace_abs: f64 },

    #[error("coefficient [T]_({m},{n}) crossed zero at t = {t}")]
    CoefficientZeroCrossing { m: usize, n: usize, t: f64 },

    #[error("assumption violated: {0}")]
    AssumptionViolated(String),

    #[error("Fock truncation too small: top-level population {population:.3e}")]
    TruncationTooSmall { population: f64 },

    #[error("reduced dynamics unstable: T1 = {t1}, T2 = {t2}")]
    UnstableReducedDynamics { t1: f64, t2: f64 },

    #[error("toy model requires omega0 > 2 gamma0 (omega0 = {omega0}, gamma0 = {gamma0})")]
    StabilityViolated { omega0: f64, gamma0: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<ndarray_linalg::error::LinalgError> for Error {
    fn from(e: ndarray_linalg::error::LinalgError) -> Self {
        Error::Linalg(e.to_string())
    }
}
