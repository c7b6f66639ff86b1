use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Every failure the numerical routines can surface.
///
/// Each variant maps to a stable machine-readable code (see [`Error::code`])
/// that the command line front end prints next to the human message.
#[derive(Error, Debug, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("dimension {dim} exceeds the supported maximum of {max}")]
    DimensionTooLarge { dim: usize, max: usize },

    #[error("matrix is not Hermitian: |H[{row}][{col}] - conj(H[{col}][{row}])| = {deviation:e}")]
    NotHermitian {
        row: usize,
        col: usize,
        deviation: f64,
    },

    #[error("basis is not orthonormal: max |<u_i|u_j> - delta_ij| = {deviation:e}")]
    NotUnitary { deviation: f64 },

    #[error("state is not normalized: | ||v|| - 1 | = {deviation:e}")]
    NotNormalized { deviation: f64 },

    #[error("non-finite entry at position {index}")]
    NonFinite { index: usize },

    #[error("Jacobi diagonalization did not converge: off-diagonal norm {off_norm:e} after {sweeps} sweeps")]
    ConvergenceFailure { off_norm: f64, sweeps: usize },

    #[error("singular condition: overlap magnitude {overlap:e} <= {threshold:e}")]
    SingularCondition { overlap: f64, threshold: f64 },

    #[error("zero probability has no action phase")]
    ZeroProbability,

    #[error("time grids do not match: {0}")]
    GridMismatch(String),

    #[error("time step {dt} is too coarse; the fastest Bohr frequency needs dt <= {max_dt}")]
    GridTooCoarse { dt: f64, max_dt: f64 },

    #[error("kernel mass {tail_mass:e} lies outside the evaluable time domain")]
    KernelTruncated { tail_mass: f64 },

    #[error("Bayesian update denominator {denominator:e} vanishes")]
    DegenerateUpdate { denominator: f64 },

    #[error("energy grid span {span} is narrower than 8 standard deviations ({required})")]
    GridTooNarrow { span: f64, required: f64 },

    #[error("all amplitudes suppressed below {threshold:e}")]
    ZeroNorm { threshold: f64 },

    #[error("no crossing of Re H = E_n on the series (classically forbidden)")]
    NoCrossing,

    #[error("energies {e_n} and {e_m} coincide")]
    DegenerateEnergies { e_n: f64, e_m: f64 },

    #[error("pairs not covered by the action series: {0}")]
    UnmatchedPairs(String),

    #[error("time must be positive, got {0}")]
    NonpositiveTime(f64),

    #[error("window [{start}, {end}] reaches t <= 0")]
    WindowCrossesZero { start: f64, end: f64 },

    #[error("stationary width ratio dt/T = {ratio} exceeds {max_ratio}")]
    WidthTooLarge { ratio: f64, max_ratio: f64 },

    #[error("invalid geometry: {0}")]
    InvalidGeometry(String),

    #[error("not a tunneling configuration: V = {potential} <= E = {energy}")]
    NotTunneling { potential: f64, energy: f64 },

    #[error("quadrature tail did not converge: {0}")]
    TailNotConverged(String),

    #[error("quadrature did not reach tolerance: estimated error {error:e}")]
    QuadratureFailure { error: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("validation error: {0}")]
    Validation(String),
}

impl Error {
    /// Stable snake_case identifier for machine consumption.
    pub fn code(&self) -> &'static str {
        match self {
            Error::DimensionMismatch { .. } => "dimension_mismatch",
            Error::DimensionTooLarge { .. } => "dimension_too_large",
            Error::NotHermitian { .. } => "not_hermitian",
            Error::NotUnitary { .. } => "not_unitary",
            Error::NotNormalized { .. } => "not_normalized",
            Error::NonFinite { .. } => "non_finite",
            Error::ConvergenceFailure { .. } => "convergence_failure",
            Error::SingularCondition { .. } => "singular_condition",
            Error::ZeroProbability => "zero_probability",
            Error::GridMismatch(_) => "grid_mismatch",
            Error::GridTooCoarse { .. } => "grid_too_coarse",
            Error::KernelTruncated { .. } => "kernel_truncated",
            Error::DegenerateUpdate { .. } => "degenerate_update",
            Error::GridTooNarrow { .. } => "grid_too_narrow",
            Error::ZeroNorm { .. } => "zero_norm",
            Error::NoCrossing => "no_crossing",
            Error::DegenerateEnergies { .. } => "degenerate_energies",
            Error::UnmatchedPairs(_) => "unmatched_pairs",
            Error::NonpositiveTime(_) => "nonpositive_time",
            Error::WindowCrossesZero { .. } => "window_crosses_zero",
            Error::WidthTooLarge { .. } => "width_too_large",
            Error::InvalidGeometry(_) => "invalid_geometry",
            Error::NotTunneling { .. } => "not_tunneling",
            Error::TailNotConverged(_) => "tail_not_converged",
            Error::QuadratureFailure { .. } => "quadrature_failure",
            Error::InvalidParameter(_) => "invalid_parameter",
            Error::Parse(_) => "parse_error",
            Error::Validation(_) => "validation_error",
        }
    }

    /// True for errors caused by malformed or inconsistent input rather than
    /// by a computation that could not be carried out.
    pub fn is_input_error(&self) -> bool {
        matches!(
            self,
            Error::Parse(_)
                | Error::Validation(_)
                | Error::NotHermitian { .. }
                | Error::NotUnitary { .. }
                | Error::NotNormalized { .. }
                | Error::NonFinite { .. }
                | Error::DimensionMismatch { .. }
                | Error::DimensionTooLarge { .. }
                | Error::InvalidParameter(_)
                | Error::InvalidGeometry(_)
                | Error::NotTunneling { .. }
                | Error::GridMismatch(_)
                | Error::GridTooCoarse { .. }
                | Error::GridTooNarrow { .. }
                | Error::WindowCrossesZero { .. }
                | Error::WidthTooLarge { .. }
        )
    }
}
