use thiserror::Error;

/// Errors raised anywhere in the toolkit.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// An argument lies outside the admissible parameter set.
    #[error("invalid parameter `{name}` = {value}: {reason}")]
    InvalidParameter {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },

    /// Structural problems with inputs that are not a single scalar.
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// Adaptive quadrature ran out of panels before the tail was certified.
    #[error("quadrature did not converge after {panels} panels (estimate {estimate:e}, error {error:e})")]
    QuadratureNonConvergence {
        panels: usize,
        estimate: f64,
        error: f64,
    },

    /// A kernel evaluation failed for one spectral mode.
    #[error("mode {mode} (lambda = {lambda}): {source}")]
    Mode {
        mode: usize,
        lambda: f64,
        #[source]
        source: Box<Error>,
    },

    /// The matrix handed to the matrix operator is not symmetric positive-definite.
    #[error("matrix is not symmetric positive-definite: {0}")]
    NotSpd(String),

    /// Observation weights produced a non-finite value.
    #[error("observation weight is not finite at lambda = {lambda}")]
    NonFiniteWeight { lambda: f64 },

    /// A spatial point is outside the operator domain.
    #[error("point {0} lies outside the operator domain")]
    OutOfDomain(String),

    /// No grid time qualified as a threshold time.
    #[error(
        "no threshold time found on the scan grid up to t = {t_max}; enlarge the search range"
    )]
    ThresholdNotFound { t_max: f64 },

    /// The sampled observation is not strictly decreasing in alpha.
    #[error("observation is not strictly decreasing in alpha at t0 = {t0} (between alpha = {alpha_lo} and {alpha_hi})")]
    MonotonicityViolation {
        t0: f64,
        alpha_lo: f64,
        alpha_hi: f64,
    },

    /// The requested observation time is below the certified threshold.
    #[error("t0 = {t0} is below the certified threshold time {t0_required}")]
    ThresholdNotMet { t0: f64, t0_required: f64 },

    /// Initial data has zero norm, so the observation carries no information.
    #[error("initial data has zero norm")]
    DegenerateData,

    /// The target observation lies outside the attainable range.
    #[error("no alpha attains d0 = {d0:e}; attainable range is [{u_min:e}, {u_max:e}]")]
    NoSolution { d0: f64, u_min: f64, u_max: f64 },

    #[error("io: {0}")]
    Io(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub fn param(name: &'static str, value: f64, reason: &'static str) -> Self {
        Error::InvalidParameter {
            name,
            value,
            reason,
        }
    }

    /// Innermost error, looking through `Mode` wrappers.
    pub fn root(&self) -> &Error {
        match self {
            Error::Mode { source, .. } => source.root(),
            other => other,
        }
    }

    /// Process exit code used by the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self.root() {
            Error::InvalidParameter { .. }
            | Error::InvalidInput(_)
            | Error::NotSpd(_)
            | Error::NonFiniteWeight { .. }
            | Error::OutOfDomain(_)
            | Error::DegenerateData
            | Error::Io(_) => 2,
            Error::QuadratureNonConvergence { .. } | Error::ThresholdNotFound { .. } => 3,
            Error::NoSolution { .. } => 4,
            Error::MonotonicityViolation { .. } | Error::ThresholdNotMet { .. } => 5,
            Error::Mode { .. } => unreachable!("root() unwraps mode errors"),
        }
    }

    /// Short machine-readable tag.
    pub fn kind(&self) -> &'static str {
        match self.root() {
            Error::InvalidParameter { .. } => "invalid_parameter",
            Error::InvalidInput(_) => "invalid_input",
            Error::QuadratureNonConvergence { .. } => "quadrature_nonconvergence",
            Error::NotSpd(_) => "not_spd",
            Error::NonFiniteWeight { .. } => "nonfinite_weight",
            Error::OutOfDomain(_) => "out_of_domain",
            Error::ThresholdNotFound { .. } => "threshold_not_found",
            Error::MonotonicityViolation { .. } => "monotonicity_violation",
            Error::ThresholdNotMet { .. } => "threshold_not_met",
            Error::DegenerateData => "degenerate_data",
            Error::NoSolution { .. } => "no_solution",
            Error::Io(_) => "io",
            Error::Mode { .. } => unreachable!(),
        }
    }
}
