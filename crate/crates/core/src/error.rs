use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Every failure mode of the library. Each variant has a stable
/// machine-readable code (see [`Error::code`]) used in report rows.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("parse error at byte {offset}: {message}")]
    Parse { offset: usize, message: String },

    #[error("variable index {index} out of range for dimension {dim}")]
    Dimension { index: usize, dim: usize },

    #[error("invalid metric specification: {0}")]
    InvalidSpec(String),

    #[error("mismatched jet shapes: ({0} vars, degree {1}) vs ({2} vars, degree {3})")]
    MismatchedJets(usize, usize, usize, usize),

    #[error("division by a jet whose constant term vanishes")]
    DivisionByZeroJet,

    #[error("{function} applied outside its domain (constant term {value})")]
    Domain { function: &'static str, value: f64 },

    #[error("derivative order {requested} exceeds jet degree {degree}")]
    OrderExceeded { requested: usize, degree: usize },

    #[error("point outside the metric's validity domain: {0}")]
    OutsideDomain(String),

    #[error("direction vector is numerically zero")]
    ZeroDirection,

    #[error("fundamental tensor is not positive definite")]
    NotPositiveDefinite,

    #[error("metric matrix is numerically singular")]
    SingularMetric,

    #[error("connection consistency check `{check}` failed: residual {residual:e} exceeds {tolerance:e}")]
    ConnectionConsistency {
        check: &'static str,
        residual: f64,
        tolerance: f64,
    },

    #[error("curvature consistency check `{check}` failed: residual {residual:e} exceeds {tolerance:e}")]
    CurvatureConsistency {
        check: &'static str,
        residual: f64,
        tolerance: f64,
    },

    #[error("flag-curvature pipeline is undefined for one-dimensional metrics; use the Schwarzian route")]
    OneDimensional,

    #[error("flag vector is numerically proportional to the reference direction")]
    DegenerateFlag,

    #[error("map has a critical point inside the sample domain")]
    CriticalPoint,

    #[error("Moebius determinant must be +1 or -1, got {0}")]
    BadDeterminant(f64),

    #[error("Moebius denominator vanishes inside the sample domain at x = {0}")]
    PoleInDomain(f64),
}

impl Error {
    /// Stable identifier for report rows and exit diagnostics.
    pub fn code(&self) -> &'static str {
        match self {
            Error::Parse { .. } => "parse_error",
            Error::Dimension { .. } => "dimension_error",
            Error::InvalidSpec(_) => "invalid_spec",
            Error::MismatchedJets(..) => "mismatched_jets",
            Error::DivisionByZeroJet => "division_by_zero_jet",
            Error::Domain { .. } => "domain_error",
            Error::OrderExceeded { .. } => "order_exceeded",
            Error::OutsideDomain(_) => "outside_domain",
            Error::ZeroDirection => "zero_direction",
            Error::NotPositiveDefinite => "not_positive_definite",
            Error::SingularMetric => "singular_metric",
            Error::ConnectionConsistency { .. } => "connection_consistency",
            Error::CurvatureConsistency { .. } => "curvature_consistency",
            Error::OneDimensional => "one_dimensional",
            Error::DegenerateFlag => "degenerate_flag",
            Error::CriticalPoint => "critical_point",
            Error::BadDeterminant(_) => "bad_determinant",
            Error::PoleInDomain(_) => "pole_in_domain",
        }
    }
}
