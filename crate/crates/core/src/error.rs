use thiserror::Error;

/// Errors raised by the model, the solvers and scenario handling.
#[derive(Debug, Error)]
pub enum CdcpError {
    #[error("degenerate direction: source and target coincide")]
    DegenerateDirection,

    #[error("linear value {0} must be positive to convert to dB")]
    NonPositiveLinear(f64),

    #[error("tx power {0} dBm exceeds UE power class (max 23 dBm)")]
    ExceedsPowerClass(f64),

    #[error("invalid {field}: {reason}")]
    InvalidParameter { field: String, reason: String },

    #[error("degenerate feasible region: ball around the POI lies entirely below the altitude floor ({top:.3} m < {floor:.3} m)")]
    DegenerateRegion { top: f64, floor: f64 },

    #[error("unknown cell id `{0}`")]
    UnknownCell(String),

    #[error("duplicate cell id `{0}`")]
    DuplicateCell(String),

    #[error("non-finite objective at local-search start")]
    NonFiniteStart,

    #[error("grid of {evaluations} evaluations exceeds the guard of {guard}; use a coarser grid")]
    GridTooLarge { evaluations: u128, guard: u128 },

    #[error("scenario parse error: {0}")]
    Parse(String),

    #[error("{0}")]
    Io(#[from] std::io::Error),
}

impl CdcpError {
    pub(crate) fn invalid(field: impl Into<String>, reason: impl Into<String>) -> Self {
        CdcpError::InvalidParameter {
            field: field.into(),
            reason: reason.into(),
        }
    }

    /// Whether the error stems from bad input rather than a runtime failure.
    pub fn is_validation(&self) -> bool {
        !matches!(self, CdcpError::Io(_) | CdcpError::NonFiniteStart)
    }
}

pub type Result<T> = std::result::Result<T, CdcpError>;
