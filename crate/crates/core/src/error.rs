use thiserror::Error;

/// Errors raised by learning, rollout and generalization routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum DmpError {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("trajectory has {found} samples, at least {required} are required")]
    TrajectoryTooShort { found: usize, required: usize },

    #[error("sample times must be strictly increasing (violated at index {index})")]
    NonIncreasingTimes { index: usize },

    #[error("non-finite value in {what}")]
    NonFinite { what: &'static str },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("basis index {index} out of range for {len} basis functions")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("adjacent centers {index} and {} coincide", index + 1)]
    DuplicateCenters { index: usize },

    #[error("basis functions do not cover phase s = {phase}; increase the overlap")]
    DegenerateCoverage { phase: f64 },

    #[error("goal equals start in component {component}; the original formulation cannot scale the forcing term")]
    ZeroScale { component: usize },

    #[error("start and goal coincide; the roto-dilatation would be the null matrix")]
    NullTransform,

    #[error("zero vector has no direction")]
    ZeroVector,

    #[error("matrix is singular to working precision (condition number estimate {cond:e})")]
    Conditioning { cond: f64 },

    #[error("{family} bases have unbounded support; every weight must be relearned")]
    FullSupport { family: String },

    #[error("rollout diverged at t = {time}")]
    Divergence { time: f64 },

    #[error("demonstration {demo} has coincident start and end points")]
    Alignment { demo: usize },

    #[error("I/O error: {0}")]
    Io(String),

    #[error("malformed input: {0}")]
    Parse(String),
}

impl DmpError {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        DmpError::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }

    /// Whether the failure comes from the numerics (degenerate geometry,
    /// conditioning, divergence) rather than from malformed input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            DmpError::DegenerateCoverage { .. }
                | DmpError::ZeroScale { .. }
                | DmpError::NullTransform
                | DmpError::ZeroVector
                | DmpError::Conditioning { .. }
                | DmpError::Divergence { .. }
                | DmpError::Alignment { .. }
        )
    }

    /// Short variant name used in diagnostics.
    pub fn kind(&self) -> &'static str {
        match self {
            DmpError::InvalidParameter { .. } => "InvalidParameter",
            DmpError::TrajectoryTooShort { .. } => "TrajectoryTooShort",
            DmpError::NonIncreasingTimes { .. } => "NonIncreasingTimes",
            DmpError::NonFinite { .. } => "NonFinite",
            DmpError::DimensionMismatch { .. } => "DimensionMismatch",
            DmpError::IndexOutOfRange { .. } => "IndexOutOfRange",
            DmpError::DuplicateCenters { .. } => "DuplicateCenters",
            DmpError::DegenerateCoverage { .. } => "DegenerateCoverage",
            DmpError::ZeroScale { .. } => "ZeroScale",
            DmpError::NullTransform => "NullTransform",
            DmpError::ZeroVector => "ZeroVector",
            DmpError::Conditioning { .. } => "Conditioning",
            DmpError::FullSupport { .. } => "FullSupport",
            DmpError::Divergence { .. } => "Divergence",
            DmpError::Alignment { .. } => "Alignment",
            DmpError::Io(_) => "Io",
            DmpError::Parse(_) => "Parse",
        }
    }
}

pub type Result<T> = std::result::Result<T, DmpError>;
