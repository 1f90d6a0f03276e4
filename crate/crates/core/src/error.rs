use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("evaluation time is not finite: {0}")]
    NonFiniteTime(f64),

    #[error("evaluation produced a non-finite value at t = {0}")]
    NonFiniteValue(f64),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimMismatch { expected: usize, found: usize },

    #[error("frequency vector has {found} coordinates but the basis has {expected}")]
    BasisMismatch { expected: usize, found: usize },

    #[error("expression leaves use different frequency bases")]
    MixedBases,

    #[error("integer overflow in frequency module arithmetic")]
    ModuleOverflow,

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("invalid averaging scheme: {0}")]
    InvalidScheme(String),

    #[error("empty input set")]
    EmptySet,

    #[error("no probe shift passed: smallest probe {probe:e} gave {distance:e}, bound {bound:e}")]
    NoProbePasses { probe: f64, distance: f64, bound: f64 },

    #[error("perturbation schedule left floating-point range at stage {stage}: {reason}")]
    ScheduleUnderflow { stage: usize, reason: String },

    #[error("perturbation stage {stage} failed: {source}")]
    Stage { stage: usize, source: Box<Error> },

    #[error("covering needs more than {budget} centers")]
    CoverBudget { budget: usize },

    #[error("residual density {achieved} missed target {target} with {centers} centers")]
    ResidualUnmet { achieved: f64, target: f64, centers: usize },

    #[error("partition for center {center} failed: {source}")]
    Center { center: usize, source: Box<Error> },

    #[error("refinement at depth {depth}, cell {cell:?}: step {step} exceeds twice the distance {distance}")]
    Refinement { depth: usize, cell: Vec<usize>, step: f64, distance: f64 },

    #[error("selection depth {depth} failed: {source}")]
    Depth { depth: usize, source: Box<Error> },
}

impl Error {
    /// True for errors caused by malformed or inconsistent inputs, as opposed
    /// to a numerical stage that could not complete.
    pub fn is_input_error(&self) -> bool {
        match self {
            Error::NonFiniteTime(_)
            | Error::DimMismatch { .. }
            | Error::BasisMismatch { .. }
            | Error::MixedBases
            | Error::InvalidArgument(_)
            | Error::InvalidScheme(_)
            | Error::EmptySet => true,
            Error::Stage { source, .. } | Error::Center { source, .. } | Error::Depth { source, .. } => {
                source.is_input_error()
            }
            _ => false,
        }
    }

    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }
}
