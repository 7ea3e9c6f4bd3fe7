use alloc::string::String;

/// Errors raised by model construction, certification and the solvers.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("dataset is empty")]
    EmptyDataset,

    #[error("at least {needed} samples are required, found {found}")]
    TooFewSamples { needed: usize, found: usize },

    #[error("invalid size: {0}")]
    InvalidSize(String),

    #[error("parameter `{name}` out of range: {value}")]
    InvalidParameter { name: &'static str, value: f64 },

    #[error("hidden width {width} exceeds the enumeration budget of {max}")]
    WidthTooLarge { width: usize, max: usize },

    #[error("selection at sample {sample} is outside the ε-argmax sets")]
    InvalidSelection { sample: usize },

    #[error("the loss is not differentiable; directional derivatives need the squared loss")]
    NondifferentiableLoss,

    #[error("degenerate probe direction: {0}")]
    DegenerateDirection(&'static str),

    #[error("the population gradient does not exist at the origin")]
    GradientUndefined,

    #[error("point is not on the saddle circle (distance {distance})")]
    NotOnSaddleCircle { distance: f64 },

    #[error("convex solver failed: {0}")]
    SolverFailure(String),
}

pub type Result<T> = core::result::Result<T, Error>;
