use thiserror::Error;

use crate::pomdp_format::ParseError;

pub type Result<T, E = PomdpError> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PomdpError {
    /// The action is not part of the environment's action space.
    #[error("invalid action {0}")]
    InvalidAction(String),

    /// An optional model capability (argmax, enumeration, ...) was requested
    /// but the model does not provide it.
    #[error("capability not provided: {0}")]
    Capability(String),

    #[error("observation is impossible under the prior (unnormalized mass {mass})")]
    ImpossibleObservation { mass: f64 },

    #[error("observation for object {object} is impossible under its prior factor")]
    ImpossibleObjectObservation { object: u32 },

    #[error("particle depletion: no particle survived the update")]
    ParticleDepletion,

    #[error("unrecoverable particle depletion: no particle to reinvigorate from")]
    UnrecoverableDepletion,

    #[error("root particle set is empty")]
    DepletedRoot,

    #[error("covariance matrix is singular")]
    SingularCovariance,

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("no action available")]
    NoActions,

    #[error("projected {projected} alpha vectors exceeds the cap of {cap}")]
    Capacity { projected: u128, cap: u128 },

    #[error("object id mismatch (missing: {missing:?}, extra: {extra:?})")]
    ObjectIdMismatch { missing: Vec<u32>, extra: Vec<u32> },

    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),

    #[error(transparent)]
    Parse(#[from] ParseError),
}
