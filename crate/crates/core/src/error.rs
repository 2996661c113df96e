use thiserror::Error;

use crate::numerics::CircleAngle;

/// Errors raised anywhere in the pipeline.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    #[error("non-finite input")]
    NonFiniteInput,
    #[error("Newton iteration did not converge after {iterations} iterations (residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },
    #[error("derivative vanished at iterate")]
    DerivativeVanished,
    #[error("singular Jacobian (condition estimate {condition:e})")]
    SingularJacobian { condition: f64 },
    #[error("critical points coincide")]
    DegenerateCritical,
    #[error("fixed points are not distinct")]
    NonDistinct,
    #[error("orbit escaped at step {step}")]
    Escaped { step: usize },
    #[error("suspected ray bifurcation for angle {angle} near potential {potential:e}")]
    RayBifurcationSuspected { angle: CircleAngle, potential: f64 },
    #[error("landing of angle {angle} unresolved (spread {spread:e})")]
    LandingUnresolved { angle: CircleAngle, spread: f64 },
    #[error("point within {distance:e} of a region boundary")]
    TooCloseToBoundary { distance: f64 },
    #[error("rays {first} and {second} do not land at a common point (gap {gap:e})")]
    CommonLandingFailed {
        first: CircleAngle,
        second: CircleAngle,
        gap: f64,
    },
    #[error("point is not in the region W")]
    NotInW,
    #[error("{count} preimages lie in V, expected exactly one")]
    AmbiguousBranch { count: usize },
    #[error("configuration is not minimal: {0}")]
    NonMinimal(String),
    #[error("configuration mismatch: {0}")]
    ConfigurationMismatch(String),
    #[error("no four-ray cluster found: {0}")]
    NoFourRayCluster(String),
    #[error("branching point does not separate the test angles")]
    SeparationFailed,
    #[error("test angles are not separated by the branching point")]
    NotSeparated,
    #[error("no triple coincidence found on the loop (best gap {best:e}, tolerance {tolerance:e})")]
    NoTripleCoincidence { best: f64, tolerance: f64 },
    #[error("puzzle stitching broken at depth {depth}: {reason}")]
    StitchingBroken { depth: usize, reason: String },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("chain step {step}: {source}")]
    ChainStep {
        step: usize,
        #[source]
        source: Box<Error>,
    },
}

pub type Result<T> = std::result::Result<T, Error>;
