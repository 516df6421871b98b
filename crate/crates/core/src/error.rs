use thiserror::Error;

use crate::bifurcation::Clause;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("zero vector has no projective class")]
    ZeroVector,
    #[error("projection along the pencil is undefined at its center [0:1:0]")]
    AtPencilCenter,
    #[error("dehomogenizing coordinate vanishes in the requested chart")]
    ChartOverflow,
    #[error("hit the indeterminacy point of the degenerate map")]
    IndeterminacyHit,
    #[error("parameters (a, b, c) do not define an endomorphism and a common zero was hit")]
    NotEndomorphism,
    #[error("w^3 = -1 is a pole of the critical-trace inversion")]
    PoleInput,
    #[error("parameter must be nonzero")]
    DegenerateLambda,
    #[error("root solver did not reach tolerance (residual {residual:e})")]
    SolverDiverged { residual: f64 },
    #[error("fiber scale could not be fixed for this target")]
    DegenerateFiber,
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("point is not periodic of the requested period (residual {residual:e})")]
    NotPeriodic { residual: f64 },
    #[error("Misiurewicz verification failed clause ({0})")]
    FailedCondition(Clause),
    #[error("no candidate within radius after depth {depth}; closest miss at distance {closest:e}")]
    NotFound { depth: usize, closest: f64 },
}
