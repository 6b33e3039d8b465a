use thiserror::Error;

/// Errors raised by the numerical and algebraic routines of this crate.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// A point coincides with (or comes within the collision floor of) a primary.
    #[error("position {position:?} is at a primary (distance {distance:e})")]
    Domain { position: Vec<f64>, distance: f64 },

    /// Input outside the documented range of an operation.
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// The energy fiber over a position is empty.
    #[error("no solution: U(q) = {potential} exceeds energy {energy}")]
    EmptyFiber { potential: f64, energy: f64 },

    /// Integration approached a primary closer than the configured floor.
    #[error("collision approach at t = {t}: distance {distance:e} below floor {floor:e}")]
    CollisionApproach { t: f64, distance: f64, floor: f64 },

    /// Step size underflow or step budget exhausted.
    #[error("integrator failure at t = {t}: {reason}")]
    Integrator { t: f64, reason: String },

    /// An iterative solver did not reach its tolerance.
    #[error("no convergence after {iterations} iterations (residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },

    /// A section crossing was tangential.
    #[error("non-transversal section crossing at t = {t} (normal velocity {velocity:e})")]
    NonTransversal { t: f64, velocity: f64 },

    /// A chain complex failed validation.
    #[error("malformed chain complex: {0}")]
    MalformedComplex(String),

    /// A requested computation exceeds the hard size caps.
    #[error("size cap exceeded: {0}")]
    SizeCap(String),
}

pub type Result<T> = std::result::Result<T, Error>;
