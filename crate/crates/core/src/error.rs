use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("Hilbert space dimension {dim} exceeds the limit of {limit} basis states")]
    DimensionOverflow { dim: u128, limit: u128 },

    #[error("site index {index} out of range for a chain of {len} sites")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("operator dimensions differ: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },

    #[error("eigensolver did not converge after {iterations} iterations (residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },

    #[error("could not resolve the degenerate ground space: {0}")]
    DegeneracyResolutionFailure(String),

    #[error("division by zero: {0}")]
    DivisionByZero(&'static str),

    #[error("no root of E_F - E_DF in [{lo}, {hi}]")]
    NoRootInBracket { lo: f64, hi: f64 },

    #[error("DMRG did not converge after {sweeps} sweeps (last energy change {last_delta:e})")]
    DmrgNoConvergence { sweeps: usize, last_delta: f64 },

    #[error("boson cutoff violated: 2n = {two_n} exceeds n_fock = {n_fock}")]
    CutoffViolation { two_n: f64, n_fock: usize },

    #[error("g grid is not uniform near g = {at}")]
    NonUniformGrid { at: f64 },

    #[error("correlation profile has only {usable} usable points (need at least 4)")]
    InsufficientDecay { usable: usize },

    #[error("fit needs at least 3 points, got {0}")]
    InsufficientPoints(usize),

    #[error("hopping requires two distinct ions, got index {0} twice")]
    SameIonIndex(usize),

    #[error("invalid ion chain specification: {0}")]
    InvalidIonSpec(String),
}
