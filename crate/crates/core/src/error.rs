use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// A material or constitutive coefficient violates its sign constraint.
    #[error("coefficient `{0}` violates its positivity constraint")]
    NonPositiveCoefficient(&'static str),

    #[error("invalid simulation setting `{name}`: {reason}")]
    InvalidSetting { name: &'static str, reason: String },

    /// `l/dx` or `t_final/dt` is not (close to) an integer.
    #[error("mesh is not divisible: {what} = {ratio} is not an integer")]
    NonDivisibleMesh { what: &'static str, ratio: f64 },

    #[error("state does not match grid: {0}")]
    GridMismatch(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("pivot {index} underflowed (|pivot| = {magnitude:e})")]
    SingularPivot { index: usize, magnitude: f64 },

    #[error("matrix is singular")]
    SingularMatrix,

    /// The Fourier stepper was asked to advance a state with non-zero relaxation terms.
    #[error("Fourier stepper requires tau_q = mu2 = 0 (got tau_q = {tau_q}, mu2 = {mu2})")]
    InvalidLimit { tau_q: f64, mu2: f64 },

    #[error("energy trace is degenerate: {0}")]
    DegenerateTrace(&'static str),
}
