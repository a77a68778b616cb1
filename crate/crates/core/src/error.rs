use num_complex::Complex64;
use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid graph: {0}")]
    InvalidGraph(String),

    #[error("inconsistent rates: {0}")]
    InconsistentRates(String),

    #[error("invalid flow network: {0}")]
    InvalidFlow(String),

    #[error("graph has sink vertices {0:?}; no C0-semigroup exists")]
    SinkPresent(Vec<usize>),

    #[error("invalid coupling: {0}")]
    InvalidCoupling(String),

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("point {0} lies outside [0, 1]")]
    OutOfDomain(f64),

    #[error("kernel parameter mu = {0} must have positive real part")]
    InvalidMu(Complex64),

    #[error("lambda = {0} lies on the branch cut (-inf, 0]")]
    BranchCut(Complex64),

    #[error("lambda = {lambda} is too close to the spectrum (condition estimate {condition:e})")]
    NearSpectrum { lambda: Complex64, condition: f64 },

    #[error("boundary fixed-point iteration does not contract at lambda = {lambda} (last increment ratio {ratio})")]
    NoContraction { lambda: Complex64, ratio: f64 },

    #[error("Neumann series diverges at lambda = {lambda}: |K E(1)| = {norm}")]
    SeriesDiverges { lambda: Complex64, norm: f64 },

    #[error("coupling satisfies the positivity criterion; no witness exists")]
    NotViolating,

    #[error("Newton refinement did not converge from seed {0}")]
    NoConvergence(Complex64),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("parse error: {0}")]
    Parse(String),
}
