//! Crate-wide error type.
//!
//! Every fallible operation in this crate returns [`Result`]. Variants are
//! deliberately fine-grained so callers (and the CLI exit-code logic) can
//! distinguish bad inputs from solver breakdowns.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum MilError {
    #[error("density has a negative entry: min value {min} at index {index}")]
    NegativeDensity { index: usize, min: f64 },

    #[error("measure is not normalized: quadrature mass {mass} deviates from 1 by {excess:e}")]
    NotNormalized { mass: f64, excess: f64 },

    #[error("grid domains do not match ({left} vs {right})")]
    DomainMismatch { left: String, right: String },

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("probing step {step} drives a corner density negative and the functional requires positivity")]
    StepTooLarge { step: f64 },

    #[error("functional evaluation returned a non-finite value")]
    NonFinite,

    #[error("theta-derivative of order {requested} unavailable (max order {max})")]
    OrderUnavailable { requested: usize, max: usize },

    #[error("linear solve failed: {0}")]
    LinearSolveFailure(String),

    #[error("eigendecomposition failed: {0}")]
    EigSolverFailure(String),

    #[error("eigenvalue has imaginary part {imag:e} beyond tolerance; discretization is inconsistent")]
    ComplexEigenvalue { imag: f64 },

    #[error("mode count {modes} insufficient: tail coefficient magnitude {tail:e} exceeds {threshold:e}")]
    ModeDeficiency { modes: usize, tail: f64, threshold: f64 },

    #[error("oracle call budget {budget} exceeded")]
    OracleBudgetExceeded { budget: u64 },

    #[error("fixed-point iteration did not converge after {iterations} iterations (last residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64, history: Vec<f64> },

    #[error("Newton iteration diverged after {iterations} iterations (residual {residual:e})")]
    NewtonDivergence { iterations: usize, residual: f64 },

    #[error("stationary linearized system is singular: {0}")]
    SingularSystem(String),

    #[error("probe support covers only {covered_fraction:.3} of cells (minimum {required_fraction:.3})")]
    SupportDeficiency { covered_fraction: f64, required_fraction: f64 },

    #[error("normal equations ill-conditioned: condition number {condition:e}")]
    IllConditioned { condition: f64 },

    #[error("periodic Poisson solve singular: {0}")]
    SingularPoisson(String),

    #[error("spectral gap failure: second eigenvalue {second} within {gap:e} of 1")]
    SpectralGapFailure { second: f64, gap: f64 },

    #[error("eigenvector for eigenvalue 1 is not strictly positive (min entry {min:e})")]
    NonPositiveEigenvector { min: f64 },

    #[error("invalid configuration: {0}")]
    ConfigInvalid(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("serialization error: {0}")]
    Serde(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, MilError>;
