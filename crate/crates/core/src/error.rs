use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("metric is not symmetric positive-definite: {0}")]
    NotPositiveDefinite(String),

    #[error("structure is a mechanism: stiffness is singular along {0}")]
    Mechanism(String),

    #[error("empty data set for element {element}")]
    EmptyDataSet { element: usize },

    #[error("empty history repository for element {element}")]
    EmptyRepository { element: usize },

    #[error("material law mismatch: {0}")]
    InvalidLaw(String),

    #[error("time step must be positive, got {0}")]
    InvalidTimeStep(f64),

    #[error("non-finite value in {0}")]
    NonFinite(String),

    #[error("enumeration budget exceeded: {needed} assignments > budget {budget}")]
    BudgetExceeded { needed: f64, budget: u64 },

    #[error("time grid mismatch: {0}")]
    GridMismatch(String),

    #[error(
        "fixed point did not converge at step {step} (t = {time}) after {iterations} iterations"
    )]
    NonConvergent {
        step: usize,
        time: f64,
        iterations: usize,
    },

    #[error("equilibrium violated at step {step}: residual {residual:e} exceeds tolerance {tolerance:e}")]
    Equilibrium {
        step: usize,
        residual: f64,
        tolerance: f64,
    },

    #[error("standard deviation must be nonnegative, got {0}")]
    NegativeStdDev(f64),

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("run {run} with {n_points} points failed: {source}")]
    RunFailed {
        run: usize,
        n_points: usize,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
