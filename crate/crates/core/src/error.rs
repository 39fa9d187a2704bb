use thiserror::Error;

/// Errors produced by scale-function construction, evaluation and simulation.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum ScaleError {
    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("argument out of domain: {0}")]
    Domain(String),

    #[error("root bracketing failed: {0}")]
    Bracketing(String),

    #[error("non-finite quadrature value at x = {x}")]
    NonFiniteQuadrature { x: f64 },

    #[error("Laplace inversion did not converge at x = {x} (estimated error {estimate:e})")]
    InversionNonConvergence { x: f64, estimate: f64 },

    #[error("invalid grid: {0}")]
    Grid(String),

    #[error("x = {x} lies beyond the solved grid end {end}")]
    BeyondGrid { x: f64, end: f64 },

    #[error("degenerate window: W(a, b) = {0}")]
    DegenerateWindow(f64),

    #[error("invalid Monte Carlo configuration: {0}")]
    MonteCarlo(String),

    #[error("non-finite path state at t = {t}")]
    NonFiniteState { t: f64 },
}

pub type Result<T> = std::result::Result<T, ScaleError>;
