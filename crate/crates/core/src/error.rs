use thiserror::Error;

/// Crate-wide error type. Numeric routines report where they gave up and why,
/// so callers (and the CLI) can surface actionable diagnostics.
#[derive(Debug, Clone, Error)]
pub enum Error {
    #[error("parse error at position {position}: {message}")]
    Parse { position: usize, message: String },

    #[error("unknown identifier `{name}` at position {position}")]
    UnknownIdentifier { name: String, position: usize },

    #[error("unbound variable `{name}` during evaluation")]
    UnboundVariable { name: String },

    #[error("domain violation evaluating `{expr}`: {message}")]
    EvalDomain { expr: String, message: String },

    #[error("derivative undefined at a kink of `{expr}` (argument is 0)")]
    NonDifferentiable { expr: String },

    #[error("quadrature failed on [{lo}, {hi}]: {message}")]
    Quadrature { lo: f64, hi: f64, message: String },

    #[error("integral diverges: {message}")]
    Divergent { message: String },

    #[error("divergence classification inconclusive: {message}")]
    Inconclusive { message: String },

    #[error("invalid geometry: {0}")]
    Geometry(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("{point} is outside the open domain ({lo}, {hi})")]
    OutsideDomain { point: f64, lo: f64, hi: f64 },

    #[error("step size underflow at {location} (step {step:.3e}); solution blew up or hit a coefficient singularity")]
    StepUnderflow { location: f64, step: f64 },

    #[error("integrator exceeded {steps} steps at {location}")]
    MaxStepsExceeded { location: f64, steps: usize },

    #[error("root finding failed: {0}")]
    RootFinding(String),

    #[error("shooting did not converge after {iterations} iterations (residual {residual:.3e})")]
    ShootingFailed { iterations: usize, residual: f64 },

    #[error("solution lost positivity at {location} during continuation (epsilon {epsilon:.3e})")]
    PositivityLost { location: f64, epsilon: f64 },

    #[error("Picard iteration is not contracting: update norm {update:.3e} after {iterations} iterations")]
    NonContraction { update: f64, iterations: usize },

    #[error("Picard iterate collapsed to the positivity floor (the source term carries no mass)")]
    Collapse,

    #[error("matching-point defect {defect:.3e} exceeds tolerance {tol:.3e} at s0={s0}")]
    MatchingDefect { defect: f64, tol: f64, s0: f64 },

    #[error("deviation bound breached on [{interval_lo}, {interval_hi}]: sup {observed:.3e} > {allowed:.3e}; Lipschitz condition failure or solver error")]
    DeviationBreach {
        interval_lo: f64,
        interval_hi: f64,
        observed: f64,
        allowed: f64,
    },

    #[error("mesh error: {0}")]
    Mesh(String),
}

pub type Result<T> = std::result::Result<T, Error>;
