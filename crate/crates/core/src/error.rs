use thiserror::Error;

/// Errors surfaced by solvers, validation, and configuration ingestion.
#[derive(Debug, Error)]
pub enum Error {
    /// A configuration field failed validation. Carries the field name and
    /// a human-readable reason.
    #[error("config: {field}: {reason}")]
    Config { field: String, reason: String },

    /// Mismatched vector / mesh / grid sizes between coupled quantities.
    #[error("size mismatch: {0}")]
    SizeMismatch(String),

    /// The conjugate-gradient solve did not reach the residual contract.
    /// `residuals` holds the relative residual history for diagnosis.
    #[error("linear solve did not converge: relative residual {last:.3e} after {iters} iterations (target {target:.3e})")]
    SolveDiverged {
        iters: usize,
        last: f64,
        target: f64,
        residuals: Vec<f64>,
    },

    /// The constant-control feasibility condition fails, so no admissible
    /// constant control exists for these parameters.
    #[error("no admissible constant control: (1-e^(-M0 T))/(1-e^(-M0 t0)) * s_minus = {lhs:.6} > s_plus = {rhs:.6}")]
    Infeasible { lhs: f64, rhs: f64 },

    /// An a-priori bound on the drug ODE solution was violated, which signals
    /// a solver bug rather than a modeling issue.
    #[error("drug ODE bound violated: {bound} exceeded by {excess:.3e}")]
    BoundViolated { bound: String, excess: f64 },

    /// The growth law is not differentiable at the requested point.
    #[error("growth law not differentiable at s = {0}")]
    NotDifferentiable(f64),

    /// The objective decreased too slowly or increased repeatedly; the
    /// gradient step is too large for this problem.
    #[error("objective increased for {streak} consecutive iterations at k = {at_iter}; choose a smaller gradient step delta")]
    Diverged { at_iter: usize, streak: usize },

    /// The implicit step matrix lost positive definiteness because the
    /// reaction term outran the step size (`dt * d(s) >= 1`).
    #[error("implicit step unstable: dt * d(s) = {0:.3} >= 1; reduce dt, the growth rate, or the control magnitude")]
    UnstableStep(f64),
}

impl Error {
    pub fn config(field: &str, reason: impl Into<String>) -> Self {
        Error::Config {
            field: field.to_string(),
            reason: reason.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
