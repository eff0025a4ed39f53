use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// An argument lies outside the domain of a formula (e.g. τ ≤ 0).
    #[error("domain error: {0}")]
    Domain(String),

    /// Invalid model or run parameters.
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// The amplitude dropped to the configured floor; the phase equation is singular there.
    #[error("singularity: rho = {rho:e} <= floor {floor:e} at t = {t}")]
    Singularity { t: f64, rho: f64, floor: f64 },

    /// The integrator ran out of its step budget.
    #[error("step budget of {max_steps} exhausted at t = {t}")]
    Budget { max_steps: usize, t: f64 },

    /// Step size underflow without a singularity signal.
    #[error("step size underflow at t = {t} (h = {h:e})")]
    StepUnderflow { t: f64, h: f64 },

    /// A construction that needs P'(ψ₀) ≠ 0 was attempted on a bifurcation curve.
    #[error("degenerate equilibrium psi0 = {psi0}: |P'| = {p_prime:e} (parameters on a bifurcation curve)")]
    Degenerate { psi0: f64, p_prime: f64 },

    /// A documented precondition of an operation does not hold.
    #[error("precondition violated: {0}")]
    Precondition(String),

    /// A scalar root solve did not converge or was not bracketed.
    #[error("root solve failed: {0}")]
    RootSolve(String),
}
