use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid dimension {dim}: {reason}")]
    InvalidDimension { dim: usize, reason: &'static str },

    #[error("occupation {n} out of range for a mode of dimension {dim}")]
    OutOfRange { n: usize, dim: usize },

    #[error("dimension mismatch: expected {expected}, got {got} ({context})")]
    DimensionMismatch {
        expected: usize,
        got: usize,
        context: &'static str,
    },

    #[error("unknown mode label `{0}`")]
    UnknownMode(String),

    #[error("invalid parameter `{field}`: {reason}")]
    InvalidParameter { field: &'static str, reason: String },

    #[error("superoperator capacity exceeded: dimension {dim} > {max}")]
    Capacity { dim: usize, max: usize },

    #[error("step size underflow at t = {t:.6e} (h = {h:.3e}); problem is too stiff for the explicit integrator")]
    Stiffness { t: f64, h: f64 },

    #[error("integration invariant violated at t = {t:.6e}: {what} = {value:.3e}")]
    IntegrationFailure { t: f64, what: &'static str, value: f64 },

    #[error("eigensolver failed to converge")]
    EigenSolver,

    #[error("fit failed: {0}")]
    Fit(String),

    #[error("rank-deficient design matrix")]
    RankDeficient,

    #[error("rate undefined: {0}")]
    UndefinedRate(&'static str),

    #[error("time step {dt:.3e} too coarse for switching rate {gamma:.3e} (need dt <= 0.1/gamma_sw)")]
    Resolution { dt: f64, gamma: f64 },

    #[error("noise band misconfigured: {0}")]
    Band(String),

    #[error("bisection failed to bracket the target: {0}")]
    Bracket(String),

    #[error("charge-basis cutoff {0} has not converged")]
    Convergence(usize),

    #[error("infeasible drive plan: {0}")]
    Infeasible(String),

    #[error("unknown strategy `{name}` (available: {available})")]
    UnknownStrategy { name: String, available: String },
}

impl Error {
    pub(crate) fn param(field: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            field,
            reason: reason.into(),
        }
    }

    /// True for errors caused by bad input rather than numerical trouble.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::InvalidDimension { .. }
                | Error::OutOfRange { .. }
                | Error::DimensionMismatch { .. }
                | Error::UnknownMode(_)
                | Error::InvalidParameter { .. }
                | Error::Capacity { .. }
                | Error::Resolution { .. }
                | Error::Band(_)
                | Error::UnknownStrategy { .. }
        )
    }
}
