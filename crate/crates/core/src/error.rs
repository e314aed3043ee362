use alloc::string::String;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    /// A problem size exceeds the dense-storage budget.
    #[error("size {size} exceeds the limit of {limit} for {what}")]
    Size {
        what: &'static str,
        size: usize,
        limit: usize,
    },

    #[error("invalid input: {0}")]
    Validation(String),

    /// The adaptive integrator could not make progress.
    #[error("step size underflow at t = {t} (h = {step:e})")]
    StepUnderflow { t: f64, step: f64 },

    /// A state left the positive cone by more than the monitoring threshold.
    #[error("positivity violated at t = {t}: minimum eigenvalue {min_eig:e}")]
    Positivity { t: f64, min_eig: f64 },

    #[error("{0} is singular")]
    Singular(&'static str),

    #[error("{0} did not converge")]
    NoConvergence(&'static str),
}

impl Error {
    pub(crate) fn validation(msg: impl Into<String>) -> Self {
        Error::Validation(msg.into())
    }
}
