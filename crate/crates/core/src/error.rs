use thiserror::Error;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum IsmError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("state diverged at t = {t}: {reason}")]
    Diverged { t: f64, reason: String },
    #[error("diagnostic error: {0}")]
    Diagnostic(String),
    #[error("fit error: {0}")]
    Fit(String),
}

pub type Result<T> = std::result::Result<T, IsmError>;

/// A failed step together with the last state that was still finite.
#[derive(Debug, Clone)]
pub struct StepFailure<S> {
    pub last_valid: S,
    pub error: IsmError,
}

impl<S> std::fmt::Display for StepFailure<S> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        self.error.fmt(f)
    }
}

impl<S: std::fmt::Debug> std::error::Error for StepFailure<S> {}
