//! The facade every prover backend presents to the environment.

use thiserror::Error;

use crate::clause::Clause;
use crate::tptp::Problem;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProverStatus {
    Running,
    Refutation,
    Saturated,
}

/// The backend's reply to one given-clause selection.
#[derive(Debug, Clone, PartialEq)]
pub struct SelectResult {
    pub new_clauses: Vec<Clause>,
    /// Labels the prover reports as redundant; they stop being selectable.
    pub eliminated_labels: Vec<String>,
    pub status: ProverStatus,
}

#[derive(Debug, Error)]
pub enum BackendError {
    #[error("{backend}: startup failed: {message}")]
    Startup { backend: String, message: String },
    #[error("unknown clause label `{0}`")]
    UnknownLabel(String),
    #[error("clause `{0}` is not selectable (already processed)")]
    AlreadyProcessed(String),
    #[error("{backend}: prover went away: {message}")]
    Disconnected { backend: String, message: String },
    #[error("{backend}: protocol error: {message}")]
    Protocol { backend: String, message: String },
    #[error("{backend}: no reply within {seconds:.1}s")]
    Timeout { backend: String, seconds: f64 },
    #[error("select called before start")]
    NotStarted,
}

impl BackendError {
    /// True when the prover side is gone; the environment then ends the
    /// episode instead of failing the step.
    pub fn is_disconnect(&self) -> bool {
        matches!(self, BackendError::Disconnected { .. })
    }
}

/// A prover driven one given clause at a time.
///
/// `start` returns the initial proof state; `select` may only be called
/// with labels the backend emitted since the last `start`.
pub trait Backend: Send {
    fn name(&self) -> &str;

    fn start(&mut self, problem: &Problem) -> Result<Vec<Clause>, BackendError>;

    fn select(&mut self, label: &str) -> Result<SelectResult, BackendError>;

    /// Releases external resources. Called on drop of the environment.
    fn stop(&mut self) {}
}

impl<B: Backend + ?Sized> Backend for Box<B> {
    fn name(&self) -> &str {
        (**self).name()
    }

    fn start(&mut self, problem: &Problem) -> Result<Vec<Clause>, BackendError> {
        (**self).start(problem)
    }

    fn select(&mut self, label: &str) -> Result<SelectResult, BackendError> {
        (**self).select(label)
    }

    fn stop(&mut self) {
        (**self).stop()
    }
}
