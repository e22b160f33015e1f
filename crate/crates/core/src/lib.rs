//! Given-clause saturation proving as a reinforcement-learning environment.
//!
//! The crate holds the clause model and TPTP reader, the embedded prover,
//! adapters for external provers, the environment with its wrappers, the
//! embedding client, agents and the experiment runner.

pub mod agents;
pub mod backend;
pub mod clause;
pub mod conformance;
pub mod embedding;
pub mod env;
pub mod experiment;
pub mod external;
pub mod fixtures;
pub mod prover;
pub mod server;
pub mod tptp;
pub mod unify;
pub mod wrappers;

pub use backend::{Backend, BackendError, ProverStatus, SelectResult};
pub use clause::{clause_weight, is_tautology, render_clause, Clause, Literal, Term};
pub use env::{
    BackendConfig, EnvConfig, EnvError, Environment, Info, Observation, ProofObservation,
    ProofState, RenderMode, SaturationEnv, StepOutcome,
};
pub use experiment::{EndCause, EpisodeRecord, ExperimentConfig};
pub use prover::EmbeddedProver;
pub use tptp::{parse_clause, Problem, ProblemLoader};
pub use unify::{unify, Substitution};
