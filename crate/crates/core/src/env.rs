//! The environment state machine: reset, step, render and set_task over a
//! prover backend.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::sync::Arc;

use thiserror::Error;

use crate::backend::{Backend, BackendError, ProverStatus};
use crate::clause::{render_clause, Clause};
use crate::external::relay::{RelayBackend, RelayBackendConfig};
use crate::external::stdio::{StdioAdapterConfig, StdioBackend};
use crate::fixtures;
use crate::prover::EmbeddedProver;
use crate::tptp::{Problem, ProblemError, ProblemLoader};

pub const DEFAULT_MAX_CLAUSES: usize = 1000;

/// Extra diagnostics returned with every reset and step. Always empty.
pub type Info = BTreeMap<String, String>;

#[derive(Debug, Clone, PartialEq)]
pub struct Observation {
    /// Every clause of the proof state, processed or not, in creation order.
    pub real_obs: Vec<Arc<Clause>>,
    /// Length `max_clauses`; 1.0 where the clause exists and may be the
    /// next given clause.
    pub action_mask: Vec<f64>,
}

/// Read access shared by all observation shapes that still carry the
/// clause sequence.
pub trait ProofObservation {
    fn clauses(&self) -> &[Arc<Clause>];
    fn action_mask(&self) -> &[f64];

    fn is_selectable(&self, index: usize) -> bool {
        self.action_mask().get(index).is_some_and(|&m| m == 1.0)
    }

    fn selectable_indices(&self) -> Vec<usize> {
        (0..self.action_mask().len())
            .filter(|&i| self.is_selectable(i))
            .collect()
    }
}

impl ProofObservation for Observation {
    fn clauses(&self) -> &[Arc<Clause>] {
        &self.real_obs
    }

    fn action_mask(&self) -> &[f64] {
        &self.action_mask
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepOutcome<O> {
    pub observation: O,
    pub reward: f64,
    pub terminated: bool,
    pub truncated: bool,
    pub info: Info,
}

impl<O> StepOutcome<O> {
    pub fn is_done(&self) -> bool {
        self.terminated || self.truncated
    }

    pub fn map<P>(self, f: impl FnOnce(O) -> P) -> StepOutcome<P> {
        StepOutcome {
            observation: f(self.observation),
            reward: self.reward,
            terminated: self.terminated,
            truncated: self.truncated,
            info: self.info,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RenderMode {
    /// Print to standard output.
    Human,
    /// Return the text.
    Ansi,
}

impl FromStr for RenderMode {
    type Err = EnvError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "human" => Ok(RenderMode::Human),
            "ansi" => Ok(RenderMode::Ansi),
            other => Err(EnvError::UnknownRenderMode(other.to_string())),
        }
    }
}

impl fmt::Display for RenderMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RenderMode::Human => "human",
            RenderMode::Ansi => "ansi",
        })
    }
}

#[derive(Debug, Error)]
pub enum EnvError {
    #[error("action {action} is not selectable")]
    InvalidAction { action: usize },
    #[error("arm {0} does not exist (expected 0 or 1)")]
    InvalidArm(usize),
    #[error("no clause is selectable")]
    NoSelectableClause,
    #[error("episode is over; call reset")]
    EpisodeFinished,
    #[error("environment has not been reset")]
    NotReset,
    #[error("unknown render mode `{0}` (expected human or ansi)")]
    UnknownRenderMode(String),
    #[error(transparent)]
    Task(#[from] ProblemError),
    #[error("task has {inputs} input clauses but max_clauses is {max_clauses}")]
    TaskTooLarge { inputs: usize, max_clauses: usize },
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Backend(#[from] BackendError),
    #[error("cannot embed clause `{label}`: {message}")]
    Embedding { label: String, message: String },
}

/// An environment in the reset/step/render style.
pub trait Environment {
    type Action;
    type Observation;

    fn reset(&mut self, seed: Option<u64>) -> Result<(Self::Observation, Info), EnvError>;

    fn step(&mut self, action: Self::Action) -> Result<StepOutcome<Self::Observation>, EnvError>;

    fn render(&mut self, mode: RenderMode) -> Result<Option<String>, EnvError>;

    /// Length of the action mask.
    fn max_clauses(&self) -> usize;

    /// Seed passed to the latest reset.
    fn seed(&self) -> Option<u64>;
}

/// Which prover drives the environment.
#[derive(Debug, Clone, Default)]
pub enum BackendConfig {
    #[default]
    Embedded,
    Stdio(StdioAdapterConfig),
    Relay(RelayBackendConfig),
}

impl BackendConfig {
    pub fn name(&self) -> &'static str {
        match self {
            BackendConfig::Embedded => "embedded",
            BackendConfig::Stdio(_) => "stdio",
            BackendConfig::Relay(_) => "relay",
        }
    }

    pub fn build(&self) -> Result<Box<dyn Backend>, BackendError> {
        Ok(match self {
            BackendConfig::Embedded => Box::new(EmbeddedProver::new()),
            BackendConfig::Stdio(config) => Box::new(StdioBackend::new(config.clone())),
            BackendConfig::Relay(config) => Box::new(RelayBackend::bind(config.clone())?),
        })
    }
}

#[derive(Debug, Clone)]
pub struct EnvConfig {
    pub max_clauses: usize,
    pub backend: BackendConfig,
    /// `None` selects the bundled group-theory task.
    pub problem_path: Option<PathBuf>,
    /// Render whole `cnf(...)` lines instead of bare literals.
    pub verbose_render: bool,
    /// Directory `include` directives are resolved against.
    pub axiom_root: Option<PathBuf>,
}

impl Default for EnvConfig {
    fn default() -> Self {
        EnvConfig {
            max_clauses: DEFAULT_MAX_CLAUSES,
            backend: BackendConfig::Embedded,
            problem_path: None,
            verbose_render: true,
            axiom_root: None,
        }
    }
}

/// All clauses seen this episode plus which of them may be selected next.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ProofState {
    pub clauses: Vec<Arc<Clause>>,
    pub selectable: Vec<bool>,
    pub step_count: usize,
}

impl ProofState {
    pub fn len(&self) -> usize {
        self.clauses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.clauses.is_empty()
    }

    pub fn has_empty_clause(&self) -> bool {
        self.clauses.iter().any(|c| c.is_empty())
    }

    pub fn any_selectable(&self) -> bool {
        self.selectable.iter().any(|&s| s)
    }

    pub fn action_mask(&self, max_clauses: usize) -> Vec<f64> {
        let mut mask = vec![0.0; max_clauses];
        for (slot, &s) in mask.iter_mut().zip(&self.selectable) {
            *slot = if s { 1.0 } else { 0.0 };
        }
        mask
    }

    pub fn observation(&self, max_clauses: usize) -> Observation {
        Observation {
            real_obs: self.clauses.clone(),
            action_mask: self.action_mask(max_clauses),
        }
    }

    /// The state as TPTP text, one clause per line.
    pub fn render(&self, verbose: bool) -> String {
        let mut out = String::new();
        for clause in &self.clauses {
            out.push_str(&render_clause(clause, verbose));
            out.push('\n');
        }
        out
    }
}

/// Given-clause proving exposed as an environment. Actions are indices
/// into `real_obs`.
pub struct SaturationEnv {
    config: EnvConfig,
    backend: Box<dyn Backend>,
    problem: Problem,
    state: Option<ProofState>,
    index_of: HashMap<String, usize>,
    done: bool,
    seed: Option<u64>,
}

impl fmt::Debug for SaturationEnv {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SaturationEnv")
            .field("backend", &self.backend.name())
            .field("problem", &self.problem.name)
            .field("max_clauses", &self.config.max_clauses)
            .field("done", &self.done)
            .finish()
    }
}

impl SaturationEnv {
    /// Loads the configured task and builds the configured backend.
    pub fn new(config: EnvConfig) -> Result<Self, EnvError> {
        let backend = config.backend.build()?;
        Self::with_backend(config, backend)
    }

    /// Like `new`, with a caller-supplied backend (`config.backend` is
    /// ignored).
    pub fn with_backend(config: EnvConfig, backend: Box<dyn Backend>) -> Result<Self, EnvError> {
        if config.max_clauses == 0 {
            return Err(EnvError::Config("max_clauses must be positive".into()));
        }
        let problem = match &config.problem_path {
            Some(path) => ProblemLoader::new(config.axiom_root.clone()).load(path)?,
            None => fixtures::default_task(),
        };
        Ok(SaturationEnv {
            config,
            backend,
            problem,
            state: None,
            index_of: HashMap::new(),
            done: false,
            seed: None,
        })
    }

    pub fn config(&self) -> &EnvConfig {
        &self.config
    }

    pub fn problem(&self) -> &Problem {
        &self.problem
    }

    pub fn backend_name(&self) -> &str {
        self.backend.name()
    }

    pub fn state(&self) -> Option<&ProofState> {
        self.state.as_ref()
    }

    pub fn is_done(&self) -> bool {
        self.done
    }

    /// Loads the problem used by subsequent resets. On error the
    /// environment is left as it was.
    pub fn set_task(&mut self, path: impl AsRef<Path>) -> Result<(), EnvError> {
        let problem = ProblemLoader::new(self.config.axiom_root.clone()).load(path.as_ref())?;
        self.problem = problem;
        self.config.problem_path = Some(path.as_ref().to_path_buf());
        Ok(())
    }

    /// In-memory variant of `set_task`.
    pub fn set_problem(&mut self, problem: Problem) {
        self.problem = problem;
        self.config.problem_path = None;
    }

    fn observation(&self) -> Observation {
        self.state
            .as_ref()
            .map(|s| s.observation(self.config.max_clauses))
            .unwrap_or_else(|| Observation {
                real_obs: Vec::new(),
                action_mask: vec![0.0; self.config.max_clauses],
            })
    }

    fn push_clause(&mut self, clause: Clause) -> Result<(), EnvError> {
        let state = self.state.as_mut().expect("state present while stepping");
        if self.index_of.contains_key(clause.label()) {
            return Err(BackendError::Protocol {
                backend: self.backend.name().to_string(),
                message: format!("clause label `{}` reused", clause.label()),
            }
            .into());
        }
        self.index_of
            .insert(clause.label().to_string(), state.clauses.len());
        state.selectable.push(!clause.is_empty());
        state.clauses.push(Arc::new(clause));
        Ok(())
    }

    fn outcome(&self, reward: f64, terminated: bool, truncated: bool) -> StepOutcome<Observation> {
        StepOutcome {
            observation: self.observation(),
            reward,
            terminated,
            truncated,
            info: Info::new(),
        }
    }
}

impl Environment for SaturationEnv {
    type Action = usize;
    type Observation = Observation;

    /// Restarts the backend on the current task. The seed is only recorded:
    /// nothing in the core loop consumes randomness.
    fn reset(&mut self, seed: Option<u64>) -> Result<(Observation, Info), EnvError> {
        let inputs = self.problem.clauses.len();
        if inputs > self.config.max_clauses {
            return Err(EnvError::TaskTooLarge {
                inputs,
                max_clauses: self.config.max_clauses,
            });
        }
        self.state = None;
        self.done = true;
        let initial = self.backend.start(&self.problem)?;
        self.seed = seed;
        self.index_of.clear();
        self.state = Some(ProofState::default());
        for clause in initial {
            self.push_clause(clause.with_birth_step(0))?;
        }
        let state = self.state.as_ref().expect("just set");
        self.done = state.has_empty_clause() || !state.any_selectable();
        Ok((self.observation(), Info::new()))
    }

    fn step(&mut self, action: usize) -> Result<StepOutcome<Observation>, EnvError> {
        let state = self.state.as_ref().ok_or(EnvError::NotReset)?;
        if self.done {
            return Err(EnvError::EpisodeFinished);
        }
        if action >= self.config.max_clauses
            || !state.selectable.get(action).copied().unwrap_or(false)
        {
            return Err(EnvError::InvalidAction { action });
        }
        let label = state.clauses[action].label().to_string();

        let reply = match self.backend.select(&label) {
            Ok(reply) => reply,
            Err(e) if e.is_disconnect() => {
                log::error!("{e}; ending the episode");
                let state = self.state.as_mut().expect("checked above");
                state.step_count += 1;
                state.selectable[action] = false;
                self.done = true;
                return Ok(self.outcome(0.0, true, false));
            }
            Err(e) => {
                // the backend is in an unknown state now
                self.done = true;
                return Err(e.into());
            }
        };

        let step = {
            let state = self.state.as_mut().expect("checked above");
            state.step_count += 1;
            state.selectable[action] = false;
            state.step_count
        };
        let mut refuted = false;
        for clause in reply.new_clauses {
            refuted |= clause.is_empty();
            if let Err(e) = self.push_clause(clause.with_birth_step(step)) {
                self.done = true;
                return Err(e);
            }
        }
        let state = self.state.as_mut().expect("checked above");
        for label in &reply.eliminated_labels {
            match self.index_of.get(label) {
                Some(&i) => state.selectable[i] = false,
                None => log::warn!("backend eliminated unknown clause `{label}`"),
            }
        }
        if reply.status == ProverStatus::Saturated {
            state.selectable.iter_mut().for_each(|s| *s = false);
        }

        let terminated = state.has_empty_clause() || !state.any_selectable();
        let truncated = !terminated && state.len() > self.config.max_clauses;
        self.done = terminated || truncated;
        let reward = if refuted { 1.0 } else { 0.0 };
        Ok(self.outcome(reward, terminated, truncated))
    }

    fn render(&mut self, mode: RenderMode) -> Result<Option<String>, EnvError> {
        let state = self.state.as_ref().ok_or(EnvError::NotReset)?;
        let text = state.render(self.config.verbose_render);
        match mode {
            RenderMode::Ansi => Ok(Some(text)),
            RenderMode::Human => {
                print!("{text}");
                Ok(None)
            }
        }
    }

    fn max_clauses(&self) -> usize {
        self.config.max_clauses
    }

    fn seed(&self) -> Option<u64> {
        self.seed
    }
}

impl Drop for SaturationEnv {
    fn drop(&mut self) {
        self.backend.stop();
    }
}
