//! Episode runner and experiment statistics.
//!
//! Seeds: episode `i` of a run with master seed `s` resets the environment
//! with seed `s + i` (wrapping) and draws agent randomness from ChaCha8
//! seeded with `s` on stream `i`.

use std::collections::VecDeque;
use std::fmt;
use std::io::Write;
use std::str::FromStr;
use std::time::{Duration, Instant};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use thiserror::Error;

use crate::agents::{Agent, AgentError, MaskedRandom, RandomArm, Thompson};
use crate::env::{
    EnvConfig, EnvError, Environment, Info, Observation, ProofObservation, RenderMode,
    SaturationEnv, StepOutcome,
};
use crate::wrappers::{BanditWrapper, TimeLimit};

/// Episodes averaged by each point of the reward series.
pub const SERIES_WINDOW: usize = 100;

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("invalid experiment: {0}")]
    Config(String),
    #[error(transparent)]
    Env(#[from] EnvError),
    #[error(transparent)]
    Agent(#[from] AgentError),
    #[error("cannot write statistics: {0}")]
    Io(#[from] std::io::Error),
}

impl ExperimentError {
    /// Configuration problems are detected before any episode runs.
    pub fn is_validation(&self) -> bool {
        matches!(self, ExperimentError::Config(_))
            || matches!(
                self,
                ExperimentError::Env(EnvError::Task(_) | EnvError::Config(_))
            )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum EndCause {
    TerminatedRefutation,
    TerminatedExhausted,
    TruncatedClauses,
    TruncatedSteps,
    /// The agent produced an action the environment refused.
    Aborted,
}

/// Statistics for one episode. `wall_time` is kept out of the statistics
/// file and out of equality so identical runs compare equal.
#[derive(Debug, Clone, Serialize)]
pub struct EpisodeRecord {
    pub episode: usize,
    pub seed: u64,
    pub steps: usize,
    pub reward: f64,
    pub end_cause: EndCause,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub arm_counts: Option<Vec<usize>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub diagnostic: Option<String>,
    #[serde(skip)]
    pub wall_time: Duration,
}

impl PartialEq for EpisodeRecord {
    fn eq(&self, other: &Self) -> bool {
        self.episode == other.episode
            && self.seed == other.seed
            && self.steps == other.steps
            && self.reward == other.reward
            && self.end_cause == other.end_cause
            && self.arm_counts == other.arm_counts
            && self.diagnostic == other.diagnostic
    }
}

/// Plays one episode from reset to its end.
pub fn run_episode<E, A>(
    env: &mut E,
    agent: &mut A,
    episode: usize,
    seed: u64,
    rng: &mut ChaCha8Rng,
) -> Result<EpisodeRecord, ExperimentError>
where
    E: Environment<Action = usize> + ?Sized,
    E::Observation: ProofObservation,
    A: Agent<E::Observation> + ?Sized,
{
    let started = Instant::now();
    let mut arm_counts = agent.arms().map(|n| vec![0usize; n]);
    let record = |steps, reward, end_cause, arm_counts, diagnostic| EpisodeRecord {
        episode,
        seed,
        steps,
        reward,
        end_cause,
        arm_counts,
        diagnostic,
        wall_time: started.elapsed(),
    };

    agent.begin_episode(rng);
    let (mut observation, _) = env.reset(Some(seed))?;
    let mut steps = 0;
    loop {
        if observation.selectable_indices().is_empty() {
            return Ok(record(
                steps,
                0.0,
                EndCause::Aborted,
                arm_counts,
                Some("no selectable clause".into()),
            ));
        }
        let Some(action) = agent.act(&observation, rng) else {
            return Ok(record(
                steps,
                0.0,
                EndCause::Aborted,
                arm_counts,
                Some("agent gave no action".into()),
            ));
        };
        let outcome = match env.step(action) {
            Ok(outcome) => outcome,
            Err(
                e @ (EnvError::InvalidAction { .. }
                | EnvError::InvalidArm(_)
                | EnvError::NoSelectableClause),
            ) => {
                return Ok(record(
                    steps,
                    0.0,
                    EndCause::Aborted,
                    arm_counts,
                    Some(e.to_string()),
                ));
            }
            Err(e) => return Err(e.into()),
        };
        steps += 1;
        if let Some(slot) = arm_counts.as_mut().and_then(|c| c.get_mut(action)) {
            *slot += 1;
        }
        if outcome.is_done() {
            let obs = &outcome.observation;
            let cause = if outcome.terminated {
                if outcome.reward == 1.0 {
                    EndCause::TerminatedRefutation
                } else {
                    EndCause::TerminatedExhausted
                }
            } else if obs.clauses().len() > obs.action_mask().len() {
                EndCause::TruncatedClauses
            } else {
                EndCause::TruncatedSteps
            };
            agent.end_episode(outcome.reward)?;
            return Ok(record(steps, outcome.reward, cause, arm_counts, None));
        }
        observation = outcome.observation;
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AgentKind {
    Random,
    Thompson,
}

impl FromStr for AgentKind {
    type Err = ExperimentError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "random" => Ok(AgentKind::Random),
            "thompson" => Ok(AgentKind::Thompson),
            other => Err(ExperimentError::Config(format!(
                "unknown agent `{other}` (random, thompson)"
            ))),
        }
    }
}

impl fmt::Display for AgentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            AgentKind::Random => "random",
            AgentKind::Thompson => "thompson",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WrapperKind {
    None,
    Bandit,
}

impl FromStr for WrapperKind {
    type Err = ExperimentError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "none" => Ok(WrapperKind::None),
            "bandit" => Ok(WrapperKind::Bandit),
            other => Err(ExperimentError::Config(format!(
                "unknown wrapper `{other}` (none, bandit)"
            ))),
        }
    }
}

#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub agent: AgentKind,
    /// Defaults to `bandit` for Thompson sampling and `none` otherwise.
    pub wrapper: Option<WrapperKind>,
    pub env: EnvConfig,
    pub episodes: usize,
    pub seed: u64,
    /// Optional step limit per episode.
    pub max_steps: Option<usize>,
}

impl ExperimentConfig {
    pub fn wrapper(&self) -> WrapperKind {
        self.wrapper.unwrap_or(match self.agent {
            AgentKind::Thompson => WrapperKind::Bandit,
            AgentKind::Random => WrapperKind::None,
        })
    }

    pub fn validate(&self) -> Result<(), ExperimentError> {
        if self.agent == AgentKind::Thompson && self.wrapper() != WrapperKind::Bandit {
            return Err(ExperimentError::Config(
                "thompson needs the bandit wrapper".into(),
            ));
        }
        if self.env.max_clauses == 0 {
            return Err(ExperimentError::Config(
                "max_clauses must be positive".into(),
            ));
        }
        if self.max_steps == Some(0) {
            return Err(ExperimentError::Config("max_steps must be positive".into()));
        }
        Ok(())
    }
}

/// One line of the statistics file.
#[derive(Debug, Clone, Serialize)]
#[serde(tag = "record", rename_all = "snake_case")]
pub enum StatsLine<'a> {
    Episode(&'a EpisodeRecord),
    Series {
        episode: usize,
        total_steps: usize,
        mean_reward: f64,
    },
}

#[derive(Debug, Clone, Default)]
pub struct ExperimentSummary {
    pub records: Vec<EpisodeRecord>,
    pub total_steps: usize,
}

impl ExperimentSummary {
    /// Mean reward over the last `n` episodes.
    pub fn tail_mean(&self, n: usize) -> f64 {
        let tail = &self.records[self.records.len().saturating_sub(n)..];
        if tail.is_empty() {
            return 0.0;
        }
        tail.iter().map(|r| r.reward).sum::<f64>() / tail.len() as f64
    }
}

pub type DynEnv = Box<dyn Environment<Action = usize, Observation = Observation>>;

impl<E: Environment + ?Sized> Environment for Box<E> {
    type Action = E::Action;
    type Observation = E::Observation;

    fn reset(&mut self, seed: Option<u64>) -> Result<(Self::Observation, Info), EnvError> {
        (**self).reset(seed)
    }

    fn step(&mut self, action: Self::Action) -> Result<StepOutcome<Self::Observation>, EnvError> {
        (**self).step(action)
    }

    fn render(&mut self, mode: RenderMode) -> Result<Option<String>, EnvError> {
        (**self).render(mode)
    }

    fn max_clauses(&self) -> usize {
        (**self).max_clauses()
    }

    fn seed(&self) -> Option<u64> {
        (**self).seed()
    }
}

/// Builds the environment stack an experiment runs on.
pub fn build_env(config: &ExperimentConfig) -> Result<DynEnv, ExperimentError> {
    let base = SaturationEnv::new(config.env.clone())?;
    let mut env: DynEnv = Box::new(base);
    if config.wrapper() == WrapperKind::Bandit {
        env = Box::new(BanditWrapper::new(env));
    }
    if let Some(limit) = config.max_steps {
        env = Box::new(TimeLimit::new(env, limit)?);
    }
    Ok(env)
}

fn build_agent(config: &ExperimentConfig) -> Box<dyn Agent<Observation>> {
    match (config.agent, config.wrapper()) {
        (AgentKind::Thompson, _) => Box::new(Thompson::new(2)),
        (AgentKind::Random, WrapperKind::Bandit) => Box::new(RandomArm::new(2)),
        (AgentKind::Random, WrapperKind::None) => Box::new(MaskedRandom),
    }
}

pub fn episode_rng(master: u64, episode: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master);
    rng.set_stream(episode as u64);
    rng
}

/// Runs the configured episodes, writing one JSON record per line: each
/// episode record is followed by a point of the running mean reward over
/// the last [`SERIES_WINDOW`] episodes, keyed by cumulative steps.
pub fn run_experiment(
    config: &ExperimentConfig,
    out: &mut dyn Write,
) -> Result<ExperimentSummary, ExperimentError> {
    config.validate()?;
    let env = build_env(config)?;
    run_experiment_on(config, env, out)
}

/// Like [`run_experiment`] on an environment already built from `config`.
pub fn run_experiment_on(
    config: &ExperimentConfig,
    mut env: DynEnv,
    out: &mut dyn Write,
) -> Result<ExperimentSummary, ExperimentError> {
    let mut agent = build_agent(config);
    let mut summary = ExperimentSummary::default();
    let mut window = VecDeque::with_capacity(SERIES_WINDOW);
    for episode in 0..config.episodes {
        let mut rng = episode_rng(config.seed, episode);
        let seed = config.seed.wrapping_add(episode as u64);
        let record = run_episode(&mut env, &mut agent, episode, seed, &mut rng)?;
        summary.total_steps += record.steps;
        if window.len() == SERIES_WINDOW {
            window.pop_front();
        }
        window.push_back(record.reward);
        let mean_reward = window.iter().sum::<f64>() / window.len() as f64;
        serde_json::to_writer(&mut *out, &StatsLine::Episode(&record))
            .map_err(std::io::Error::from)?;
        out.write_all(b"\n")?;
        let point = StatsLine::Series {
            episode,
            total_steps: summary.total_steps,
            mean_reward,
        };
        serde_json::to_writer(&mut *out, &point).map_err(std::io::Error::from)?;
        out.write_all(b"\n")?;
        summary.records.push(record);
    }
    out.flush()?;
    Ok(summary)
}
