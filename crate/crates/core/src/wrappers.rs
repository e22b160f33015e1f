//! Environment wrappers: queue-choice actions, a step limit, and
//! fixed-shape numeric observations.

use std::sync::Arc;

use crate::clause::{clause_weight, Clause};
use crate::embedding::{tptp_to_expr, Embedder};
use crate::env::{EnvError, Environment, Info, ProofObservation, RenderMode, StepOutcome};

/// The two priority queues of a classic given-clause loop.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BanditArm {
    /// Oldest clause first.
    Age = 0,
    /// Lightest clause first.
    Weight = 1,
}

impl BanditArm {
    pub const ALL: [BanditArm; 2] = [BanditArm::Age, BanditArm::Weight];

    pub fn index(self) -> usize {
        self as usize
    }
}

impl TryFrom<usize> for BanditArm {
    type Error = EnvError;

    fn try_from(arm: usize) -> Result<Self, EnvError> {
        match arm {
            0 => Ok(BanditArm::Age),
            1 => Ok(BanditArm::Weight),
            other => Err(EnvError::InvalidArm(other)),
        }
    }
}

/// The selectable clause at the head of the chosen queue: smallest
/// (birth step, index) for `Age`, smallest (weight, index) for `Weight`.
pub fn bandit_map_action<O: ProofObservation + ?Sized>(
    observation: &O,
    arm: BanditArm,
) -> Result<usize, EnvError> {
    let clauses = observation.clauses();
    let candidates = observation
        .selectable_indices()
        .into_iter()
        .filter(|&i| i < clauses.len());
    let best = match arm {
        BanditArm::Age => candidates.min_by_key(|&i| (clauses[i].birth_step(), i)),
        BanditArm::Weight => candidates.min_by_key(|&i| (clause_weight(&clauses[i]), i)),
    };
    best.ok_or(EnvError::NoSelectableClause)
}

/// Turns a clause-index environment into a two-armed one: the action is a
/// queue, mapped to a clause by [`bandit_map_action`].
#[derive(Debug)]
pub struct BanditWrapper<E: Environment> {
    inner: E,
    last: Option<E::Observation>,
}

impl<E> BanditWrapper<E>
where
    E: Environment<Action = usize>,
    E::Observation: ProofObservation + Clone,
{
    pub fn new(inner: E) -> Self {
        BanditWrapper { inner, last: None }
    }

    pub fn inner(&self) -> &E {
        &self.inner
    }

    pub fn inner_mut(&mut self) -> &mut E {
        &mut self.inner
    }

    pub fn into_inner(self) -> E {
        self.inner
    }
}

impl<E> Environment for BanditWrapper<E>
where
    E: Environment<Action = usize>,
    E::Observation: ProofObservation + Clone,
{
    type Action = usize;
    type Observation = E::Observation;

    fn reset(&mut self, seed: Option<u64>) -> Result<(Self::Observation, Info), EnvError> {
        self.last = None;
        let (obs, info) = self.inner.reset(seed)?;
        self.last = Some(obs.clone());
        Ok((obs, info))
    }

    fn step(&mut self, arm: usize) -> Result<StepOutcome<Self::Observation>, EnvError> {
        let arm = BanditArm::try_from(arm)?;
        let last = self.last.as_ref().ok_or(EnvError::NotReset)?;
        let action = bandit_map_action(last, arm)?;
        let outcome = self.inner.step(action)?;
        self.last = Some(outcome.observation.clone());
        Ok(outcome)
    }

    fn render(&mut self, mode: RenderMode) -> Result<Option<String>, EnvError> {
        self.inner.render(mode)
    }

    fn max_clauses(&self) -> usize {
        self.inner.max_clauses()
    }

    fn seed(&self) -> Option<u64> {
        self.inner.seed()
    }
}

/// Truncates episodes after a fixed number of steps.
#[derive(Debug)]
pub struct TimeLimit<E> {
    inner: E,
    limit: usize,
    steps: usize,
}

impl<E: Environment> TimeLimit<E> {
    pub fn new(inner: E, limit: usize) -> Result<Self, EnvError> {
        if limit == 0 {
            return Err(EnvError::Config("step limit must be positive".into()));
        }
        Ok(TimeLimit {
            inner,
            limit,
            steps: 0,
        })
    }

    pub fn inner(&self) -> &E {
        &self.inner
    }

    pub fn limit(&self) -> usize {
        self.limit
    }

    pub fn elapsed_steps(&self) -> usize {
        self.steps
    }
}

impl<E: Environment> Environment for TimeLimit<E> {
    type Action = E::Action;
    type Observation = E::Observation;

    fn reset(&mut self, seed: Option<u64>) -> Result<(Self::Observation, Info), EnvError> {
        self.steps = 0;
        self.inner.reset(seed)
    }

    fn step(&mut self, action: Self::Action) -> Result<StepOutcome<Self::Observation>, EnvError> {
        let mut outcome = self.inner.step(action)?;
        self.steps += 1;
        if self.steps >= self.limit && !outcome.terminated {
            outcome.truncated = true;
        }
        Ok(outcome)
    }

    fn render(&mut self, mode: RenderMode) -> Result<Option<String>, EnvError> {
        self.inner.render(mode)
    }

    fn max_clauses(&self) -> usize {
        self.inner.max_clauses()
    }

    fn seed(&self) -> Option<u64> {
        self.inner.seed()
    }
}

/// A `max_clauses × dim` matrix, one row per clause slot, alongside the
/// clauses and mask it was computed from.
#[derive(Debug, Clone, PartialEq)]
pub struct NumericObservation {
    pub rows: usize,
    pub dim: usize,
    /// Row-major, `rows * dim` entries. Rows past the live clauses are zero.
    pub data: Vec<f32>,
    pub action_mask: Vec<f64>,
    pub clauses: Vec<Arc<Clause>>,
}

impl NumericObservation {
    pub fn row(&self, i: usize) -> &[f32] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.dim)
    }

    fn from_rows<O: ProofObservation + ?Sized>(
        observation: &O,
        dim: usize,
        rows: &[Vec<f32>],
    ) -> Self {
        let slots = observation.action_mask().len();
        let mut data = vec![0.0; slots * dim];
        for (i, row) in rows.iter().take(slots).enumerate() {
            data[i * dim..(i + 1) * dim].copy_from_slice(row);
        }
        NumericObservation {
            rows: slots,
            dim,
            data,
            action_mask: observation.action_mask().to_vec(),
            clauses: observation.clauses().to_vec(),
        }
    }
}

impl ProofObservation for NumericObservation {
    fn clauses(&self) -> &[Arc<Clause>] {
        &self.clauses
    }

    fn action_mask(&self) -> &[f64] {
        &self.action_mask
    }
}

pub const FEATURE_DIM: usize = 9;

fn role_slot(role: &str) -> usize {
    match role {
        "axiom" | "input" => 0,
        "hypothesis" => 1,
        "negated_conjecture" => 2,
        _ => 3,
    }
}

/// `[age, weight, literals, negative literals, equality literals]`
/// followed by a one-hot role over {axiom/input, hypothesis,
/// negated_conjecture, other}.
pub fn extract_features(clause: &Clause, step_count: usize) -> [f32; FEATURE_DIM] {
    let lits = clause.parsed_literals();
    let mut out = [0.0; FEATURE_DIM];
    out[0] = step_count.saturating_sub(clause.birth_step()) as f32;
    out[1] = clause_weight(clause) as f32;
    out[2] = lits.len() as f32;
    out[3] = lits.iter().filter(|l| l.negated).count() as f32;
    out[4] = lits.iter().filter(|l| l.is_equality()).count() as f32;
    out[5 + role_slot(clause.role())] = 1.0;
    out
}

fn embed_clause<M: Embedder + ?Sized>(embedder: &M, clause: &Clause) -> Result<Vec<f32>, EnvError> {
    let fail = |message: String| EnvError::Embedding {
        label: clause.label().to_string(),
        message,
    };
    let expr = tptp_to_expr(clause.literals()).map_err(|e| fail(e.to_string()))?;
    let vector = embedder.embed(&expr).map_err(|e| fail(e.to_string()))?;
    if vector.len() != embedder.dim() {
        return Err(fail(format!(
            "expected {} entries, got {}",
            embedder.dim(),
            vector.len()
        )));
    }
    Ok(vector)
}

/// Embeds every live clause, processed or not, into a numeric observation.
pub fn embed_observation<O, M>(
    observation: &O,
    embedder: &M,
) -> Result<NumericObservation, EnvError>
where
    O: ProofObservation + ?Sized,
    M: Embedder + ?Sized,
{
    if observation.clauses().is_empty() {
        return Err(EnvError::NotReset);
    }
    let rows = observation
        .clauses()
        .iter()
        .take(observation.action_mask().len())
        .map(|c| embed_clause(embedder, c))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(NumericObservation::from_rows(
        observation,
        embedder.dim(),
        &rows,
    ))
}

/// Replaces observations with clause embeddings. Rows are cached per
/// episode, so each clause is embedded once.
pub struct EmbeddingWrapper<E, M> {
    inner: E,
    embedder: M,
    rows: Vec<Vec<f32>>,
}

impl<E, M> EmbeddingWrapper<E, M>
where
    E: Environment,
    E::Observation: ProofObservation,
    M: Embedder,
{
    pub fn new(inner: E, embedder: M) -> Self {
        EmbeddingWrapper {
            inner,
            embedder,
            rows: Vec::new(),
        }
    }

    pub fn embedder(&self) -> &M {
        &self.embedder
    }

    fn convert(&mut self, observation: &E::Observation) -> Result<NumericObservation, EnvError> {
        let clauses = observation.clauses();
        if clauses.is_empty() {
            return Err(EnvError::NotReset);
        }
        let live = clauses.len().min(observation.action_mask().len());
        for clause in &clauses[self.rows.len().min(live)..live] {
            let row = embed_clause(&self.embedder, clause)?;
            self.rows.push(row);
        }
        Ok(NumericObservation::from_rows(
            observation,
            self.embedder.dim(),
            &self.rows,
        ))
    }
}

impl<E, M> Environment for EmbeddingWrapper<E, M>
where
    E: Environment,
    E::Observation: ProofObservation,
    M: Embedder,
{
    type Action = E::Action;
    type Observation = NumericObservation;

    fn reset(&mut self, seed: Option<u64>) -> Result<(NumericObservation, Info), EnvError> {
        self.rows.clear();
        let (obs, info) = self.inner.reset(seed)?;
        Ok((self.convert(&obs)?, info))
    }

    fn step(&mut self, action: Self::Action) -> Result<StepOutcome<NumericObservation>, EnvError> {
        let outcome = self.inner.step(action)?;
        let observation = self.convert(&outcome.observation)?;
        Ok(outcome.map(|_| observation))
    }

    fn render(&mut self, mode: RenderMode) -> Result<Option<String>, EnvError> {
        self.inner.render(mode)
    }

    fn max_clauses(&self) -> usize {
        self.inner.max_clauses()
    }

    fn seed(&self) -> Option<u64> {
        self.inner.seed()
    }
}

/// Replaces observations with hand-coded clause features.
#[derive(Debug)]
pub struct FeatureWrapper<E> {
    inner: E,
    steps: usize,
}

impl<E> FeatureWrapper<E>
where
    E: Environment,
    E::Observation: ProofObservation,
{
    pub fn new(inner: E) -> Self {
        FeatureWrapper { inner, steps: 0 }
    }

    fn convert(&self, observation: &E::Observation) -> NumericObservation {
        let rows: Vec<Vec<f32>> = observation
            .clauses()
            .iter()
            .map(|c| extract_features(c, self.steps).to_vec())
            .collect();
        NumericObservation::from_rows(observation, FEATURE_DIM, &rows)
    }
}

impl<E> Environment for FeatureWrapper<E>
where
    E: Environment,
    E::Observation: ProofObservation,
{
    type Action = E::Action;
    type Observation = NumericObservation;

    fn reset(&mut self, seed: Option<u64>) -> Result<(NumericObservation, Info), EnvError> {
        self.steps = 0;
        let (obs, info) = self.inner.reset(seed)?;
        Ok((self.convert(&obs), info))
    }

    fn step(&mut self, action: Self::Action) -> Result<StepOutcome<NumericObservation>, EnvError> {
        let outcome = self.inner.step(action)?;
        self.steps += 1;
        let observation = self.convert(&outcome.observation);
        Ok(outcome.map(|_| observation))
    }

    fn render(&mut self, mode: RenderMode) -> Result<Option<String>, EnvError> {
        self.inner.render(mode)
    }

    fn max_clauses(&self) -> usize {
        self.inner.max_clauses()
    }

    fn seed(&self) -> Option<u64> {
        self.inner.seed()
    }
}
