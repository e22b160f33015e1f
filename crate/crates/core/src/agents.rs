//! Agents: a masked-random clause picker and two arm choosers for the
//! queue-choice environment.

use rand::seq::IndexedRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Beta, Distribution};
use thiserror::Error;

use crate::env::ProofObservation;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AgentError {
    #[error("terminal reward must be 0 or 1, got {0}")]
    RewardOutOfRange(f64),
    #[error("arm {arm} out of range for {arms} arms")]
    NoSuchArm { arm: usize, arms: usize },
}

/// A policy driven by [`crate::experiment::run_episode`].
pub trait Agent<O> {
    fn name(&self) -> &str;

    /// Number of arms when actions are queue choices.
    fn arms(&self) -> Option<usize> {
        None
    }

    fn begin_episode(&mut self, _rng: &mut ChaCha8Rng) {}

    /// `None` when the agent sees nothing it can do.
    fn act(&mut self, observation: &O, rng: &mut ChaCha8Rng) -> Option<usize>;

    /// Called once with the episode's final reward.
    fn end_episode(&mut self, _reward: f64) -> Result<(), AgentError> {
        Ok(())
    }
}

impl<O, A: Agent<O> + ?Sized> Agent<O> for Box<A> {
    fn name(&self) -> &str {
        (**self).name()
    }

    fn arms(&self) -> Option<usize> {
        (**self).arms()
    }

    fn begin_episode(&mut self, rng: &mut ChaCha8Rng) {
        (**self).begin_episode(rng)
    }

    fn act(&mut self, observation: &O, rng: &mut ChaCha8Rng) -> Option<usize> {
        (**self).act(observation, rng)
    }

    fn end_episode(&mut self, reward: f64) -> Result<(), AgentError> {
        (**self).end_episode(reward)
    }
}

/// Picks uniformly among the selectable clause indices.
#[derive(Debug, Clone, Copy, Default)]
pub struct MaskedRandom;

impl<O: ProofObservation> Agent<O> for MaskedRandom {
    fn name(&self) -> &str {
        "random"
    }

    fn act(&mut self, observation: &O, rng: &mut ChaCha8Rng) -> Option<usize> {
        observation.selectable_indices().choose(rng).copied()
    }
}

/// Draws one arm uniformly per episode and plays it throughout.
#[derive(Debug, Clone)]
pub struct RandomArm {
    arms: usize,
    current: usize,
}

impl RandomArm {
    pub fn new(arms: usize) -> Self {
        assert!(arms > 0, "need at least one arm");
        RandomArm { arms, current: 0 }
    }
}

impl<O> Agent<O> for RandomArm {
    fn name(&self) -> &str {
        "random"
    }

    fn arms(&self) -> Option<usize> {
        Some(self.arms)
    }

    fn begin_episode(&mut self, rng: &mut ChaCha8Rng) {
        self.current = rng.random_range(0..self.arms);
    }

    fn act(&mut self, _observation: &O, _rng: &mut ChaCha8Rng) -> Option<usize> {
        Some(self.current)
    }
}

/// Beta posterior per arm over the probability of a proof.
#[derive(Debug, Clone, PartialEq)]
pub struct ThompsonState {
    pub alpha: Vec<f64>,
    pub beta: Vec<f64>,
}

impl ThompsonState {
    /// Every arm starts at Beta(1, 1).
    pub fn new(arms: usize) -> Self {
        ThompsonState {
            alpha: vec![1.0; arms],
            beta: vec![1.0; arms],
        }
    }

    pub fn arms(&self) -> usize {
        self.alpha.len()
    }
}

/// Samples a success rate per arm and returns the argmax (lowest index on
/// ties).
pub fn thompson_act(state: &ThompsonState, rng: &mut ChaCha8Rng) -> usize {
    let mut best = (0, f64::NEG_INFINITY);
    for (arm, (&a, &b)) in state.alpha.iter().zip(&state.beta).enumerate() {
        let theta = Beta::new(a, b).expect("parameters stay >= 1").sample(rng);
        if theta > best.1 {
            best = (arm, theta);
        }
    }
    best.0
}

pub fn thompson_update(
    state: &mut ThompsonState,
    arm: usize,
    reward: f64,
) -> Result<(), AgentError> {
    if arm >= state.arms() {
        return Err(AgentError::NoSuchArm {
            arm,
            arms: state.arms(),
        });
    }
    if reward == 1.0 {
        state.alpha[arm] += 1.0;
    } else if reward == 0.0 {
        state.beta[arm] += 1.0;
    } else {
        return Err(AgentError::RewardOutOfRange(reward));
    }
    Ok(())
}

/// Thompson sampling over arms, one arm per episode, learning from the
/// terminal reward.
#[derive(Debug, Clone)]
pub struct Thompson {
    pub state: ThompsonState,
    current: usize,
}

impl Thompson {
    pub fn new(arms: usize) -> Self {
        assert!(arms > 0, "need at least one arm");
        Thompson {
            state: ThompsonState::new(arms),
            current: 0,
        }
    }
}

impl<O> Agent<O> for Thompson {
    fn name(&self) -> &str {
        "thompson"
    }

    fn arms(&self) -> Option<usize> {
        Some(self.state.arms())
    }

    fn begin_episode(&mut self, rng: &mut ChaCha8Rng) {
        self.current = thompson_act(&self.state, rng);
    }

    fn act(&mut self, _observation: &O, _rng: &mut ChaCha8Rng) -> Option<usize> {
        Some(self.current)
    }

    fn end_episode(&mut self, reward: f64) -> Result<(), AgentError> {
        thompson_update(&mut self.state, self.current, reward)
    }
}
