//! Randomized checker for the environment contract. Plays one episode with
//! random legal actions, probing masked actions along the way, and
//! verifies every observable rule after each call.

use std::collections::HashSet;

use rand::seq::IndexedRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::env::{
    EnvError, Environment, Observation, ProofObservation, ProofState, RenderMode, SaturationEnv,
};
use crate::tptp::{parse_clause, parse_problem_str};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("step {step}: {message}")]
pub struct Violation {
    pub step: usize,
    pub message: String,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct EpisodeReport {
    pub steps: usize,
    pub total_reward: f64,
    pub terminated: bool,
    pub truncated: bool,
    pub masked_probes: usize,
}

#[derive(Debug, Clone, Copy)]
pub struct CheckConfig {
    /// Chance of probing a masked action before each legal one.
    pub probe_rate: f64,
    /// Give up (without failing) after this many steps.
    pub max_steps: usize,
}

impl Default for CheckConfig {
    fn default() -> Self {
        CheckConfig {
            probe_rate: 0.25,
            max_steps: 200,
        }
    }
}

struct Checker {
    step: usize,
    retired: HashSet<usize>,
    prev_mask: Vec<f64>,
    prev_len: usize,
}

impl Checker {
    fn fail<T>(&self, message: impl Into<String>) -> Result<T, Violation> {
        Err(Violation {
            step: self.step,
            message: message.into(),
        })
    }

    fn ensure(&self, ok: bool, message: impl FnOnce() -> String) -> Result<(), Violation> {
        if ok {
            Ok(())
        } else {
            self.fail(message())
        }
    }

    fn check_observation(
        &self,
        obs: &Observation,
        state: &ProofState,
        max_clauses: usize,
    ) -> Result<(), Violation> {
        self.ensure(obs.action_mask.len() == max_clauses, || {
            format!("mask length {} != {max_clauses}", obs.action_mask.len())
        })?;
        self.ensure(obs.real_obs.len() == state.len(), || {
            "real_obs differs from state".into()
        })?;
        for (i, &m) in obs.action_mask.iter().enumerate() {
            self.ensure(m == 0.0 || m == 1.0, || format!("mask[{i}] = {m}"))?;
            let expected = i < state.len() && state.selectable[i];
            self.ensure((m == 1.0) == expected, || {
                format!("mask[{i}] = {m} but selectable = {expected}")
            })?;
        }
        for (i, c) in obs.real_obs.iter().enumerate() {
            self.ensure(c.birth_step() <= state.step_count, || {
                format!(
                    "clause {i} born at {} after step {}",
                    c.birth_step(),
                    state.step_count
                )
            })?;
        }
        Ok(())
    }

    /// Per index, the mask may rise only when the clause is created and
    /// may never rise again once it fell.
    fn check_monotone(&mut self, mask: &[f64]) -> Result<(), Violation> {
        for (i, (&now, &before)) in mask.iter().zip(&self.prev_mask).enumerate() {
            if before == 1.0 && now == 0.0 {
                self.retired.insert(i);
            }
            if before == 0.0 && now == 1.0 {
                self.ensure(i >= self.prev_len && !self.retired.contains(&i), || {
                    format!("mask[{i}] rose from 0 to 1 for an existing clause")
                })?;
            }
        }
        self.prev_mask = mask.to_vec();
        Ok(())
    }

    fn check_render(&self, env: &mut SaturationEnv) -> Result<(), Violation> {
        let state = env.state().cloned().expect("reset");
        let text = match env.render(RenderMode::Ansi) {
            Ok(Some(t)) => t,
            other => return self.fail(format!("ansi render returned {other:?}")),
        };
        if env.config().verbose_render {
            let parsed = parse_problem_str(&text).map_err(|e| Violation {
                step: self.step,
                message: format!("render does not re-parse: {e}"),
            })?;
            self.ensure(parsed.len() == state.len(), || "render lost clauses".into())?;
            for (p, c) in parsed.iter().zip(&state.clauses) {
                self.ensure(
                    p.parsed_literals() == c.parsed_literals()
                        && p.label() == c.label()
                        && p.inference_parents() == c.inference_parents(),
                    || format!("render round trip changed `{c}` into `{p}`"),
                )?;
            }
        } else {
            let lines: Vec<&str> = text.lines().collect();
            self.ensure(lines.len() == state.len(), || "render lost clauses".into())?;
            for (line, c) in lines.iter().zip(&state.clauses) {
                let lits = parse_clause(line).map_err(|e| Violation {
                    step: self.step,
                    message: format!("render line `{line}` does not parse: {e}"),
                })?;
                self.ensure(lits == c.parsed_literals(), || {
                    format!("render changed `{c}`")
                })?;
            }
        }
        Ok(())
    }
}

fn masked_probe(rng: &mut ChaCha8Rng, mask: &[f64]) -> usize {
    let masked: Vec<usize> = (0..mask.len()).filter(|&i| mask[i] == 0.0).collect();
    match masked.choose(rng) {
        Some(&i) if rng.random_bool(0.8) => i,
        _ => mask.len() + rng.random_range(0..4),
    }
}

/// Plays one random episode on `env` and checks the contract throughout.
pub fn check_random_episode(
    env: &mut SaturationEnv,
    rng: &mut ChaCha8Rng,
    config: CheckConfig,
) -> Result<EpisodeReport, Violation> {
    let max_clauses = env.max_clauses();
    let seed = rng.random::<u64>();
    let mut checker = Checker {
        step: 0,
        retired: HashSet::new(),
        prev_mask: vec![0.0; max_clauses],
        prev_len: 0,
    };
    let (mut obs, info) = env.reset(Some(seed)).map_err(|e| Violation {
        step: 0,
        message: format!("reset failed: {e}"),
    })?;
    checker.ensure(info.is_empty(), || "reset info not empty".into())?;
    checker.ensure(env.seed() == Some(seed), || "seed not recorded".into())?;
    let state = env.state().cloned().expect("reset");
    checker.check_observation(&obs, &state, max_clauses)?;
    checker.ensure(obs.real_obs.iter().all(|c| c.birth_step() == 0), || {
        "input clause not born at 0".into()
    })?;
    checker.ensure(state.step_count == 0, || "reset left a step count".into())?;
    checker.check_monotone(&obs.action_mask)?;
    checker.prev_len = obs.real_obs.len();
    checker.check_render(env)?;

    let mut report = EpisodeReport::default();
    if env.is_done() {
        return Ok(report);
    }
    while report.steps < config.max_steps {
        checker.step = report.steps + 1;
        if rng.random_bool(config.probe_rate) {
            let before = env.state().cloned();
            let action = masked_probe(rng, &obs.action_mask);
            match env.step(action) {
                Err(EnvError::InvalidAction { action: a }) if a == action => {}
                other => return checker.fail(format!("masked action {action} gave {other:?}")),
            }
            checker.ensure(env.state().cloned() == before, || {
                "masked action changed the state".into()
            })?;
            report.masked_probes += 1;
        }

        let legal = obs.selectable_indices();
        let Some(&action) = legal.choose(rng) else {
            return checker.fail("episode live but nothing selectable");
        };
        let before_len = obs.real_obs.len();
        let out = match env.step(action) {
            Ok(out) => out,
            Err(e) => return checker.fail(format!("legal action {action} failed: {e}")),
        };
        report.steps += 1;
        let state = env.state().cloned().expect("reset");
        checker.ensure(out.info.is_empty(), || "info not empty".into())?;
        checker.ensure(state.step_count == report.steps, || {
            format!(
                "step count {} after {} steps",
                state.step_count, report.steps
            )
        })?;
        checker.check_observation(&out.observation, &state, max_clauses)?;
        checker.ensure(out.observation.action_mask[action] == 0.0, || {
            "given clause still selectable".into()
        })?;
        checker.ensure(
            out.observation.real_obs[..before_len] == obs.real_obs[..],
            || "existing clauses changed".into(),
        )?;
        let new = &out.observation.real_obs[before_len..];
        checker.ensure(new.iter().all(|c| c.birth_step() == report.steps), || {
            "new clause with wrong birth step".into()
        })?;
        checker.check_monotone(&out.observation.action_mask)?;
        checker.prev_len = out.observation.real_obs.len();

        let refuted_now = new.iter().any(|c| c.is_empty());
        checker.ensure(out.reward == if refuted_now { 1.0 } else { 0.0 }, || {
            format!(
                "reward {} with refutation this step = {refuted_now}",
                out.reward
            )
        })?;
        let has_empty = state.has_empty_clause();
        checker.ensure(
            out.terminated == (has_empty || !state.any_selectable()),
            || {
                format!(
                    "terminated = {} with empty clause = {has_empty}",
                    out.terminated
                )
            },
        )?;
        checker.ensure(
            out.truncated == (!out.terminated && state.len() > max_clauses),
            || format!("truncated = {} with {} clauses", out.truncated, state.len()),
        )?;
        report.total_reward += out.reward;

        if out.is_done() {
            checker.check_render(env)?;
            let before = env.state().cloned();
            match env.step(action) {
                Err(EnvError::EpisodeFinished) => {}
                other => return checker.fail(format!("step after the end gave {other:?}")),
            }
            checker.ensure(env.state().cloned() == before, || {
                "finished step changed the state".into()
            })?;
            checker.ensure(
                report.total_reward == if has_empty { 1.0 } else { 0.0 },
                || {
                    format!(
                        "total reward {} with empty clause = {has_empty}",
                        report.total_reward
                    )
                },
            )?;
            report.terminated = out.terminated;
            report.truncated = out.truncated;
            return Ok(report);
        }
        obs = out.observation;
    }
    Ok(report)
}
