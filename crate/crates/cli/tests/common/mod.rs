#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::time::Duration;

use satgym_core::external::stdio::StdioAdapterConfig;
use satgym_core::wrappers::{bandit_map_action, BanditArm};
use satgym_core::{fixtures, BackendConfig, EnvConfig, Environment, SaturationEnv};

pub fn manifest() -> &'static Path {
    Path::new(env!("CARGO_MANIFEST_DIR"))
}

pub fn fixture(name: &str) -> PathBuf {
    manifest().join("tests/fixtures").join(name)
}

pub fn double() -> String {
    env!("CARGO_BIN_EXE_satgym-prover-double").to_string()
}

/// Environment on the stdio backend, with the test double as the prover.
pub fn stdio_env(args: Vec<String>, max_clauses: usize) -> SaturationEnv {
    let mut config = StdioAdapterConfig::new(double(), args);
    config.timeout = Duration::from_secs(10);
    SaturationEnv::new(EnvConfig {
        max_clauses,
        backend: BackendConfig::Stdio(config),
        ..EnvConfig::default()
    })
    .unwrap()
}

/// Runs the lightest-first policy against the recorded group transcript.
/// Returns the step that found the proof.
pub fn replay_golden_episode() -> Result<usize, String> {
    let transcript = fixture("group_idempotent.transcript")
        .to_string_lossy()
        .into_owned();
    let mut env = stdio_env(vec!["replay".into(), transcript, "{problem}".into()], 200);
    let (mut obs, _) = env.reset(None).map_err(|e| e.to_string())?;
    let inputs = fixtures::default_task().clauses;
    if obs.real_obs.len() != inputs.len() {
        return Err("initial clauses differ from the task inputs".into());
    }
    for (got, want) in obs.real_obs.iter().zip(&inputs) {
        if got.parsed_literals() != want.parsed_literals()
            || got.label() != want.label()
            || got.role() != want.role()
        {
            return Err(format!("initial clause {got} differs from {want}"));
        }
    }
    for step in 1..=20 {
        let action = bandit_map_action(&obs, BanditArm::Weight).map_err(|e| e.to_string())?;
        let out = env.step(action).map_err(|e| e.to_string())?;
        if out.is_done() {
            return if out.terminated && out.reward == 1.0 {
                Ok(step)
            } else {
                Err(format!("episode ended without a proof at step {step}"))
            };
        }
        obs = out.observation;
    }
    Err("no proof within 20 steps".into())
}
