use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use satgym_core::clause::is_input_rule;
use satgym_core::conformance::{check_random_episode, CheckConfig};
use satgym_core::external::relay::{embedded_launcher, RelayBackendConfig};
use satgym_core::{
    fixtures, Backend, BackendConfig, BackendError, Clause, EnvConfig, EnvError, Environment,
    Problem, RenderMode, SaturationEnv, SelectResult,
};

fn env_for(fixture: &str, max_clauses: usize, backend: BackendConfig) -> SaturationEnv {
    let mut env = SaturationEnv::new(EnvConfig {
        max_clauses,
        backend,
        ..EnvConfig::default()
    })
    .unwrap();
    env.set_task(fixtures::fixture_path(fixture)).unwrap();
    env
}

fn conformance_episode(seed: u64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (name, _) = fixtures::ALL[rng.random_range(0..fixtures::ALL.len())];
    let inputs = fixtures::bundled(name).unwrap().clauses.len();
    let max_clauses = rng.random_range(inputs.max(5)..=60);
    let mut env = env_for(name, max_clauses, BackendConfig::Embedded);
    let report = check_random_episode(&mut env, &mut rng, CheckConfig::default())
        .unwrap_or_else(|v| panic!("{name} max {max_clauses} seed {seed}: {v}"));
    assert!(report.total_reward == 0.0 || report.total_reward == 1.0);
}

#[test]
fn conformance_across_fixtures_and_budgets() {
    for seed in 0..300 {
        conformance_episode(seed);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]
    #[test]
    fn conformance_holds_for_any_seed(seed in any::<u64>()) {
        conformance_episode(seed);
    }
}

#[test]
fn conformance_over_the_relay_backend() {
    let backend = BackendConfig::Relay(RelayBackendConfig {
        launcher: Some(embedded_launcher()),
        ..RelayBackendConfig::default()
    });
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for name in ["contradiction", "queue_separation", "set_membership"] {
        let mut env = env_for(name, 40, backend.clone());
        for _ in 0..3 {
            check_random_episode(&mut env, &mut rng, CheckConfig::default()).unwrap();
        }
    }
}

#[test]
fn default_task_starts_with_its_inputs() {
    let mut env = SaturationEnv::new(EnvConfig::default()).unwrap();
    let (obs, info) = env.reset(None).unwrap();
    assert!(info.is_empty());
    assert_eq!(obs.real_obs.len(), fixtures::default_task().clauses.len());
    for c in &obs.real_obs {
        assert!(is_input_rule(c.inference_rule()), "{c}");
        assert_eq!(c.birth_step(), 0);
    }
    let (again, _) = env.reset(None).unwrap();
    assert_eq!(again, obs);
}

#[test]
fn set_task_loads_the_membership_problem() {
    let mut env = env_for("set_membership", 100, BackendConfig::Embedded);
    let (obs, _) = env.reset(Some(3)).unwrap();
    let expected = fixtures::bundled("set_membership").unwrap().clauses;
    let got: Vec<&str> = obs.real_obs.iter().map(|c| c.literals()).collect();
    let want: Vec<&str> = expected.iter().map(|c| c.literals()).collect();
    assert_eq!(got, want);
    assert_eq!(env.seed(), Some(3));
}

#[test]
fn reset_after_a_finished_episode_starts_over() {
    let mut env = env_for("contradiction", 10, BackendConfig::Embedded);
    env.reset(None).unwrap();
    env.step(0).unwrap();
    let out = env.step(1).unwrap();
    assert!(out.terminated && out.reward == 1.0);
    assert!(matches!(env.step(0), Err(EnvError::EpisodeFinished)));
    let (obs, _) = env.reset(None).unwrap();
    assert_eq!(obs.real_obs.len(), 2);
    assert_eq!(env.state().unwrap().step_count, 0);
}

#[test]
fn human_render_prints_and_returns_nothing() {
    let mut env = env_for("contradiction", 10, BackendConfig::Embedded);
    assert!(matches!(
        env.render(RenderMode::Ansi),
        Err(EnvError::NotReset)
    ));
    env.reset(None).unwrap();
    assert_eq!(env.render(RenderMode::Human).unwrap(), None);
    assert!("vga".parse::<RenderMode>().is_err());
}

/// Emits one clause, then fails its first selection with `error`.
struct FailingBackend {
    error: fn() -> BackendError,
}

impl Backend for FailingBackend {
    fn name(&self) -> &str {
        "failing"
    }

    fn start(&mut self, _: &Problem) -> Result<Vec<Clause>, BackendError> {
        Ok(vec![
            Clause::parse("1", "axiom", "p(a)").unwrap(),
            Clause::parse("2", "axiom", "q(a)").unwrap(),
        ])
    }

    fn select(&mut self, _: &str) -> Result<SelectResult, BackendError> {
        Err((self.error)())
    }
}

#[test]
fn lost_backend_ends_the_episode_without_reward() {
    let backend = FailingBackend {
        error: || BackendError::Disconnected {
            backend: "failing".into(),
            message: "eof".into(),
        },
    };
    let mut env = SaturationEnv::with_backend(EnvConfig::default(), Box::new(backend)).unwrap();
    env.reset(None).unwrap();
    let out = env.step(0).unwrap();
    assert!(out.terminated && !out.truncated);
    assert_eq!(out.reward, 0.0);
    assert!(matches!(env.step(1), Err(EnvError::EpisodeFinished)));
}

#[test]
fn other_backend_errors_surface_and_end_the_episode() {
    let backend = FailingBackend {
        error: || BackendError::Protocol {
            backend: "failing".into(),
            message: "garbage".into(),
        },
    };
    let mut env = SaturationEnv::with_backend(EnvConfig::default(), Box::new(backend)).unwrap();
    env.reset(None).unwrap();
    assert!(matches!(
        env.step(0),
        Err(EnvError::Backend(BackendError::Protocol { .. }))
    ));
    assert!(env.is_done());
}

#[test]
fn saturation_clears_the_mask() {
    let mut env = env_for("satisfiable", 10, BackendConfig::Embedded);
    let (mut obs, _) = env.reset(None).unwrap();
    let mut steps = 0;
    loop {
        let action = obs.action_mask.iter().position(|&m| m == 1.0).unwrap();
        let out = env.step(action).unwrap();
        steps += 1;
        if out.is_done() {
            assert!(out.terminated && out.reward == 0.0);
            assert!(out.observation.action_mask.iter().all(|&m| m == 0.0));
            break;
        }
        obs = out.observation;
    }
    assert!(steps <= 4);
}
