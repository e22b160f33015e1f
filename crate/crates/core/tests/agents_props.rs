use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use satgym_core::agents::{
    thompson_act, thompson_update, Agent, AgentError, MaskedRandom, Thompson, ThompsonState,
};
use satgym_core::{fixtures, EnvConfig, Environment, SaturationEnv};

proptest! {
    #[test]
    fn posterior_counts_completed_updates(rewards in prop::collection::vec((0usize..3, any::<bool>()), 0..60)) {
        let mut state = ThompsonState::new(3);
        let mut counts = [0usize; 3];
        let mut successes = [0usize; 3];
        for &(arm, win) in &rewards {
            thompson_update(&mut state, arm, if win { 1.0 } else { 0.0 }).unwrap();
            counts[arm] += 1;
            successes[arm] += usize::from(win);
        }
        for arm in 0..3 {
            prop_assert_eq!(state.alpha[arm] + state.beta[arm] - 2.0, counts[arm] as f64);
            prop_assert_eq!(state.alpha[arm] - 1.0, successes[arm] as f64);
        }
    }

    #[test]
    fn thompson_choice_is_a_valid_arm(seed in any::<u64>(), arms in 1usize..6) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        prop_assert!(thompson_act(&ThompsonState::new(arms), &mut rng) < arms);
    }

    #[test]
    fn masked_random_only_picks_selectable_clauses(seed in any::<u64>()) {
        let mut env = SaturationEnv::new(EnvConfig { max_clauses: 60, ..EnvConfig::default() }).unwrap();
        env.set_task(fixtures::fixture_path("set_membership")).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut agent = MaskedRandom;
        let (mut obs, _) = env.reset(None).unwrap();
        for _ in 0..20 {
            let Some(a) = agent.act(&obs, &mut rng) else { break };
            prop_assert_eq!(obs.action_mask[a], 1.0);
            let out = env.step(a).unwrap();
            if out.is_done() {
                break;
            }
            obs = out.observation;
        }
    }
}

#[test]
fn rewards_outside_zero_one_are_refused() {
    let mut state = ThompsonState::new(2);
    assert_eq!(
        thompson_update(&mut state, 0, 0.5),
        Err(AgentError::RewardOutOfRange(0.5))
    );
    assert!(matches!(
        thompson_update(&mut state, 2, 1.0),
        Err(AgentError::NoSuchArm { .. })
    ));
    assert_eq!(state, ThompsonState::new(2));
}

#[test]
fn thompson_keeps_one_arm_per_episode() {
    let mut agent = Thompson::new(2);
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for episode in 0..50 {
        Agent::<()>::begin_episode(&mut agent, &mut rng);
        let first = agent.act(&(), &mut rng).unwrap();
        for _ in 0..5 {
            assert_eq!(agent.act(&(), &mut rng), Some(first));
        }
        Agent::<()>::end_episode(&mut agent, f64::from(u8::from(first == 1))).unwrap();
        let total: f64 = agent.state.alpha.iter().chain(&agent.state.beta).sum();
        assert_eq!(total, 4.0 + f64::from(episode + 1));
    }
    // arm 1 always wins, so it ends up preferred
    assert!(agent.state.alpha[1] > agent.state.alpha[0]);
}
