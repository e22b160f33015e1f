mod support;

use std::collections::HashMap;

use rand::seq::IndexedRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use satgym_core::prover::{FACTORING, RESOLUTION};
use satgym_core::{fixtures, Backend, Clause, EmbeddedProver, Problem, ProverStatus};
use support::Interpretation;

const MODELS: u64 = 48;
/// Model checks enumerate all variable assignments, so wider clauses are
/// only checked for bookkeeping.
const MAX_VARS: usize = 10;

fn var_count(clause: &Clause) -> usize {
    let mut vars = std::collections::BTreeSet::new();
    for l in clause.parsed_literals() {
        vars.extend(support::vars_of(&l.atom));
    }
    vars.len()
}

/// Derived clauses must hold in every two-element model of their parents.
/// Returns whether the model check ran.
fn check_inference(clause: &Clause, state: &HashMap<String, Clause>) -> bool {
    let rule = clause.inference_rule();
    let parents = clause.inference_parents();
    match rule {
        r if r == RESOLUTION => assert_eq!(parents.len(), 2, "{clause}"),
        r if r == FACTORING => assert_eq!(parents.len(), 1, "{clause}"),
        other => panic!("unexpected rule {other}"),
    }
    let premises: Vec<&Clause> = parents
        .iter()
        .map(|p| {
            state
                .get(p)
                .unwrap_or_else(|| panic!("parent {p} of {clause} not in state"))
        })
        .collect();
    if premises
        .iter()
        .chain([&clause])
        .any(|c| var_count(c) > MAX_VARS)
    {
        return false;
    }
    for seed in 0..MODELS {
        let mut model = Interpretation::new(seed);
        if premises
            .iter()
            .all(|p| model.satisfies(p.parsed_literals()))
        {
            assert!(
                model.satisfies(clause.parsed_literals()),
                "{clause} fails in model {seed} of its parents"
            );
        }
    }
    true
}

fn random_run(problem: &Problem, seed: u64, max_steps: usize) -> (usize, usize) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut prover = EmbeddedProver::new();
    let initial = prover.start(problem).unwrap();
    let mut state: HashMap<String, Clause> = HashMap::new();
    let mut live: Vec<String> = Vec::new();
    for c in initial {
        live.push(c.label().to_string());
        state.insert(c.label().to_string(), c);
    }
    let mut derived = 0;
    let mut checked = 0;
    for _ in 0..max_steps {
        let Some(given) = live.choose(&mut rng).cloned() else {
            break;
        };
        live.retain(|l| *l != given);
        let result = prover.select(&given).unwrap();
        let refuted = result.new_clauses.iter().any(Clause::is_empty);
        assert_eq!(result.status == ProverStatus::Refutation, refuted);
        if result.status == ProverStatus::Saturated {
            assert!(result.new_clauses.is_empty());
        }
        for c in result.new_clauses {
            checked += usize::from(check_inference(&c, &state));
            assert!(!state.contains_key(c.label()), "label {} reused", c.label());
            live.push(c.label().to_string());
            state.insert(c.label().to_string(), c);
            derived += 1;
        }
        if result.status != ProverStatus::Running {
            break;
        }
    }
    (derived, checked)
}

#[test]
fn random_runs_are_sound_on_every_fixture() {
    let (mut derived, mut small, mut small_checked) = (0, 0, 0);
    for (name, _) in fixtures::ALL {
        let problem = fixtures::bundled(name).unwrap();
        for seed in 0..8 {
            let (d, checked) = random_run(&problem, seed, 12);
            derived += d;
            // the group axioms are too wide for exhaustive assignment
            if *name != "group_idempotent" {
                small += d;
                small_checked += checked;
            }
        }
    }
    assert!(derived > 300, "only {derived} clauses derived");
    assert!(
        small_checked * 10 >= small * 9,
        "model-checked {small_checked} of {small}"
    );
}

#[test]
fn inputs_hold_in_some_model_of_the_satisfiable_fixture() {
    let problem = fixtures::bundled("satisfiable").unwrap();
    let found = (0..256).any(|seed| {
        let mut model = Interpretation::new(seed);
        problem
            .clauses
            .iter()
            .all(|c| model.satisfies(c.parsed_literals()))
    });
    assert!(found);
}

/// Always gives the lowest unprocessed clause; returns the clause count at
/// the refutation, or None on saturation or when `budget` is exceeded.
fn breadth_first(problem: &Problem, budget: usize) -> Option<usize> {
    let mut prover = EmbeddedProver::new();
    let mut clauses: Vec<String> = prover
        .start(problem)
        .unwrap()
        .iter()
        .map(|c| c.label().to_string())
        .collect();
    let mut next = 0;
    while next < clauses.len() && clauses.len() <= budget {
        let result = prover.select(&clauses[next]).unwrap();
        next += 1;
        clauses.extend(result.new_clauses.iter().map(|c| c.label().to_string()));
        match result.status {
            ProverStatus::Refutation => return Some(clauses.len()),
            ProverStatus::Saturated => return None,
            ProverStatus::Running => {}
        }
    }
    None
}

#[test]
fn breadth_first_refutes_every_unsatisfiable_fixture() {
    for (name, _) in fixtures::ALL {
        let problem = fixtures::bundled(name).unwrap();
        let outcome = breadth_first(&problem, 5000);
        if *name == "satisfiable" {
            assert_eq!(outcome, None);
        } else {
            let size = outcome.unwrap_or_else(|| panic!("{name} not refuted"));
            assert!(size <= 5000, "{name}: {size}");
        }
    }
}

#[test]
fn renamed_duplicate_resolvent_is_not_added() {
    let problem = Problem::from_clauses(
        "dup",
        vec![
            Clause::parse("1", "axiom", "p(a)").unwrap(),
            Clause::parse("2", "axiom", "~p(X) | q(X)").unwrap(),
            Clause::parse("3", "axiom", "~p(Y) | q(Y)").unwrap(),
        ],
    );
    let mut prover = EmbeddedProver::new();
    prover.start(&problem).unwrap();
    prover.select("1").unwrap();
    let r = prover.select("2").unwrap();
    assert_eq!(r.new_clauses.len(), 1);
    assert_eq!(r.new_clauses[0].literals(), "q(a)");
    let r = prover.select("3").unwrap();
    assert!(r.new_clauses.is_empty());
    assert_eq!(prover.clauses().len(), 4);
}

#[test]
fn reselecting_or_unknown_labels_fail() {
    let problem = fixtures::bundled("contradiction").unwrap();
    let mut prover = EmbeddedProver::new();
    let labels: Vec<String> = prover
        .start(&problem)
        .unwrap()
        .iter()
        .map(|c| c.label().to_string())
        .collect();
    prover.select(&labels[0]).unwrap();
    assert!(prover.select(&labels[0]).is_err());
    assert!(prover.select("no_such_clause").is_err());
}
