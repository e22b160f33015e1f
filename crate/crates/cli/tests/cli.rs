use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn satgym(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_satgym"))
        .args(args)
        .current_dir(env!("CARGO_MANIFEST_DIR"))
        .output()
        .unwrap()
}

fn data(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../core/data")
        .join(name)
}

fn code(args: &[&str]) -> i32 {
    satgym(args).status.code().unwrap()
}

#[test]
fn exit_codes_separate_validation_from_runtime() {
    let contradiction = data("contradiction.p");
    let p = contradiction.to_str().unwrap();
    assert_eq!(code(&["run", "--problem", p]), 0);
    assert_eq!(code(&["run", "--agent", "ppo"]), 1);
    assert_eq!(code(&["run", "--wrapper", "tree"]), 1);
    assert_eq!(code(&["run", "--backend", "hal"]), 1);
    assert_eq!(
        code(&["run", "--agent", "thompson", "--wrapper", "none"]),
        1
    );
    assert_eq!(code(&["run", "--max-clauses", "0"]), 1);
    assert_eq!(code(&["run", "--problem", "no/such/file.p"]), 1);
    assert_eq!(code(&["run", "--frobnicate"]), 1);
    assert_eq!(code(&["fly"]), 1);
    assert_eq!(code(&["--help"]), 0);
    assert_eq!(code(&["run", "--max-clauses", "1", "--problem", p]), 2);
    assert_eq!(
        code(&[
            "run",
            "--problem",
            p,
            "--backend",
            "stdio",
            "--prover",
            "/nonexistent/prover"
        ]),
        2
    );
}

#[test]
fn zero_episodes_write_an_empty_file() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("stats.jsonl");
    let status = satgym(&["run", "--episodes", "0", "--out", out.to_str().unwrap()]);
    assert!(status.status.success());
    assert_eq!(std::fs::read_to_string(out).unwrap(), "");
}

#[test]
fn statistics_are_episode_and_series_lines() {
    let p = data("queue_separation.p");
    let out = satgym(&[
        "run",
        "--problem",
        p.to_str().unwrap(),
        "--agent",
        "thompson",
        "--max-clauses",
        "15",
        "--episodes",
        "5",
        "--seed",
        "3",
    ]);
    assert!(out.status.success());
    let lines: Vec<serde_json::Value> = String::from_utf8(out.stdout)
        .unwrap()
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect();
    assert_eq!(lines.len(), 10);
    let mut steps = 0;
    for (i, pair) in lines.chunks(2).enumerate() {
        let (record, point) = (&pair[0], &pair[1]);
        assert_eq!(record["record"], "episode");
        assert_eq!(record["episode"], i);
        let reward = record["reward"].as_f64().unwrap();
        let cause = record["end_cause"].as_str().unwrap();
        assert_eq!(reward == 1.0, cause == "terminated_refutation");
        let arms: Vec<u64> = serde_json::from_value(record["arm_counts"].clone()).unwrap();
        assert_eq!(arms.iter().sum::<u64>(), record["steps"].as_u64().unwrap());
        steps += record["steps"].as_u64().unwrap();
        assert_eq!(point["record"], "series");
        assert_eq!(point["total_steps"], steps);
    }
}

#[test]
fn same_seed_gives_byte_identical_statistics() {
    let dir = tempfile::tempdir().unwrap();
    let p = data("queue_separation.p");
    let run = |name: &str, seed: &str| {
        let out = dir.path().join(name);
        let status = satgym(&[
            "run",
            "--problem",
            p.to_str().unwrap(),
            "--max-clauses",
            "15",
            "--episodes",
            "20",
            "--seed",
            seed,
            "--agent",
            "thompson",
            "--out",
            out.to_str().unwrap(),
        ]);
        assert!(status.status.success());
        std::fs::read(out).unwrap()
    };
    let a = run("a.jsonl", "42");
    let b = run("b.jsonl", "42");
    assert!(!a.is_empty());
    assert_eq!(a, b);
    assert_ne!(a, run("c.jsonl", "43"));
}

#[test]
fn relay_backend_runs_episodes() {
    let p = data("set_membership.p");
    let out = satgym(&[
        "run",
        "--backend",
        "relay",
        "--problem",
        p.to_str().unwrap(),
        "--episodes",
        "3",
        "--max-clauses",
        "200",
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    assert_eq!(String::from_utf8(out.stdout).unwrap().lines().count(), 6);
}
