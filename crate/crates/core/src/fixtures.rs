//! Problems bundled with the crate.

use std::path::PathBuf;

use crate::tptp::{Problem, ProblemError};

/// Any idempotent group element equals the identity. The default task.
pub const GROUP_IDEMPOTENT: &str = include_str!("../data/group_idempotent.p");
/// Members of `b` are members of `bb` when the two sets are equal.
pub const SET_MEMBERSHIP: &str = include_str!("../data/set_membership.p");
/// `p` and `~p`.
pub const CONTRADICTION: &str = include_str!("../data/contradiction.p");
/// Lightest-first refutes inside a 15-clause budget; oldest-first does not.
pub const QUEUE_SEPARATION: &str = include_str!("../data/queue_separation.p");
/// Saturates without a proof.
pub const SATISFIABLE: &str = include_str!("../data/satisfiable.p");

/// (file stem, text) for every bundled problem.
pub const ALL: &[(&str, &str)] = &[
    ("group_idempotent", GROUP_IDEMPOTENT),
    ("set_membership", SET_MEMBERSHIP),
    ("contradiction", CONTRADICTION),
    ("queue_separation", QUEUE_SEPARATION),
    ("satisfiable", SATISFIABLE),
];

pub fn default_task() -> Problem {
    bundled("group_idempotent").expect("bundled problems parse")
}

/// Parses a bundled problem by file stem.
pub fn bundled(name: &str) -> Result<Problem, ProblemError> {
    let (stem, text) =
        ALL.iter()
            .find(|(stem, _)| *stem == name)
            .ok_or_else(|| ProblemError::Io {
                path: PathBuf::from(format!("{name}.p")),
                source: std::io::Error::new(
                    std::io::ErrorKind::NotFound,
                    "no such bundled problem",
                ),
            })?;
    Problem::parse_text(*stem, text)
}

/// On-disk location of a bundled problem inside the source tree.
pub fn fixture_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("data")
        .join(format!("{name}.p"))
}
