//! Inputs shared by the benchmarks.

use satgym_core::Term;

/// `f(g(X), f(Y, a))`-style pair nested `depth` times on each side.
pub fn nested_pair(depth: usize) -> (Term, Term) {
    let mut left = Term::var("X");
    let mut right = Term::constant("a");
    for i in 0..depth {
        left = Term::app("f", vec![left, Term::var(format!("Y{i}"))]);
        right = Term::app("f", vec![right, Term::app("g", vec![Term::constant("b")])]);
    }
    (left, right)
}

/// The associativity axiom of the bundled group task.
pub const WIDE_CLAUSE: &str =
    "~product(X,Y,U) | ~product(Y,Z,V) | ~product(U,Z,W) | product(X,V,W)";
