//! Syntactic unification with occurs check.

use std::collections::BTreeMap;
use std::fmt;

use crate::clause::{Literal, Term};

/// Variable bindings. Kept idempotent: no bound variable occurs in any
/// image, so a single application is a full application.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Substitution {
    bindings: BTreeMap<String, Term>,
}

impl Substitution {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn is_empty(&self) -> bool {
        self.bindings.is_empty()
    }

    pub fn len(&self) -> usize {
        self.bindings.len()
    }

    pub fn get(&self, var: &str) -> Option<&Term> {
        self.bindings.get(var)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &Term)> {
        self.bindings.iter().map(|(k, v)| (k.as_str(), v))
    }

    pub fn apply(&self, term: &Term) -> Term {
        if self.bindings.is_empty() {
            return term.clone();
        }
        match term {
            Term::Var(v) => self
                .bindings
                .get(v)
                .cloned()
                .unwrap_or_else(|| term.clone()),
            Term::App(f, args) => {
                Term::App(f.clone(), args.iter().map(|a| self.apply(a)).collect())
            }
        }
    }

    pub fn apply_literal(&self, lit: &Literal) -> Literal {
        Literal::new(lit.negated, self.apply(&lit.atom))
    }

    /// Adds `var ↦ term`, where `term` is already normalized by `self` and
    /// does not contain `var`.
    fn bind(&mut self, var: String, term: Term) {
        let single = Substitution {
            bindings: BTreeMap::from([(var.clone(), term.clone())]),
        };
        for image in self.bindings.values_mut() {
            if image.contains_var(&var) {
                *image = single.apply(image);
            }
        }
        self.bindings.insert(var, term);
    }
}

impl fmt::Display for Substitution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("{")?;
        for (i, (v, t)) in self.bindings.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{v} -> {t}")?;
        }
        f.write_str("}")
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum UnifyFailure {
    /// Different head symbols or arities.
    Clash { left: String, right: String },
    /// A variable would have to occur inside its own binding.
    Occurs { var: String, term: Term },
}

/// Most general unifier of `s` and `t`.
pub fn unify(s: &Term, t: &Term) -> Result<Substitution, UnifyFailure> {
    let mut subst = Substitution::new();
    unify_into(s, t, &mut subst)?;
    Ok(subst)
}

/// Extends `subst` so that it also unifies `s` and `t`.
pub fn unify_into(s: &Term, t: &Term, subst: &mut Substitution) -> Result<(), UnifyFailure> {
    let mut pending = vec![(s.clone(), t.clone())];
    while let Some((a, b)) = pending.pop() {
        let a = subst.apply(&a);
        let b = subst.apply(&b);
        match (a, b) {
            (a, b) if a == b => {}
            (Term::Var(v), other) | (other, Term::Var(v)) => {
                if other.contains_var(&v) {
                    return Err(UnifyFailure::Occurs {
                        var: v,
                        term: other,
                    });
                }
                subst.bind(v, other);
            }
            (Term::App(f, fa), Term::App(g, ga)) => {
                if f != g || fa.len() != ga.len() {
                    return Err(UnifyFailure::Clash {
                        left: format!("{f}/{}", fa.len()),
                        right: format!("{g}/{}", ga.len()),
                    });
                }
                // reversed so pairs are solved left to right
                pending.extend(fa.into_iter().zip(ga).rev());
            }
        }
    }
    Ok(())
}
