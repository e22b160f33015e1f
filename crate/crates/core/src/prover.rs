//! The embedded reference prover: binary resolution and factoring driven by
//! an external given-clause choice.
//!
//! Redundancy handling is limited to tautology deletion and variant
//! elimination; there is no subsumption and no equality reasoning beyond
//! treating `=` as an ordinary predicate.

use std::collections::{HashMap, HashSet};

use crate::backend::{Backend, BackendError, ProverStatus, SelectResult};
use crate::clause::{literals_are_tautology, normalize_variables, variant_key, Clause, Literal};
use crate::tptp::Problem;
use crate::unify::unify;

pub const RESOLUTION: &str = "resolution";
pub const FACTORING: &str = "factoring";
const DERIVED_ROLE: &str = "plain";

fn rename_apart(literals: &[Literal], prefix: &str) -> Vec<Literal> {
    let mut map = HashMap::new();
    for lit in literals {
        lit.atom.for_each_var(&mut |v| {
            if !map.contains_key(v) {
                let fresh = format!("{prefix}{}", map.len());
                map.insert(v.to_string(), fresh);
            }
        });
    }
    literals
        .iter()
        .map(|l| Literal::new(l.negated, l.atom.rename(&map)))
        .collect()
}

fn dedup_literals(literals: Vec<Literal>) -> Vec<Literal> {
    let mut out: Vec<Literal> = Vec::with_capacity(literals.len());
    for lit in literals {
        if !out.contains(&lit) {
            out.push(lit);
        }
    }
    out
}

fn may_resolve(a: &Literal, b: &Literal) -> bool {
    a.negated != b.negated && a.predicate() == b.predicate()
}

/// Binary resolvents of two literal sequences, one per unifiable
/// complementary pair, in (given literal, partner literal) order.
/// Variables of the results are normalized.
pub fn resolve_literals(given: &[Literal], partner: &[Literal]) -> Vec<Vec<Literal>> {
    let any = given
        .iter()
        .any(|g| partner.iter().any(|p| may_resolve(g, p)));
    if !any {
        return Vec::new();
    }
    let given = rename_apart(given, "A");
    let partner = rename_apart(partner, "B");
    let mut out = Vec::new();
    for (i, g) in given.iter().enumerate() {
        for (j, p) in partner.iter().enumerate() {
            if !may_resolve(g, p) {
                continue;
            }
            let Ok(mgu) = unify(&g.atom, &p.atom) else {
                continue;
            };
            let rest = given
                .iter()
                .enumerate()
                .filter(|&(k, _)| k != i)
                .chain(partner.iter().enumerate().filter(|&(k, _)| k != j))
                .map(|(_, l)| mgu.apply_literal(l))
                .collect();
            out.push(normalize_variables(&dedup_literals(rest)));
        }
    }
    out
}

/// Factors of a literal sequence, one per unifiable same-polarity pair.
pub fn factor_literals(literals: &[Literal]) -> Vec<Vec<Literal>> {
    let mut out = Vec::new();
    for i in 0..literals.len() {
        for j in i + 1..literals.len() {
            let (a, b) = (&literals[i], &literals[j]);
            if a.negated != b.negated || a.predicate() != b.predicate() {
                continue;
            }
            let Ok(mgu) = unify(&a.atom, &b.atom) else {
                continue;
            };
            let merged = literals
                .iter()
                .enumerate()
                .filter(|&(k, _)| k != j)
                .map(|(_, l)| mgu.apply_literal(l))
                .collect();
            out.push(normalize_variables(&dedup_literals(merged)));
        }
    }
    out
}

/// Resolvents of `given` against `partner` (which is renamed apart first).
pub fn resolvents(given: &Clause, partner: &Clause) -> Vec<Clause> {
    resolve_literals(given.parsed_literals(), partner.parsed_literals())
        .into_iter()
        .map(|lits| {
            Clause::new("", DERIVED_ROLE, lits).with_inference(
                RESOLUTION,
                vec![given.label().to_string(), partner.label().to_string()],
            )
        })
        .collect()
}

pub fn factors(clause: &Clause) -> Vec<Clause> {
    factor_literals(clause.parsed_literals())
        .into_iter()
        .map(|lits| {
            Clause::new("", DERIVED_ROLE, lits)
                .with_inference(FACTORING, vec![clause.label().to_string()])
        })
        .collect()
}

/// Given-clause saturation state with externally chosen given clauses.
#[derive(Debug, Default)]
pub struct EmbeddedProver {
    clauses: Vec<Clause>,
    by_label: HashMap<String, usize>,
    processed: Vec<usize>,
    is_processed: Vec<bool>,
    seen: HashSet<Vec<Literal>>,
    next_label: usize,
    started: bool,
}

impl EmbeddedProver {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn clauses(&self) -> &[Clause] {
        &self.clauses
    }

    pub fn clause(&self, label: &str) -> Option<&Clause> {
        self.by_label.get(label).map(|&i| &self.clauses[i])
    }

    pub fn processed_labels(&self) -> impl Iterator<Item = &str> {
        self.processed.iter().map(|&i| self.clauses[i].label())
    }

    pub fn unprocessed_count(&self) -> usize {
        self.clauses.len() - self.processed.len()
    }

    fn fresh_label(&mut self) -> String {
        loop {
            self.next_label += 1;
            let label = self.next_label.to_string();
            if !self.by_label.contains_key(&label) {
                return label;
            }
        }
    }

    fn register(&mut self, clause: Clause) {
        self.seen.insert(variant_key(clause.parsed_literals()));
        self.by_label
            .insert(clause.label().to_string(), self.clauses.len());
        self.clauses.push(clause);
        self.is_processed.push(false);
    }

    /// Generating inferences for one given clause, in the fixed order:
    /// resolvents against processed clauses, self-resolvents, factors.
    fn inferences(&self, given: usize) -> Vec<Clause> {
        let g = &self.clauses[given];
        let mut out = Vec::new();
        for &p in &self.processed {
            out.extend(resolvents(g, &self.clauses[p]));
        }
        out.extend(resolvents(g, g));
        out.extend(factors(g));
        out
    }
}

impl Backend for EmbeddedProver {
    fn name(&self) -> &str {
        "embedded"
    }

    fn start(&mut self, problem: &Problem) -> Result<Vec<Clause>, BackendError> {
        *self = EmbeddedProver::new();
        for clause in &problem.clauses {
            if self.by_label.contains_key(clause.label()) {
                return Err(BackendError::Startup {
                    backend: "embedded".into(),
                    message: format!("duplicate clause label `{}`", clause.label()),
                });
            }
            self.register(clause.clone());
        }
        self.started = true;
        Ok(self.clauses.clone())
    }

    fn select(&mut self, label: &str) -> Result<SelectResult, BackendError> {
        if !self.started {
            return Err(BackendError::NotStarted);
        }
        let given = *self
            .by_label
            .get(label)
            .ok_or_else(|| BackendError::UnknownLabel(label.to_string()))?;
        if self.is_processed[given] {
            return Err(BackendError::AlreadyProcessed(label.to_string()));
        }
        let candidates = self.inferences(given);
        self.processed.push(given);
        self.is_processed[given] = true;

        let mut new_clauses = Vec::new();
        let mut refuted = false;
        for candidate in candidates {
            if literals_are_tautology(candidate.parsed_literals())
                || self
                    .seen
                    .contains(&variant_key(candidate.parsed_literals()))
            {
                continue;
            }
            refuted |= candidate.is_empty();
            let label = self.fresh_label();
            let clause = candidate.with_label(label);
            self.register(clause.clone());
            new_clauses.push(clause);
        }
        let status = if refuted {
            ProverStatus::Refutation
        } else if self.unprocessed_count() == 0 {
            ProverStatus::Saturated
        } else {
            ProverStatus::Running
        };
        Ok(SelectResult {
            new_clauses,
            eliminated_labels: Vec::new(),
            status,
        })
    }
}
