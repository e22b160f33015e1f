//! Clause data model: terms, literals and the clause record observed by agents.
//!
//! Equality atoms are ordinary applications of the reserved symbol `=` with
//! exactly two arguments, so unification and inference treat them like any
//! other predicate. Negated equality renders as `l != r`.

use std::collections::HashMap;
use std::fmt;

use crate::tptp::{self, ParseError};

/// Reserved predicate symbol for equality atoms.
pub const EQUALITY: &str = "=";

/// Inference rules that mark a clause as part of the input problem.
///
/// A clause carries birth step zero exactly when its rule is one of these.
pub const INPUT_RULES: &[&str] = &[
    "axiom",
    "input",
    "assumption",
    "hypothesis",
    "negated_conjecture",
];

pub fn is_input_rule(rule: &str) -> bool {
    INPUT_RULES.contains(&rule)
}

/// A first-order term. Constants are 0-ary applications.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Term {
    Var(String),
    App(String, Vec<Term>),
}

impl Term {
    pub fn var(name: impl Into<String>) -> Self {
        Term::Var(name.into())
    }

    pub fn constant(name: impl Into<String>) -> Self {
        Term::App(name.into(), Vec::new())
    }

    pub fn app(symbol: impl Into<String>, args: Vec<Term>) -> Self {
        Term::App(symbol.into(), args)
    }

    pub fn is_var(&self) -> bool {
        matches!(self, Term::Var(_))
    }

    /// Number of symbol occurrences, counting variables.
    pub fn symbol_count(&self) -> usize {
        match self {
            Term::Var(_) => 1,
            Term::App(_, args) => 1 + args.iter().map(Term::symbol_count).sum::<usize>(),
        }
    }

    pub fn depth(&self) -> usize {
        match self {
            Term::Var(_) => 0,
            Term::App(_, args) => args.iter().map(|a| a.depth() + 1).max().unwrap_or(0),
        }
    }

    pub fn contains_var(&self, name: &str) -> bool {
        match self {
            Term::Var(v) => v == name,
            Term::App(_, args) => args.iter().any(|a| a.contains_var(name)),
        }
    }

    /// Visits variables in left-to-right order of occurrence (with repeats).
    pub fn for_each_var<'a>(&'a self, f: &mut impl FnMut(&'a str)) {
        match self {
            Term::Var(v) => f(v),
            Term::App(_, args) => args.iter().for_each(|a| a.for_each_var(f)),
        }
    }

    /// Renames variables through `map`; unmapped variables are kept.
    pub fn rename(&self, map: &HashMap<String, String>) -> Term {
        match self {
            Term::Var(v) => Term::Var(map.get(v).cloned().unwrap_or_else(|| v.clone())),
            Term::App(f, args) => {
                Term::App(f.clone(), args.iter().map(|a| a.rename(map)).collect())
            }
        }
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Term::Var(v) => f.write_str(v),
            Term::App(sym, args) => {
                f.write_str(sym)?;
                if !args.is_empty() {
                    f.write_str("(")?;
                    for (i, a) in args.iter().enumerate() {
                        if i > 0 {
                            f.write_str(",")?;
                        }
                        write!(f, "{a}")?;
                    }
                    f.write_str(")")?;
                }
                Ok(())
            }
        }
    }
}

/// A possibly negated atom. The atom is a predicate application or an
/// equality (`=` applied to exactly two terms).
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Literal {
    pub negated: bool,
    pub atom: Term,
}

impl Literal {
    pub fn new(negated: bool, atom: Term) -> Self {
        Literal { negated, atom }
    }

    pub fn positive(atom: Term) -> Self {
        Literal::new(false, atom)
    }

    pub fn negative(atom: Term) -> Self {
        Literal::new(true, atom)
    }

    pub fn equality(negated: bool, lhs: Term, rhs: Term) -> Self {
        Literal::new(negated, Term::App(EQUALITY.to_string(), vec![lhs, rhs]))
    }

    pub fn is_equality(&self) -> bool {
        matches!(&self.atom, Term::App(sym, args) if sym == EQUALITY && args.len() == 2)
    }

    pub fn complement(&self) -> Literal {
        Literal::new(!self.negated, self.atom.clone())
    }

    /// Predicate symbol and arity.
    pub fn predicate(&self) -> (&str, usize) {
        match &self.atom {
            Term::App(sym, args) => (sym, args.len()),
            Term::Var(v) => (v, 0),
        }
    }

    pub fn weight(&self) -> usize {
        self.atom.symbol_count()
    }
}

impl fmt::Display for Literal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_equality() {
            if let Term::App(_, args) = &self.atom {
                let op = if self.negated { "!=" } else { "=" };
                return write!(f, "{} {op} {}", args[0], args[1]);
            }
        }
        if self.negated {
            f.write_str("~")?;
        }
        write!(f, "{}", self.atom)
    }
}

/// Renders a literal disjunction in TPTP syntax; the empty clause is `$false`.
pub fn render_literals(literals: &[Literal]) -> String {
    if literals.is_empty() {
        return "$false".to_string();
    }
    literals
        .iter()
        .map(Literal::to_string)
        .collect::<Vec<_>>()
        .join(" | ")
}

/// One clause of the proof state, as observed by an agent.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Clause {
    literals: String,
    parsed_literals: Vec<Literal>,
    label: String,
    role: String,
    inference_rule: String,
    inference_parents: Vec<String>,
    birth_step: usize,
}

impl Clause {
    /// An input clause (`inference_rule` = `input`, no parents, birth step 0).
    pub fn new(label: impl Into<String>, role: impl Into<String>, literals: Vec<Literal>) -> Self {
        Clause {
            literals: render_literals(&literals),
            parsed_literals: literals,
            label: label.into(),
            role: role.into(),
            inference_rule: "input".to_string(),
            inference_parents: Vec::new(),
            birth_step: 0,
        }
    }

    /// Parses `text` as a literal disjunction.
    pub fn parse(
        label: impl Into<String>,
        role: impl Into<String>,
        text: &str,
    ) -> Result<Self, ParseError> {
        Ok(Clause::new(label, role, tptp::parse_clause(text)?))
    }

    pub fn with_inference(mut self, rule: impl Into<String>, parents: Vec<String>) -> Self {
        self.inference_rule = rule.into();
        self.inference_parents = parents;
        self
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    pub fn with_birth_step(mut self, step: usize) -> Self {
        self.birth_step = step;
        self
    }

    pub fn literals(&self) -> &str {
        &self.literals
    }

    pub fn parsed_literals(&self) -> &[Literal] {
        &self.parsed_literals
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn role(&self) -> &str {
        &self.role
    }

    pub fn inference_rule(&self) -> &str {
        &self.inference_rule
    }

    pub fn inference_parents(&self) -> &[String] {
        &self.inference_parents
    }

    pub fn birth_step(&self) -> usize {
        self.birth_step
    }

    pub fn is_empty(&self) -> bool {
        self.parsed_literals.is_empty()
    }

    pub fn len(&self) -> usize {
        self.parsed_literals.len()
    }
}

impl fmt::Display for Clause {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&render_clause(self, true))
    }
}

fn is_plain_name(s: &str) -> bool {
    let mut chars = s.chars();
    match chars.next() {
        Some(c) if c.is_ascii_lowercase() => chars.all(|c| c.is_ascii_alphanumeric() || c == '_'),
        Some(c) if c.is_ascii_digit() => chars.all(|c| c.is_ascii_digit()),
        _ => false,
    }
}

/// Renders a name as a TPTP name token, quoting when needed.
pub(crate) fn render_name(s: &str) -> String {
    if is_plain_name(s) {
        s.to_string()
    } else {
        format!("'{}'", s.replace('\\', "\\\\").replace('\'', "\\'"))
    }
}

/// Verbose form: `cnf(label, role, literals).`, with an
/// `inference(rule, [], [parents])` annotation when the clause has parents.
/// Terse form: the literals only.
pub fn render_clause(clause: &Clause, verbose: bool) -> String {
    if !verbose {
        return clause.literals.clone();
    }
    let mut out = format!(
        "cnf({}, {}, {}",
        render_name(&clause.label),
        render_name(&clause.role),
        clause.literals
    );
    if !clause.inference_parents.is_empty() {
        let parents: Vec<String> = clause
            .inference_parents
            .iter()
            .map(|p| render_name(p))
            .collect();
        out.push_str(&format!(
            ", inference({}, [], [{}])",
            render_name(&clause.inference_rule),
            parents.join(", ")
        ));
    }
    out.push_str(").");
    out
}

/// Symbol-occurrence count over all literals: predicate, function, constant
/// and variable occurrences. Equality counts as one predicate occurrence.
pub fn clause_weight(clause: &Clause) -> usize {
    literals_weight(&clause.parsed_literals)
}

pub fn literals_weight(literals: &[Literal]) -> usize {
    literals.iter().map(Literal::weight).sum()
}

/// True iff the clause contains a literal together with its exact negation.
pub fn is_tautology(clause: &Clause) -> bool {
    literals_are_tautology(&clause.parsed_literals)
}

pub fn literals_are_tautology(literals: &[Literal]) -> bool {
    literals.iter().enumerate().any(|(i, a)| {
        literals[i + 1..]
            .iter()
            .any(|b| a.negated != b.negated && a.atom == b.atom)
    })
}

/// Renames variables to `X0, X1, …` in order of first occurrence.
///
/// Two literal sequences are variants of each other iff their normal forms
/// are equal.
pub fn normalize_variables(literals: &[Literal]) -> Vec<Literal> {
    let mut map: HashMap<String, String> = HashMap::new();
    for lit in literals {
        lit.atom.for_each_var(&mut |v| {
            if !map.contains_key(v) {
                let fresh = format!("X{}", map.len());
                map.insert(v.to_string(), fresh);
            }
        });
    }
    literals
        .iter()
        .map(|l| Literal::new(l.negated, l.atom.rename(&map)))
        .collect()
}

pub fn is_variant(a: &[Literal], b: &[Literal]) -> bool {
    a.len() == b.len() && normalize_variables(a) == normalize_variables(b)
}

fn skeleton(term: &Term, out: &mut String) {
    match term {
        Term::Var(_) => out.push('*'),
        Term::App(f, args) => {
            out.push_str(f);
            out.push('(');
            for a in args {
                skeleton(a, out);
                out.push(',');
            }
            out.push(')');
        }
    }
}

/// Key under which clauses that differ only by variable renaming and
/// literal order collide. Literals are ordered by their variable-blind
/// skeleton before normalization, so equal keys always denote equivalent
/// clauses; a few equivalent clauses with tied skeletons may still get
/// different keys.
pub fn variant_key(literals: &[Literal]) -> Vec<Literal> {
    let mut keyed: Vec<(String, &Literal)> = literals
        .iter()
        .map(|l| {
            let mut k = String::from(if l.negated { "-" } else { "+" });
            skeleton(&l.atom, &mut k);
            (k, l)
        })
        .collect();
    keyed.sort_by(|a, b| a.0.cmp(&b.0));
    let ordered: Vec<Literal> = keyed.into_iter().map(|(_, l)| l.clone()).collect();
    normalize_variables(&ordered)
}
