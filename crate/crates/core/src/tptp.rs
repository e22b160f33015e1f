//! TPTP CNF reader.
//!
//! Only `cnf(...)` statements and `include(...)` directives are accepted.
//! `fof`, `tff` and friends are rejected instead of being clausified.

use std::collections::HashSet;
use std::fs;
use std::ops::Range;
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::clause::{Clause, Literal, Term};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseError {
    #[error("syntax error at offset {pos}: {message}")]
    Syntax { pos: usize, message: String },
    #[error("unbalanced `{delimiter}` at offset {pos}")]
    Unbalanced { pos: usize, delimiter: char },
    #[error("unsupported statement `{kind}` at offset {pos}; only cnf is accepted")]
    Unsupported { pos: usize, kind: String },
}

impl ParseError {
    pub fn pos(&self) -> usize {
        match self {
            ParseError::Syntax { pos, .. }
            | ParseError::Unbalanced { pos, .. }
            | ParseError::Unsupported { pos, .. } => *pos,
        }
    }

    fn syntax(pos: usize, message: impl Into<String>) -> Self {
        ParseError::Syntax {
            pos,
            message: message.into(),
        }
    }
}

#[derive(Debug, Error)]
pub enum ProblemError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}:{line}:{column}: {source}")]
    Parse {
        path: PathBuf,
        line: usize,
        column: usize,
        #[source]
        source: ParseError,
    },
    #[error("include cycle through {0}")]
    IncludeCycle(PathBuf),
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Tok {
    LParen,
    RParen,
    LBracket,
    RBracket,
    Comma,
    Dot,
    Pipe,
    Tilde,
    Eq,
    Neq,
    Colon,
    Lower(String),
    Upper(String),
    Dollar(String),
    Quoted(String),
    Number(String),
    Distinct(String),
    /// Connectives of richer TPTP dialects; never valid in a clause.
    Operator(char),
}

#[derive(Debug, Clone)]
struct Token {
    tok: Tok,
    span: Range<usize>,
}

fn lex(text: &str) -> Result<Vec<Token>, ParseError> {
    let bytes = text.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        let start = i;
        let single = |tok| Token {
            tok,
            span: start..start + 1,
        };
        match c {
            b' ' | b'\t' | b'\r' | b'\n' => {
                i += 1;
                continue;
            }
            b'%' => {
                while i < bytes.len() && bytes[i] != b'\n' {
                    i += 1;
                }
                continue;
            }
            b'/' if bytes.get(i + 1) == Some(&b'*') => {
                match text[i + 2..].find("*/") {
                    Some(end) => i = i + 2 + end + 2,
                    None => return Err(ParseError::syntax(start, "unterminated comment")),
                }
                continue;
            }
            b'(' => out.push(single(Tok::LParen)),
            b')' => out.push(single(Tok::RParen)),
            b'[' => out.push(single(Tok::LBracket)),
            b']' => out.push(single(Tok::RBracket)),
            b',' => out.push(single(Tok::Comma)),
            b'.' => out.push(single(Tok::Dot)),
            b'|' => out.push(single(Tok::Pipe)),
            b'~' => out.push(single(Tok::Tilde)),
            b':' => out.push(single(Tok::Colon)),
            b'=' => out.push(single(Tok::Eq)),
            b'!' if bytes.get(i + 1) == Some(&b'=') => {
                out.push(Token {
                    tok: Tok::Neq,
                    span: start..start + 2,
                });
                i += 2;
                continue;
            }
            b'\'' | b'"' => {
                let quote = c;
                i += 1;
                let mut closed = false;
                while i < bytes.len() {
                    if bytes[i] == b'\\' {
                        i += 2;
                        continue;
                    }
                    if bytes[i] == quote {
                        closed = true;
                        break;
                    }
                    i += 1;
                }
                if !closed {
                    return Err(ParseError::syntax(start, "unterminated quoted token"));
                }
                i += 1;
                let raw = text[start..i].to_string();
                let tok = if quote == b'\'' {
                    Tok::Quoted(raw)
                } else {
                    Tok::Distinct(raw)
                };
                out.push(Token {
                    tok,
                    span: start..i,
                });
                continue;
            }
            _ if c.is_ascii_alphanumeric() || c == b'$' || c == b'_' => {
                i += 1;
                while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                    i += 1;
                }
                let word = text[start..i].to_string();
                let tok = if c == b'$' {
                    if word.len() == 1 {
                        return Err(ParseError::syntax(start, "bare `$`"));
                    }
                    Tok::Dollar(word)
                } else if c.is_ascii_digit() {
                    if !word.bytes().all(|b| b.is_ascii_digit()) {
                        return Err(ParseError::syntax(
                            start,
                            format!("malformed number `{word}`"),
                        ));
                    }
                    Tok::Number(word)
                } else if c.is_ascii_uppercase() || c == b'_' {
                    Tok::Upper(word)
                } else {
                    Tok::Lower(word)
                };
                out.push(Token {
                    tok,
                    span: start..i,
                });
                continue;
            }
            b'!' | b'?' | b'&' | b'<' | b'>' | b'@' | b'^' | b'*' | b'+' | b'-' => {
                out.push(single(Tok::Operator(c as char)))
            }
            _ => {
                let ch = text[start..].chars().next().unwrap_or('?');
                return Err(ParseError::syntax(
                    start,
                    format!("unexpected character `{ch}`"),
                ));
            }
        }
        i += 1;
    }
    check_balance(&out)?;
    Ok(out)
}

fn check_balance(tokens: &[Token]) -> Result<(), ParseError> {
    let mut stack: Vec<(char, usize)> = Vec::new();
    for t in tokens {
        match t.tok {
            Tok::LParen => stack.push(('(', t.span.start)),
            Tok::LBracket => stack.push(('[', t.span.start)),
            Tok::RParen | Tok::RBracket => {
                let (open, close) = if t.tok == Tok::RParen {
                    ('(', ')')
                } else {
                    ('[', ']')
                };
                match stack.pop() {
                    Some((o, _)) if o == open => {}
                    _ => {
                        return Err(ParseError::Unbalanced {
                            pos: t.span.start,
                            delimiter: close,
                        })
                    }
                }
            }
            _ => {}
        }
    }
    match stack.pop() {
        Some((delimiter, pos)) => Err(ParseError::Unbalanced { pos, delimiter }),
        None => Ok(()),
    }
}

/// Byte spans of the lexical tokens of `text`.
pub fn token_spans(text: &str) -> Result<Vec<Range<usize>>, ParseError> {
    Ok(lex(text)?.into_iter().map(|t| t.span).collect())
}

struct Parser<'a> {
    tokens: &'a [Token],
    pos: usize,
    end: usize,
}

enum Unit {
    Lit(Literal),
    False,
}

impl<'a> Parser<'a> {
    fn new(tokens: &'a [Token], end: usize) -> Self {
        Parser {
            tokens,
            pos: 0,
            end,
        }
    }

    fn peek(&self) -> Option<&Tok> {
        self.tokens.get(self.pos).map(|t| &t.tok)
    }

    fn peek_at(&self, ahead: usize) -> Option<&Tok> {
        self.tokens.get(self.pos + ahead).map(|t| &t.tok)
    }

    fn offset(&self) -> usize {
        self.tokens.get(self.pos).map_or(self.end, |t| t.span.start)
    }

    fn bump(&mut self) -> Option<&Tok> {
        let t = self.tokens.get(self.pos).map(|t| &t.tok);
        self.pos += 1;
        t
    }

    fn error<T>(&self, message: impl Into<String>) -> Result<T, ParseError> {
        Err(ParseError::syntax(self.offset(), message))
    }

    fn expect(&mut self, want: Tok, what: &str) -> Result<(), ParseError> {
        if self.peek() == Some(&want) {
            self.pos += 1;
            Ok(())
        } else {
            self.error(format!("expected {what}"))
        }
    }

    fn at_end(&self) -> bool {
        self.pos >= self.tokens.len()
    }

    fn disjunction(&mut self) -> Result<Vec<Literal>, ParseError> {
        let mut out = Vec::new();
        loop {
            self.disjunct(&mut out)?;
            if self.peek() == Some(&Tok::Pipe) {
                self.pos += 1;
            } else {
                return Ok(out);
            }
        }
    }

    fn disjunct(&mut self, out: &mut Vec<Literal>) -> Result<(), ParseError> {
        if self.peek() == Some(&Tok::LParen) {
            self.pos += 1;
            let inner = self.disjunction()?;
            self.expect(Tok::RParen, "`)`")?;
            out.extend(inner);
            return Ok(());
        }
        match self.literal()? {
            Unit::Lit(l) => out.push(l),
            Unit::False => {}
        }
        Ok(())
    }

    fn literal(&mut self) -> Result<Unit, ParseError> {
        if self.peek() == Some(&Tok::Tilde) {
            self.pos += 1;
            let inner = if self.peek() == Some(&Tok::LParen) {
                self.pos += 1;
                let lit = self.literal()?;
                self.expect(Tok::RParen, "`)`")?;
                lit
            } else {
                self.atomic(false)?
            };
            return match inner {
                Unit::Lit(l) => Ok(Unit::Lit(l.complement())),
                Unit::False => self.error("`~$false` is not supported"),
            };
        }
        self.atomic(true)
    }

    /// An atom, or an (in)equality when `allow_eq` is set.
    fn atomic(&mut self, allow_eq: bool) -> Result<Unit, ParseError> {
        if let Some(Tok::Dollar(word)) = self.peek() {
            return if word == "$false" {
                self.pos += 1;
                Ok(Unit::False)
            } else {
                self.error(format!("unsupported defined atom `{word}`"))
            };
        }
        let lhs = self.term()?;
        match self.peek() {
            Some(Tok::Eq) | Some(Tok::Neq) => {
                if !allow_eq {
                    return self.error("negated equality must be parenthesized");
                }
                let negated = self.bump() == Some(&Tok::Neq);
                let rhs = self.term()?;
                Ok(Unit::Lit(Literal::equality(negated, lhs, rhs)))
            }
            _ => match lhs {
                Term::Var(v) => self.error(format!("variable `{v}` used as an atom")),
                atom => Ok(Unit::Lit(Literal::positive(atom))),
            },
        }
    }

    fn term(&mut self) -> Result<Term, ParseError> {
        let symbol = match self.peek() {
            Some(Tok::Upper(v)) => {
                let v = v.clone();
                self.pos += 1;
                return Ok(Term::Var(v));
            }
            Some(Tok::Lower(s))
            | Some(Tok::Quoted(s))
            | Some(Tok::Number(s))
            | Some(Tok::Distinct(s)) => s.clone(),
            _ => return self.error("expected a term"),
        };
        self.pos += 1;
        let mut args = Vec::new();
        if self.peek() == Some(&Tok::LParen) {
            self.pos += 1;
            loop {
                args.push(self.term()?);
                match self.peek() {
                    Some(Tok::Comma) => self.pos += 1,
                    Some(Tok::RParen) => {
                        self.pos += 1;
                        break;
                    }
                    _ => return self.error("expected `,` or `)` in argument list"),
                }
            }
        }
        Ok(Term::App(symbol, args))
    }

    fn name(&mut self) -> Result<String, ParseError> {
        match self.peek() {
            Some(Tok::Lower(s)) | Some(Tok::Number(s)) => {
                let s = s.clone();
                self.pos += 1;
                Ok(s)
            }
            Some(Tok::Quoted(s)) => {
                let s = unquote(s);
                self.pos += 1;
                Ok(s)
            }
            _ => self.error("expected a name"),
        }
    }

    /// Skips one TPTP general term (annotations we do not interpret).
    fn skip_general_term(&mut self) -> Result<(), ParseError> {
        match self.peek() {
            Some(Tok::LBracket) => {
                self.pos += 1;
                if self.peek() == Some(&Tok::RBracket) {
                    self.pos += 1;
                } else {
                    loop {
                        self.skip_general_term()?;
                        match self.bump() {
                            Some(Tok::Comma) => {}
                            Some(Tok::RBracket) => break,
                            _ => {
                                self.pos -= 1;
                                return self.error("expected `,` or `]`");
                            }
                        }
                    }
                }
            }
            Some(Tok::Lower(_))
            | Some(Tok::Upper(_))
            | Some(Tok::Quoted(_))
            | Some(Tok::Number(_))
            | Some(Tok::Distinct(_))
            | Some(Tok::Dollar(_)) => {
                self.pos += 1;
                if self.peek() == Some(&Tok::LParen) {
                    self.pos += 1;
                    loop {
                        self.skip_general_term()?;
                        match self.bump() {
                            Some(Tok::Comma) => {}
                            Some(Tok::RParen) => break,
                            _ => {
                                self.pos -= 1;
                                return self.error("expected `,` or `)`");
                            }
                        }
                    }
                }
            }
            _ => return self.error("expected an annotation term"),
        }
        if self.peek() == Some(&Tok::Colon) {
            self.pos += 1;
            self.skip_general_term()?;
        }
        Ok(())
    }

    /// `inference(rule, info, [parents])`; any other annotation yields None.
    fn annotation(&mut self) -> Result<Option<(String, Vec<String>)>, ParseError> {
        let is_inference = matches!(self.peek(), Some(Tok::Lower(w)) if w == "inference")
            && self.peek_at(1) == Some(&Tok::LParen);
        if !is_inference {
            self.skip_general_term()?;
            return Ok(None);
        }
        self.pos += 2;
        let rule = self.name()?;
        self.expect(Tok::Comma, "`,`")?;
        self.skip_general_term()?;
        self.expect(Tok::Comma, "`,`")?;
        self.expect(Tok::LBracket, "`[`")?;
        let mut parents = Vec::new();
        if self.peek() == Some(&Tok::RBracket) {
            self.pos += 1;
        } else {
            loop {
                let plain = matches!(
                    self.peek(),
                    Some(Tok::Lower(_)) | Some(Tok::Number(_)) | Some(Tok::Quoted(_))
                ) && matches!(self.peek_at(1), Some(Tok::Comma) | Some(Tok::RBracket));
                if plain {
                    parents.push(self.name()?);
                } else {
                    self.skip_general_term()?;
                }
                match self.bump() {
                    Some(Tok::Comma) => {}
                    Some(Tok::RBracket) => break,
                    _ => {
                        self.pos -= 1;
                        return self.error("expected `,` or `]` in parent list");
                    }
                }
            }
        }
        self.expect(Tok::RParen, "`)`")?;
        Ok(Some((rule, parents)))
    }

    fn cnf_body(&mut self) -> Result<Clause, ParseError> {
        self.expect(Tok::LParen, "`(`")?;
        let label = self.name()?;
        self.expect(Tok::Comma, "`,`")?;
        let role = match self.peek() {
            Some(Tok::Lower(r)) => r.clone(),
            _ => return self.error("expected a formula role"),
        };
        self.pos += 1;
        self.expect(Tok::Comma, "`,`")?;
        let literals = self.disjunction()?;
        let mut clause = Clause::new(label, role, literals);
        if self.peek() == Some(&Tok::Comma) {
            self.pos += 1;
            if let Some((rule, parents)) = self.annotation()? {
                clause = clause.with_inference(rule, parents);
            }
            if self.peek() == Some(&Tok::Comma) {
                self.pos += 1;
                self.skip_general_term()?;
            }
        }
        self.expect(Tok::RParen, "`)`")?;
        self.expect(Tok::Dot, "`.`")?;
        Ok(clause)
    }
}

fn unquote(raw: &str) -> String {
    let inner = &raw[1..raw.len() - 1];
    let mut out = String::with_capacity(inner.len());
    let mut chars = inner.chars();
    while let Some(c) = chars.next() {
        if c == '\\' {
            if let Some(n) = chars.next() {
                out.push(n);
            }
        } else {
            out.push(c);
        }
    }
    out
}

/// Parses a TPTP literal disjunction. `$false` yields no literals.
pub fn parse_clause(text: &str) -> Result<Vec<Literal>, ParseError> {
    let tokens = lex(text)?;
    let mut p = Parser::new(&tokens, text.len());
    if p.at_end() {
        return p.error("empty clause text");
    }
    let lits = p.disjunction()?;
    if !p.at_end() {
        return p.error("unexpected trailing input");
    }
    Ok(lits)
}

/// Parses one `cnf(name, role, literals[, annotation]).` line.
pub fn parse_cnf_line(text: &str) -> Result<Clause, ParseError> {
    let tokens = lex(text)?;
    let mut p = Parser::new(&tokens, text.len());
    match p.bump() {
        Some(Tok::Lower(w)) if w == "cnf" => {}
        _ => {
            p.pos = 0;
            return p.error("expected `cnf(`");
        }
    }
    let clause = p.cnf_body()?;
    if !p.at_end() {
        return p.error("unexpected trailing input");
    }
    Ok(clause)
}

enum Statement {
    Cnf(Clause),
    Include(String),
}

fn parse_statements(text: &str) -> Result<Vec<Statement>, ParseError> {
    let tokens = lex(text)?;
    let mut p = Parser::new(&tokens, text.len());
    let mut out = Vec::new();
    while !p.at_end() {
        let start = p.offset();
        let word = match p.peek() {
            Some(Tok::Lower(w)) => w.clone(),
            _ => return p.error("expected a statement"),
        };
        match word.as_str() {
            "cnf" => {
                p.pos += 1;
                out.push(Statement::Cnf(p.cnf_body()?));
            }
            "include" => {
                p.pos += 1;
                p.expect(Tok::LParen, "`(`")?;
                let path = match p.peek() {
                    Some(Tok::Quoted(s)) => unquote(s),
                    _ => return p.error("expected a quoted include path"),
                };
                p.pos += 1;
                if p.peek() == Some(&Tok::Comma) {
                    p.pos += 1;
                    p.skip_general_term()?;
                }
                p.expect(Tok::RParen, "`)`")?;
                p.expect(Tok::Dot, "`.`")?;
                out.push(Statement::Include(path));
            }
            other => {
                return Err(ParseError::Unsupported {
                    pos: start,
                    kind: other.to_string(),
                })
            }
        }
    }
    Ok(out)
}

/// Parses problem text without resolving includes (an include is an error).
pub fn parse_problem_str(text: &str) -> Result<Vec<Clause>, ParseError> {
    parse_statements(text)?
        .into_iter()
        .map(|s| match s {
            Statement::Cnf(c) => Ok(c),
            Statement::Include(path) => Err(ParseError::syntax(
                0,
                format!("unresolved include `{path}`"),
            )),
        })
        .collect()
}

/// A loaded TPTP problem.
#[derive(Debug, Clone, PartialEq)]
pub struct Problem {
    pub name: String,
    pub path: Option<PathBuf>,
    pub clauses: Vec<Clause>,
}

impl Problem {
    pub fn from_clauses(name: impl Into<String>, clauses: Vec<Clause>) -> Self {
        Problem {
            name: name.into(),
            path: None,
            clauses,
        }
    }

    /// Parses in-memory problem text (no includes).
    pub fn parse_text(name: impl Into<String>, text: &str) -> Result<Self, ProblemError> {
        let name = name.into();
        let clauses = parse_problem_str(text).map_err(|e| located(Path::new(&name), text, e))?;
        Ok(Problem::from_clauses(name, clauses))
    }
}

fn located(path: &Path, text: &str, source: ParseError) -> ProblemError {
    let pos = source.pos().min(text.len());
    let before = &text[..pos];
    let line = before.matches('\n').count() + 1;
    let column = pos - before.rfind('\n').map_or(0, |i| i + 1) + 1;
    ProblemError::Parse {
        path: path.to_path_buf(),
        line,
        column,
        source,
    }
}

/// Reads TPTP problem files, resolving `include` directives against an
/// axiom root directory.
#[derive(Debug, Clone, Default)]
pub struct ProblemLoader {
    /// Directory includes are resolved against. Falls back to the `TPTP`
    /// environment variable, then to the including file's directory.
    pub axiom_root: Option<PathBuf>,
}

impl ProblemLoader {
    pub fn new(axiom_root: Option<PathBuf>) -> Self {
        ProblemLoader { axiom_root }
    }

    pub fn load(&self, path: impl AsRef<Path>) -> Result<Problem, ProblemError> {
        let path = path.as_ref();
        let mut clauses = Vec::new();
        let mut active = HashSet::new();
        self.load_into(path, &mut clauses, &mut active)?;
        let name = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_default();
        Ok(Problem {
            name,
            path: Some(path.to_path_buf()),
            clauses,
        })
    }

    fn resolve(&self, including: &Path, target: &str) -> PathBuf {
        let root = self
            .axiom_root
            .clone()
            .or_else(|| std::env::var_os("TPTP").map(PathBuf::from))
            .unwrap_or_else(|| {
                including
                    .parent()
                    .map(Path::to_path_buf)
                    .unwrap_or_default()
            });
        root.join(target)
    }

    fn load_into(
        &self,
        path: &Path,
        clauses: &mut Vec<Clause>,
        active: &mut HashSet<PathBuf>,
    ) -> Result<(), ProblemError> {
        let key = path.canonicalize().unwrap_or_else(|_| path.to_path_buf());
        if !active.insert(key.clone()) {
            return Err(ProblemError::IncludeCycle(path.to_path_buf()));
        }
        let text = fs::read_to_string(path).map_err(|source| ProblemError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let statements = parse_statements(&text).map_err(|e| located(path, &text, e))?;
        for s in statements {
            match s {
                Statement::Cnf(c) => clauses.push(c),
                Statement::Include(target) => {
                    let resolved = self.resolve(path, &target);
                    self.load_into(&resolved, clauses, active)?;
                }
            }
        }
        active.remove(&key);
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::clause::render_clause;

    #[test]
    fn membership_clause() {
        let lits = parse_clause("member(X0,bb) | ~member(X0,b)").unwrap();
        assert_eq!(lits.len(), 2);
        assert!(!lits[0].negated);
        assert!(lits[1].negated);
        assert_eq!(lits[0].predicate(), ("member", 2));
        assert_eq!(lits[1].predicate(), ("member", 2));
    }

    #[test]
    fn false_is_empty() {
        assert!(parse_clause("$false").unwrap().is_empty());
        assert!(parse_clause("( $false )").unwrap().is_empty());
    }

    #[test]
    fn equality_and_nested_terms() {
        let lits = parse_clause("X = Y | ~p(f(X),c)").unwrap();
        assert_eq!(lits.len(), 2);
        assert!(lits[0].is_equality());
        assert!(!lits[0].negated);
        assert_eq!(
            lits[0].atom,
            Term::app("=", vec![Term::var("X"), Term::var("Y")])
        );
        assert!(lits[1].negated);
        assert_eq!(
            lits[1].atom,
            Term::app(
                "p",
                vec![Term::app("f", vec![Term::var("X")]), Term::constant("c")]
            )
        );
    }

    #[test]
    fn inequality_normalizes_to_negated_equality() {
        let a = parse_clause("a != b").unwrap();
        let b = parse_clause("~(a = b)").unwrap();
        assert_eq!(a, b);
        assert!(a[0].negated && a[0].is_equality());
    }

    #[test]
    fn unbalanced_parens_are_distinct_errors() {
        assert!(matches!(
            parse_clause("p(a"),
            Err(ParseError::Unbalanced {
                delimiter: '(',
                pos: 1
            })
        ));
        assert!(matches!(
            parse_clause("p(a))"),
            Err(ParseError::Unbalanced {
                delimiter: ')',
                pos: 4
            })
        ));
        assert!(matches!(
            parse_clause("p(a) |"),
            Err(ParseError::Syntax { .. })
        ));
    }

    #[test]
    fn syntax_errors_carry_positions() {
        match parse_clause("p(a) q(b)") {
            Err(ParseError::Syntax { pos, .. }) => assert_eq!(pos, 5),
            other => panic!("unexpected {other:?}"),
        }
        assert!(parse_clause("X").is_err());
        assert!(parse_clause("~X = Y").is_err());
        assert!(parse_clause("p()").is_err());
        assert!(parse_clause("").is_err());
    }

    #[test]
    fn cnf_line_with_inference_annotation() {
        let c = parse_cnf_line(
            "cnf(c_54, plain, q(a) | r, inference(resolution, [status(thm)], [c_1, c_2])).",
        )
        .unwrap();
        assert_eq!(c.label(), "c_54");
        assert_eq!(c.role(), "plain");
        assert_eq!(c.inference_rule(), "resolution");
        assert_eq!(c.inference_parents(), ["c_1", "c_2"]);
        let again = parse_cnf_line(&render_clause(&c, true)).unwrap();
        assert_eq!(again, c);
    }

    #[test]
    fn problem_text_with_comments_and_file_annotation() {
        let text = "% a comment\n/* block */\ncnf(a1, axiom, p(a), file('x.p', a1)).\ncnf(g, negated_conjecture, ~p(a)).\n";
        let clauses = parse_problem_str(text).unwrap();
        assert_eq!(clauses.len(), 2);
        assert_eq!(clauses[1].role(), "negated_conjecture");
        assert_eq!(clauses[0].inference_rule(), "input");
    }

    #[test]
    fn fof_is_rejected() {
        let err = parse_problem_str("fof(a, axiom, ![X]: p(X)).").unwrap_err();
        assert!(matches!(err, ParseError::Unsupported { ref kind, .. } if kind == "fof"));
    }

    #[test]
    fn includes_resolve_against_axiom_root() {
        let dir = tempfile::tempdir().unwrap();
        let axioms = dir.path().join("Axioms");
        std::fs::create_dir(&axioms).unwrap();
        std::fs::write(axioms.join("X.ax"), "cnf(ax, axiom, p(X) | ~q(X)).\n").unwrap();
        let problem = dir.path().join("prob.p");
        std::fs::write(
            &problem,
            "include('Axioms/X.ax').\ncnf(h, hypothesis, q(a)).\n",
        )
        .unwrap();
        let loaded = ProblemLoader::new(Some(dir.path().to_path_buf()))
            .load(&problem)
            .unwrap();
        assert_eq!(loaded.clauses.len(), 2);
        assert_eq!(loaded.clauses[0].label(), "ax");
        assert_eq!(loaded.name, "prob");
    }

    #[test]
    fn include_cycle_is_detected() {
        let dir = tempfile::tempdir().unwrap();
        let a = dir.path().join("a.p");
        std::fs::write(&a, "include('a.p').\n").unwrap();
        let err = ProblemLoader::new(Some(dir.path().to_path_buf()))
            .load(&a)
            .unwrap_err();
        assert!(matches!(err, ProblemError::IncludeCycle(_)));
    }

    #[test]
    fn parse_errors_report_line_and_column() {
        let err = Problem::parse_text("t", "cnf(a, axiom, p).\ncnf(b, axiom, q |).\n").unwrap_err();
        match err {
            ProblemError::Parse { line, column, .. } => assert_eq!((line, column), (2, 18)),
            other => panic!("unexpected {other}"),
        }
    }
}
