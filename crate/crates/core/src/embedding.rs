//! Clause embeddings: rewriting clauses into a conventional boolean
//! expression dialect, an HTTP client with an in-process cache, and a
//! deterministic stand-in embedding service.

use std::collections::HashMap;
use std::net::SocketAddr;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};
use std::thread::{self, JoinHandle};
use std::time::{Duration, Instant};

use once_cell::sync::OnceCell;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::clause::{Literal, Term};
use crate::tptp::{parse_clause, ParseError};

pub const DEFAULT_DIM: usize = 256;
/// Overrides the embedding service URL.
pub const ENDPOINT_ENV: &str = "SATGYM_EMBEDDER_URL";
/// Prefix given to variables so they never collide with dialect keywords.
pub const VARIABLE_PREFIX: &str = "v_";
/// Prefix of hex-escaped symbols that are not plain identifiers.
pub const ESCAPE_PREFIX: &str = "q_";

const KEYWORDS: &[&str] = &[
    "and", "as", "assert", "async", "await", "break", "class", "continue", "def", "del", "elif",
    "else", "except", "finally", "for", "from", "global", "if", "import", "in", "is", "lambda",
    "nonlocal", "not", "or", "pass", "raise", "return", "try", "while", "with", "yield",
];

fn symbol(name: &str) -> String {
    let mut chars = name.chars();
    let plain = chars.next().is_some_and(|c| c.is_ascii_lowercase())
        && chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
        && !name.starts_with(VARIABLE_PREFIX)
        && !name.starts_with(ESCAPE_PREFIX)
        && !KEYWORDS.contains(&name);
    if plain {
        return name.to_string();
    }
    let hex: String = name.bytes().map(|b| format!("{b:02x}")).collect();
    format!("{ESCAPE_PREFIX}{hex}")
}

fn term_expr(term: &Term, out: &mut String) {
    match term {
        Term::Var(v) => {
            out.push_str(VARIABLE_PREFIX);
            out.push_str(&v.to_lowercase());
        }
        Term::App(f, args) => {
            out.push_str(&symbol(f));
            if !args.is_empty() {
                out.push('(');
                for (i, a) in args.iter().enumerate() {
                    if i > 0 {
                        out.push_str(", ");
                    }
                    term_expr(a, out);
                }
                out.push(')');
            }
        }
    }
}

fn literal_expr(lit: &Literal, out: &mut String) {
    match &lit.atom {
        Term::App(f, args) if lit.is_equality() => {
            debug_assert_eq!(args.len(), 2, "{f}");
            term_expr(&args[0], out);
            out.push_str(if lit.negated { " != " } else { " == " });
            term_expr(&args[1], out);
        }
        atom => {
            if lit.negated {
                out.push_str("not ");
            }
            term_expr(atom, out);
        }
    }
}

/// Rewrites clause literals into the expression dialect:
/// `|` becomes `or`, `~` becomes `not`, `=` becomes `==`, `!=` stays,
/// variables become `v_` plus their lowercased name, and the empty clause
/// becomes `False`.
pub fn tptp_to_expr(literals: &str) -> Result<String, ParseError> {
    let lits = parse_clause(literals)?;
    if lits.is_empty() {
        return Ok("False".to_string());
    }
    let mut out = String::new();
    for (i, lit) in lits.iter().enumerate() {
        if i > 0 {
            out.push_str(" or ");
        }
        literal_expr(lit, &mut out);
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Tok {
    Ident(String),
    LParen,
    RParen,
    Comma,
    Cmp,
}

fn tokenize(expr: &str) -> Result<Vec<Tok>, String> {
    let bytes = expr.as_bytes();
    let mut toks = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i] as char;
        match c {
            ' ' | '\t' => i += 1,
            '(' => {
                toks.push(Tok::LParen);
                i += 1;
            }
            ')' => {
                toks.push(Tok::RParen);
                i += 1;
            }
            ',' => {
                toks.push(Tok::Comma);
                i += 1;
            }
            '=' | '!' if bytes.get(i + 1) == Some(&b'=') => {
                toks.push(Tok::Cmp);
                i += 2;
            }
            c if c.is_ascii_alphabetic() || c == '_' => {
                let start = i;
                while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                    i += 1;
                }
                toks.push(Tok::Ident(expr[start..i].to_string()));
            }
            other => return Err(format!("unexpected `{other}` at {i}")),
        }
    }
    Ok(toks)
}

struct ExprParser {
    toks: Vec<Tok>,
    pos: usize,
}

impl ExprParser {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos)
    }

    fn is_word(&self, word: &str) -> bool {
        matches!(self.peek(), Some(Tok::Ident(w)) if w == word)
    }

    fn expect(&mut self, tok: Tok) -> Result<(), String> {
        if self.peek() == Some(&tok) {
            self.pos += 1;
            Ok(())
        } else {
            Err(format!("expected {tok:?} at token {}", self.pos))
        }
    }

    fn disjunction(&mut self) -> Result<(), String> {
        self.negation()?;
        while self.is_word("or") {
            self.pos += 1;
            self.negation()?;
        }
        Ok(())
    }

    fn negation(&mut self) -> Result<(), String> {
        if self.is_word("not") {
            self.pos += 1;
            return self.negation();
        }
        self.operand()?;
        if self.peek() == Some(&Tok::Cmp) {
            self.pos += 1;
            self.operand()?;
        }
        Ok(())
    }

    fn operand(&mut self) -> Result<(), String> {
        match self.peek().cloned() {
            Some(Tok::LParen) => {
                self.pos += 1;
                self.disjunction()?;
                self.expect(Tok::RParen)
            }
            Some(Tok::Ident(w)) if w == "True" || w == "False" => {
                self.pos += 1;
                Ok(())
            }
            Some(Tok::Ident(w)) => {
                if KEYWORDS.contains(&w.as_str()) {
                    return Err(format!("keyword `{w}` used as a name"));
                }
                self.pos += 1;
                if self.peek() == Some(&Tok::LParen) {
                    self.pos += 1;
                    self.operand()?;
                    while self.peek() == Some(&Tok::Comma) {
                        self.pos += 1;
                        self.operand()?;
                    }
                    self.expect(Tok::RParen)?;
                }
                Ok(())
            }
            other => Err(format!("unexpected {other:?} at token {}", self.pos)),
        }
    }
}

/// Checks `expr` against the expression dialect: `or`/`not`, `==`/`!=`,
/// calls, parentheses, identifiers, and `True`/`False`.
pub fn validate_expression(expr: &str) -> Result<(), String> {
    let mut p = ExprParser {
        toks: tokenize(expr)?,
        pos: 0,
    };
    p.disjunction()?;
    match p.peek() {
        None => Ok(()),
        Some(t) => Err(format!("trailing {t:?}")),
    }
}

#[derive(Debug, Error)]
pub enum EmbedError {
    #[error("{url}: gave up after {attempts} attempts: {message}")]
    Network {
        url: String,
        attempts: u32,
        message: String,
    },
    #[error("{url}: service rejected the expression ({status}): {message}")]
    Rejected {
        url: String,
        status: u16,
        message: String,
    },
    #[error("embedding has {actual} entries, expected {expected}")]
    Length { expected: usize, actual: usize },
    #[error("malformed response: {0}")]
    Malformed(String),
    #[error("no embedding endpoint configured; set {ENDPOINT_ENV}")]
    NoEndpoint,
}

/// Maps expression text to a fixed-length vector.
pub trait Embedder {
    fn dim(&self) -> usize;
    fn embed(&self, expression: &str) -> Result<Vec<f32>, EmbedError>;
}

impl<T: Embedder + ?Sized> Embedder for &T {
    fn dim(&self) -> usize {
        (**self).dim()
    }

    fn embed(&self, expression: &str) -> Result<Vec<f32>, EmbedError> {
        (**self).embed(expression)
    }
}

impl<T: Embedder + ?Sized> Embedder for Arc<T> {
    fn dim(&self) -> usize {
        (**self).dim()
    }

    fn embed(&self, expression: &str) -> Result<Vec<f32>, EmbedError> {
        (**self).embed(expression)
    }
}

pub const STUB_SEED: u64 = 0x2545_f491_4f6c_dd1d;

fn fnv1a(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

/// The stand-in encoder. The expression's FNV-1a hash, xored with `seed`,
/// starts a SplitMix64 stream; each draw keeps its top 53 bits as a
/// uniform `u` in [0, 1) and contributes `2u - 1`.
pub fn stub_vector(expression: &str, dim: usize, seed: u64) -> Vec<f32> {
    let mut state = fnv1a(expression.as_bytes()) ^ seed;
    (0..dim)
        .map(|_| {
            state = state.wrapping_add(0x9e37_79b9_7f4a_7c15);
            let mut z = state;
            z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
            z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
            z ^= z >> 31;
            let u = (z >> 11) as f64 / (1u64 << 53) as f64;
            (2.0 * u - 1.0) as f32
        })
        .collect()
}

/// [`stub_vector`] in process, without a network hop.
#[derive(Debug, Clone, Copy)]
pub struct HashEmbedder {
    pub dim: usize,
    pub seed: u64,
}

impl Default for HashEmbedder {
    fn default() -> Self {
        HashEmbedder {
            dim: DEFAULT_DIM,
            seed: STUB_SEED,
        }
    }
}

impl Embedder for HashEmbedder {
    fn dim(&self) -> usize {
        self.dim
    }

    fn embed(&self, expression: &str) -> Result<Vec<f32>, EmbedError> {
        Ok(stub_vector(expression, self.dim, self.seed))
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EmbeddingRequest {
    pub expression: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EmbeddingResponse {
    pub vector: Vec<f32>,
}

/// Latency of `embed` calls over the client's lifetime, hits included.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct LatencyStats {
    pub count: u64,
    pub mean: Duration,
    pub max: Duration,
    pub cache_hits: u64,
    pub hit_ratio: f64,
}

#[derive(Debug, Default)]
struct LatencyTotals {
    count: u64,
    total: Duration,
    max: Duration,
    hits: u64,
}

type Slot = Arc<OnceCell<Arc<Vec<f32>>>>;

/// HTTP client for an embedding service. Each distinct expression is
/// fetched at most once; concurrent misses on one key share a single
/// request.
pub struct EmbeddingClient {
    url: String,
    dim: usize,
    agent: ureq::Agent,
    cache: Option<Mutex<HashMap<String, Slot>>>,
    retries: u32,
    backoff: Duration,
    totals: Mutex<LatencyTotals>,
}

impl std::fmt::Debug for EmbeddingClient {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("EmbeddingClient")
            .field("url", &self.url)
            .field("dim", &self.dim)
            .field("cached", &self.cache.is_some())
            .finish()
    }
}

impl EmbeddingClient {
    pub fn new(url: impl Into<String>, dim: usize) -> Self {
        let agent: ureq::Agent = ureq::Agent::config_builder()
            .timeout_global(Some(Duration::from_secs(10)))
            .http_status_as_error(false)
            .build()
            .into();
        EmbeddingClient {
            url: url.into(),
            dim,
            agent,
            cache: Some(Mutex::new(HashMap::new())),
            retries: 3,
            backoff: Duration::from_millis(50),
            totals: Mutex::new(LatencyTotals::default()),
        }
    }

    /// Reads the URL from `SATGYM_EMBEDDER_URL`.
    pub fn from_env(dim: usize) -> Result<Self, EmbedError> {
        let url = std::env::var(ENDPOINT_ENV).map_err(|_| EmbedError::NoEndpoint)?;
        Ok(Self::new(url, dim))
    }

    pub fn without_cache(mut self) -> Self {
        self.cache = None;
        self
    }

    /// Retries after the first failed attempt, waiting `base`, `2 base`, ...
    pub fn with_retries(mut self, retries: u32, base: Duration) -> Self {
        self.retries = retries;
        self.backoff = base;
        self
    }

    pub fn url(&self) -> &str {
        &self.url
    }

    pub fn stats(&self) -> LatencyStats {
        let t = self.totals.lock().expect("stats lock");
        LatencyStats {
            count: t.count,
            mean: if t.count == 0 {
                Duration::ZERO
            } else {
                t.total / t.count as u32
            },
            max: t.max,
            cache_hits: t.hits,
            hit_ratio: if t.count == 0 {
                0.0
            } else {
                t.hits as f64 / t.count as f64
            },
        }
    }

    fn record(&self, elapsed: Duration, hit: bool) {
        let mut t = self.totals.lock().expect("stats lock");
        t.count += 1;
        t.total += elapsed;
        t.max = t.max.max(elapsed);
        t.hits += u64::from(hit);
    }

    fn fetch_once(&self, expression: &str) -> Result<Vec<f32>, (bool, EmbedError)> {
        let body = EmbeddingRequest {
            expression: expression.to_string(),
        };
        let network = |e: &dyn std::fmt::Display| {
            (
                true,
                EmbedError::Network {
                    url: self.url.clone(),
                    attempts: 1,
                    message: e.to_string(),
                },
            )
        };
        let mut response = self
            .agent
            .post(&self.url)
            .send_json(&body)
            .map_err(|e| network(&e))?;
        let status = response.status().as_u16();
        if status >= 500 {
            return Err(network(&format!("HTTP {status}")));
        }
        if status >= 400 {
            let message = response.body_mut().read_to_string().unwrap_or_default();
            return Err((
                false,
                EmbedError::Rejected {
                    url: self.url.clone(),
                    status,
                    message,
                },
            ));
        }
        let parsed: EmbeddingResponse = response
            .body_mut()
            .read_json()
            .map_err(|e| (false, EmbedError::Malformed(e.to_string())))?;
        if parsed.vector.len() != self.dim {
            return Err((
                false,
                EmbedError::Length {
                    expected: self.dim,
                    actual: parsed.vector.len(),
                },
            ));
        }
        Ok(parsed.vector)
    }

    fn fetch(&self, expression: &str) -> Result<Vec<f32>, EmbedError> {
        let mut delay = self.backoff;
        let mut attempt = 0;
        loop {
            attempt += 1;
            match self.fetch_once(expression) {
                Ok(v) => return Ok(v),
                Err((true, EmbedError::Network { message, .. })) => {
                    if attempt > self.retries {
                        return Err(EmbedError::Network {
                            url: self.url.clone(),
                            attempts: attempt,
                            message,
                        });
                    }
                    log::debug!("embedding attempt {attempt} failed: {message}");
                    thread::sleep(delay);
                    delay *= 2;
                }
                Err((_, e)) => return Err(e),
            }
        }
    }
}

impl Embedder for EmbeddingClient {
    fn dim(&self) -> usize {
        self.dim
    }

    fn embed(&self, expression: &str) -> Result<Vec<f32>, EmbedError> {
        let started = Instant::now();
        let Some(cache) = &self.cache else {
            let v = self.fetch(expression)?;
            self.record(started.elapsed(), false);
            return Ok(v);
        };
        let slot: Slot = {
            let mut map = cache.lock().expect("cache lock");
            if let Some(v) = map.get(expression).and_then(|s| s.get()) {
                let v = v.as_ref().clone();
                drop(map);
                self.record(started.elapsed(), true);
                return Ok(v);
            }
            Arc::clone(map.entry(expression.to_string()).or_default())
        };
        let mut fetched = false;
        let v = slot.get_or_try_init(|| {
            fetched = true;
            self.fetch(expression).map(Arc::new)
        })?;
        let v = v.as_ref().clone();
        self.record(started.elapsed(), !fetched);
        Ok(v)
    }
}

/// Behaviour of the stand-in service.
#[derive(Debug, Clone)]
pub struct StubConfig {
    pub dim: usize,
    pub seed: u64,
    /// Answer this many requests with HTTP 503 first.
    pub fail_first: usize,
    /// Drop the last entry of every vector.
    pub truncate: bool,
    pub workers: usize,
}

impl Default for StubConfig {
    fn default() -> Self {
        StubConfig {
            dim: DEFAULT_DIM,
            seed: STUB_SEED,
            fail_first: 0,
            truncate: false,
            workers: 4,
        }
    }
}

/// A deterministic embedding service on loopback speaking the same HTTP
/// contract as the real one. Stops when dropped.
pub struct StubServer {
    server: Arc<tiny_http::Server>,
    addr: SocketAddr,
    served: Arc<AtomicUsize>,
    workers: Vec<JoinHandle<()>>,
}

impl StubServer {
    pub fn start(port: u16, config: StubConfig) -> std::io::Result<Self> {
        let server = tiny_http::Server::http(("127.0.0.1", port)).map_err(|e| {
            std::io::Error::new(std::io::ErrorKind::AddrNotAvailable, e.to_string())
        })?;
        let addr = server
            .server_addr()
            .to_ip()
            .ok_or_else(|| std::io::Error::other("stub server is not on an IP socket"))?;
        let server = Arc::new(server);
        let served = Arc::new(AtomicUsize::new(0));
        let workers = (0..config.workers.max(1))
            .map(|_| {
                let server = Arc::clone(&server);
                let served = Arc::clone(&served);
                let config = config.clone();
                thread::spawn(move || {
                    while let Ok(request) = server.recv() {
                        let n = served.fetch_add(1, Ordering::SeqCst);
                        handle_stub_request(request, &config, n);
                    }
                })
            })
            .collect();
        Ok(StubServer {
            server,
            addr,
            served,
            workers,
        })
    }

    pub fn addr(&self) -> SocketAddr {
        self.addr
    }

    pub fn url(&self) -> String {
        format!("http://{}/embed", self.addr)
    }

    /// Requests received so far, failed ones included.
    pub fn requests_served(&self) -> usize {
        self.served.load(Ordering::SeqCst)
    }

    /// Blocks the calling thread until the process exits.
    pub fn wait(mut self) {
        for handle in self.workers.drain(..) {
            let _ = handle.join();
        }
    }
}

impl Drop for StubServer {
    fn drop(&mut self) {
        for _ in 0..self.workers.len() {
            self.server.unblock();
        }
        for handle in self.workers.drain(..) {
            let _ = handle.join();
        }
    }
}

fn handle_stub_request(mut request: tiny_http::Request, config: &StubConfig, index: usize) {
    let json = |status: u16, body: serde_json::Value| {
        tiny_http::Response::from_string(body.to_string())
            .with_status_code(status)
            .with_header(
                tiny_http::Header::from_bytes(&b"Content-Type"[..], &b"application/json"[..])
                    .expect("static header"),
            )
    };
    let reply = if index < config.fail_first {
        json(503, serde_json::json!({"error": "warming up"}))
    } else if *request.method() != tiny_http::Method::Post {
        json(405, serde_json::json!({"error": "POST only"}))
    } else {
        let mut body = String::new();
        match request.as_reader().read_to_string(&mut body) {
            Err(e) => json(400, serde_json::json!({"error": e.to_string()})),
            Ok(_) => match serde_json::from_str::<EmbeddingRequest>(&body) {
                Err(e) => json(400, serde_json::json!({"error": e.to_string()})),
                Ok(req) => match validate_expression(&req.expression) {
                    Err(e) => json(400, serde_json::json!({"error": e})),
                    Ok(()) => {
                        let mut vector = stub_vector(&req.expression, config.dim, config.seed);
                        if config.truncate {
                            vector.pop();
                        }
                        json(200, serde_json::json!({ "vector": vector }))
                    }
                },
            },
        }
    };
    let _ = request.respond(reply);
}
