//! Drives a prover in interactive clause-selection mode over its standard
//! streams: the prover prints clauses and a prompt, we answer with a label.

use std::collections::HashMap;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::PathBuf;
use std::process::{Child, ChildStdin, Command, Stdio};
use std::sync::mpsc::{self, Receiver, RecvTimeoutError};
use std::sync::{Arc, Mutex};
use std::thread;
use std::time::{Duration, Instant};

use regex::Regex;

use crate::backend::{Backend, BackendError, ProverStatus, SelectResult};
use crate::clause::{is_input_rule, variant_key, Clause, Literal};
use crate::tptp::{parse_clause, Problem};

const BACKEND: &str = "stdio";

pub const PROMPT: &str = "Pick a clause:";
pub const REFUTATION_LINE: &str = "% Refutation found.";
pub const SATURATION_LINE: &str = "% SZS status Satisfiable";
/// Placeholder replaced by the problem file path in argument templates.
pub const PROBLEM_PLACEHOLDER: &str = "{problem}";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum LineClass {
    NewClause,
    Prompt,
    Refutation,
    Saturation,
    Ignorable,
}

/// Regular expressions sorting prover output lines into classes. The
/// new-clause pattern must capture `label` and `literals`, and may capture
/// `rule` and `parents` (comma separated).
#[derive(Debug, Clone)]
pub struct LinePatterns {
    pub new_clause: Regex,
    pub prompt: Regex,
    pub refutation: Regex,
    pub saturation: Regex,
    pub ignorable: Regex,
}

impl Default for LinePatterns {
    fn default() -> Self {
        let re = |s: &str| Regex::new(s).expect("built-in pattern");
        LinePatterns {
            new_clause: re(
                r"^\[SA\] new: (?P<label>[A-Za-z0-9_]+)\. (?P<literals>[^\[]+?) \[(?P<rule>[a-z_]+)(?: (?P<parents>[A-Za-z0-9_,]+))?\]$",
            ),
            prompt: re(r"^Pick a clause:\s*$"),
            refutation: re(r"^% Refutation found\b"),
            saturation: re(r"^(% SZS status (Satisfiable|CounterSatisfiable)\b|% Saturation\b)"),
            ignorable: re(concat!(
                r"^(\s*$|%$|% [^RS].*",
                r"|% (Refutation not found|Running|Reached|Success|SZS (output|status (Unsatisfiable|Theorem|ContradictoryAxioms))).*",
                r"|\[SA\] (active|passive|forward reduce|backward reduce):.*)$",
            )),
        }
    }
}

impl LinePatterns {
    fn ordered(&self) -> [(LineClass, &Regex); 5] {
        [
            (LineClass::NewClause, &self.new_clause),
            (LineClass::Prompt, &self.prompt),
            (LineClass::Refutation, &self.refutation),
            (LineClass::Saturation, &self.saturation),
            (LineClass::Ignorable, &self.ignorable),
        ]
    }

    /// Every class whose pattern matches `line`.
    pub fn matches(&self, line: &str) -> Vec<LineClass> {
        self.ordered()
            .into_iter()
            .filter(|(_, re)| re.is_match(line))
            .map(|(class, _)| class)
            .collect()
    }

    /// The first matching class, in declaration order.
    pub fn classify(&self, line: &str) -> Option<LineClass> {
        self.ordered()
            .into_iter()
            .find(|(_, re)| re.is_match(line))
            .map(|(class, _)| class)
    }
}

#[derive(Debug, Clone)]
pub struct StdioAdapterConfig {
    pub executable: PathBuf,
    /// Arguments; `{problem}` is replaced by the problem path.
    pub args: Vec<String>,
    pub patterns: LinePatterns,
    /// Per-read deadline while waiting for the next prompt.
    pub timeout: Duration,
    /// Lines tolerated before the first prompt.
    pub line_budget: usize,
}

impl Default for StdioAdapterConfig {
    fn default() -> Self {
        StdioAdapterConfig {
            executable: PathBuf::from("vampire"),
            args: ["--manual_cs", "on", "--show_new", "on", PROBLEM_PLACEHOLDER]
                .map(String::from)
                .to_vec(),
            patterns: LinePatterns::default(),
            timeout: Duration::from_secs(10),
            line_budget: 100_000,
        }
    }
}

impl StdioAdapterConfig {
    pub fn new(executable: impl Into<PathBuf>, args: Vec<String>) -> Self {
        StdioAdapterConfig {
            executable: executable.into(),
            args,
            ..Self::default()
        }
    }
}

/// One clause line in the default output grammar.
pub fn format_new_clause(clause: &Clause) -> String {
    let mut out = format!(
        "[SA] new: {}. {} [{}",
        clause.label(),
        clause.literals(),
        clause.inference_rule()
    );
    if !clause.inference_parents().is_empty() {
        out.push(' ');
        out.push_str(&clause.inference_parents().join(","));
    }
    out.push(']');
    out
}

enum ReadEvent {
    Line(String),
    Eof,
    Failed(String),
}

struct Running {
    child: Child,
    stdin: ChildStdin,
    lines: Receiver<ReadEvent>,
    stderr_tail: Arc<Mutex<String>>,
    finished: bool,
}

/// A backend talking to a child process. The process is launched by
/// `start` and killed by `stop` or the next `start`.
pub struct StdioBackend {
    config: StdioAdapterConfig,
    running: Option<Running>,
    problem_file: Option<tempfile::TempPath>,
    input_roles: HashMap<Vec<Literal>, String>,
}

impl std::fmt::Debug for StdioBackend {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("StdioBackend")
            .field("executable", &self.config.executable)
            .field("running", &self.running.is_some())
            .finish()
    }
}

enum Stop {
    Prompt,
    Refutation,
    Saturation,
}

impl StdioBackend {
    pub fn new(config: StdioAdapterConfig) -> Self {
        StdioBackend {
            config,
            running: None,
            problem_file: None,
            input_roles: HashMap::new(),
        }
    }

    pub fn config(&self) -> &StdioAdapterConfig {
        &self.config
    }

    fn protocol(message: impl Into<String>) -> BackendError {
        BackendError::Protocol {
            backend: BACKEND.into(),
            message: message.into(),
        }
    }

    fn disconnected(&mut self, message: &str) -> BackendError {
        let mut message = message.to_string();
        if let Some(run) = &mut self.running {
            run.finished = true;
            if let Ok(Some(status)) = run.child.try_wait() {
                message.push_str(&format!(" ({status})"));
            }
            let tail = run
                .stderr_tail
                .lock()
                .map(|t| t.clone())
                .unwrap_or_default();
            if !tail.trim().is_empty() {
                message.push_str(&format!("; stderr: {}", tail.trim()));
            }
        }
        BackendError::Disconnected {
            backend: BACKEND.into(),
            message,
        }
    }

    fn problem_path(&mut self, problem: &Problem) -> Result<PathBuf, BackendError> {
        if let Some(path) = &problem.path {
            return Ok(path.clone());
        }
        let startup = |e: std::io::Error| BackendError::Startup {
            backend: BACKEND.into(),
            message: format!("cannot write problem file: {e}"),
        };
        let mut file = tempfile::Builder::new()
            .prefix("satgym-")
            .suffix(".p")
            .tempfile()
            .map_err(startup)?;
        for clause in &problem.clauses {
            writeln!(file, "{clause}").map_err(startup)?;
        }
        let path = file.into_temp_path();
        let out = path.to_path_buf();
        self.problem_file = Some(path);
        Ok(out)
    }

    fn spawn(&mut self, problem_path: &str) -> Result<(), BackendError> {
        let args: Vec<String> = self
            .config
            .args
            .iter()
            .map(|a| a.replace(PROBLEM_PLACEHOLDER, problem_path))
            .collect();
        let mut child = Command::new(&self.config.executable)
            .args(&args)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::piped())
            .spawn()
            .map_err(|e| BackendError::Startup {
                backend: BACKEND.into(),
                message: format!("cannot launch {}: {e}", self.config.executable.display()),
            })?;
        let stdin = child.stdin.take().expect("piped");
        let stdout = child.stdout.take().expect("piped");
        let mut stderr = child.stderr.take().expect("piped");

        let (tx, lines) = mpsc::channel();
        thread::spawn(move || {
            let mut reader = BufReader::new(stdout);
            loop {
                let mut line = String::new();
                let event = match reader.read_line(&mut line) {
                    Ok(0) => ReadEvent::Eof,
                    Ok(_) => ReadEvent::Line(line.trim_end_matches(['\n', '\r']).to_string()),
                    Err(e) => ReadEvent::Failed(e.to_string()),
                };
                let last = !matches!(event, ReadEvent::Line(_));
                if tx.send(event).is_err() || last {
                    break;
                }
            }
        });
        let stderr_tail = Arc::new(Mutex::new(String::new()));
        let tail = Arc::clone(&stderr_tail);
        thread::spawn(move || {
            let mut buf = [0u8; 4096];
            while let Ok(n) = stderr.read(&mut buf) {
                if n == 0 {
                    break;
                }
                if let Ok(mut t) = tail.lock() {
                    t.push_str(&String::from_utf8_lossy(&buf[..n]));
                    if t.len() > 2048 {
                        let cut = t.len() - 2048;
                        let cut = (cut..t.len())
                            .find(|&i| t.is_char_boundary(i))
                            .unwrap_or(t.len());
                        t.drain(..cut);
                    }
                }
            }
        });
        self.running = Some(Running {
            child,
            stdin,
            lines,
            stderr_tail,
            finished: false,
        });
        Ok(())
    }

    fn parse_new_clause(&self, line: &str) -> Result<Clause, BackendError> {
        let caps = self
            .config
            .patterns
            .new_clause
            .captures(line)
            .ok_or_else(|| {
                Self::protocol(format!("new-clause pattern lost its captures on `{line}`"))
            })?;
        let label = caps
            .name("label")
            .ok_or_else(|| Self::protocol("new-clause pattern has no `label` group"))?
            .as_str();
        let text = caps
            .name("literals")
            .ok_or_else(|| Self::protocol("new-clause pattern has no `literals` group"))?
            .as_str();
        let literals = parse_clause(text.trim())
            .map_err(|e| Self::protocol(format!("bad clause in `{line}`: {e}")))?;
        let rule = caps.name("rule").map_or("input", |m| m.as_str());
        let parents: Vec<String> = caps
            .name("parents")
            .map(|m| {
                m.as_str()
                    .split(',')
                    .map(str::trim)
                    .filter(|p| !p.is_empty())
                    .map(String::from)
                    .collect()
            })
            .unwrap_or_default();
        if is_input_rule(rule) && parents.is_empty() {
            let role = self
                .input_roles
                .get(&variant_key(&literals))
                .cloned()
                .unwrap_or_else(|| "axiom".to_string());
            Ok(Clause::new(label, role, literals).with_inference(rule, parents))
        } else {
            Ok(Clause::new(label, "plain", literals).with_inference(rule, parents))
        }
    }

    /// Reads lines until a prompt or a terminal line.
    fn read_until_stop(&mut self, budget: usize) -> Result<(Vec<Clause>, Stop), BackendError> {
        let deadline = Instant::now() + self.config.timeout;
        let mut clauses = Vec::new();
        let mut seen = 0usize;
        loop {
            let run = self.running.as_mut().ok_or(BackendError::NotStarted)?;
            let remaining = deadline.saturating_duration_since(Instant::now());
            let event = match run.lines.recv_timeout(remaining) {
                Ok(event) => event,
                Err(RecvTimeoutError::Timeout) => {
                    return Err(BackendError::Timeout {
                        backend: BACKEND.into(),
                        seconds: self.config.timeout.as_secs_f64(),
                    })
                }
                Err(RecvTimeoutError::Disconnected) => ReadEvent::Eof,
            };
            let line = match event {
                ReadEvent::Line(line) => line,
                ReadEvent::Eof => return Err(self.disconnected("prover closed its output")),
                ReadEvent::Failed(e) => return Err(self.disconnected(&format!("read failed: {e}"))),
            };
            seen += 1;
            match self.config.patterns.classify(&line) {
                Some(LineClass::NewClause) => clauses.push(self.parse_new_clause(&line)?),
                Some(LineClass::Prompt) => return Ok((clauses, Stop::Prompt)),
                Some(LineClass::Refutation) => return Ok((clauses, Stop::Refutation)),
                Some(LineClass::Saturation) => return Ok((clauses, Stop::Saturation)),
                Some(LineClass::Ignorable) => {}
                None => {
                    if let Some(run) = &mut self.running {
                        run.finished = true;
                    }
                    return Err(Self::protocol(format!(
                        "desynchronized on unrecognized line `{line}`"
                    )));
                }
            }
            if seen >= budget {
                return Err(Self::protocol(format!("no prompt within {budget} lines")));
            }
        }
    }
}

impl Backend for StdioBackend {
    fn name(&self) -> &str {
        BACKEND
    }

    fn start(&mut self, problem: &Problem) -> Result<Vec<Clause>, BackendError> {
        self.stop();
        self.input_roles = problem
            .clauses
            .iter()
            .map(|c| (variant_key(c.parsed_literals()), c.role().to_string()))
            .collect();
        let path = self.problem_path(problem)?;
        self.spawn(&path.to_string_lossy())?;
        let result = self.read_until_stop(self.config.line_budget);
        match result {
            Ok((clauses, Stop::Prompt)) => Ok(clauses),
            Ok((clauses, _)) => {
                if let Some(run) = &mut self.running {
                    run.finished = true;
                }
                Ok(clauses)
            }
            Err(e) => {
                let e = match e {
                    BackendError::Disconnected { message, .. }
                    | BackendError::Protocol { message, .. } => BackendError::Startup {
                        backend: BACKEND.into(),
                        message,
                    },
                    other => other,
                };
                self.stop();
                Err(e)
            }
        }
    }

    fn select(&mut self, label: &str) -> Result<SelectResult, BackendError> {
        let run = self.running.as_mut().ok_or(BackendError::NotStarted)?;
        if run.finished {
            return Err(self.disconnected("prover already finished"));
        }
        if let Err(e) = writeln!(run.stdin, "{label}").and_then(|_| run.stdin.flush()) {
            return Err(self.disconnected(&format!("write failed: {e}")));
        }
        let (mut new_clauses, stop) = self.read_until_stop(usize::MAX)?;
        let status = match stop {
            Stop::Prompt => ProverStatus::Running,
            Stop::Refutation => {
                if !new_clauses.iter().any(Clause::is_empty) {
                    new_clauses.push(
                        Clause::new(format!("{label}_refutation"), "plain", Vec::new())
                            .with_inference("refutation", vec![label.to_string()]),
                    );
                }
                ProverStatus::Refutation
            }
            Stop::Saturation => ProverStatus::Saturated,
        };
        if status != ProverStatus::Running {
            if let Some(run) = &mut self.running {
                run.finished = true;
            }
        }
        Ok(SelectResult {
            new_clauses,
            eliminated_labels: Vec::new(),
            status,
        })
    }

    fn stop(&mut self) {
        if let Some(mut run) = self.running.take() {
            let _ = run.child.kill();
            let _ = run.child.wait();
        }
        self.problem_file = None;
    }
}

impl Drop for StdioBackend {
    fn drop(&mut self) {
        self.stop();
    }
}
