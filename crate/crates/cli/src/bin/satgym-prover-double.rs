//! Stand-in for an external prover, used to exercise the adapters.
//!
//! `live` runs the embedded prover behind the interactive stdio grammar,
//! optionally recording the session as a transcript. `replay` plays a
//! recorded transcript back, checking each selection it receives. `relay`
//! connects to a relay endpoint as the prover client.

use std::fs::File;
use std::io::{self, BufRead, BufWriter, Write};
use std::net::SocketAddr;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use satgym_core::external::relay::serve_embedded_prover;
use satgym_core::external::stdio::{format_new_clause, PROMPT, REFUTATION_LINE, SATURATION_LINE};
use satgym_core::{Backend, EmbeddedProver, Problem, ProblemLoader, ProverStatus};

/// Transcript lines with this prefix are input the prover expects.
const INPUT_MARK: &str = ">> ";

#[derive(Debug, Parser)]
#[command(name = "satgym-prover-double")]
struct Cli {
    #[command(subcommand)]
    mode: Mode,
}

#[derive(Debug, Subcommand)]
enum Mode {
    Live {
        /// Write the session to this transcript file.
        #[arg(long)]
        record: Option<PathBuf>,
        problem: PathBuf,
    },
    Replay {
        transcript: PathBuf,
        /// Accepted for argument compatibility; unused.
        problem: Option<PathBuf>,
    },
    Relay {
        #[arg(long)]
        connect: SocketAddr,
        problem: PathBuf,
    },
}

struct Session {
    out: io::StdoutLock<'static>,
    record: Option<BufWriter<File>>,
}

impl Session {
    /// The record is written first: the reader may kill the process as
    /// soon as it sees a terminal line.
    fn say(&mut self, line: &str) -> io::Result<()> {
        if let Some(r) = &mut self.record {
            writeln!(r, "{line}")?;
            r.flush()?;
        }
        writeln!(self.out, "{line}")
    }

    fn heard(&mut self, line: &str) -> io::Result<()> {
        if let Some(r) = &mut self.record {
            writeln!(r, "{INPUT_MARK}{line}")?;
        }
        Ok(())
    }

    fn flush(&mut self) -> io::Result<()> {
        self.out.flush()?;
        if let Some(r) = &mut self.record {
            r.flush()?;
        }
        Ok(())
    }
}

fn load(path: &PathBuf) -> Result<Problem, String> {
    ProblemLoader::new(None)
        .load(path)
        .map_err(|e| e.to_string())
}

fn live(problem: &Problem, record: Option<PathBuf>) -> Result<(), String> {
    let record = record
        .map(|p| {
            File::create(&p)
                .map(BufWriter::new)
                .map_err(|e| format!("{}: {e}", p.display()))
        })
        .transpose()?;
    let mut session = Session {
        out: io::stdout().lock(),
        record,
    };
    let io_err = |e: io::Error| e.to_string();
    let mut prover = EmbeddedProver::new();
    let initial = prover.start(problem).map_err(|e| e.to_string())?;
    session
        .say("% Running in manual clause selection mode")
        .map_err(io_err)?;
    for clause in &initial {
        session.say(&format_new_clause(clause)).map_err(io_err)?;
    }
    session.say(PROMPT).map_err(io_err)?;
    session.flush().map_err(io_err)?;

    for line in io::stdin().lock().lines() {
        let line = line.map_err(io_err)?;
        let label = line.trim();
        session.heard(label).map_err(io_err)?;
        let result = prover.select(label).map_err(|e| e.to_string())?;
        if let Some(given) = prover.clause(label) {
            let active = format!("[SA] active: {}. {}", given.label(), given.literals());
            session.say(&active).map_err(io_err)?;
        }
        for clause in &result.new_clauses {
            session.say(&format_new_clause(clause)).map_err(io_err)?;
        }
        let last = match result.status {
            ProverStatus::Running => PROMPT,
            ProverStatus::Refutation => REFUTATION_LINE,
            ProverStatus::Saturated => SATURATION_LINE,
        };
        session.say(last).map_err(io_err)?;
        session.flush().map_err(io_err)?;
        if result.status != ProverStatus::Running {
            break;
        }
    }
    Ok(())
}

fn replay(transcript: &PathBuf) -> Result<(), String> {
    let text = std::fs::read_to_string(transcript)
        .map_err(|e| format!("{}: {e}", transcript.display()))?;
    let mut out = io::stdout().lock();
    let mut input = io::stdin().lock();
    for (n, line) in text.lines().enumerate() {
        match line.strip_prefix(INPUT_MARK) {
            Some(expected) => {
                out.flush().map_err(|e| e.to_string())?;
                let mut got = String::new();
                if input.read_line(&mut got).map_err(|e| e.to_string())? == 0 {
                    return Ok(());
                }
                if got.trim() != expected {
                    return Err(format!(
                        "line {}: expected `{expected}`, got `{}`",
                        n + 1,
                        got.trim()
                    ));
                }
            }
            None => writeln!(out, "{line}").map_err(|e| e.to_string())?,
        }
    }
    out.flush().map_err(|e| e.to_string())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.mode {
        Mode::Live { record, problem } => load(&problem).and_then(|p| live(&p, record)),
        Mode::Replay { transcript, .. } => replay(&transcript),
        Mode::Relay { connect, problem } => load(&problem)
            .and_then(|p| serve_embedded_prover(connect, &p).map_err(|e| e.to_string())),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(message) => {
            eprintln!("prover double: {message}");
            ExitCode::from(1)
        }
    }
}
