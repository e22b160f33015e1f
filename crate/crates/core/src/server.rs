//! JSON-lines command server exposing one environment to another process.
//!
//! Each input line is a command object such as `{"cmd":"step","action":3}`;
//! each reply is one line with `"ok": true` plus the result fields, or
//! `"ok": false` with an `error` object carrying `kind` and `message`.

use std::io::{BufRead, Write};
use std::path::PathBuf;

use serde::Deserialize;
use serde_json::{json, Value};
use thiserror::Error;

use crate::clause::render_clause;
use crate::env::{EnvConfig, EnvError, Environment, Observation, RenderMode, SaturationEnv};

#[derive(Debug, Deserialize)]
#[serde(tag = "cmd", rename_all = "snake_case", deny_unknown_fields)]
pub enum Command {
    Make {
        #[serde(default)]
        max_clauses: Option<usize>,
        #[serde(default)]
        problem: Option<PathBuf>,
        #[serde(default)]
        verbose_render: Option<bool>,
    },
    SetTask {
        path: PathBuf,
    },
    Reset {
        #[serde(default)]
        seed: Option<u64>,
    },
    Step {
        action: usize,
    },
    Render {
        #[serde(default = "default_mode")]
        mode: String,
    },
    Close,
}

fn default_mode() -> String {
    "ansi".to_string()
}

#[derive(Debug, Error)]
pub enum ServeError {
    #[error("transport: {0}")]
    Io(#[from] std::io::Error),
    #[error("command received after close")]
    UseAfterClose,
}

/// Clauses as verbose `cnf` lines, their birth steps, and the mask.
pub fn observation_json(observation: &Observation) -> Value {
    let clauses: Vec<String> = observation
        .real_obs
        .iter()
        .map(|c| render_clause(c, true))
        .collect();
    let births: Vec<usize> = observation
        .real_obs
        .iter()
        .map(|c| c.birth_step())
        .collect();
    json!({
        "real_obs": clauses,
        "birth_steps": births,
        "action_mask": observation.action_mask,
    })
}

fn error_kind(e: &EnvError) -> &'static str {
    match e {
        EnvError::InvalidAction { .. } => "invalid_action",
        EnvError::InvalidArm(_) => "invalid_action",
        EnvError::NoSelectableClause => "invalid_action",
        EnvError::EpisodeFinished => "episode_finished",
        EnvError::NotReset => "not_reset",
        EnvError::UnknownRenderMode(_) => "unknown_render_mode",
        EnvError::Task(_) | EnvError::TaskTooLarge { .. } => "task",
        EnvError::Config(_) => "config",
        EnvError::Backend(_) => "backend",
        EnvError::Embedding { .. } => "embedding",
    }
}

fn failure(kind: &str, message: impl ToString) -> Value {
    json!({"ok": false, "error": {"kind": kind, "message": message.to_string()}})
}

fn env_failure(e: &EnvError) -> Value {
    failure(error_kind(e), e)
}

/// Serves commands until end of input. `base` supplies defaults for
/// `make`; only one environment is created per server.
pub struct EnvServer {
    base: EnvConfig,
    env: Option<SaturationEnv>,
    closed: bool,
}

impl EnvServer {
    pub fn new(base: EnvConfig) -> Self {
        EnvServer {
            base,
            env: None,
            closed: false,
        }
    }

    /// Handles one command line and returns the reply.
    pub fn handle_line(&mut self, line: &str) -> Result<Value, ServeError> {
        if self.closed {
            return Err(ServeError::UseAfterClose);
        }
        let command: Command = match serde_json::from_str(line) {
            Ok(c) => c,
            Err(e) => return Ok(failure("malformed_command", e)),
        };
        Ok(self.handle(command))
    }

    fn handle(&mut self, command: Command) -> Value {
        if let Command::Make {
            max_clauses,
            problem,
            verbose_render,
        } = command
        {
            if self.env.is_some() {
                return failure("already_made", "this server already has an environment");
            }
            let mut config = self.base.clone();
            if let Some(n) = max_clauses {
                config.max_clauses = n;
            }
            if problem.is_some() {
                config.problem_path = problem;
            }
            if let Some(v) = verbose_render {
                config.verbose_render = v;
            }
            return match SaturationEnv::new(config) {
                Ok(env) => {
                    let reply = json!({
                        "ok": true,
                        "max_clauses": env.max_clauses(),
                        "backend": env.backend_name(),
                        "problem": env.problem().name,
                    });
                    self.env = Some(env);
                    reply
                }
                Err(e) => env_failure(&e),
            };
        }
        if let Command::Close = command {
            self.closed = true;
            self.env = None;
            return json!({"ok": true});
        }
        let Some(env) = self.env.as_mut() else {
            return failure("no_environment", "send make first");
        };
        match command {
            Command::SetTask { path } => match env.set_task(&path) {
                Ok(()) => json!({"ok": true}),
                Err(e) => env_failure(&e),
            },
            Command::Reset { seed } => match env.reset(seed) {
                Ok((obs, info)) => {
                    json!({"ok": true, "observation": observation_json(&obs), "info": info})
                }
                Err(e) => env_failure(&e),
            },
            Command::Step { action } => match env.step(action) {
                Ok(out) => json!({
                    "ok": true,
                    "observation": observation_json(&out.observation),
                    "reward": out.reward,
                    "terminated": out.terminated,
                    "truncated": out.truncated,
                    "info": out.info,
                }),
                Err(e) => env_failure(&e),
            },
            Command::Render { mode } => {
                let mode = match mode.parse::<RenderMode>() {
                    Ok(m) => m,
                    Err(e) => return env_failure(&e),
                };
                // stdout may be the transport, so human output goes to stderr
                match env.render(RenderMode::Ansi) {
                    Ok(text) => match mode {
                        RenderMode::Ansi => json!({"ok": true, "text": text}),
                        RenderMode::Human => {
                            eprint!("{}", text.unwrap_or_default());
                            json!({"ok": true, "text": null})
                        }
                    },
                    Err(e) => env_failure(&e),
                }
            }
            Command::Make { .. } | Command::Close => unreachable!("handled above"),
        }
    }

    /// Reads commands line by line and writes one reply per command.
    /// A command after `close` gets a fatal reply and ends the server
    /// with an error.
    pub fn serve(&mut self, input: impl BufRead, mut output: impl Write) -> Result<(), ServeError> {
        for line in input.lines() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            match self.handle_line(&line) {
                Ok(reply) => {
                    writeln!(output, "{reply}")?;
                    output.flush()?;
                }
                Err(ServeError::UseAfterClose) => {
                    let mut reply = failure("closed", "environment was closed");
                    reply["error"]["fatal"] = json!(true);
                    writeln!(output, "{reply}")?;
                    output.flush()?;
                    return Err(ServeError::UseAfterClose);
                }
                Err(e) => return Err(e),
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run(script: &str) -> (Vec<Value>, Result<(), ServeError>) {
        let mut server = EnvServer::new(EnvConfig::default());
        let mut out = Vec::new();
        let result = server.serve(script.as_bytes(), &mut out);
        let replies = String::from_utf8(out)
            .unwrap()
            .lines()
            .map(|l| serde_json::from_str(l).unwrap())
            .collect();
        (replies, result)
    }

    #[test]
    fn masked_step_is_a_structured_error() {
        let (replies, result) = run(concat!(
            r#"{"cmd":"make","max_clauses":20}"#,
            "\n",
            r#"{"cmd":"reset"}"#,
            "\n",
            r#"{"cmd":"step","action":19}"#,
            "\n",
            r#"{"cmd":"render","mode":"ansi"}"#,
            "\n",
        ));
        result.unwrap();
        assert_eq!(replies[1]["info"], json!({}));
        assert_eq!(
            replies[1]["observation"]["action_mask"]
                .as_array()
                .unwrap()
                .len(),
            20
        );
        assert_eq!(replies[2]["ok"], json!(false));
        assert_eq!(replies[2]["error"]["kind"], json!("invalid_action"));
        assert!(replies[3]["text"]
            .as_str()
            .unwrap()
            .starts_with("cnf(a_is_idempotent"));
    }

    #[test]
    fn malformed_lines_keep_the_server_alive() {
        let (replies, result) = run("not json\n{\"cmd\":\"fly\"}\n{\"cmd\":\"reset\"}\n");
        result.unwrap();
        assert_eq!(replies[0]["error"]["kind"], json!("malformed_command"));
        assert_eq!(replies[1]["error"]["kind"], json!("malformed_command"));
        assert_eq!(replies[2]["error"]["kind"], json!("no_environment"));
    }

    #[test]
    fn command_after_close_is_fatal() {
        let (replies, result) =
            run("{\"cmd\":\"make\"}\n{\"cmd\":\"close\"}\n{\"cmd\":\"step\",\"action\":0}\n");
        assert!(matches!(result, Err(ServeError::UseAfterClose)));
        assert_eq!(replies[2]["error"]["fatal"], json!(true));
    }
}
