//! `satgym`: run experiments and serve the environment, the stub embedding
//! service or a relay endpoint.
//!
//! Exit codes: 0 on success, 1 for invalid arguments or configuration, 2
//! for failures while running.

use std::fs::File;
use std::io::{self, BufReader, BufWriter, Write};
use std::net::TcpListener;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Duration;

use clap::{Args, Parser, Subcommand};
use satgym_core::embedding::{StubConfig, StubServer, DEFAULT_DIM, STUB_SEED};
use satgym_core::experiment::{
    build_env, run_experiment, run_experiment_on, AgentKind, DynEnv, ExperimentError, WrapperKind,
};
use satgym_core::external::relay::{embedded_launcher, RelayBackendConfig};
use satgym_core::external::stdio::StdioAdapterConfig;
use satgym_core::server::EnvServer;
use satgym_core::{BackendConfig, EnvConfig, ExperimentConfig};

#[derive(Debug, Parser)]
#[command(
    name = "satgym",
    version,
    about = "Given-clause saturation proving as an RL environment"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run episodes and write JSON-lines statistics.
    Run(RunArgs),
    /// Serve one environment over JSON lines (stdin/stdout or TCP).
    ServeEnv(ServeArgs),
    /// Serve deterministic embeddings over HTTP on loopback.
    ServeStubEmbedder(StubArgs),
    /// Listen for an external prover on a relay port and run episodes.
    Relay(RelayArgs),
}

#[derive(Debug, Args)]
struct EnvArgs {
    /// TPTP problem file; the bundled group-theory task when omitted.
    #[arg(long)]
    problem: Option<PathBuf>,
    #[arg(long, default_value_t = satgym_core::env::DEFAULT_MAX_CLAUSES)]
    max_clauses: usize,
    /// Directory that `include` directives are resolved against.
    #[arg(long)]
    axiom_root: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct ExperimentArgs {
    /// random or thompson
    #[arg(long, default_value = "random")]
    agent: String,
    /// none or bandit; thompson implies bandit
    #[arg(long)]
    wrapper: Option<String>,
    #[arg(long, default_value_t = 1)]
    episodes: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Truncate episodes after this many steps.
    #[arg(long)]
    max_steps: Option<usize>,
    /// Statistics file; standard output when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct RunArgs {
    #[command(flatten)]
    env: EnvArgs,
    #[command(flatten)]
    experiment: ExperimentArgs,
    /// embedded, stdio or relay
    #[arg(long, default_value = "embedded")]
    backend: String,
    /// Prover executable for the stdio backend.
    #[arg(long)]
    prover: Option<PathBuf>,
    /// Prover argument (repeatable); `{problem}` is replaced by the problem path.
    #[arg(long = "prover-arg", allow_hyphen_values = true)]
    prover_args: Vec<String>,
    /// Seconds to wait for prover output.
    #[arg(long, default_value_t = 10.0)]
    prover_timeout: f64,
}

#[derive(Debug, Args)]
struct ServeArgs {
    #[command(flatten)]
    env: EnvArgs,
    /// Accept one TCP client on this address instead of using stdin/stdout.
    #[arg(long)]
    listen: Option<String>,
}

#[derive(Debug, Args)]
struct StubArgs {
    #[arg(long, default_value_t = 8080)]
    port: u16,
    #[arg(long, default_value_t = DEFAULT_DIM)]
    dim: usize,
    #[arg(long, default_value_t = STUB_SEED)]
    seed: u64,
}

#[derive(Debug, Args)]
struct RelayArgs {
    #[arg(long)]
    port: u16,
    #[arg(long, default_value = "127.0.0.1")]
    host: String,
    #[command(flatten)]
    env: EnvArgs,
    #[command(flatten)]
    experiment: ExperimentArgs,
    /// Seconds to wait for the prover to connect.
    #[arg(long, default_value_t = 30.0)]
    accept_timeout: f64,
}

#[derive(Debug)]
enum Failure {
    Invalid(String),
    Runtime(String),
}

impl From<ExperimentError> for Failure {
    fn from(e: ExperimentError) -> Self {
        if e.is_validation() {
            Failure::Invalid(e.to_string())
        } else {
            Failure::Runtime(e.to_string())
        }
    }
}

fn runtime(e: impl std::fmt::Display) -> Failure {
    Failure::Runtime(e.to_string())
}

fn seconds(value: f64, flag: &str) -> Result<Duration, Failure> {
    Duration::try_from_secs_f64(value)
        .map_err(|_| Failure::Invalid(format!("--{flag} must be a non-negative number")))
}

impl EnvArgs {
    fn config(&self, backend: BackendConfig) -> EnvConfig {
        EnvConfig {
            max_clauses: self.max_clauses,
            backend,
            problem_path: self.problem.clone(),
            verbose_render: true,
            axiom_root: self.axiom_root.clone(),
        }
    }
}

fn experiment(
    args: &ExperimentArgs,
    env: EnvConfig,
) -> Result<(ExperimentConfig, Box<dyn Write>), Failure> {
    let agent: AgentKind = args.agent.parse()?;
    let wrapper = args
        .wrapper
        .as_deref()
        .map(str::parse::<WrapperKind>)
        .transpose()?;
    let config = ExperimentConfig {
        agent,
        wrapper,
        env,
        episodes: args.episodes,
        seed: args.seed,
        max_steps: args.max_steps,
    };
    config.validate()?;
    let out: Box<dyn Write> = match &args.out {
        Some(path) => Box::new(BufWriter::new(File::create(path).map_err(|e| {
            Failure::Invalid(format!("cannot create {}: {e}", path.display()))
        })?)),
        None => Box::new(BufWriter::new(io::stdout())),
    };
    Ok((config, out))
}

fn report(
    config: &ExperimentConfig,
    env: Option<DynEnv>,
    mut out: Box<dyn Write>,
) -> Result<(), Failure> {
    let summary = match env {
        Some(env) => run_experiment_on(config, env, &mut out)?,
        None => run_experiment(config, &mut out)?,
    };
    out.flush().map_err(runtime)?;
    eprintln!(
        "{} episodes, {} steps, mean reward {:.3}",
        summary.records.len(),
        summary.total_steps,
        summary.tail_mean(summary.records.len())
    );
    Ok(())
}

fn run(args: RunArgs) -> Result<(), Failure> {
    let backend = match args.backend.as_str() {
        "embedded" => BackendConfig::Embedded,
        "stdio" => {
            let mut config = StdioAdapterConfig::default();
            if let Some(exe) = args.prover {
                config.executable = exe;
            }
            if !args.prover_args.is_empty() {
                config.args = args.prover_args;
            }
            config.timeout = seconds(args.prover_timeout, "prover-timeout")?;
            BackendConfig::Stdio(config)
        }
        "relay" => BackendConfig::Relay(RelayBackendConfig {
            launcher: Some(embedded_launcher()),
            ..RelayBackendConfig::default()
        }),
        other => {
            return Err(Failure::Invalid(format!(
                "unknown backend `{other}` (embedded, stdio, relay)"
            )))
        }
    };
    let (config, out) = experiment(&args.experiment, args.env.config(backend))?;
    report(&config, None, out)
}

fn serve_env(args: ServeArgs) -> Result<(), Failure> {
    let mut server = EnvServer::new(args.env.config(BackendConfig::Embedded));
    match args.listen {
        None => server
            .serve(io::stdin().lock(), io::stdout().lock())
            .map_err(runtime),
        Some(addr) => {
            let listener = TcpListener::bind(&addr)
                .map_err(|e| Failure::Invalid(format!("cannot listen on {addr}: {e}")))?;
            eprintln!("listening on {}", listener.local_addr().map_err(runtime)?);
            let (stream, peer) = listener.accept().map_err(runtime)?;
            log::info!("env client connected from {peer}");
            let reader = BufReader::new(stream.try_clone().map_err(runtime)?);
            server.serve(reader, stream).map_err(runtime)
        }
    }
}

fn serve_stub(args: StubArgs) -> Result<(), Failure> {
    if args.dim == 0 {
        return Err(Failure::Invalid("--dim must be positive".into()));
    }
    let server = StubServer::start(
        args.port,
        StubConfig {
            dim: args.dim,
            seed: args.seed,
            ..StubConfig::default()
        },
    )
    .map_err(|e| Failure::Invalid(format!("cannot bind port {}: {e}", args.port)))?;
    println!("{}", server.url());
    io::stdout().flush().map_err(runtime)?;
    server.wait();
    Ok(())
}

fn relay(args: RelayArgs) -> Result<(), Failure> {
    let backend = BackendConfig::Relay(RelayBackendConfig {
        listen: format!("{}:{}", args.host, args.port),
        accept_timeout: seconds(args.accept_timeout, "accept-timeout")?,
        launcher: None,
        ..RelayBackendConfig::default()
    });
    let (config, out) = experiment(&args.experiment, args.env.config(backend))?;
    let env = build_env(&config)?;
    eprintln!("waiting for a prover on {}:{}", args.host, args.port);
    report(&config, Some(env), out)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = match cli.command {
        Command::Run(args) => run(args),
        Command::ServeEnv(args) => serve_env(args),
        Command::ServeStubEmbedder(args) => serve_stub(args),
        Command::Relay(args) => relay(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Invalid(message)) => {
            eprintln!("error: {message}");
            ExitCode::from(1)
        }
        Err(Failure::Runtime(message)) => {
            eprintln!("error: {message}");
            ExitCode::from(2)
        }
    }
}
