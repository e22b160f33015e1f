//! TCP relay between a prover that acts as a client and the environment.
//!
//! The prover connects, sends a request carrying its clause delta, and
//! blocks until the environment answers with the label of the next given
//! clause. A reader thread pushes requests into one queue; a writer thread
//! drains the response queue onto the socket. Frames are one record per
//! line, encoded by a swappable [`RelayCodec`].

use std::collections::VecDeque;
use std::fmt;
use std::io::{BufRead, BufReader, Write};
use std::net::{Shutdown, SocketAddr, TcpListener, TcpStream, ToSocketAddrs};
use std::process::Child;
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::mpsc::{self, Receiver, RecvTimeoutError, Sender};
use std::sync::{Arc, Mutex};
use std::thread::{self, JoinHandle};
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::backend::{Backend, BackendError, ProverStatus, SelectResult};
use crate::clause::Clause;
use crate::prover::EmbeddedProver;
use crate::tptp::{parse_cnf_line, Problem};

const BACKEND: &str = "relay";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MessageKind {
    Request,
    Response,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RelayMessage {
    pub kind: MessageKind,
    pub tag: u64,
    pub payload: serde_json::Value,
}

impl RelayMessage {
    pub fn request(tag: u64, payload: serde_json::Value) -> Self {
        RelayMessage {
            kind: MessageKind::Request,
            tag,
            payload,
        }
    }

    pub fn response(tag: u64, payload: serde_json::Value) -> Self {
        RelayMessage {
            kind: MessageKind::Response,
            tag,
            payload,
        }
    }
}

#[derive(Debug, Error)]
pub enum RelayError {
    #[error("cannot listen on {addr}: {source}")]
    Bind {
        addr: String,
        #[source]
        source: std::io::Error,
    },
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
    #[error("codec: {0}")]
    Codec(String),
    #[error("nothing arrived within {0:?}")]
    Timeout(Duration),
    #[error("no prover is connected")]
    NoConnection,
    #[error(
        "response tag {tag} does not answer an outstanding request (outstanding: {outstanding:?})"
    )]
    TagMismatch { tag: u64, outstanding: Vec<u64> },
    #[error("prover disconnected: {0}")]
    Disconnected(String),
    #[error("protocol: {0}")]
    Protocol(String),
}

/// Framing for relay records. Implementations turn one message into one
/// line of text and back.
pub trait RelayCodec: Send + Sync {
    fn encode(&self, message: &RelayMessage) -> Result<String, RelayError>;
    fn decode(&self, line: &str) -> Result<RelayMessage, RelayError>;
}

/// Newline-delimited JSON: `{"kind":"request","tag":1,"payload":{...}}`.
#[derive(Debug, Clone, Copy, Default)]
pub struct NdjsonCodec;

impl RelayCodec for NdjsonCodec {
    fn encode(&self, message: &RelayMessage) -> Result<String, RelayError> {
        serde_json::to_string(message).map_err(|e| RelayError::Codec(e.to_string()))
    }

    fn decode(&self, line: &str) -> Result<RelayMessage, RelayError> {
        serde_json::from_str(line).map_err(|e| RelayError::Codec(format!("{e} in `{line}`")))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum RelayEvent {
    Connected {
        connection: u64,
        peer: SocketAddr,
    },
    Request {
        connection: u64,
        message: RelayMessage,
    },
    Disconnected {
        connection: u64,
        reason: String,
    },
}

struct Active {
    id: u64,
    stream: TcpStream,
    responses: Sender<RelayMessage>,
}

struct Shared {
    current: Mutex<Option<Active>>,
    shutdown: AtomicBool,
    codec: Arc<dyn RelayCodec>,
}

impl Shared {
    fn drop_connection(&self, id: u64) {
        let mut current = self.current.lock().expect("relay lock");
        if current.as_ref().is_some_and(|a| a.id == id) {
            if let Some(active) = current.take() {
                let _ = active.stream.shutdown(Shutdown::Both);
            }
        }
    }
}

/// Accepts one prover connection at a time and exposes its requests as a
/// queue. Connections arriving while one is active are refused.
pub struct RelayServer {
    addr: SocketAddr,
    events: Receiver<RelayEvent>,
    shared: Arc<Shared>,
    outstanding: VecDeque<u64>,
    outstanding_connection: Option<u64>,
    acceptor: Option<JoinHandle<()>>,
}

impl fmt::Debug for RelayServer {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("RelayServer")
            .field("addr", &self.addr)
            .field("outstanding", &self.outstanding)
            .finish()
    }
}

impl RelayServer {
    pub fn bind(addr: &str, codec: Arc<dyn RelayCodec>) -> Result<Self, RelayError> {
        let bind_err = |source| RelayError::Bind {
            addr: addr.to_string(),
            source,
        };
        let listener = TcpListener::bind(addr).map_err(bind_err)?;
        listener.set_nonblocking(true).map_err(bind_err)?;
        let local = listener.local_addr().map_err(bind_err)?;
        let shared = Arc::new(Shared {
            current: Mutex::new(None),
            shutdown: AtomicBool::new(false),
            codec,
        });
        let (tx, events) = mpsc::channel();
        let acceptor = {
            let shared = Arc::clone(&shared);
            thread::spawn(move || accept_loop(listener, shared, tx))
        };
        Ok(RelayServer {
            addr: local,
            events,
            shared,
            outstanding: VecDeque::new(),
            outstanding_connection: None,
            acceptor: Some(acceptor),
        })
    }

    pub fn local_addr(&self) -> SocketAddr {
        self.addr
    }

    /// Next connection-level event, in arrival order.
    pub fn next_event(&mut self, timeout: Duration) -> Result<RelayEvent, RelayError> {
        let event = match self.events.recv_timeout(timeout) {
            Ok(event) => event,
            Err(RecvTimeoutError::Timeout) => return Err(RelayError::Timeout(timeout)),
            Err(RecvTimeoutError::Disconnected) => return Err(RelayError::NoConnection),
        };
        if let RelayEvent::Request {
            connection,
            message,
        } = &event
        {
            if self.outstanding_connection != Some(*connection) {
                self.outstanding.clear();
                self.outstanding_connection = Some(*connection);
            }
            self.outstanding.push_back(message.tag);
        }
        Ok(event)
    }

    /// Next request from any connection; a disconnect is an error.
    pub fn next_request(&mut self, timeout: Duration) -> Result<RelayMessage, RelayError> {
        let deadline = Instant::now() + timeout;
        loop {
            let left = deadline.saturating_duration_since(Instant::now());
            match self.next_event(left)? {
                RelayEvent::Connected { .. } => {}
                RelayEvent::Request { message, .. } => return Ok(message),
                RelayEvent::Disconnected { reason, .. } => {
                    return Err(RelayError::Disconnected(reason))
                }
            }
        }
    }

    /// Queues a response for the live connection. Its tag must answer a
    /// request that has been received and not yet answered.
    pub fn post_response(&mut self, message: RelayMessage) -> Result<(), RelayError> {
        if message.kind != MessageKind::Response {
            return Err(RelayError::Protocol("only responses can be posted".into()));
        }
        let Some(pos) = self.outstanding.iter().position(|&t| t == message.tag) else {
            return Err(RelayError::TagMismatch {
                tag: message.tag,
                outstanding: self.outstanding.iter().copied().collect(),
            });
        };
        let current = self.shared.current.lock().expect("relay lock");
        let active = current
            .as_ref()
            .filter(|a| Some(a.id) == self.outstanding_connection)
            .ok_or(RelayError::NoConnection)?;
        active
            .responses
            .send(message)
            .map_err(|_| RelayError::Disconnected("writer stopped".into()))?;
        drop(current);
        self.outstanding.remove(pos);
        Ok(())
    }

    /// Closes the live connection, if any.
    pub fn disconnect(&mut self) {
        if let Some(active) = self.shared.current.lock().expect("relay lock").take() {
            let _ = active.stream.shutdown(Shutdown::Both);
        }
        self.outstanding.clear();
        self.outstanding_connection = None;
    }

    /// Discards queued events.
    pub fn drain(&mut self) {
        while self.events.try_recv().is_ok() {}
        self.outstanding.clear();
        self.outstanding_connection = None;
    }
}

impl Drop for RelayServer {
    fn drop(&mut self) {
        self.shared.shutdown.store(true, Ordering::SeqCst);
        self.disconnect();
        if let Some(handle) = self.acceptor.take() {
            let _ = handle.join();
        }
    }
}

fn accept_loop(listener: TcpListener, shared: Arc<Shared>, events: Sender<RelayEvent>) {
    let mut next_id = 0u64;
    while !shared.shutdown.load(Ordering::SeqCst) {
        let (stream, peer) = match listener.accept() {
            Ok(pair) => pair,
            Err(e) if e.kind() == std::io::ErrorKind::WouldBlock => {
                thread::sleep(Duration::from_millis(2));
                continue;
            }
            Err(e) => {
                log::warn!("relay accept failed: {e}");
                thread::sleep(Duration::from_millis(20));
                continue;
            }
        };
        let mut current = shared.current.lock().expect("relay lock");
        if current.is_some() {
            log::warn!("refusing second prover connection from {peer}");
            let _ = stream.shutdown(Shutdown::Both);
            continue;
        }
        if stream.set_nonblocking(false).is_err() || stream.set_nodelay(true).is_err() {
            continue;
        }
        let (Ok(read_half), Ok(write_half)) = (stream.try_clone(), stream.try_clone()) else {
            continue;
        };
        next_id += 1;
        let id = next_id;
        let (responses, outbox) = mpsc::channel();
        *current = Some(Active {
            id,
            stream,
            responses,
        });
        drop(current);
        if events
            .send(RelayEvent::Connected {
                connection: id,
                peer,
            })
            .is_err()
        {
            return;
        }
        let codec = Arc::clone(&shared.codec);
        thread::spawn(move || write_loop(write_half, outbox, codec));
        let shared = Arc::clone(&shared);
        let events = events.clone();
        thread::spawn(move || read_loop(id, read_half, shared, events));
    }
}

fn write_loop(stream: TcpStream, outbox: Receiver<RelayMessage>, codec: Arc<dyn RelayCodec>) {
    let mut writer = std::io::BufWriter::new(stream);
    while let Ok(message) = outbox.recv() {
        let line = match codec.encode(&message) {
            Ok(line) => line,
            Err(e) => {
                log::error!("relay: cannot encode response: {e}");
                continue;
            }
        };
        let written = writer
            .write_all(line.as_bytes())
            .and_then(|_| writer.write_all(b"\n"))
            .and_then(|_| writer.flush());
        if written.is_err() {
            break;
        }
    }
}

fn read_loop(id: u64, stream: TcpStream, shared: Arc<Shared>, events: Sender<RelayEvent>) {
    let reader = BufReader::new(stream);
    let mut last_tag: Option<u64> = None;
    let mut reason = "connection closed".to_string();
    for line in reader.lines() {
        let line = match line {
            Ok(line) => line,
            Err(e) => {
                reason = e.to_string();
                break;
            }
        };
        if line.trim().is_empty() {
            continue;
        }
        let message = match shared.codec.decode(&line) {
            Ok(m) => m,
            Err(e) => {
                reason = e.to_string();
                break;
            }
        };
        if message.kind != MessageKind::Request {
            reason = format!("prover sent a {:?} record", message.kind);
            break;
        }
        if last_tag.is_some_and(|t| message.tag <= t) {
            reason = format!("request tag {} does not increase", message.tag);
            break;
        }
        last_tag = Some(message.tag);
        if events
            .send(RelayEvent::Request {
                connection: id,
                message,
            })
            .is_err()
        {
            return;
        }
    }
    shared.drop_connection(id);
    let _ = events.send(RelayEvent::Disconnected {
        connection: id,
        reason,
    });
}

/// Client end of the relay, as a prover would use it.
pub struct RelayClient {
    reader: BufReader<TcpStream>,
    writer: TcpStream,
    codec: Arc<dyn RelayCodec>,
}

impl RelayClient {
    pub fn connect(
        addr: impl ToSocketAddrs,
        codec: Arc<dyn RelayCodec>,
    ) -> Result<Self, RelayError> {
        let stream = TcpStream::connect(addr)?;
        stream.set_nodelay(true)?;
        Ok(RelayClient {
            reader: BufReader::new(stream.try_clone()?),
            writer: stream,
            codec,
        })
    }

    /// A handle that can send while another thread receives.
    pub fn split_sender(&self) -> Result<RelaySender, RelayError> {
        Ok(RelaySender {
            writer: self.writer.try_clone()?,
            codec: Arc::clone(&self.codec),
        })
    }

    pub fn send(&mut self, message: &RelayMessage) -> Result<(), RelayError> {
        send_line(&mut self.writer, self.codec.as_ref(), message)
    }

    /// The next record, or `None` once the server closed the connection.
    pub fn recv(&mut self) -> Result<Option<RelayMessage>, RelayError> {
        let mut line = String::new();
        loop {
            line.clear();
            if self.reader.read_line(&mut line)? == 0 {
                return Ok(None);
            }
            if !line.trim().is_empty() {
                return self.codec.decode(line.trim_end()).map(Some);
            }
        }
    }
}

pub struct RelaySender {
    writer: TcpStream,
    codec: Arc<dyn RelayCodec>,
}

impl RelaySender {
    pub fn send(&mut self, message: &RelayMessage) -> Result<(), RelayError> {
        send_line(&mut self.writer, self.codec.as_ref(), message)
    }
}

fn send_line(
    writer: &mut TcpStream,
    codec: &dyn RelayCodec,
    message: &RelayMessage,
) -> Result<(), RelayError> {
    let mut line = codec.encode(message)?;
    line.push('\n');
    writer.write_all(line.as_bytes())?;
    Ok(())
}

/// Body of a prover request: the clauses created since the last request,
/// rendered as `cnf` lines.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProverDelta {
    pub clauses: Vec<String>,
    #[serde(default)]
    pub eliminated: Vec<String>,
    pub status: ProverStatus,
}

/// Body of an environment response.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GivenClause {
    pub label: String,
}

/// Runs the embedded prover as a relay client until the proof attempt
/// ends or the server hangs up.
pub fn serve_embedded_prover(addr: SocketAddr, problem: &Problem) -> Result<(), RelayError> {
    let mut client = RelayClient::connect(addr, Arc::new(NdjsonCodec))?;
    let mut prover = EmbeddedProver::new();
    let initial = prover
        .start(problem)
        .map_err(|e| RelayError::Protocol(e.to_string()))?;
    let mut tag = 1;
    let delta = ProverDelta {
        clauses: initial.iter().map(Clause::to_string).collect(),
        eliminated: Vec::new(),
        status: ProverStatus::Running,
    };
    client.send(&RelayMessage::request(tag, to_value(&delta)?))?;
    while let Some(reply) = client.recv()? {
        if reply.kind != MessageKind::Response || reply.tag != tag {
            return Err(RelayError::Protocol(format!("unexpected reply {reply:?}")));
        }
        let given: GivenClause =
            serde_json::from_value(reply.payload).map_err(|e| RelayError::Codec(e.to_string()))?;
        let result = prover
            .select(&given.label)
            .map_err(|e| RelayError::Protocol(e.to_string()))?;
        tag += 1;
        let delta = ProverDelta {
            clauses: result.new_clauses.iter().map(Clause::to_string).collect(),
            eliminated: result.eliminated_labels,
            status: result.status,
        };
        client.send(&RelayMessage::request(tag, to_value(&delta)?))?;
        if result.status != ProverStatus::Running {
            break;
        }
    }
    Ok(())
}

fn to_value<T: Serialize>(value: &T) -> Result<serde_json::Value, RelayError> {
    serde_json::to_value(value).map_err(|e| RelayError::Codec(e.to_string()))
}

/// Whatever a launcher started for one episode; cleaned up on the next
/// reset.
pub enum LaunchedProver {
    Process(Child),
    Thread(JoinHandle<()>),
    /// The prover is started by someone else.
    External,
}

/// Starts a prover that will connect to the given address.
pub type Launcher =
    Arc<dyn Fn(&Problem, SocketAddr) -> Result<LaunchedProver, String> + Send + Sync>;

/// Launches the embedded prover on a thread, as a relay client.
pub fn embedded_launcher() -> Launcher {
    Arc::new(|problem: &Problem, addr: SocketAddr| {
        let problem = problem.clone();
        Ok(LaunchedProver::Thread(thread::spawn(move || {
            if let Err(e) = serve_embedded_prover(addr, &problem) {
                log::debug!("embedded relay client stopped: {e}");
            }
        })))
    })
}

#[derive(Clone)]
pub struct RelayBackendConfig {
    /// `host:port`; port 0 picks a free one.
    pub listen: String,
    pub accept_timeout: Duration,
    pub reply_timeout: Duration,
    /// Started on every `start`; `None` waits for an external prover.
    pub launcher: Option<Launcher>,
    pub codec: Arc<dyn RelayCodec>,
}

impl Default for RelayBackendConfig {
    fn default() -> Self {
        RelayBackendConfig {
            listen: "127.0.0.1:0".into(),
            accept_timeout: Duration::from_secs(30),
            reply_timeout: Duration::from_secs(10),
            launcher: None,
            codec: Arc::new(NdjsonCodec),
        }
    }
}

impl fmt::Debug for RelayBackendConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("RelayBackendConfig")
            .field("listen", &self.listen)
            .field("accept_timeout", &self.accept_timeout)
            .field("reply_timeout", &self.reply_timeout)
            .field("launcher", &self.launcher.is_some())
            .finish()
    }
}

/// Backend whose prover reaches us through a [`RelayServer`]. Each `start`
/// drops the previous connection and waits for a fresh one.
pub struct RelayBackend {
    config: RelayBackendConfig,
    server: RelayServer,
    connection: Option<u64>,
    pending_tag: Option<u64>,
    launched: Option<LaunchedProver>,
}

impl fmt::Debug for RelayBackend {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("RelayBackend")
            .field("addr", &self.server.local_addr())
            .field("connection", &self.connection)
            .finish()
    }
}

impl RelayBackend {
    pub fn bind(config: RelayBackendConfig) -> Result<Self, BackendError> {
        let server = RelayServer::bind(&config.listen, Arc::clone(&config.codec)).map_err(|e| {
            BackendError::Startup {
                backend: BACKEND.into(),
                message: e.to_string(),
            }
        })?;
        Ok(RelayBackend {
            config,
            server,
            connection: None,
            pending_tag: None,
            launched: None,
        })
    }

    pub fn local_addr(&self) -> SocketAddr {
        self.server.local_addr()
    }

    fn relay_error(&self, e: RelayError, waited: Duration) -> BackendError {
        match e {
            RelayError::Timeout(_) => BackendError::Timeout {
                backend: BACKEND.into(),
                seconds: waited.as_secs_f64(),
            },
            RelayError::Disconnected(message) => BackendError::Disconnected {
                backend: BACKEND.into(),
                message,
            },
            RelayError::NoConnection => BackendError::Disconnected {
                backend: BACKEND.into(),
                message: "no prover connected".into(),
            },
            other => BackendError::Protocol {
                backend: BACKEND.into(),
                message: other.to_string(),
            },
        }
    }

    /// Waits for the next request on the current connection.
    fn wait_request(&mut self, timeout: Duration) -> Result<(u64, ProverDelta), BackendError> {
        let deadline = Instant::now() + timeout;
        loop {
            let left = deadline.saturating_duration_since(Instant::now());
            let event = self
                .server
                .next_event(left)
                .map_err(|e| self.relay_error(e, timeout))?;
            match event {
                RelayEvent::Request {
                    connection,
                    message,
                } if Some(connection) == self.connection => {
                    let delta: ProverDelta =
                        serde_json::from_value(message.payload).map_err(|e| {
                            BackendError::Protocol {
                                backend: BACKEND.into(),
                                message: format!("bad request payload: {e}"),
                            }
                        })?;
                    return Ok((message.tag, delta));
                }
                RelayEvent::Disconnected { connection, reason }
                    if Some(connection) == self.connection =>
                {
                    self.connection = None;
                    return Err(BackendError::Disconnected {
                        backend: BACKEND.into(),
                        message: reason,
                    });
                }
                _ => {}
            }
        }
    }

    fn parse_delta(delta: &ProverDelta) -> Result<Vec<Clause>, BackendError> {
        delta
            .clauses
            .iter()
            .map(|line| {
                parse_cnf_line(line).map_err(|e| BackendError::Protocol {
                    backend: BACKEND.into(),
                    message: format!("bad clause `{line}`: {e}"),
                })
            })
            .collect()
    }

    fn release(&mut self) {
        self.server.disconnect();
        match self.launched.take() {
            Some(LaunchedProver::Process(mut child)) => {
                let _ = child.kill();
                let _ = child.wait();
            }
            Some(LaunchedProver::Thread(handle)) => {
                let _ = handle.join();
            }
            Some(LaunchedProver::External) | None => {}
        }
        self.server.drain();
        self.connection = None;
        self.pending_tag = None;
    }
}

impl Backend for RelayBackend {
    fn name(&self) -> &str {
        BACKEND
    }

    fn start(&mut self, problem: &Problem) -> Result<Vec<Clause>, BackendError> {
        self.release();
        if let Some(launcher) = &self.config.launcher {
            let launched = launcher(problem, self.server.local_addr()).map_err(|message| {
                BackendError::Startup {
                    backend: BACKEND.into(),
                    message,
                }
            })?;
            self.launched = Some(launched);
        }
        let accept = self.config.accept_timeout;
        let deadline = Instant::now() + accept;
        while self.connection.is_none() {
            let left = deadline.saturating_duration_since(Instant::now());
            match self.server.next_event(left) {
                Ok(RelayEvent::Connected { connection, .. }) => self.connection = Some(connection),
                Ok(_) => {}
                Err(e) => {
                    return Err(BackendError::Startup {
                        backend: BACKEND.into(),
                        message: format!(
                            "no prover connected to {}: {e}",
                            self.server.local_addr()
                        ),
                    })
                }
            }
        }
        let (tag, delta) = self.wait_request(accept)?;
        self.pending_tag = Some(tag);
        Self::parse_delta(&delta)
    }

    fn select(&mut self, label: &str) -> Result<SelectResult, BackendError> {
        let tag = self.pending_tag.take().ok_or(BackendError::NotStarted)?;
        let payload = serde_json::to_value(GivenClause {
            label: label.into(),
        })
        .expect("plain struct");
        if let Err(e) = self
            .server
            .post_response(RelayMessage::response(tag, payload))
        {
            return Err(self.relay_error(e, Duration::ZERO));
        }
        let (tag, delta) = self.wait_request(self.config.reply_timeout)?;
        self.pending_tag = Some(tag);
        Ok(SelectResult {
            new_clauses: Self::parse_delta(&delta)?,
            eliminated_labels: delta.eliminated,
            status: delta.status,
        })
    }

    fn stop(&mut self) {
        self.release();
    }
}

impl Drop for RelayBackend {
    fn drop(&mut self) {
        self.release();
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    fn server() -> RelayServer {
        RelayServer::bind("127.0.0.1:0", Arc::new(NdjsonCodec)).unwrap()
    }

    #[test]
    fn round_trip_preserves_payload() {
        let mut server = server();
        let addr = server.local_addr();
        let client = thread::spawn(move || {
            let mut c = RelayClient::connect(addr, Arc::new(NdjsonCodec)).unwrap();
            c.send(&RelayMessage::request(
                1,
                json!({"clauses": ["cnf(a, axiom, p)."]}),
            ))
            .unwrap();
            c.recv().unwrap().unwrap()
        });
        let req = server.next_request(Duration::from_secs(5)).unwrap();
        assert_eq!(req.payload, json!({"clauses": ["cnf(a, axiom, p)."]}));
        server
            .post_response(RelayMessage::response(1, json!({"label": "a"})))
            .unwrap();
        let reply = client.join().unwrap();
        assert_eq!(reply, RelayMessage::response(1, json!({"label": "a"})));
    }

    #[test]
    fn stale_tag_is_rejected() {
        let mut server = server();
        let addr = server.local_addr();
        let client = thread::spawn(move || {
            let mut c = RelayClient::connect(addr, Arc::new(NdjsonCodec)).unwrap();
            c.send(&RelayMessage::request(5, json!(null))).unwrap();
            c.recv().unwrap()
        });
        server.next_request(Duration::from_secs(5)).unwrap();
        let err = server
            .post_response(RelayMessage::response(4, json!(null)))
            .unwrap_err();
        assert!(
            matches!(err, RelayError::TagMismatch { tag: 4, .. }),
            "{err}"
        );
        server
            .post_response(RelayMessage::response(5, json!(null)))
            .unwrap();
        let err = server
            .post_response(RelayMessage::response(5, json!(null)))
            .unwrap_err();
        assert!(matches!(err, RelayError::TagMismatch { tag: 5, .. }));
        assert!(client.join().unwrap().is_some());
    }

    #[test]
    fn disconnect_surfaces_as_error() {
        let mut server = server();
        let addr = server.local_addr();
        drop(RelayClient::connect(addr, Arc::new(NdjsonCodec)).unwrap());
        let err = server.next_request(Duration::from_secs(5)).unwrap_err();
        assert!(matches!(err, RelayError::Disconnected(_)), "{err}");
    }

    #[test]
    fn non_increasing_tags_drop_the_connection() {
        let mut server = server();
        let addr = server.local_addr();
        let mut c = RelayClient::connect(addr, Arc::new(NdjsonCodec)).unwrap();
        c.send(&RelayMessage::request(2, json!(null))).unwrap();
        c.send(&RelayMessage::request(2, json!(null))).unwrap();
        assert!(server.next_request(Duration::from_secs(5)).is_ok());
        let err = server.next_request(Duration::from_secs(5)).unwrap_err();
        assert!(err.to_string().contains("does not increase"), "{err}");
    }

    #[test]
    fn embedded_prover_over_relay() {
        let mut backend = RelayBackend::bind(RelayBackendConfig {
            launcher: Some(embedded_launcher()),
            ..RelayBackendConfig::default()
        })
        .unwrap();
        let problem = crate::fixtures::bundled("contradiction").unwrap();
        let initial = backend.start(&problem).unwrap();
        assert_eq!(initial, problem.clauses);
        assert_eq!(
            backend.select("p_holds").unwrap().status,
            ProverStatus::Running
        );
        let last = backend.select("p_fails").unwrap();
        assert_eq!(last.status, ProverStatus::Refutation);
        assert!(last.new_clauses.iter().any(Clause::is_empty));
        // the client hangs up after a terminal status
        assert!(backend.select("p_fails").is_err());
        // a second episode gets a fresh connection
        assert_eq!(backend.start(&problem).unwrap(), problem.clauses);
    }
}
