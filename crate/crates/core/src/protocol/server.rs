//! Reference predictor server backed by the built-in models.
//!
//! It enforces the session state machine strictly and answers every
//! violation with `ERR` followed by closing the connection:
//!
//! ```text
//! Start --HELLO--> Idle --BEGIN_CHUNK--> Open --PREDICT--> Pending
//!                  Idle <--END_CHUNK---- Open <--OBSERVE-- Pending
//!                  Idle --BYE--> (closed)
//! ```

use std::io::{Read, Write};
use std::net::{SocketAddr, TcpListener, ToSocketAddrs};
use std::thread::{self, JoinHandle};

use super::wire::{err_code, read_frame, write_message, Message, Opcode, PROTOCOL_VERSION};
use crate::error::{Error, Result};
use crate::predictor::{begin_session, Predictor, PredictorKind, PredictorSpec};

const TAG_PREFIX: &str = "fixture/";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ServerState {
    Start,
    Idle,
    Open,
    Pending,
}

impl ServerState {
    /// State after `op`, or `None` if `op` is illegal here. Only client
    /// opcodes are ever legal.
    pub fn next(self, op: Opcode) -> Option<ServerState> {
        use ServerState::*;
        match (self, op) {
            (Start, Opcode::Hello) => Some(Idle),
            (Idle, Opcode::BeginChunk) => Some(Open),
            (Idle, Opcode::Bye) => Some(Start),
            (Open, Opcode::Predict) => Some(Pending),
            (Open, Opcode::EndChunk) => Some(Idle),
            (Pending, Opcode::Observe) => Some(Open),
            _ => None,
        }
    }
}

/// How a connection ended.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ServeOutcome {
    /// Client said BYE.
    Bye,
    /// Client hung up between frames.
    Disconnected,
    /// Server sent ERR with this code and closed.
    Rejected(u16),
}

#[derive(Debug, Clone)]
pub struct FixtureServer {
    default_model: PredictorSpec,
    version_tag: Option<String>,
}

impl FixtureServer {
    /// Serves `default_model` to clients whose HELLO names no model. A
    /// non-empty request is a predictor name parsed like a `--predictor`
    /// value, or a version tag this server reported earlier.
    ///
    /// The version tag is `fixture/<spec>` unless overridden.
    pub fn new(default_model: PredictorSpec) -> Self {
        Self {
            default_model,
            version_tag: None,
        }
    }

    /// Pins the version tag reported in READY. A pinned server stands for
    /// one fixed model, so it serves `default_model` whatever the request.
    pub fn with_version_tag(mut self, tag: impl Into<String>) -> Self {
        self.version_tag = Some(tag.into());
        self
    }

    fn resolve(&self, alphabet_size: u32, request: &str) -> Result<(PredictorSpec, String)> {
        let spec = if request.is_empty() || self.version_tag.is_some() {
            self.default_model.clone()
        } else {
            let name = request.strip_prefix(TAG_PREFIX).unwrap_or(request);
            PredictorSpec::parse_lenient(name, alphabet_size as usize)?
        };
        if spec.kind == PredictorKind::External {
            return Err(Error::UnknownPredictor(request.to_string()));
        }
        if spec.alphabet_size != alphabet_size as usize {
            return Err(Error::InvalidSpec(format!(
                "model {spec} does not serve alphabet size {alphabet_size}"
            )));
        }
        begin_session(&spec)?;
        let tag = self
            .version_tag
            .clone()
            .unwrap_or_else(|| format!("{TAG_PREFIX}{spec}"));
        Ok((spec, tag))
    }

    /// Runs one connection to completion.
    pub fn serve<S: Read + Write>(&self, mut stream: S) -> Result<ServeOutcome> {
        let reject = |stream: &mut S, code: u16, message: String| -> Result<ServeOutcome> {
            write_message(stream, &Message::Err { code, message })?;
            Ok(ServeOutcome::Rejected(code))
        };

        let mut state = ServerState::Start;
        let mut model: Option<PredictorSpec> = None;
        let mut session: Option<Box<dyn Predictor + Send>> = None;
        loop {
            let (opcode, payload) = match read_frame(&mut stream) {
                Ok(Some(frame)) => frame,
                Ok(None) => return Ok(ServeOutcome::Disconnected),
                Err(Error::Protocol(m)) => return reject(&mut stream, err_code::MALFORMED, m),
                Err(e) => return Err(e),
            };
            let msg = match Message::decode(opcode, &payload) {
                Ok(m) => m,
                Err(e) => return reject(&mut stream, err_code::MALFORMED, e.to_string()),
            };
            let Some(next) = state.next(msg.opcode()) else {
                let m = format!("{:?} not allowed in state {state:?}", msg.opcode());
                return reject(&mut stream, err_code::ILLEGAL_TRANSITION, m);
            };
            match msg {
                Message::Hello {
                    version,
                    alphabet_size,
                    model: request,
                } => {
                    if version != PROTOCOL_VERSION {
                        let m = format!("protocol version {version} unsupported, server speaks {PROTOCOL_VERSION}");
                        return reject(&mut stream, err_code::UNSUPPORTED_VERSION, m);
                    }
                    match self.resolve(alphabet_size, &request) {
                        Ok((spec, version_tag)) => {
                            model = Some(spec);
                            write_message(&mut stream, &Message::Ready { version_tag })?;
                        }
                        Err(e) => return reject(&mut stream, err_code::UNSUPPORTED_MODEL, e.to_string()),
                    }
                }
                Message::BeginChunk => {
                    session = Some(begin_session(model.as_ref().expect("set by HELLO"))?);
                }
                Message::Predict => {
                    let s = session.as_mut().expect("open chunk");
                    match s.predict() {
                        Ok(d) => {
                            let freqs = d.freqs().to_vec();
                            write_message(&mut stream, &Message::Dist(freqs))?;
                        }
                        Err(e) => return reject(&mut stream, err_code::INTERNAL, e.to_string()),
                    }
                }
                Message::Observe(symbol) => {
                    let s = session.as_mut().expect("open chunk");
                    if let Err(e) = s.observe(symbol) {
                        return reject(&mut stream, err_code::MALFORMED, e.to_string());
                    }
                }
                Message::EndChunk => session = None,
                Message::Bye => return Ok(ServeOutcome::Bye),
                Message::Ready { .. } | Message::Dist(_) | Message::Err { .. } => {
                    unreachable!("server-to-client opcodes never pass the state check")
                }
            }
            state = next;
        }
    }

    /// Accepts connections on `addr` in a background thread, one thread
    /// per connection. Returns the bound address.
    pub fn spawn_tcp(self, addr: impl ToSocketAddrs) -> Result<(SocketAddr, JoinHandle<()>)> {
        let listener = TcpListener::bind(addr)?;
        let local = listener.local_addr()?;
        let handle = thread::spawn(move || self.accept_loop(listener));
        Ok((local, handle))
    }

    pub fn accept_loop(self, listener: TcpListener) {
        for conn in listener.incoming() {
            let Ok(conn) = conn else { continue };
            let _ = conn.set_nodelay(true);
            let server = self.clone();
            thread::spawn(move || {
                let _ = server.serve(conn);
            });
        }
    }
}
