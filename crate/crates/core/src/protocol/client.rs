use std::fmt;
use std::io::{self, Read, Write};
use std::net::TcpStream;
use std::process::{Child, ChildStdin, ChildStdout, Command, Stdio};
use std::str::FromStr;
use std::time::Duration;

use super::wire::{check_freqs, read_message, write_message, Message, PROTOCOL_VERSION};
use crate::coder::QuantizedDistribution;
use crate::error::{Error, Result};
use crate::predictor::{Predictor, PredictorSpec};

pub const DEFAULT_TIMEOUT: Duration = Duration::from_secs(30);

/// Where a predictor server lives: `host:port` (optionally prefixed with
/// `tcp://`) or `stdio:<command> [args...]` for a child process speaking the
/// protocol on its stdin/stdout.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Endpoint {
    Tcp(String),
    Stdio(Vec<String>),
}

impl FromStr for Endpoint {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if let Some(cmd) = s.strip_prefix("stdio:") {
            let argv: Vec<String> = cmd.split_whitespace().map(str::to_string).collect();
            if argv.is_empty() {
                return Err(Error::InvalidSpec("stdio endpoint without a command".into()));
            }
            return Ok(Endpoint::Stdio(argv));
        }
        let addr = s.strip_prefix("tcp://").unwrap_or(s);
        if addr.rsplit_once(':').is_none() {
            return Err(Error::InvalidSpec(format!("endpoint {s:?} is not host:port")));
        }
        Ok(Endpoint::Tcp(addr.to_string()))
    }
}

impl fmt::Display for Endpoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Endpoint::Tcp(a) => write!(f, "tcp://{a}"),
            Endpoint::Stdio(argv) => write!(f, "stdio:{}", argv.join(" ")),
        }
    }
}

/// Joins a reader and a writer into one bidirectional stream.
#[derive(Debug)]
pub struct Duplex<R, W> {
    pub reader: R,
    pub writer: W,
}

impl<R: Read, W> Read for Duplex<R, W> {
    fn read(&mut self, buf: &mut [u8]) -> io::Result<usize> {
        self.reader.read(buf)
    }
}

impl<R, W: Write> Write for Duplex<R, W> {
    fn write(&mut self, buf: &[u8]) -> io::Result<usize> {
        self.writer.write(buf)
    }

    fn flush(&mut self) -> io::Result<()> {
        self.writer.flush()
    }
}

/// A predictor server running as a child process.
#[derive(Debug)]
pub struct ChildTransport {
    child: Child,
    pipe: Duplex<ChildStdout, ChildStdin>,
}

impl Read for ChildTransport {
    fn read(&mut self, buf: &mut [u8]) -> io::Result<usize> {
        self.pipe.read(buf)
    }
}

impl Write for ChildTransport {
    fn write(&mut self, buf: &[u8]) -> io::Result<usize> {
        self.pipe.write(buf)
    }

    fn flush(&mut self) -> io::Result<()> {
        self.pipe.flush()
    }
}

impl Drop for ChildTransport {
    fn drop(&mut self) {
        let _ = self.child.kill();
        let _ = self.child.wait();
    }
}

pub trait Transport: Read + Write + Send {}
impl<T: Read + Write + Send> Transport for T {}

/// Opens a transport and performs the HELLO/READY handshake.
pub fn connect(endpoint: &Endpoint, alphabet_size: usize, model: &str) -> Result<PredictorClient<Box<dyn Transport>>> {
    connect_with_timeout(endpoint, alphabet_size, model, DEFAULT_TIMEOUT)
}

/// Like [`connect`], with a per-message timeout for TCP. Child processes
/// on stdio are not timed out.
pub fn connect_with_timeout(
    endpoint: &Endpoint,
    alphabet_size: usize,
    model: &str,
    timeout: Duration,
) -> Result<PredictorClient<Box<dyn Transport>>> {
    let stream: Box<dyn Transport> = match endpoint {
        Endpoint::Tcp(addr) => {
            let s = TcpStream::connect(addr)?;
            s.set_read_timeout(Some(timeout))?;
            s.set_write_timeout(Some(timeout))?;
            s.set_nodelay(true)?;
            Box::new(s)
        }
        Endpoint::Stdio(argv) => {
            let mut child = Command::new(&argv[0])
                .args(&argv[1..])
                .stdin(Stdio::piped())
                .stdout(Stdio::piped())
                .spawn()?;
            let pipe = Duplex {
                reader: child.stdout.take().expect("piped stdout"),
                writer: child.stdin.take().expect("piped stdin"),
            };
            Box::new(ChildTransport { child, pipe })
        }
    };
    PredictorClient::handshake(stream, alphabet_size, model)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum State {
    Idle,
    AwaitPredict,
    AwaitObserve,
    Closed,
}

/// Client side of the predictor protocol, usable as a [`Predictor`]
/// between [`begin_chunk`](Self::begin_chunk) and
/// [`end_chunk`](Self::end_chunk).
///
/// Any protocol violation by either side closes the session; later calls
/// fail instead of risking a desynchronized stream.
pub struct PredictorClient<T> {
    stream: T,
    alphabet_size: usize,
    version_tag: String,
    state: State,
    dist: QuantizedDistribution,
}

impl<T> fmt::Debug for PredictorClient<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("PredictorClient")
            .field("alphabet_size", &self.alphabet_size)
            .field("version_tag", &self.version_tag)
            .field("state", &self.state)
            .finish()
    }
}

impl<T: Read + Write> PredictorClient<T> {
    pub fn handshake(mut stream: T, alphabet_size: usize, model: &str) -> Result<Self> {
        write_message(
            &mut stream,
            &Message::Hello {
                version: PROTOCOL_VERSION,
                alphabet_size: alphabet_size as u32,
                model: model.to_string(),
            },
        )?;
        match read_message(&mut stream)? {
            Some(Message::Ready { version_tag }) if !version_tag.is_empty() => Ok(Self {
                stream,
                alphabet_size,
                version_tag,
                state: State::Idle,
                dist: QuantizedDistribution::empty(),
            }),
            Some(Message::Ready { .. }) => Err(Error::Handshake("empty version tag".into())),
            Some(Message::Err { code, message }) => Err(Error::Handshake(format!(
                "server refused (code {code}): {message}"
            ))),
            Some(other) => Err(Error::Handshake(format!(
                "expected READY, got {:?}",
                other.opcode()
            ))),
            None => Err(Error::Handshake("server closed the connection".into())),
        }
    }

    pub fn version_tag(&self) -> &str {
        &self.version_tag
    }

    /// The spec this server's predictions correspond to.
    pub fn spec(&self) -> PredictorSpec {
        PredictorSpec::external(self.alphabet_size, self.version_tag.clone())
    }

    fn expect_state(&mut self, want: State, what: &'static str) -> Result<()> {
        if self.state == want {
            Ok(())
        } else if self.state == State::Closed {
            Err(Error::Protocol("session already closed".into()))
        } else {
            Err(Error::ProtocolMisuse(what))
        }
    }

    fn send(&mut self, msg: &Message) -> Result<()> {
        write_message(&mut self.stream, msg).map_err(|e| {
            self.state = State::Closed;
            e.into()
        })
    }

    fn fail<X>(&mut self, err: Error) -> Result<X> {
        self.state = State::Closed;
        Err(err)
    }

    pub fn begin_chunk(&mut self) -> Result<()> {
        self.expect_state(State::Idle, "BEGIN_CHUNK inside a chunk")?;
        self.send(&Message::BeginChunk)?;
        self.state = State::AwaitPredict;
        Ok(())
    }

    pub fn end_chunk(&mut self) -> Result<()> {
        self.expect_state(State::AwaitPredict, "END_CHUNK outside a chunk or before OBSERVE")?;
        self.send(&Message::EndChunk)?;
        self.state = State::Idle;
        Ok(())
    }

    pub fn bye(mut self) -> Result<()> {
        self.expect_state(State::Idle, "BYE inside a chunk")?;
        self.send(&Message::Bye)?;
        self.state = State::Closed;
        Ok(())
    }

    fn receive_dist(&mut self) -> Result<()> {
        let msg = match read_message(&mut self.stream) {
            Ok(m) => m,
            Err(e) => return self.fail(e),
        };
        match msg {
            Some(Message::Dist(freqs)) => {
                if freqs.len() != self.alphabet_size {
                    let err = Error::Protocol(format!(
                        "DIST has {} symbols, expected {}",
                        freqs.len(),
                        self.alphabet_size
                    ));
                    return self.fail(err);
                }
                match check_freqs(freqs) {
                    Ok(d) => {
                        self.dist = d;
                        Ok(())
                    }
                    Err(e) => self.fail(e),
                }
            }
            Some(Message::Err { code, message }) => self.fail(Error::Remote { code, message }),
            Some(other) => {
                let err = Error::Protocol(format!("expected DIST, got {:?}", other.opcode()));
                self.fail(err)
            }
            None => self.fail(Error::Protocol("server closed the connection".into())),
        }
    }
}

impl<T: Read + Write> Predictor for PredictorClient<T> {
    fn predict(&mut self) -> Result<&QuantizedDistribution> {
        self.expect_state(State::AwaitPredict, "PREDICT outside a chunk or twice without OBSERVE")?;
        self.send(&Message::Predict)?;
        self.receive_dist()?;
        self.state = State::AwaitObserve;
        Ok(&self.dist)
    }

    fn observe(&mut self, symbol: u32) -> Result<()> {
        self.expect_state(State::AwaitObserve, "OBSERVE without a pending PREDICT")?;
        if symbol as usize >= self.alphabet_size {
            return Err(Error::SymbolOutOfRange {
                symbol,
                alphabet_size: self.alphabet_size,
            });
        }
        self.send(&Message::Observe(symbol))?;
        self.state = State::AwaitPredict;
        Ok(())
    }
}
