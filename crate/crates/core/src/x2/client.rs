use std::io;
use std::net::{Ipv4Addr, SocketAddr, TcpStream, ToSocketAddrs};
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::wire::{read_frame, write_message, ErrorCode, Incoming, Message, PROTOCOL_VERSION};
use crate::multicell::{Codebook, MulticellError};

#[derive(Debug, thiserror::Error)]
pub enum X2Error {
    #[error("cannot reach {addr}: {reason}")]
    Connectivity { addr: String, reason: String },
    #[error("protocol error: {0}")]
    Protocol(String),
    #[error("server error {code:?}: {message}")]
    Server { code: ErrorCode, message: String },
    #[error("codebook checksum mismatch")]
    Checksum,
    #[error(transparent)]
    Codebook(#[from] MulticellError),
    #[error(transparent)]
    Io(#[from] io::Error),
}

impl X2Error {
    fn transient(&self) -> bool {
        match self {
            X2Error::Io(e) => matches!(
                e.kind(),
                io::ErrorKind::ConnectionRefused
                    | io::ErrorKind::ConnectionReset
                    | io::ErrorKind::ConnectionAborted
                    | io::ErrorKind::BrokenPipe
                    | io::ErrorKind::TimedOut
                    | io::ErrorKind::WouldBlock
                    | io::ErrorKind::UnexpectedEof
            ),
            X2Error::Connectivity { .. } => true,
            _ => false,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ClientConfig {
    /// Per connect/read/write timeout.
    #[serde(with = "millis")]
    pub io_timeout: Duration,
    /// Attempts in total, including the first.
    pub attempts: u32,
    #[serde(with = "millis")]
    pub initial_backoff: Duration,
    #[serde(with = "millis")]
    pub max_backoff: Duration,
    /// No new attempt starts after this much time.
    #[serde(with = "millis")]
    pub deadline: Duration,
}

mod millis {
    use serde::{Deserialize, Deserializer, Serializer};
    use std::time::Duration;

    pub fn serialize<S: Serializer>(d: &Duration, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_u64(d.as_millis() as u64)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Duration, D::Error> {
        Ok(Duration::from_millis(u64::deserialize(d)?))
    }
}

impl Default for ClientConfig {
    fn default() -> Self {
        Self {
            io_timeout: Duration::from_secs(2),
            attempts: 5,
            initial_backoff: Duration::from_millis(50),
            max_backoff: Duration::from_secs(1),
            deadline: Duration::from_secs(10),
        }
    }
}

/// Runs `f` until it succeeds, fails permanently, or the attempt budget or
/// deadline runs out. Backoff doubles up to `max_backoff`.
fn with_retries<T>(
    cfg: &ClientConfig,
    addr: &str,
    mut f: impl FnMut(Duration) -> Result<T, X2Error>,
) -> Result<T, X2Error> {
    let start = Instant::now();
    let mut backoff = cfg.initial_backoff;
    let mut last = String::from("no attempt made");
    for attempt in 0..cfg.attempts.max(1) {
        let left = cfg.deadline.saturating_sub(start.elapsed());
        if left.is_zero() {
            break;
        }
        match f(left.min(cfg.io_timeout)) {
            Ok(v) => return Ok(v),
            Err(e) if e.transient() => {
                log::debug!("attempt {} to {addr} failed: {e}", attempt + 1);
                last = e.to_string();
            }
            Err(e) => return Err(e),
        }
        let left = cfg.deadline.saturating_sub(start.elapsed());
        if attempt + 1 < cfg.attempts && !left.is_zero() {
            std::thread::sleep(backoff.min(left));
            backoff = (backoff * 2).min(cfg.max_backoff);
        }
    }
    Err(X2Error::Connectivity {
        addr: addr.to_string(),
        reason: last,
    })
}

/// A blocking client session.
pub struct X2Client {
    stream: TcpStream,
}

impl X2Client {
    /// Connects, retrying refused or timed-out attempts.
    pub fn connect(addr: impl ToSocketAddrs, cfg: &ClientConfig) -> Result<Self, X2Error> {
        let addrs: Vec<SocketAddr> = addr.to_socket_addrs()?.collect();
        let label = addrs.first().map_or_else(|| "<none>".to_string(), |a| a.to_string());
        with_retries(cfg, &label, |timeout| Self::connect_once(&addrs, timeout, cfg.io_timeout))
    }

    fn connect_once(addrs: &[SocketAddr], timeout: Duration, io_timeout: Duration) -> Result<Self, X2Error> {
        let mut err = io::Error::new(io::ErrorKind::InvalidInput, "no address to connect to");
        for a in addrs {
            match TcpStream::connect_timeout(a, timeout) {
                Ok(stream) => {
                    stream.set_read_timeout(Some(io_timeout))?;
                    stream.set_write_timeout(Some(io_timeout))?;
                    stream.set_nodelay(true)?;
                    return Ok(Self { stream });
                }
                Err(e) => err = e,
            }
        }
        Err(err.into())
    }

    fn call(&mut self, msg: &Message) -> Result<Message, X2Error> {
        write_message(&mut self.stream, msg)?;
        match read_frame(&mut self.stream)? {
            Incoming::Message(Message::Error { code, message }) => Err(X2Error::Server { code, message }),
            Incoming::Message(m) => Ok(m),
            Incoming::Invalid(e) | Incoming::Broken(e) => Err(X2Error::Protocol(e.to_string())),
            Incoming::Closed => Err(io::Error::from(io::ErrorKind::UnexpectedEof).into()),
        }
    }

    /// Registers this AP under the network ID decoded over the air.
    pub fn hello(&mut self, ap_id: &str, network_id: Ipv4Addr) -> Result<u8, X2Error> {
        let msg = Message::Hello {
            ap_id: ap_id.to_string(),
            network_id,
        };
        match self.call(&msg)? {
            Message::HelloAck { server_version } if server_version == PROTOCOL_VERSION => Ok(server_version),
            Message::HelloAck { server_version } => Err(X2Error::Protocol(format!(
                "server speaks version {server_version}, client {PROTOCOL_VERSION}"
            ))),
            m => Err(X2Error::Protocol(format!("expected HELLO_ACK, got {:?}", m.kind()))),
        }
    }

    /// Downloads the codebook and checks its checksum.
    pub fn get_codebook(&mut self) -> Result<Codebook, X2Error> {
        match self.call(&Message::GetCodebook)? {
            Message::Codebook { sha256, bytes } => {
                let digest: [u8; 32] = Sha256::digest(&bytes).into();
                if digest != sha256 {
                    return Err(X2Error::Checksum);
                }
                Ok(Codebook::from_canonical_bytes(&bytes)?)
            }
            m => Err(X2Error::Protocol(format!("expected CODEBOOK, got {:?}", m.kind()))),
        }
    }

    /// Reports decoded fields and the resulting proximity set; returns the
    /// number of cells the server stored.
    pub fn report(&mut self, fields: &[(u8, u16)], cells: &[u32]) -> Result<u32, X2Error> {
        let msg = Message::ReportProximity {
            fields: fields.to_vec(),
            cells: cells.to_vec(),
        };
        match self.call(&msg)? {
            Message::ReportAck { cells } => Ok(cells),
            m => Err(X2Error::Protocol(format!("expected REPORT_ACK, got {:?}", m.kind()))),
        }
    }
}

/// Connects, registers and downloads the codebook, retrying the whole
/// exchange on transient failures.
pub fn fetch_codebook(
    addr: impl ToSocketAddrs,
    ap_id: &str,
    network_id: Ipv4Addr,
    cfg: &ClientConfig,
) -> Result<Codebook, X2Error> {
    let addrs: Vec<SocketAddr> = addr.to_socket_addrs()?.collect();
    let label = addrs.first().map_or_else(|| "<none>".to_string(), |a| a.to_string());
    with_retries(cfg, &label, |timeout| {
        let mut c = X2Client::connect_once(&addrs, timeout, cfg.io_timeout)?;
        c.hello(ap_id, network_id)?;
        c.get_codebook()
    })
}
