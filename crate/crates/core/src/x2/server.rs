use std::collections::{BTreeSet, HashMap};
use std::io::{self, Read, Write};
use std::net::{Ipv4Addr, SocketAddr, TcpListener, TcpStream, ToSocketAddrs};
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::{Arc, Mutex};
use std::thread::JoinHandle;
use std::time::{Duration, SystemTime};

use super::wire::{read_frame, write_message, ErrorCode, Incoming, Message, WireError, PROTOCOL_VERSION};
use crate::multicell::Codebook;

/// What the server knows about one access point.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ApRegistration {
    pub ap_id: String,
    pub network_id: Ipv4Addr,
    pub fields: Vec<(u8, u16)>,
    pub cells: BTreeSet<u32>,
    pub updated: SystemTime,
}

/// Shared state of one management unit.
#[derive(Debug)]
pub struct ServerState {
    network_id: Ipv4Addr,
    codebook: Codebook,
    canonical: Vec<u8>,
    sha256: [u8; 32],
    known_cells: BTreeSet<u32>,
    registrations: Mutex<HashMap<String, ApRegistration>>,
}

impl ServerState {
    pub fn new(network_id: Ipv4Addr, codebook: Codebook) -> Self {
        Self {
            network_id,
            canonical: codebook.canonical_bytes(),
            sha256: codebook.sha256(),
            known_cells: codebook.cells(),
            codebook,
            registrations: Mutex::new(HashMap::new()),
        }
    }

    pub fn network_id(&self) -> Ipv4Addr {
        self.network_id
    }

    pub fn codebook(&self) -> &Codebook {
        &self.codebook
    }

    pub fn registration(&self, ap_id: &str) -> Option<ApRegistration> {
        self.lock().get(ap_id).cloned()
    }

    pub fn registrations(&self) -> Vec<ApRegistration> {
        let mut v: Vec<_> = self.lock().values().cloned().collect();
        v.sort_by(|a, b| a.ap_id.cmp(&b.ap_id));
        v
    }

    fn lock(&self) -> std::sync::MutexGuard<'_, HashMap<String, ApRegistration>> {
        // a handler that panicked cannot leave the map half-updated
        self.registrations.lock().unwrap_or_else(|e| e.into_inner())
    }
}

fn error(code: ErrorCode, message: impl Into<String>) -> Message {
    Message::Error {
        code,
        message: message.into(),
    }
}

enum Step {
    Reply(Message),
    ReplyAndClose(Message),
}

/// Serves one connection until the peer closes it or breaks the protocol.
/// Malformed frames that leave the stream in sync get an error reply and
/// the connection stays open.
pub fn handle_connection<S: Read + Write>(stream: &mut S, state: &ServerState) -> io::Result<()> {
    let mut ap: Option<String> = None;
    loop {
        let step = match read_frame(stream)? {
            Incoming::Closed => return Ok(()),
            Incoming::Broken(e) => Step::ReplyAndClose(error(ErrorCode::Malformed, e.to_string())),
            Incoming::Invalid(WireError::Version(v)) => Step::Reply(error(
                ErrorCode::UnsupportedVersion,
                format!("version {v} not supported, server speaks {PROTOCOL_VERSION}"),
            )),
            Incoming::Invalid(e) => Step::Reply(error(ErrorCode::Malformed, e.to_string())),
            Incoming::Message(m) => dispatch(m, &mut ap, state),
        };
        match step {
            Step::Reply(m) => write_message(stream, &m)?,
            Step::ReplyAndClose(m) => {
                // the peer may already be gone
                let _ = write_message(stream, &m);
                return Ok(());
            }
        }
    }
}

fn dispatch(msg: Message, ap: &mut Option<String>, state: &ServerState) -> Step {
    match msg {
        Message::Hello { ap_id, network_id } => {
            if network_id != state.network_id {
                return Step::Reply(error(
                    ErrorCode::NetworkMismatch,
                    format!("this unit serves {}, not {network_id}", state.network_id),
                ));
            }
            let mut regs = state.lock();
            regs.entry(ap_id.clone()).or_insert_with(|| ApRegistration {
                ap_id: ap_id.clone(),
                network_id,
                fields: Vec::new(),
                cells: BTreeSet::new(),
                updated: SystemTime::now(),
            });
            drop(regs);
            log::info!("registered AP {ap_id:?} for network {network_id}");
            *ap = Some(ap_id);
            Step::Reply(Message::HelloAck {
                server_version: PROTOCOL_VERSION,
            })
        }
        Message::GetCodebook => match ap {
            None => Step::Reply(error(ErrorCode::Auth, "send HELLO first")),
            Some(_) => Step::Reply(Message::Codebook {
                sha256: state.sha256,
                bytes: state.canonical.clone(),
            }),
        },
        Message::ReportProximity { fields, cells } => {
            let Some(ap_id) = ap.as_ref() else {
                return Step::Reply(error(ErrorCode::Auth, "send HELLO first"));
            };
            if let Some(c) = cells.iter().find(|c| !state.known_cells.contains(c)) {
                return Step::Reply(error(ErrorCode::UnknownCell, format!("unknown cell {c}")));
            }
            if let Some((s, c)) = fields.iter().find(|(s, c)| state.codebook.get(*s, *c).is_none()) {
                return Step::Reply(error(
                    ErrorCode::UnknownCell,
                    format!("no cluster {c} in slot {s}"),
                ));
            }
            let cells: BTreeSet<u32> = cells.into_iter().collect();
            let n = cells.len() as u32;
            let mut regs = state.lock();
            let reg = regs.get_mut(ap_id).expect("registered on HELLO");
            reg.fields = fields;
            reg.cells = cells;
            reg.updated = SystemTime::now();
            log::info!("AP {ap_id:?} reports {n} cells in proximity");
            Step::Reply(Message::ReportAck { cells: n })
        }
        other => Step::ReplyAndClose(error(
            ErrorCode::Unexpected,
            format!("{:?} is not a client message", other.kind()),
        )),
    }
}

/// Idle connections are dropped after this long without a frame.
pub const IDLE_TIMEOUT: Duration = Duration::from_secs(30);

/// A running server: one accept thread, one thread per connection.
pub struct X2Server {
    addr: SocketAddr,
    state: Arc<ServerState>,
    stop: Arc<AtomicBool>,
    accept: Option<JoinHandle<()>>,
}

impl X2Server {
    pub fn start(bind: impl ToSocketAddrs, state: ServerState) -> io::Result<Self> {
        let listener = TcpListener::bind(bind)?;
        let addr = listener.local_addr()?;
        let state = Arc::new(state);
        let stop = Arc::new(AtomicBool::new(false));
        let accept = {
            let (state, stop) = (state.clone(), stop.clone());
            std::thread::spawn(move || accept_loop(listener, state, stop))
        };
        log::info!("X2 server listening on {addr}");
        Ok(Self {
            addr,
            state,
            stop,
            accept: Some(accept),
        })
    }

    pub fn local_addr(&self) -> SocketAddr {
        self.addr
    }

    pub fn state(&self) -> &ServerState {
        &self.state
    }

    /// Blocks until the accept loop ends.
    pub fn wait(mut self) {
        if let Some(h) = self.accept.take() {
            let _ = h.join();
        }
    }

    pub fn shutdown(mut self) {
        self.stop_accepting();
    }

    fn stop_accepting(&mut self) {
        self.stop.store(true, Ordering::SeqCst);
        // wake the blocking accept
        let _ = TcpStream::connect_timeout(&self.addr, Duration::from_millis(200));
        if let Some(h) = self.accept.take() {
            let _ = h.join();
        }
    }
}

impl Drop for X2Server {
    fn drop(&mut self) {
        if self.accept.is_some() {
            self.stop_accepting();
        }
    }
}

fn accept_loop(listener: TcpListener, state: Arc<ServerState>, stop: Arc<AtomicBool>) {
    for conn in listener.incoming() {
        if stop.load(Ordering::SeqCst) {
            break;
        }
        let mut stream = match conn {
            Ok(s) => s,
            Err(e) => {
                log::warn!("accept failed: {e}");
                continue;
            }
        };
        let state = state.clone();
        std::thread::spawn(move || {
            let peer = stream.peer_addr().ok();
            let _ = stream.set_read_timeout(Some(IDLE_TIMEOUT));
            if let Err(e) = handle_connection(&mut stream, &state) {
                log::debug!("connection {peer:?} ended: {e}");
            }
        });
    }
}
