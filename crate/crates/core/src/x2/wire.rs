//! Framing: a 4-byte big-endian length covering everything after it, then
//! the protocol version, the message type and the payload.

use std::io::{self, Read, Write};
use std::net::Ipv4Addr;

pub const PROTOCOL_VERSION: u8 = 1;
/// Largest accepted frame body (version, type and payload).
pub const MAX_FRAME: usize = 1 << 20;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
#[repr(u8)]
pub enum MessageType {
    Hello = 1,
    HelloAck = 2,
    GetCodebook = 3,
    Codebook = 4,
    ReportProximity = 5,
    ReportAck = 6,
    Error = 7,
}

impl MessageType {
    pub fn from_u8(v: u8) -> Option<Self> {
        use MessageType::*;
        [Hello, HelloAck, GetCodebook, Codebook, ReportProximity, ReportAck, Error]
            .into_iter()
            .find(|t| *t as u8 == v)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
#[repr(u16)]
pub enum ErrorCode {
    Malformed = 1,
    UnsupportedVersion = 2,
    Auth = 3,
    UnknownCell = 4,
    NetworkMismatch = 5,
    Unexpected = 6,
}

impl ErrorCode {
    pub fn from_u16(v: u16) -> Option<Self> {
        use ErrorCode::*;
        [Malformed, UnsupportedVersion, Auth, UnknownCell, NetworkMismatch, Unexpected]
            .into_iter()
            .find(|c| *c as u16 == v)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Message {
    Hello {
        ap_id: String,
        network_id: Ipv4Addr,
    },
    HelloAck {
        server_version: u8,
    },
    GetCodebook,
    /// Canonical codebook bytes with their SHA-256.
    Codebook {
        sha256: [u8; 32],
        bytes: Vec<u8>,
    },
    ReportProximity {
        fields: Vec<(u8, u16)>,
        cells: Vec<u32>,
    },
    ReportAck {
        cells: u32,
    },
    Error {
        code: ErrorCode,
        message: String,
    },
}

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum WireError {
    #[error("unsupported protocol version {0}")]
    Version(u8),
    #[error("malformed message: {0}")]
    Malformed(String),
}

fn malformed(s: impl Into<String>) -> WireError {
    WireError::Malformed(s.into())
}

impl Message {
    pub fn kind(&self) -> MessageType {
        match self {
            Message::Hello { .. } => MessageType::Hello,
            Message::HelloAck { .. } => MessageType::HelloAck,
            Message::GetCodebook => MessageType::GetCodebook,
            Message::Codebook { .. } => MessageType::Codebook,
            Message::ReportProximity { .. } => MessageType::ReportProximity,
            Message::ReportAck { .. } => MessageType::ReportAck,
            Message::Error { .. } => MessageType::Error,
        }
    }

    fn payload(&self) -> Vec<u8> {
        let mut p = Vec::new();
        match self {
            Message::Hello { ap_id, network_id } => {
                p.extend_from_slice(&network_id.octets());
                put_str(&mut p, ap_id);
            }
            Message::HelloAck { server_version } => p.push(*server_version),
            Message::GetCodebook => {}
            Message::Codebook { sha256, bytes } => {
                p.extend_from_slice(sha256);
                p.extend_from_slice(bytes);
            }
            Message::ReportProximity { fields, cells } => {
                p.extend_from_slice(&(fields.len() as u16).to_be_bytes());
                for (slot, cluster) in fields {
                    p.push(*slot);
                    p.extend_from_slice(&cluster.to_be_bytes());
                }
                p.extend_from_slice(&(cells.len() as u16).to_be_bytes());
                for c in cells {
                    p.extend_from_slice(&c.to_be_bytes());
                }
            }
            Message::ReportAck { cells } => p.extend_from_slice(&cells.to_be_bytes()),
            Message::Error { code, message } => {
                p.extend_from_slice(&(*code as u16).to_be_bytes());
                put_str(&mut p, message);
            }
        }
        p
    }

    /// The full frame, length prefix included.
    pub fn encode(&self) -> Vec<u8> {
        let payload = self.payload();
        let mut out = Vec::with_capacity(6 + payload.len());
        out.extend_from_slice(&((payload.len() + 2) as u32).to_be_bytes());
        out.push(PROTOCOL_VERSION);
        out.push(self.kind() as u8);
        out.extend_from_slice(&payload);
        out
    }

    /// Decodes a frame body (everything after the length prefix).
    pub fn decode_body(body: &[u8]) -> Result<Self, WireError> {
        if body.len() < 2 {
            return Err(malformed("frame shorter than its header"));
        }
        if body[0] != PROTOCOL_VERSION {
            return Err(WireError::Version(body[0]));
        }
        let kind = MessageType::from_u8(body[1])
            .ok_or_else(|| malformed(format!("unknown message type {}", body[1])))?;
        let mut r = Cursor { buf: &body[2..] };
        let msg = match kind {
            MessageType::Hello => {
                let o = r.take(4)?;
                let network_id = Ipv4Addr::new(o[0], o[1], o[2], o[3]);
                Message::Hello {
                    network_id,
                    ap_id: r.string()?,
                }
            }
            MessageType::HelloAck => Message::HelloAck {
                server_version: r.u8()?,
            },
            MessageType::GetCodebook => Message::GetCodebook,
            MessageType::Codebook => {
                let sha256 = r.take(32)?.try_into().unwrap();
                let bytes = r.take(r.buf.len())?.to_vec();
                Message::Codebook { sha256, bytes }
            }
            MessageType::ReportProximity => {
                let n = r.u16()? as usize;
                let mut fields = Vec::with_capacity(n.min(r.buf.len() / 3));
                for _ in 0..n {
                    fields.push((r.u8()?, r.u16()?));
                }
                let n = r.u16()? as usize;
                let mut cells = Vec::with_capacity(n.min(r.buf.len() / 4));
                for _ in 0..n {
                    cells.push(r.u32()?);
                }
                Message::ReportProximity { fields, cells }
            }
            MessageType::ReportAck => Message::ReportAck { cells: r.u32()? },
            MessageType::Error => {
                let raw = r.u16()?;
                let code = ErrorCode::from_u16(raw)
                    .ok_or_else(|| malformed(format!("unknown error code {raw}")))?;
                Message::Error {
                    code,
                    message: r.string()?,
                }
            }
        };
        if !r.buf.is_empty() {
            return Err(malformed("trailing bytes after payload"));
        }
        Ok(msg)
    }

    pub fn decode(frame: &[u8]) -> Result<Self, WireError> {
        if frame.len() < 4 {
            return Err(malformed("truncated length prefix"));
        }
        let len = u32::from_be_bytes(frame[..4].try_into().unwrap()) as usize;
        if len != frame.len() - 4 {
            return Err(malformed("length prefix does not match frame"));
        }
        Self::decode_body(&frame[4..])
    }
}

fn put_str(p: &mut Vec<u8>, s: &str) {
    let b = s.as_bytes();
    let n = b.len().min(u16::MAX as usize);
    p.extend_from_slice(&(n as u16).to_be_bytes());
    p.extend_from_slice(&b[..n]);
}

struct Cursor<'a> {
    buf: &'a [u8],
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], WireError> {
        if self.buf.len() < n {
            return Err(malformed("payload truncated"));
        }
        let (a, b) = self.buf.split_at(n);
        self.buf = b;
        Ok(a)
    }

    fn u8(&mut self) -> Result<u8, WireError> {
        Ok(self.take(1)?[0])
    }

    fn u16(&mut self) -> Result<u16, WireError> {
        Ok(u16::from_be_bytes(self.take(2)?.try_into().unwrap()))
    }

    fn u32(&mut self) -> Result<u32, WireError> {
        Ok(u32::from_be_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn string(&mut self) -> Result<String, WireError> {
        let n = self.u16()? as usize;
        String::from_utf8(self.take(n)?.to_vec()).map_err(|_| malformed("string is not UTF-8"))
    }
}

/// Result of reading one frame from a stream.
#[derive(Debug)]
pub enum Incoming {
    Message(Message),
    /// The frame was read whole but its body is invalid; the stream is
    /// still in sync.
    Invalid(WireError),
    /// The stream cannot be resynchronised (short prefix, oversized frame,
    /// or EOF inside a frame).
    Broken(WireError),
    /// Clean end of stream between frames.
    Closed,
}

/// Reads one frame, distinguishing recoverable from fatal errors.
pub fn read_frame<R: Read>(r: &mut R) -> io::Result<Incoming> {
    let mut prefix = [0u8; 4];
    let mut got = 0;
    while got < 4 {
        match r.read(&mut prefix[got..]) {
            Ok(0) if got == 0 => return Ok(Incoming::Closed),
            Ok(0) => return Ok(Incoming::Broken(malformed("truncated length prefix"))),
            Ok(n) => got += n,
            Err(e) if e.kind() == io::ErrorKind::Interrupted => {}
            Err(e) => return Err(e),
        }
    }
    let len = u32::from_be_bytes(prefix) as usize;
    if len > MAX_FRAME {
        return Ok(Incoming::Broken(malformed(format!("frame of {len} bytes exceeds limit"))));
    }
    let mut body = vec![0u8; len];
    if let Err(e) = r.read_exact(&mut body) {
        return if e.kind() == io::ErrorKind::UnexpectedEof {
            Ok(Incoming::Broken(malformed("stream ended inside a frame")))
        } else {
            Err(e)
        };
    }
    Ok(match Message::decode_body(&body) {
        Ok(m) => Incoming::Message(m),
        Err(e) => Incoming::Invalid(e),
    })
}

pub fn write_message<W: Write>(w: &mut W, msg: &Message) -> io::Result<()> {
    w.write_all(&msg.encode())?;
    w.flush()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn code() -> impl Strategy<Value = ErrorCode> {
        (1u16..=6).prop_map(|c| ErrorCode::from_u16(c).unwrap())
    }

    fn message() -> impl Strategy<Value = Message> {
        prop_oneof![
            (".{0,40}", any::<u32>()).prop_map(|(ap_id, n)| Message::Hello {
                ap_id,
                network_id: Ipv4Addr::from(n)
            }),
            any::<u8>().prop_map(|server_version| Message::HelloAck { server_version }),
            Just(Message::GetCodebook),
            (any::<[u8; 32]>(), proptest::collection::vec(any::<u8>(), 0..300))
                .prop_map(|(sha256, bytes)| Message::Codebook { sha256, bytes }),
            (
                proptest::collection::vec((any::<u8>(), any::<u16>()), 0..20),
                proptest::collection::vec(any::<u32>(), 0..20)
            )
                .prop_map(|(fields, cells)| Message::ReportProximity { fields, cells }),
            any::<u32>().prop_map(|cells| Message::ReportAck { cells }),
            (code(), ".{0,40}").prop_map(|(code, message)| Message::Error { code, message }),
        ]
    }

    proptest! {
        #[test]
        fn roundtrip(m in message()) {
            let frame = m.encode();
            prop_assert_eq!(Message::decode(&frame).unwrap(), m.clone());
            let mut r = &frame[..];
            match read_frame(&mut r).unwrap() {
                Incoming::Message(got) => prop_assert_eq!(got, m),
                other => prop_assert!(false, "{:?}", other),
            }
        }

        #[test]
        fn decode_never_panics(bytes in proptest::collection::vec(any::<u8>(), 0..64)) {
            let _ = Message::decode(&bytes);
            let _ = read_frame(&mut &bytes[..]);
        }
    }

    #[test]
    fn version_and_type_checks() {
        let mut f = Message::GetCodebook.encode();
        f[4] = 9;
        assert_eq!(Message::decode(&f), Err(WireError::Version(9)));
        f[4] = PROTOCOL_VERSION;
        f[5] = 77;
        assert!(matches!(Message::decode(&f), Err(WireError::Malformed(_))));
    }

    #[test]
    fn stream_errors() {
        assert!(matches!(read_frame(&mut &[0u8, 0][..]).unwrap(), Incoming::Broken(_)));
        assert!(matches!(read_frame(&mut &[][..]).unwrap(), Incoming::Closed));
        assert!(matches!(read_frame(&mut &[0, 0, 0, 5, 1][..]).unwrap(), Incoming::Broken(_)));
        assert!(matches!(read_frame(&mut &[0xff, 0, 0, 0][..]).unwrap(), Incoming::Broken(_)));
        assert!(matches!(read_frame(&mut &[0, 0, 0, 1, 1][..]).unwrap(), Incoming::Invalid(_)));
    }
}
