//! Over-the-air message layout.
//!
//! ```text
//! | network id (4) | crc (2) | id_1 (2) | crc (2) | ... | id_6 (2) | crc (2) |
//! ```
//!
//! All integers are big-endian. Each of the seven fields is packed into
//! symbols on its own and zero-padded to a symbol boundary, so a corrupted
//! symbol can only ever damage one field.

use std::net::Ipv4Addr;

use super::crc::{crc16, crc16_verify};
use super::scheme::{CodingScheme, PreambleSymbol};
use super::CodecError;

/// Number of cluster configurations (time slots) carried per frame.
pub const CLUSTER_SLOTS: usize = 6;
/// Serialized payload length in bytes.
pub const PAYLOAD_LEN: usize = 30;
const NETWORK_FIELD_LEN: usize = 6;
const CLUSTER_FIELD_LEN: usize = 4;

/// Reserved symbols prefixed to every frame.
pub const PREAMBLE: [PreambleSymbol; 4] = [
    PreambleSymbol::A,
    PreambleSymbol::B,
    PreambleSymbol::A,
    PreambleSymbol::B,
];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct CtcFrame {
    pub network_id: Ipv4Addr,
    /// Entry `j` is the cluster ID this cell belongs to in slot `j + 1`.
    pub clusters: [u16; CLUSTER_SLOTS],
}

/// Per-field outcome of decoding a frame; `None` marks a field whose CRC (or
/// symbol decode) failed.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct PartialFrame {
    pub network_id: Option<Ipv4Addr>,
    pub clusters: [Option<u16>; CLUSTER_SLOTS],
}

impl PartialFrame {
    pub fn valid_fields(&self) -> usize {
        self.network_id.is_some() as usize + self.clusters.iter().flatten().count()
    }

    pub fn all_valid(&self) -> bool {
        self.valid_fields() == 1 + CLUSTER_SLOTS
    }

    /// The complete frame, if every field decoded.
    pub fn complete(&self) -> Option<CtcFrame> {
        let network_id = self.network_id?;
        let mut clusters = [0u16; CLUSTER_SLOTS];
        for (dst, src) in clusters.iter_mut().zip(self.clusters) {
            *dst = src?;
        }
        Some(CtcFrame {
            network_id,
            clusters,
        })
    }

    /// Decoded `(slot, cluster id)` pairs, slots numbered from 1.
    pub fn observations(&self) -> Vec<(u8, u16)> {
        self.clusters
            .iter()
            .enumerate()
            .filter_map(|(j, c)| c.map(|id| (j as u8 + 1, id)))
            .collect()
    }
}

/// A symbol as it goes on the air.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum AirSymbol {
    Preamble(PreambleSymbol),
    Data(u64),
}

/// Preamble followed by the data symbols of one frame.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SymbolStream {
    pub symbols: Vec<AirSymbol>,
}

impl SymbolStream {
    pub fn data(&self) -> impl Iterator<Item = u64> + '_ {
        self.symbols.iter().filter_map(|s| match s {
            AirSymbol::Data(v) => Some(*v),
            AirSymbol::Preamble(_) => None,
        })
    }
}

impl CtcFrame {
    pub fn to_payload(&self) -> [u8; PAYLOAD_LEN] {
        let mut out = [0u8; PAYLOAD_LEN];
        let net = self.network_id.octets();
        out[..4].copy_from_slice(&net);
        out[4..6].copy_from_slice(&crc16(&net).to_be_bytes());
        for (j, id) in self.clusters.iter().enumerate() {
            let at = NETWORK_FIELD_LEN + j * CLUSTER_FIELD_LEN;
            let id = id.to_be_bytes();
            out[at..at + 2].copy_from_slice(&id);
            out[at + 2..at + 4].copy_from_slice(&crc16(&id).to_be_bytes());
        }
        out
    }
}

/// Checks every field of a 30-byte payload independently.
pub fn parse_payload(payload: &[u8; PAYLOAD_LEN]) -> PartialFrame {
    let mut frame = PartialFrame::default();
    let fields = field_ranges();
    let net = &payload[fields[0].clone()];
    if crc16_verify(net) {
        frame.network_id = Some(Ipv4Addr::new(net[0], net[1], net[2], net[3]));
    }
    for (j, range) in fields[1..].iter().enumerate() {
        let f = &payload[range.clone()];
        if crc16_verify(f) {
            frame.clusters[j] = Some(u16::from_be_bytes([f[0], f[1]]));
        }
    }
    frame
}

fn field_ranges() -> Vec<std::ops::Range<usize>> {
    let mut v = vec![0..NETWORK_FIELD_LEN];
    for j in 0..CLUSTER_SLOTS {
        let at = NETWORK_FIELD_LEN + j * CLUSTER_FIELD_LEN;
        v.push(at..at + CLUSTER_FIELD_LEN);
    }
    v
}

fn symbols_for(bytes: usize, bits_per_symbol: u32) -> usize {
    (bytes * 8).div_ceil(bits_per_symbol as usize)
}

/// Data symbols per frame (`L`) under `scheme`, preamble excluded.
pub fn frame_symbols(scheme: &CodingScheme) -> Result<usize, CodecError> {
    let k = scheme.bits_per_symbol();
    if k == 0 {
        return Err(CodecError::InvalidScheme(
            "scheme carries no bits per symbol".into(),
        ));
    }
    Ok(field_ranges().iter().map(|r| symbols_for(r.len(), k)).sum())
}

/// Symbol range of each field inside the data part of a frame.
pub fn field_symbol_ranges(scheme: &CodingScheme) -> Result<Vec<std::ops::Range<usize>>, CodecError> {
    frame_symbols(scheme)?;
    let k = scheme.bits_per_symbol();
    let mut at = 0;
    Ok(field_ranges()
        .iter()
        .map(|r| {
            let n = symbols_for(r.len(), k);
            at += n;
            at - n..at
        })
        .collect())
}

fn pack_bits(bytes: &[u8], bits_per_symbol: u32) -> Vec<u64> {
    let k = bits_per_symbol as usize;
    let n = symbols_for(bytes.len(), bits_per_symbol);
    let bit = |i: usize| -> u64 {
        bytes
            .get(i / 8)
            .map_or(0, |b| ((b >> (7 - i % 8)) & 1) as u64)
    };
    (0..n)
        .map(|s| (0..k).fold(0u64, |acc, b| (acc << 1) | bit(s * k + b)))
        .collect()
}

/// Reassembles `len` bytes; `None` if a padding bit is set.
fn unpack_bits(symbols: &[u64], bits_per_symbol: u32, len: usize) -> Option<Vec<u8>> {
    let k = bits_per_symbol as usize;
    let mut out = vec![0u8; len];
    for (s, &v) in symbols.iter().enumerate() {
        for b in 0..k {
            let bit = ((v >> (k - 1 - b)) & 1) as u8;
            let i = s * k + b;
            if i < len * 8 {
                out[i / 8] |= bit << (7 - i % 8);
            } else if bit != 0 {
                return None;
            }
        }
    }
    Some(out)
}

/// Packs a frame into preamble + data symbols.
pub fn build_frame(frame: &CtcFrame, scheme: &CodingScheme) -> Result<SymbolStream, CodecError> {
    frame_symbols(scheme)?;
    let payload = frame.to_payload();
    let mut symbols: Vec<AirSymbol> = PREAMBLE.iter().map(|&p| AirSymbol::Preamble(p)).collect();
    for range in field_ranges() {
        symbols.extend(
            pack_bits(&payload[range], scheme.bits_per_symbol())
                .into_iter()
                .map(AirSymbol::Data),
        );
    }
    Ok(SymbolStream { symbols })
}

/// Decodes the data part of a frame. `None` entries are symbols the
/// receiver could not map to a used schedule; they poison their field.
pub fn parse_frame_data(symbols: &[Option<u64>], scheme: &CodingScheme) -> Result<PartialFrame, CodecError> {
    let expected = frame_symbols(scheme)?;
    if symbols.len() != expected {
        return Err(CodecError::Framing {
            expected,
            got: symbols.len(),
        });
    }
    let k = scheme.bits_per_symbol();
    let used = scheme.used_symbols();
    let mut payload = [0u8; PAYLOAD_LEN];
    // start with every CRC broken; fields that unpack cleanly overwrite it
    let mut good = [false; 1 + CLUSTER_SLOTS];
    for (f, (bytes, syms)) in field_ranges()
        .into_iter()
        .zip(field_symbol_ranges(scheme)?)
        .enumerate()
    {
        let vals: Option<Vec<u64>> = symbols[syms]
            .iter()
            .map(|s| s.filter(|&v| v < used))
            .collect();
        if let Some(raw) = vals.and_then(|v| unpack_bits(&v, k, bytes.len())) {
            payload[bytes].copy_from_slice(&raw);
            good[f] = true;
        }
    }
    let mut frame = parse_payload(&payload);
    if !good[0] {
        frame.network_id = None;
    }
    for j in 0..CLUSTER_SLOTS {
        if !good[j + 1] {
            frame.clusters[j] = None;
        }
    }
    Ok(frame)
}

/// Decodes a full symbol stream (preamble included).
pub fn parse_frame(stream: &SymbolStream, scheme: &CodingScheme) -> Result<PartialFrame, CodecError> {
    let expected = PREAMBLE.len() + frame_symbols(scheme)?;
    if stream.symbols.len() != expected {
        return Err(CodecError::Framing {
            expected,
            got: stream.symbols.len(),
        });
    }
    let (pre, data) = stream.symbols.split_at(PREAMBLE.len());
    if pre
        .iter()
        .zip(PREAMBLE)
        .any(|(s, p)| *s != AirSymbol::Preamble(p))
    {
        return Err(CodecError::Framing {
            expected,
            got: stream.symbols.len(),
        });
    }
    let data: Vec<Option<u64>> = data
        .iter()
        .map(|s| match s {
            AirSymbol::Data(v) => Some(*v),
            AirSymbol::Preamble(_) => None,
        })
        .collect();
    parse_frame_data(&data, scheme)
}
