//! Bit-level air interface: symbol alphabets, puncture-position mapping,
//! CRC-protected frame fields.

mod capacity;
mod crc;
mod frame;
mod scheme;

pub use capacity::{modulation_capacity, Capacity, MAX_POSITIONS};
pub use crc::{crc16, crc16_verify};
pub use frame::{
    build_frame, field_symbol_ranges, frame_symbols, parse_frame, parse_frame_data, parse_payload,
    AirSymbol, CtcFrame, PartialFrame, SymbolStream, CLUSTER_SLOTS, PAYLOAD_LEN, PREAMBLE,
};
pub use scheme::{
    CodingScheme, Gap, PreambleSymbol, PunctureMode, PunctureSchedule, SchemeConfig,
};

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum CodecError {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("invalid coding scheme: {0}")]
    InvalidScheme(String),
    #[error("value {value} does not fit in {bits} bits")]
    Range { value: u64, bits: u32 },
    #[error("invalid symbol {0}")]
    InvalidSymbol(String),
    #[error("framing error: expected {expected} symbols, got {got}")]
    Framing { expected: usize, got: usize },
}
