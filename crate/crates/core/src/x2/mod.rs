//! Out-of-band control channel between access points and the management
//! unit of an LTE-U network: registration, codebook download and proximity
//! reports over a length-prefixed stream protocol.

mod client;
mod server;
mod wire;

pub use client::{fetch_codebook, ClientConfig, X2Client, X2Error};
pub use server::{handle_connection, ApRegistration, ServerState, X2Server, IDLE_TIMEOUT};
pub use wire::{
    read_frame, write_message, ErrorCode, Incoming, Message, MessageType, WireError, MAX_FRAME,
    PROTOCOL_VERSION,
};
