//! LTE-U to WiFi cross-technology communication: the puncture codec, a
//! channel and NIC simulator, the MAC-state receiver, link experiments, the
//! rate model, multi-cell proximity detection and the control channel.

pub mod codec;
pub mod phy;
pub mod demod;
pub mod experiment;
pub mod analytics;
pub mod multicell;
pub mod x2;

#[cfg(doctest)]
#[doc = include_str!("../../../book/src/introduction.md")]
mod book_introduction {}
#[cfg(doctest)]
#[doc = include_str!("../../../book/src/codec.md")]
mod book_codec {}
#[cfg(doctest)]
#[doc = include_str!("../../../book/src/phy.md")]
mod book_phy {}
#[cfg(doctest)]
#[doc = include_str!("../../../book/src/receiver.md")]
mod book_receiver {}
#[cfg(doctest)]
#[doc = include_str!("../../../book/src/experiments.md")]
mod book_experiments {}
#[cfg(doctest)]
#[doc = include_str!("../../../book/src/analytics.md")]
mod book_analytics {}
#[cfg(doctest)]
#[doc = include_str!("../../../book/src/multicell.md")]
mod book_multicell {}
#[cfg(doctest)]
#[doc = include_str!("../../../book/src/x2.md")]
mod book_x2 {}
#[cfg(doctest)]
#[doc = include_str!("../../../book/src/cli.md")]
mod book_cli {}
