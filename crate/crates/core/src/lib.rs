//! Two-party interactive protocols over an adversarial channel.
//!
//! The crate has three layers. The bottom layer is a round-based channel
//! engine ([`channel`]) in which each party independently transmits or
//! listens each round while an adversary with a corruption budget decides
//! what listeners hear. The middle layer supplies the combinatorics:
//! canonical conversation trees and edge sets ([`canonical`]) and block
//! codes with list decoding ([`ecc`]). The top layer implements complete
//! schemes (exchange protocols in [`exchange`], tree-search simulators in
//! [`simulator`], shared-randomness detection codes in [`blueberry`]) plus
//! the generic and tailored adversaries ([`adversaries`]) that probe their
//! error-rate thresholds.

pub mod adversaries;
pub mod blueberry;
pub mod canonical;
pub mod channel;
pub mod ecc;
pub mod exchange;
pub mod simulator;
pub mod util;

// The guide's code blocks run as doc-tests so the book cannot drift from
// the library.
#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/channel.md")]
    mod channel {}
    #[doc = include_str!("../../../book/src/exchange.md")]
    mod exchange {}
    #[doc = include_str!("../../../book/src/trees.md")]
    mod trees {}
    #[doc = include_str!("../../../book/src/blocks.md")]
    mod blocks {}
    #[doc = include_str!("../../../book/src/detection.md")]
    mod detection {}
    #[doc = include_str!("../../../book/src/adversaries.md")]
    mod adversaries {}
}
