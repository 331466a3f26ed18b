//! keynet: a deterministic, desk-scale simulation of a key-management
//! network in which smart contracts own signing keys.

pub mod chainsim;
pub mod chainstate;
pub mod crypto;
pub mod econ;
pub mod gatekeeper;
pub mod harness;
pub mod node;
pub mod request;
pub mod sim;
pub mod tee;

pub use crypto::derive::KeyId;
pub use crypto::group::{GroupElement, GroupParams, Scalar};
