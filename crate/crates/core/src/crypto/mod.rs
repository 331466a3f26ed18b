//! Group-generic threshold cryptography.
//!
//! Everything here is a pure function over value inputs; the only stateful
//! object is [`signing::SigningNonces`], which enforces single use of a
//! nonce pair.

pub mod derive;
pub mod dkg;
pub mod group;
pub mod poly;
pub mod reshare;
pub mod schnorr;
pub mod signing;
pub mod vss;

pub use derive::{apply_tweak_to_share, derive_child_public, derive_tweak, KeyId, Tweak};
pub use dkg::{dkg_round1, dkg_round2, Complaint, DkgError, DkgPackage, DkgSecretState};
pub use group::{GroupElement, GroupError, GroupParams, Scalar};
pub use poly::{lagrange_coefficient, LagrangeError, Polynomial};
pub use reshare::{reshare, reshare_combine, reshare_deal, ReshareDealing, ReshareError};
pub use schnorr::{challenge, schnorr_keygen, schnorr_sign, schnorr_sign_with_nonce, verify, Signature};
pub use signing::{
    binding_factor, group_commitment, sign_aggregate, sign_round1, sign_round2, NonceCommitment,
    SignError, SignatureShare, SigningNonces,
};
pub use vss::{vss_deal, vss_verify_share, KeyShare, PublicKeyPackage, VssCommitment, VssError};
