//! Single-party Schnorr signatures.
//!
//! This is the verification target for the threshold protocol: aggregated
//! threshold signatures must be accepted by [`verify`] exactly as if they
//! had been produced here with the whole key. The single-party signer is
//! also used for enclave log signatures, gatekeeper receipts, and passkey
//! devices in the simulation.

use rand::RngCore;
use serde::{Deserialize, Serialize};

use super::group::{GroupElement, GroupError, GroupParams, Scalar, TAG_CHALLENGE};

/// A Schnorr signature: nonce commitment `R` and response `z`, verifying
/// iff `z·G == R + c·PK` with `c = H(R ‖ PK ‖ message)`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Signature {
    pub commitment: GroupElement,
    pub response: Scalar,
}

impl Signature {
    /// Fixed-width encoding `encode(R) ‖ encode(z)`; constant length for a
    /// given group regardless of how the signature was produced.
    pub fn encode(&self, params: &GroupParams) -> Vec<u8> {
        let mut out = params.encode_element(&self.commitment);
        out.extend(params.encode_scalar(&self.response));
        out
    }

    pub fn decode(params: &GroupParams, bytes: &[u8]) -> Result<Self, GroupError> {
        if bytes.len() != params.signature_width() {
            return Err(GroupError::WrongLength {
                expected: params.signature_width(),
                got: bytes.len(),
            });
        }
        let (r, z) = bytes.split_at(params.element_width());
        Ok(Signature {
            commitment: params.decode_element(r)?,
            response: params.decode_scalar(z)?,
        })
    }
}

/// The challenge scalar `c = H(R ‖ PK ‖ message)` under the challenge tag.
pub fn challenge(
    params: &GroupParams,
    commitment: &GroupElement,
    public_key: &GroupElement,
    message: &[u8],
) -> Scalar {
    params.hash_to_scalar(
        TAG_CHALLENGE,
        &[
            &params.encode_element(commitment),
            &params.encode_element(public_key),
            message,
        ],
    )
}

pub fn schnorr_keygen(params: &GroupParams, rng: &mut dyn RngCore) -> (Scalar, GroupElement) {
    let secret = params.random_nonzero_scalar(rng);
    let public = params.base_mul(&secret);
    (secret, public)
}

pub fn schnorr_sign(
    params: &GroupParams,
    secret: &Scalar,
    message: &[u8],
    rng: &mut dyn RngCore,
) -> Signature {
    let nonce = params.random_nonzero_scalar(rng);
    schnorr_sign_with_nonce(params, secret, &nonce, message)
}

/// Deterministic signing with a caller-supplied nonce. Nonce reuse across
/// distinct messages leaks the key; callers own that discipline.
pub fn schnorr_sign_with_nonce(
    params: &GroupParams,
    secret: &Scalar,
    nonce: &Scalar,
    message: &[u8],
) -> Signature {
    let commitment = params.base_mul(nonce);
    let public_key = params.base_mul(secret);
    let c = challenge(params, &commitment, &public_key, message);
    let response = params.scalar_add(nonce, &params.scalar_mul(&c, secret));
    Signature {
        commitment,
        response,
    }
}

/// True iff `z·G == R + c·PK`.
pub fn verify(
    params: &GroupParams,
    message: &[u8],
    signature: &Signature,
    public_key: &GroupElement,
) -> bool {
    let c = challenge(params, &signature.commitment, public_key, message);
    params.base_mul(&signature.response)
        == params.add(&signature.commitment, &params.mul(public_key, &c))
}
