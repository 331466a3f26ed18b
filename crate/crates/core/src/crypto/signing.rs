//! Two-round threshold Schnorr signing.
//!
//! Round 1: each signer commits to a fresh hiding/binding nonce pair.
//! Round 2: given all commitments, each signer derives its binding factor
//! `ρ_i = H(i ‖ message ‖ commitment list)`, the group commitment
//! `R = Σ (D_i + ρ_i·E_i)`, the challenge `c = H(R ‖ PK ‖ message)`, and
//! responds with `z_i = d_i + ρ_i·e_i + λ_i·share_i·c`.
//!
//! The aggregator checks each response against public data, names any
//! misbehaving signer, and sums the responses. The result is a plain
//! Schnorr signature under the group key: a verifier cannot tell it from a
//! single-party signature, and its encoding width does not depend on t or n.

use std::collections::BTreeMap;

use rand::RngCore;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::group::{GroupElement, GroupParams, Scalar, TAG_BINDING};
use super::poly::{lagrange_coefficient, LagrangeError};
use super::schnorr::{challenge, Signature};
use super::vss::{KeyShare, PublicKeyPackage};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SignError {
    #[error("nonce pair has already been consumed")]
    NonceReuse,
    #[error("missing nonce commitment for signer {0}")]
    MissingCommitment(u32),
    #[error("signature share from signer {0} is invalid")]
    InvalidSignatureShare(u32),
    #[error("signer set has {actual} members but the threshold is {expected}")]
    WrongSignerCount { expected: u32, actual: usize },
    #[error("signer {0} is not in the participant set")]
    UnknownSigner(u32),
    #[error("signature share present for {0} without a matching commitment")]
    UnexpectedShare(u32),
    #[error(transparent)]
    Lagrange(#[from] LagrangeError),
}

/// Public round-1 output: commitments to the hiding and binding nonces.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct NonceCommitment {
    pub signer: u32,
    pub hiding: GroupElement,
    pub binding: GroupElement,
}

/// Private round-1 state. The pair is consumed by the first call to
/// [`sign_round2`]; a second use is rejected.
#[derive(Debug, Serialize, Deserialize)]
pub struct SigningNonces {
    signer: u32,
    pair: Option<(Scalar, Scalar)>,
}

impl SigningNonces {
    pub fn signer(&self) -> u32 {
        self.signer
    }

    pub fn is_consumed(&self) -> bool {
        self.pair.is_none()
    }
}

/// One signer's round-2 response.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SignatureShare {
    pub signer: u32,
    pub response: Scalar,
}

/// Samples a fresh nonce pair and returns its public commitment.
pub fn sign_round1(
    params: &GroupParams,
    signer: u32,
    rng: &mut dyn RngCore,
) -> (NonceCommitment, SigningNonces) {
    let hiding = params.random_nonzero_scalar(rng);
    let binding = params.random_nonzero_scalar(rng);
    let commitment = NonceCommitment {
        signer,
        hiding: params.base_mul(&hiding),
        binding: params.base_mul(&binding),
    };
    (
        commitment,
        SigningNonces {
            signer,
            pair: Some((hiding, binding)),
        },
    )
}

fn serialized_commitment_list(
    params: &GroupParams,
    commitments: &BTreeMap<u32, NonceCommitment>,
) -> Vec<u8> {
    let mut out = Vec::new();
    for (&id, c) in commitments {
        out.extend((id as u64).to_be_bytes());
        out.extend(params.encode_element(&c.hiding));
        out.extend(params.encode_element(&c.binding));
    }
    out
}

/// `ρ_i = H(i ‖ message ‖ serialized commitment list)` under the binding tag.
pub fn binding_factor(
    params: &GroupParams,
    signer: u32,
    message: &[u8],
    commitments: &BTreeMap<u32, NonceCommitment>,
) -> Scalar {
    params.hash_to_scalar(
        TAG_BINDING,
        &[
            &(signer as u64).to_be_bytes(),
            message,
            &serialized_commitment_list(params, commitments),
        ],
    )
}

/// The group nonce commitment `R = Σ (D_i + ρ_i·E_i)`.
pub fn group_commitment(
    params: &GroupParams,
    message: &[u8],
    commitments: &BTreeMap<u32, NonceCommitment>,
) -> GroupElement {
    let mut acc = params.identity();
    for (&id, c) in commitments {
        let rho = binding_factor(params, id, message, commitments);
        acc = params.add(&acc, &params.add(&c.hiding, &params.mul(&c.binding, &rho)));
    }
    acc
}

fn check_signer_set(
    key_share_threshold: u32,
    participant_set: &[u32],
    commitments: &BTreeMap<u32, NonceCommitment>,
) -> Result<Vec<u32>, SignError> {
    if commitments.len() != key_share_threshold as usize {
        return Err(SignError::WrongSignerCount {
            expected: key_share_threshold,
            actual: commitments.len(),
        });
    }
    for (&id, c) in commitments {
        if c.signer != id {
            return Err(SignError::MissingCommitment(id));
        }
        if !participant_set.contains(&id) {
            return Err(SignError::UnknownSigner(id));
        }
    }
    Ok(commitments.keys().copied().collect())
}

/// Produces this signer's response; consumes the nonce pair.
pub fn sign_round2(
    params: &GroupParams,
    key_share: &KeyShare,
    nonces: &mut SigningNonces,
    message: &[u8],
    commitments: &BTreeMap<u32, NonceCommitment>,
) -> Result<SignatureShare, SignError> {
    let signer_set = check_signer_set(key_share.threshold, &key_share.participant_set, commitments)?;
    let self_id = key_share.participant_id;
    if !commitments.contains_key(&self_id) {
        return Err(SignError::MissingCommitment(self_id));
    }
    let (hiding, binding) = nonces.pair.take().ok_or(SignError::NonceReuse)?;

    let rho = binding_factor(params, self_id, message, commitments);
    let group_r = group_commitment(params, message, commitments);
    let c = challenge(params, &group_r, &key_share.group_public_key, message);
    let lambda = lagrange_coefficient(params, self_id, &signer_set)?;

    // z_i = d_i + ρ_i·e_i + λ_i·share_i·c
    let response = params.scalar_add(
        &params.scalar_add(&hiding, &params.scalar_mul(&rho, &binding)),
        &params.scalar_mul(&params.scalar_mul(&lambda, &key_share.share), &c),
    );
    Ok(SignatureShare {
        signer: self_id,
        response,
    })
}

/// Verifies each share against public data and sums them into a signature.
///
/// A share `z_i` must satisfy
/// `z_i·G == D_i + ρ_i·E_i + (c·λ_i)·(f(i)·G)`, where `f(i)·G` comes from
/// the commitment polynomial in the public package. The first failing
/// signer (in id order) is named in the error.
pub fn sign_aggregate(
    params: &GroupParams,
    message: &[u8],
    commitments: &BTreeMap<u32, NonceCommitment>,
    shares: &BTreeMap<u32, SignatureShare>,
    package: &PublicKeyPackage,
) -> Result<Signature, SignError> {
    let signer_set = check_signer_set(package.threshold, &package.participant_set, commitments)?;
    for &id in &signer_set {
        if !shares.contains_key(&id) {
            return Err(SignError::MissingCommitment(id));
        }
    }
    for (&id, share) in shares {
        if !commitments.contains_key(&id) || share.signer != id {
            return Err(SignError::UnexpectedShare(id));
        }
    }

    let group_r = group_commitment(params, message, commitments);
    let c = challenge(params, &group_r, &package.public_key, message);

    let mut response = params.scalar_zero();
    for (&id, share) in shares {
        let commitment = &commitments[&id];
        let rho = binding_factor(params, id, message, commitments);
        let lambda = lagrange_coefficient(params, id, &signer_set)?;
        let expected = params.add(
            &params.add(
                &commitment.hiding,
                &params.mul(&commitment.binding, &rho),
            ),
            &params.mul(
                &package.share_public(params, id),
                &params.scalar_mul(&c, &lambda),
            ),
        );
        if params.base_mul(&share.response) != expected {
            return Err(SignError::InvalidSignatureShare(id));
        }
        response = params.scalar_add(&response, &share.response);
    }

    Ok(Signature {
        commitment: group_r,
        response,
    })
}
