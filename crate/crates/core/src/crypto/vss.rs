//! Feldman verifiable secret sharing.
//!
//! A dealer splits a secret into Shamir shares and publishes commitments
//! `C_k = a_k·G` to the polynomial coefficients so that every recipient can
//! check its share against public data.

use std::collections::BTreeMap;

use rand::RngCore;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::group::{GroupElement, GroupParams, Scalar};
use super::poly::Polynomial;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum VssError {
    #[error("threshold {threshold} is outside 1..={participants}")]
    InvalidThreshold { threshold: u32, participants: usize },
    #[error("duplicate participant id {0}")]
    DuplicateParticipant(u32),
    #[error("participant ids must be nonzero")]
    InvalidParticipantId,
    #[error("commitment lengths differ")]
    CommitmentMismatch,
}

/// Feldman commitments `C_0..C_{t-1}`; `C_0` commits to the secret.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct VssCommitment {
    coefficients: Vec<GroupElement>,
}

impl VssCommitment {
    pub fn from_polynomial(params: &GroupParams, poly: &Polynomial) -> Self {
        VssCommitment {
            coefficients: poly
                .coefficients()
                .iter()
                .map(|c| params.base_mul(c))
                .collect(),
        }
    }

    pub fn from_elements(coefficients: Vec<GroupElement>) -> Self {
        VssCommitment { coefficients }
    }

    pub fn coefficients(&self) -> &[GroupElement] {
        &self.coefficients
    }

    pub fn threshold(&self) -> u32 {
        self.coefficients.len() as u32
    }

    /// The committed public key `C_0 = f(0)·G`.
    pub fn public_key(&self) -> &GroupElement {
        &self.coefficients[0]
    }

    /// Evaluates the commitment polynomial in the exponent:
    /// `Σ_k id^k · C_k == f(id)·G`.
    pub fn evaluate(&self, params: &GroupParams, id: u32) -> GroupElement {
        let x = params.scalar_from_u64(id as u64);
        let mut acc = params.identity();
        let mut power = params.scalar_one();
        for coeff in &self.coefficients {
            acc = params.add(&acc, &params.mul(coeff, &power));
            power = params.scalar_mul(&power, &x);
        }
        acc
    }

    /// Componentwise sum of two commitment polynomials.
    pub fn combine(&self, params: &GroupParams, other: &VssCommitment) -> Result<Self, VssError> {
        if self.coefficients.len() != other.coefficients.len() {
            return Err(VssError::CommitmentMismatch);
        }
        Ok(VssCommitment {
            coefficients: self
                .coefficients
                .iter()
                .zip(&other.coefficients)
                .map(|(a, b)| params.add(a, b))
                .collect(),
        })
    }
}

/// One participant's fragment of the shared key, plus the public
/// verification commitments the fragment checks against.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq, Eq)]
pub struct KeyShare {
    pub participant_id: u32,
    pub share: Scalar,
    pub group_public_key: GroupElement,
    pub threshold: u32,
    pub participant_set: Vec<u32>,
    pub commitments: VssCommitment,
}

impl KeyShare {
    /// Checks the share against the commitments and the commitments against
    /// the stated public key.
    pub fn verify(&self, params: &GroupParams) -> bool {
        self.participant_set.contains(&self.participant_id)
            && self.commitments.public_key() == &self.group_public_key
            && vss_verify_share(params, self.participant_id, &self.share, &self.commitments)
    }

    /// The public half of the sharing, safe to hand to aggregators.
    pub fn public_package(&self) -> PublicKeyPackage {
        PublicKeyPackage {
            threshold: self.threshold,
            participant_set: self.participant_set.clone(),
            public_key: self.group_public_key.clone(),
            commitments: self.commitments.clone(),
        }
    }
}

/// Public data of a sharing: enough to verify signature shares without any
/// private material.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq, Eq)]
pub struct PublicKeyPackage {
    pub threshold: u32,
    pub participant_set: Vec<u32>,
    pub public_key: GroupElement,
    pub commitments: VssCommitment,
}

impl PublicKeyPackage {
    /// `f(id)·G`, the public image of participant `id`'s share.
    pub fn share_public(&self, params: &GroupParams, id: u32) -> GroupElement {
        self.commitments.evaluate(params, id)
    }
}

fn check_participants(threshold: u32, participant_ids: &[u32]) -> Result<(), VssError> {
    if threshold < 1 || threshold as usize > participant_ids.len() {
        return Err(VssError::InvalidThreshold {
            threshold,
            participants: participant_ids.len(),
        });
    }
    let mut seen = std::collections::BTreeSet::new();
    for &id in participant_ids {
        if id == 0 {
            return Err(VssError::InvalidParticipantId);
        }
        if !seen.insert(id) {
            return Err(VssError::DuplicateParticipant(id));
        }
    }
    Ok(())
}

/// Shares `secret` as evaluations of a random degree `threshold - 1`
/// polynomial with `f(0) = secret`, and commits to the coefficients.
pub fn vss_deal(
    params: &GroupParams,
    secret: Scalar,
    threshold: u32,
    participant_ids: &[u32],
    rng: &mut dyn RngCore,
) -> Result<(VssCommitment, BTreeMap<u32, Scalar>), VssError> {
    check_participants(threshold, participant_ids)?;
    let poly = Polynomial::random(params, secret, threshold, rng);
    Ok(deal_with_polynomial(params, &poly, participant_ids))
}

/// Deterministic dealing from a fixed polynomial (tests pin worked examples
/// through this).
pub(crate) fn deal_with_polynomial(
    params: &GroupParams,
    poly: &Polynomial,
    participant_ids: &[u32],
) -> (VssCommitment, BTreeMap<u32, Scalar>) {
    let commitment = VssCommitment::from_polynomial(params, poly);
    let shares = participant_ids
        .iter()
        .map(|&id| (id, poly.evaluate(params, id)))
        .collect();
    (commitment, shares)
}

/// True iff `share·G` matches the commitment polynomial evaluated at `id`.
pub fn vss_verify_share(
    params: &GroupParams,
    id: u32,
    share: &Scalar,
    commitment: &VssCommitment,
) -> bool {
    params.base_mul(share) == commitment.evaluate(params, id)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::crypto::poly::lagrange_coefficient;
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;

    fn toy_poly_5_3(params: &GroupParams) -> Polynomial {
        Polynomial::from_coefficients(vec![params.scalar_from_u64(5), params.scalar_from_u64(3)])
    }

    #[test]
    fn forced_polynomial_worked_example() {
        // f(x) = 5 + 3x mod 23 → shares {1: 8, 2: 11}.
        let g = GroupParams::toy();
        let (commitment, shares) = deal_with_polynomial(&g, &toy_poly_5_3(&g), &[1, 2]);
        assert_eq!(shares[&1], g.scalar_from_u64(8));
        assert_eq!(shares[&2], g.scalar_from_u64(11));
        // C_0 = 25^5 = 12, C_1 = 25^3 = 21 mod 47.
        assert_eq!(g.encode_element(&commitment.coefficients()[0]), vec![12]);
        assert_eq!(g.encode_element(&commitment.coefficients()[1]), vec![21]);
    }

    #[test]
    fn verify_worked_example_by_modular_exponentiation() {
        // id=1, share=8: 25^8 == 25^5 · 25^3 mod 47 (both sides are 17).
        let g = GroupParams::toy();
        let (commitment, _) = deal_with_polynomial(&g, &toy_poly_5_3(&g), &[1, 2]);
        assert!(vss_verify_share(&g, 1, &g.scalar_from_u64(8), &commitment));
        assert_eq!(g.encode_element(&commitment.evaluate(&g, 1)), vec![17]);
    }

    #[test]
    fn honest_shares_verify_and_perturbed_shares_fail() {
        let g = GroupParams::production();
        let mut rng = ChaCha20Rng::seed_from_u64(3);
        let secret = g.random_scalar(&mut rng);
        let ids = [1, 2, 3, 4, 5];
        let (commitment, shares) = vss_deal(&g, secret, 3, &ids, &mut rng).unwrap();
        for (&id, share) in &shares {
            assert!(vss_verify_share(&g, id, share, &commitment));
            let bumped = g.scalar_add(share, &g.scalar_one());
            assert!(!vss_verify_share(&g, id, &bumped, &commitment));
        }
    }

    #[test]
    fn degree_zero_dealing_repeats_the_secret() {
        let g = GroupParams::toy();
        let mut rng = ChaCha20Rng::seed_from_u64(5);
        let secret = g.scalar_from_u64(7);
        let (commitment, shares) = vss_deal(&g, secret.clone(), 1, &[1, 4, 6], &mut rng).unwrap();
        assert_eq!(commitment.threshold(), 1);
        assert_eq!(commitment.public_key(), &g.base_mul(&secret));
        for share in shares.values() {
            assert_eq!(share, &secret);
        }
    }

    #[test]
    fn full_threshold_reconstructs_via_interpolation() {
        let g = GroupParams::toy();
        let mut rng = ChaCha20Rng::seed_from_u64(8);
        let secret = g.scalar_from_u64(19);
        let ids = [2, 3, 5, 7];
        let (_, shares) = vss_deal(&g, secret.clone(), 4, &ids, &mut rng).unwrap();
        let mut sum = g.scalar_zero();
        for &id in &ids {
            let lam = lagrange_coefficient(&g, id, &ids).unwrap();
            sum = g.scalar_add(&sum, &g.scalar_mul(&lam, &shares[&id]));
        }
        assert_eq!(sum, secret);
    }

    #[test]
    fn parameter_validation() {
        let g = GroupParams::toy();
        let mut rng = ChaCha20Rng::seed_from_u64(1);
        let s = g.scalar_from_u64(1);
        assert!(matches!(
            vss_deal(&g, s.clone(), 3, &[1, 2], &mut rng),
            Err(VssError::InvalidThreshold { .. })
        ));
        assert!(matches!(
            vss_deal(&g, s.clone(), 0, &[1, 2], &mut rng),
            Err(VssError::InvalidThreshold { .. })
        ));
        assert!(matches!(
            vss_deal(&g, s.clone(), 2, &[1, 1], &mut rng),
            Err(VssError::DuplicateParticipant(1))
        ));
        assert!(matches!(
            vss_deal(&g, s, 1, &[0, 2], &mut rng),
            Err(VssError::InvalidParticipantId)
        ));
    }
}
