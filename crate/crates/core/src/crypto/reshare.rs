//! Key resharing: refreshing shares for a new participant set or threshold
//! while keeping the group key fixed.
//!
//! Each contributing holder of an old share deals a fresh sub-sharing of
//! its Lagrange-weighted share to the new set; summing the sub-shares gives
//! every new participant a share of the unchanged secret under a fresh
//! polynomial, so old and new shares do not interpolate together.

use std::collections::BTreeMap;

use rand::RngCore;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::group::{GroupParams, Scalar};
use super::poly::{lagrange_coefficient, LagrangeError};
use super::vss::{vss_deal, vss_verify_share, KeyShare, PublicKeyPackage, VssCommitment, VssError};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ReshareError {
    #[error("{got} old shares supplied but the old threshold is {needed}")]
    InsufficientShares { needed: u32, got: usize },
    #[error("old shares disagree on the group public key")]
    MixedPublicKeys,
    #[error("old share for participant {0} fails verification")]
    BadOldShare(u32),
    #[error("contributor {0} committed to a secret other than its weighted share")]
    WrongContribution(u32),
    #[error("sub-share from contributor {0} fails verification")]
    BadSubShare(u32),
    #[error("missing dealing from contributor {0}")]
    MissingContributor(u32),
    #[error("resulting public key does not match the old group key")]
    PublicKeyChanged,
    #[error(transparent)]
    Vss(#[from] VssError),
    #[error(transparent)]
    Lagrange(#[from] LagrangeError),
}

/// Broadcast half of one contributor's dealing.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReshareDealing {
    pub contributor: u32,
    pub commitment: VssCommitment,
}

/// Deals a fresh sub-sharing of this holder's λ-weighted share to the new
/// participant set.
pub fn reshare_deal(
    params: &GroupParams,
    old_share: &KeyShare,
    contributing: &[u32],
    new_threshold: u32,
    new_participant_ids: &[u32],
    rng: &mut dyn RngCore,
) -> Result<(ReshareDealing, BTreeMap<u32, Scalar>), ReshareError> {
    let lambda = lagrange_coefficient(params, old_share.participant_id, contributing)?;
    let weighted = params.scalar_mul(&lambda, &old_share.share);
    let (commitment, shares) =
        vss_deal(params, weighted, new_threshold, new_participant_ids, rng)?;
    Ok((
        ReshareDealing {
            contributor: old_share.participant_id,
            commitment,
        },
        shares,
    ))
}

/// Combines sub-shares from every contributor into a new participant's
/// [`KeyShare`], checking that each contribution is consistent with the old
/// public sharing and that the group key is unchanged.
pub fn reshare_combine(
    params: &GroupParams,
    new_id: u32,
    new_threshold: u32,
    new_participant_ids: &[u32],
    old_package: &PublicKeyPackage,
    contributing: &[u32],
    received: &BTreeMap<u32, (ReshareDealing, Scalar)>,
) -> Result<KeyShare, ReshareError> {
    for &contributor in contributing {
        if !received.contains_key(&contributor) {
            return Err(ReshareError::MissingContributor(contributor));
        }
    }
    let mut share = params.scalar_zero();
    let mut combined: Option<VssCommitment> = None;
    for (&contributor, (dealing, sub_share)) in received {
        // The committed constant must be λ_i · f_old(i)·G, binding the
        // contribution to the old sharing.
        let lambda = lagrange_coefficient(params, contributor, contributing)?;
        let expected = params.mul(&old_package.share_public(params, contributor), &lambda);
        if dealing.commitment.public_key() != &expected {
            return Err(ReshareError::WrongContribution(contributor));
        }
        if !vss_verify_share(params, new_id, sub_share, &dealing.commitment) {
            return Err(ReshareError::BadSubShare(contributor));
        }
        share = params.scalar_add(&share, sub_share);
        combined = Some(match combined {
            None => dealing.commitment.clone(),
            Some(acc) => acc.combine(params, &dealing.commitment)?,
        });
    }
    let commitments = combined.expect("contributing set is nonempty");
    if commitments.public_key() != &old_package.public_key {
        return Err(ReshareError::PublicKeyChanged);
    }
    Ok(KeyShare {
        participant_id: new_id,
        share,
        group_public_key: old_package.public_key.clone(),
        threshold: new_threshold,
        participant_set: new_participant_ids.to_vec(),
        commitments,
    })
}

/// One-shot resharing over a set of old shares; the distributed flow in the
/// node layer uses [`reshare_deal`] / [`reshare_combine`] directly.
pub fn reshare(
    params: &GroupParams,
    old_shares: &[KeyShare],
    new_threshold: u32,
    new_participant_ids: &[u32],
    rng: &mut dyn RngCore,
) -> Result<BTreeMap<u32, KeyShare>, ReshareError> {
    let first = old_shares.first().ok_or(ReshareError::InsufficientShares {
        needed: 1,
        got: 0,
    })?;
    let old_threshold = first.threshold;
    if (old_shares.len() as u32) < old_threshold {
        return Err(ReshareError::InsufficientShares {
            needed: old_threshold,
            got: old_shares.len(),
        });
    }
    for share in old_shares {
        if share.group_public_key != first.group_public_key {
            return Err(ReshareError::MixedPublicKeys);
        }
        if !share.verify(params) {
            return Err(ReshareError::BadOldShare(share.participant_id));
        }
    }
    let contributing: Vec<u32> = old_shares
        .iter()
        .take(old_threshold as usize)
        .map(|s| s.participant_id)
        .collect();
    let old_package = first.public_package();

    let mut dealings = BTreeMap::new();
    let mut directed: BTreeMap<u32, BTreeMap<u32, Scalar>> = BTreeMap::new();
    for share in old_shares.iter().take(old_threshold as usize) {
        let (dealing, subs) = reshare_deal(
            params,
            share,
            &contributing,
            new_threshold,
            new_participant_ids,
            rng,
        )?;
        for (&to, sub) in &subs {
            directed
                .entry(to)
                .or_default()
                .insert(share.participant_id, sub.clone());
        }
        dealings.insert(share.participant_id, dealing);
    }

    let mut out = BTreeMap::new();
    for &new_id in new_participant_ids {
        let received = directed[&new_id]
            .iter()
            .map(|(&c, sub)| (c, (dealings[&c].clone(), sub.clone())))
            .collect();
        out.insert(
            new_id,
            reshare_combine(
                params,
                new_id,
                new_threshold,
                new_participant_ids,
                &old_package,
                &contributing,
                &received,
            )?,
        );
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::crypto::dkg::run_local_dkg;
    use crate::crypto::poly::lagrange_coefficient;
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;

    fn reconstruct(params: &GroupParams, shares: &BTreeMap<u32, KeyShare>, set: &[u32]) -> Scalar {
        let mut sum = params.scalar_zero();
        for &id in set {
            let lam = lagrange_coefficient(params, id, set).unwrap();
            sum = params.scalar_add(&sum, &params.scalar_mul(&lam, &shares[&id].share));
        }
        sum
    }

    #[test]
    fn grows_the_set_and_keeps_the_secret() {
        let g = GroupParams::toy();
        let mut rng = ChaCha20Rng::seed_from_u64(21);
        let old = run_local_dkg(&g, 2, &[1, 2, 3], &mut rng).unwrap();
        let secret = reconstruct(&g, &old, &[1, 2]);

        let old_vec: Vec<_> = old.values().cloned().collect();
        let new = reshare(&g, &old_vec, 3, &[1, 2, 3, 4, 5], &mut rng).unwrap();
        assert_eq!(
            g.encode_element(&new[&4].group_public_key),
            g.encode_element(&old[&1].group_public_key),
        );
        assert_eq!(reconstruct(&g, &new, &[2, 4, 5]), secret);
        assert_eq!(reconstruct(&g, &new, &[1, 3, 4]), secret);
        for share in new.values() {
            assert!(share.verify(&g));
        }
    }

    #[test]
    fn same_config_refresh_changes_shares_not_the_key() {
        let g = GroupParams::production();
        let mut rng = ChaCha20Rng::seed_from_u64(22);
        let old = run_local_dkg(&g, 2, &[1, 2, 3], &mut rng).unwrap();
        let old_vec: Vec<_> = old.values().cloned().collect();
        let new = reshare(&g, &old_vec, 2, &[1, 2, 3], &mut rng).unwrap();
        assert_eq!(new[&1].group_public_key, old[&1].group_public_key);
        for id in [1u32, 2, 3] {
            assert_ne!(new[&id].share, old[&id].share);
        }
    }

    #[test]
    fn too_few_shares_are_rejected() {
        let g = GroupParams::toy();
        let mut rng = ChaCha20Rng::seed_from_u64(23);
        let old = run_local_dkg(&g, 3, &[1, 2, 3, 4], &mut rng).unwrap();
        let two: Vec<_> = old.values().take(2).cloned().collect();
        assert!(matches!(
            reshare(&g, &two, 2, &[1, 2, 3], &mut rng),
            Err(ReshareError::InsufficientShares { needed: 3, got: 2 })
        ));
    }

    #[test]
    fn mixed_public_keys_are_rejected() {
        let g = GroupParams::toy();
        let mut rng = ChaCha20Rng::seed_from_u64(24);
        let a = run_local_dkg(&g, 2, &[1, 2], &mut rng).unwrap();
        let b = run_local_dkg(&g, 2, &[1, 2], &mut rng).unwrap();
        let mixed = vec![a[&1].clone(), b[&2].clone()];
        // Distinct runs give distinct keys with overwhelming probability in
        // the production group; the toy group needs a collision check.
        if a[&1].group_public_key != b[&2].group_public_key {
            assert!(matches!(
                reshare(&g, &mixed, 2, &[1, 2], &mut rng),
                Err(ReshareError::MixedPublicKeys)
            ));
        }
    }

    #[test]
    fn old_and_new_shares_do_not_mix() {
        let g = GroupParams::production();
        let mut rng = ChaCha20Rng::seed_from_u64(25);
        let old = run_local_dkg(&g, 2, &[1, 2, 3], &mut rng).unwrap();
        let old_vec: Vec<_> = old.values().cloned().collect();
        let new = reshare(&g, &old_vec, 2, &[1, 2, 3], &mut rng).unwrap();
        // An old share does not verify against the refreshed commitments.
        assert!(!vss_verify_share(
            &g,
            1,
            &old[&1].share,
            &new[&2].commitments
        ));
    }
}
