//! Distributed key generation: joint Feldman dealing with one complaint
//! round.
//!
//! Every participant deals a random secret to the full set; the group key
//! is the sum of the committed constants. Any share that fails Feldman
//! verification yields a complaint naming the dealer, and an upheld
//! complaint aborts the session. Bias attacks on the resulting public key
//! are accepted at this scale.

use std::collections::BTreeMap;

use rand::RngCore;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::group::{GroupParams, Scalar};
use super::vss::{vss_deal, vss_verify_share, KeyShare, VssCommitment, VssError};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum DkgError {
    #[error("no round-1 message from dealer {0}")]
    MissingDealer(u32),
    #[error("share verification failed; session aborted: {0:?}")]
    ShareVerificationFailed(Vec<Complaint>),
    #[error("dealer {dealer} sent a commitment for the wrong session shape")]
    WrongCommitmentShape { dealer: u32 },
    #[error(transparent)]
    Vss(#[from] VssError),
}

/// A complaint names the dealer whose share failed verification.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Complaint {
    pub accuser: u32,
    pub dealer: u32,
}

/// Broadcast half of a round-1 dealing.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DkgPackage {
    pub dealer: u32,
    pub commitment: VssCommitment,
}

/// Per-participant state carried from round 1 into round 2.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DkgSecretState {
    pub self_id: u32,
    pub threshold: u32,
    pub participant_ids: Vec<u32>,
}

/// Deals this participant's contribution: a broadcast commitment plus one
/// directed share per participant (including itself).
pub fn dkg_round1(
    params: &GroupParams,
    self_id: u32,
    threshold: u32,
    participant_ids: &[u32],
    rng: &mut dyn RngCore,
) -> Result<(DkgPackage, BTreeMap<u32, Scalar>, DkgSecretState), DkgError> {
    let secret = params.random_scalar(rng);
    let (commitment, shares) = vss_deal(params, secret, threshold, participant_ids, rng)?;
    Ok((
        DkgPackage {
            dealer: self_id,
            commitment,
        },
        shares,
        DkgSecretState {
            self_id,
            threshold,
            participant_ids: participant_ids.to_vec(),
        },
    ))
}

/// Verifies every dealer's directed share and aggregates them into this
/// participant's [`KeyShare`].
///
/// `received` must hold one `(broadcast, directed share)` pair per
/// participant in the configured set, keyed by dealer id.
pub fn dkg_round2(
    params: &GroupParams,
    state: &DkgSecretState,
    received: &BTreeMap<u32, (DkgPackage, Scalar)>,
) -> Result<KeyShare, DkgError> {
    for &dealer in &state.participant_ids {
        if !received.contains_key(&dealer) {
            return Err(DkgError::MissingDealer(dealer));
        }
    }

    let mut complaints = Vec::new();
    for (&dealer, (package, share)) in received {
        if package.dealer != dealer || package.commitment.threshold() != state.threshold {
            return Err(DkgError::WrongCommitmentShape { dealer });
        }
        if !vss_verify_share(params, state.self_id, share, &package.commitment) {
            complaints.push(Complaint {
                accuser: state.self_id,
                dealer,
            });
        }
    }
    if !complaints.is_empty() {
        return Err(DkgError::ShareVerificationFailed(complaints));
    }

    let mut share = params.scalar_zero();
    let mut combined: Option<VssCommitment> = None;
    for (package, directed) in received.values() {
        share = params.scalar_add(&share, directed);
        combined = Some(match combined {
            None => package.commitment.clone(),
            Some(acc) => acc.combine(params, &package.commitment)?,
        });
    }
    let commitments = combined.expect("participant set is nonempty");
    let group_public_key = commitments.public_key().clone();

    Ok(KeyShare {
        participant_id: state.self_id,
        share,
        group_public_key,
        threshold: state.threshold,
        participant_set: state.participant_ids.clone(),
        commitments,
    })
}

/// Runs a full honest DKG in-process; a convenience for tests and local key
/// setup.
pub fn run_local_dkg(
    params: &GroupParams,
    threshold: u32,
    participant_ids: &[u32],
    rng: &mut dyn RngCore,
) -> Result<BTreeMap<u32, KeyShare>, DkgError> {
    let mut packages = BTreeMap::new();
    let mut directed: BTreeMap<u32, BTreeMap<u32, Scalar>> = BTreeMap::new();
    let mut states = BTreeMap::new();
    for &id in participant_ids {
        let (package, shares, state) = dkg_round1(params, id, threshold, participant_ids, rng)?;
        for (&to, share) in &shares {
            directed.entry(to).or_default().insert(id, share.clone());
        }
        packages.insert(id, package);
        states.insert(id, state);
    }
    let mut out = BTreeMap::new();
    for &id in participant_ids {
        let received = directed[&id]
            .iter()
            .map(|(&dealer, share)| (dealer, (packages[&dealer].clone(), share.clone())))
            .collect();
        out.insert(id, dkg_round2(params, &states[&id], &received)?);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::crypto::poly::lagrange_coefficient;
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;

    #[test]
    fn honest_run_agrees_on_the_group_key() {
        let g = GroupParams::toy();
        let mut rng = ChaCha20Rng::seed_from_u64(11);
        let shares = run_local_dkg(&g, 2, &[1, 2, 3], &mut rng).unwrap();
        let pk_bytes: Vec<_> = shares
            .values()
            .map(|s| g.encode_element(&s.group_public_key))
            .collect();
        assert!(pk_bytes.windows(2).all(|w| w[0] == w[1]));
        for share in shares.values() {
            assert!(share.verify(&g));
        }
        // Any two shares reconstruct f(0), and f(0)·G is the group key.
        let set = [1, 3];
        let mut secret = g.scalar_zero();
        for &id in &set {
            let lam = lagrange_coefficient(&g, id, &set).unwrap();
            secret = g.scalar_add(&secret, &g.scalar_mul(&lam, &shares[&id].share));
        }
        assert_eq!(g.base_mul(&secret), shares[&1].group_public_key);
    }

    #[test]
    fn single_party_session_is_local_keygen() {
        let g = GroupParams::production();
        let mut rng = ChaCha20Rng::seed_from_u64(12);
        let shares = run_local_dkg(&g, 1, &[1], &mut rng).unwrap();
        let share = &shares[&1];
        assert_eq!(g.base_mul(&share.share), share.group_public_key);
    }

    #[test]
    fn corrupted_directed_share_names_the_dealer() {
        let g = GroupParams::toy();
        let mut rng = ChaCha20Rng::seed_from_u64(13);
        let ids = [1, 2, 3];
        let mut packages = BTreeMap::new();
        let mut directed: BTreeMap<u32, BTreeMap<u32, Scalar>> = BTreeMap::new();
        let mut states = BTreeMap::new();
        for &id in &ids {
            let (package, shares, state) = dkg_round1(&g, id, 2, &ids, &mut rng).unwrap();
            for (&to, share) in &shares {
                directed.entry(to).or_default().insert(id, share.clone());
            }
            packages.insert(id, package);
            states.insert(id, state);
        }
        // Dealer 3 corrupts the share it sends to participant 2.
        let honest = directed[&2][&3].clone();
        directed.get_mut(&2).unwrap().insert(3, g.scalar_add(&honest, &g.scalar_one()));

        let received: BTreeMap<_, _> = directed[&2]
            .iter()
            .map(|(&dealer, share)| (dealer, (packages[&dealer].clone(), share.clone())))
            .collect();
        let err = dkg_round2(&g, &states[&2], &received).unwrap_err();
        assert_eq!(
            err,
            DkgError::ShareVerificationFailed(vec![Complaint {
                accuser: 2,
                dealer: 3
            }])
        );
    }

    #[test]
    fn missing_dealer_is_reported() {
        let g = GroupParams::toy();
        let mut rng = ChaCha20Rng::seed_from_u64(14);
        let ids = [1, 2];
        let (pkg1, shares1, state1) = dkg_round1(&g, 1, 2, &ids, &mut rng).unwrap();
        let mut received = BTreeMap::new();
        received.insert(1, (pkg1, shares1[&1].clone()));
        let err = dkg_round2(&g, &state1, &received).unwrap_err();
        assert_eq!(err, DkgError::MissingDealer(2));
    }
}
