//! Property tests for the crypto invariants.
//!
//! The toy-group oracles here are deliberately independent of the library:
//! plain u64 arithmetic mod 23 (scalars) and mod 47 (group elements).

use std::collections::BTreeMap;

use keynet::crypto::dkg::run_local_dkg;
use keynet::crypto::reshare::reshare;
use keynet::crypto::schnorr::verify;
use keynet::crypto::signing::{sign_aggregate, sign_round1, sign_round2};
use keynet::crypto::vss::{vss_deal, vss_verify_share};
use keynet::crypto::{derive_child_public, derive_tweak, KeyId};
use keynet::{GroupParams, Scalar};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

const Q: u64 = 23;
const P: u64 = 47;
const G: u64 = 25;

fn toy_pow(base: u64, exp: u64) -> u64 {
    let mut acc = 1u64;
    for _ in 0..exp {
        acc = acc * base % P;
    }
    acc
}

fn toy_inv(a: u64) -> u64 {
    (1..Q).find(|&x| a * x % Q == 1).expect("nonzero element")
}

/// Lagrange interpolation of `points` at `x`, entirely in u64 mod 23.
fn toy_interpolate_at(x: u64, points: &[(u64, u64)]) -> u64 {
    let mut acc = 0u64;
    for (i, &(xi, yi)) in points.iter().enumerate() {
        let mut num = 1u64;
        let mut den = 1u64;
        for (j, &(xj, _)) in points.iter().enumerate() {
            if i == j {
                continue;
            }
            num = num * ((xj + Q - x % Q) % Q) % Q;
            den = den * ((xj + Q - xi) % Q) % Q;
        }
        acc = (acc + yi * num % Q * toy_inv(den)) % Q;
    }
    acc
}

fn scalar_u64(params: &GroupParams, s: &Scalar) -> u64 {
    params.encode_scalar(s)[0] as u64
}

fn element_u64(params: &GroupParams, e: &keynet::GroupElement) -> u64 {
    params.encode_element(e)[0] as u64
}

proptest! {
    /// Any t of n toy shares interpolate (via the independent oracle) to
    /// the dlog of the group key; checked by exponentiation mod 47.
    #[test]
    fn reconstruction_from_any_threshold_subset(
        seed in 0u64..500,
        t in 2u32..=4,
        extra in 0u32..=3,
        pick in any::<u64>(),
    ) {
        let n = t + extra;
        let params = GroupParams::toy();
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        let ids: Vec<u32> = (1..=n).collect();
        let shares = run_local_dkg(&params, t, &ids, &mut rng).unwrap();

        // A pseudo-random t-subset of the ids.
        let mut pool = ids.clone();
        let mut subset = Vec::new();
        let mut state = pick;
        for _ in 0..t {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            let idx = (state >> 33) as usize % pool.len();
            subset.push(pool.remove(idx));
        }

        let points: Vec<(u64, u64)> = subset
            .iter()
            .map(|id| (*id as u64, scalar_u64(&params, &shares[id].share)))
            .collect();
        let secret = toy_interpolate_at(0, &points);
        let pk = element_u64(&params, &shares[&subset[0]].group_public_key);
        prop_assert_eq!(toy_pow(G, secret), pk);
    }

    /// Any single-coordinate perturbation of a valid share is rejected by
    /// the commitment check.
    #[test]
    fn commitment_soundness_under_perturbation(
        seed in 0u64..500,
        delta in 1u64..23,
        victim_idx in 0usize..5,
    ) {
        let params = GroupParams::toy();
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        let secret = params.random_scalar(&mut rng);
        let ids = [1u32, 2, 3, 4, 5];
        let (commitment, shares) = vss_deal(&params, secret, 3, &ids, &mut rng).unwrap();
        let victim = ids[victim_idx];
        let bumped = params.scalar_add(&shares[&victim], &params.scalar_from_u64(delta));
        prop_assert!(vss_verify_share(&params, victim, &shares[&victim], &commitment));
        prop_assert!(!vss_verify_share(&params, victim, &bumped, &commitment));
    }

    /// Resharing preserves the group key byte-for-byte across random
    /// configuration transitions.
    #[test]
    fn resharing_preserves_the_public_key(
        seed in 0u64..200,
        t0 in 2u32..=4,
        n0_extra in 0u32..=2,
        t1 in 2u32..=4,
        n1_extra in 0u32..=2,
    ) {
        let params = GroupParams::toy();
        let mut rng = ChaCha20Rng::seed_from_u64(seed ^ 0x5e5a);
        let n0 = t0 + n0_extra;
        let n1 = t1 + n1_extra;
        let old_ids: Vec<u32> = (1..=n0).collect();
        let new_ids: Vec<u32> = (1..=n1).map(|i| i + 10).collect();
        let old = run_local_dkg(&params, t0, &old_ids, &mut rng).unwrap();
        let old_vec: Vec<_> = old.values().cloned().collect();
        let new = reshare(&params, &old_vec, t1, &new_ids, &mut rng).unwrap();
        let old_pk = params.encode_element(&old[&old_ids[0]].group_public_key);
        for share in new.values() {
            prop_assert_eq!(&params.encode_element(&share.group_public_key), &old_pk);
            prop_assert!(share.verify(&params));
        }
    }

    /// encode(derive_child_public(pk, id)) == encode((secret + tweak)·G).
    #[test]
    fn derivation_homomorphism(seed in any::<u64>(), fill in any::<u8>()) {
        let params = GroupParams::production();
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        let secret = params.random_scalar(&mut rng);
        let root_pk = params.base_mul(&secret);
        let key_id = KeyId([fill; 32]);
        let tweak = derive_tweak(&params, &key_id, &root_pk);
        let via_secret = params.base_mul(&params.scalar_add(&secret, tweak.scalar()));
        let via_public = derive_child_public(&params, &root_pk, &key_id);
        prop_assert_eq!(
            params.encode_element(&via_secret),
            params.encode_element(&via_public)
        );
    }

    /// Aggregated threshold signatures pass the plain single-key verifier,
    /// also under derived keys, and their width is constant.
    #[test]
    fn aggregates_satisfy_the_plain_verifier(seed in 0u64..200, t in 1u32..=3, extra in 0u32..=2) {
        let params = GroupParams::toy();
        let n = t + extra;
        let mut rng = ChaCha20Rng::seed_from_u64(seed ^ 0xa99);
        let ids: Vec<u32> = (1..=n).collect();
        let shares = run_local_dkg(&params, t, &ids, &mut rng).unwrap();
        let key_id = KeyId([seed as u8; 32]);
        let message = seed.to_be_bytes();

        let signers: Vec<u32> = ids[..t as usize].to_vec();
        let mut commitments = BTreeMap::new();
        let mut nonces = BTreeMap::new();
        for &id in &signers {
            let (c, n) = sign_round1(&params, id, &mut rng);
            commitments.insert(id, c);
            nonces.insert(id, n);
        }
        let mut sig_shares = BTreeMap::new();
        for &id in &signers {
            let tweaked = keynet::crypto::apply_tweak_to_share(&params, &shares[&id], &key_id);
            sig_shares.insert(
                id,
                sign_round2(&params, &tweaked, nonces.get_mut(&id).unwrap(), &message, &commitments)
                    .unwrap(),
            );
        }
        let root = shares[&signers[0]].public_package();
        let tweak = derive_tweak(&params, &key_id, &root.public_key);
        let package = keynet::crypto::derive::apply_tweak_to_package(&params, &root, &tweak);
        let signature =
            sign_aggregate(&params, &message, &commitments, &sig_shares, &package).unwrap();

        let child_pk = derive_child_public(&params, &root.public_key, &key_id);
        prop_assert!(verify(&params, &message, &signature, &child_pk));
        prop_assert_eq!(signature.encode(&params).len(), params.signature_width());
    }

    /// Canonical encodings round-trip and reject out-of-range inputs.
    #[test]
    fn encodings_roundtrip(seed in any::<u64>()) {
        for params in [GroupParams::toy(), GroupParams::production()] {
            let mut rng = ChaCha20Rng::seed_from_u64(seed);
            let s = params.random_scalar(&mut rng);
            let e = params.base_mul(&s);
            prop_assert_eq!(params.decode_scalar(&params.encode_scalar(&s)).unwrap(), s);
            prop_assert_eq!(params.decode_element(&params.encode_element(&e)).unwrap(), e);
        }
    }
}

/// Spot-check the test oracle itself against hand-computed values.
#[test]
fn toy_oracle_self_check() {
    // f(x) = 5 + 3x: points (1,8), (2,11).
    assert_eq!(toy_interpolate_at(0, &[(1, 8), (2, 11)]), 5);
    assert_eq!(toy_interpolate_at(3, &[(1, 8), (2, 11)]), 14);
    assert_eq!(toy_pow(G, 5), 12);
    assert_eq!(toy_pow(G, 8), 17);
}
