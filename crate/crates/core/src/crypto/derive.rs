//! Deterministic key derivation.
//!
//! A 32-byte key identifier hashes to a scalar tweak that shifts the root
//! key: `child_pk = root_pk + tweak·G`, and every share shifts by the same
//! tweak so the shared secret shifts accordingly. Deriving a child public
//! key needs no private material. The tweak binds the root public key to
//! prevent replays across roots.

use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

use super::group::{GroupElement, GroupParams, Scalar, TAG_TWEAK};
use super::vss::{KeyShare, PublicKeyPackage, VssCommitment};

pub const KEY_ID_LEN: usize = 32;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("key_id must be exactly {KEY_ID_LEN} bytes, got {0}")]
pub struct InvalidKeyIdLength(pub usize);

/// A 32-byte key identifier; serialized as lowercase hex.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct KeyId(pub [u8; KEY_ID_LEN]);

impl KeyId {
    pub fn from_slice(bytes: &[u8]) -> Result<Self, InvalidKeyIdLength> {
        let arr: [u8; KEY_ID_LEN] = bytes
            .try_into()
            .map_err(|_| InvalidKeyIdLength(bytes.len()))?;
        Ok(KeyId(arr))
    }

    pub fn from_hex(text: &str) -> Result<Self, InvalidKeyIdLength> {
        let bytes = hex::decode(text).map_err(|_| InvalidKeyIdLength(text.len() / 2))?;
        Self::from_slice(&bytes)
    }

    pub fn as_bytes(&self) -> &[u8; KEY_ID_LEN] {
        &self.0
    }

    pub fn to_hex(&self) -> String {
        hex::encode(self.0)
    }
}

impl std::fmt::Debug for KeyId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "KeyId({}…)", &self.to_hex()[..8])
    }
}

impl std::fmt::Display for KeyId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.to_hex())
    }
}

impl Serialize for KeyId {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_hex())
    }
}

impl<'de> Deserialize<'de> for KeyId {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let text = String::deserialize(d)?;
        KeyId::from_hex(&text).map_err(D::Error::custom)
    }
}

/// A derivation offset. Normally produced by [`derive_tweak`]; the scalar
/// constructor exists so tests can pin worked examples.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Tweak(Scalar);

impl Tweak {
    pub fn from_scalar(scalar: Scalar) -> Self {
        Tweak(scalar)
    }

    pub fn scalar(&self) -> &Scalar {
        &self.0
    }
}

/// `tweak = H(tag ‖ encode(root_pk) ‖ key_id)` under the tweak tag.
pub fn derive_tweak(params: &GroupParams, key_id: &KeyId, root_public_key: &GroupElement) -> Tweak {
    Tweak(params.hash_to_scalar(
        TAG_TWEAK,
        &[&params.encode_element(root_public_key), key_id.as_bytes()],
    ))
}

/// `child_pk = root_pk + tweak·G`; needs only public data.
pub fn derive_child_public(
    params: &GroupParams,
    root_public_key: &GroupElement,
    key_id: &KeyId,
) -> GroupElement {
    let tweak = derive_tweak(params, key_id, root_public_key);
    apply_tweak_to_element(params, root_public_key, &tweak)
}

pub fn apply_tweak_to_element(
    params: &GroupParams,
    element: &GroupElement,
    tweak: &Tweak,
) -> GroupElement {
    params.add(element, &params.base_mul(&tweak.0))
}

/// Shifts a share by the tweak for `key_id`. All shares shift identically,
/// so the shared secret becomes `f(0) + tweak` while the Shamir structure
/// is untouched.
pub fn apply_tweak_to_share(params: &GroupParams, share: &KeyShare, key_id: &KeyId) -> KeyShare {
    let tweak = derive_tweak(params, key_id, &share.group_public_key);
    apply_tweak(params, share, &tweak)
}

pub fn apply_tweak(params: &GroupParams, share: &KeyShare, tweak: &Tweak) -> KeyShare {
    let mut coefficients: Vec<GroupElement> = share.commitments.coefficients().to_vec();
    coefficients[0] = apply_tweak_to_element(params, &coefficients[0], tweak);
    KeyShare {
        participant_id: share.participant_id,
        share: params.scalar_add(&share.share, &tweak.0),
        group_public_key: apply_tweak_to_element(params, &share.group_public_key, tweak),
        threshold: share.threshold,
        participant_set: share.participant_set.clone(),
        commitments: VssCommitment::from_elements(coefficients),
    }
}

/// Tweaks the public half only; used by verifiers and aggregators.
pub fn apply_tweak_to_package(
    params: &GroupParams,
    package: &PublicKeyPackage,
    tweak: &Tweak,
) -> PublicKeyPackage {
    let mut coefficients: Vec<GroupElement> = package.commitments.coefficients().to_vec();
    coefficients[0] = apply_tweak_to_element(params, &coefficients[0], tweak);
    PublicKeyPackage {
        threshold: package.threshold,
        participant_set: package.participant_set.clone(),
        public_key: apply_tweak_to_element(params, &package.public_key, tweak),
        commitments: VssCommitment::from_elements(coefficients),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::crypto::dkg::run_local_dkg;
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;

    #[test]
    fn zero_tweak_is_identity() {
        let g = GroupParams::toy();
        let mut rng = ChaCha20Rng::seed_from_u64(41);
        let shares = run_local_dkg(&g, 2, &[1, 2, 3], &mut rng).unwrap();
        let tweak = Tweak::from_scalar(g.scalar_zero());
        let shifted = apply_tweak(&g, &shares[&1], &tweak);
        assert_eq!(shifted.group_public_key, shares[&1].group_public_key);
        assert_eq!(shifted.share, shares[&1].share);
    }

    #[test]
    fn toy_worked_example() {
        // Root secret 5 (pk = 25^5 mod 47 = 12), tweak forced to 3:
        // child secret 8, child pk = 25^8 mod 47 = 17 = 12 · 25^3 mod 47.
        let g = GroupParams::toy();
        let root_pk = g.base_mul(&g.scalar_from_u64(5));
        assert_eq!(g.encode_element(&root_pk), vec![12]);
        let tweak = Tweak::from_scalar(g.scalar_from_u64(3));
        let child_pk = apply_tweak_to_element(&g, &root_pk, &tweak);
        assert_eq!(g.encode_element(&child_pk), vec![17]);
        assert_eq!(child_pk, g.base_mul(&g.scalar_from_u64(8)));
    }

    #[test]
    fn distinct_key_ids_give_distinct_children() {
        let g = GroupParams::production();
        let mut rng = ChaCha20Rng::seed_from_u64(42);
        let root_pk = g.base_mul(&g.random_scalar(&mut rng));
        let mut seen = std::collections::BTreeSet::new();
        for i in 0..64u8 {
            let key_id = KeyId([i; 32]);
            let tweak = derive_tweak(&g, &key_id, &root_pk);
            assert!(seen.insert(g.encode_scalar(tweak.scalar())));
            let child = derive_child_public(&g, &root_pk, &key_id);
            assert_ne!(child, root_pk);
        }
    }

    #[test]
    fn derivation_commutes_with_secret_shift() {
        // encode((secret + tweak)·G) == encode(derive_child_public(pk, id)).
        let g = GroupParams::production();
        let mut rng = ChaCha20Rng::seed_from_u64(43);
        for i in 0..8u8 {
            let secret = g.random_scalar(&mut rng);
            let root_pk = g.base_mul(&secret);
            let key_id = KeyId([i.wrapping_mul(7); 32]);
            let tweak = derive_tweak(&g, &key_id, &root_pk);
            let lhs = g.base_mul(&g.scalar_add(&secret, tweak.scalar()));
            let rhs = derive_child_public(&g, &root_pk, &key_id);
            assert_eq!(g.encode_element(&lhs), g.encode_element(&rhs));
        }
    }

    #[test]
    fn key_id_length_is_enforced() {
        assert_eq!(KeyId::from_slice(&[0u8; 31]), Err(InvalidKeyIdLength(31)));
        assert_eq!(KeyId::from_slice(&[0u8; 33]), Err(InvalidKeyIdLength(33)));
        assert!(KeyId::from_slice(&[0u8; 32]).is_ok());
        assert!(KeyId::from_hex("ab").is_err());
    }

    #[test]
    fn tweaked_share_still_verifies_against_tweaked_commitments() {
        let g = GroupParams::production();
        let mut rng = ChaCha20Rng::seed_from_u64(44);
        let shares = run_local_dkg(&g, 3, &[1, 2, 3, 4], &mut rng).unwrap();
        let key_id = KeyId([9; 32]);
        for share in shares.values() {
            let tweaked = apply_tweak_to_share(&g, share, &key_id);
            assert!(tweaked.verify(&g));
        }
    }
}
