//! Prime-order group arithmetic and canonical byte encodings.
//!
//! All protocol cryptography is written against an abstract prime-order
//! group with generator `G` and scalar field `Z_q`. The concrete carrier is
//! a Schnorr group: the order-`q` subgroup of squares in `Z_p^*` for a safe
//! prime `p = 2q + 1`. Group elements are written additively throughout the
//! crate (`a + b`, `s·G`) even though the carrier is multiplicative.
//!
//! Two instantiations ship with the crate:
//!
//! - [`GroupParams::production`] is a 251-bit group (order at least 2^250),
//! - [`GroupParams::toy`] is the order-23 subgroup of `Z_47^*` with
//!   generator 25, small enough for brute-force checks in tests.
//!
//! Encodings are fixed-width big-endian byte strings: scalars are the width
//! of `q`, elements the width of `p`. Decoding rejects anything
//! non-canonical (wrong length, out of range, or outside the subgroup).

use num_bigint::BigUint;
use num_traits::{One, Zero};
use rand::RngCore;
use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use sha2::{Digest, Sha512};
use thiserror::Error;

/// Domain-separation tag for the Schnorr challenge hash.
pub const TAG_CHALLENGE: &[u8] = b"keynet/v1/challenge";
/// Domain-separation tag for the per-signer binding factor.
pub const TAG_BINDING: &[u8] = b"keynet/v1/binding";
/// Domain-separation tag for key-derivation tweaks.
pub const TAG_TWEAK: &[u8] = b"keynet/v1/tweak";

/// 251-bit production group constants: p = 2q + 1, both prime, generator 4.
const PROD_P_HEX: &str = "800000000000000000000000000000000000000000000000000000000009f57";
const PROD_Q_HEX: &str = "400000000000000000000000000000000000000000000000000000000004fab";

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GroupError {
    #[error("encoding has wrong length: expected {expected} bytes, got {got}")]
    WrongLength { expected: usize, got: usize },
    #[error("scalar encoding is out of range")]
    ScalarOutOfRange,
    #[error("element encoding is not a canonical subgroup member")]
    NotInGroup,
    #[error("scalar has no inverse")]
    NoInverse,
    #[error("invalid group parameters: {0}")]
    InvalidParams(String),
    #[error("unknown group name: {0}")]
    UnknownGroup(String),
}

/// An element of the scalar field `Z_q`, held as a canonical residue.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Debug)]
pub struct Scalar(BigUint);

/// A member of the prime-order subgroup, held as a canonical residue mod p.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct GroupElement(BigUint);

impl Scalar {
    pub fn to_biguint(&self) -> &BigUint {
        &self.0
    }
}

impl GroupElement {
    pub fn to_biguint(&self) -> &BigUint {
        &self.0
    }
}

// Scalars and elements serialize as minimal big-endian hex; the canonical
// fixed-width encodings below are for wire formats and hashing, where the
// group parameters are in scope.
macro_rules! hex_serde {
    ($ty:ty) => {
        impl Serialize for $ty {
            fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
                s.serialize_str(&hex::encode(self.0.to_bytes_be()))
            }
        }
        impl<'de> Deserialize<'de> for $ty {
            fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
                let text = String::deserialize(d)?;
                let bytes = hex::decode(&text).map_err(D::Error::custom)?;
                Ok(Self(BigUint::from_bytes_be(&bytes)))
            }
        }
    };
}
hex_serde!(Scalar);
hex_serde!(GroupElement);

/// Parameters of one group instantiation.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq, Eq)]
pub struct GroupParams {
    name: String,
    /// Safe prime p; the group lives inside `Z_p^*`.
    modulus: BigUint,
    /// Prime order q of the subgroup.
    order: BigUint,
    /// Generator of the order-q subgroup.
    generator: BigUint,
    element_width: usize,
    scalar_width: usize,
}

impl GroupParams {
    /// Builds and validates a group from raw constants.
    ///
    /// Checks that p and q are (probable) primes, that p = 2q + 1, and that
    /// the generator has order exactly q.
    pub fn validated(
        name: &str,
        modulus: BigUint,
        order: BigUint,
        generator: BigUint,
    ) -> Result<Self, GroupError> {
        if !is_probable_prime(&order) {
            return Err(GroupError::InvalidParams("order is not prime".into()));
        }
        if !is_probable_prime(&modulus) {
            return Err(GroupError::InvalidParams("modulus is not prime".into()));
        }
        if modulus != BigUint::from(2u8) * &order + BigUint::one() {
            return Err(GroupError::InvalidParams("modulus != 2*order + 1".into()));
        }
        if generator <= BigUint::one() || generator >= modulus {
            return Err(GroupError::InvalidParams("generator out of range".into()));
        }
        if generator.modpow(&order, &modulus) != BigUint::one() {
            return Err(GroupError::InvalidParams(
                "generator does not have the subgroup order".into(),
            ));
        }
        let element_width = modulus.bits().div_ceil(8) as usize;
        let scalar_width = order.bits().div_ceil(8) as usize;
        Ok(GroupParams {
            name: name.to_string(),
            modulus,
            order,
            generator,
            element_width,
            scalar_width,
        })
    }

    /// The production group: order is a 251-bit prime (≥ 2^250).
    pub fn production() -> Self {
        let p = BigUint::parse_bytes(PROD_P_HEX.as_bytes(), 16).unwrap();
        let q = BigUint::parse_bytes(PROD_Q_HEX.as_bytes(), 16).unwrap();
        GroupParams::validated("prod-251", p, q, BigUint::from(4u8)).unwrap()
    }

    /// The toy oracle group: the order-23 subgroup of `Z_47^*`, generator 25.
    pub fn toy() -> Self {
        GroupParams::validated(
            "toy-23",
            BigUint::from(47u8),
            BigUint::from(23u8),
            BigUint::from(25u8),
        )
        .unwrap()
    }

    pub fn by_name(name: &str) -> Result<Self, GroupError> {
        match name {
            "toy-23" | "toy" => Ok(Self::toy()),
            "prod-251" | "prod" | "production" => Ok(Self::production()),
            other => Err(GroupError::UnknownGroup(other.to_string())),
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn order(&self) -> &BigUint {
        &self.order
    }

    pub fn element_width(&self) -> usize {
        self.element_width
    }

    pub fn scalar_width(&self) -> usize {
        self.scalar_width
    }

    /// Encoded signature width: element followed by scalar.
    pub fn signature_width(&self) -> usize {
        self.element_width + self.scalar_width
    }

    // ---- scalar field ----

    pub fn scalar_zero(&self) -> Scalar {
        Scalar(BigUint::zero())
    }

    pub fn scalar_one(&self) -> Scalar {
        Scalar(BigUint::one())
    }

    pub fn scalar_from_u64(&self, value: u64) -> Scalar {
        Scalar(BigUint::from(value) % &self.order)
    }

    pub fn scalar_add(&self, a: &Scalar, b: &Scalar) -> Scalar {
        Scalar((&a.0 + &b.0) % &self.order)
    }

    pub fn scalar_sub(&self, a: &Scalar, b: &Scalar) -> Scalar {
        Scalar((&a.0 + &self.order - &b.0) % &self.order)
    }

    pub fn scalar_mul(&self, a: &Scalar, b: &Scalar) -> Scalar {
        Scalar((&a.0 * &b.0) % &self.order)
    }

    pub fn scalar_neg(&self, a: &Scalar) -> Scalar {
        if a.0.is_zero() {
            self.scalar_zero()
        } else {
            Scalar(&self.order - &a.0)
        }
    }

    /// Multiplicative inverse mod q (q is prime, so a^(q-2)).
    pub fn scalar_inv(&self, a: &Scalar) -> Result<Scalar, GroupError> {
        if a.0.is_zero() {
            return Err(GroupError::NoInverse);
        }
        let exp = &self.order - BigUint::from(2u8);
        Ok(Scalar(a.0.modpow(&exp, &self.order)))
    }

    /// Uniform scalar from a seeded stream, by wide reduction of 64 bytes.
    pub fn random_scalar(&self, rng: &mut dyn RngCore) -> Scalar {
        let mut wide = [0u8; 64];
        rng.fill_bytes(&mut wide);
        Scalar(BigUint::from_bytes_be(&wide) % &self.order)
    }

    /// Nonzero uniform scalar (rejection-samples away zero).
    pub fn random_nonzero_scalar(&self, rng: &mut dyn RngCore) -> Scalar {
        loop {
            let s = self.random_scalar(rng);
            if !s.0.is_zero() {
                return s;
            }
        }
    }

    // ---- group operations (additive notation) ----

    pub fn identity(&self) -> GroupElement {
        GroupElement(BigUint::one())
    }

    pub fn is_identity(&self, a: &GroupElement) -> bool {
        a.0.is_one()
    }

    /// s·G.
    pub fn base_mul(&self, s: &Scalar) -> GroupElement {
        GroupElement(self.generator.modpow(&s.0, &self.modulus))
    }

    /// a + b (group operation).
    pub fn add(&self, a: &GroupElement, b: &GroupElement) -> GroupElement {
        GroupElement((&a.0 * &b.0) % &self.modulus)
    }

    /// s·a.
    pub fn mul(&self, a: &GroupElement, s: &Scalar) -> GroupElement {
        GroupElement(a.0.modpow(&s.0, &self.modulus))
    }

    /// Σ elements.
    pub fn sum<'a>(&self, elements: impl IntoIterator<Item = &'a GroupElement>) -> GroupElement {
        elements
            .into_iter()
            .fold(self.identity(), |acc, e| self.add(&acc, e))
    }

    // ---- canonical encodings ----

    pub fn encode_scalar(&self, s: &Scalar) -> Vec<u8> {
        to_fixed_be(&s.0, self.scalar_width)
    }

    pub fn decode_scalar(&self, bytes: &[u8]) -> Result<Scalar, GroupError> {
        if bytes.len() != self.scalar_width {
            return Err(GroupError::WrongLength {
                expected: self.scalar_width,
                got: bytes.len(),
            });
        }
        let value = BigUint::from_bytes_be(bytes);
        if value >= self.order {
            return Err(GroupError::ScalarOutOfRange);
        }
        Ok(Scalar(value))
    }

    pub fn encode_element(&self, e: &GroupElement) -> Vec<u8> {
        to_fixed_be(&e.0, self.element_width)
    }

    pub fn decode_element(&self, bytes: &[u8]) -> Result<GroupElement, GroupError> {
        if bytes.len() != self.element_width {
            return Err(GroupError::WrongLength {
                expected: self.element_width,
                got: bytes.len(),
            });
        }
        let value = BigUint::from_bytes_be(bytes);
        if value.is_zero() || value >= self.modulus {
            return Err(GroupError::NotInGroup);
        }
        // Subgroup membership: x^q == 1 for the order-q subgroup.
        if value.modpow(&self.order, &self.modulus) != BigUint::one() {
            return Err(GroupError::NotInGroup);
        }
        Ok(GroupElement(value))
    }

    /// Re-validates a deserialized scalar (snapshots store minimal hex).
    pub fn check_scalar(&self, s: &Scalar) -> Result<(), GroupError> {
        if s.0 >= self.order {
            return Err(GroupError::ScalarOutOfRange);
        }
        Ok(())
    }

    /// Re-validates a deserialized element.
    pub fn check_element(&self, e: &GroupElement) -> Result<(), GroupError> {
        self.decode_element(&self.encode_element(e)).map(|_| ())
    }

    /// Hashes tagged, length-prefixed parts to a scalar.
    ///
    /// SHA-512 output (512 bits) is reduced mod q; with q at most 251 bits
    /// the reduction is at least twice as wide as the scalar, keeping the
    /// bias negligible.
    pub fn hash_to_scalar(&self, tag: &[u8], parts: &[&[u8]]) -> Scalar {
        let mut hasher = Sha512::new();
        hasher.update((tag.len() as u64).to_be_bytes());
        hasher.update(tag);
        for part in parts {
            hasher.update((part.len() as u64).to_be_bytes());
            hasher.update(part);
        }
        let digest = hasher.finalize();
        Scalar(BigUint::from_bytes_be(&digest) % &self.order)
    }
}

fn to_fixed_be(value: &BigUint, width: usize) -> Vec<u8> {
    let raw = value.to_bytes_be();
    assert!(raw.len() <= width, "value wider than encoding");
    let mut out = vec![0u8; width - raw.len()];
    out.extend_from_slice(&raw);
    out
}

/// Miller-Rabin with fixed small-prime bases; deterministic and adequate
/// for validating the shipped parameter sets.
fn is_probable_prime(n: &BigUint) -> bool {
    let two = BigUint::from(2u8);
    if n < &two {
        return false;
    }
    const BASES: [u32; 15] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47];
    for b in BASES {
        if *n == BigUint::from(b) {
            return true;
        }
        if (n % BigUint::from(b)).is_zero() {
            return false;
        }
    }
    let n_minus_1 = n - BigUint::one();
    let trailing = n_minus_1.trailing_zeros().unwrap_or(0);
    let odd_part = &n_minus_1 >> trailing;
    'bases: for b in BASES {
        let mut x = BigUint::from(b).modpow(&odd_part, n);
        if x.is_one() || x == n_minus_1 {
            continue;
        }
        for _ in 1..trailing {
            x = x.modpow(&two, n);
            if x == n_minus_1 {
                continue 'bases;
            }
        }
        return false;
    }
    true
}
