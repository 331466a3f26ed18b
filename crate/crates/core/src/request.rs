//! Signing-request and receipt wire types.
//!
//! A receipt is a gatekeeper's co-signature over `(gatekeeper_id, request,
//! deadline)`; nodes accept work only when it carries a valid receipt from
//! an approved gatekeeper. Receipts are exported as JSON-lines and double
//! as dispute evidence.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::crypto::group::{GroupElement, GroupParams};
use crate::crypto::schnorr::{verify, Signature};
use crate::crypto::KeyId;

/// Requested signature scheme. Only the Schnorr family is implemented; the
/// ECDSA identifier is reserved for a future signing backend.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SignatureScheme {
    ThresholdSchnorr,
    ThresholdEcdsa,
}

/// A third-party request: sign `message` under the key derived for
/// `key_id`, presenting `metadata` to the authorization policy.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SigningRequest {
    pub key_id: KeyId,
    /// The 32-byte signing payload (e.g. a transaction hash).
    #[serde(with = "hex")]
    pub message: Vec<u8>,
    #[serde(with = "hex")]
    pub metadata: Vec<u8>,
    pub chain_id: String,
    pub scheme: SignatureScheme,
}

impl SigningRequest {
    /// The `message` argument passed to `hot_verify`: lowercase hex of the
    /// signing payload.
    pub fn message_hex(&self) -> String {
        hex::encode(&self.message)
    }

    fn canonical_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        out.extend(self.key_id.as_bytes());
        out.extend((self.message.len() as u64).to_be_bytes());
        out.extend(&self.message);
        out.extend((self.metadata.len() as u64).to_be_bytes());
        out.extend(&self.metadata);
        out.extend((self.chain_id.len() as u64).to_be_bytes());
        out.extend(self.chain_id.as_bytes());
        out.push(match self.scheme {
            SignatureScheme::ThresholdSchnorr => 0,
            SignatureScheme::ThresholdEcdsa => 1,
        });
        out
    }
}

/// A gatekeeper-co-signed request with a deadline.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Receipt {
    pub gatekeeper_id: String,
    pub request: SigningRequest,
    pub deadline: u64,
    pub signature: Signature,
}

impl Receipt {
    /// The bytes the gatekeeper signs: `(gatekeeper_id, request, deadline)`.
    pub fn signing_bytes(gatekeeper_id: &str, request: &SigningRequest, deadline: u64) -> Vec<u8> {
        let mut out = Vec::new();
        out.extend((gatekeeper_id.len() as u64).to_be_bytes());
        out.extend(gatekeeper_id.as_bytes());
        out.extend(request.canonical_bytes());
        out.extend(deadline.to_be_bytes());
        out
    }

    pub fn verify(&self, params: &GroupParams, gatekeeper_key: &GroupElement) -> bool {
        let bytes = Receipt::signing_bytes(&self.gatekeeper_id, &self.request, self.deadline);
        verify(params, &bytes, &self.signature, gatekeeper_key)
    }

    /// Content hash identifying the receipt; also the signing session id.
    pub fn hash(&self, params: &GroupParams) -> String {
        let mut hasher = Sha256::new();
        hasher.update(Receipt::signing_bytes(
            &self.gatekeeper_id,
            &self.request,
            self.deadline,
        ));
        hasher.update(self.signature.encode(params));
        hex::encode(hasher.finalize())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::crypto::schnorr::{schnorr_keygen, schnorr_sign};
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;

    fn sample_request() -> SigningRequest {
        SigningRequest {
            key_id: KeyId([7; 32]),
            message: vec![0xab; 32],
            metadata: vec![1, 2, 3],
            chain_id: "near".into(),
            scheme: SignatureScheme::ThresholdSchnorr,
        }
    }

    #[test]
    fn receipt_signature_roundtrip() {
        let g = GroupParams::production();
        let mut rng = ChaCha20Rng::seed_from_u64(61);
        let (sk, pk) = schnorr_keygen(&g, &mut rng);
        let request = sample_request();
        let bytes = Receipt::signing_bytes("gk1", &request, 500);
        let receipt = Receipt {
            gatekeeper_id: "gk1".into(),
            request,
            deadline: 500,
            signature: schnorr_sign(&g, &sk, &bytes, &mut rng),
        };
        assert!(receipt.verify(&g, &pk));

        let mut tampered = receipt.clone();
        tampered.deadline = 501;
        assert!(!tampered.verify(&g, &pk));
        assert_ne!(tampered.hash(&g), receipt.hash(&g));
    }

    #[test]
    fn canonical_bytes_distinguish_field_boundaries() {
        let mut a = sample_request();
        let mut b = sample_request();
        a.message = vec![1, 2];
        a.metadata = vec![3];
        b.message = vec![1];
        b.metadata = vec![2, 3];
        assert_ne!(a.canonical_bytes(), b.canonical_bytes());
    }

    #[test]
    fn request_serde_uses_hex() {
        let text = serde_json::to_string(&sample_request()).unwrap();
        assert!(text.contains(&"ab".repeat(32)));
        let back: SigningRequest = serde_json::from_str(&text).unwrap();
        assert_eq!(back, sample_request());
    }
}
