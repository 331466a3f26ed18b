//! Simulated enclave identity, attestations, and the signed append-only
//! node log.
//!
//! The enclave is modeled as an ordinary signing keypair whose public half
//! is registered with the controller at genesis; "code identity" is a
//! pinned hash constant. Every log entry is enclave-signed over
//! `(seq ‖ timestamp ‖ event)`, so exported logs are tamper-evident and
//! serve as dispute evidence.

use rand::RngCore;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::crypto::group::{GroupElement, GroupParams, Scalar};
use crate::crypto::schnorr::{schnorr_keygen, schnorr_sign, verify, Signature};
use crate::crypto::KeyId;
use crate::request::Receipt;

/// Signing keypair standing in for enclave-held identity.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct EnclaveIdentity {
    secret: Scalar,
    pub public_key: GroupElement,
    #[serde(with = "hex")]
    pub code_hash: Vec<u8>,
}

impl EnclaveIdentity {
    pub fn generate(params: &GroupParams, code_hash: [u8; 32], rng: &mut dyn RngCore) -> Self {
        let (secret, public_key) = schnorr_keygen(params, rng);
        EnclaveIdentity {
            secret,
            public_key,
            code_hash: code_hash.to_vec(),
        }
    }

    pub fn sign(&self, params: &GroupParams, message: &[u8], rng: &mut dyn RngCore) -> Signature {
        schnorr_sign(params, &self.secret, message, rng)
    }

    /// Signed statement of code identity and state at `timestamp`.
    pub fn attest(
        &self,
        params: &GroupParams,
        participant_id: u32,
        timestamp: u64,
        rng: &mut dyn RngCore,
    ) -> Attestation {
        let bytes = Attestation::signing_bytes(participant_id, &self.code_hash, timestamp);
        Attestation {
            participant_id,
            code_hash: self.code_hash.clone(),
            timestamp,
            signature: self.sign(params, &bytes, rng),
        }
    }
}

/// An attestation statement verified by the controller against the
/// registered enclave key and the pinned code hash.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Attestation {
    pub participant_id: u32,
    #[serde(with = "hex")]
    pub code_hash: Vec<u8>,
    pub timestamp: u64,
    pub signature: Signature,
}

impl Attestation {
    pub fn signing_bytes(participant_id: u32, code_hash: &[u8], timestamp: u64) -> Vec<u8> {
        let mut out = Vec::new();
        out.extend(participant_id.to_be_bytes());
        out.extend((code_hash.len() as u64).to_be_bytes());
        out.extend(code_hash);
        out.extend(timestamp.to_be_bytes());
        out
    }

    pub fn verify(&self, params: &GroupParams, enclave_key: &GroupElement) -> bool {
        let bytes = Attestation::signing_bytes(self.participant_id, &self.code_hash, self.timestamp);
        verify(params, &bytes, &self.signature, enclave_key)
    }
}

/// Outcome of one protocol round as recorded in the log.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RoundOutcome {
    Ok,
    Aborted,
}

/// Log event kinds: signing requests submitted by gatekeepers, validation
/// outcomes, protocol round statuses, node unavailability reports, and
/// protocol-level errors.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum LogEvent {
    SigningRequestReceived {
        receipt: Receipt,
        session: String,
    },
    ValidationOutcome {
        key_id: KeyId,
        authorized: bool,
    },
    RoundStatus {
        session: String,
        round: u8,
        status: RoundOutcome,
    },
    NodeUnavailable {
        peer_id: u32,
    },
    ProtocolError {
        code: String,
    },
}

/// One signed, sequence-numbered log entry.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TeeLogEntry {
    pub seq: u64,
    pub timestamp: u64,
    pub event: LogEvent,
    pub signature: Signature,
}

impl TeeLogEntry {
    fn signing_bytes(seq: u64, timestamp: u64, event: &LogEvent) -> Vec<u8> {
        let mut out = Vec::new();
        out.extend(seq.to_be_bytes());
        out.extend(timestamp.to_be_bytes());
        out.extend(serde_json::to_vec(event).expect("log events serialize"));
        out
    }

    pub fn verify(&self, params: &GroupParams, enclave_key: &GroupElement) -> bool {
        let bytes = TeeLogEntry::signing_bytes(self.seq, self.timestamp, &self.event);
        verify(params, &bytes, &self.signature, enclave_key)
    }
}

/// Append-only enclave-signed log with gapless sequence numbers.
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct TeeLog {
    entries: Vec<TeeLogEntry>,
}

impl TeeLog {
    pub fn append(
        &mut self,
        params: &GroupParams,
        enclave: &EnclaveIdentity,
        timestamp: u64,
        event: LogEvent,
        rng: &mut dyn RngCore,
    ) -> &TeeLogEntry {
        let seq = self.entries.len() as u64;
        let bytes = TeeLogEntry::signing_bytes(seq, timestamp, &event);
        self.entries.push(TeeLogEntry {
            seq,
            timestamp,
            event,
            signature: enclave.sign(params, &bytes, rng),
        });
        self.entries.last().unwrap()
    }

    pub fn entries(&self) -> &[TeeLogEntry] {
        &self.entries
    }

    /// Verbatim signed entries, optionally restricted to a seq range.
    pub fn export(&self, range: Option<(u64, u64)>) -> Vec<TeeLogEntry> {
        match range {
            None => self.entries.clone(),
            Some((from, to)) => self
                .entries
                .iter()
                .filter(|e| e.seq >= from && e.seq <= to)
                .cloned()
                .collect(),
        }
    }

    /// JSON-lines form, one signed entry per line: the dispute-evidence
    /// wire format.
    pub fn export_jsonl(&self, range: Option<(u64, u64)>) -> String {
        self.export(range)
            .iter()
            .map(|e| serde_json::to_string(e).expect("log entries serialize"))
            .collect::<Vec<_>>()
            .join("\n")
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum AuditViolation {
    #[error("entry {seq} fails signature verification")]
    BadSignature { seq: u64 },
    #[error("sequence gap at entry {seq}")]
    SequenceGap { seq: u64 },
    #[error("share produced in session {session} without a prior positive validation")]
    ShareWithoutValidation { session: String },
}

/// Full log audit: signatures verify, sequence numbers are gapless, and no
/// round-2 signing success appears without a prior
/// `ValidationOutcome(key_id, true)` for the session's key.
pub fn audit_log(
    params: &GroupParams,
    entries: &[TeeLogEntry],
    enclave_key: &GroupElement,
) -> Result<(), AuditViolation> {
    let mut validated: std::collections::BTreeSet<KeyId> = Default::default();
    let mut session_keys: std::collections::BTreeMap<String, KeyId> = Default::default();
    for (idx, entry) in entries.iter().enumerate() {
        if entry.seq != idx as u64 {
            return Err(AuditViolation::SequenceGap { seq: entry.seq });
        }
        if !entry.verify(params, enclave_key) {
            return Err(AuditViolation::BadSignature { seq: entry.seq });
        }
        match &entry.event {
            LogEvent::SigningRequestReceived { receipt, session } => {
                session_keys.insert(session.clone(), receipt.request.key_id);
            }
            LogEvent::ValidationOutcome { key_id, authorized } => {
                if *authorized {
                    validated.insert(*key_id);
                }
            }
            LogEvent::RoundStatus {
                session,
                round: 2,
                status: RoundOutcome::Ok,
            } => {
                // DKG and reshare rounds produce no signature shares; every
                // other round-2 success is one and needs authorization.
                let is_key_ceremony =
                    session.starts_with("dkg-") || session.starts_with("reshare-");
                let authorized = session_keys
                    .get(session)
                    .map(|key_id| validated.contains(key_id))
                    .unwrap_or(false);
                if !is_key_ceremony && !authorized {
                    return Err(AuditViolation::ShareWithoutValidation {
                        session: session.clone(),
                    });
                }
            }
            _ => {}
        }
    }
    Ok(())
}
