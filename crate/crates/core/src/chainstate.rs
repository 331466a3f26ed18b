//! In-process emulation of the two genesis contracts: the controller
//! (participant roster, configuration voting, attestation records) and the
//! key registry (key_id → authorizer bindings).
//!
//! All mutations go through `&mut self` methods on [`ControllerState`],
//! which models on-chain total ordering. The registry is append-only: no
//! operation mutates an existing binding, mirroring contracts deployed
//! without access keys.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::crypto::group::{GroupElement, GroupParams};
use crate::crypto::vss::PublicKeyPackage;
use crate::crypto::KeyId;
use crate::tee::Attestation;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ChainError {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("unknown epoch {0}")]
    UnknownEpoch(u64),
    #[error("participant {0} is not registered")]
    UnknownParticipant(u32),
    #[error("attestation signature does not verify")]
    BadSignature,
    #[error("attestation code identity does not match the pinned hash")]
    CodeIdentityMismatch,
    #[error("unknown key_id")]
    UnknownKeyId,
    #[error("{0} is not an active participant")]
    NotParticipant(u32),
    #[error("participant {0} already voted")]
    DuplicateVote(u32),
    #[error("no active proposal")]
    NoActiveProposal,
    #[error("a proposal is already pending")]
    ProposalPending,
    #[error("gatekeeper {0} is not registered")]
    UnknownGatekeeper(String),
}

/// Operational record for one MPC participant.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParticipantRecord {
    pub participant_id: u32,
    /// Simulated endpoint id (stands in for an IP address).
    pub network_address: String,
    pub encryption_public_key: GroupElement,
    pub enclave_identity_key: GroupElement,
    /// Eligibility cutoff; the node must re-attest before this passes.
    pub attestation_expiry: u64,
}

/// A pending participant-set / threshold change with its votes.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfigProposal {
    pub proposal_id: u64,
    pub new_participants: Vec<ParticipantRecord>,
    pub new_threshold: u32,
    pub votes: Vec<u32>,
}

/// Network configuration at one epoch.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct NetworkConfig {
    pub epoch: u64,
    pub participants: Vec<ParticipantRecord>,
    pub threshold: u32,
    pub pending_proposal: Option<ConfigProposal>,
}

impl NetworkConfig {
    pub fn participant(&self, id: u32) -> Option<&ParticipantRecord> {
        self.participants.iter().find(|p| p.participant_id == id)
    }

    pub fn participant_ids(&self) -> Vec<u32> {
        self.participants.iter().map(|p| p.participant_id).collect()
    }
}

/// Immutable binding of a key_id to its authorization contract.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RegistryEntry {
    pub key_id: KeyId,
    pub chain_id: String,
    pub contract_address: String,
}

/// Emitted when a proposal finalizes; nodes reshare before the epoch turns.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReshareTrigger {
    pub proposal_id: u64,
    pub new_participants: Vec<ParticipantRecord>,
    pub new_threshold: u32,
}

/// Registered gatekeeper: identity key plus the leased capacity that rate
/// limits and quota disputes are judged against.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GatekeeperRecord {
    pub gatekeeper_id: String,
    pub public_key: GroupElement,
    pub leased_capacity: u32,
    pub lease_window: u64,
    pub approved: bool,
}

/// The group key installed by DKG / resharing, as public data.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GroupKeyRecord {
    pub epoch: u64,
    pub package: PublicKeyPackage,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GenesisConfig {
    pub participants: Vec<ParticipantRecord>,
    pub threshold: u32,
    #[serde(with = "hex")]
    pub code_identity: Vec<u8>,
    pub attestation_ttl: u64,
}

/// The controller + key registry state machine.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ControllerState {
    current: NetworkConfig,
    history: BTreeMap<u64, NetworkConfig>,
    registry: BTreeMap<KeyId, RegistryEntry>,
    reservation_counter: u64,
    #[serde(with = "hex")]
    code_identity: Vec<u8>,
    pub attestation_ttl: u64,
    group_key: Option<GroupKeyRecord>,
    gatekeepers: BTreeMap<String, GatekeeperRecord>,
    next_proposal_id: u64,
}

impl ControllerState {
    /// Deploys the genesis state at epoch 0.
    pub fn genesis(config: GenesisConfig) -> Result<Self, ChainError> {
        if config.participants.is_empty() {
            return Err(ChainError::InvalidConfig("empty participant set".into()));
        }
        if config.threshold < 1 || config.threshold as usize > config.participants.len() {
            return Err(ChainError::InvalidConfig(format!(
                "threshold {} outside 1..={}",
                config.threshold,
                config.participants.len()
            )));
        }
        let mut ids = std::collections::BTreeSet::new();
        for p in &config.participants {
            if p.participant_id == 0 || !ids.insert(p.participant_id) {
                return Err(ChainError::InvalidConfig(
                    "participant ids must be nonzero and distinct".into(),
                ));
            }
        }
        let current = NetworkConfig {
            epoch: 0,
            participants: config.participants,
            threshold: config.threshold,
            pending_proposal: None,
        };
        let mut history = BTreeMap::new();
        history.insert(0, current.clone());
        Ok(ControllerState {
            current,
            history,
            registry: BTreeMap::new(),
            reservation_counter: 0,
            code_identity: config.code_identity,
            attestation_ttl: config.attestation_ttl,
            group_key: None,
            gatekeepers: BTreeMap::new(),
            next_proposal_id: 1,
        })
    }

    /// Latest configuration, or a historical epoch's.
    pub fn fetch_config(&self, epoch: Option<u64>) -> Result<&NetworkConfig, ChainError> {
        match epoch {
            None => Ok(&self.current),
            Some(e) => self.history.get(&e).ok_or(ChainError::UnknownEpoch(e)),
        }
    }

    pub fn epoch(&self) -> u64 {
        self.current.epoch
    }

    pub fn code_identity(&self) -> &[u8] {
        &self.code_identity
    }

    pub fn group_key(&self) -> Option<&GroupKeyRecord> {
        self.group_key.as_ref()
    }

    /// Installs the group key produced by DKG at the current epoch.
    pub fn set_group_key(&mut self, package: PublicKeyPackage) {
        self.group_key = Some(GroupKeyRecord {
            epoch: self.current.epoch,
            package,
        });
    }

    // ---- configuration voting ----

    pub fn propose_config(
        &mut self,
        proposer: u32,
        new_participants: Vec<ParticipantRecord>,
        new_threshold: u32,
    ) -> Result<u64, ChainError> {
        if self.current.participant(proposer).is_none() {
            return Err(ChainError::NotParticipant(proposer));
        }
        if self.current.pending_proposal.is_some() {
            return Err(ChainError::ProposalPending);
        }
        if new_participants.is_empty()
            || new_threshold < 1
            || new_threshold as usize > new_participants.len()
        {
            return Err(ChainError::InvalidConfig("bad proposed shape".into()));
        }
        let proposal_id = self.next_proposal_id;
        self.next_proposal_id += 1;
        self.current.pending_proposal = Some(ConfigProposal {
            proposal_id,
            new_participants,
            new_threshold,
            votes: vec![proposer],
        });
        Ok(proposal_id)
    }

    pub fn vote(&mut self, participant_id: u32, proposal_id: u64) -> Result<(), ChainError> {
        if self.current.participant(participant_id).is_none() {
            return Err(ChainError::NotParticipant(participant_id));
        }
        let proposal = self
            .current
            .pending_proposal
            .as_mut()
            .filter(|p| p.proposal_id == proposal_id)
            .ok_or(ChainError::NoActiveProposal)?;
        if proposal.votes.contains(&participant_id) {
            return Err(ChainError::DuplicateVote(participant_id));
        }
        proposal.votes.push(participant_id);
        Ok(())
    }

    /// Emits a [`ReshareTrigger`] once strictly more than half of the
    /// current participants have voted; `None` while pending. The epoch
    /// only increments later, in [`Self::complete_reshare`].
    pub fn finalize(&mut self) -> Result<Option<ReshareTrigger>, ChainError> {
        let proposal = self
            .current
            .pending_proposal
            .as_ref()
            .ok_or(ChainError::NoActiveProposal)?;
        let quorum = self.current.participants.len() / 2 + 1;
        if proposal.votes.len() < quorum {
            return Ok(None);
        }
        Ok(Some(ReshareTrigger {
            proposal_id: proposal.proposal_id,
            new_participants: proposal.new_participants.clone(),
            new_threshold: proposal.new_threshold,
        }))
    }

    /// Installs the post-reshare configuration and increments the epoch.
    pub fn complete_reshare(
        &mut self,
        trigger: &ReshareTrigger,
        package: PublicKeyPackage,
    ) -> Result<(), ChainError> {
        if self
            .current
            .pending_proposal
            .as_ref()
            .map(|p| p.proposal_id)
            != Some(trigger.proposal_id)
        {
            return Err(ChainError::NoActiveProposal);
        }
        let epoch = self.current.epoch + 1;
        self.current = NetworkConfig {
            epoch,
            participants: trigger.new_participants.clone(),
            threshold: trigger.new_threshold,
            pending_proposal: None,
        };
        self.history.insert(epoch, self.current.clone());
        self.group_key = Some(GroupKeyRecord { epoch, package });
        Ok(())
    }

    /// Drops a failed proposal without touching the epoch.
    pub fn abandon_proposal(&mut self) {
        self.current.pending_proposal = None;
    }

    // ---- attestation ----

    /// Verifies an attestation and extends the participant's eligibility
    /// window to `now + attestation_ttl`.
    pub fn record_attestation(
        &mut self,
        params: &GroupParams,
        attestation: &Attestation,
        now: u64,
    ) -> Result<u64, ChainError> {
        let record = self
            .current
            .participants
            .iter_mut()
            .find(|p| p.participant_id == attestation.participant_id)
            .ok_or(ChainError::UnknownParticipant(attestation.participant_id))?;
        if !attestation.verify(params, &record.enclave_identity_key) {
            return Err(ChainError::BadSignature);
        }
        if attestation.code_hash != self.code_identity {
            return Err(ChainError::CodeIdentityMismatch);
        }
        record.attestation_expiry = now + self.attestation_ttl;
        Ok(record.attestation_expiry)
    }

    /// Participants whose attestation is still valid at `now`; only these
    /// may be chosen for protocol rounds.
    pub fn eligible_participants(&self, now: u64) -> Vec<u32> {
        self.current
            .participants
            .iter()
            .filter(|p| p.attestation_expiry >= now)
            .map(|p| p.participant_id)
            .collect()
    }

    // ---- key registry ----

    /// Reserves a fresh key_id for `(chain_id, contract_address)`. The
    /// id is a hash of the pair and a reservation counter, so one contract
    /// can hold many keys.
    pub fn reserve_key(&mut self, chain_id: &str, contract_address: &str) -> KeyId {
        let mut hasher = Sha256::new();
        hasher.update((chain_id.len() as u64).to_be_bytes());
        hasher.update(chain_id.as_bytes());
        hasher.update((contract_address.len() as u64).to_be_bytes());
        hasher.update(contract_address.as_bytes());
        hasher.update(self.reservation_counter.to_be_bytes());
        self.reservation_counter += 1;
        let key_id = KeyId(hasher.finalize().into());
        self.registry.insert(
            key_id,
            RegistryEntry {
                key_id,
                chain_id: chain_id.to_string(),
                contract_address: contract_address.to_string(),
            },
        );
        key_id
    }

    pub fn lookup_authorizer(&self, key_id: &KeyId) -> Result<&RegistryEntry, ChainError> {
        self.registry.get(key_id).ok_or(ChainError::UnknownKeyId)
    }

    pub fn registry_entries(&self) -> impl Iterator<Item = &RegistryEntry> {
        self.registry.values()
    }

    // ---- gatekeeper roster ----

    pub fn register_gatekeeper(&mut self, record: GatekeeperRecord) {
        self.gatekeepers.insert(record.gatekeeper_id.clone(), record);
    }

    pub fn approve_gatekeeper(&mut self, gatekeeper_id: &str) -> Result<(), ChainError> {
        self.gatekeepers
            .get_mut(gatekeeper_id)
            .ok_or_else(|| ChainError::UnknownGatekeeper(gatekeeper_id.into()))?
            .approved = true;
        Ok(())
    }

    pub fn revoke_gatekeeper(&mut self, gatekeeper_id: &str) -> Result<(), ChainError> {
        self.gatekeepers
            .get_mut(gatekeeper_id)
            .ok_or_else(|| ChainError::UnknownGatekeeper(gatekeeper_id.into()))?
            .approved = false;
        Ok(())
    }

    /// The record for an approved gatekeeper, if any.
    pub fn approved_gatekeeper(&self, gatekeeper_id: &str) -> Option<&GatekeeperRecord> {
        self.gatekeepers.get(gatekeeper_id).filter(|g| g.approved)
    }

    pub fn gatekeeper(&self, gatekeeper_id: &str) -> Option<&GatekeeperRecord> {
        self.gatekeepers.get(gatekeeper_id)
    }

    pub fn gatekeepers(&self) -> impl Iterator<Item = &GatekeeperRecord> {
        self.gatekeepers.values()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tee::EnclaveIdentity;
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;

    fn record(params: &GroupParams, id: u32, rng: &mut ChaCha20Rng) -> (ParticipantRecord, EnclaveIdentity) {
        let enclave = EnclaveIdentity::generate(params, [0xaa; 32], rng);
        let record = ParticipantRecord {
            participant_id: id,
            network_address: format!("sim://node-{id}"),
            encryption_public_key: enclave.public_key.clone(),
            enclave_identity_key: enclave.public_key.clone(),
            attestation_expiry: 0,
        };
        (record, enclave)
    }

    fn controller(params: &GroupParams, n: u32, t: u32, rng: &mut ChaCha20Rng) -> (ControllerState, BTreeMap<u32, EnclaveIdentity>) {
        let mut participants = Vec::new();
        let mut enclaves = BTreeMap::new();
        for id in 1..=n {
            let (r, e) = record(params, id, rng);
            participants.push(r);
            enclaves.insert(id, e);
        }
        let state = ControllerState::genesis(GenesisConfig {
            participants,
            threshold: t,
            code_identity: vec![0xaa; 32],
            attestation_ttl: 100,
        })
        .unwrap();
        (state, enclaves)
    }

    #[test]
    fn genesis_and_config_fetch() {
        let g = GroupParams::production();
        let mut rng = ChaCha20Rng::seed_from_u64(81);
        let (state, _) = controller(&g, 5, 3, &mut rng);
        assert_eq!(state.fetch_config(None).unwrap().epoch, 0);
        assert_eq!(state.fetch_config(Some(0)).unwrap().threshold, 3);
        assert_eq!(state.fetch_config(Some(99)), Err(ChainError::UnknownEpoch(99)));
    }

    #[test]
    fn genesis_rejects_bad_shapes() {
        let err = ControllerState::genesis(GenesisConfig {
            participants: vec![],
            threshold: 1,
            code_identity: vec![0; 32],
            attestation_ttl: 100,
        });
        assert!(matches!(err, Err(ChainError::InvalidConfig(_))));
    }

    #[test]
    fn config_roundtrips_through_serialization() {
        let g = GroupParams::production();
        let mut rng = ChaCha20Rng::seed_from_u64(82);
        let (state, _) = controller(&g, 3, 2, &mut rng);
        let json = serde_json::to_string(state.fetch_config(None).unwrap()).unwrap();
        let back: NetworkConfig = serde_json::from_str(&json).unwrap();
        assert_eq!(&back, state.fetch_config(None).unwrap());
    }

    #[test]
    fn majority_vote_finalizes() {
        let g = GroupParams::production();
        let mut rng = ChaCha20Rng::seed_from_u64(83);
        let (mut state, _) = controller(&g, 5, 3, &mut rng);
        let new_participants = state.fetch_config(None).unwrap().participants.clone();
        let id = state.propose_config(1, new_participants, 4).unwrap();
        // Proposer counts as the first vote; 2 of 5 is still pending.
        state.vote(2, id).unwrap();
        assert_eq!(state.finalize().unwrap(), None);
        // 3 of 5 is a strict majority.
        state.vote(3, id).unwrap();
        let trigger = state.finalize().unwrap().unwrap();
        assert_eq!(trigger.new_threshold, 4);
        // Epoch unchanged until the reshare completes.
        assert_eq!(state.epoch(), 0);
    }

    #[test]
    fn vote_error_paths() {
        let g = GroupParams::production();
        let mut rng = ChaCha20Rng::seed_from_u64(84);
        let (mut state, _) = controller(&g, 3, 2, &mut rng);
        assert_eq!(state.finalize(), Err(ChainError::NoActiveProposal));
        let participants = state.fetch_config(None).unwrap().participants.clone();
        let id = state.propose_config(1, participants, 2).unwrap();
        assert_eq!(state.vote(9, id), Err(ChainError::NotParticipant(9)));
        assert_eq!(state.vote(1, id), Err(ChainError::DuplicateVote(1)));
        assert_eq!(state.vote(2, id + 7), Err(ChainError::NoActiveProposal));
    }

    #[test]
    fn attestation_extends_expiry() {
        let g = GroupParams::production();
        let mut rng = ChaCha20Rng::seed_from_u64(85);
        let (mut state, enclaves) = controller(&g, 3, 2, &mut rng);
        let att = enclaves[&1].attest(&g, 1, 40, &mut rng);
        assert_eq!(state.record_attestation(&g, &att, 40).unwrap(), 140);
        assert!(state.eligible_participants(100).contains(&1));
        assert!(!state.eligible_participants(141).contains(&1));
    }

    #[test]
    fn attestation_rejects_wrong_code_hash_and_forgeries() {
        let g = GroupParams::production();
        let mut rng = ChaCha20Rng::seed_from_u64(86);
        let (mut state, enclaves) = controller(&g, 3, 2, &mut rng);

        // Signed by a key other than the registered one.
        let rogue = EnclaveIdentity::generate(&g, [0xaa; 32], &mut rng);
        let forged = rogue.attest(&g, 1, 10, &mut rng);
        assert_eq!(
            state.record_attestation(&g, &forged, 10),
            Err(ChainError::BadSignature)
        );

        // Tampering with the claimed hash after signing also fails closed.
        let mut att = enclaves[&1].attest(&g, 1, 10, &mut rng);
        att.code_hash = vec![0xbb; 32];
        assert_eq!(
            state.record_attestation(&g, &att, 10),
            Err(ChainError::BadSignature)
        );

        let unknown = enclaves[&1].attest(&g, 9, 10, &mut rng);
        assert_eq!(
            state.record_attestation(&g, &unknown, 10),
            Err(ChainError::UnknownParticipant(9))
        );
    }

    #[test]
    fn mimicked_code_identity_is_rejected() {
        // A node whose enclave honestly reports a hash other than the one
        // pinned at genesis: the signature verifies, the identity does not.
        let g = GroupParams::production();
        let mut rng = ChaCha20Rng::seed_from_u64(88);
        let mimic = EnclaveIdentity::generate(&g, [0xbb; 32], &mut rng);
        let mut state = ControllerState::genesis(GenesisConfig {
            participants: vec![ParticipantRecord {
                participant_id: 1,
                network_address: "sim://node-1".into(),
                encryption_public_key: mimic.public_key.clone(),
                enclave_identity_key: mimic.public_key.clone(),
                attestation_expiry: 0,
            }],
            threshold: 1,
            code_identity: vec![0xaa; 32],
            attestation_ttl: 100,
        })
        .unwrap();
        let att = mimic.attest(&g, 1, 10, &mut rng);
        assert_eq!(
            state.record_attestation(&g, &att, 10),
            Err(ChainError::CodeIdentityMismatch)
        );
    }

    #[test]
    fn key_reservation_roundtrips_and_stays_unique() {
        let g = GroupParams::production();
        let mut rng = ChaCha20Rng::seed_from_u64(87);
        let (mut state, _) = controller(&g, 3, 2, &mut rng);
        let a = state.reserve_key("near", "wallet.near");
        let b = state.reserve_key("near", "wallet.near");
        // One contract can hold multiple keys: same pair, distinct ids.
        assert_ne!(a, b);
        let entry = state.lookup_authorizer(&a).unwrap();
        assert_eq!(entry.chain_id, "near");
        assert_eq!(entry.contract_address, "wallet.near");
        assert_eq!(
            state.lookup_authorizer(&KeyId([9; 32])),
            Err(ChainError::UnknownKeyId)
        );
    }
}
