//! The MPC node state machine.
//!
//! A node caches controller configuration, joins DKG and resharing
//! sessions, re-attests periodically, and above all gates signing: before
//! contributing to any signature it resolves the key's authorizer from the
//! registry and calls `hot_verify` itself, logging every step to its
//! enclave-signed log. Authorization is checked independently by every
//! participating node, never delegated.
//!
//! Behavior modes model the threat catalog: a node can stall a protocol
//! round, refuse signing outright, corrupt the shares it deals or emits, or
//! stop re-attesting.

use std::collections::BTreeMap;

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::chainsim::{ChainSim, ChainSimError};
use crate::chainstate::ControllerState;
use crate::crypto::dkg::{dkg_round1, dkg_round2, DkgError, DkgPackage, DkgSecretState};
use crate::crypto::group::GroupParams;
use crate::crypto::reshare::{reshare_combine, reshare_deal, ReshareDealing, ReshareError};
use crate::crypto::signing::{sign_round1, sign_round2, NonceCommitment, SignatureShare, SigningNonces};
use crate::crypto::vss::{KeyShare, PublicKeyPackage};
use crate::crypto::{apply_tweak_to_share, Scalar};
use crate::request::{Receipt, SignatureScheme};
use crate::sim::SimNet;
use crate::tee::{Attestation, EnclaveIdentity, LogEvent, RoundOutcome, TeeLog, TeeLogEntry};

/// Scripted misbehavior for a scenario run; exactly one mode is active and
/// it stays fixed for the run.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BehaviorMode {
    Honest,
    /// Never answers the given protocol round (1 or 2).
    Stall { round: u8 },
    RefuseSigning,
    /// Corrupts dealt shares and emitted signature shares.
    CorruptShare,
    /// Stops re-attesting, so eligibility lapses after the TTL.
    StaleAttestation,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SignRefusal {
    #[error("message is not authorized for signing")]
    Unauthorized,
    #[error("receipt deadline has passed")]
    DeadlineExpired,
    #[error("gatekeeper is unknown, unapproved, or the receipt signature fails")]
    UnknownGatekeeper,
    #[error("node attestation has expired")]
    AttestationExpired,
    #[error("node stalled")]
    Stalled,
    #[error("node refuses signing rounds")]
    Refused,
    #[error("requested scheme is not supported")]
    UnsupportedScheme,
    #[error("internal: {0}")]
    Internal(String),
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum NodeError {
    #[error("participant {0} is not registered with the controller")]
    UnknownParticipant(u32),
    #[error("node holds no key share")]
    NoKeyShare,
    #[error("node stalled")]
    Stalled,
    #[error(transparent)]
    Dkg(#[from] DkgError),
    #[error(transparent)]
    Reshare(#[from] ReshareError),
}

/// Read-only view of the world a node validates against.
pub struct NodeEnv<'a> {
    pub params: &'a GroupParams,
    pub controller: &'a ControllerState,
    pub chains: &'a ChainSim,
}

#[derive(Debug, Serialize, Deserialize)]
struct SignSession {
    receipt: Receipt,
    tweaked_share: KeyShare,
    nonces: SigningNonces,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct Node {
    pub participant_id: u32,
    pub behavior: BehaviorMode,
    pub enclave: EnclaveIdentity,
    pub key_share: Option<KeyShare>,
    pub config_epoch: u64,
    log: TeeLog,
    sessions: BTreeMap<String, SignSession>,
    pending_dkg: Option<(String, DkgSecretState)>,
    rng: ChaCha20Rng,
}

impl Node {
    pub fn new(
        params: &GroupParams,
        participant_id: u32,
        behavior: BehaviorMode,
        code_hash: [u8; 32],
        seed: u64,
    ) -> Self {
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        let enclave = EnclaveIdentity::generate(params, code_hash, &mut rng);
        Node {
            participant_id,
            behavior,
            enclave,
            key_share: None,
            config_epoch: 0,
            log: TeeLog::default(),
            sessions: BTreeMap::new(),
            pending_dkg: None,
            rng,
        }
    }

    pub fn actor_name(&self) -> String {
        format!("node-{}", self.participant_id)
    }

    fn log_event(&mut self, params: &GroupParams, now: u64, event: LogEvent) {
        self.log
            .append(params, &self.enclave, now, event, &mut self.rng);
    }

    /// Fetches operational data from the controller and emits the initial
    /// attestation (submitted to the controller by the caller).
    pub fn init(&mut self, env: &NodeEnv, net: &mut SimNet) -> Result<Attestation, NodeError> {
        let _ = net.deliver(&self.actor_name(), "controller", "controller.fetch");
        let config = env.controller.fetch_config(None).expect("current config");
        if config.participant(self.participant_id).is_none() {
            return Err(NodeError::UnknownParticipant(self.participant_id));
        }
        self.config_epoch = config.epoch;
        Ok(self
            .enclave
            .attest(env.params, self.participant_id, net.now(), &mut self.rng))
    }

    /// Periodic re-attestation; a stale node skips emission.
    pub fn attest(&mut self, params: &GroupParams, now: u64) -> Option<Attestation> {
        if self.behavior == BehaviorMode::StaleAttestation {
            return None;
        }
        Some(self.enclave.attest(params, self.participant_id, now, &mut self.rng))
    }

    pub fn export_log(&self, range: Option<(u64, u64)>) -> Vec<TeeLogEntry> {
        self.log.export(range)
    }

    pub fn export_log_jsonl(&self) -> String {
        self.log.export_jsonl(None)
    }

    /// A peer failed to take part in a session this node was serving.
    pub fn note_peer_unavailable(&mut self, params: &GroupParams, now: u64, peer_id: u32) {
        self.log_event(params, now, LogEvent::NodeUnavailable { peer_id });
    }

    // ---- signing ----

    /// Round 1 of a signing session: validates the receipt, re-checks
    /// authorization through the registry and the key-owner contract, and
    /// only then commits nonces with the tweaked share.
    pub fn begin_sign(
        &mut self,
        receipt: &Receipt,
        env: &NodeEnv,
        net: &mut SimNet,
    ) -> Result<NonceCommitment, SignRefusal> {
        match self.behavior {
            BehaviorMode::Stall { round: 1 } => return Err(SignRefusal::Stalled),
            BehaviorMode::RefuseSigning => return Err(SignRefusal::Refused),
            _ => {}
        }
        let me = self.actor_name();
        let params = env.params;
        let session = receipt.hash(params);
        let key_id = receipt.request.key_id;

        self.log_event(
            params,
            net.now(),
            LogEvent::SigningRequestReceived {
                receipt: receipt.clone(),
                session: session.clone(),
            },
        );

        // Controller data: own eligibility and the gatekeeper roster.
        if net.deliver(&me, "controller", "controller.fetch").is_err() {
            return Err(SignRefusal::Internal("controller unreachable".into()));
        }
        let config = env.controller.fetch_config(None).expect("current config");
        let record = config
            .participant(self.participant_id)
            .ok_or_else(|| SignRefusal::Internal("not in current config".into()))?;
        if record.attestation_expiry < net.now() {
            self.log_event(
                params,
                net.now(),
                LogEvent::ProtocolError {
                    code: "attestation-expired".into(),
                },
            );
            return Err(SignRefusal::AttestationExpired);
        }

        let gatekeeper_ok = env
            .controller
            .approved_gatekeeper(&receipt.gatekeeper_id)
            .map(|g| receipt.verify(params, &g.public_key))
            .unwrap_or(false);
        if !gatekeeper_ok {
            self.log_event(
                params,
                net.now(),
                LogEvent::ProtocolError {
                    code: "bad-gatekeeper-receipt".into(),
                },
            );
            return Err(SignRefusal::UnknownGatekeeper);
        }

        if receipt.deadline < net.now() {
            self.log_event(
                params,
                net.now(),
                LogEvent::ProtocolError {
                    code: "deadline-expired".into(),
                },
            );
            return Err(SignRefusal::DeadlineExpired);
        }

        if receipt.request.scheme != SignatureScheme::ThresholdSchnorr {
            self.log_event(
                params,
                net.now(),
                LogEvent::ProtocolError {
                    code: "unsupported-scheme".into(),
                },
            );
            return Err(SignRefusal::UnsupportedScheme);
        }

        let share = self
            .key_share
            .clone()
            .ok_or_else(|| SignRefusal::Internal("no key share installed".into()))?;

        // (a) the authorizer for this key_id, from the registry.
        if net.deliver(&me, "registry", "registry.lookup").is_err() {
            return Err(SignRefusal::Internal("registry unreachable".into()));
        }
        let entry = match env.controller.lookup_authorizer(&key_id) {
            Ok(entry) => entry.clone(),
            Err(_) => {
                self.log_event(
                    params,
                    net.now(),
                    LogEvent::ValidationOutcome {
                        key_id,
                        authorized: false,
                    },
                );
                return Err(SignRefusal::Unauthorized);
            }
        };

        // (b) the read-only authorization method of the key-owner contract.
        let chain_actor = format!("chain:{}", entry.chain_id);
        if net.deliver(&me, &chain_actor, "chain.hot_verify").is_err() {
            return Err(SignRefusal::Internal("chain unreachable".into()));
        }
        let authorized = match env.chains.hot_verify(
            params,
            &entry.chain_id,
            &entry.contract_address,
            &receipt.request.message_hex(),
            &key_id,
            &receipt.request.metadata,
        ) {
            Ok(outcome) => outcome,
            Err(ChainSimError::PolicyPanic(reason)) => {
                self.log_event(
                    params,
                    net.now(),
                    LogEvent::ProtocolError {
                        code: format!("policy-panic: {reason}"),
                    },
                );
                false
            }
            Err(err) => {
                self.log_event(
                    params,
                    net.now(),
                    LogEvent::ProtocolError {
                        code: format!("authorizer-error: {err}"),
                    },
                );
                false
            }
        };
        self.log_event(
            params,
            net.now(),
            LogEvent::ValidationOutcome {
                key_id,
                authorized,
            },
        );
        if !authorized {
            return Err(SignRefusal::Unauthorized);
        }

        let tweaked_share = apply_tweak_to_share(params, &share, &key_id);
        let (commitment, nonces) = sign_round1(params, self.participant_id, &mut self.rng);
        self.sessions.insert(
            session.clone(),
            SignSession {
                receipt: receipt.clone(),
                tweaked_share,
                nonces,
            },
        );
        self.log_event(
            params,
            net.now(),
            LogEvent::RoundStatus {
                session,
                round: 1,
                status: RoundOutcome::Ok,
            },
        );
        Ok(commitment)
    }

    /// Round 2: produces this node's signature share for an open session.
    pub fn finish_sign(
        &mut self,
        session_id: &str,
        commitments: &BTreeMap<u32, NonceCommitment>,
        env: &NodeEnv,
        net: &SimNet,
    ) -> Result<SignatureShare, SignRefusal> {
        if let BehaviorMode::Stall { round: 2 } = self.behavior {
            return Err(SignRefusal::Stalled);
        }
        let params = env.params;
        let mut session = self
            .sessions
            .remove(session_id)
            .ok_or_else(|| SignRefusal::Internal("unknown session".into()))?;

        // No share may be timestamped after the receipt's deadline.
        if session.receipt.deadline < net.now() {
            self.log_event(
                params,
                net.now(),
                LogEvent::ProtocolError {
                    code: "deadline-expired".into(),
                },
            );
            return Err(SignRefusal::DeadlineExpired);
        }

        let mut share = sign_round2(
            params,
            &session.tweaked_share,
            &mut session.nonces,
            &session.receipt.request.message,
            commitments,
        )
        .map_err(|e| {
            self.log_event(
                params,
                net.now(),
                LogEvent::ProtocolError {
                    code: format!("sign-round2: {e}"),
                },
            );
            SignRefusal::Internal(e.to_string())
        })?;

        self.log_event(
            params,
            net.now(),
            LogEvent::RoundStatus {
                session: session_id.to_string(),
                round: 2,
                status: RoundOutcome::Ok,
            },
        );
        if self.behavior == BehaviorMode::CorruptShare {
            share.response = params.scalar_add(&share.response, &params.scalar_one());
        }
        Ok(share)
    }

    // ---- DKG ----

    /// Deals this node's DKG contribution. A share-corrupting node perturbs
    /// the share directed at the lowest-numbered other participant.
    pub fn dkg_deal(
        &mut self,
        params: &GroupParams,
        threshold: u32,
        participant_ids: &[u32],
        session: &str,
        now: u64,
    ) -> Result<(DkgPackage, BTreeMap<u32, Scalar>), NodeError> {
        let (package, mut shares, state) = dkg_round1(
            params,
            self.participant_id,
            threshold,
            participant_ids,
            &mut self.rng,
        )?;
        if self.behavior == BehaviorMode::CorruptShare {
            if let Some((&victim, _)) = shares
                .iter()
                .find(|(&id, _)| id != self.participant_id)
            {
                let corrupted = params.scalar_add(&shares[&victim], &params.scalar_one());
                shares.insert(victim, corrupted);
            }
        }
        self.pending_dkg = Some((session.to_string(), state));
        self.log_event(
            params,
            now,
            LogEvent::RoundStatus {
                session: session.to_string(),
                round: 1,
                status: RoundOutcome::Ok,
            },
        );
        Ok((package, shares))
    }

    /// Verifies the received dealings and installs the resulting key share;
    /// complaints abort the session.
    pub fn dkg_finish(
        &mut self,
        params: &GroupParams,
        received: &BTreeMap<u32, (DkgPackage, Scalar)>,
        now: u64,
    ) -> Result<PublicKeyPackage, NodeError> {
        let (session, state) = self
            .pending_dkg
            .take()
            .ok_or(NodeError::Dkg(DkgError::MissingDealer(self.participant_id)))?;
        match dkg_round2(params, &state, received) {
            Ok(share) => {
                let package = share.public_package();
                self.key_share = Some(share);
                self.log_event(
                    params,
                    now,
                    LogEvent::RoundStatus {
                        session,
                        round: 2,
                        status: RoundOutcome::Ok,
                    },
                );
                Ok(package)
            }
            Err(err) => {
                if let DkgError::ShareVerificationFailed(complaints) = &err {
                    for complaint in complaints {
                        self.log_event(
                            params,
                            now,
                            LogEvent::ProtocolError {
                                code: format!("dkg-complaint: dealer {}", complaint.dealer),
                            },
                        );
                    }
                }
                self.log_event(
                    params,
                    now,
                    LogEvent::RoundStatus {
                        session,
                        round: 2,
                        status: RoundOutcome::Aborted,
                    },
                );
                Err(err.into())
            }
        }
    }

    // ---- resharing ----

    /// Contributes a sub-dealing to a resharing session (old holders only).
    pub fn reshare_deal_step(
        &mut self,
        params: &GroupParams,
        contributing: &[u32],
        new_threshold: u32,
        new_participant_ids: &[u32],
        session: &str,
        now: u64,
    ) -> Result<(ReshareDealing, BTreeMap<u32, Scalar>), NodeError> {
        if let BehaviorMode::Stall { round: 1 } = self.behavior {
            return Err(NodeError::Stalled);
        }
        let share = self.key_share.as_ref().ok_or(NodeError::NoKeyShare)?;
        let (dealing, mut subs) = reshare_deal(
            params,
            share,
            contributing,
            new_threshold,
            new_participant_ids,
            &mut self.rng,
        )?;
        if self.behavior == BehaviorMode::CorruptShare {
            if let Some((&victim, _)) = subs.iter().find(|(&id, _)| id != self.participant_id) {
                let corrupted = params.scalar_add(&subs[&victim], &params.scalar_one());
                subs.insert(victim, corrupted);
            }
        }
        self.log_event(
            params,
            now,
            LogEvent::RoundStatus {
                session: session.to_string(),
                round: 1,
                status: RoundOutcome::Ok,
            },
        );
        Ok((dealing, subs))
    }

    /// Combines received sub-shares into this node's refreshed key share.
    #[allow(clippy::too_many_arguments)]
    pub fn reshare_finish(
        &mut self,
        params: &GroupParams,
        new_threshold: u32,
        new_participant_ids: &[u32],
        old_package: &PublicKeyPackage,
        contributing: &[u32],
        received: &BTreeMap<u32, (ReshareDealing, Scalar)>,
        session: &str,
        now: u64,
    ) -> Result<PublicKeyPackage, NodeError> {
        if let BehaviorMode::Stall { round: 2 } = self.behavior {
            return Err(NodeError::Stalled);
        }
        match reshare_combine(
            params,
            self.participant_id,
            new_threshold,
            new_participant_ids,
            old_package,
            contributing,
            received,
        ) {
            Ok(share) => {
                let package = share.public_package();
                self.key_share = Some(share);
                self.log_event(
                    params,
                    now,
                    LogEvent::RoundStatus {
                        session: session.to_string(),
                        round: 2,
                        status: RoundOutcome::Ok,
                    },
                );
                Ok(package)
            }
            Err(err) => {
                self.log_event(
                    params,
                    now,
                    LogEvent::RoundStatus {
                        session: session.to_string(),
                        round: 2,
                        status: RoundOutcome::Aborted,
                    },
                );
                Err(err.into())
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chainsim::Policy;
    use crate::chainstate::{GatekeeperRecord, GenesisConfig, ParticipantRecord};
    use crate::crypto::schnorr::{schnorr_keygen, schnorr_sign, verify};
    use crate::crypto::signing::sign_aggregate;
    use crate::crypto::{derive_child_public, KeyId};
    use crate::request::SigningRequest;
    use crate::tee::audit_log;

    struct Fixture {
        params: GroupParams,
        controller: ControllerState,
        chains: ChainSim,
        nodes: BTreeMap<u32, Node>,
        net: SimNet,
        gk_secret: Scalar,
        passkey_address: String,
    }

    /// A 3-node t=2 network with an approved gatekeeper and a deployed
    /// passkey policy; nodes have completed DKG and attested.
    fn fixture(behaviors: &[(u32, BehaviorMode)]) -> Fixture {
        let params = GroupParams::production();
        let mut net = SimNet::ideal();
        let mut nodes = BTreeMap::new();
        let mut records = Vec::new();
        for id in 1..=3u32 {
            let behavior = behaviors
                .iter()
                .find(|(b_id, _)| *b_id == id)
                .map(|(_, b)| *b)
                .unwrap_or(BehaviorMode::Honest);
            let node = Node::new(&params, id, behavior, [0xaa; 32], 1000 + id as u64);
            records.push(ParticipantRecord {
                participant_id: id,
                network_address: node.actor_name(),
                encryption_public_key: node.enclave.public_key.clone(),
                enclave_identity_key: node.enclave.public_key.clone(),
                attestation_expiry: 0,
            });
            nodes.insert(id, node);
        }
        let mut controller = ControllerState::genesis(GenesisConfig {
            participants: records,
            threshold: 2,
            code_identity: vec![0xaa; 32],
            attestation_ttl: 100,
        })
        .unwrap();

        let mut gk_rng = ChaCha20Rng::seed_from_u64(55);
        let (gk_secret, gk_public) = schnorr_keygen(&params, &mut gk_rng);
        controller.register_gatekeeper(GatekeeperRecord {
            gatekeeper_id: "gk1".into(),
            public_key: gk_public,
            leased_capacity: 100,
            lease_window: 100,
            approved: true,
        });

        let mut chains = ChainSim::new(&["near".into()]);
        let passkey_address = chains
            .deploy_policy("near", Policy::by_name("passkey").unwrap())
            .unwrap();

        // DKG + attestation.
        let ids = [1, 2, 3];
        let mut packages = BTreeMap::new();
        let mut directed: BTreeMap<u32, BTreeMap<u32, Scalar>> = BTreeMap::new();
        for &id in &ids {
            let node = nodes.get_mut(&id).unwrap();
            let (pkg, shares) = node.dkg_deal(&params, 2, &ids, "dkg-epoch-0", 0).unwrap();
            for (&to, s) in &shares {
                directed.entry(to).or_default().insert(id, s.clone());
            }
            packages.insert(id, pkg);
        }
        for &id in &ids {
            let received = directed[&id]
                .iter()
                .map(|(&dealer, s)| (dealer, (packages[&dealer].clone(), s.clone())))
                .collect();
            let node = nodes.get_mut(&id).unwrap();
            let package = node.dkg_finish(&params, &received, 0).unwrap();
            controller.set_group_key(package);
        }
        for &id in &ids {
            let env = NodeEnv {
                params: &params,
                controller: &controller,
                chains: &chains,
            };
            let att = nodes.get_mut(&id).unwrap().init(&env, &mut net).unwrap();
            controller.record_attestation(&params, &att, net.now()).unwrap();
        }

        Fixture {
            params,
            controller,
            chains,
            nodes,
            net,
            gk_secret,
            passkey_address,
        }
    }

    fn make_receipt(fx: &mut Fixture, request: SigningRequest, deadline: u64) -> Receipt {
        let bytes = Receipt::signing_bytes("gk1", &request, deadline);
        let mut rng = ChaCha20Rng::seed_from_u64(77);
        Receipt {
            gatekeeper_id: "gk1".into(),
            request,
            deadline,
            signature: schnorr_sign(&fx.params, &fx.gk_secret, &bytes, &mut rng),
        }
    }

    fn passkey_request(fx: &mut Fixture, payload: [u8; 32], valid: bool) -> SigningRequest {
        let mut device_rng = ChaCha20Rng::seed_from_u64(4242);
        let (device_sk, device_pk) = schnorr_keygen(&fx.params, &mut device_rng);
        let key_id = fx.controller.reserve_key("near", &fx.passkey_address);
        let _ = fx
            .chains
            .passkey_register("near", &fx.passkey_address, key_id, device_pk);
        let message_hex = hex::encode(payload);
        let secret = if valid {
            device_sk
        } else {
            schnorr_keygen(&fx.params, &mut device_rng).0
        };
        let metadata = schnorr_sign(&fx.params, &secret, message_hex.as_bytes(), &mut device_rng)
            .encode(&fx.params);
        SigningRequest {
            key_id,
            message: payload.to_vec(),
            metadata,
            chain_id: "near".into(),
            scheme: SignatureScheme::ThresholdSchnorr,
        }
    }

    /// Runs both rounds through nodes 1 and 2 and aggregates.
    fn run_signing(fx: &mut Fixture, receipt: &Receipt) -> Result<crate::crypto::Signature, SignRefusal> {
        let session = receipt.hash(&fx.params);
        let mut commitments = BTreeMap::new();
        for id in [1u32, 2] {
            let env = NodeEnv {
                params: &fx.params,
                controller: &fx.controller,
                chains: &fx.chains,
            };
            let c = fx
                .nodes
                .get_mut(&id)
                .unwrap()
                .begin_sign(receipt, &env, &mut fx.net)?;
            commitments.insert(id, c);
        }
        let mut shares = BTreeMap::new();
        for id in [1u32, 2] {
            let env = NodeEnv {
                params: &fx.params,
                controller: &fx.controller,
                chains: &fx.chains,
            };
            let s = fx
                .nodes
                .get_mut(&id)
                .unwrap()
                .finish_sign(&session, &commitments, &env, &fx.net)?;
            shares.insert(id, s);
        }
        let root = fx.controller.group_key().unwrap().package.clone();
        let tweak = crate::crypto::derive_tweak(&fx.params, &receipt.request.key_id, &root.public_key);
        let package = crate::crypto::derive::apply_tweak_to_package(&fx.params, &root, &tweak);
        sign_aggregate(
            &fx.params,
            &receipt.request.message,
            &commitments,
            &shares,
            &package,
        )
        .map_err(|e| SignRefusal::Internal(e.to_string()))
    }

    #[test]
    fn authorized_request_yields_verifying_signature_under_derived_key() {
        let mut fx = fixture(&[]);
        let request = passkey_request(&mut fx, [0x11; 32], true);
        let key_id = request.key_id;
        let receipt = make_receipt(&mut fx, request, 500);
        let signature = run_signing(&mut fx, &receipt).unwrap();
        let root_pk = fx.controller.group_key().unwrap().package.public_key.clone();
        let child_pk = derive_child_public(&fx.params, &root_pk, &key_id);
        assert!(verify(&fx.params, &[0x11; 32], &signature, &child_pk));

        // Logs: request received, validation, both round statuses, and the
        // audit invariant holds.
        for id in [1u32, 2] {
            let entries = fx.nodes[&id].export_log(None);
            assert!(entries.len() >= 3);
            audit_log(&fx.params, &entries, &fx.nodes[&id].enclave.public_key).unwrap();
        }
    }

    #[test]
    fn unauthorized_metadata_is_refused_with_no_share() {
        let mut fx = fixture(&[]);
        let request = passkey_request(&mut fx, [0x22; 32], false);
        let receipt = make_receipt(&mut fx, request, 500);
        let err = run_signing(&mut fx, &receipt).unwrap_err();
        assert_eq!(err, SignRefusal::Unauthorized);
        // The refusal is logged as a negative validation outcome.
        let entries = fx.nodes[&1].export_log(None);
        assert!(entries.iter().any(|e| matches!(
            &e.event,
            LogEvent::ValidationOutcome { authorized: false, .. }
        )));
    }

    #[test]
    fn unknown_key_id_is_unauthorized() {
        let mut fx = fixture(&[]);
        let request = SigningRequest {
            key_id: KeyId([9; 32]),
            message: vec![0; 32],
            metadata: vec![],
            chain_id: "near".into(),
            scheme: SignatureScheme::ThresholdSchnorr,
        };
        let receipt = make_receipt(&mut fx, request, 500);
        assert_eq!(run_signing(&mut fx, &receipt).unwrap_err(), SignRefusal::Unauthorized);
    }

    #[test]
    fn expired_deadline_is_rejected_and_logged() {
        let mut fx = fixture(&[]);
        fx.net.advance(600);
        for id in [1u32, 2] {
            let att = fx
                .nodes
                .get_mut(&id)
                .unwrap()
                .attest(&fx.params, fx.net.now())
                .unwrap();
            fx.controller
                .record_attestation(&fx.params, &att, fx.net.now())
                .unwrap();
        }
        let request = passkey_request(&mut fx, [0x33; 32], true);
        let receipt = make_receipt(&mut fx, request, 500);
        let err = run_signing(&mut fx, &receipt).unwrap_err();
        assert_eq!(err, SignRefusal::DeadlineExpired);
        let entries = fx.nodes[&1].export_log(None);
        assert!(entries.iter().any(|e| matches!(
            &e.event,
            LogEvent::ProtocolError { code } if code == "deadline-expired"
        )));
    }

    #[test]
    fn unsigned_or_unapproved_gatekeeper_is_rejected() {
        let mut fx = fixture(&[]);
        let request = passkey_request(&mut fx, [0x44; 32], true);
        let mut receipt = make_receipt(&mut fx, request, 500);
        receipt.gatekeeper_id = "gk2".into();
        assert_eq!(
            run_signing(&mut fx, &receipt).unwrap_err(),
            SignRefusal::UnknownGatekeeper
        );
    }

    #[test]
    fn expired_attestation_blocks_participation() {
        let mut fx = fixture(&[]);
        let request = passkey_request(&mut fx, [0x55; 32], true);
        let receipt = make_receipt(&mut fx, request, 5000);
        fx.net.advance(200); // past the 100-unit TTL
        assert_eq!(
            run_signing(&mut fx, &receipt).unwrap_err(),
            SignRefusal::AttestationExpired
        );
    }

    #[test]
    fn behavior_modes_stall_and_refuse() {
        let mut fx = fixture(&[(1, BehaviorMode::Stall { round: 1 })]);
        let request = passkey_request(&mut fx, [0x66; 32], true);
        let receipt = make_receipt(&mut fx, request, 500);
        let env = NodeEnv {
            params: &fx.params,
            controller: &fx.controller,
            chains: &fx.chains,
        };
        assert_eq!(
            fx.nodes
                .get_mut(&1)
                .unwrap()
                .begin_sign(&receipt, &env, &mut fx.net)
                .unwrap_err(),
            SignRefusal::Stalled
        );

        let mut fx = fixture(&[(2, BehaviorMode::RefuseSigning)]);
        let request = passkey_request(&mut fx, [0x77; 32], true);
        let receipt = make_receipt(&mut fx, request, 500);
        let env = NodeEnv {
            params: &fx.params,
            controller: &fx.controller,
            chains: &fx.chains,
        };
        assert_eq!(
            fx.nodes
                .get_mut(&2)
                .unwrap()
                .begin_sign(&receipt, &env, &mut fx.net)
                .unwrap_err(),
            SignRefusal::Refused
        );
    }

    #[test]
    fn corrupt_share_mode_is_caught_at_aggregation() {
        // Corruption switched on after genesis, as the harness does.
        let mut fx = fixture(&[]);
        fx.nodes.get_mut(&2).unwrap().behavior = BehaviorMode::CorruptShare;
        let request = passkey_request(&mut fx, [0x88; 32], true);
        let receipt = make_receipt(&mut fx, request, 500);
        let err = run_signing(&mut fx, &receipt).unwrap_err();
        assert_eq!(
            err,
            SignRefusal::Internal("signature share from signer 2 is invalid".into())
        );
    }

    #[test]
    fn tampered_log_entry_fails_audit() {
        let mut fx = fixture(&[]);
        let request = passkey_request(&mut fx, [0x99; 32], true);
        let receipt = make_receipt(&mut fx, request, 500);
        run_signing(&mut fx, &receipt).unwrap();
        let mut entries = fx.nodes[&1].export_log(None);
        let validation_idx = entries
            .iter()
            .position(|e| matches!(e.event, LogEvent::ValidationOutcome { .. }))
            .unwrap();
        if let LogEvent::ValidationOutcome { authorized, .. } = &mut entries[validation_idx].event {
            *authorized = !*authorized;
        }
        assert!(!entries[validation_idx].verify(&fx.params, &fx.nodes[&1].enclave.public_key));

        // A timestamp tamper is detected too.
        let mut entries = fx.nodes[&1].export_log(None);
        entries[0].timestamp += 1;
        assert!(!entries[0].verify(&fx.params, &fx.nodes[&1].enclave.public_key));
    }

    #[test]
    fn corrupt_dealer_aborts_dkg_with_logged_complaint() {
        let params = GroupParams::toy();
        let ids = [1u32, 2, 3];
        let mut nodes: BTreeMap<u32, Node> = ids
            .iter()
            .map(|&id| {
                let behavior = if id == 3 {
                    BehaviorMode::CorruptShare
                } else {
                    BehaviorMode::Honest
                };
                (id, Node::new(&params, id, behavior, [0xaa; 32], 300 + id as u64))
            })
            .collect();
        let mut packages = BTreeMap::new();
        let mut directed: BTreeMap<u32, BTreeMap<u32, Scalar>> = BTreeMap::new();
        for &id in &ids {
            let (pkg, shares) = nodes
                .get_mut(&id)
                .unwrap()
                .dkg_deal(&params, 2, &ids, "dkg-epoch-0", 0)
                .unwrap();
            for (&to, s) in &shares {
                directed.entry(to).or_default().insert(id, s.clone());
            }
            packages.insert(id, pkg);
        }
        // Node 3 corrupted its share for the lowest other id, node 1.
        let received: BTreeMap<_, _> = directed[&1]
            .iter()
            .map(|(&dealer, s)| (dealer, (packages[&dealer].clone(), s.clone())))
            .collect();
        let err = nodes
            .get_mut(&1)
            .unwrap()
            .dkg_finish(&params, &received, 0)
            .unwrap_err();
        assert!(matches!(
            err,
            NodeError::Dkg(DkgError::ShareVerificationFailed(ref c))
                if c == &[crate::crypto::Complaint { accuser: 1, dealer: 3 }]
        ));
        let entries = nodes[&1].export_log(None);
        assert!(entries.iter().any(|e| matches!(
            &e.event,
            LogEvent::ProtocolError { code } if code == "dkg-complaint: dealer 3"
        )));
        assert!(entries.iter().any(|e| matches!(
            &e.event,
            LogEvent::RoundStatus { round: 2, status: RoundOutcome::Aborted, .. }
        )));
    }

    #[test]
    fn init_requires_registration() {
        let fx = fixture(&[]);
        let params = fx.params.clone();
        let mut stranger = Node::new(&params, 9, BehaviorMode::Honest, [0xaa; 32], 9);
        let env = NodeEnv {
            params: &params,
            controller: &fx.controller,
            chains: &fx.chains,
        };
        let mut net = SimNet::ideal();
        assert_eq!(
            stranger.init(&env, &mut net).unwrap_err(),
            NodeError::UnknownParticipant(9)
        );
    }

    #[test]
    fn stale_attestation_mode_skips_periodic_attest() {
        let params = GroupParams::production();
        let mut node = Node::new(&params, 1, BehaviorMode::StaleAttestation, [0xaa; 32], 1);
        assert!(node.attest(&params, 50).is_none());
        node.behavior = BehaviorMode::Honest;
        assert!(node.attest(&params, 50).is_some());
    }
}
