//! The integration layer: one [`World`] owns the controller, the chains,
//! the nodes, the gatekeepers, the ledger, and the bus, and drives the
//! cross-module flows (genesis DKG, signing, resharing, epochs, disputes)
//! deterministically from a single seed.

pub mod scenario;

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::chainsim::{ChainSim, ChainSimError, Policy};
use crate::chainstate::{
    ChainError, ControllerState, GatekeeperRecord, GenesisConfig, ParticipantRecord,
};
use crate::crypto::dkg::Complaint;
use crate::crypto::group::{GroupElement, GroupError, GroupParams};
use crate::crypto::schnorr::Signature;
use crate::crypto::{DkgError, Scalar};
use crate::econ::{
    DaoEffect, EconError, EconParams, EpochReport, Evidence, EvidenceContext, Ledger, Resolution,
    StakeRole, ViolationClaim,
};
use crate::gatekeeper::{self, Gatekeeper, GatekeeperConfig, QuotaState, Rejection};
use crate::node::{BehaviorMode, Node, NodeEnv, NodeError};
use crate::request::SigningRequest;
use crate::sim::{NetConfig, SimError, SimNet};

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("genesis key generation aborted; complaints: {0:?}")]
    DkgAborted(Vec<Complaint>),
    #[error("resharing aborted: {0}")]
    ReshareAborted(String),
    #[error("unknown gatekeeper {0}")]
    UnknownGatekeeper(String),
    #[error(transparent)]
    Chain(#[from] ChainError),
    #[error(transparent)]
    ChainSim(#[from] ChainSimError),
    #[error(transparent)]
    Node(#[from] NodeError),
    #[error(transparent)]
    Econ(#[from] EconError),
    #[error(transparent)]
    Group(#[from] GroupError),
    #[error(transparent)]
    Sim(#[from] SimError),
}

fn default_group() -> String {
    "toy-23".into()
}
fn default_nodes() -> u32 {
    5
}
fn default_threshold() -> u32 {
    3
}
fn default_chains() -> Vec<String> {
    vec!["near".into()]
}
fn default_attestation_ttl() -> u64 {
    100
}
fn default_reattest_interval() -> u64 {
    50
}
fn default_initial_balance() -> u64 {
    1000
}
fn default_dao_members() -> u32 {
    3
}
fn default_code_identity() -> String {
    "aa".repeat(32)
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PolicyDeployment {
    pub chain: String,
    pub policy: String,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GatekeeperSetup {
    pub id: String,
    pub capacity: u32,
    pub window: u64,
    #[serde(default = "default_true")]
    pub enforce_quota: bool,
}

fn default_true() -> bool {
    true
}

/// Everything needed to build a [`World`]; identical configs and seeds
/// produce byte-identical runs.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct WorldConfig {
    pub seed: u64,
    #[serde(default = "default_group")]
    pub group: String,
    #[serde(default = "default_nodes")]
    pub nodes: u32,
    #[serde(default = "default_threshold")]
    pub threshold: u32,
    #[serde(default)]
    pub behaviors: BTreeMap<u32, BehaviorMode>,
    #[serde(default = "default_chains")]
    pub chains: Vec<String>,
    #[serde(default)]
    pub policies: Vec<PolicyDeployment>,
    #[serde(default)]
    pub gatekeepers: Vec<GatekeeperSetup>,
    #[serde(default)]
    pub econ: EconParams,
    #[serde(default)]
    pub net: NetConfig,
    #[serde(default = "default_attestation_ttl")]
    pub attestation_ttl: u64,
    #[serde(default = "default_reattest_interval")]
    pub reattest_interval: u64,
    #[serde(default = "default_initial_balance")]
    pub initial_balance: u64,
    #[serde(default = "default_dao_members")]
    pub dao_members: u32,
    #[serde(default = "default_code_identity")]
    pub code_identity: String,
}

impl Default for WorldConfig {
    fn default() -> Self {
        WorldConfig {
            seed: 0,
            group: default_group(),
            nodes: default_nodes(),
            threshold: default_threshold(),
            behaviors: BTreeMap::new(),
            chains: default_chains(),
            policies: vec![PolicyDeployment {
                chain: "near".into(),
                policy: "passkey".into(),
            }],
            gatekeepers: vec![GatekeeperSetup {
                id: "gk1".into(),
                capacity: 100,
                window: 1000,
                enforce_quota: true,
            }],
            econ: EconParams::default(),
            net: NetConfig::default(),
            attestation_ttl: default_attestation_ttl(),
            reattest_interval: default_reattest_interval(),
            initial_balance: default_initial_balance(),
            dao_members: default_dao_members(),
            code_identity: default_code_identity(),
        }
    }
}

/// Summary of one submitted request.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "outcome", rename_all = "kebab-case")]
pub enum RequestOutcome {
    Signature { encoded: String },
    Rejected { rejection: String },
}

#[derive(Serialize, Deserialize)]
pub struct World {
    pub config: WorldConfig,
    pub params: GroupParams,
    pub net: SimNet,
    pub controller: ControllerState,
    pub chains: ChainSim,
    pub nodes: BTreeMap<u32, Node>,
    pub gatekeepers: BTreeMap<String, Gatekeeper>,
    pub ledger: Ledger,
    pub deployments: Vec<(PolicyDeployment, String)>,
    pub request_outcomes: Vec<RequestOutcome>,
    pub dispute_resolutions: Vec<String>,
    enclave_archive: BTreeMap<u32, GroupElement>,
    epoch_marks: BTreeMap<u32, u64>,
    last_attest: BTreeMap<u32, u64>,
    master_rng: ChaCha20Rng,
}

pub fn node_account(id: u32) -> String {
    format!("node-{id}")
}

impl World {
    /// Builds the world and runs the genesis flows: controller deploy,
    /// node registration and attestation, the DKG, policy deployments,
    /// gatekeeper registration, and initial staking.
    pub fn init(config: WorldConfig) -> Result<World, HarnessError> {
        if config.nodes == 0 || config.threshold == 0 || config.threshold > config.nodes {
            return Err(HarnessError::Config(format!(
                "threshold {} outside 1..={}",
                config.threshold, config.nodes
            )));
        }
        let params = GroupParams::by_name(&config.group)?;
        let code_identity: [u8; 32] = hex::decode(&config.code_identity)
            .ok()
            .and_then(|v| v.try_into().ok())
            .ok_or_else(|| HarnessError::Config("code_identity must be 32 bytes hex".into()))?;
        let mut master_rng = ChaCha20Rng::seed_from_u64(config.seed);
        let net = SimNet::new(config.seed, config.net.clone());

        // Nodes and their controller records.
        let ids: Vec<u32> = (1..=config.nodes).collect();
        let mut nodes = BTreeMap::new();
        let mut records = Vec::new();
        let mut enclave_archive = BTreeMap::new();
        for &id in &ids {
            let behavior = config.behaviors.get(&id).copied().unwrap_or(BehaviorMode::Honest);
            let node = Node::new(&params, id, behavior, code_identity, master_rng.random());
            enclave_archive.insert(id, node.enclave.public_key.clone());
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
            threshold: config.threshold,
            code_identity: code_identity.to_vec(),
            attestation_ttl: config.attestation_ttl,
        })?;

        // Chains and policies.
        let mut chains = ChainSim::new(&config.chains);
        let mut deployments = Vec::new();
        for deployment in &config.policies {
            let policy = Policy::by_name(&deployment.policy).ok_or_else(|| {
                HarnessError::Config(format!("unknown policy {}", deployment.policy))
            })?;
            let address = chains.deploy_policy(&deployment.chain, policy)?;
            deployments.push((deployment.clone(), address));
        }

        // Gatekeepers, registered and approved at genesis.
        let mut gatekeepers = BTreeMap::new();
        for setup in &config.gatekeepers {
            let mut gk = Gatekeeper::new(
                &params,
                &setup.id,
                QuotaState::new(setup.capacity, setup.window),
                GatekeeperConfig::default(),
                master_rng.random(),
            );
            gk.enforce_quota = setup.enforce_quota;
            controller.register_gatekeeper(GatekeeperRecord {
                gatekeeper_id: setup.id.clone(),
                public_key: gk.public_key.clone(),
                leased_capacity: setup.capacity,
                lease_window: setup.window,
                approved: true,
            });
            gatekeepers.insert(setup.id.clone(), gk);
        }

        // Ledger: fund and stake every protocol actor.
        let mut balances = BTreeMap::new();
        let mut dao_members = Vec::new();
        for &id in &ids {
            balances.insert(node_account(id), config.initial_balance);
        }
        for setup in &config.gatekeepers {
            balances.insert(setup.id.clone(), config.initial_balance);
        }
        for k in 1..=config.dao_members {
            let account = format!("dao-{k}");
            balances.insert(account.clone(), config.initial_balance);
            dao_members.push(account);
        }
        balances.insert("fisher-1".into(), config.initial_balance);
        let mut ledger = Ledger::new(config.econ.clone(), balances, dao_members.clone());
        for &id in &ids {
            ledger.stake(&node_account(id), StakeRole::MpcNode, config.econ.min_stake_node)?;
        }
        for setup in &config.gatekeepers {
            ledger.stake(&setup.id, StakeRole::Gatekeeper, config.econ.min_stake_gatekeeper)?;
        }
        for member in &dao_members {
            ledger.stake(member, StakeRole::DaoMember, config.econ.min_stake_dao)?;
        }

        let mut world = World {
            config,
            params,
            net,
            controller,
            chains,
            nodes,
            gatekeepers,
            ledger,
            deployments,
            request_outcomes: Vec::new(),
            dispute_resolutions: Vec::new(),
            enclave_archive,
            epoch_marks: BTreeMap::new(),
            last_attest: BTreeMap::new(),
            master_rng,
        };
        world.register_and_attest(&ids)?;
        world.run_genesis_dkg(&ids)?;
        Ok(world)
    }

    fn register_and_attest(&mut self, ids: &[u32]) -> Result<(), HarnessError> {
        for &id in ids {
            let attestation = {
                let env = NodeEnv {
                    params: &self.params,
                    controller: &self.controller,
                    chains: &self.chains,
                };
                self.nodes
                    .get_mut(&id)
                    .expect("node exists")
                    .init(&env, &mut self.net)?
                };
            self.controller
                .record_attestation(&self.params, &attestation, self.net.now())?;
            self.last_attest.insert(id, self.net.now());
        }
        Ok(())
    }

    /// Joint key generation across all registered nodes. Any complaint
    /// aborts genesis.
    fn run_genesis_dkg(&mut self, ids: &[u32]) -> Result<(), HarnessError> {
        let session = format!("dkg-epoch-{}", self.controller.epoch());
        let threshold = self.controller.fetch_config(None)?.threshold;
        let mut packages = BTreeMap::new();
        let mut directed: BTreeMap<u32, BTreeMap<u32, Scalar>> = BTreeMap::new();
        for &id in ids {
            let node = self.nodes.get_mut(&id).expect("node exists");
            let (package, shares) = node.dkg_deal(&self.params, threshold, ids, &session, self.net.now())?;
            for (&to, share) in &shares {
                if to != id {
                    let _ = self
                        .net
                        .deliver(&node_account(id), &node_account(to), "dkg.share");
                }
                directed.entry(to).or_default().insert(id, share.clone());
            }
            packages.insert(id, package);
        }
        let mut group_package = None;
        for &id in ids {
            let received = directed[&id]
                .iter()
                .map(|(&dealer, share)| (dealer, (packages[&dealer].clone(), share.clone())))
                .collect();
            let node = self.nodes.get_mut(&id).expect("node exists");
            match node.dkg_finish(&self.params, &received, self.net.now()) {
                Ok(package) => group_package = Some(package),
                Err(NodeError::Dkg(DkgError::ShareVerificationFailed(complaints))) => {
                    return Err(HarnessError::DkgAborted(complaints));
                }
                Err(err) => return Err(err.into()),
            }
        }
        self.controller
            .set_group_key(group_package.expect("at least one participant"));
        Ok(())
    }

    pub fn root_public_key(&self) -> Option<GroupElement> {
        self.controller
            .group_key()
            .map(|record| record.package.public_key.clone())
    }

    /// Looks up the deployed address for a policy by name.
    pub fn deployment_address(&self, chain: &str, policy: &str) -> Option<String> {
        self.deployments
            .iter()
            .find(|(d, _)| d.chain == chain && d.policy == policy)
            .map(|(_, address)| address.clone())
    }

    /// Submits a request through a gatekeeper and records the outcome.
    /// Honest nodes re-attest on their own cadence first, so eligibility
    /// reflects the periodic re-attestation loop.
    pub fn submit_request(
        &mut self,
        gatekeeper_id: &str,
        request: SigningRequest,
    ) -> Result<Signature, Rejection> {
        self.reattest_due_nodes();
        let gk = match self.gatekeepers.get_mut(gatekeeper_id) {
            Some(gk) => gk,
            None => {
                let rejection = Rejection::MalformedRequest("unknown gatekeeper".into());
                self.request_outcomes.push(RequestOutcome::Rejected {
                    rejection: rejection.to_string(),
                });
                return Err(rejection);
            }
        };
        let result = gatekeeper::submit(
            gk,
            &self.params,
            request,
            &mut self.nodes,
            &self.controller,
            &self.chains,
            &mut self.net,
        );
        self.request_outcomes.push(match &result {
            Ok(signature) => RequestOutcome::Signature {
                encoded: hex::encode(signature.encode(&self.params)),
            },
            Err(rejection) => RequestOutcome::Rejected {
                rejection: rejection.to_string(),
            },
        });
        result
    }

    /// Whether `name` addresses an actor in this world.
    pub fn known_actor(&self, name: &str) -> bool {
        match name {
            "controller" | "registry" | "third-party" => true,
            _ => {
                self.nodes.keys().any(|id| node_account(*id) == name)
                    || self
                        .gatekeepers
                        .keys()
                        .any(|id| format!("gatekeeper-{id}") == name)
                    || name
                        .strip_prefix("chain:")
                        .map(|chain| self.chains.chain_ids().iter().any(|c| c == chain))
                        .unwrap_or(false)
            }
        }
    }

    /// Cuts traffic between two actor sets from the current virtual time.
    pub fn inject_partition(
        &mut self,
        side_a: Vec<String>,
        side_b: Vec<String>,
    ) -> Result<(), SimError> {
        for name in side_a.iter().chain(&side_b) {
            if !self.known_actor(name) {
                return Err(SimError::UnknownTarget(name.clone()));
            }
        }
        self.net.partition(side_a, side_b);
        Ok(())
    }

    /// Advances virtual time, stepping through re-attestation boundaries so
    /// honest nodes stay eligible while stale ones lapse.
    pub fn advance_clock(&mut self, dt: u64) {
        let target = self.net.now() + dt;
        loop {
            let now = self.net.now();
            let next_due = self
                .nodes
                .keys()
                .map(|id| self.last_attest.get(id).copied().unwrap_or(0) + self.config.reattest_interval)
                .filter(|&due| due > now && due <= target)
                .min();
            match next_due {
                Some(due) => {
                    self.net.advance(due - now);
                    self.reattest_due_nodes();
                }
                None => {
                    self.net.advance(target - self.net.now());
                    break;
                }
            }
        }
    }

    fn reattest_due_nodes(&mut self) {
        let now = self.net.now();
        let due: Vec<u32> = self
            .nodes
            .keys()
            .copied()
            .filter(|id| {
                now >= self.last_attest.get(id).copied().unwrap_or(0) + self.config.reattest_interval
            })
            .collect();
        for id in due {
            let attestation = self
                .nodes
                .get_mut(&id)
                .and_then(|node| node.attest(&self.params, now));
            match attestation {
                Some(attestation) => {
                    let _ = self.net.deliver(&node_account(id), "controller", "attest.submit");
                    let _ = self
                        .controller
                        .record_attestation(&self.params, &attestation, now);
                    self.last_attest.insert(id, now);
                }
                None => {
                    // Stale node: push the due time forward so the loop in
                    // advance_clock terminates, without re-attesting.
                    self.last_attest.insert(id, now);
                }
            }
        }
    }

    /// Votes a new configuration through the controller and runs the
    /// resharing rounds; the epoch increments only once resharing
    /// completes and the group key is verified unchanged.
    pub fn run_reshare(&mut self, new_ids: &[u32], new_threshold: u32) -> Result<(), HarnessError> {
        self.reattest_due_nodes();
        let old_config = self.controller.fetch_config(None)?.clone();
        let old_threshold = old_config.threshold;
        let old_package = self
            .controller
            .group_key()
            .ok_or_else(|| HarnessError::ReshareAborted("no group key installed".into()))?
            .package
            .clone();

        // Proposed records: reuse existing ones, mint nodes for new ids.
        let mut pending_nodes: BTreeMap<u32, Node> = BTreeMap::new();
        let code_identity: [u8; 32] = self
            .controller
            .code_identity()
            .try_into()
            .expect("pinned code identity is 32 bytes");
        let mut new_records = Vec::new();
        for &id in new_ids {
            if let Some(record) = old_config.participant(id) {
                new_records.push(record.clone());
            } else {
                let node = Node::new(
                    &self.params,
                    id,
                    self.config
                        .behaviors
                        .get(&id)
                        .copied()
                        .unwrap_or(BehaviorMode::Honest),
                    code_identity,
                    self.master_rng.random(),
                );
                self.enclave_archive.insert(id, node.enclave.public_key.clone());
                new_records.push(ParticipantRecord {
                    participant_id: id,
                    network_address: node.actor_name(),
                    encryption_public_key: node.enclave.public_key.clone(),
                    enclave_identity_key: node.enclave.public_key.clone(),
                    attestation_expiry: 0,
                });
                pending_nodes.insert(id, node);
            }
        }

        // On-chain vote by the current participants.
        let proposer = old_config.participants[0].participant_id;
        let proposal_id = self
            .controller
            .propose_config(proposer, new_records, new_threshold)?;
        for &id in old_config.participant_ids().iter().skip(1) {
            let _ = self.net.deliver(&node_account(id), "controller", "config.vote");
            self.controller.vote(id, proposal_id)?;
        }
        let trigger = self
            .controller
            .finalize()?
            .ok_or_else(|| HarnessError::ReshareAborted("vote did not reach majority".into()))?;

        // Pick responsive contributors among the eligible old holders.
        let session = format!("reshare-epoch-{}", old_config.epoch + 1);
        let eligible = self.controller.eligible_participants(self.net.now());
        let mut contributing = Vec::new();
        for &id in &old_config.participant_ids() {
            if contributing.len() as u32 == old_threshold {
                break;
            }
            if !eligible.contains(&id) {
                continue;
            }
            if self.net.deliver("controller", &node_account(id), "reshare.probe").is_err() {
                continue;
            }
            let responsive = self
                .nodes
                .get(&id)
                .map(|n| !matches!(n.behavior, BehaviorMode::Stall { .. }))
                .unwrap_or(false);
            if responsive {
                contributing.push(id);
            } else {
                self.net.timeout("controller", &node_account(id), "reshare.probe");
            }
        }
        if (contributing.len() as u32) < old_threshold {
            self.controller.abandon_proposal();
            return Err(HarnessError::ReshareAborted(format!(
                "only {} of {} required contributors responded",
                contributing.len(),
                old_threshold
            )));
        }

        // Dealing round.
        let mut dealings = BTreeMap::new();
        let mut directed: BTreeMap<u32, BTreeMap<u32, Scalar>> = BTreeMap::new();
        for &id in &contributing {
            let node = self.nodes.get_mut(&id).expect("contributor exists");
            let (dealing, subs) = match node.reshare_deal_step(
                &self.params,
                &contributing,
                new_threshold,
                new_ids,
                &session,
                self.net.now(),
            ) {
                Ok(out) => out,
                Err(err) => {
                    self.controller.abandon_proposal();
                    return Err(HarnessError::ReshareAborted(err.to_string()));
                }
            };
            for (&to, sub) in &subs {
                let _ = self
                    .net
                    .deliver(&node_account(id), &node_account(to), "reshare.subshare");
                directed.entry(to).or_default().insert(id, sub.clone());
            }
            dealings.insert(id, dealing);
        }

        // Combination round across the new set.
        let mut new_package = None;
        for &id in new_ids {
            let received: BTreeMap<_, _> = directed
                .get(&id)
                .map(|subs| {
                    subs.iter()
                        .map(|(&c, sub)| (c, (dealings[&c].clone(), sub.clone())))
                        .collect()
                })
                .unwrap_or_default();
            let node = self
                .nodes
                .get_mut(&id)
                .or_else(|| pending_nodes.get_mut(&id))
                .expect("new participant exists");
            match node.reshare_finish(
                &self.params,
                new_threshold,
                new_ids,
                &old_package,
                &contributing,
                &received,
                &session,
                self.net.now(),
            ) {
                Ok(package) => new_package = Some(package),
                Err(err) => {
                    self.controller.abandon_proposal();
                    return Err(HarnessError::ReshareAborted(err.to_string()));
                }
            }
        }
        let new_package = new_package.expect("new set is nonempty");

        self.controller.complete_reshare(&trigger, new_package)?;

        // Roster changes take effect: drop removed nodes, add new ones.
        let removed: Vec<u32> = self
            .nodes
            .keys()
            .copied()
            .filter(|id| !new_ids.contains(id))
            .collect();
        for id in removed {
            self.nodes.remove(&id);
            self.epoch_marks.remove(&id);
            self.last_attest.remove(&id);
        }
        self.nodes.append(&mut pending_nodes);
        self.register_and_attest(new_ids)?;
        Ok(())
    }

    /// Closes the reward epoch: participation from fresh log entries,
    /// minting, and gatekeeper lease collection.
    pub fn close_epoch(&mut self) -> Result<BTreeMap<String, u64>, HarnessError> {
        let mut participation = BTreeMap::new();
        for (&id, node) in &self.nodes {
            let mark = self.epoch_marks.get(&id).copied().unwrap_or(0);
            let entries = node.export_log(None);
            let fresh: Vec<_> = entries.iter().filter(|e| e.seq >= mark).cloned().collect();
            participation.insert(node_account(id), crate::econ::successful_rounds(&fresh));
            self.epoch_marks.insert(id, entries.len() as u64);
        }
        let gatekeepers = self
            .controller
            .gatekeepers()
            .filter(|g| g.approved)
            .map(|g| g.gatekeeper_id.clone())
            .collect();
        let report = EpochReport {
            epoch: self.ledger.epoch,
            participation,
            gatekeepers,
        };
        Ok(self.ledger.epoch_mint(&report)?)
    }

    /// Assembles the key directory disputes are judged against.
    pub fn evidence_context(&self) -> EvidenceContext<'_> {
        build_evidence_context(
            &self.params,
            &self.controller,
            &self.enclave_archive,
            self.ledger.params.min_unavailability_reports,
        )
    }

    pub fn open_dispute(
        &mut self,
        fisherman: &str,
        accused: &str,
        claim: ViolationClaim,
        evidence: Evidence,
    ) -> Result<u64, EconError> {
        self.ledger.open_dispute(fisherman, accused, claim, evidence)
    }

    pub fn resolve_dispute(&mut self, id: u64) -> Result<Resolution, EconError> {
        let ctx = build_evidence_context(
            &self.params,
            &self.controller,
            &self.enclave_archive,
            self.ledger.params.min_unavailability_reports,
        );
        let result = self.ledger.resolve_dispute(id, &ctx);
        self.dispute_resolutions.push(match &result {
            Ok(Resolution::Upheld { .. }) => "upheld".into(),
            Ok(Resolution::Dismissed) => "dismissed".into(),
            Err(EconError::InvalidEvidence(_)) => "invalid-evidence".into(),
            Err(err) => format!("error: {err}"),
        });
        result
    }

    /// Applies DAO roster effects to the controller.
    pub fn apply_dao_effects(&mut self, effects: &[DaoEffect]) -> Result<(), HarnessError> {
        for effect in effects {
            if let DaoEffect::GatekeeperApproved(gatekeeper_id) = effect {
                self.controller.approve_gatekeeper(gatekeeper_id)?;
            }
        }
        Ok(())
    }

    pub fn snapshot_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("world serializes")
    }

    pub fn from_snapshot_json(text: &str) -> Result<World, serde_json::Error> {
        serde_json::from_str(text)
    }
}

fn build_evidence_context<'a>(
    params: &'a GroupParams,
    controller: &ControllerState,
    enclave_archive: &BTreeMap<u32, GroupElement>,
    min_unavailability_reports: u32,
) -> EvidenceContext<'a> {
    EvidenceContext {
        params,
        enclave_keys: enclave_archive.clone(),
        gatekeeper_keys: controller
            .gatekeepers()
            .map(|g| {
                (
                    g.gatekeeper_id.clone(),
                    (g.public_key.clone(), g.leased_capacity, g.lease_window),
                )
            })
            .collect(),
        node_accounts: enclave_archive
            .keys()
            .map(|&id| (node_account(id), id))
            .collect(),
        min_unavailability_reports,
    }
}
