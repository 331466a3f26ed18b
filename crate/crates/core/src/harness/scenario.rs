//! Scenario engine: scripted timelines over a [`World`] with
//! machine-checkable assertions, plus the bundled threat-scenario library.
//!
//! Scenarios are plain data (JSON-loadable). A run is deterministic: the
//! transcript hash is a pure function of the scenario and its seed.

use std::collections::BTreeMap;

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{node_account, HarnessError, RequestOutcome, World, WorldConfig};
use crate::crypto::derive::derive_child_public;
use crate::crypto::group::{GroupParams, Scalar};
use crate::crypto::schnorr::{schnorr_keygen, schnorr_sign, verify, Signature};
use crate::crypto::KeyId;
use crate::econ::{Evidence, ViolationClaim};
use crate::gatekeeper::{health_sweep, Rejection};
use crate::node::BehaviorMode;
use crate::request::{SignatureScheme, SigningRequest};
use crate::tee::LogEvent;

/// A key reserved during setup, optionally with device keys registered in
/// its authorization policy.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct KeySetup {
    pub alias: String,
    pub chain: String,
    pub policy: String,
    #[serde(default)]
    pub device_seed: u64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "payload", rename_all = "kebab-case")]
pub enum PayloadSpec {
    Seeded { seed: u64 },
    Hex { hex: String },
}

impl PayloadSpec {
    fn resolve(&self) -> Vec<u8> {
        match self {
            PayloadSpec::Seeded { seed } => {
                let mut hasher = Sha256::new();
                hasher.update(b"payload");
                hasher.update(seed.to_be_bytes());
                hasher.finalize().to_vec()
            }
            PayloadSpec::Hex { hex } => hex::decode(hex).unwrap_or_default(),
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "metadata", rename_all = "kebab-case")]
pub enum MetadataSpec {
    /// Signature(s) under the registered device key(s).
    Valid,
    /// Signature under an unrelated key; must be refused.
    WrongKey,
    Raw { hex: String },
    Empty,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "evidence", rename_all = "kebab-case")]
pub enum EvidenceSpec {
    GatekeeperReceipts { gatekeeper: String },
    NodeLogs { reporters: Vec<u32> },
    /// Node logs with one entry flipped after signing; must be rejected.
    TamperedNodeLogs { reporter: u32 },
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "step", rename_all = "kebab-case")]
pub enum Step {
    Request {
        gatekeeper: String,
        key: String,
        payload: PayloadSpec,
        metadata: MetadataSpec,
    },
    AdvanceClock {
        dt: u64,
    },
    Partition {
        side_a: Vec<String>,
        side_b: Vec<String>,
    },
    Heal,
    HealthSweep {
        gatekeeper: String,
        candidates: Vec<u32>,
    },
    Reshare {
        participants: Vec<u32>,
        threshold: u32,
    },
    CloseEpoch,
    Dispute {
        fisherman: String,
        accused: String,
        claim: ViolationClaim,
        evidence: EvidenceSpec,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExpectedOutcome {
    Signature,
    Unauthorized,
    ThresholdUnavailable,
    QuotaExceeded,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "assert", rename_all = "kebab-case")]
pub enum Assertion {
    RequestOutcome { index: usize, expected: ExpectedOutcome },
    AllSignaturesVerify,
    SignatureCount { expected: usize },
    BlacklistContains { gatekeeper: String, nodes: Vec<u32> },
    NodeNeverSelected { node: u32 },
    LogAuditClean,
    ConservationHolds,
    DisputeResolution { index: usize, expected: String },
    StakeSlashed { account: String },
    StakeIntact { account: String },
    FlowStepsObserved,
    EpochIs { expected: u64 },
    GroupKeyUnchanged,
    InitAborted { dealer: u32 },
    ReceiptsMatchNodeLogs,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Scenario {
    pub name: String,
    pub description: String,
    pub world: WorldConfig,
    #[serde(default)]
    pub keys: Vec<KeySetup>,
    #[serde(default)]
    pub timeline: Vec<Step>,
    pub assertions: Vec<Assertion>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct AssertionOutcome {
    pub label: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ScenarioReport {
    pub name: String,
    pub seed: u64,
    pub transcript_hash: String,
    pub passed: bool,
    pub assertions: Vec<AssertionOutcome>,
    pub request_outcomes: Vec<RequestOutcome>,
    pub dispute_resolutions: Vec<String>,
}

pub struct ScenarioRun {
    pub report: ScenarioReport,
    pub world: Option<World>,
}

struct DeviceKeys {
    key_id: KeyId,
    chain: String,
    secrets: Vec<Scalar>,
}

struct RequestRecord {
    key_id: KeyId,
    payload: Vec<u8>,
}

/// Executes the scenario end to end and evaluates its assertions.
pub fn run_scenario(scenario: &Scenario) -> Result<ScenarioRun, HarnessError> {
    let mut world = match World::init(scenario.world.clone()) {
        Ok(world) => world,
        Err(HarnessError::DkgAborted(complaints)) => {
            return Ok(finish_aborted(scenario, complaints));
        }
        Err(err) => return Err(err),
    };
    let genesis_pk = world
        .root_public_key()
        .map(|pk| world.params.encode_element(&pk));
    let initial_stakes: BTreeMap<String, u64> = collect_stakes(&world);

    // Key setup: reserve ids and register device keys with the policies.
    let mut devices: BTreeMap<String, DeviceKeys> = BTreeMap::new();
    for setup in &scenario.keys {
        let address = world
            .deployment_address(&setup.chain, &setup.policy)
            .ok_or_else(|| {
                HarnessError::Config(format!(
                    "no {} policy deployed on {}",
                    setup.policy, setup.chain
                ))
            })?;
        let key_id = world.controller.reserve_key(&setup.chain, &address);
        let mut device_rng = ChaCha20Rng::seed_from_u64(setup.device_seed ^ DEVICE_SEED_SALT);
        let mut secrets = Vec::new();
        match setup.policy.as_str() {
            "passkey" => {
                let (sk, pk) = schnorr_keygen(&world.params, &mut device_rng);
                world
                    .chains
                    .passkey_register(&setup.chain, &address, key_id, pk)?;
                secrets.push(sk);
            }
            "threshold-2fa" => {
                let (sk1, pk1) = schnorr_keygen(&world.params, &mut device_rng);
                let (sk2, pk2) = schnorr_keygen(&world.params, &mut device_rng);
                world
                    .chains
                    .two_factor_register(&setup.chain, &address, key_id, pk1, pk2)?;
                secrets.push(sk1);
                secrets.push(sk2);
            }
            _ => {}
        }
        devices.insert(
            setup.alias.clone(),
            DeviceKeys {
                key_id,
                chain: setup.chain.clone(),
                secrets,
            },
        );
    }

    // Timeline.
    let mut records: Vec<RequestRecord> = Vec::new();
    for (step_index, step) in scenario.timeline.iter().enumerate() {
        match step {
            Step::Request {
                gatekeeper,
                key,
                payload,
                metadata,
            } => {
                let device = devices.get(key).ok_or_else(|| {
                    HarnessError::Config(format!("unknown key alias {key}"))
                })?;
                let payload = payload.resolve();
                let metadata = build_metadata(
                    &world.params,
                    metadata,
                    device,
                    &payload,
                    step_index as u64,
                );
                records.push(RequestRecord {
                    key_id: device.key_id,
                    payload: payload.clone(),
                });
                let request = SigningRequest {
                    key_id: device.key_id,
                    message: payload,
                    metadata,
                    chain_id: device.chain.clone(),
                    scheme: SignatureScheme::ThresholdSchnorr,
                };
                let _ = world.submit_request(gatekeeper, request);
            }
            Step::AdvanceClock { dt } => world.advance_clock(*dt),
            Step::Partition { side_a, side_b } => {
                world.inject_partition(side_a.clone(), side_b.clone())?;
            }
            Step::Heal => world.net.heal_partitions(),
            Step::HealthSweep {
                gatekeeper,
                candidates,
            } => {
                let gk = world
                    .gatekeepers
                    .get_mut(gatekeeper)
                    .ok_or_else(|| HarnessError::UnknownGatekeeper(gatekeeper.clone()))?;
                health_sweep(gk, candidates, &world.nodes, &mut world.net);
            }
            Step::Reshare {
                participants,
                threshold,
            } => {
                world.run_reshare(participants, *threshold)?;
            }
            Step::CloseEpoch => {
                world.close_epoch()?;
            }
            Step::Dispute {
                fisherman,
                accused,
                claim,
                evidence,
            } => {
                let evidence = build_evidence(&world, evidence)?;
                let id = world.open_dispute(fisherman, accused, *claim, evidence)?;
                let _ = world.resolve_dispute(id);
            }
        }
    }

    // Assertions.
    let mut outcomes = Vec::new();
    for assertion in &scenario.assertions {
        outcomes.push(evaluate(
            assertion,
            &world,
            &records,
            genesis_pk.as_deref(),
            &initial_stakes,
        ));
    }
    let passed = outcomes.iter().all(|o| o.passed);
    let report = ScenarioReport {
        name: scenario.name.clone(),
        seed: scenario.world.seed,
        transcript_hash: world.net.transcript_hash(),
        passed,
        assertions: outcomes,
        request_outcomes: world.request_outcomes.clone(),
        dispute_resolutions: world.dispute_resolutions.clone(),
    };
    Ok(ScenarioRun {
        report,
        world: Some(world),
    })
}

// Device keys draw from a stream disjoint from world seeds.
const DEVICE_SEED_SALT: u64 = 0xde71ce;

fn finish_aborted(scenario: &Scenario, complaints: Vec<crate::crypto::Complaint>) -> ScenarioRun {
    let mut outcomes = Vec::new();
    for assertion in &scenario.assertions {
        let outcome = match assertion {
            Assertion::InitAborted { dealer } => {
                let hit = complaints.iter().any(|c| c.dealer == *dealer);
                AssertionOutcome {
                    label: format!("init-aborted dealer {dealer}"),
                    passed: hit,
                    detail: format!("complaints: {complaints:?}"),
                }
            }
            other => AssertionOutcome {
                label: format!("{other:?}"),
                passed: false,
                detail: "world initialization aborted".into(),
            },
        };
        outcomes.push(outcome);
    }
    let passed = outcomes.iter().all(|o| o.passed);
    ScenarioRun {
        report: ScenarioReport {
            name: scenario.name.clone(),
            seed: scenario.world.seed,
            transcript_hash: String::new(),
            passed,
            assertions: outcomes,
            request_outcomes: Vec::new(),
            dispute_resolutions: Vec::new(),
        },
        world: None,
    }
}

fn collect_stakes(world: &World) -> BTreeMap<String, u64> {
    let mut stakes = BTreeMap::new();
    for id in world.nodes.keys() {
        let account = node_account(*id);
        if let Some(info) = world.ledger.stake_of(&account) {
            stakes.insert(account, info.amount);
        }
    }
    for gk in world.gatekeepers.keys() {
        if let Some(info) = world.ledger.stake_of(gk) {
            stakes.insert(gk.clone(), info.amount);
        }
    }
    stakes
}

fn build_metadata(
    params: &GroupParams,
    spec: &MetadataSpec,
    device: &DeviceKeys,
    payload: &[u8],
    step_index: u64,
) -> Vec<u8> {
    let message_hex = hex::encode(payload);
    let mut rng = ChaCha20Rng::seed_from_u64(0x6d657461 ^ step_index);
    match spec {
        MetadataSpec::Valid => device
            .secrets
            .iter()
            .flat_map(|sk| {
                schnorr_sign(params, sk, message_hex.as_bytes(), &mut rng).encode(params)
            })
            .collect(),
        MetadataSpec::WrongKey => {
            let (decoy, _) = schnorr_keygen(params, &mut rng);
            let count = device.secrets.len().max(1);
            (0..count)
                .flat_map(|_| {
                    schnorr_sign(params, &decoy, message_hex.as_bytes(), &mut rng).encode(params)
                })
                .collect()
        }
        MetadataSpec::Raw { hex } => hex::decode(hex).unwrap_or_default(),
        MetadataSpec::Empty => Vec::new(),
    }
}

fn build_evidence(world: &World, spec: &EvidenceSpec) -> Result<Evidence, HarnessError> {
    match spec {
        EvidenceSpec::GatekeeperReceipts { gatekeeper } => {
            let gk = world
                .gatekeepers
                .get(gatekeeper)
                .ok_or_else(|| HarnessError::UnknownGatekeeper(gatekeeper.clone()))?;
            Ok(Evidence::Receipts {
                receipts: gk.receipt_log().to_vec(),
            })
        }
        EvidenceSpec::NodeLogs { reporters } => {
            let mut logs = BTreeMap::new();
            for &id in reporters {
                let node = world.nodes.get(&id).ok_or_else(|| {
                    HarnessError::Config(format!("no node {id} for evidence"))
                })?;
                logs.insert(id, node.export_log(None));
            }
            Ok(Evidence::NodeLogs { logs })
        }
        EvidenceSpec::TamperedNodeLogs { reporter } => {
            let node = world.nodes.get(reporter).ok_or_else(|| {
                HarnessError::Config(format!("no node {reporter} for evidence"))
            })?;
            let mut entries = node.export_log(None);
            if let Some(entry) = entries.iter_mut().find(|e| {
                matches!(e.event, LogEvent::ValidationOutcome { .. })
            }) {
                if let LogEvent::ValidationOutcome { authorized, .. } = &mut entry.event {
                    *authorized = !*authorized;
                }
            } else if let Some(entry) = entries.first_mut() {
                entry.timestamp += 1;
            }
            Ok(Evidence::NodeLogs {
                logs: BTreeMap::from([(*reporter, entries)]),
            })
        }
    }
}

fn expected_outcome_matches(outcome: &RequestOutcome, expected: ExpectedOutcome) -> bool {
    match (outcome, expected) {
        (RequestOutcome::Signature { .. }, ExpectedOutcome::Signature) => true,
        (RequestOutcome::Rejected { rejection }, expected) => {
            let want = match expected {
                ExpectedOutcome::Unauthorized => Rejection::Unauthorized.to_string(),
                ExpectedOutcome::ThresholdUnavailable => Rejection::ThresholdUnavailable.to_string(),
                ExpectedOutcome::QuotaExceeded => Rejection::QuotaExceeded.to_string(),
                ExpectedOutcome::Signature => return false,
            };
            rejection == &want
        }
        _ => false,
    }
}

fn evaluate(
    assertion: &Assertion,
    world: &World,
    records: &[RequestRecord],
    genesis_pk: Option<&[u8]>,
    initial_stakes: &BTreeMap<String, u64>,
) -> AssertionOutcome {
    let (label, passed, detail) = match assertion {
        Assertion::RequestOutcome { index, expected } => {
            let outcome = world.request_outcomes.get(*index);
            let passed = outcome
                .map(|o| expected_outcome_matches(o, *expected))
                .unwrap_or(false);
            (
                format!("request[{index}] is {expected:?}"),
                passed,
                format!("{outcome:?}"),
            )
        }
        Assertion::AllSignaturesVerify => {
            let root_pk = world.root_public_key();
            let mut all_ok = true;
            let mut checked = 0;
            let mut detail = String::new();
            for (outcome, record) in world.request_outcomes.iter().zip(records) {
                if let RequestOutcome::Signature { encoded } = outcome {
                    checked += 1;
                    let ok = (|| {
                        let bytes = hex::decode(encoded).ok()?;
                        let signature = Signature::decode(&world.params, &bytes).ok()?;
                        let child = derive_child_public(
                            &world.params,
                            root_pk.as_ref()?,
                            &record.key_id,
                        );
                        Some(verify(&world.params, &record.payload, &signature, &child))
                    })()
                    .unwrap_or(false);
                    if !ok {
                        all_ok = false;
                        detail = format!("signature for request with key {} fails", record.key_id);
                    }
                }
            }
            (
                format!("all {checked} signatures verify under derived keys"),
                all_ok,
                detail,
            )
        }
        Assertion::SignatureCount { expected } => {
            let count = world
                .request_outcomes
                .iter()
                .filter(|o| matches!(o, RequestOutcome::Signature { .. }))
                .count();
            (
                format!("signature count == {expected}"),
                count == *expected,
                format!("got {count}"),
            )
        }
        Assertion::BlacklistContains { gatekeeper, nodes } => {
            let listed = world
                .gatekeepers
                .get(gatekeeper)
                .map(|gk| gk.blacklisted_nodes(world.net.now()))
                .unwrap_or_default();
            let passed = nodes.iter().all(|n| listed.contains(n));
            (
                format!("{gatekeeper} blacklist ⊇ {nodes:?}"),
                passed,
                format!("blacklist: {listed:?}"),
            )
        }
        Assertion::NodeNeverSelected { node } => {
            let mut hits = 0;
            for gk in world.gatekeepers.values() {
                for (_, selection) in gk.selection_history() {
                    if selection.contains(node) {
                        hits += 1;
                    }
                }
            }
            (
                format!("node {node} never selected"),
                hits == 0,
                format!("selected {hits} times"),
            )
        }
        Assertion::LogAuditClean => {
            let mut failures = Vec::new();
            for (id, node) in &world.nodes {
                let entries = node.export_log(None);
                if let Err(err) =
                    crate::tee::audit_log(&world.params, &entries, &node.enclave.public_key)
                {
                    failures.push(format!("node {id}: {err}"));
                }
            }
            (
                "every node log passes audit".to_string(),
                failures.is_empty(),
                failures.join("; "),
            )
        }
        Assertion::ConservationHolds => (
            "ledger conservation identity holds".to_string(),
            world.ledger.check_conservation(),
            format!("total_supply {}", world.ledger.total_supply()),
        ),
        Assertion::DisputeResolution { index, expected } => {
            let got = world.dispute_resolutions.get(*index);
            (
                format!("dispute[{index}] is {expected}"),
                got.map(|g| g == expected).unwrap_or(false),
                format!("{got:?}"),
            )
        }
        Assertion::StakeSlashed { account } => {
            let before = initial_stakes.get(account).copied().unwrap_or(0);
            let after = world
                .ledger
                .stake_of(account)
                .map(|s| s.amount)
                .unwrap_or(0);
            (
                format!("{account} stake slashed"),
                after < before,
                format!("{before} -> {after}"),
            )
        }
        Assertion::StakeIntact { account } => {
            let before = initial_stakes.get(account).copied().unwrap_or(0);
            let after = world
                .ledger
                .stake_of(account)
                .map(|s| s.amount)
                .unwrap_or(0);
            (
                format!("{account} stake intact"),
                after == before,
                format!("{before} -> {after}"),
            )
        }
        Assertion::FlowStepsObserved => {
            let transcript = world.net.transcript();
            let start = transcript
                .iter()
                .position(|e| e.label == "request.submit");
            let passed = match start {
                None => false,
                Some(start) => {
                    let rest = &transcript[start..];
                    let mut cursor = 0;
                    ["request.submit", "sign.begin", "controller.fetch", "registry.lookup", "chain.hot_verify", "sign.aggregate"]
                        .iter()
                        .all(|label| {
                            match rest[cursor..].iter().position(|e| &e.label == label) {
                                Some(offset) => {
                                    cursor += offset;
                                    true
                                }
                                None => false,
                            }
                        })
                }
            };
            (
                "all six signature-flow steps observable in order".to_string(),
                passed,
                String::new(),
            )
        }
        Assertion::EpochIs { expected } => (
            format!("controller epoch == {expected}"),
            world.controller.epoch() == *expected,
            format!("got {}", world.controller.epoch()),
        ),
        Assertion::GroupKeyUnchanged => {
            let now_pk = world
                .root_public_key()
                .map(|pk| world.params.encode_element(&pk));
            let passed = matches!(
                (genesis_pk, now_pk.as_deref()),
                (Some(a), Some(b)) if a == b
            );
            (
                "group public key byte-identical to genesis".to_string(),
                passed,
                String::new(),
            )
        }
        Assertion::InitAborted { dealer } => (
            format!("init aborted naming dealer {dealer}"),
            false,
            "world initialized successfully".into(),
        ),
        Assertion::ReceiptsMatchNodeLogs => {
            let mut receipt_hashes = std::collections::BTreeSet::new();
            for gk in world.gatekeepers.values() {
                for receipt in gk.receipt_log() {
                    receipt_hashes.insert(receipt.hash(&world.params));
                }
            }
            let mut missing = Vec::new();
            for (id, node) in &world.nodes {
                for entry in node.export_log(None) {
                    if let LogEvent::SigningRequestReceived { receipt, session } = &entry.event {
                        let hash = receipt.hash(&world.params);
                        if hash != *session || !receipt_hashes.contains(&hash) {
                            missing.push(format!("node {id} seq {}", entry.seq));
                        }
                    }
                }
            }
            (
                "every node-logged receipt joins a gatekeeper receipt by hash".to_string(),
                missing.is_empty(),
                missing.join("; "),
            )
        }
    };
    AssertionOutcome {
        label,
        passed,
        detail,
    }
}

// ---------------------------------------------------------------------------
// Bundled scenario library
// ---------------------------------------------------------------------------

fn base_world(seed: u64) -> WorldConfig {
    WorldConfig {
        seed,
        ..WorldConfig::default()
    }
}

fn passkey_key() -> KeySetup {
    KeySetup {
        alias: "wallet".into(),
        chain: "near".into(),
        policy: "passkey".into(),
        device_seed: 1,
    }
}

fn valid_request(index: u64) -> Step {
    Step::Request {
        gatekeeper: "gk1".into(),
        key: "wallet".into(),
        payload: PayloadSpec::Seeded { seed: index },
        metadata: MetadataSpec::Valid,
    }
}

/// All bundled scenarios, one per threat-model case plus the happy path.
pub fn scenario_library() -> Vec<Scenario> {
    let mut scenarios = Vec::new();

    scenarios.push(Scenario {
        name: "happy-path".into(),
        description: "A passkey-authorized request flows through gatekeeper, \
                      authorization, and both signing rounds."
            .into(),
        world: base_world(101),
        keys: vec![passkey_key()],
        timeline: vec![valid_request(0)],
        assertions: vec![
            Assertion::RequestOutcome {
                index: 0,
                expected: ExpectedOutcome::Signature,
            },
            Assertion::AllSignaturesVerify,
            Assertion::FlowStepsObserved,
            Assertion::ReceiptsMatchNodeLogs,
            Assertion::LogAuditClean,
            Assertion::ConservationHolds,
        ],
    });

    scenarios.push(Scenario {
        name: "uncooperative-node".into(),
        description: "Two of five nodes stall round 1; the gatekeeper \
                      substitutes responsive nodes and blacklists the stallers."
            .into(),
        world: WorldConfig {
            behaviors: BTreeMap::from([
                (1, BehaviorMode::Stall { round: 1 }),
                (2, BehaviorMode::Stall { round: 1 }),
            ]),
            ..base_world(102)
        },
        keys: vec![passkey_key()],
        timeline: vec![valid_request(0)],
        assertions: vec![
            Assertion::RequestOutcome {
                index: 0,
                expected: ExpectedOutcome::Signature,
            },
            Assertion::AllSignaturesVerify,
            Assertion::BlacklistContains {
                gatekeeper: "gk1".into(),
                nodes: vec![1, 2],
            },
            Assertion::LogAuditClean,
        ],
    });

    scenarios.push(Scenario {
        name: "sub-threshold".into(),
        description: "Three of five nodes stall with t=3; no threshold subset \
                      is available."
            .into(),
        world: WorldConfig {
            behaviors: BTreeMap::from([
                (1, BehaviorMode::Stall { round: 1 }),
                (2, BehaviorMode::Stall { round: 1 }),
                (3, BehaviorMode::Stall { round: 1 }),
            ]),
            ..base_world(103)
        },
        keys: vec![passkey_key()],
        timeline: vec![valid_request(0)],
        assertions: vec![Assertion::RequestOutcome {
            index: 0,
            expected: ExpectedOutcome::ThresholdUnavailable,
        }],
    });

    scenarios.push(Scenario {
        name: "quota-abuse".into(),
        description: "A gatekeeper ignores its leased capacity; its own signed \
                      receipts prove the violation and its stake is slashed."
            .into(),
        world: WorldConfig {
            group: "prod-251".into(),
            gatekeepers: vec![super::GatekeeperSetup {
                id: "gk1".into(),
                capacity: 2,
                window: 1000,
                enforce_quota: false,
            }],
            policies: vec![super::PolicyDeployment {
                chain: "near".into(),
                policy: "always-true".into(),
            }],
            ..base_world(104)
        },
        keys: vec![KeySetup {
            alias: "open".into(),
            chain: "near".into(),
            policy: "always-true".into(),
            device_seed: 0,
        }],
        timeline: vec![
            Step::Request {
                gatekeeper: "gk1".into(),
                key: "open".into(),
                payload: PayloadSpec::Seeded { seed: 0 },
                metadata: MetadataSpec::Empty,
            },
            Step::Request {
                gatekeeper: "gk1".into(),
                key: "open".into(),
                payload: PayloadSpec::Seeded { seed: 1 },
                metadata: MetadataSpec::Empty,
            },
            Step::Request {
                gatekeeper: "gk1".into(),
                key: "open".into(),
                payload: PayloadSpec::Seeded { seed: 2 },
                metadata: MetadataSpec::Empty,
            },
            Step::Request {
                gatekeeper: "gk1".into(),
                key: "open".into(),
                payload: PayloadSpec::Seeded { seed: 3 },
                metadata: MetadataSpec::Empty,
            },
            Step::Dispute {
                fisherman: "fisher-1".into(),
                accused: "gk1".into(),
                claim: ViolationClaim::GatekeeperQuotaAbuse,
                evidence: EvidenceSpec::GatekeeperReceipts {
                    gatekeeper: "gk1".into(),
                },
            },
        ],
        assertions: vec![
            Assertion::SignatureCount { expected: 4 },
            Assertion::DisputeResolution {
                index: 0,
                expected: "upheld".into(),
            },
            Assertion::StakeSlashed {
                account: "gk1".into(),
            },
            Assertion::ConservationHolds,
        ],
    });

    scenarios.push(Scenario {
        name: "stale-attestation".into(),
        description: "A node stops re-attesting; once its attestation lapses \
                      it is never chosen for protocol rounds."
            .into(),
        world: WorldConfig {
            behaviors: BTreeMap::from([(5, BehaviorMode::StaleAttestation)]),
            ..base_world(105)
        },
        keys: vec![passkey_key()],
        timeline: vec![
            Step::AdvanceClock { dt: 150 },
            valid_request(0),
            valid_request(1),
        ],
        assertions: vec![
            Assertion::RequestOutcome {
                index: 0,
                expected: ExpectedOutcome::Signature,
            },
            Assertion::NodeNeverSelected { node: 5 },
            Assertion::AllSignaturesVerify,
            Assertion::LogAuditClean,
        ],
    });

    scenarios.push(Scenario {
        name: "tampered-log".into(),
        description: "Dispute evidence with one flipped log field fails \
                      signature verification and is rejected."
            .into(),
        world: WorldConfig {
            group: "prod-251".into(),
            ..base_world(106)
        },
        keys: vec![passkey_key()],
        timeline: vec![
            valid_request(0),
            Step::Dispute {
                fisherman: "fisher-1".into(),
                accused: "node-1".into(),
                claim: ViolationClaim::SigningWithoutValidation,
                evidence: EvidenceSpec::TamperedNodeLogs { reporter: 1 },
            },
        ],
        assertions: vec![
            Assertion::DisputeResolution {
                index: 0,
                expected: "invalid-evidence".into(),
            },
            Assertion::StakeIntact {
                account: "node-1".into(),
            },
            Assertion::ConservationHolds,
        ],
    });

    scenarios.push(Scenario {
        name: "always-false-gating".into(),
        description: "Under an always-false policy no request ever yields a \
                      signature: authorization gating is total."
            .into(),
        world: WorldConfig {
            policies: vec![super::PolicyDeployment {
                chain: "near".into(),
                policy: "always-false".into(),
            }],
            ..base_world(107)
        },
        keys: vec![KeySetup {
            alias: "blocked".into(),
            chain: "near".into(),
            policy: "always-false".into(),
            device_seed: 0,
        }],
        timeline: (0..5)
            .map(|i| Step::Request {
                gatekeeper: "gk1".into(),
                key: "blocked".into(),
                payload: PayloadSpec::Seeded { seed: i },
                metadata: MetadataSpec::Empty,
            })
            .collect(),
        assertions: vec![
            Assertion::SignatureCount { expected: 0 },
            Assertion::RequestOutcome {
                index: 0,
                expected: ExpectedOutcome::Unauthorized,
            },
            Assertion::RequestOutcome {
                index: 4,
                expected: ExpectedOutcome::Unauthorized,
            },
            Assertion::LogAuditClean,
        ],
    });

    scenarios.push(Scenario {
        name: "partition-heal".into(),
        description: "A partition leaves fewer than t nodes reachable; after \
                      healing and blacklist expiry the next request succeeds."
            .into(),
        world: base_world(108),
        keys: vec![passkey_key()],
        timeline: vec![
            Step::Partition {
                side_a: vec!["node-3".into(), "node-4".into(), "node-5".into()],
                side_b: vec!["gatekeeper-gk1".into()],
            },
            valid_request(0),
            Step::Heal,
            Step::AdvanceClock { dt: 250 },
            valid_request(1),
        ],
        assertions: vec![
            Assertion::RequestOutcome {
                index: 0,
                expected: ExpectedOutcome::ThresholdUnavailable,
            },
            Assertion::RequestOutcome {
                index: 1,
                expected: ExpectedOutcome::Signature,
            },
            Assertion::AllSignaturesVerify,
        ],
    });

    scenarios.push(Scenario {
        name: "hidden-staller".into(),
        description: "A batched health sweep isolates a silent staller by \
                      binary splitting and blacklists it."
            .into(),
        world: WorldConfig {
            behaviors: BTreeMap::from([(3, BehaviorMode::Stall { round: 1 })]),
            ..base_world(109)
        },
        keys: vec![passkey_key()],
        timeline: vec![
            Step::HealthSweep {
                gatekeeper: "gk1".into(),
                candidates: vec![1, 2, 3, 4],
            },
            valid_request(0),
        ],
        assertions: vec![
            Assertion::BlacklistContains {
                gatekeeper: "gk1".into(),
                nodes: vec![3],
            },
            Assertion::RequestOutcome {
                index: 0,
                expected: ExpectedOutcome::Signature,
            },
        ],
    });

    scenarios.push(Scenario {
        name: "reshare-growth".into(),
        description: "The network grows from 5 nodes (t=3) to 7 (t=4) with one \
                      staller among the old holders; the key survives unchanged."
            .into(),
        world: WorldConfig {
            behaviors: BTreeMap::from([(1, BehaviorMode::Stall { round: 1 })]),
            ..base_world(110)
        },
        keys: vec![passkey_key()],
        timeline: vec![
            Step::Reshare {
                participants: vec![1, 2, 3, 4, 5, 6, 7],
                threshold: 4,
            },
            valid_request(0),
        ],
        assertions: vec![
            Assertion::EpochIs { expected: 1 },
            Assertion::GroupKeyUnchanged,
            Assertion::RequestOutcome {
                index: 0,
                expected: ExpectedOutcome::Signature,
            },
            Assertion::AllSignaturesVerify,
            Assertion::LogAuditClean,
            Assertion::ConservationHolds,
        ],
    });

    scenarios.push(Scenario {
        name: "dkg-abort".into(),
        description: "A dealer corrupts a directed share during genesis DKG; \
                      the complaint names it and the session aborts."
            .into(),
        world: WorldConfig {
            behaviors: BTreeMap::from([(2, BehaviorMode::CorruptShare)]),
            ..base_world(111)
        },
        keys: vec![],
        timeline: vec![],
        assertions: vec![Assertion::InitAborted { dealer: 2 }],
    });

    scenarios.push(Scenario {
        name: "quota-limit".into(),
        description: "An honest gatekeeper with capacity 2 per window rejects \
                      the third request without contacting any node."
            .into(),
        world: WorldConfig {
            gatekeepers: vec![super::GatekeeperSetup {
                id: "gk1".into(),
                capacity: 2,
                window: 1000,
                enforce_quota: true,
            }],
            ..base_world(112)
        },
        keys: vec![passkey_key()],
        timeline: vec![valid_request(0), valid_request(1), valid_request(2)],
        assertions: vec![
            Assertion::RequestOutcome {
                index: 0,
                expected: ExpectedOutcome::Signature,
            },
            Assertion::RequestOutcome {
                index: 1,
                expected: ExpectedOutcome::Signature,
            },
            Assertion::RequestOutcome {
                index: 2,
                expected: ExpectedOutcome::QuotaExceeded,
            },
            Assertion::SignatureCount { expected: 2 },
        ],
    });

    scenarios.push(Scenario {
        name: "refusal-dispute".into(),
        description: "A refusing node is reported unavailable by its peers, \
                      slashed via dispute, then voted out by resharing."
            .into(),
        world: WorldConfig {
            nodes: 3,
            threshold: 3,
            behaviors: BTreeMap::from([(2, BehaviorMode::RefuseSigning)]),
            ..base_world(113)
        },
        keys: vec![passkey_key()],
        timeline: vec![
            valid_request(0),
            Step::AdvanceClock { dt: 250 },
            valid_request(1),
            Step::Dispute {
                fisherman: "fisher-1".into(),
                accused: "node-2".into(),
                claim: ViolationClaim::UnavailabilityStreak,
                evidence: EvidenceSpec::NodeLogs {
                    reporters: vec![1, 3],
                },
            },
            Step::Reshare {
                participants: vec![1, 3, 4],
                threshold: 2,
            },
            valid_request(2),
        ],
        assertions: vec![
            Assertion::DisputeResolution {
                index: 0,
                expected: "upheld".into(),
            },
            Assertion::StakeSlashed {
                account: "node-2".into(),
            },
            Assertion::EpochIs { expected: 1 },
            Assertion::GroupKeyUnchanged,
            Assertion::RequestOutcome {
                index: 2,
                expected: ExpectedOutcome::Signature,
            },
            Assertion::ConservationHolds,
        ],
    });

    scenarios.push(Scenario {
        name: "gatekeeper-failover".into(),
        description: "One gatekeeper is cut off from every node; users switch \
                      to another gatekeeper and succeed."
            .into(),
        world: WorldConfig {
            gatekeepers: vec![
                super::GatekeeperSetup {
                    id: "gk1".into(),
                    capacity: 100,
                    window: 1000,
                    enforce_quota: true,
                },
                super::GatekeeperSetup {
                    id: "gk2".into(),
                    capacity: 100,
                    window: 1000,
                    enforce_quota: true,
                },
            ],
            ..base_world(114)
        },
        keys: vec![passkey_key()],
        timeline: vec![
            Step::Partition {
                side_a: vec!["gatekeeper-gk1".into()],
                side_b: (1..=5).map(|i| format!("node-{i}")).collect(),
            },
            valid_request(0),
            Step::Request {
                gatekeeper: "gk2".into(),
                key: "wallet".into(),
                payload: PayloadSpec::Seeded { seed: 0 },
                metadata: MetadataSpec::Valid,
            },
        ],
        assertions: vec![
            Assertion::RequestOutcome {
                index: 0,
                expected: ExpectedOutcome::ThresholdUnavailable,
            },
            Assertion::RequestOutcome {
                index: 1,
                expected: ExpectedOutcome::Signature,
            },
            Assertion::AllSignaturesVerify,
        ],
    });

    scenarios
}

pub fn scenario_by_name(name: &str) -> Option<Scenario> {
    scenario_library().into_iter().find(|s| s.name == name)
}

pub fn scenario_names() -> Vec<String> {
    scenario_library().into_iter().map(|s| s.name).collect()
}
