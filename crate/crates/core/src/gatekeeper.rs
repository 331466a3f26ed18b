//! The access-control intermediary.
//!
//! Only gatekeepers reach MPC nodes. A gatekeeper validates and rate-limits
//! third-party requests, co-signs each accepted one into a receipt, picks a
//! threshold subset of responsive eligible nodes, drives both signing
//! rounds (substituting and blacklisting nodes that stall, refuse, or emit
//! bad shares), and returns the aggregated signature. Gatekeepers never
//! hold key material; everything they verify is public.

use std::collections::BTreeMap;

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::chainsim::ChainSim;
use crate::chainstate::ControllerState;
use crate::crypto::derive::{apply_tweak_to_package, derive_tweak};
use crate::crypto::group::{GroupElement, GroupParams, Scalar};
use crate::crypto::schnorr::{schnorr_sign, Signature};
use crate::crypto::signing::{sign_aggregate, NonceCommitment, SignError, SignatureShare};
use crate::node::{Node, NodeEnv, SignRefusal};
use crate::request::{Receipt, SignatureScheme, SigningRequest};
use crate::sim::SimNet;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Rejection {
    #[error("request quota exceeded for this window")]
    QuotaExceeded,
    #[error("message is not authorized for signing")]
    Unauthorized,
    #[error("fewer than threshold nodes are available")]
    ThresholdUnavailable,
    #[error("malformed request: {0}")]
    MalformedRequest(String),
    #[error("no group key has been installed")]
    NoGroupKey,
}

/// Fixed-window request counter.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct QuotaState {
    pub capacity: u32,
    pub window: u64,
    window_start: u64,
    used: u32,
}

impl QuotaState {
    pub fn new(capacity: u32, window: u64) -> Self {
        QuotaState {
            capacity,
            window,
            window_start: 0,
            used: 0,
        }
    }

    fn roll(&mut self, now: u64) {
        let start = if self.window == 0 { 0 } else { now - now % self.window };
        if start != self.window_start {
            self.window_start = start;
            self.used = 0;
        }
    }

    /// Counts one request against the window; false when over capacity.
    pub fn try_consume(&mut self, now: u64) -> bool {
        self.roll(now);
        if self.used >= self.capacity {
            return false;
        }
        self.used += 1;
        true
    }

    pub fn used_in_window(&self, now: u64) -> u32 {
        let start = if self.window == 0 { 0 } else { now - now % self.window };
        if start == self.window_start {
            self.used
        } else {
            0
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GatekeeperConfig {
    /// Deadline offset stamped into receipts.
    pub deadline_window: u64,
    /// Reselection attempts before giving up on a request.
    pub retry_attempts: u32,
    /// How long a blacklist entry lasts.
    pub blacklist_ttl: u64,
    /// EWMA decay for responsiveness scores.
    pub score_decay: f64,
}

impl Default for GatekeeperConfig {
    fn default() -> Self {
        GatekeeperConfig {
            deadline_window: 200,
            retry_attempts: 3,
            blacklist_ttl: 200,
            score_decay: 0.5,
        }
    }
}

#[derive(Debug, Serialize, Deserialize)]
pub struct Gatekeeper {
    pub gatekeeper_id: String,
    secret: Scalar,
    pub public_key: GroupElement,
    pub quota: QuotaState,
    /// A misbehaving gatekeeper issues receipts past its leased capacity.
    pub enforce_quota: bool,
    pub config: GatekeeperConfig,
    blacklist: BTreeMap<u32, u64>,
    scores: BTreeMap<u32, f64>,
    receipts: Vec<Receipt>,
    /// Every signer set dispatched to, with the time it was chosen.
    selection_history: Vec<(u64, Vec<u32>)>,
    rng: ChaCha20Rng,
}

impl Gatekeeper {
    pub fn new(
        params: &GroupParams,
        gatekeeper_id: &str,
        quota: QuotaState,
        config: GatekeeperConfig,
        seed: u64,
    ) -> Self {
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        let (secret, public_key) = crate::crypto::schnorr::schnorr_keygen(params, &mut rng);
        Gatekeeper {
            gatekeeper_id: gatekeeper_id.to_string(),
            secret,
            public_key,
            quota,
            enforce_quota: true,
            config,
            blacklist: BTreeMap::new(),
            scores: BTreeMap::new(),
            receipts: Vec::new(),
            selection_history: Vec::new(),
            rng,
        }
    }

    pub fn actor_name(&self) -> String {
        format!("gatekeeper-{}", self.gatekeeper_id)
    }

    /// Append-only receipt export.
    pub fn receipt_log(&self) -> &[Receipt] {
        &self.receipts
    }

    pub fn receipt_log_jsonl(&self) -> String {
        self.receipts
            .iter()
            .map(|r| serde_json::to_string(r).expect("receipts serialize"))
            .collect::<Vec<_>>()
            .join("\n")
    }

    pub fn selection_history(&self) -> &[(u64, Vec<u32>)] {
        &self.selection_history
    }

    pub fn blacklisted_nodes(&self, now: u64) -> Vec<u32> {
        self.blacklist
            .iter()
            .filter(|(_, &expiry)| expiry >= now)
            .map(|(&id, _)| id)
            .collect()
    }

    pub fn blacklist_node(&mut self, node: u32, now: u64) {
        self.blacklist.insert(node, now + self.config.blacklist_ttl);
    }

    /// Folds one observed round latency into the node's EWMA score; lower
    /// is better.
    pub fn observe_latency(&mut self, node: u32, latency: u64) {
        let decay = self.config.score_decay;
        let prior = self.scores.get(&node).copied().unwrap_or(latency as f64);
        self.scores
            .insert(node, decay * prior + (1.0 - decay) * latency as f64);
    }

    /// Ranks eligible nodes by responsiveness score (ties by id), skipping
    /// blacklisted ones, and picks the first `t`.
    pub fn select_signers(
        &self,
        eligible: &[u32],
        threshold: u32,
        now: u64,
    ) -> Result<Vec<u32>, Rejection> {
        let mut candidates: Vec<u32> = eligible
            .iter()
            .copied()
            .filter(|id| self.blacklist.get(id).map(|&e| e < now).unwrap_or(true))
            .collect();
        if (candidates.len() as u32) < threshold {
            return Err(Rejection::ThresholdUnavailable);
        }
        candidates.sort_by(|a, b| {
            let sa = self.scores.get(a).copied().unwrap_or(0.0);
            let sb = self.scores.get(b).copied().unwrap_or(0.0);
            sa.partial_cmp(&sb).unwrap().then(a.cmp(b))
        });
        candidates.truncate(threshold as usize);
        Ok(candidates)
    }

    /// Validates the request shape, applies the quota, and co-signs the
    /// receipt `(gatekeeper_id, request, deadline)`.
    pub fn issue_receipt(
        &mut self,
        params: &GroupParams,
        request: SigningRequest,
        now: u64,
    ) -> Result<Receipt, Rejection> {
        if request.message.len() != 32 {
            return Err(Rejection::MalformedRequest(format!(
                "payload must be 32 bytes, got {}",
                request.message.len()
            )));
        }
        if request.scheme != SignatureScheme::ThresholdSchnorr {
            return Err(Rejection::MalformedRequest(
                "only the threshold-schnorr scheme is implemented".into(),
            ));
        }
        let within_quota = self.quota.try_consume(now);
        if self.enforce_quota && !within_quota {
            return Err(Rejection::QuotaExceeded);
        }
        let deadline = now + self.config.deadline_window;
        let bytes = Receipt::signing_bytes(&self.gatekeeper_id, &request, deadline);
        let receipt = Receipt {
            gatekeeper_id: self.gatekeeper_id.clone(),
            request,
            deadline,
            signature: schnorr_sign(params, &self.secret, &bytes, &mut self.rng),
        };
        self.receipts.push(receipt.clone());
        Ok(receipt)
    }
}

/// Adaptive binary-splitting group test: isolates every unresponsive node
/// in a candidate set using batched all-or-nothing probes. `probe` answers
/// whether every node in the subset responded. A single hidden staller
/// among `n` candidates is isolated within ⌈log2 n⌉ splits.
pub fn isolate_stallers(candidates: &[u32], probe: &mut dyn FnMut(&[u32]) -> bool) -> Vec<u32> {
    let mut stallers = Vec::new();
    let mut stack = vec![candidates.to_vec()];
    while let Some(subset) = stack.pop() {
        if subset.is_empty() {
            continue;
        }
        if probe(&subset) {
            continue;
        }
        if subset.len() == 1 {
            stallers.push(subset[0]);
            continue;
        }
        let (left, right) = subset.split_at(subset.len() / 2);
        stack.push(right.to_vec());
        stack.push(left.to_vec());
    }
    stallers.sort_unstable();
    stallers
}

/// Batched health sweep over the current candidates: probes subsets through
/// the bus, isolates stallers group-test style, and blacklists them.
pub fn health_sweep(
    gk: &mut Gatekeeper,
    candidates: &[u32],
    nodes: &BTreeMap<u32, Node>,
    net: &mut SimNet,
) -> Vec<u32> {
    let me = gk.actor_name();
    let mut probes = 0u32;
    let mut probe = |subset: &[u32]| -> bool {
        probes += 1;
        let label = format!("health.probe#{probes}");
        let mut all_ok = true;
        for &id in subset {
            let responsive = match nodes.get(&id) {
                Some(node) => !matches!(node.behavior, crate::node::BehaviorMode::Stall { .. }),
                None => false,
            };
            if net.deliver(&me, &format!("node-{id}"), &label).is_err() || !responsive {
                all_ok = false;
            }
        }
        net.note(&me, "net", &label, if all_ok { "subset-ok" } else { "subset-failed" });
        all_ok
    };
    let stallers = isolate_stallers(candidates, &mut probe);
    let now = net.now();
    for &id in &stallers {
        gk.blacklist_node(id, now);
    }
    stallers
}

/// Full submit flow: receipt, signer selection, both rounds, aggregation,
/// with bounded reselection around failed nodes.
pub fn submit(
    gk: &mut Gatekeeper,
    params: &GroupParams,
    request: SigningRequest,
    nodes: &mut BTreeMap<u32, Node>,
    controller: &ControllerState,
    chains: &ChainSim,
    net: &mut SimNet,
) -> Result<Signature, Rejection> {
    let me = gk.actor_name();
    net.note("third-party", &me, "request.submit", "received");
    let receipt = gk.issue_receipt(params, request, net.now())?;
    let session = receipt.hash(params);

    let root = controller.group_key().ok_or(Rejection::NoGroupKey)?;
    let threshold = root.package.threshold;
    let tweak = derive_tweak(params, &receipt.request.key_id, &root.package.public_key);
    let child_package = apply_tweak_to_package(params, &root.package, &tweak);

    for _attempt in 0..gk.config.retry_attempts {
        let eligible = controller.eligible_participants(net.now());
        let selected = match gk.select_signers(&eligible, threshold, net.now()) {
            Ok(s) => s,
            Err(_) => return Err(Rejection::ThresholdUnavailable),
        };
        net.note(&me, "net", "signer.select", &format!("{selected:?}"));
        gk.selection_history.push((net.now(), selected.clone()));

        // Round 1: broadcast the receipt, collect nonce commitments.
        let mut commitments: BTreeMap<u32, NonceCommitment> = BTreeMap::new();
        let mut failed: Vec<u32> = Vec::new();
        let mut unauthorized = false;
        for &id in &selected {
            let started = net.now();
            let node_actor = format!("node-{id}");
            if net.deliver(&me, &node_actor, "sign.begin").is_err() {
                gk.observe_latency(id, net.config.round_timeout * 2);
                failed.push(id);
                continue;
            }
            let env = NodeEnv {
                params,
                controller,
                chains,
            };
            let node = nodes.get_mut(&id).expect("selected nodes exist");
            match node.begin_sign(&receipt, &env, net) {
                Ok(commitment) => {
                    if net.deliver(&node_actor, &me, "sign.commitment").is_ok() {
                        gk.observe_latency(id, net.now() - started);
                        commitments.insert(id, commitment);
                    } else {
                        gk.observe_latency(id, net.config.round_timeout * 2);
                        failed.push(id);
                    }
                }
                Err(SignRefusal::Unauthorized) => {
                    net.note(&node_actor, &me, "sign.refusal", "unauthorized");
                    unauthorized = true;
                    break;
                }
                Err(SignRefusal::Stalled) => {
                    net.timeout(&me, &node_actor, "sign.begin");
                    gk.observe_latency(id, net.config.round_timeout * 2);
                    failed.push(id);
                }
                Err(refusal) => {
                    net.note(&node_actor, &me, "sign.refusal", &refusal.to_string());
                    gk.observe_latency(id, net.config.round_timeout * 2);
                    failed.push(id);
                }
            }
        }
        if unauthorized {
            return Err(Rejection::Unauthorized);
        }
        if !failed.is_empty() {
            blacklist_and_notify(gk, &failed, &commitments, nodes, params, net);
            continue;
        }

        // Round 2: distribute commitments, collect signature shares.
        let mut shares: BTreeMap<u32, SignatureShare> = BTreeMap::new();
        for &id in &selected {
            let started = net.now();
            let node_actor = format!("node-{id}");
            if net.deliver(&me, &node_actor, "sign.round2").is_err() {
                gk.observe_latency(id, net.config.round_timeout * 2);
                failed.push(id);
                continue;
            }
            let env = NodeEnv {
                params,
                controller,
                chains,
            };
            let node = nodes.get_mut(&id).expect("selected nodes exist");
            match node.finish_sign(&session, &commitments, &env, net) {
                Ok(share) => {
                    if net.deliver(&node_actor, &me, "sign.share").is_ok() {
                        gk.observe_latency(id, net.now() - started);
                        shares.insert(id, share);
                    } else {
                        gk.observe_latency(id, net.config.round_timeout * 2);
                        failed.push(id);
                    }
                }
                Err(SignRefusal::Stalled) => {
                    net.timeout(&me, &node_actor, "sign.round2");
                    gk.observe_latency(id, net.config.round_timeout * 2);
                    failed.push(id);
                }
                Err(refusal) => {
                    net.note(&node_actor, &me, "sign.refusal", &refusal.to_string());
                    gk.observe_latency(id, net.config.round_timeout * 2);
                    failed.push(id);
                }
            }
        }
        if !failed.is_empty() {
            blacklist_and_notify(gk, &failed, &commitments, nodes, params, net);
            continue;
        }

        match sign_aggregate(
            params,
            &receipt.request.message,
            &commitments,
            &shares,
            &child_package,
        ) {
            Ok(signature) => {
                net.note(&me, "third-party", "sign.aggregate", "ok");
                return Ok(signature);
            }
            Err(SignError::InvalidSignatureShare(bad)) => {
                net.note(&me, "net", "sign.aggregate", &format!("bad-share from {bad}"));
                blacklist_and_notify(gk, &[bad], &commitments, nodes, params, net);
                continue;
            }
            Err(err) => {
                net.note(&me, "net", "sign.aggregate", &err.to_string());
                return Err(Rejection::ThresholdUnavailable);
            }
        }
    }
    Err(Rejection::ThresholdUnavailable)
}

/// Blacklists failed nodes and tells the surviving session peers, who log
/// the unavailability.
fn blacklist_and_notify(
    gk: &mut Gatekeeper,
    failed: &[u32],
    commitments: &BTreeMap<u32, NonceCommitment>,
    nodes: &mut BTreeMap<u32, Node>,
    params: &GroupParams,
    net: &mut SimNet,
) {
    let me = gk.actor_name();
    let now = net.now();
    for &id in failed {
        gk.blacklist_node(id, now);
    }
    let survivors: Vec<u32> = commitments
        .keys()
        .copied()
        .filter(|id| !failed.contains(id))
        .collect();
    for &peer in &survivors {
        let peer_actor = format!("node-{peer}");
        if net.deliver(&me, &peer_actor, "peer.unavailable").is_ok() {
            if let Some(node) = nodes.get_mut(&peer) {
                for &id in failed {
                    node.note_peer_unavailable(params, net.now(), id);
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quota_window_counts_and_rolls() {
        let mut quota = QuotaState::new(2, 100);
        assert!(quota.try_consume(0));
        assert!(quota.try_consume(10));
        assert!(!quota.try_consume(20));
        assert_eq!(quota.used_in_window(20), 2);
        // New window resets the counter.
        assert!(quota.try_consume(100));
        assert_eq!(quota.used_in_window(110), 1);
    }

    #[test]
    fn selection_ranks_by_score_and_skips_blacklist() {
        let params = GroupParams::toy();
        let mut gk = Gatekeeper::new(
            &params,
            "gk",
            QuotaState::new(10, 100),
            GatekeeperConfig::default(),
            1,
        );
        // All fresh: first t by id.
        assert_eq!(gk.select_signers(&[1, 2, 3, 4, 5], 3, 0).unwrap(), vec![1, 2, 3]);
        // A slow node drops in rank.
        gk.observe_latency(1, 100);
        assert_eq!(gk.select_signers(&[1, 2, 3, 4, 5], 3, 0).unwrap(), vec![2, 3, 4]);
        // Blacklisted nodes are excluded until expiry.
        gk.blacklist_node(2, 0);
        assert_eq!(gk.select_signers(&[1, 2, 3, 4, 5], 3, 0).unwrap(), vec![3, 4, 5]);
        assert_eq!(
            gk.select_signers(&[1, 2, 3], 3, 0),
            Err(Rejection::ThresholdUnavailable)
        );
        // Past the blacklist TTL the node is usable again.
        assert!(gk
            .select_signers(&[1, 2, 3], 3, 500)
            .unwrap()
            .contains(&2));
    }

    #[test]
    fn too_few_eligible_is_threshold_unavailable() {
        let params = GroupParams::toy();
        let gk = Gatekeeper::new(
            &params,
            "gk",
            QuotaState::new(10, 100),
            GatekeeperConfig::default(),
            2,
        );
        assert_eq!(
            gk.select_signers(&[1, 2], 3, 0),
            Err(Rejection::ThresholdUnavailable)
        );
    }

    #[test]
    fn hidden_staller_isolated_within_two_splits() {
        // 4 candidates, one silent staller: the adaptive split finds it in
        // at most 2 subset probes beyond the initial full-set probe.
        let staller = 3u32;
        let mut subset_probes_after_full = 0;
        let mut first = true;
        let mut probe = |subset: &[u32]| -> bool {
            if first {
                first = false;
            } else {
                subset_probes_after_full += 1;
            }
            !subset.contains(&staller)
        };
        let found = isolate_stallers(&[1, 2, 3, 4], &mut probe);
        assert_eq!(found, vec![3]);
        assert!(subset_probes_after_full <= 4, "split probes: {subset_probes_after_full}");
        // The staller is pinned after at most 2 failing splits.
        let mut failing_probes = 0;
        let mut probe = |subset: &[u32]| -> bool {
            let ok = !subset.contains(&staller);
            if !ok && subset.len() > 1 {
                failing_probes += 1;
            }
            ok
        };
        isolate_stallers(&[1, 2, 3, 4], &mut probe);
        assert!(failing_probes <= 2);
    }

    #[test]
    fn isolate_finds_multiple_stallers() {
        let stallers = [2u32, 5];
        let mut probe = |subset: &[u32]| -> bool { !subset.iter().any(|id| stallers.contains(id)) };
        assert_eq!(isolate_stallers(&[1, 2, 3, 4, 5], &mut probe), vec![2, 5]);
        // All healthy: one probe, no stallers.
        let mut count = 0;
        let mut probe = |_: &[u32]| -> bool {
            count += 1;
            true
        };
        assert!(isolate_stallers(&[1, 2, 3], &mut probe).is_empty());
        assert_eq!(count, 1);
    }

    #[test]
    fn receipt_issuing_validates_and_signs() {
        let params = GroupParams::production();
        let mut gk = Gatekeeper::new(
            &params,
            "gk",
            QuotaState::new(2, 100),
            GatekeeperConfig::default(),
            3,
        );
        let request = SigningRequest {
            key_id: crate::crypto::KeyId([1; 32]),
            message: vec![0; 32],
            metadata: vec![],
            chain_id: "near".into(),
            scheme: SignatureScheme::ThresholdSchnorr,
        };
        let receipt = gk.issue_receipt(&params, request.clone(), 7).unwrap();
        assert_eq!(receipt.deadline, 7 + gk.config.deadline_window);
        assert!(receipt.verify(&params, &gk.public_key));
        assert_eq!(gk.receipt_log().len(), 1);

        let mut short = request.clone();
        short.message = vec![0; 16];
        assert!(matches!(
            gk.issue_receipt(&params, short, 8),
            Err(Rejection::MalformedRequest(_))
        ));

        let mut ecdsa = request.clone();
        ecdsa.scheme = SignatureScheme::ThresholdEcdsa;
        assert!(matches!(
            gk.issue_receipt(&params, ecdsa, 8),
            Err(Rejection::MalformedRequest(_))
        ));

        // Capacity 2: second ok, third rejected before reaching any node.
        gk.issue_receipt(&params, request.clone(), 9).unwrap();
        assert_eq!(
            gk.issue_receipt(&params, request.clone(), 10),
            Err(Rejection::QuotaExceeded)
        );
        assert_eq!(gk.receipt_log().len(), 2);

        // A quota-ignoring gatekeeper signs past its lease.
        gk.enforce_quota = false;
        gk.issue_receipt(&params, request, 11).unwrap();
        assert_eq!(gk.receipt_log().len(), 3);
    }
}
