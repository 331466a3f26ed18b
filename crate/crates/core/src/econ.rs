//! Token ledger, staking, epoch rewards, disputes, and DAO governance.
//!
//! The ledger is a single totally-ordered state machine. The conservation
//! identity `total_supply == Σ balances + Σ stakes + treasury + Σ escrow`
//! holds after every operation; supply changes only through epoch minting
//! (up) and the burned portion of a slash (down).
//!
//! Disputes are fee-backed: a fisherman escrows the fee, evidence is
//! checked against registered enclave and gatekeeper keys, and an upheld
//! dispute slashes the accused stake, paying the fisherman a share. The
//! violation predicates are pure functions over evidence, standing in for
//! DAO judgment at desk scale.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::crypto::group::{GroupElement, GroupParams};
use crate::request::Receipt;
use crate::tee::{LogEvent, RoundOutcome, TeeLogEntry};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum EconError {
    #[error("insufficient balance")]
    InsufficientBalance,
    #[error("stake below the role minimum")]
    BelowMinimum,
    #[error("insufficient staked amount")]
    InsufficientStake,
    #[error("account already stakes a different role")]
    RoleMismatch,
    #[error("epoch report is for epoch {got}, ledger is at {current}")]
    EpochOpen { current: u64, got: u64 },
    #[error("insufficient balance for the dispute fee")]
    InsufficientFee,
    #[error("accused account {0} holds no stake")]
    UnknownAccused(String),
    #[error("invalid evidence: {0}")]
    InvalidEvidence(String),
    #[error("unknown dispute {0}")]
    UnknownDispute(u64),
    #[error("dispute {0} already resolved")]
    AlreadyResolved(u64),
    #[error("{0} is not a DAO member")]
    NotMember(String),
    #[error("unknown proposal {0}")]
    UnknownProposal(u64),
    #[error("proposal already executed")]
    AlreadyExecuted,
    #[error("security-critical proposal was vetoed")]
    Vetoed,
    #[error("proposal lacks a majority")]
    NoMajority,
}

/// Roles that lock collateral. Users and fishermen do not stake.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StakeRole {
    DaoMember,
    MpcNode,
    Gatekeeper,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct StakeInfo {
    pub role: StakeRole,
    pub amount: u64,
}

/// Economic parameters; all magnitudes are configurable.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct EconParams {
    pub inflation_per_epoch: u64,
    /// Percentage of each epoch's mint that goes to MPC nodes; the rest is
    /// split equally among DAO members.
    pub node_reward_share_pct: u64,
    pub min_stake_dao: u64,
    pub min_stake_node: u64,
    pub min_stake_gatekeeper: u64,
    pub dispute_fee: u64,
    /// Fisherman share of a slashed stake, in percent.
    pub fisherman_share_pct: u64,
    /// Burned share of a slashed stake, in percent; the remainder goes to
    /// the treasury.
    pub slash_burn_pct: u64,
    /// Slash fraction for liveness violations; confidentiality violations
    /// slash the full stake.
    pub liveness_slash_pct: u64,
    /// Fixed per-epoch fee a gatekeeper pays for its leased capacity.
    pub gatekeeper_lease_fee: u64,
    /// NodeUnavailable reports needed to prove an unavailability streak.
    pub min_unavailability_reports: u32,
}

impl Default for EconParams {
    fn default() -> Self {
        EconParams {
            inflation_per_epoch: 1000,
            node_reward_share_pct: 80,
            min_stake_dao: 100,
            min_stake_node: 100,
            min_stake_gatekeeper: 100,
            dispute_fee: 10,
            fisherman_share_pct: 50,
            slash_burn_pct: 20,
            liveness_slash_pct: 10,
            gatekeeper_lease_fee: 5,
            min_unavailability_reports: 3,
        }
    }
}

impl EconParams {
    pub fn min_stake(&self, role: StakeRole) -> u64 {
        match role {
            StakeRole::DaoMember => self.min_stake_dao,
            StakeRole::MpcNode => self.min_stake_node,
            StakeRole::Gatekeeper => self.min_stake_gatekeeper,
        }
    }
}

/// What a fisherman claims the accused did.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ViolationClaim {
    /// Receipts show more accepted requests in a lease window than the
    /// gatekeeper's capacity. Liveness class.
    GatekeeperQuotaAbuse,
    /// A node's log shows a signing round-2 success without a prior
    /// positive validation. Confidentiality class: full slash.
    SigningWithoutValidation,
    /// Peers repeatedly reported the node unavailable. Liveness class.
    UnavailabilityStreak,
}

impl ViolationClaim {
    fn full_slash(&self) -> bool {
        matches!(self, ViolationClaim::SigningWithoutValidation)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "evidence", rename_all = "kebab-case")]
pub enum Evidence {
    Receipts { receipts: Vec<Receipt> },
    /// Signed log slices keyed by the reporting node's participant id.
    NodeLogs { logs: BTreeMap<u32, Vec<TeeLogEntry>> },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DisputeStatus {
    Open,
    Upheld,
    Dismissed,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Dispute {
    pub id: u64,
    pub fisherman: String,
    pub accused: String,
    pub claim: ViolationClaim,
    pub evidence: Evidence,
    pub fee: u64,
    pub status: DisputeStatus,
}

/// Outcome of resolving a dispute.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "resolution", rename_all = "kebab-case")]
pub enum Resolution {
    Upheld {
        slashed: u64,
        fisherman_reward: u64,
        burned: u64,
        treasury_cut: u64,
    },
    Dismissed,
}

/// Keys and lease data evidence is judged against; assembled by the caller
/// from controller state.
pub struct EvidenceContext<'a> {
    pub params: &'a GroupParams,
    /// participant id → registered enclave key.
    pub enclave_keys: BTreeMap<u32, GroupElement>,
    /// gatekeeper account → (identity key, leased capacity, lease window).
    pub gatekeeper_keys: BTreeMap<String, (GroupElement, u32, u64)>,
    /// node account → participant id.
    pub node_accounts: BTreeMap<String, u32>,
    /// Reports needed to prove an unavailability streak.
    pub min_unavailability_reports: u32,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DaoProposal {
    pub id: u64,
    pub proposer: String,
    pub action: DaoAction,
    pub security_critical: bool,
    pub approvals: Vec<String>,
    pub vetoes: Vec<String>,
    pub executed: bool,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "action", rename_all = "kebab-case")]
pub enum DaoAction {
    ParamChange { params: EconParams },
    AdmitMember { account: String },
    ApproveGatekeeper { gatekeeper_id: String },
}

/// Effects the caller applies outside the ledger (e.g. to the controller).
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum DaoEffect {
    ParamsScheduled,
    MemberAdmitted(String),
    GatekeeperApproved(String),
}

/// Per-epoch participation statistics, distilled from node logs.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct EpochReport {
    pub epoch: u64,
    /// node account → successfully completed protocol rounds.
    pub participation: BTreeMap<String, u64>,
    /// accounts of gatekeepers holding leases this epoch.
    pub gatekeepers: Vec<String>,
}

/// Counts successful signing and key-ceremony rounds in a node's log,
/// weighting both equally.
pub fn successful_rounds(entries: &[TeeLogEntry]) -> u64 {
    entries
        .iter()
        .filter(|e| {
            matches!(
                e.event,
                LogEvent::RoundStatus {
                    status: RoundOutcome::Ok,
                    ..
                }
            )
        })
        .count() as u64
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Ledger {
    balances: BTreeMap<String, u64>,
    stakes: BTreeMap<String, StakeInfo>,
    treasury: u64,
    escrow: BTreeMap<u64, u64>,
    total_supply: u64,
    pub params: EconParams,
    pending_params: Option<EconParams>,
    pub epoch: u64,
    disputes: BTreeMap<u64, Dispute>,
    next_dispute_id: u64,
    dao_members: Vec<String>,
    proposals: BTreeMap<u64, DaoProposal>,
    next_proposal_id: u64,
}

impl Ledger {
    pub fn new(
        params: EconParams,
        initial_balances: BTreeMap<String, u64>,
        dao_members: Vec<String>,
    ) -> Self {
        let total_supply = initial_balances.values().sum();
        Ledger {
            balances: initial_balances,
            stakes: BTreeMap::new(),
            treasury: 0,
            escrow: BTreeMap::new(),
            total_supply,
            params,
            pending_params: None,
            epoch: 0,
            disputes: BTreeMap::new(),
            next_dispute_id: 0,
            dao_members,
            proposals: BTreeMap::new(),
            next_proposal_id: 0,
        }
    }

    pub fn balance(&self, account: &str) -> u64 {
        self.balances.get(account).copied().unwrap_or(0)
    }

    pub fn stake_of(&self, account: &str) -> Option<&StakeInfo> {
        self.stakes.get(account)
    }

    pub fn treasury(&self) -> u64 {
        self.treasury
    }

    pub fn total_supply(&self) -> u64 {
        self.total_supply
    }

    pub fn dao_members(&self) -> &[String] {
        &self.dao_members
    }

    pub fn dispute(&self, id: u64) -> Option<&Dispute> {
        self.disputes.get(&id)
    }

    /// `total_supply == Σ balances + Σ stakes + treasury + Σ escrow`.
    pub fn check_conservation(&self) -> bool {
        let held: u64 = self.balances.values().sum::<u64>()
            + self.stakes.values().map(|s| s.amount).sum::<u64>()
            + self.treasury
            + self.escrow.values().sum::<u64>();
        held == self.total_supply
    }

    pub fn credit(&mut self, account: &str, amount: u64) {
        *self.balances.entry(account.to_string()).or_insert(0) += amount;
        self.total_supply += amount;
    }

    fn debit_balance(&mut self, account: &str, amount: u64) -> Result<(), EconError> {
        let balance = self.balances.entry(account.to_string()).or_insert(0);
        if *balance < amount {
            return Err(EconError::InsufficientBalance);
        }
        *balance -= amount;
        Ok(())
    }

    // ---- staking ----

    /// Locks collateral for a role; the resulting stake must meet the role
    /// minimum.
    pub fn stake(&mut self, account: &str, role: StakeRole, amount: u64) -> Result<(), EconError> {
        if let Some(existing) = self.stakes.get(account) {
            if existing.role != role {
                return Err(EconError::RoleMismatch);
            }
        }
        let current = self.stakes.get(account).map(|s| s.amount).unwrap_or(0);
        if current + amount < self.params.min_stake(role) {
            return Err(EconError::BelowMinimum);
        }
        self.debit_balance(account, amount)?;
        self.stakes
            .entry(account.to_string())
            .and_modify(|s| s.amount += amount)
            .or_insert(StakeInfo { role, amount });
        Ok(())
    }

    /// Returns part of the stake to the balance. Dropping below the role
    /// minimum deactivates the role but keeps the remainder locked.
    pub fn unstake(&mut self, account: &str, amount: u64) -> Result<(), EconError> {
        let info = self
            .stakes
            .get_mut(account)
            .ok_or(EconError::InsufficientStake)?;
        if info.amount < amount {
            return Err(EconError::InsufficientStake);
        }
        info.amount -= amount;
        if info.amount == 0 {
            self.stakes.remove(account);
        }
        *self.balances.entry(account.to_string()).or_insert(0) += amount;
        Ok(())
    }

    /// Whether the account's stake currently activates the role.
    pub fn is_active(&self, account: &str, role: StakeRole) -> bool {
        self.stakes
            .get(account)
            .map(|s| s.role == role && s.amount >= self.params.min_stake(role))
            .unwrap_or(false)
    }

    // ---- epoch processing ----

    /// Closes an epoch: mints exactly `inflation_per_epoch`, splits it
    /// between nodes (weighted by logged participation) and DAO members,
    /// collects gatekeeper lease fees, and applies any scheduled parameter
    /// change at the boundary. Rounding remainders go to the treasury so
    /// the mint is exact.
    pub fn epoch_mint(&mut self, report: &EpochReport) -> Result<BTreeMap<String, u64>, EconError> {
        if report.epoch != self.epoch {
            return Err(EconError::EpochOpen {
                current: self.epoch,
                got: report.epoch,
            });
        }
        let inflation = self.params.inflation_per_epoch;
        let node_pool = inflation * self.params.node_reward_share_pct / 100;
        let dao_pool = inflation - node_pool;
        let mut rewards: BTreeMap<String, u64> = BTreeMap::new();

        let total_rounds: u64 = report.participation.values().sum();
        let mut node_paid = 0u64;
        for (account, &rounds) in &report.participation {
            let share = (node_pool * rounds).checked_div(total_rounds).unwrap_or(0);
            if share > 0 {
                *rewards.entry(account.clone()).or_insert(0) += share;
                node_paid += share;
            }
        }

        let mut dao_paid = 0u64;
        let active_members: Vec<String> = self
            .dao_members
            .iter()
            .filter(|m| self.is_active(m, StakeRole::DaoMember))
            .cloned()
            .collect();
        if !active_members.is_empty() {
            let per_member = dao_pool / active_members.len() as u64;
            for member in &active_members {
                if per_member > 0 {
                    *rewards.entry(member.clone()).or_insert(0) += per_member;
                    dao_paid += per_member;
                }
            }
        }

        self.total_supply += inflation;
        for (account, amount) in &rewards {
            *self.balances.entry(account.clone()).or_insert(0) += *amount;
        }
        self.treasury += inflation - node_paid - dao_paid;

        for gatekeeper in &report.gatekeepers {
            let fee = self.params.gatekeeper_lease_fee.min(self.balance(gatekeeper));
            if fee > 0 {
                self.debit_balance(gatekeeper, fee)?;
                self.treasury += fee;
            }
        }

        self.epoch += 1;
        if let Some(next) = self.pending_params.take() {
            self.params = next;
        }
        Ok(rewards)
    }

    // ---- disputes ----

    /// Escrows the dispute fee and records the dispute as open.
    pub fn open_dispute(
        &mut self,
        fisherman: &str,
        accused: &str,
        claim: ViolationClaim,
        evidence: Evidence,
    ) -> Result<u64, EconError> {
        if !self.stakes.contains_key(accused) {
            return Err(EconError::UnknownAccused(accused.to_string()));
        }
        let fee = self.params.dispute_fee;
        self.debit_balance(fisherman, fee)
            .map_err(|_| EconError::InsufficientFee)?;
        let id = self.next_dispute_id;
        self.next_dispute_id += 1;
        self.escrow.insert(id, fee);
        self.disputes.insert(
            id,
            Dispute {
                id,
                fisherman: fisherman.to_string(),
                accused: accused.to_string(),
                claim,
                evidence,
                fee,
                status: DisputeStatus::Open,
            },
        );
        Ok(id)
    }

    /// Checks the evidence and settles the dispute. Upheld: the accused
    /// stake is slashed and split between the fisherman, a burn, and the
    /// treasury; the fee returns to the fisherman. Dismissed (including
    /// invalid evidence): the fee is forfeited to the treasury.
    pub fn resolve_dispute(
        &mut self,
        id: u64,
        ctx: &EvidenceContext,
    ) -> Result<Resolution, EconError> {
        let dispute = self
            .disputes
            .get(&id)
            .ok_or(EconError::UnknownDispute(id))?
            .clone();
        if dispute.status != DisputeStatus::Open {
            return Err(EconError::AlreadyResolved(id));
        }

        let proven = match check_violation(&dispute, ctx) {
            Ok(proven) => proven,
            Err(err) => {
                // Forged or incoherent evidence: dismiss and forfeit the fee.
                self.settle_dismissed(id);
                return Err(err);
            }
        };

        if !proven {
            self.settle_dismissed(id);
            return Ok(Resolution::Dismissed);
        }

        let stake = self
            .stakes
            .get_mut(&dispute.accused)
            .ok_or_else(|| EconError::UnknownAccused(dispute.accused.clone()))?;
        let slashed = if dispute.claim.full_slash() {
            stake.amount
        } else {
            stake.amount * self.params.liveness_slash_pct / 100
        };
        stake.amount -= slashed;
        if stake.amount == 0 {
            self.stakes.remove(&dispute.accused);
        }
        let fisherman_reward = slashed * self.params.fisherman_share_pct / 100;
        let burned = slashed * self.params.slash_burn_pct / 100;
        let treasury_cut = slashed - fisherman_reward - burned;

        *self
            .balances
            .entry(dispute.fisherman.clone())
            .or_insert(0) += fisherman_reward;
        self.total_supply -= burned;
        self.treasury += treasury_cut;

        // Refund the fee.
        let fee = self.escrow.remove(&id).unwrap_or(0);
        *self
            .balances
            .entry(dispute.fisherman.clone())
            .or_insert(0) += fee;

        self.disputes.get_mut(&id).unwrap().status = DisputeStatus::Upheld;
        Ok(Resolution::Upheld {
            slashed,
            fisherman_reward,
            burned,
            treasury_cut,
        })
    }

    fn settle_dismissed(&mut self, id: u64) {
        let fee = self.escrow.remove(&id).unwrap_or(0);
        self.treasury += fee;
        self.disputes.get_mut(&id).unwrap().status = DisputeStatus::Dismissed;
    }

    // ---- DAO ----

    fn require_member(&self, account: &str) -> Result<(), EconError> {
        if self.dao_members.iter().any(|m| m == account) {
            Ok(())
        } else {
            Err(EconError::NotMember(account.to_string()))
        }
    }

    pub fn dao_propose(
        &mut self,
        proposer: &str,
        action: DaoAction,
        security_critical: bool,
    ) -> Result<u64, EconError> {
        self.require_member(proposer)?;
        let id = self.next_proposal_id;
        self.next_proposal_id += 1;
        self.proposals.insert(
            id,
            DaoProposal {
                id,
                proposer: proposer.to_string(),
                action,
                security_critical,
                approvals: vec![proposer.to_string()],
                vetoes: Vec::new(),
                executed: false,
            },
        );
        Ok(id)
    }

    pub fn dao_vote(&mut self, member: &str, proposal_id: u64) -> Result<(), EconError> {
        self.require_member(member)?;
        let proposal = self
            .proposals
            .get_mut(&proposal_id)
            .ok_or(EconError::UnknownProposal(proposal_id))?;
        if !proposal.approvals.iter().any(|m| m == member) {
            proposal.approvals.push(member.to_string());
        }
        Ok(())
    }

    /// Any single member's veto blocks a flagged proposal.
    pub fn dao_veto(&mut self, member: &str, proposal_id: u64) -> Result<(), EconError> {
        self.require_member(member)?;
        let proposal = self
            .proposals
            .get_mut(&proposal_id)
            .ok_or(EconError::UnknownProposal(proposal_id))?;
        if !proposal.vetoes.iter().any(|m| m == member) {
            proposal.vetoes.push(member.to_string());
        }
        Ok(())
    }

    /// Executes a majority-approved proposal. Parameter changes are staged
    /// and take effect at the next epoch boundary; roster effects are
    /// returned for the caller to apply.
    pub fn dao_execute(&mut self, proposal_id: u64) -> Result<Vec<DaoEffect>, EconError> {
        let proposal = self
            .proposals
            .get(&proposal_id)
            .ok_or(EconError::UnknownProposal(proposal_id))?
            .clone();
        if proposal.executed {
            return Err(EconError::AlreadyExecuted);
        }
        if proposal.security_critical && !proposal.vetoes.is_empty() {
            return Err(EconError::Vetoed);
        }
        if proposal.approvals.len() <= self.dao_members.len() / 2 {
            return Err(EconError::NoMajority);
        }
        let mut effects = Vec::new();
        match &proposal.action {
            DaoAction::ParamChange { params } => {
                self.pending_params = Some(params.clone());
                effects.push(DaoEffect::ParamsScheduled);
            }
            DaoAction::AdmitMember { account } => {
                if !self.dao_members.iter().any(|m| m == account) {
                    self.dao_members.push(account.clone());
                }
                effects.push(DaoEffect::MemberAdmitted(account.clone()));
            }
            DaoAction::ApproveGatekeeper { gatekeeper_id } => {
                effects.push(DaoEffect::GatekeeperApproved(gatekeeper_id.clone()));
            }
        }
        self.proposals.get_mut(&proposal_id).unwrap().executed = true;
        Ok(effects)
    }
}

/// Evaluates the claimed violation against the evidence. `Err` means the
/// evidence itself is forged or incoherent; `Ok(false)` means honest but
/// unconvincing.
pub fn check_violation(dispute: &Dispute, ctx: &EvidenceContext) -> Result<bool, EconError> {
    match (&dispute.claim, &dispute.evidence) {
        (ViolationClaim::GatekeeperQuotaAbuse, Evidence::Receipts { receipts }) => {
            let (key, capacity, window) = ctx
                .gatekeeper_keys
                .get(&dispute.accused)
                .ok_or_else(|| EconError::InvalidEvidence("accused is not a gatekeeper".into()))?;
            if receipts.is_empty() {
                return Err(EconError::InvalidEvidence("no receipts supplied".into()));
            }
            let mut windows: BTreeMap<u64, u32> = BTreeMap::new();
            let mut seen = std::collections::BTreeSet::new();
            for receipt in receipts {
                if receipt.gatekeeper_id != dispute.accused {
                    return Err(EconError::InvalidEvidence(
                        "receipt from a different gatekeeper".into(),
                    ));
                }
                if !receipt.verify(ctx.params, key) {
                    return Err(EconError::InvalidEvidence(
                        "receipt signature does not verify".into(),
                    ));
                }
                if !seen.insert(receipt.hash(ctx.params)) {
                    continue;
                }
                // Receipts carry deadlines at a fixed offset from issuance,
                // so windowing by deadline is windowing by issue time.
                let bucket = receipt.deadline.checked_div(*window).unwrap_or(0);
                *windows.entry(bucket).or_insert(0) += 1;
            }
            Ok(windows.values().any(|&count| count > *capacity))
        }
        (ViolationClaim::SigningWithoutValidation, Evidence::NodeLogs { logs }) => {
            let accused_id = ctx
                .node_accounts
                .get(&dispute.accused)
                .ok_or_else(|| EconError::InvalidEvidence("accused is not a node".into()))?;
            let entries = logs
                .get(accused_id)
                .ok_or_else(|| EconError::InvalidEvidence("no log for the accused".into()))?;
            let key = ctx
                .enclave_keys
                .get(accused_id)
                .ok_or_else(|| EconError::InvalidEvidence("no enclave key on record".into()))?;
            verify_log_slice(ctx.params, entries, key)?;
            // Track validations and request sessions within the slice; any
            // round-2 signing success without a prior positive validation
            // for its key proves the violation.
            let mut validated = std::collections::BTreeSet::new();
            let mut session_keys: BTreeMap<String, crate::crypto::KeyId> = BTreeMap::new();
            for entry in entries {
                match &entry.event {
                    LogEvent::SigningRequestReceived { receipt, session } => {
                        session_keys.insert(session.clone(), receipt.request.key_id);
                    }
                    LogEvent::ValidationOutcome {
                        key_id,
                        authorized: true,
                    } => {
                        validated.insert(*key_id);
                    }
                    LogEvent::RoundStatus {
                        session,
                        round: 2,
                        status: RoundOutcome::Ok,
                    } if !session.starts_with("dkg-") && !session.starts_with("reshare-") => {
                        let ok = session_keys
                            .get(session)
                            .map(|k| validated.contains(k))
                            .unwrap_or(false);
                        if !ok {
                            return Ok(true);
                        }
                    }
                    _ => {}
                }
            }
            Ok(false)
        }
        (ViolationClaim::UnavailabilityStreak, Evidence::NodeLogs { logs }) => {
            let accused_id = ctx
                .node_accounts
                .get(&dispute.accused)
                .ok_or_else(|| EconError::InvalidEvidence("accused is not a node".into()))?;
            let mut reports = 0u32;
            for (reporter, entries) in logs {
                let key = ctx.enclave_keys.get(reporter).ok_or_else(|| {
                    EconError::InvalidEvidence(format!("no enclave key for reporter {reporter}"))
                })?;
                verify_log_slice(ctx.params, entries, key)?;
                reports += entries
                    .iter()
                    .filter(|e| {
                        matches!(e.event, LogEvent::NodeUnavailable { peer_id } if peer_id == *accused_id)
                    })
                    .count() as u32;
            }
            Ok(reports >= ctx.min_unavailability_reports)
        }
        _ => Err(EconError::InvalidEvidence(
            "evidence kind does not match the claim".into(),
        )),
    }
}

fn verify_log_slice(
    params: &GroupParams,
    entries: &[TeeLogEntry],
    key: &GroupElement,
) -> Result<(), EconError> {
    let mut prev_seq: Option<u64> = None;
    for entry in entries {
        if !entry.verify(params, key) {
            return Err(EconError::InvalidEvidence(format!(
                "log entry {} fails signature verification",
                entry.seq
            )));
        }
        if let Some(prev) = prev_seq {
            if entry.seq != prev + 1 {
                return Err(EconError::InvalidEvidence(format!(
                    "log slice has a gap before seq {}",
                    entry.seq
                )));
            }
        }
        prev_seq = Some(entry.seq);
    }
    Ok(())
}
