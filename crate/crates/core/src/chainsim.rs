//! Host for key-owner contracts: read-only `hot_verify` authorization
//! policies addressed by `(chain_id, contract_address)`.
//!
//! `hot_verify` takes the message being signed (as lowercase hex of the
//! 32-byte payload), the key_id, and opaque metadata, and answers whether
//! the message is authorized for signing. Evaluation never mutates policy
//! state; the host compares a state hash before and after every call to
//! enforce that. A policy fault maps to authorization failure at the
//! caller, never to a retry.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::crypto::group::{GroupElement, GroupParams};
use crate::crypto::schnorr::{verify, Signature};
use crate::crypto::KeyId;
use crate::request::SignatureScheme;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ChainSimError {
    #[error("chain {0} is not configured")]
    UnknownChain(String),
    #[error("no contract deployed at {0}")]
    UnknownContract(String),
    #[error("policy fault: {0}")]
    PolicyPanic(String),
    #[error("policy mutated its state during hot_verify")]
    StateMutated,
    #[error("key_id is already bound")]
    AlreadyBound,
    #[error("contract does not support this registration")]
    WrongPolicy,
}

/// Binds key_ids to passkey public keys; `hot_verify` checks the metadata
/// as a device signature over the message under the registered key.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PasskeyPolicy {
    pub scheme: Option<SignatureScheme>,
    keys: BTreeMap<KeyId, GroupElement>,
}

/// Requires two signatures in the metadata, one per registered factor.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TwoFactorPolicy {
    pub scheme: Option<SignatureScheme>,
    keys: BTreeMap<KeyId, (GroupElement, GroupElement)>,
}

/// The built-in authorization policies.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "policy", rename_all = "kebab-case")]
pub enum Policy {
    AlwaysTrue,
    AlwaysFalse,
    Passkey(PasskeyPolicy),
    ThresholdTwoFactor(TwoFactorPolicy),
    /// Faults on every call; exercises the PolicyPanic path.
    Faulty,
}

impl Policy {
    pub fn by_name(name: &str) -> Option<Policy> {
        match name {
            "always-true" => Some(Policy::AlwaysTrue),
            "always-false" => Some(Policy::AlwaysFalse),
            "passkey" => Some(Policy::Passkey(PasskeyPolicy {
                scheme: Some(SignatureScheme::ThresholdSchnorr),
                keys: BTreeMap::new(),
            })),
            "threshold-2fa" => Some(Policy::ThresholdTwoFactor(TwoFactorPolicy {
                scheme: Some(SignatureScheme::ThresholdSchnorr),
                keys: BTreeMap::new(),
            })),
            "faulty" => Some(Policy::Faulty),
            _ => None,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Policy::AlwaysTrue => "always-true",
            Policy::AlwaysFalse => "always-false",
            Policy::Passkey(_) => "passkey",
            Policy::ThresholdTwoFactor(_) => "threshold-2fa",
            Policy::Faulty => "faulty",
        }
    }

    /// The policy catalog as listed by the CLI.
    pub fn catalog() -> &'static [&'static str] {
        &["always-true", "always-false", "passkey", "threshold-2fa", "faulty"]
    }

    fn state_hash(&self) -> [u8; 32] {
        let mut hasher = Sha256::new();
        hasher.update(serde_json::to_vec(self).expect("policies serialize"));
        hasher.finalize().into()
    }

    fn evaluate(
        &self,
        params: &GroupParams,
        message: &str,
        key_id: &KeyId,
        metadata: &[u8],
    ) -> Result<bool, String> {
        match self {
            Policy::AlwaysTrue => Ok(true),
            Policy::AlwaysFalse => Ok(false),
            Policy::Passkey(state) => {
                let Some(public_key) = state.keys.get(key_id) else {
                    return Ok(false);
                };
                Ok(check_signature(params, message.as_bytes(), metadata, public_key))
            }
            Policy::ThresholdTwoFactor(state) => {
                let Some((first, second)) = state.keys.get(key_id) else {
                    return Ok(false);
                };
                let width = params.signature_width();
                if metadata.len() != 2 * width {
                    return Ok(false);
                }
                let (a, b) = metadata.split_at(width);
                Ok(check_signature(params, message.as_bytes(), a, first)
                    && check_signature(params, message.as_bytes(), b, second))
            }
            Policy::Faulty => Err("deliberate policy fault".into()),
        }
    }
}

fn check_signature(
    params: &GroupParams,
    message: &[u8],
    encoded: &[u8],
    public_key: &GroupElement,
) -> bool {
    match Signature::decode(params, encoded) {
        Ok(signature) => verify(params, message, &signature, public_key),
        Err(_) => false,
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
struct DeployedContract {
    address: String,
    policy: Policy,
}

/// All configured chains and the contracts deployed on them.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ChainSim {
    chains: BTreeMap<String, BTreeMap<String, DeployedContract>>,
    deploy_counter: u64,
}

impl ChainSim {
    pub fn new(chain_ids: &[String]) -> Self {
        ChainSim {
            chains: chain_ids
                .iter()
                .map(|c| (c.clone(), BTreeMap::new()))
                .collect(),
            deploy_counter: 0,
        }
    }

    pub fn chain_ids(&self) -> Vec<String> {
        self.chains.keys().cloned().collect()
    }

    /// Deploys a policy on a configured chain, returning its address.
    pub fn deploy_policy(&mut self, chain_id: &str, policy: Policy) -> Result<String, ChainSimError> {
        let contracts = self
            .chains
            .get_mut(chain_id)
            .ok_or_else(|| ChainSimError::UnknownChain(chain_id.into()))?;
        let address = format!("{}-{}.{}", policy.name(), self.deploy_counter, chain_id);
        self.deploy_counter += 1;
        contracts.insert(
            address.clone(),
            DeployedContract {
                address: address.clone(),
                policy,
            },
        );
        Ok(address)
    }

    fn contract(&self, chain_id: &str, address: &str) -> Result<&DeployedContract, ChainSimError> {
        self.chains
            .get(chain_id)
            .ok_or_else(|| ChainSimError::UnknownChain(chain_id.into()))?
            .get(address)
            .ok_or_else(|| ChainSimError::UnknownContract(address.into()))
    }

    pub fn policy(&self, chain_id: &str, address: &str) -> Result<&Policy, ChainSimError> {
        Ok(&self.contract(chain_id, address)?.policy)
    }

    /// The read-only authorization check. Deterministic for fixed state and
    /// guaranteed to leave the contract unchanged.
    pub fn hot_verify(
        &self,
        params: &GroupParams,
        chain_id: &str,
        address: &str,
        message: &str,
        key_id: &KeyId,
        metadata: &[u8],
    ) -> Result<bool, ChainSimError> {
        let contract = self.contract(chain_id, address)?;
        let before = contract.policy.state_hash();
        let outcome = contract.policy.evaluate(params, message, key_id, metadata);
        if contract.policy.state_hash() != before {
            return Err(ChainSimError::StateMutated);
        }
        outcome.map_err(ChainSimError::PolicyPanic)
    }

    /// Binds a key_id to a passkey public key; bindings are immutable.
    pub fn passkey_register(
        &mut self,
        chain_id: &str,
        address: &str,
        key_id: KeyId,
        public_key: GroupElement,
    ) -> Result<(), ChainSimError> {
        let contract = self
            .chains
            .get_mut(chain_id)
            .ok_or_else(|| ChainSimError::UnknownChain(chain_id.into()))?
            .get_mut(address)
            .ok_or_else(|| ChainSimError::UnknownContract(address.into()))?;
        match &mut contract.policy {
            Policy::Passkey(state) => {
                if state.keys.contains_key(&key_id) {
                    return Err(ChainSimError::AlreadyBound);
                }
                state.keys.insert(key_id, public_key);
                Ok(())
            }
            _ => Err(ChainSimError::WrongPolicy),
        }
    }

    pub fn two_factor_register(
        &mut self,
        chain_id: &str,
        address: &str,
        key_id: KeyId,
        first: GroupElement,
        second: GroupElement,
    ) -> Result<(), ChainSimError> {
        let contract = self
            .chains
            .get_mut(chain_id)
            .ok_or_else(|| ChainSimError::UnknownChain(chain_id.into()))?
            .get_mut(address)
            .ok_or_else(|| ChainSimError::UnknownContract(address.into()))?;
        match &mut contract.policy {
            Policy::ThresholdTwoFactor(state) => {
                if state.keys.contains_key(&key_id) {
                    return Err(ChainSimError::AlreadyBound);
                }
                state.keys.insert(key_id, (first, second));
                Ok(())
            }
            _ => Err(ChainSimError::WrongPolicy),
        }
    }
}
