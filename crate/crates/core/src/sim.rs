//! Deterministic simulated network: virtual clock, seeded link latency,
//! drop probability, partitions, and a transcript of every delivery.
//!
//! The whole simulation is single-threaded; determinism follows from the
//! seeded RNG and ordered iteration everywhere. Identical seed and config
//! produce a byte-identical transcript, and no message is ever delivered
//! before it is sent in virtual time.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SimError {
    #[error("unknown fault target: {0}")]
    UnknownTarget(String),
}

/// Why a delivery did not happen.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Undeliverable {
    Dropped,
    Partitioned,
}

/// Link behavior knobs; all times are virtual units.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NetConfig {
    pub latency_min: u64,
    pub latency_max: u64,
    pub drop_probability: f64,
    /// Advance applied when a peer fails to answer within a round.
    pub round_timeout: u64,
}

impl Default for NetConfig {
    fn default() -> Self {
        NetConfig {
            latency_min: 1,
            latency_max: 2,
            drop_probability: 0.0,
            round_timeout: 10,
        }
    }
}

/// An active partition: traffic between the two actor sets is cut.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Partition {
    pub side_a: Vec<String>,
    pub side_b: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TranscriptEvent {
    pub seq: u64,
    pub ts: u64,
    pub from: String,
    pub to: String,
    pub label: String,
    pub outcome: String,
}

/// The seeded bus. Every inter-actor call goes through [`SimNet::deliver`],
/// which samples latency, applies drops and partitions, advances the
/// clock, and records a transcript event.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SimNet {
    pub config: NetConfig,
    clock: u64,
    rng: ChaCha20Rng,
    partitions: Vec<Partition>,
    transcript: Vec<TranscriptEvent>,
}

impl SimNet {
    pub fn new(seed: u64, config: NetConfig) -> Self {
        SimNet {
            config,
            clock: 0,
            rng: ChaCha20Rng::seed_from_u64(seed ^ 0x6e6574),
            partitions: Vec::new(),
            transcript: Vec::new(),
        }
    }

    /// A zero-latency, lossless bus for unit tests.
    pub fn ideal() -> Self {
        SimNet::new(
            0,
            NetConfig {
                latency_min: 0,
                latency_max: 0,
                drop_probability: 0.0,
                round_timeout: 10,
            },
        )
    }

    pub fn now(&self) -> u64 {
        self.clock
    }

    pub fn advance(&mut self, dt: u64) {
        self.clock += dt;
    }

    /// Attempts a delivery from `from` to `to`. On success the clock moves
    /// by the sampled latency and the latency is returned; otherwise the
    /// clock moves by the round timeout.
    pub fn deliver(&mut self, from: &str, to: &str, label: &str) -> Result<u64, Undeliverable> {
        let outcome = if self.is_partitioned(from, to) {
            Err(Undeliverable::Partitioned)
        } else if self.config.drop_probability > 0.0
            && self.rng.random::<f64>() < self.config.drop_probability
        {
            Err(Undeliverable::Dropped)
        } else {
            let latency = if self.config.latency_max > self.config.latency_min {
                self.rng
                    .random_range(self.config.latency_min..=self.config.latency_max)
            } else {
                self.config.latency_min
            };
            Ok(latency)
        };
        let sent_at = self.clock;
        match outcome {
            Ok(latency) => self.clock += latency,
            Err(_) => self.clock += self.config.round_timeout,
        }
        self.record_at(sent_at, from, to, label, match outcome {
            Ok(latency) => format!("delivered+{latency}"),
            Err(Undeliverable::Dropped) => "dropped".into(),
            Err(Undeliverable::Partitioned) => "partitioned".into(),
        });
        outcome
    }

    /// Records a non-delivery observation (timeouts, local decisions) in
    /// the transcript at the current time.
    pub fn note(&mut self, from: &str, to: &str, label: &str, outcome: &str) {
        self.record_at(self.clock, from, to, label, outcome.to_string());
    }

    fn record_at(&mut self, ts: u64, from: &str, to: &str, label: &str, outcome: String) {
        self.transcript.push(TranscriptEvent {
            seq: self.transcript.len() as u64,
            ts,
            from: from.to_string(),
            to: to.to_string(),
            label: label.to_string(),
            outcome,
        });
    }

    /// Applies the round timeout for a peer that did not answer.
    pub fn timeout(&mut self, from: &str, to: &str, label: &str) {
        self.clock += self.config.round_timeout;
        self.record_at(self.clock, from, to, label, "timeout".into());
    }

    pub fn partition(&mut self, side_a: Vec<String>, side_b: Vec<String>) {
        self.partitions.push(Partition { side_a, side_b });
    }

    pub fn heal_partitions(&mut self) {
        self.partitions.clear();
    }

    fn is_partitioned(&self, from: &str, to: &str) -> bool {
        self.partitions.iter().any(|p| {
            let a = p.side_a.iter().any(|x| x == from);
            let b = p.side_b.iter().any(|x| x == to);
            let a_rev = p.side_a.iter().any(|x| x == to);
            let b_rev = p.side_b.iter().any(|x| x == from);
            (a && b) || (a_rev && b_rev)
        })
    }

    pub fn transcript(&self) -> &[TranscriptEvent] {
        &self.transcript
    }

    pub fn transcript_jsonl(&self) -> String {
        self.transcript
            .iter()
            .map(|e| serde_json::to_string(e).expect("events serialize"))
            .collect::<Vec<_>>()
            .join("\n")
    }

    /// SHA-256 over the JSON-lines transcript; the determinism fingerprint.
    pub fn transcript_hash(&self) -> String {
        let mut hasher = Sha256::new();
        hasher.update(self.transcript_jsonl().as_bytes());
        hex::encode(hasher.finalize())
    }
}
