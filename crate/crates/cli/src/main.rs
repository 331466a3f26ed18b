//! Command-line front end: genesis, key reservation, signing, resharing,
//! epochs, disputes, and scenario execution over a JSON state snapshot.
//!
//! Machine-readable JSON goes to stdout; diagnostics go to stderr.
//! Exit codes: 0 ok, 2 unauthorized, 3 threshold unavailable, 4 quota
//! exceeded, 5 scenario assertion failed, 1 anything else.

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{anyhow, Context, Result};
use clap::{Args, Parser, Subcommand};
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

use keynet::chainsim::Policy;
use keynet::crypto::schnorr::{schnorr_keygen, schnorr_sign, schnorr_sign_with_nonce};
use keynet::crypto::{derive_child_public, KeyId, Tweak};
use keynet::econ::Evidence;
use keynet::gatekeeper::Rejection;
use keynet::harness::scenario::{run_scenario, scenario_by_name, scenario_names, Scenario};
use keynet::harness::{World, WorldConfig};
use keynet::request::{SignatureScheme, SigningRequest};
use keynet::GroupParams;

#[derive(Parser)]
#[command(name = "keynet", version, about = "Contract-gated threshold key-management network simulator")]
struct Cli {
    /// Directory holding the world snapshot between commands.
    #[arg(long, global = true, default_value = "keynet-state")]
    state_dir: PathBuf,
    /// Overrides the seed where a command takes one.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output style for the JSON written to stdout.
    #[arg(long, global = true, default_value = "json", value_parser = ["json", "pretty"])]
    output: String,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Creates the world from a config file and runs genesis + DKG.
    Init(InitArgs),
    /// Reserves a key_id for (chain, contract) and prints its derived key.
    ReserveKey(ReserveKeyArgs),
    /// Requests a signature through a gatekeeper.
    Sign(SignArgs),
    /// Votes a new participant set / threshold and reshares the key.
    Reshare(ReshareArgs),
    /// Closes the reward epoch: minting and lease collection.
    Epoch,
    /// Opens and resolves a dispute from an evidence file.
    Dispute(DisputeArgs),
    /// Runs or lists bundled and file-based scenarios.
    #[command(subcommand)]
    Scenario(ScenarioCmd),
    /// Policy catalog and deployment.
    #[command(subcommand)]
    Policy(PolicyCmd),
    /// Simulates the user's passkey device.
    #[command(subcommand)]
    Passkey(PasskeyCmd),
    /// Exports a node's signed log as JSON-lines.
    Logs(LogsArgs),
    /// Exports a gatekeeper's receipts as JSON-lines.
    Receipts(ReceiptsArgs),
    /// Builds a dispute-evidence file.
    Evidence(EvidenceArgs),
    /// Prints crypto test vectors for the toy group.
    Vectors,
}

#[derive(Args)]
struct InitArgs {
    /// World configuration (JSON); defaults apply for missing fields.
    #[arg(long)]
    config: PathBuf,
}

#[derive(Args)]
struct ReserveKeyArgs {
    #[arg(long)]
    chain: String,
    #[arg(long)]
    contract: String,
}

#[derive(Args)]
struct SignArgs {
    #[arg(long)]
    key_id: String,
    /// 32-byte signing payload, hex.
    #[arg(long)]
    message: String,
    /// Authorization metadata, hex.
    #[arg(long, default_value = "")]
    metadata: String,
    #[arg(long, default_value = "gk1")]
    gatekeeper: String,
}

#[derive(Args)]
struct ReshareArgs {
    /// Comma-separated participant ids for the new configuration.
    #[arg(long)]
    participants: String,
    #[arg(long)]
    threshold: u32,
}

#[derive(Args)]
struct DisputeArgs {
    #[arg(long)]
    fisherman: String,
    #[arg(long)]
    accused: String,
    #[arg(long, value_parser = ["quota-abuse", "signing-without-validation", "unavailability-streak"])]
    claim: String,
    /// Evidence file produced by `keynet evidence`.
    #[arg(long)]
    evidence: PathBuf,
}

#[derive(Subcommand)]
enum ScenarioCmd {
    /// Runs a bundled scenario by name, or a scenario file by path.
    Run {
        scenario: String,
        /// Writes the transcript JSON-lines here.
        #[arg(long)]
        transcript: Option<PathBuf>,
    },
    List,
}

#[derive(Subcommand)]
enum PolicyCmd {
    List,
    Deploy {
        #[arg(long)]
        chain: String,
        #[arg(long)]
        policy: String,
    },
}

#[derive(Subcommand)]
enum PasskeyCmd {
    /// Generates a device keypair (seeded via --seed).
    Keygen,
    /// Binds a key_id to a device public key in its passkey contract.
    Register {
        #[arg(long)]
        key_id: String,
        #[arg(long)]
        public_key: String,
    },
    /// Signs a payload with the device secret; the output is `sign` metadata.
    Sign {
        #[arg(long)]
        secret: String,
        /// 32-byte signing payload, hex (signed as its lowercase hex text).
        #[arg(long)]
        message: String,
    },
}

#[derive(Args)]
struct LogsArgs {
    #[arg(long)]
    node: u32,
}

#[derive(Args)]
struct ReceiptsArgs {
    #[arg(long)]
    gatekeeper: String,
}

#[derive(Args)]
struct EvidenceArgs {
    #[arg(long, value_parser = ["receipts", "logs"])]
    kind: String,
    #[arg(long)]
    gatekeeper: Option<String>,
    /// Comma-separated reporter node ids for log evidence.
    #[arg(long)]
    reporters: Option<String>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(&cli) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(1)
        }
    }
}

fn emit(cli: &Cli, value: &serde_json::Value) {
    let text = if cli.output == "pretty" {
        serde_json::to_string_pretty(value).expect("json")
    } else {
        serde_json::to_string(value).expect("json")
    };
    println!("{text}");
}

fn snapshot_path(cli: &Cli) -> PathBuf {
    cli.state_dir.join("world.json")
}

fn load_world(cli: &Cli) -> Result<World> {
    let path = snapshot_path(cli);
    let text = std::fs::read_to_string(&path)
        .with_context(|| format!("no snapshot at {}; run `keynet init` first", path.display()))?;
    World::from_snapshot_json(&text).context("snapshot is corrupt")
}

fn save_world(cli: &Cli, world: &World) -> Result<()> {
    std::fs::create_dir_all(&cli.state_dir)?;
    std::fs::write(snapshot_path(cli), world.snapshot_json())?;
    Ok(())
}

fn parse_key_id(text: &str) -> Result<KeyId> {
    KeyId::from_hex(text).map_err(|e| anyhow!("bad key id: {e}"))
}

fn parse_id_list(text: &str) -> Result<Vec<u32>> {
    text.split(',')
        .map(|part| part.trim().parse::<u32>().context("bad participant id"))
        .collect()
}

fn rejection_code(rejection: &Rejection) -> u8 {
    match rejection {
        Rejection::Unauthorized => 2,
        Rejection::ThresholdUnavailable => 3,
        Rejection::QuotaExceeded => 4,
        _ => 1,
    }
}

fn dispatch(cli: &Cli) -> Result<ExitCode> {
    match &cli.command {
        Command::Init(args) => {
            let text = std::fs::read_to_string(&args.config)
                .with_context(|| format!("cannot read {}", args.config.display()))?;
            let mut config: WorldConfig =
                serde_json::from_str(&text).context("bad world config")?;
            if let Some(seed) = cli.seed {
                config.seed = seed;
            }
            let world = World::init(config).context("world initialization failed")?;
            let root_pk = world
                .root_public_key()
                .map(|pk| hex::encode(world.params.encode_element(&pk)));
            emit(
                cli,
                &serde_json::json!({
                    "group": world.params.name(),
                    "epoch": world.controller.epoch(),
                    "participants": world.nodes.keys().collect::<Vec<_>>(),
                    "threshold": world.controller.fetch_config(None)?.threshold,
                    "group_public_key": root_pk,
                    "deployments": world.deployments,
                }),
            );
            save_world(cli, &world)?;
            Ok(ExitCode::SUCCESS)
        }

        Command::ReserveKey(args) => {
            let mut world = load_world(cli)?;
            let key_id = world.controller.reserve_key(&args.chain, &args.contract);
            let child = world.root_public_key().map(|root| {
                hex::encode(
                    world
                        .params
                        .encode_element(&derive_child_public(&world.params, &root, &key_id)),
                )
            });
            emit(
                cli,
                &serde_json::json!({
                    "key_id": key_id.to_hex(),
                    "chain": args.chain,
                    "contract": args.contract,
                    "derived_public_key": child,
                }),
            );
            save_world(cli, &world)?;
            Ok(ExitCode::SUCCESS)
        }

        Command::Sign(args) => {
            let mut world = load_world(cli)?;
            let key_id = parse_key_id(&args.key_id)?;
            let message = hex::decode(&args.message).context("message must be hex")?;
            let metadata = hex::decode(&args.metadata).context("metadata must be hex")?;
            let chain_id = world
                .controller
                .lookup_authorizer(&key_id)
                .map(|entry| entry.chain_id.clone())
                .unwrap_or_default();
            let result = world.submit_request(
                &args.gatekeeper,
                SigningRequest {
                    key_id,
                    message: message.clone(),
                    metadata,
                    chain_id,
                    scheme: SignatureScheme::ThresholdSchnorr,
                },
            );
            save_world(cli, &world)?;
            match result {
                Ok(signature) => {
                    let root = world.root_public_key().expect("group key exists");
                    let child = derive_child_public(&world.params, &root, &key_id);
                    emit(
                        cli,
                        &serde_json::json!({
                            "signature": hex::encode(signature.encode(&world.params)),
                            "public_key": hex::encode(world.params.encode_element(&child)),
                            "message": hex::encode(&message),
                        }),
                    );
                    Ok(ExitCode::SUCCESS)
                }
                Err(rejection) => {
                    emit(cli, &serde_json::json!({ "rejected": rejection.to_string() }));
                    eprintln!("signing rejected: {rejection}");
                    Ok(ExitCode::from(rejection_code(&rejection)))
                }
            }
        }

        Command::Reshare(args) => {
            let mut world = load_world(cli)?;
            let participants = parse_id_list(&args.participants)?;
            world
                .run_reshare(&participants, args.threshold)
                .context("resharing failed")?;
            let root_pk = world
                .root_public_key()
                .map(|pk| hex::encode(world.params.encode_element(&pk)));
            emit(
                cli,
                &serde_json::json!({
                    "epoch": world.controller.epoch(),
                    "participants": participants,
                    "threshold": args.threshold,
                    "group_public_key": root_pk,
                }),
            );
            save_world(cli, &world)?;
            Ok(ExitCode::SUCCESS)
        }

        Command::Epoch => {
            let mut world = load_world(cli)?;
            let rewards = world.close_epoch().context("epoch close failed")?;
            emit(
                cli,
                &serde_json::json!({
                    "epoch": world.ledger.epoch,
                    "rewards": rewards,
                    "total_supply": world.ledger.total_supply(),
                }),
            );
            save_world(cli, &world)?;
            Ok(ExitCode::SUCCESS)
        }

        Command::Dispute(args) => {
            let mut world = load_world(cli)?;
            let text = std::fs::read_to_string(&args.evidence)
                .with_context(|| format!("cannot read {}", args.evidence.display()))?;
            let evidence: Evidence = serde_json::from_str(&text).context("bad evidence file")?;
            let claim = match args.claim.as_str() {
                "quota-abuse" => keynet::econ::ViolationClaim::GatekeeperQuotaAbuse,
                "signing-without-validation" => {
                    keynet::econ::ViolationClaim::SigningWithoutValidation
                }
                _ => keynet::econ::ViolationClaim::UnavailabilityStreak,
            };
            let id = world
                .open_dispute(&args.fisherman, &args.accused, claim, evidence)
                .context("cannot open dispute")?;
            let resolution = world.resolve_dispute(id);
            let outcome = match &resolution {
                Ok(resolution) => serde_json::to_value(resolution)?,
                Err(err) => serde_json::json!({ "resolution": "rejected", "reason": err.to_string() }),
            };
            emit(cli, &serde_json::json!({ "dispute": id, "outcome": outcome }));
            save_world(cli, &world)?;
            Ok(ExitCode::SUCCESS)
        }

        Command::Scenario(ScenarioCmd::List) => {
            emit(cli, &serde_json::json!({ "scenarios": scenario_names() }));
            Ok(ExitCode::SUCCESS)
        }

        Command::Scenario(ScenarioCmd::Run { scenario, transcript }) => {
            let mut spec: Scenario = match scenario_by_name(scenario) {
                Some(s) => s,
                None => {
                    let text = std::fs::read_to_string(scenario)
                        .with_context(|| format!("no bundled scenario or file named {scenario}"))?;
                    serde_json::from_str(&text).context("bad scenario file")?
                }
            };
            if let Some(seed) = cli.seed {
                spec.world.seed = seed;
            }
            let run = run_scenario(&spec).context("scenario execution failed")?;
            if let (Some(path), Some(world)) = (transcript, run.world.as_ref()) {
                std::fs::write(path, world.net.transcript_jsonl())?;
            }
            emit(cli, &serde_json::to_value(&run.report)?);
            for assertion in &run.report.assertions {
                eprintln!(
                    "{} {}",
                    if assertion.passed { "PASS" } else { "FAIL" },
                    assertion.label
                );
            }
            if run.report.passed {
                Ok(ExitCode::SUCCESS)
            } else {
                Ok(ExitCode::from(5))
            }
        }

        Command::Policy(PolicyCmd::List) => {
            emit(cli, &serde_json::json!({ "policies": Policy::catalog() }));
            Ok(ExitCode::SUCCESS)
        }

        Command::Policy(PolicyCmd::Deploy { chain, policy }) => {
            let mut world = load_world(cli)?;
            let built = Policy::by_name(policy)
                .ok_or_else(|| anyhow!("unknown policy {policy}; see `keynet policy list`"))?;
            let address = world.chains.deploy_policy(chain, built)?;
            world.deployments.push((
                keynet::harness::PolicyDeployment {
                    chain: chain.clone(),
                    policy: policy.clone(),
                },
                address.clone(),
            ));
            emit(cli, &serde_json::json!({ "chain": chain, "policy": policy, "address": address }));
            save_world(cli, &world)?;
            Ok(ExitCode::SUCCESS)
        }

        Command::Passkey(PasskeyCmd::Keygen) => {
            let world = load_world(cli)?;
            let mut rng = ChaCha20Rng::seed_from_u64(cli.seed.unwrap_or(0) ^ 0xdec1ce);
            let (secret, public) = schnorr_keygen(&world.params, &mut rng);
            emit(
                cli,
                &serde_json::json!({
                    "secret": hex::encode(world.params.encode_scalar(&secret)),
                    "public_key": hex::encode(world.params.encode_element(&public)),
                }),
            );
            Ok(ExitCode::SUCCESS)
        }

        Command::Passkey(PasskeyCmd::Register { key_id, public_key }) => {
            let mut world = load_world(cli)?;
            let key_id = parse_key_id(key_id)?;
            let public = world
                .params
                .decode_element(&hex::decode(public_key).context("public key must be hex")?)
                .map_err(|e| anyhow!("bad public key: {e}"))?;
            let entry = world.controller.lookup_authorizer(&key_id)?.clone();
            world
                .chains
                .passkey_register(&entry.chain_id, &entry.contract_address, key_id, public)?;
            emit(
                cli,
                &serde_json::json!({
                    "key_id": key_id.to_hex(),
                    "contract": entry.contract_address,
                    "chain": entry.chain_id,
                }),
            );
            save_world(cli, &world)?;
            Ok(ExitCode::SUCCESS)
        }

        Command::Passkey(PasskeyCmd::Sign { secret, message }) => {
            let world = load_world(cli)?;
            let secret = world
                .params
                .decode_scalar(&hex::decode(secret).context("secret must be hex")?)
                .map_err(|e| anyhow!("bad secret: {e}"))?;
            let payload = hex::decode(message).context("message must be hex")?;
            let signed_text = hex::encode(&payload);
            let mut rng = ChaCha20Rng::seed_from_u64(cli.seed.unwrap_or(7) ^ 0x5169);
            let signature = schnorr_sign(&world.params, &secret, signed_text.as_bytes(), &mut rng);
            emit(
                cli,
                &serde_json::json!({
                    "metadata": hex::encode(signature.encode(&world.params)),
                    "message": signed_text,
                }),
            );
            Ok(ExitCode::SUCCESS)
        }

        Command::Logs(args) => {
            let world = load_world(cli)?;
            let node = world
                .nodes
                .get(&args.node)
                .ok_or_else(|| anyhow!("no node {}", args.node))?;
            println!("{}", node.export_log_jsonl());
            Ok(ExitCode::SUCCESS)
        }

        Command::Receipts(args) => {
            let world = load_world(cli)?;
            let gk = world
                .gatekeepers
                .get(&args.gatekeeper)
                .ok_or_else(|| anyhow!("no gatekeeper {}", args.gatekeeper))?;
            println!("{}", gk.receipt_log_jsonl());
            Ok(ExitCode::SUCCESS)
        }

        Command::Evidence(args) => {
            let world = load_world(cli)?;
            let evidence = match args.kind.as_str() {
                "receipts" => {
                    let gatekeeper = args
                        .gatekeeper
                        .as_ref()
                        .ok_or_else(|| anyhow!("--gatekeeper required for receipt evidence"))?;
                    let gk = world
                        .gatekeepers
                        .get(gatekeeper)
                        .ok_or_else(|| anyhow!("no gatekeeper {gatekeeper}"))?;
                    Evidence::Receipts {
                        receipts: gk.receipt_log().to_vec(),
                    }
                }
                _ => {
                    let reporters = parse_id_list(
                        args.reporters
                            .as_ref()
                            .ok_or_else(|| anyhow!("--reporters required for log evidence"))?,
                    )?;
                    let mut logs = BTreeMap::new();
                    for id in reporters {
                        let node = world
                            .nodes
                            .get(&id)
                            .ok_or_else(|| anyhow!("no node {id}"))?;
                        logs.insert(id, node.export_log(None));
                    }
                    Evidence::NodeLogs { logs }
                }
            };
            emit(cli, &serde_json::to_value(&evidence)?);
            Ok(ExitCode::SUCCESS)
        }

        Command::Vectors => {
            emit(cli, &test_vectors()?);
            Ok(ExitCode::SUCCESS)
        }
    }
}

/// Deterministic toy-group vectors covering encodings, secret sharing,
/// interpolation weights, derivation, and a fixed-nonce signature.
fn test_vectors() -> Result<serde_json::Value> {
    let params = GroupParams::toy();
    let secret = params.scalar_from_u64(5);
    let poly = keynet::crypto::Polynomial::from_coefficients(vec![
        params.scalar_from_u64(5),
        params.scalar_from_u64(3),
    ]);
    let shares: BTreeMap<u32, String> = [1u32, 2]
        .iter()
        .map(|&id| (id, hex::encode(params.encode_scalar(&poly.evaluate(&params, id)))))
        .collect();
    let commitment = keynet::crypto::VssCommitment::from_polynomial(&params, &poly);
    let lambda: BTreeMap<u32, String> = [1u32, 2, 3]
        .iter()
        .map(|&id| {
            let l = keynet::crypto::lagrange_coefficient(&params, id, &[1, 2, 3]).unwrap();
            (id, hex::encode(params.encode_scalar(&l)))
        })
        .collect();
    let root_pk = params.base_mul(&secret);
    let tweak = Tweak::from_scalar(params.scalar_from_u64(3));
    let child = keynet::crypto::derive::apply_tweak_to_element(&params, &root_pk, &tweak);
    let nonce = params.scalar_from_u64(7);
    let signature = schnorr_sign_with_nonce(&params, &secret, &nonce, b"keynet");
    Ok(serde_json::json!({
        "group": {
            "name": params.name(),
            "scalar_width": params.scalar_width(),
            "element_width": params.element_width(),
        },
        "secret_sharing": {
            "polynomial": ["05", "03"],
            "shares": shares,
            "commitments": commitment
                .coefficients()
                .iter()
                .map(|c| hex::encode(params.encode_element(c)))
                .collect::<Vec<_>>(),
        },
        "lagrange_at_zero": { "set": [1, 2, 3], "weights": lambda },
        "derivation": {
            "root_public_key": hex::encode(params.encode_element(&root_pk)),
            "tweak": "03",
            "child_public_key": hex::encode(params.encode_element(&child)),
        },
        "signature": {
            "secret": "05",
            "nonce": "07",
            "message": "keynet",
            "encoded": hex::encode(signature.encode(&params)),
        },
    }))
}
