//! `cdr`: command-line front end for the four roles of device registration.
//!
//! * `issuer` creates keys, publishes the credential schema and attests device claims.
//! * `init` authors specs, runs the key setup, publishes the zkVPR and deploys the
//!   registration contract.
//! * `owner` fetches and checks published artifacts, proves and registers.
//! * `chain` inspects and exports the chain.
//!
//! By default the registry and the chain live in the workspace. With `--node` (or
//! `CDR_NODE`) both are served by a `cdr-node`; proving always stays local.
//!
//! Exit codes: 0 success, 1 rejected by a check, 2 usage or configuration error.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

pub mod backend;
mod cmd;
pub mod error;
pub mod workspace;

pub use error::{CmdResult, Failure};

use cdr_core::proofsys::{SchemeId, DEFAULT_SRS_MAX_CONSTRAINTS};
use cdr_core::registry::Address;
use cdr_core::scenario::ConditionKind;
use cdr_core::zkspec::KeyBinding;

#[derive(Parser, Debug)]
#[command(name = "cdr", version, about = "Credential-based device registration with zero-knowledge presentations")]
pub struct Cli {
    /// Workspace root.
    #[arg(long, short = 'w', env = "CDR_WORKSPACE", default_value = ".", global = true)]
    pub workspace: PathBuf,
    /// Use a cdr-node at this URL for the registry and the chain.
    #[arg(long, env = "CDR_NODE", global = true)]
    pub node: Option<String>,
    /// Seed for all randomness; OS entropy if absent.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Create the workspace directories.
    Workspace,
    /// Generate a signing key (devices, issuers).
    Keygen(KeygenArgs),
    /// Issuer keys, schemas and credentials.
    #[command(subcommand)]
    Issuer(IssuerCmd),
    /// Initiator: specs, reference strings and contract deployment.
    #[command(subcommand)]
    Init(InitCmd),
    /// Device owner commands.
    #[command(subcommand)]
    Owner(OwnerCmd),
    /// Inspect and verify the chain.
    #[command(subcommand)]
    Chain(ChainCmd),
    /// Time the condition x scheme matrix.
    Bench(BenchArgs),
}

#[derive(Args, Debug)]
pub struct KeygenArgs {
    #[arg(long)]
    pub name: String,
}

#[derive(Subcommand, Debug)]
pub enum IssuerCmd {
    /// Generate the issuer signing key.
    Keygen(KeygenArgs),
    /// Publish a credential schema (the weather-station schema unless --from is given).
    PublishSchema {
        #[arg(long)]
        from: Option<PathBuf>,
    },
    /// Sign claims about a device into a credential in the wallet.
    Attest {
        /// Issuer key name.
        #[arg(long)]
        issuer: String,
        /// Device key name; fills key attributes and the subject id.
        #[arg(long)]
        device: String,
        /// `attribute=value`, once per non-key attribute.
        #[arg(long = "claim", value_name = "NAME=VALUE")]
        claims: Vec<String>,
        #[arg(long)]
        schema: Option<PathBuf>,
        /// Wallet file, default wallet/<device>.vc.json.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check a wallet credential against an issuer key.
    Verify {
        #[arg(long)]
        wallet: PathBuf,
        #[arg(long)]
        issuer: String,
        #[arg(long)]
        schema: Option<PathBuf>,
    },
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum Binding {
    Plain,
    Committed,
}

impl From<Binding> for KeyBinding {
    fn from(b: Binding) -> Self {
        match b {
            Binding::Plain => KeyBinding::Plain,
            Binding::Committed => KeyBinding::Committed,
        }
    }
}

#[derive(Subcommand, Debug)]
pub enum InitCmd {
    /// Write one of the reference specs (firmware range, postcode membership,
    /// measurement-type equality) to a file for editing or direct use.
    Spec {
        #[arg(long)]
        condition: ConditionKind,
        #[arg(long, value_enum, default_value = "plain")]
        binding: Binding,
        /// Default artifacts/specs/<condition>-<binding>.json.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        schema: Option<PathBuf>,
    },
    /// Generate a universal SRS.
    Srs {
        #[arg(long, default_value_t = DEFAULT_SRS_MAX_CONSTRAINTS)]
        max_constraints: usize,
        /// Ceremony entropy; random if absent.
        #[arg(long)]
        entropy: Option<String>,
        #[arg(long, default_value = "artifacts/srs.bin")]
        out: PathBuf,
    },
    /// Compile, set up keys, publish the zkVPR and deploy the registration contract.
    Setup {
        #[arg(long)]
        spec: PathBuf,
        #[arg(long)]
        scheme: SchemeId,
        /// SRS file; required for universal_setup.
        #[arg(long)]
        srs: Option<PathBuf>,
        /// Accepted issuer key names.
        #[arg(long = "issuer", required = true)]
        issuers: Vec<String>,
        /// Deployment name, default <spec id>-<scheme>.
        #[arg(long)]
        name: Option<String>,
        #[arg(long, default_value = "0xinitiator")]
        account: String,
        #[arg(long)]
        schema: Option<PathBuf>,
    },
}

#[derive(Subcommand, Debug)]
pub enum OwnerCmd {
    /// Fetch and check the zkVPR artifacts, re-compile the zkSpec and prove.
    Prove {
        #[arg(long)]
        zkvpr: cdr_core::canonical::ContentHash,
        /// Device name; selects wallet/<device>.vc.json and the output file.
        #[arg(long)]
        device: String,
        #[arg(long)]
        wallet: Option<PathBuf>,
        /// Account that will submit the registration.
        #[arg(long)]
        account: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Submit a presentation to a registration contract.
    Register {
        #[arg(long)]
        contract: Address,
        #[arg(long)]
        zkvp: PathBuf,
        #[arg(long)]
        account: String,
    },
    /// Authenticate a payload under a committed device key.
    Authenticate {
        #[arg(long)]
        zkvpr: cdr_core::canonical::ContentHash,
        #[arg(long)]
        contract: Address,
        #[arg(long)]
        device: String,
        #[arg(long)]
        payload: String,
        #[arg(long)]
        account: String,
    },
    /// Send device-signed data to an application contract (plain key binding).
    Provision {
        #[arg(long)]
        app: Address,
        #[arg(long)]
        device: String,
        #[arg(long)]
        payload: String,
        #[arg(long)]
        account: String,
    },
}

#[derive(Subcommand, Debug)]
pub enum ChainCmd {
    /// Height, time and state hash.
    Status,
    /// Transaction receipts.
    Receipts {
        #[arg(long)]
        json: bool,
    },
    /// Registry records.
    Records,
    /// A contract's state as JSON.
    Contract { addr: Address },
    /// Deploy an application contract gated by a registration contract.
    DeployApp {
        #[arg(long)]
        registration: Address,
        #[arg(long, default_value = "0xinitiator")]
        account: String,
    },
    /// Whether a device key (or commitment) is registered.
    IsRegistered {
        #[arg(long)]
        contract: Address,
        /// Device key name.
        #[arg(long, group = "entry")]
        device: Option<String>,
        /// Device public key hex.
        #[arg(long, group = "entry")]
        key: Option<String>,
        /// Committed key hex.
        #[arg(long, group = "entry")]
        commitment: Option<String>,
    },
    /// Write the transaction log.
    Export {
        #[arg(long, default_value = "artifacts/chain-export.json")]
        out: PathBuf,
    },
    /// Replay a transaction log and compare its state hash (the live chain's if no file).
    Verify {
        #[arg(long)]
        file: Option<PathBuf>,
    },
}

#[derive(Args, Debug)]
pub struct BenchArgs {
    #[arg(long, value_delimiter = ',', default_values = ["per_circuit_setup", "universal_setup"])]
    pub schemes: Vec<SchemeId>,
    #[arg(long, value_delimiter = ',', default_values = ["range", "membership", "equality"])]
    pub conditions: Vec<ConditionKind>,
    /// Repetitions per cell; times are medians.
    #[arg(long, default_value_t = 1)]
    pub repeat: usize,
    #[arg(long, default_value_t = DEFAULT_SRS_MAX_CONSTRAINTS)]
    pub srs_max_constraints: usize,
    /// Assert the scheme trade-off orderings; exit 1 if any fails.
    #[arg(long)]
    pub check: bool,
    /// Report file.
    #[arg(long, default_value = "artifacts/bench.json")]
    pub json: PathBuf,
}

pub fn run(cli: Cli) -> CmdResult {
    let ws = workspace::Workspace::open(&cli.workspace)?;
    let ctx = cmd::Ctx {
        ws,
        node: cli.node,
        seed: cli.seed,
    };
    match cli.command {
        Command::Workspace => {
            println!("workspace {}", ctx.ws.root().display());
            Ok(())
        }
        Command::Keygen(a) => cmd::issuer::keygen(&ctx, &a.name),
        Command::Issuer(c) => cmd::issuer::run(&ctx, c),
        Command::Init(c) => cmd::init::run(&ctx, c),
        Command::Owner(c) => cmd::owner::run(&ctx, c),
        Command::Chain(c) => cmd::chain::run(&ctx, c),
        Command::Bench(a) => cmd::bench::run(&ctx, a),
    }
}
