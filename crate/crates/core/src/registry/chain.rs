//! Deterministic single-writer chain. Every transaction gets its own block.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use super::contract::{
    Address, ApplicationContract, Contract, Provision, RegistrationContract, RegistrationParams, RegistryEntry,
};
use super::{cost, RegistryError, ZkVp};
use crate::canonical::{to_canonical_json, ContentHash};
use crate::circuit::auth::{auth_circuit_id, auth_public_inputs};
use crate::circuit::{owner_binding, DeviceEntry};
use crate::crypto::{hash_bytes, verify_sig, CurvePoint, HashDigest, Signature};
use crate::proofsys::{self, Proof};
use crate::zkspec::KeyBinding;

pub const CHAIN_FORMAT: &str = "cdr-chain/1";
pub const DEFAULT_BLOCK_TIME: u64 = 12;
/// 2026-01-01T00:00:00Z
pub const DEFAULT_GENESIS: u64 = 1_767_225_600;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChainConfig {
    pub genesis_timestamp: u64,
    pub block_time: u64,
}

impl Default for ChainConfig {
    fn default() -> Self {
        ChainConfig {
            genesis_timestamp: DEFAULT_GENESIS,
            block_time: DEFAULT_BLOCK_TIME,
        }
    }
}

mod hex_bytes {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &[u8], s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&hex::encode(v))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<u8>, D::Error> {
        hex::decode(String::deserialize(d)?).map_err(serde::de::Error::custom)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Tx {
    DeployRegistration {
        sender: String,
        params: RegistrationParams,
    },
    SubmitRegistration {
        sender: String,
        contract: Address,
        zkvp: ZkVp,
    },
    DeployApplication {
        sender: String,
        registration: Address,
    },
    ProvisionData {
        sender: String,
        app: Address,
        #[serde(with = "hex_bytes")]
        payload: Vec<u8>,
        device_key: CurvePoint,
        signature: Signature,
    },
    AuthenticateCommitted {
        sender: String,
        contract: Address,
        commitment: HashDigest,
        #[serde(with = "hex_bytes")]
        payload: Vec<u8>,
        proof: Proof,
    },
}

impl Tx {
    pub fn kind(&self) -> &'static str {
        match self {
            Tx::DeployRegistration { .. } => "deploy_registration",
            Tx::SubmitRegistration { .. } => "submit_registration",
            Tx::DeployApplication { .. } => "deploy_application",
            Tx::ProvisionData { .. } => "provision_data",
            Tx::AuthenticateCommitted { .. } => "authenticate_committed",
        }
    }

    pub fn sender(&self) -> &str {
        match self {
            Tx::DeployRegistration { sender, .. }
            | Tx::SubmitRegistration { sender, .. }
            | Tx::DeployApplication { sender, .. }
            | Tx::ProvisionData { sender, .. }
            | Tx::AuthenticateCommitted { sender, .. } => sender,
        }
    }

    pub fn hash(&self) -> ContentHash {
        ContentHash::of(to_canonical_json(self).as_bytes())
    }

    fn encoded_len(&self) -> usize {
        to_canonical_json(self).len()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RejectReason {
    ProofInvalid,
    InputNotAllowed,
    OwnerMismatch,
    StaleTimestamp,
    DuplicateDevice,
    UnregisteredDevice,
    BadSignature,
    UnknownCommitment,
    UnknownContract,
    WrongMode,
    InvalidDeployment,
}

impl RejectReason {
    pub fn as_str(&self) -> &'static str {
        match self {
            RejectReason::ProofInvalid => "proof_invalid",
            RejectReason::InputNotAllowed => "input_not_allowed",
            RejectReason::OwnerMismatch => "owner_mismatch",
            RejectReason::StaleTimestamp => "stale_timestamp",
            RejectReason::DuplicateDevice => "duplicate_device",
            RejectReason::UnregisteredDevice => "unregistered_device",
            RejectReason::BadSignature => "bad_signature",
            RejectReason::UnknownCommitment => "unknown_commitment",
            RejectReason::UnknownContract => "unknown_contract",
            RejectReason::WrongMode => "wrong_mode",
            RejectReason::InvalidDeployment => "invalid_deployment",
        }
    }
}

impl fmt::Display for RejectReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "status", content = "reason", rename_all = "snake_case")]
pub enum TxStatus {
    Accepted,
    Rejected(RejectReason),
}

impl TxStatus {
    pub fn is_accepted(&self) -> bool {
        matches!(self, TxStatus::Accepted)
    }

    pub fn reason(&self) -> Option<RejectReason> {
        match self {
            TxStatus::Accepted => None,
            TxStatus::Rejected(r) => Some(*r),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TxReceipt {
    pub index: u64,
    pub tx_hash: ContentHash,
    pub kind: String,
    pub sender: String,
    pub height: u64,
    pub timestamp: u64,
    #[serde(flatten)]
    pub status: TxStatus,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub detail: String,
    pub cost_units: u64,
    /// Created contract for deployments, target contract otherwise.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub contract: Option<Address>,
}

impl TxReceipt {
    pub fn is_accepted(&self) -> bool {
        self.status.is_accepted()
    }
}

impl fmt::Display for TxReceipt {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "tx        {} ({})", self.index, self.kind)?;
        writeln!(f, "hash      {}", self.tx_hash)?;
        writeln!(f, "block     {} @ {}", self.height, self.timestamp)?;
        match self.status {
            TxStatus::Accepted => writeln!(f, "status    accepted")?,
            TxStatus::Rejected(r) => writeln!(f, "status    rejected({r})")?,
        }
        if !self.detail.is_empty() {
            writeln!(f, "detail    {}", self.detail)?;
        }
        if let Some(c) = self.contract {
            writeln!(f, "contract  {c}")?;
        }
        write!(f, "cost      {} units", self.cost_units)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChainState {
    pub height: u64,
    pub timestamp: u64,
    pub contracts: BTreeMap<Address, Contract>,
    pub receipts: Vec<TxReceipt>,
}

/// Versioned log file. Import replays the transactions and checks the final hash.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChainExport {
    pub format: String,
    pub config: ChainConfig,
    pub txs: Vec<Tx>,
    pub state_hash: ContentHash,
}

struct Outcome {
    status: TxStatus,
    detail: String,
    cost: u64,
    contract: Option<Address>,
}

impl Outcome {
    fn accept(cost: u64, contract: Option<Address>) -> Self {
        Outcome {
            status: TxStatus::Accepted,
            detail: String::new(),
            cost,
            contract,
        }
    }

    fn reject(reason: RejectReason, detail: impl Into<String>, cost: u64, contract: Option<Address>) -> Self {
        Outcome {
            status: TxStatus::Rejected(reason),
            detail: detail.into(),
            cost,
            contract,
        }
    }
}

pub struct Chain {
    config: ChainConfig,
    state: ChainState,
    log: Vec<Tx>,
}

impl Default for Chain {
    fn default() -> Self {
        Chain::new(ChainConfig::default())
    }
}

impl Chain {
    pub fn new(config: ChainConfig) -> Self {
        Chain {
            config,
            state: ChainState {
                height: 0,
                timestamp: config.genesis_timestamp,
                contracts: BTreeMap::new(),
                receipts: Vec::new(),
            },
            log: Vec::new(),
        }
    }

    pub fn config(&self) -> ChainConfig {
        self.config
    }

    pub fn height(&self) -> u64 {
        self.state.height
    }

    pub fn timestamp(&self) -> u64 {
        self.state.timestamp
    }

    /// Timestamp of the block the next transaction lands in.
    pub fn next_timestamp(&self) -> u64 {
        self.state.timestamp + self.config.block_time
    }

    pub fn state(&self) -> &ChainState {
        &self.state
    }

    pub fn log(&self) -> &[Tx] {
        &self.log
    }

    pub fn receipts(&self) -> &[TxReceipt] {
        &self.state.receipts
    }

    pub fn state_hash(&self) -> ContentHash {
        #[derive(Serialize)]
        struct View<'a> {
            config: &'a ChainConfig,
            state: &'a ChainState,
        }
        ContentHash::of(
            to_canonical_json(&View {
                config: &self.config,
                state: &self.state,
            })
            .as_bytes(),
        )
    }

    pub fn state_json(&self) -> String {
        to_canonical_json(&self.state)
    }

    pub fn contract(&self, addr: &Address) -> Result<&Contract, RegistryError> {
        self.state.contracts.get(addr).ok_or(RegistryError::UnknownContract(*addr))
    }

    pub fn registration(&self, addr: &Address) -> Result<&RegistrationContract, RegistryError> {
        match self.contract(addr)? {
            Contract::Registration(c) => Ok(c),
            Contract::Application(_) => Err(RegistryError::WrongContractType(*addr)),
        }
    }

    pub fn application(&self, addr: &Address) -> Result<&ApplicationContract, RegistryError> {
        match self.contract(addr)? {
            Contract::Application(c) => Ok(c),
            Contract::Registration(_) => Err(RegistryError::WrongContractType(*addr)),
        }
    }

    pub fn is_registered(&self, addr: &Address, entry: &DeviceEntry) -> Result<bool, RegistryError> {
        Ok(self.registration(addr)?.is_registered(entry))
    }

    /// Applies `tx` in a new block and records it, whatever the outcome.
    pub fn submit(&mut self, tx: Tx) -> TxReceipt {
        self.state.height += 1;
        self.state.timestamp += self.config.block_time;
        let index = self.log.len() as u64;
        let outcome = self.apply(&tx, index);
        let receipt = TxReceipt {
            index,
            tx_hash: tx.hash(),
            kind: tx.kind().into(),
            sender: tx.sender().into(),
            height: self.state.height,
            timestamp: self.state.timestamp,
            status: outcome.status,
            detail: outcome.detail,
            cost_units: outcome.cost,
            contract: outcome.contract,
        };
        self.state.receipts.push(receipt.clone());
        self.log.push(tx);
        receipt
    }

    pub fn deploy_registration(&mut self, sender: &str, params: RegistrationParams) -> Result<Address, RegistryError> {
        let r = self.submit(Tx::DeployRegistration {
            sender: sender.into(),
            params,
        });
        match r.status {
            TxStatus::Accepted => Ok(r.contract.expect("deployment receipt carries the address")),
            TxStatus::Rejected(reason) => Err(RegistryError::Rejected { reason, detail: r.detail }),
        }
    }

    pub fn deploy_application(&mut self, sender: &str, registration: Address) -> Result<Address, RegistryError> {
        let r = self.submit(Tx::DeployApplication {
            sender: sender.into(),
            registration,
        });
        match r.status {
            TxStatus::Accepted => Ok(r.contract.expect("deployment receipt carries the address")),
            TxStatus::Rejected(reason) => Err(RegistryError::Rejected { reason, detail: r.detail }),
        }
    }

    pub fn submit_registration(&mut self, contract: Address, zkvp: ZkVp, sender: &str) -> TxReceipt {
        self.submit(Tx::SubmitRegistration {
            sender: sender.into(),
            contract,
            zkvp,
        })
    }

    pub fn provision_data(
        &mut self,
        app: Address,
        payload: &[u8],
        signature: Signature,
        device_key: CurvePoint,
        sender: &str,
    ) -> TxReceipt {
        self.submit(Tx::ProvisionData {
            sender: sender.into(),
            app,
            payload: payload.to_vec(),
            device_key,
            signature,
        })
    }

    pub fn authenticate_committed(
        &mut self,
        contract: Address,
        commitment: HashDigest,
        payload: &[u8],
        proof: Proof,
        sender: &str,
    ) -> TxReceipt {
        self.submit(Tx::AuthenticateCommitted {
            sender: sender.into(),
            contract,
            commitment,
            payload: payload.to_vec(),
            proof,
        })
    }

    fn apply(&mut self, tx: &Tx, index: u64) -> Outcome {
        let intrinsic = cost::TX_BASE + cost::calldata(tx.encoded_len());
        match tx {
            Tx::DeployRegistration { sender, params } => self.apply_deploy(sender, params, intrinsic),
            Tx::SubmitRegistration { sender, contract, zkvp } => self.apply_submit(sender, *contract, zkvp, index),
            Tx::DeployApplication { sender, registration } => {
                let reg = match self.registration(registration) {
                    Ok(r) => r,
                    Err(e) => return Outcome::reject(RejectReason::UnknownContract, e.to_string(), intrinsic, None),
                };
                if reg.params.mode != KeyBinding::Plain {
                    return Outcome::reject(
                        RejectReason::WrongMode,
                        "application contracts need a plain-key registration contract",
                        intrinsic,
                        None,
                    );
                }
                let addr = Address::derive(sender, self.state.height);
                self.state.contracts.insert(
                    addr,
                    Contract::Application(ApplicationContract {
                        deployer: sender.clone(),
                        registration: *registration,
                        provisions: Vec::new(),
                    }),
                );
                Outcome::accept(intrinsic + cost::storage(20 + sender.len()), Some(addr))
            }
            Tx::ProvisionData {
                app,
                payload,
                device_key,
                signature,
                ..
            } => self.apply_provision(*app, payload, device_key, signature, index, intrinsic),
            Tx::AuthenticateCommitted {
                contract,
                commitment,
                payload,
                proof,
                ..
            } => self.apply_authenticate(*contract, commitment, payload, proof, index, intrinsic),
        }
    }

    fn apply_deploy(&mut self, sender: &str, p: &RegistrationParams, intrinsic: u64) -> Outcome {
        let invalid = |d: &str| Outcome::reject(RejectReason::InvalidDeployment, d, intrinsic, None);
        if p.allowed_issuer_keys.is_empty() {
            return invalid("allowed issuer key set is empty");
        }
        if p.allowed_aux.is_empty() {
            return invalid("allowed aux set is empty");
        }
        let aux_len = p.allowed_aux[0].len();
        if p.allowed_aux.iter().any(|a| a.len() != aux_len) {
            return invalid("allowed aux vectors differ in length");
        }
        let entry_len = match p.mode {
            KeyBinding::Plain => 2,
            KeyBinding::Committed => 1,
        };
        let fixed = 2 + entry_len + aux_len + 1;
        let relative_time = match p.vk.num_public.checked_sub(fixed) {
            Some(0) => false,
            Some(1) => true,
            _ => return invalid("verification key does not fit the public input layout"),
        };
        match (p.mode, &p.auth_vk) {
            (KeyBinding::Plain, None) => {}
            (KeyBinding::Plain, Some(_)) => return invalid("plain-key contracts take no authentication key"),
            (KeyBinding::Committed, None) => return invalid("committed-key contracts need an authentication key"),
            (KeyBinding::Committed, Some(a)) => {
                if a.spec_id != auth_circuit_id() || a.num_public != 2 {
                    return invalid("authentication key is not for the authentication circuit");
                }
            }
        }
        let addr = Address::derive(sender, self.state.height);
        let stored = p.vk.size_bytes()
            + p.auth_vk.as_ref().map_or(0, |k| k.size_bytes())
            + 32
            + 64 * p.allowed_issuer_keys.len()
            + 32 * aux_len * p.allowed_aux.len();
        self.state.contracts.insert(
            addr,
            Contract::Registration(RegistrationContract {
                deployer: sender.into(),
                params: p.clone(),
                relative_time,
                registry: Vec::new(),
                authentications: Vec::new(),
            }),
        );
        Outcome::accept(intrinsic + cost::storage(stored), Some(addr))
    }

    fn apply_submit(&mut self, sender: &str, addr: Address, zkvp: &ZkVp, index: u64) -> Outcome {
        let fields = zkvp.public.to_field_vec();
        // Calldata for a verifier contract: the proof and the inputs as 32-byte words.
        let intrinsic = cost::TX_BASE + cost::calldata(zkvp.proof.size_bytes() + 32 * fields.len());
        let block_ts = self.state.timestamp;
        let block_time = self.config.block_time;
        let c = match self.state.contracts.get_mut(&addr) {
            Some(Contract::Registration(c)) => c,
            Some(_) => return Outcome::reject(RejectReason::UnknownContract, "not a registration contract", intrinsic, None),
            None => return Outcome::reject(RejectReason::UnknownContract, "no contract at this address", intrinsic, None),
        };
        let reject = |reason, detail: &str| Outcome::reject(reason, detail, intrinsic, Some(addr));
        let p = &zkvp.public;
        if p.device.binding() != c.params.mode {
            return reject(RejectReason::InputNotAllowed, "device entry does not match the contract mode");
        }
        if p.now_ts.is_some() != c.relative_time {
            return reject(RejectReason::InputNotAllowed, "timestamp presence does not match the circuit");
        }
        if fields.len() != c.params.vk.num_public {
            return reject(RejectReason::InputNotAllowed, "wrong number of public inputs");
        }
        match owner_binding(sender) {
            Ok(b) if b == p.owner_binding => {}
            _ => return reject(RejectReason::OwnerMismatch, "owner binding is not the sender's"),
        }
        if !c.params.allowed_aux.contains(&p.aux) {
            return reject(RejectReason::InputNotAllowed, "aux vector is not whitelisted");
        }
        if !c.params.allowed_issuer_keys.contains(&p.issuer_pubkey) {
            return reject(RejectReason::InputNotAllowed, "issuer key is not whitelisted");
        }
        if let Some(now) = p.now_ts {
            if now.abs_diff(block_ts) > block_time {
                return reject(RejectReason::StaleTimestamp, "now_ts is outside one block time of the chain");
            }
        }
        if c.is_registered(&p.device) {
            return reject(RejectReason::DuplicateDevice, "device is already registered");
        }
        let charged = cost::proof_call(&c.params.vk, &zkvp.proof, fields.len(), 0);
        let scheme = c.params.vk.scheme;
        match proofsys::verify(scheme, &zkvp.proof, &fields, &c.params.vk) {
            Ok(true) => {}
            Ok(false) => return Outcome::reject(RejectReason::ProofInvalid, "proof does not verify", charged, Some(addr)),
            Err(e) => return Outcome::reject(RejectReason::ProofInvalid, e.to_string(), charged, Some(addr)),
        }
        let entry_bytes = 32 * p.device.fields().len() + 32;
        c.registry.push(RegistryEntry {
            entry: p.device.clone(),
            owner: sender.into(),
            tx_index: index,
        });
        Outcome::accept(charged + cost::storage(entry_bytes), Some(addr))
    }

    fn apply_provision(
        &mut self,
        app: Address,
        payload: &[u8],
        device_key: &CurvePoint,
        signature: &Signature,
        index: u64,
        intrinsic: u64,
    ) -> Outcome {
        let reg_addr = match self.application(&app) {
            Ok(a) => a.registration,
            Err(e) => return Outcome::reject(RejectReason::UnknownContract, e.to_string(), intrinsic, None),
        };
        let entry = DeviceEntry::Key(*device_key);
        if !self.is_registered(&reg_addr, &entry).unwrap_or(false) {
            return Outcome::reject(RejectReason::UnregisteredDevice, "device key is not registered", intrinsic, Some(app));
        }
        let charged = intrinsic + cost::SIG_CHECK;
        let ok = hash_bytes(payload)
            .and_then(|h| verify_sig(device_key, &[h.value()], signature).map(|ok| (h, ok)));
        let payload_hash = match ok {
            Ok((h, true)) => h,
            _ => return Outcome::reject(RejectReason::BadSignature, "signature does not cover this payload", charged, Some(app)),
        };
        if let Some(Contract::Application(a)) = self.state.contracts.get_mut(&app) {
            a.provisions.push(Provision {
                device: entry,
                payload_hash,
                tx_index: index,
            });
        }
        Outcome::accept(charged + cost::storage(32), Some(app))
    }

    fn apply_authenticate(
        &mut self,
        addr: Address,
        commitment: &HashDigest,
        payload: &[u8],
        proof: &Proof,
        index: u64,
        intrinsic: u64,
    ) -> Outcome {
        let c = match self.state.contracts.get_mut(&addr) {
            Some(Contract::Registration(c)) => c,
            _ => return Outcome::reject(RejectReason::UnknownContract, "no registration contract at this address", intrinsic, None),
        };
        let Some(auth_vk) = c.params.auth_vk.as_ref().filter(|_| c.params.mode == KeyBinding::Committed) else {
            return Outcome::reject(RejectReason::WrongMode, "contract does not use committed keys", intrinsic, Some(addr));
        };
        let entry = DeviceEntry::Commitment(*commitment);
        if !c.is_registered(&entry) {
            return Outcome::reject(RejectReason::UnknownCommitment, "commitment is not registered", intrinsic, Some(addr));
        }
        let Ok(payload_hash) = hash_bytes(payload) else {
            return Outcome::reject(RejectReason::ProofInvalid, "payload cannot be hashed", intrinsic, Some(addr));
        };
        let inputs = auth_public_inputs(commitment, &payload_hash);
        let charged = cost::proof_call(auth_vk, proof, inputs.len(), payload.len());
        if !matches!(proofsys::verify(auth_vk.scheme, proof, &inputs, auth_vk), Ok(true)) {
            return Outcome::reject(RejectReason::ProofInvalid, "authentication proof does not verify", charged, Some(addr));
        }
        c.authentications.push(Provision {
            device: entry,
            payload_hash,
            tx_index: index,
        });
        Outcome::accept(charged + cost::storage(32), Some(addr))
    }

    pub fn export(&self) -> ChainExport {
        ChainExport {
            format: CHAIN_FORMAT.into(),
            config: self.config,
            txs: self.log.clone(),
            state_hash: self.state_hash(),
        }
    }

    pub fn replay(config: ChainConfig, txs: impl IntoIterator<Item = Tx>) -> Chain {
        let mut chain = Chain::new(config);
        for tx in txs {
            chain.submit(tx);
        }
        chain
    }

    /// Replays the log and refuses it if the resulting state hash differs.
    pub fn import(export: ChainExport) -> Result<Chain, RegistryError> {
        if export.format != CHAIN_FORMAT {
            return Err(RegistryError::Format(format!("unsupported chain format {:?}", export.format)));
        }
        let chain = Chain::replay(export.config, export.txs);
        let actual = chain.state_hash();
        if actual != export.state_hash {
            return Err(RegistryError::ReplayMismatch {
                expected: export.state_hash,
                actual,
            });
        }
        Ok(chain)
    }

    /// Every registry entry traces back to exactly one accepted registration of that
    /// entry on that contract, and every accepted registration left exactly one entry.
    pub fn check_registry_soundness(&self) -> Result<(), String> {
        let mut accepted = Vec::new();
        for (i, (tx, r)) in self.log.iter().zip(&self.state.receipts).enumerate() {
            if let (Tx::SubmitRegistration { contract, zkvp, .. }, true) = (tx, r.is_accepted()) {
                accepted.push((i as u64, *contract, zkvp.public.device.clone()));
            }
        }
        let mut entries = Vec::new();
        for (addr, c) in &self.state.contracts {
            if let Contract::Registration(c) = c {
                for e in &c.registry {
                    entries.push((e.tx_index, *addr, e.entry.clone()));
                }
            }
        }
        entries.sort_by_key(|e| e.0);
        if entries != accepted {
            return Err(format!(
                "{} registry entries against {} accepted registrations",
                entries.len(),
                accepted.len()
            ));
        }
        Ok(())
    }
}
