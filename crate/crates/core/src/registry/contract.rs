//! Contract state held by the chain.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::canonical::ContentHash;
use crate::circuit::DeviceEntry;
use crate::crypto::{CurvePoint, FieldElement, HashDigest};
use crate::proofsys::VerificationKey;
use crate::zkspec::KeyBinding;

#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Address(pub [u8; 20]);

impl Address {
    /// Deterministic: creator account and the height of the deploying block.
    pub fn derive(sender: &str, height: u64) -> Self {
        let digest = Sha256::new()
            .chain_update(b"cdr/address")
            .chain_update((sender.len() as u64).to_le_bytes())
            .chain_update(sender.as_bytes())
            .chain_update(height.to_le_bytes())
            .finalize();
        let mut out = [0u8; 20];
        out.copy_from_slice(&digest[..20]);
        Address(out)
    }
}

impl fmt::Display for Address {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "0x{}", hex::encode(self.0))
    }
}

impl fmt::Debug for Address {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Address({self})")
    }
}

impl FromStr for Address {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bytes = hex::decode(s.trim_start_matches("0x")).map_err(|e| format!("bad address: {e}"))?;
        let arr: [u8; 20] = bytes.try_into().map_err(|_| "address must be 20 bytes".to_string())?;
        Ok(Address(arr))
    }
}

impl Serialize for Address {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for Address {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Deployment parameters of a registration contract.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RegistrationParams {
    pub vk: VerificationKey,
    /// Verification key of the authentication circuit; committed mode only.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub auth_vk: Option<VerificationKey>,
    pub zkvpr_ref: ContentHash,
    pub allowed_issuer_keys: Vec<CurvePoint>,
    /// Whole aux vectors. A zkVP must match one of them exactly.
    pub allowed_aux: Vec<Vec<FieldElement>>,
    pub mode: KeyBinding,
}

/// A registered device. `owner` is the submitting account, so the registry also
/// serves as the set of seen (entry, owner) bindings.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RegistryEntry {
    pub entry: DeviceEntry,
    pub owner: String,
    /// Index of the accepting transaction.
    pub tx_index: u64,
}

/// Data accepted from a registered device.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Provision {
    pub device: DeviceEntry,
    pub payload_hash: HashDigest,
    pub tx_index: u64,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RegistrationContract {
    pub deployer: String,
    pub params: RegistrationParams,
    /// Whether the circuit takes `now_ts` as its last public input.
    pub relative_time: bool,
    pub(super) registry: Vec<RegistryEntry>,
    /// Committed-mode authentications.
    pub(super) authentications: Vec<Provision>,
}

impl RegistrationContract {
    pub fn registry(&self) -> &[RegistryEntry] {
        &self.registry
    }

    pub fn authentications(&self) -> &[Provision] {
        &self.authentications
    }

    pub fn is_registered(&self, entry: &DeviceEntry) -> bool {
        self.registry.iter().any(|e| &e.entry == entry)
    }

    /// Public inputs a zkVP must supply: issuer key, device entry, aux, owner binding
    /// and, with relative time conditions, `now_ts`.
    pub fn expected_inputs(&self) -> usize {
        self.params.vk.num_public
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ApplicationContract {
    pub deployer: String,
    pub registration: super::Address,
    pub(super) provisions: Vec<Provision>,
}

impl ApplicationContract {
    pub fn provisions(&self) -> &[Provision] {
        &self.provisions
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Contract {
    Registration(RegistrationContract),
    Application(ApplicationContract),
}
