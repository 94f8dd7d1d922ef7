//! Reference scenario: a sensor network admitting weather stations.
//!
//! Used by tests, the CLI demo flow and the bench. Three registration conditions
//! over one credential schema: a minimum firmware version, a postcode from a fixed
//! list, and a specific measurement type.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::credential::{attest, Claim, CredentialError, CredentialSchema, IssuerMeta, SchemaAttribute, SchemaBody, VerifiableCredential, SCHEMA_VERSION};
use crate::crypto::{encode::encode_key, keygen, AttributeKind, AttributeValue, FieldElement, SigKeyPair};
use crate::zkspec::{ClaimRequirement, Condition, KeyBinding, ZkSpec};

pub const DEVICE_KEY: &str = "device_key";
pub const FIRMWARE_VERSION: &str = "firmware_version";
pub const POSTCODE: &str = "postcode";
pub const MEASUREMENT_TYPE_ATTR: &str = "measurement_type";
pub const MANUFACTURED_AT: &str = "manufactured_at";

pub const MIN_FIRMWARE: u64 = 5;
pub const POSTCODES: [u64; 10] = [10115, 10117, 10119, 10178, 10179, 10243, 10245, 10247, 10249, 10315];
pub const MEASUREMENT_TYPE: &str = "temperature";
/// 2024-03-01T00:00:00Z
pub const MANUFACTURED: u64 = 1_709_251_200;

pub fn schema() -> CredentialSchema {
    let attrs = [
        (DEVICE_KEY, AttributeKind::Key),
        (FIRMWARE_VERSION, AttributeKind::Uint),
        (POSTCODE, AttributeKind::Uint),
        (MEASUREMENT_TYPE_ATTR, AttributeKind::String),
        (MANUFACTURED_AT, AttributeKind::Date),
    ];
    CredentialSchema::new(SchemaBody {
        name: "weather-station".into(),
        version: SCHEMA_VERSION.into(),
        issuer: IssuerMeta {
            name: "Station Manufacturer".into(),
            role: "manufacturer".into(),
        },
        attributes: attrs
            .iter()
            .enumerate()
            .map(|(i, (name, kind))| SchemaAttribute {
                attribute_id: i as u32,
                name: (*name).into(),
                kind: *kind,
            })
            .collect(),
    })
    .expect("reference schema is valid")
}

fn attr(schema: &CredentialSchema, name: &str) -> u32 {
    schema.attribute_by_name(name).expect("reference attribute").attribute_id
}

fn spec(schema: &CredentialSchema, binding: KeyBinding, attribute: &str, condition: Condition) -> ZkSpec {
    ZkSpec::new(
        schema.schema_id,
        attr(schema, DEVICE_KEY),
        binding,
        vec![ClaimRequirement {
            attribute_id: attr(schema, attribute),
            condition,
        }],
    )
}

pub fn range_spec(schema: &CredentialSchema, binding: KeyBinding) -> ZkSpec {
    spec(
        schema,
        binding,
        FIRMWARE_VERSION,
        Condition::Range {
            min: Some(MIN_FIRMWARE),
            max: None,
        },
    )
}

pub fn membership_spec(schema: &CredentialSchema, binding: KeyBinding) -> ZkSpec {
    membership_spec_with(schema, binding, &POSTCODES)
}

pub fn membership_spec_with(schema: &CredentialSchema, binding: KeyBinding, set: &[u64]) -> ZkSpec {
    spec(
        schema,
        binding,
        POSTCODE,
        Condition::Membership {
            set: set.iter().map(|p| AttributeValue::Uint(*p)).collect(),
        },
    )
}

pub fn equality_spec(schema: &CredentialSchema, binding: KeyBinding) -> ZkSpec {
    spec(
        schema,
        binding,
        MEASUREMENT_TYPE_ATTR,
        Condition::Equality {
            target: AttributeValue::String(MEASUREMENT_TYPE.into()),
        },
    )
}

/// The three registration conditions benchmarked side by side.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConditionKind {
    Range,
    Membership,
    Equality,
}

impl ConditionKind {
    pub const ALL: [ConditionKind; 3] = [ConditionKind::Range, ConditionKind::Membership, ConditionKind::Equality];

    pub fn as_str(&self) -> &'static str {
        match self {
            ConditionKind::Range => "range",
            ConditionKind::Membership => "membership",
            ConditionKind::Equality => "equality",
        }
    }

    pub fn spec(&self, schema: &CredentialSchema, binding: KeyBinding) -> ZkSpec {
        match self {
            ConditionKind::Range => range_spec(schema, binding),
            ConditionKind::Membership => membership_spec(schema, binding),
            ConditionKind::Equality => equality_spec(schema, binding),
        }
    }
}

impl fmt::Display for ConditionKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ConditionKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "range" => Ok(ConditionKind::Range),
            "membership" => Ok(ConditionKind::Membership),
            "equality" => Ok(ConditionKind::Equality),
            _ => Err(format!("unknown condition {s:?} (expected range, membership or equality)")),
        }
    }
}

fn derived_keypair(label: &str, index: u64) -> SigKeyPair {
    let seed: [u8; 32] = Sha256::new()
        .chain_update(b"cdr/scenario/")
        .chain_update(label.as_bytes())
        .chain_update(index.to_le_bytes())
        .finalize()
        .into();
    keygen(&seed).expect("derived seed")
}

pub fn issuer() -> SigKeyPair {
    derived_keypair("issuer", 0)
}

pub fn other_issuer(n: u64) -> SigKeyPair {
    derived_keypair("issuer", n + 1)
}

pub fn device(n: u64) -> SigKeyPair {
    derived_keypair("device", n)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DeviceProfile {
    pub firmware_version: u64,
    pub postcode: u64,
    pub measurement_type: String,
    pub manufactured_at: u64,
}

impl DeviceProfile {
    /// Satisfies all three reference conditions.
    pub fn eligible() -> Self {
        DeviceProfile {
            firmware_version: 7,
            postcode: POSTCODES[3],
            measurement_type: MEASUREMENT_TYPE.into(),
            manufactured_at: MANUFACTURED,
        }
    }
}

/// Subject identifier derived from the device key.
pub fn subject_of(device: &SigKeyPair) -> FieldElement {
    encode_key(&device.public)
}

pub fn claims(schema: &CredentialSchema, subject: FieldElement, device: &SigKeyPair, p: &DeviceProfile) -> Vec<Claim> {
    let values = [
        (DEVICE_KEY, AttributeValue::Key(device.public)),
        (FIRMWARE_VERSION, AttributeValue::Uint(p.firmware_version)),
        (POSTCODE, AttributeValue::Uint(p.postcode)),
        (MEASUREMENT_TYPE_ATTR, AttributeValue::String(p.measurement_type.clone())),
        (MANUFACTURED_AT, AttributeValue::Date(p.manufactured_at)),
    ];
    values
        .into_iter()
        .map(|(name, value)| Claim {
            subject_id: subject,
            attribute_id: attr(schema, name),
            value,
        })
        .collect()
}

pub fn credential(
    schema: &CredentialSchema,
    issuer: &SigKeyPair,
    device: &SigKeyPair,
    profile: &DeviceProfile,
) -> Result<VerifiableCredential, CredentialError> {
    attest(&claims(schema, subject_of(device), device, profile), issuer, schema)
}

pub fn eligible_credential(device: &SigKeyPair) -> VerifiableCredential {
    credential(&schema(), &issuer(), device, &DeviceProfile::eligible()).expect("reference credential")
}
