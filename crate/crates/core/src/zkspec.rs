//! Registration conditions (zkSpec) and the zkVPR bundle that publishes them.
//!
//! A spec is kept in normal form: requirements sorted, membership sets sorted and
//! deduplicated. Equal specs therefore have equal canonical bytes and equal ids.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::canonical::{to_canonical_json, to_canonical_json_pretty, ContentHash};
use crate::credential::CredentialSchema;
use crate::crypto::{encode_value, hash_fields, AttributeKind, AttributeValue, CurvePoint, FieldElement, HashDigest};
use crate::proofsys::{ProvingKey, SchemeId};

pub const SPEC_VERSION: &str = "cdr-zkspec/1";
pub const ZKVPR_VERSION: &str = "cdr-zkvpr/1";
pub const DEFAULT_MAX_SET_SIZE: usize = 64;

const MAGIC: &[u8; 4] = b"CDRS";
const BINARY_VERSION: u16 = 1;

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum SpecError {
    #[error("invalid spec: {0}")]
    Invalid(ValidationReport),
    #[error("cannot decode spec: {0}")]
    Decode(String),
    #[error("proving key does not belong to this spec/scheme: {0}")]
    KeyMismatch(String),
    #[error("integrity check failed: {0}")]
    Integrity(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TimeDirection {
    /// `value >= now - offset`
    NotOlderThan,
    /// `value <= now - offset`
    NotNewerThan,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Condition {
    Equality {
        target: AttributeValue,
    },
    /// Inclusive bounds.
    Range {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        min: Option<u64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        max: Option<u64>,
    },
    Membership {
        set: Vec<AttributeValue>,
    },
    RelativeTime {
        offset_seconds: i64,
        direction: TimeDirection,
    },
}

impl Condition {
    pub fn type_name(&self) -> &'static str {
        match self {
            Condition::Equality { .. } => "equality",
            Condition::Range { .. } => "range",
            Condition::Membership { .. } => "membership",
            Condition::RelativeTime { .. } => "relative_time",
        }
    }

    fn tag(&self) -> u8 {
        match self {
            Condition::Equality { .. } => 1,
            Condition::Range { .. } => 2,
            Condition::Membership { .. } => 3,
            Condition::RelativeTime { .. } => 4,
        }
    }

    fn normalize(&mut self) {
        if let Condition::Membership { set } = self {
            set.sort();
            set.dedup();
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ClaimRequirement {
    pub attribute_id: u32,
    pub condition: Condition,
}

/// How the device key is exposed to the verifier.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KeyBinding {
    /// The key itself is a public input and goes into the registry.
    #[default]
    Plain,
    /// Only `hash_fields([x, y, randomness])` is public.
    Committed,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ZkSpec {
    pub version: String,
    pub schema_ref: HashDigest,
    pub device_key_attribute_id: u32,
    #[serde(default)]
    pub binding: KeyBinding,
    pub requirements: Vec<ClaimRequirement>,
}

impl ZkSpec {
    pub fn new(
        schema_ref: HashDigest,
        device_key_attribute_id: u32,
        binding: KeyBinding,
        requirements: Vec<ClaimRequirement>,
    ) -> Self {
        let mut spec = ZkSpec {
            version: SPEC_VERSION.into(),
            schema_ref,
            device_key_attribute_id,
            binding,
            requirements,
        };
        spec.normalize();
        spec
    }

    pub fn normalize(&mut self) {
        for r in &mut self.requirements {
            r.condition.normalize();
        }
        self.requirements
            .sort_by_cached_key(|r| (r.attribute_id, encode_condition(&r.condition)));
        self.requirements.dedup();
    }

    pub fn normalized(&self) -> ZkSpec {
        let mut s = self.clone();
        s.normalize();
        s
    }

    pub fn has_relative_time(&self) -> bool {
        self.requirements
            .iter()
            .any(|r| matches!(r.condition, Condition::RelativeTime { .. }))
    }

    /// Distinct attribute ids whose claims the circuit loads, device key first.
    pub fn claim_attributes(&self) -> Vec<u32> {
        let mut out = vec![self.device_key_attribute_id];
        for r in &self.normalized().requirements {
            if !out.contains(&r.attribute_id) {
                out.push(r.attribute_id);
            }
        }
        out
    }

    pub fn id(&self) -> ContentHash {
        ContentHash::of(&canonical_bytes(self))
    }

    pub fn to_text(&self) -> String {
        to_canonical_json_pretty(&self.normalized())
    }

    pub fn from_text(text: &str) -> Result<Self, SpecError> {
        let spec: ZkSpec = serde_json::from_str(text).map_err(|e| SpecError::Decode(e.to_string()))?;
        if spec.version != SPEC_VERSION {
            return Err(SpecError::Decode(format!("unsupported spec version {}", spec.version)));
        }
        Ok(spec.normalized())
    }
}

/// Field encoding of the public values a requirement contributes, in layout order.
pub fn requirement_aux(condition: &Condition) -> Result<Vec<FieldElement>, crate::crypto::CryptoError> {
    Ok(match condition {
        Condition::Equality { target } => vec![encode_value(target)?],
        Condition::Range { min, max } => min.iter().chain(max.iter()).map(|v| FieldElement::from_u64(*v)).collect(),
        Condition::Membership { set } => vec![set_digest(set)?.value()],
        Condition::RelativeTime { offset_seconds, .. } => vec![FieldElement::from_i64(*offset_seconds)],
    })
}

/// Digest of a membership set, over the encodings of its (sorted) members.
pub fn set_digest(set: &[AttributeValue]) -> Result<HashDigest, crate::crypto::CryptoError> {
    let mut sorted = set.to_vec();
    sorted.sort();
    sorted.dedup();
    let encoded = sorted.iter().map(encode_value).collect::<Result<Vec<_>, _>>()?;
    hash_fields(&encoded)
}

/// The aux vector a contract expects for this spec.
pub fn expected_aux(spec: &ZkSpec) -> Result<Vec<FieldElement>, crate::crypto::CryptoError> {
    let mut out = Vec::new();
    for r in &spec.normalized().requirements {
        out.extend(requirement_aux(&r.condition)?);
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Finding {
    /// Index into the normalized requirement list, if the finding is requirement-specific.
    pub requirement: Option<usize>,
    pub code: String,
    pub message: String,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub findings: Vec<Finding>,
}

impl ValidationReport {
    pub fn is_ok(&self) -> bool {
        self.findings.is_empty()
    }

    fn push(&mut self, requirement: Option<usize>, code: &str, message: impl Into<String>) {
        self.findings.push(Finding {
            requirement,
            code: code.into(),
            message: message.into(),
        });
    }

    pub fn has(&self, code: &str) -> bool {
        self.findings.iter().any(|f| f.code == code)
    }
}

impl std::fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let parts: Vec<String> = self
            .findings
            .iter()
            .map(|x| match x.requirement {
                Some(i) => format!("requirement {i}: {}: {}", x.code, x.message),
                None => format!("{}: {}", x.code, x.message),
            })
            .collect();
        f.write_str(&parts.join("; "))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SpecLimits {
    pub max_set_size: usize,
}

impl Default for SpecLimits {
    fn default() -> Self {
        SpecLimits {
            max_set_size: DEFAULT_MAX_SET_SIZE,
        }
    }
}

pub fn validate_spec(spec: &ZkSpec, schema: &CredentialSchema) -> ValidationReport {
    validate_spec_with(spec, schema, SpecLimits::default())
}

pub fn validate_spec_with(spec: &ZkSpec, schema: &CredentialSchema, limits: SpecLimits) -> ValidationReport {
    let mut report = ValidationReport::default();
    let spec = spec.normalized();
    if spec.version != SPEC_VERSION {
        report.push(None, "version", format!("unsupported version {}", spec.version));
    }
    if spec.schema_ref != schema.schema_id {
        report.push(None, "schema mismatch", "schema_ref does not match the given schema");
    }
    if schema.check().is_err() {
        report.push(None, "schema invalid", "schema id does not recompute from its body");
    }
    match schema.attribute(spec.device_key_attribute_id) {
        None => report.push(None, "unknown attribute", "device key attribute not in schema"),
        Some(a) if a.kind != AttributeKind::Key => {
            report.push(None, "kind mismatch", format!("device key attribute {} is {}, not key", a.name, a.kind))
        }
        _ => {}
    }
    if spec.requirements.is_empty() {
        report.push(None, "empty", "at least one requirement is needed");
    }
    for (i, r) in spec.requirements.iter().enumerate() {
        let Some(attr) = schema.attribute(r.attribute_id) else {
            report.push(Some(i), "unknown attribute", format!("attribute id {}", r.attribute_id));
            continue;
        };
        let kind = attr.kind;
        let name = &attr.name;
        match &r.condition {
            Condition::Equality { target } => {
                if target.kind() != kind {
                    report.push(Some(i), "kind mismatch", format!("{name} is {kind}, target is {}", target.kind()));
                }
            }
            Condition::Range { min, max } => {
                if !kind.is_numeric() {
                    report.push(Some(i), "kind mismatch", format!("range needs uint or date, {name} is {kind}"));
                }
                match (min, max) {
                    (None, None) => report.push(Some(i), "unbounded range", "range needs min or max"),
                    (Some(lo), Some(hi)) if lo > hi => {
                        report.push(Some(i), "empty range", format!("min {lo} > max {hi}"))
                    }
                    _ => {}
                }
            }
            Condition::Membership { set } => {
                if kind == AttributeKind::Key {
                    report.push(Some(i), "kind mismatch", format!("membership over key attribute {name}"));
                }
                if set.is_empty() {
                    report.push(Some(i), "empty set", "membership set is empty");
                }
                if set.len() > limits.max_set_size {
                    report.push(
                        Some(i),
                        "set too large",
                        format!("{} members, limit {}", set.len(), limits.max_set_size),
                    );
                }
                if set.iter().any(|v| v.kind() != kind) {
                    report.push(Some(i), "kind mismatch", format!("set members must all be {kind}"));
                }
            }
            Condition::RelativeTime { .. } => {
                if kind != AttributeKind::Date {
                    report.push(Some(i), "kind mismatch", format!("relative time needs a date, {name} is {kind}"));
                }
            }
        }
    }
    report
}

// ---- binary canonical form ------------------------------------------------------------

fn put_u32(out: &mut Vec<u8>, v: u32) {
    out.extend_from_slice(&v.to_le_bytes());
}

fn put_bytes(out: &mut Vec<u8>, b: &[u8]) {
    put_u32(out, b.len() as u32);
    out.extend_from_slice(b);
}

fn encode_attr_value(out: &mut Vec<u8>, v: &AttributeValue) {
    out.push(v.kind().tag());
    match v {
        AttributeValue::Uint(x) | AttributeValue::Date(x) => out.extend_from_slice(&x.to_le_bytes()),
        AttributeValue::String(s) => put_bytes(out, s.as_bytes()),
        AttributeValue::Key(k) => out.extend_from_slice(&k.to_bytes()),
    }
}

fn encode_condition(c: &Condition) -> Vec<u8> {
    let mut out = vec![c.tag()];
    match c {
        Condition::Equality { target } => encode_attr_value(&mut out, target),
        Condition::Range { min, max } => {
            out.push(u8::from(min.is_some()) | (u8::from(max.is_some()) << 1));
            out.extend_from_slice(&min.unwrap_or(0).to_le_bytes());
            out.extend_from_slice(&max.unwrap_or(0).to_le_bytes());
        }
        Condition::Membership { set } => {
            put_u32(&mut out, set.len() as u32);
            for v in set {
                encode_attr_value(&mut out, v);
            }
        }
        Condition::RelativeTime { offset_seconds, direction } => {
            out.extend_from_slice(&offset_seconds.to_le_bytes());
            out.push(match direction {
                TimeDirection::NotOlderThan => 0,
                TimeDirection::NotNewerThan => 1,
            });
        }
    }
    out
}

/// Layout: `magic ‖ u16 format ‖ str version ‖ schema_ref[32] ‖ u32 device_key_attr ‖ u8 binding ‖
/// u32 n ‖ n × (u32 attribute_id ‖ u32 len ‖ condition)`. Integers little-endian,
/// strings and conditions length-prefixed.
pub fn canonical_bytes(spec: &ZkSpec) -> Vec<u8> {
    let spec = spec.normalized();
    let mut out = Vec::with_capacity(128);
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&BINARY_VERSION.to_le_bytes());
    put_bytes(&mut out, spec.version.as_bytes());
    out.extend_from_slice(&spec.schema_ref.value().to_le_bytes());
    put_u32(&mut out, spec.device_key_attribute_id);
    out.push(match spec.binding {
        KeyBinding::Plain => 0,
        KeyBinding::Committed => 1,
    });
    put_u32(&mut out, spec.requirements.len() as u32);
    for r in &spec.requirements {
        put_u32(&mut out, r.attribute_id);
        put_bytes(&mut out, &encode_condition(&r.condition));
    }
    out
}

struct Reader<'a> {
    buf: &'a [u8],
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], SpecError> {
        if self.buf.len() < n {
            return Err(SpecError::Decode("truncated".into()));
        }
        let (head, tail) = self.buf.split_at(n);
        self.buf = tail;
        Ok(head)
    }

    fn u8(&mut self) -> Result<u8, SpecError> {
        Ok(self.take(1)?[0])
    }

    fn u32(&mut self) -> Result<u32, SpecError> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> Result<u64, SpecError> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn bytes(&mut self) -> Result<&'a [u8], SpecError> {
        let n = self.u32()? as usize;
        self.take(n)
    }

    fn string(&mut self) -> Result<String, SpecError> {
        String::from_utf8(self.bytes()?.to_vec()).map_err(|_| SpecError::Decode("invalid utf-8".into()))
    }

    fn attr_value(&mut self) -> Result<AttributeValue, SpecError> {
        let kind = AttributeKind::from_tag(self.u8()?).ok_or_else(|| SpecError::Decode("bad kind tag".into()))?;
        Ok(match kind {
            AttributeKind::Uint => AttributeValue::Uint(self.u64()?),
            AttributeKind::Date => AttributeValue::Date(self.u64()?),
            AttributeKind::String => AttributeValue::String(self.string()?),
            AttributeKind::Key => AttributeValue::Key(
                CurvePoint::from_bytes(self.take(64)?).map_err(|e| SpecError::Decode(e.to_string()))?,
            ),
        })
    }

    fn condition(&mut self) -> Result<Condition, SpecError> {
        Ok(match self.u8()? {
            1 => Condition::Equality {
                target: self.attr_value()?,
            },
            2 => {
                let flags = self.u8()?;
                if flags > 3 {
                    return Err(SpecError::Decode("bad range flags".into()));
                }
                let (lo, hi) = (self.u64()?, self.u64()?);
                if (flags & 1 == 0 && lo != 0) || (flags & 2 == 0 && hi != 0) {
                    return Err(SpecError::Decode("non-canonical range".into()));
                }
                Condition::Range {
                    min: (flags & 1 != 0).then_some(lo),
                    max: (flags & 2 != 0).then_some(hi),
                }
            }
            3 => {
                let n = self.u32()? as usize;
                let set = (0..n).map(|_| self.attr_value()).collect::<Result<Vec<_>, _>>()?;
                Condition::Membership { set }
            }
            4 => {
                let offset = self.u64()? as i64;
                let direction = match self.u8()? {
                    0 => TimeDirection::NotOlderThan,
                    1 => TimeDirection::NotNewerThan,
                    _ => return Err(SpecError::Decode("bad direction".into())),
                };
                Condition::RelativeTime {
                    offset_seconds: offset,
                    direction,
                }
            }
            t => return Err(SpecError::Decode(format!("bad condition tag {t}"))),
        })
    }
}

/// Inverse of [`canonical_bytes`]. Rejects anything that would not re-encode identically.
pub fn decode_canonical(bytes: &[u8]) -> Result<ZkSpec, SpecError> {
    let mut r = Reader { buf: bytes };
    if r.take(4)? != MAGIC {
        return Err(SpecError::Decode("bad magic".into()));
    }
    let fmt = u16::from_le_bytes(r.take(2)?.try_into().unwrap());
    if fmt != BINARY_VERSION {
        return Err(SpecError::Decode(format!("unsupported format {fmt}")));
    }
    let version = r.string()?;
    let schema_ref = HashDigest(FieldElement::from_le_bytes(r.take(32)?).map_err(|e| SpecError::Decode(e.to_string()))?);
    let device_key_attribute_id = r.u32()?;
    let binding = match r.u8()? {
        0 => KeyBinding::Plain,
        1 => KeyBinding::Committed,
        _ => return Err(SpecError::Decode("bad binding".into())),
    };
    let n = r.u32()? as usize;
    let mut requirements = Vec::with_capacity(n.min(1024));
    for _ in 0..n {
        let attribute_id = r.u32()?;
        let body = r.bytes()?;
        let mut inner = Reader { buf: body };
        let condition = inner.condition()?;
        if !inner.buf.is_empty() {
            return Err(SpecError::Decode("trailing bytes in condition".into()));
        }
        requirements.push(ClaimRequirement {
            attribute_id,
            condition,
        });
    }
    if !r.buf.is_empty() {
        return Err(SpecError::Decode("trailing bytes".into()));
    }
    let spec = ZkSpec {
        version,
        schema_ref,
        device_key_attribute_id,
        binding,
        requirements,
    };
    if canonical_bytes(&spec) != bytes {
        return Err(SpecError::Decode("not in canonical form".into()));
    }
    Ok(spec)
}

// ---- zkVPR ----------------------------------------------------------------------------

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ArtifactRef {
    pub hash: ContentHash,
    pub locator: String,
}

impl ArtifactRef {
    pub fn vdr(hash: ContentHash) -> Self {
        ArtifactRef {
            hash,
            locator: format!("vdr:{hash}"),
        }
    }
}

/// Free-form metadata. Only `initiator` and `created_at` are interpreted.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ZkvprMeta {
    pub initiator: String,
    pub created_at: u64,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub extra: BTreeMap<String, String>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ZkVpr {
    pub version: String,
    pub zkspec: ZkSpec,
    pub spec_id: ContentHash,
    pub scheme: SchemeId,
    pub proving_key: ArtifactRef,
    /// Proving key of the authentication circuit; committed-key specs only.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub auth_proving_key: Option<ArtifactRef>,
    pub cs_ref: ArtifactRef,
    pub meta: ZkvprMeta,
}

pub fn build_zkvpr(
    spec: &ZkSpec,
    proving_key: &ProvingKey,
    auth_proving_key: Option<&ProvingKey>,
    cs_ref: ArtifactRef,
    scheme: SchemeId,
    meta: ZkvprMeta,
) -> Result<ZkVpr, SpecError> {
    let spec = spec.normalized();
    let spec_id = spec.id();
    if proving_key.spec_id != spec_id {
        return Err(SpecError::KeyMismatch(format!(
            "key was set up for spec {}, not {}",
            proving_key.spec_id.short(),
            spec_id.short()
        )));
    }
    if proving_key.scheme != scheme {
        return Err(SpecError::KeyMismatch(format!(
            "key is for {}, not {}",
            proving_key.scheme, scheme
        )));
    }
    let auth = match (spec.binding, auth_proving_key) {
        (KeyBinding::Plain, None) => None,
        (KeyBinding::Committed, Some(k)) if k.scheme == scheme => Some(ArtifactRef::vdr(k.content_hash())),
        (KeyBinding::Committed, _) => {
            return Err(SpecError::KeyMismatch("committed binding needs an authentication key of the same scheme".into()))
        }
        (KeyBinding::Plain, Some(_)) => {
            return Err(SpecError::KeyMismatch("plain binding takes no authentication key".into()))
        }
    };
    Ok(ZkVpr {
        version: ZKVPR_VERSION.into(),
        zkspec: spec,
        spec_id,
        scheme,
        proving_key: ArtifactRef::vdr(proving_key.content_hash()),
        auth_proving_key: auth,
        cs_ref,
        meta,
    })
}

impl ZkVpr {
    pub fn to_bytes(&self) -> Vec<u8> {
        to_canonical_json(self).into_bytes()
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, SpecError> {
        let v: ZkVpr = serde_json::from_slice(bytes).map_err(|e| SpecError::Decode(e.to_string()))?;
        if v.version != ZKVPR_VERSION {
            return Err(SpecError::Decode(format!("unsupported zkVPR version {}", v.version)));
        }
        Ok(v)
    }

    pub fn id(&self) -> ContentHash {
        ContentHash::of(&self.to_bytes())
    }

    /// Owner-side check of fetched artifacts against the references in the bundle.
    pub fn check_integrity(&self, proving_key_bytes: &[u8], schema: &CredentialSchema) -> Result<(), SpecError> {
        if self.zkspec.id() != self.spec_id {
            return Err(SpecError::Integrity("spec id does not match the embedded spec".into()));
        }
        if ContentHash::of(proving_key_bytes) != self.proving_key.hash {
            return Err(SpecError::Integrity("proving key hash mismatch".into()));
        }
        let pk = ProvingKey::from_bytes(proving_key_bytes)
            .map_err(|e| SpecError::Integrity(format!("proving key unreadable: {e}")))?;
        if pk.spec_id != self.spec_id || pk.scheme != self.scheme {
            return Err(SpecError::Integrity("proving key bound to another spec or scheme".into()));
        }
        if schema.check().is_err() || schema.schema_id != self.zkspec.schema_ref {
            return Err(SpecError::Integrity("credential schema does not match the zkSpec".into()));
        }
        Ok(())
    }
}
