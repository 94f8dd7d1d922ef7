//! Compilation of a [`ZkSpec`] into a rank-1 constraint system, and witness generation.
//!
//! Public input layout, in order:
//!
//! | inputs | plain binding | committed binding |
//! |---|---|---|
//! | issuer key | `x`, `y` | `x`, `y` |
//! | device entry | key `x`, `y` | commitment |
//! | aux | per requirement, in normalized order | same |
//! | owner binding | 1 | 1 |
//! | `now_ts` | only with a relative-time requirement | same |
//!
//! Aux per requirement: equality `[target]`, range `[min?, max?]`, membership
//! `[set digest]`, relative time `[offset]`.

pub mod auth;
pub mod gadgets;
pub mod r1cs;

use num_bigint::BigUint;
use serde::{Deserialize, Serialize};

use crate::canonical::{to_canonical_json, to_canonical_json_pretty, ContentHash};
use crate::credential::{CredentialSchema, VerifiableCredential};
use crate::crypto::encode::encode_string;
use crate::crypto::{
    encode_value, hash_fields, AttributeKind, AttributeValue, CryptoError, CurvePoint, FieldElement, Fr,
    HashDigest, Signature,
};
use crate::zkspec::{expected_aux, validate_spec, Condition, KeyBinding, TimeDirection, ValidationReport, ZkSpec};
use gadgets::PointVar;
use r1cs::{Builder, Constraint, Lc, Mode, Section, Var};

pub const CS_MAGIC: &[u8; 4] = b"CDRC";
pub const CS_FORMAT: u16 = 1;

const RANGE_BITS: usize = 64;
/// Enough for `value + offset - now` with a 64-bit value and a 63-bit offset.
const TIME_DIFF_BITS: usize = 66;

#[derive(Debug, Clone, thiserror::Error, PartialEq, Eq)]
pub enum CircuitError {
    #[error("invalid spec: {0}")]
    InvalidSpec(ValidationReport),
    #[error("missing claim: {0}")]
    MissingClaim(String),
    #[error("condition unsatisfied: {0}")]
    ConditionUnsatisfied(String),
    #[error("signature invalid: {0}")]
    SignatureInvalid(String),
    #[error("subject mismatch")]
    SubjectMismatch,
    #[error("device-key binding failed")]
    BindingFailed,
    #[error("public inputs do not match the circuit layout: {0}")]
    LayoutMismatch(String),
    #[error("constraint system was compiled from spec {expected}, not {got}")]
    WrongCircuit { expected: String, got: String },
    #[error("kind mismatch: {0}")]
    KindMismatch(String),
    #[error("unsatisfied constraint {index} in {label}")]
    Unsatisfied { label: String, index: usize },
    #[error("malformed constraint system: {0}")]
    Decode(String),
    #[error(transparent)]
    Crypto(#[from] CryptoError),
}

/// One credential claim the circuit loads and verifies.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClaimSlot {
    pub attribute_id: u32,
    pub name: String,
    pub kind: AttributeKind,
}

/// A requirement as compiled: which slot it reads and where its aux values sit.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CompiledRequirement {
    pub name: String,
    pub slot: usize,
    pub condition: Condition,
    pub aux_start: usize,
    pub aux_len: usize,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
struct CsHeader {
    spec_id: ContentHash,
    schema_id: HashDigest,
    binding: KeyBinding,
    layout: Vec<String>,
    slots: Vec<ClaimSlot>,
    requirements: Vec<CompiledRequirement>,
    num_private: usize,
    sections: Vec<Section>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ConstraintSystem {
    pub spec_id: ContentHash,
    pub schema_id: HashDigest,
    pub binding: KeyBinding,
    /// Names of the public inputs, in order.
    pub layout: Vec<String>,
    pub slots: Vec<ClaimSlot>,
    pub requirements: Vec<CompiledRequirement>,
    pub num_private: usize,
    pub constraints: Vec<Constraint>,
    pub sections: Vec<Section>,
}

impl ConstraintSystem {
    pub fn num_public(&self) -> usize {
        self.layout.len()
    }

    pub fn num_constraints(&self) -> usize {
        self.constraints.len()
    }

    pub fn has_time(&self) -> bool {
        self.layout.last().map(String::as_str) == Some("now_ts")
    }

    /// Nonzero entries of the A, B and C matrices.
    pub fn matrix_nnz(&self) -> (usize, usize, usize) {
        self.constraints.iter().fold((0, 0, 0), |(a, b, c), k| {
            (a + k.a.len(), b + k.b.len(), c + k.c.len())
        })
    }

    /// Label of the section that owns constraint `index`.
    pub fn label_of(&self, index: usize) -> Option<&str> {
        self.sections
            .iter()
            .find(|s| s.start <= index && index < s.end)
            .map(|s| s.label.as_str())
    }

    fn header(&self) -> CsHeader {
        CsHeader {
            spec_id: self.spec_id,
            schema_id: self.schema_id,
            binding: self.binding,
            layout: self.layout.clone(),
            slots: self.slots.clone(),
            requirements: self.requirements.clone(),
            num_private: self.num_private,
            sections: self.sections.clone(),
        }
    }

    /// `magic ‖ u16 format ‖ u32 len ‖ header json ‖ u32 n ‖ n × (a ‖ b ‖ c)`, each
    /// combination as `u32 terms ‖ terms × (u8 kind ‖ u32 index ‖ coeff[32])`.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(64 + self.constraints.len() * 120);
        out.extend_from_slice(CS_MAGIC);
        out.extend_from_slice(&CS_FORMAT.to_le_bytes());
        let header = to_canonical_json(&self.header());
        out.extend_from_slice(&(header.len() as u32).to_le_bytes());
        out.extend_from_slice(header.as_bytes());
        out.extend_from_slice(&(self.constraints.len() as u32).to_le_bytes());
        for k in &self.constraints {
            for lc in [&k.a, &k.b, &k.c] {
                out.extend_from_slice(&(lc.len() as u32).to_le_bytes());
                for (v, c) in &lc.0 {
                    let (tag, idx) = match v {
                        Var::One => (0u8, 0u32),
                        Var::Public(i) => (1, *i),
                        Var::Private(i) => (2, *i),
                    };
                    out.push(tag);
                    out.extend_from_slice(&idx.to_le_bytes());
                    out.extend_from_slice(&FieldElement::from_fr(*c).to_le_bytes());
                }
            }
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, CircuitError> {
        let mut r = Reader { bytes, pos: 0 };
        if r.take(4)? != CS_MAGIC {
            return Err(CircuitError::Decode("bad magic".into()));
        }
        let format = u16::from_le_bytes(r.take(2)?.try_into().unwrap());
        if format != CS_FORMAT {
            return Err(CircuitError::Decode(format!("unsupported format {format}")));
        }
        let len = r.u32()? as usize;
        let header: CsHeader =
            serde_json::from_slice(r.take(len)?).map_err(|e| CircuitError::Decode(e.to_string()))?;
        let n = r.u32()? as usize;
        let mut constraints = Vec::with_capacity(n.min(1 << 20));
        let num_public = header.layout.len();
        for _ in 0..n {
            let mut lcs = Vec::with_capacity(3);
            for _ in 0..3 {
                let terms = r.u32()? as usize;
                let mut lc = Vec::with_capacity(terms.min(1024));
                for _ in 0..terms {
                    let tag = r.take(1)?[0];
                    let idx = r.u32()?;
                    let v = match tag {
                        0 if idx == 0 => Var::One,
                        1 if (idx as usize) < num_public => Var::Public(idx),
                        2 if (idx as usize) < header.num_private => Var::Private(idx),
                        _ => return Err(CircuitError::Decode("bad variable".into())),
                    };
                    let c = FieldElement::from_le_bytes(r.take(32)?)
                        .map_err(|e| CircuitError::Decode(e.to_string()))?;
                    lc.push((v, c.fr()));
                }
                let lc = Lc(lc);
                if lc.0.windows(2).any(|w| w[0].0 >= w[1].0) {
                    return Err(CircuitError::Decode("unsorted linear combination".into()));
                }
                lcs.push(lc);
            }
            let c = lcs.pop().unwrap();
            let b = lcs.pop().unwrap();
            let a = lcs.pop().unwrap();
            constraints.push(Constraint { a, b, c });
        }
        if r.pos != bytes.len() {
            return Err(CircuitError::Decode("trailing bytes".into()));
        }
        Ok(ConstraintSystem {
            spec_id: header.spec_id,
            schema_id: header.schema_id,
            binding: header.binding,
            layout: header.layout,
            slots: header.slots,
            requirements: header.requirements,
            num_private: header.num_private,
            constraints,
            sections: header.sections,
        })
    }

    pub fn digest(&self) -> ContentHash {
        ContentHash::of(&self.to_bytes())
    }

    /// Human-readable description of the public inputs, written next to the binary form.
    pub fn layout_manifest(&self) -> String {
        #[derive(Serialize)]
        struct Entry<'a> {
            index: usize,
            name: &'a str,
        }
        #[derive(Serialize)]
        struct Manifest<'a> {
            spec_id: ContentHash,
            binding: KeyBinding,
            constraint_count: usize,
            num_private: usize,
            digest: ContentHash,
            public_inputs: Vec<Entry<'a>>,
        }
        to_canonical_json_pretty(&Manifest {
            spec_id: self.spec_id,
            binding: self.binding,
            constraint_count: self.num_constraints(),
            num_private: self.num_private,
            digest: self.digest(),
            public_inputs: self
                .layout
                .iter()
                .enumerate()
                .map(|(index, name)| Entry { index, name })
                .collect(),
        })
    }
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], CircuitError> {
        let end = self
            .pos
            .checked_add(n)
            .filter(|e| *e <= self.bytes.len())
            .ok_or_else(|| CircuitError::Decode("truncated".into()))?;
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32, CircuitError> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }
}

pub fn constraint_count(ecs: &ConstraintSystem) -> usize {
    ecs.num_constraints()
}

// ---- public and private inputs ----------------------------------------------------------

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "type", content = "value", rename_all = "snake_case")]
pub enum DeviceEntry {
    Key(CurvePoint),
    Commitment(HashDigest),
}

impl DeviceEntry {
    pub fn fields(&self) -> Vec<FieldElement> {
        match self {
            DeviceEntry::Key(k) => vec![k.x(), k.y()],
            DeviceEntry::Commitment(c) => vec![c.value()],
        }
    }

    pub fn binding(&self) -> KeyBinding {
        match self {
            DeviceEntry::Key(_) => KeyBinding::Plain,
            DeviceEntry::Commitment(_) => KeyBinding::Committed,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PublicInputs {
    pub issuer_pubkey: CurvePoint,
    pub device: DeviceEntry,
    pub aux: Vec<FieldElement>,
    pub owner_binding: FieldElement,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub now_ts: Option<u64>,
}

impl PublicInputs {
    pub fn to_field_vec(&self) -> Vec<FieldElement> {
        let mut out = vec![self.issuer_pubkey.x(), self.issuer_pubkey.y()];
        out.extend(self.device.fields());
        out.extend(self.aux.iter().copied());
        out.push(self.owner_binding);
        if let Some(t) = self.now_ts {
            out.push(FieldElement::from_u64(t));
        }
        out
    }
}

/// `hash_fields([encode_string(sender)])`
pub fn owner_binding(sender: &str) -> Result<FieldElement, CryptoError> {
    Ok(hash_fields(&[encode_string(sender)?])?.value())
}

/// `hash_fields([key.x, key.y, randomness])`
pub fn commit_device_key(key: &CurvePoint, randomness: &FieldElement) -> Result<HashDigest, CryptoError> {
    hash_fields(&[key.x(), key.y(), *randomness])
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ClaimWitness {
    pub subject_id: FieldElement,
    pub value: AttributeValue,
    pub signature: Signature,
}

/// Hidden inputs: one claim per slot (device key first) and, for committed binding,
/// the commitment opening.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PrivateInputs {
    pub claims: Vec<ClaimWitness>,
    pub randomness: Option<FieldElement>,
}

impl PrivateInputs {
    pub fn from_vc(
        ecs: &ConstraintSystem,
        vc: &VerifiableCredential,
        randomness: Option<FieldElement>,
    ) -> Result<Self, CircuitError> {
        let claims = ecs
            .slots
            .iter()
            .map(|slot| {
                let c = vc
                    .claim(slot.attribute_id)
                    .ok_or_else(|| CircuitError::MissingClaim(slot.name.clone()))?;
                if c.claim.value.kind() != slot.kind {
                    return Err(CircuitError::KindMismatch(format!(
                        "{} is {}, claim holds {}",
                        slot.name,
                        slot.kind,
                        c.claim.value.kind()
                    )));
                }
                Ok(ClaimWitness {
                    subject_id: c.claim.subject_id,
                    value: c.claim.value.clone(),
                    signature: c.signature.clone(),
                })
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(PrivateInputs { claims, randomness })
    }

    pub fn device_key(&self) -> Option<&CurvePoint> {
        match self.claims.first().map(|c| &c.value) {
            Some(AttributeValue::Key(k)) => Some(k),
            _ => None,
        }
    }
}

/// Full assignment for a constraint system.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Witness {
    pub spec_id: ContentHash,
    pub public: Vec<FieldElement>,
    pub private: Vec<Fr>,
}

impl Witness {
    /// Re-checks every constraint; `None` when satisfied.
    pub fn first_unsatisfied(&self, ecs: &ConstraintSystem) -> Option<usize> {
        let public: Vec<Fr> = self.public.iter().map(FieldElement::fr).collect();
        r1cs::first_unsatisfied(&ecs.constraints, &public, &self.private)
    }
}

// ---- compile / assign --------------------------------------------------------------------

struct ClaimValues {
    subject: Fr,
    value: Fr,
    r: (Fr, Fr),
    s: BigUint,
}

struct Values {
    public: Vec<Fr>,
    claims: Vec<ClaimValues>,
    /// Device key and commitment randomness, committed binding only.
    opening: Option<(Fr, Fr, Fr)>,
}

struct Shape<'a> {
    schema_id: Fr,
    binding: KeyBinding,
    slots: &'a [ClaimSlot],
    requirements: &'a [CompiledRequirement],
    has_time: bool,
}

fn condition_label(name: &str) -> String {
    format!("condition: {name}")
}

fn signature_label(name: &str) -> String {
    format!("signature: {name}")
}

const SUBJECT_LABEL: &str = "subject";
const BINDING_LABEL: &str = "device-key binding";

fn membership_encodings(set: &[AttributeValue]) -> Result<Vec<Fr>, CryptoError> {
    let mut sorted = set.to_vec();
    sorted.sort();
    sorted.dedup();
    sorted.iter().map(|v| encode_value(v).map(|f| f.fr())).collect()
}

fn synthesize(b: &mut Builder, shape: &Shape, values: &Values) -> Result<(), CryptoError> {
    let mut public = values.public.iter().copied();
    let mut next_public = |b: &mut Builder| b.alloc_public(public.next().unwrap_or_default());

    let issuer = PointVar::from_vars(next_public(b), next_public(b));
    let device = match shape.binding {
        KeyBinding::Plain => vec![next_public(b), next_public(b)],
        KeyBinding::Committed => vec![next_public(b)],
    };
    let aux_len: usize = shape.requirements.iter().map(|r| r.aux_len).sum();
    let aux: Vec<Var> = (0..aux_len).map(|_| next_public(b)).collect();
    let owner = next_public(b);
    let now = shape.has_time.then(|| next_public(b));

    let issuer8 = b.section("issuer key", |b| gadgets::times_eight(b, &issuer));

    let mut claim_values = Vec::with_capacity(shape.slots.len());
    let mut subject0: Option<Var> = None;
    for (slot, cv) in shape.slots.iter().zip(&values.claims) {
        let subject = b.alloc(cv.subject);
        let value = b.alloc(cv.value);
        let r = PointVar::alloc(b, cv.r.0, cv.r.1);
        if let Some(s0) = subject0 {
            b.section(SUBJECT_LABEL, |b| b.enforce_equal(&Lc::var(subject), &Lc::var(s0)));
        } else {
            subject0 = Some(subject);
        }
        let msg = [
            Lc::constant(shape.schema_id),
            Lc::var(subject),
            Lc::constant(Fr::from(slot.attribute_id as u64)),
            Lc::var(value),
        ];
        b.section(signature_label(&slot.name), |b| {
            let s_bits = gadgets::integer_bits(b, &cv.s, gadgets::SCALAR_BITS);
            gadgets::eddsa_verify(b, &issuer, &issuer8, &msg, &r, &s_bits)
        });
        claim_values.push(Lc::var(value));
    }

    b.section(BINDING_LABEL, |b| {
        let (kx, ky) = match shape.binding {
            KeyBinding::Plain => (Lc::var(device[0]), Lc::var(device[1])),
            KeyBinding::Committed => {
                let (x, y, r) = values.opening.unwrap_or_default();
                let (x, y, r) = (Lc::var(b.alloc(x)), Lc::var(b.alloc(y)), Lc::var(b.alloc(r)));
                let c = gadgets::hash(b, &[x.clone(), y.clone(), r]);
                b.enforce_equal(&c, &Lc::var(device[0]));
                (x, y)
            }
        };
        let kh = gadgets::hash(b, &[kx, ky]);
        b.enforce_equal(&kh, &claim_values[0]);
    });

    for req in shape.requirements {
        let v = claim_values[req.slot].clone();
        let aux = &aux[req.aux_start..req.aux_start + req.aux_len];
        let set = match &req.condition {
            Condition::Membership { set } => membership_encodings(set)?,
            _ => Vec::new(),
        };
        b.section(condition_label(&req.name), |b| {
            condition_gadget(b, &req.condition, &v, aux, now, &set)
        });
    }

    b.section("owner binding", |b| {
        b.mul(&Lc::var(owner), &Lc::var(owner));
    });
    Ok(())
}

fn condition_gadget(b: &mut Builder, condition: &Condition, v: &Lc, aux: &[Var], now: Option<Var>, set: &[Fr]) {
    match condition {
        Condition::Equality { .. } => b.enforce_equal(v, &Lc::var(aux[0])),
        Condition::Range { min, max } => {
            gadgets::to_bits(b, v, RANGE_BITS);
            let mut k = 0;
            if min.is_some() {
                gadgets::to_bits(b, &v.sub(&Lc::var(aux[k])), RANGE_BITS);
                k += 1;
            }
            if max.is_some() {
                gadgets::to_bits(b, &Lc::var(aux[k]).sub(v), RANGE_BITS);
            }
        }
        Condition::Membership { .. } => {
            let members: Vec<Lc> = set
                .iter()
                .map(|m| Lc::var(b.alloc(*m)))
                .collect();
            let digest = gadgets::hash(b, &members);
            b.enforce_equal(&digest, &Lc::var(aux[0]));
            let mut acc = v.sub(&members[0]);
            for m in &members[1..] {
                acc = b.mul(&acc, &v.sub(m));
            }
            b.enforce_zero(acc);
        }
        Condition::RelativeTime { direction, .. } => {
            let now = Lc::var(now.expect("relative time without now_ts"));
            let offset = Lc::var(aux[0]);
            gadgets::to_bits(b, v, RANGE_BITS);
            let diff = match direction {
                TimeDirection::NotOlderThan => v.add(&offset).sub(&now),
                TimeDirection::NotNewerThan => now.sub(&offset).sub(v),
            };
            gadgets::to_bits(b, &diff, TIME_DIFF_BITS);
        }
    }
}

struct Plan {
    spec_id: ContentHash,
    schema_id: HashDigest,
    binding: KeyBinding,
    slots: Vec<ClaimSlot>,
    requirements: Vec<CompiledRequirement>,
    has_time: bool,
}

fn plan(spec: &ZkSpec, schema: &CredentialSchema) -> Result<Plan, CircuitError> {
    let report = validate_spec(spec, schema);
    if !report.is_ok() {
        return Err(CircuitError::InvalidSpec(report));
    }
    let spec = spec.normalized();
    let attr = |id: u32| schema.attribute(id).expect("validated");
    let slots: Vec<ClaimSlot> = spec
        .claim_attributes()
        .into_iter()
        .map(|id| {
            let a = attr(id);
            ClaimSlot {
                attribute_id: id,
                name: a.name.clone(),
                kind: a.kind,
            }
        })
        .collect();
    let mut requirements = Vec::with_capacity(spec.requirements.len());
    let mut aux_start = 0;
    for r in &spec.requirements {
        let base = attr(r.attribute_id).name.clone();
        let shared = spec.requirements.iter().filter(|o| o.attribute_id == r.attribute_id).count() > 1;
        let mut name = if shared {
            format!("{base} {}", r.condition.type_name())
        } else {
            base
        };
        if requirements.iter().any(|x: &CompiledRequirement| x.name == name) {
            name = format!("{name} #{}", requirements.len());
        }
        let aux_len = crate::zkspec::requirement_aux(&r.condition)?.len();
        requirements.push(CompiledRequirement {
            name,
            slot: slots.iter().position(|s| s.attribute_id == r.attribute_id).unwrap(),
            condition: r.condition.clone(),
            aux_start,
            aux_len,
        });
        aux_start += aux_len;
    }
    Ok(Plan {
        spec_id: spec.id(),
        schema_id: spec.schema_ref,
        binding: spec.binding,
        slots,
        requirements,
        has_time: spec.has_relative_time(),
    })
}

fn layout_names(plan: &Plan) -> Vec<String> {
    let mut out = vec!["issuer.x".to_string(), "issuer.y".to_string()];
    match plan.binding {
        KeyBinding::Plain => out.extend(["device.x".to_string(), "device.y".to_string()]),
        KeyBinding::Committed => out.push("device.commitment".into()),
    }
    for r in &plan.requirements {
        let parts: Vec<&str> = match &r.condition {
            Condition::Equality { .. } => vec!["target"],
            Condition::Range { min, max } => {
                let mut p = Vec::new();
                if min.is_some() {
                    p.push("min");
                }
                if max.is_some() {
                    p.push("max");
                }
                p
            }
            Condition::Membership { .. } => vec!["set_digest"],
            Condition::RelativeTime { .. } => vec!["offset"],
        };
        out.extend(parts.into_iter().map(|p| format!("aux.{}.{p}", r.name)));
    }
    out.push("owner_binding".into());
    if plan.has_time {
        out.push("now_ts".into());
    }
    out
}

fn dummy_values(plan: &Plan, num_public: usize) -> Values {
    Values {
        public: vec![Fr::default(); num_public],
        claims: plan
            .slots
            .iter()
            .map(|_| ClaimValues {
                subject: Fr::default(),
                value: Fr::default(),
                r: (Fr::default(), Fr::default()),
                s: BigUint::default(),
            })
            .collect(),
        opening: None,
    }
}

pub fn compile(spec: &ZkSpec, schema: &CredentialSchema) -> Result<ConstraintSystem, CircuitError> {
    let plan = plan(spec, schema)?;
    let layout = layout_names(&plan);
    let shape = Shape {
        schema_id: plan.schema_id.value().fr(),
        binding: plan.binding,
        slots: &plan.slots,
        requirements: &plan.requirements,
        has_time: plan.has_time,
    };
    let mut b = Builder::new(Mode::Compile);
    synthesize(&mut b, &shape, &dummy_values(&plan, layout.len()))?;
    let out = b.into_parts();
    debug_assert_eq!(out.public.len(), layout.len());
    Ok(ConstraintSystem {
        spec_id: plan.spec_id,
        schema_id: plan.schema_id,
        binding: plan.binding,
        layout,
        slots: plan.slots,
        requirements: plan.requirements,
        num_private: out.private.len(),
        constraints: out.constraints,
        sections: out.sections,
    })
}

fn violation_error(label: &str, index: usize) -> CircuitError {
    if let Some(name) = label.strip_prefix("condition: ") {
        CircuitError::ConditionUnsatisfied(name.into())
    } else if let Some(name) = label.strip_prefix("signature: ") {
        CircuitError::SignatureInvalid(name.into())
    } else if label == SUBJECT_LABEL {
        CircuitError::SubjectMismatch
    } else if label == BINDING_LABEL {
        CircuitError::BindingFailed
    } else {
        CircuitError::Unsatisfied {
            label: label.into(),
            index,
        }
    }
}

fn claim_values(w: &ClaimWitness) -> Result<ClaimValues, CryptoError> {
    Ok(ClaimValues {
        subject: w.subject_id.fr(),
        value: encode_value(&w.value)?.fr(),
        r: (w.signature.r.x().fr(), w.signature.r.y().fr()),
        s: w.signature.s.clone(),
    })
}

/// Runs the circuit on concrete inputs. Fails with the first gadget that rejects them.
pub fn assign_inputs(
    ecs: &ConstraintSystem,
    public: &PublicInputs,
    private: &PrivateInputs,
) -> Result<Witness, CircuitError> {
    run_assignment(ecs, public, private, true)
}

/// Like [`assign_inputs`] but returns the assignment even when it violates constraints.
/// Only meant for feeding forged witnesses to a prover in soundness tests.
#[doc(hidden)]
pub fn assign_unchecked(
    ecs: &ConstraintSystem,
    public: &PublicInputs,
    private: &PrivateInputs,
) -> Result<Witness, CircuitError> {
    run_assignment(ecs, public, private, false)
}

fn run_assignment(
    ecs: &ConstraintSystem,
    public: &PublicInputs,
    private: &PrivateInputs,
    strict: bool,
) -> Result<Witness, CircuitError> {
    if public.device.binding() != ecs.binding {
        return Err(CircuitError::LayoutMismatch("device entry does not match the key binding".into()));
    }
    if public.now_ts.is_some() != ecs.has_time() {
        return Err(CircuitError::LayoutMismatch("now_ts presence does not match the circuit".into()));
    }
    let fields = public.to_field_vec();
    if fields.len() != ecs.num_public() {
        return Err(CircuitError::LayoutMismatch(format!(
            "{} public inputs, circuit has {}",
            fields.len(),
            ecs.num_public()
        )));
    }
    if private.claims.len() != ecs.slots.len() {
        return Err(CircuitError::LayoutMismatch("claim count does not match the circuit".into()));
    }
    let opening = match ecs.binding {
        KeyBinding::Plain => None,
        KeyBinding::Committed => {
            let key = private.device_key().ok_or(CircuitError::BindingFailed)?;
            let r = private.randomness.ok_or(CircuitError::BindingFailed)?;
            Some((key.x().fr(), key.y().fr(), r.fr()))
        }
    };
    let values = Values {
        public: fields.iter().map(FieldElement::fr).collect(),
        claims: private.claims.iter().map(claim_values).collect::<Result<_, _>>()?,
        opening,
    };
    let shape = Shape {
        schema_id: ecs.schema_id.value().fr(),
        binding: ecs.binding,
        slots: &ecs.slots,
        requirements: &ecs.requirements,
        has_time: ecs.has_time(),
    };
    let mut b = Builder::new(Mode::Assign);
    synthesize(&mut b, &shape, &values)?;
    let out = b.into_parts();
    if let Some(v) = out.violation.filter(|_| strict) {
        return Err(violation_error(&v.label, v.index));
    }
    if out.private.len() != ecs.num_private || out.num_constraints != ecs.num_constraints() {
        return Err(CircuitError::LayoutMismatch("constraint system shape differs from its own circuit".into()));
    }
    Ok(Witness {
        spec_id: ecs.spec_id,
        public: fields,
        private: out.private,
    })
}

/// Witness for `spec` from a credential. `randomness` opens the device-key commitment.
pub fn assign(
    spec: &ZkSpec,
    ecs: &ConstraintSystem,
    vc: &VerifiableCredential,
    public: &PublicInputs,
    randomness: Option<FieldElement>,
) -> Result<Witness, CircuitError> {
    let spec_id = spec.normalized().id();
    if spec_id != ecs.spec_id {
        return Err(CircuitError::WrongCircuit {
            expected: ecs.spec_id.short(),
            got: spec_id.short(),
        });
    }
    let aux = expected_aux(spec)?;
    if public.aux != aux {
        return Err(CircuitError::LayoutMismatch("aux values do not match the zkSpec".into()));
    }
    let private = PrivateInputs::from_vc(ecs, vc, randomness)?;
    assign_inputs(ecs, public, &private)
}

/// Native evaluation of a condition, the reference for the condition gadgets.
pub fn eval_condition(condition: &Condition, value: &AttributeValue, now_ts: Option<u64>) -> Result<bool, CircuitError> {
    let mismatch = |what: &str| CircuitError::KindMismatch(format!("{what} cannot apply to a {} value", value.kind()));
    match condition {
        Condition::Equality { target } => {
            if target.kind() != value.kind() {
                return Err(mismatch("equality target of another kind"));
            }
            Ok(target == value)
        }
        Condition::Range { min, max } => {
            let v = value.as_u64().ok_or_else(|| mismatch("range"))?;
            Ok(min.is_none_or(|lo| v >= lo) && max.is_none_or(|hi| v <= hi))
        }
        Condition::Membership { set } => {
            if set.iter().any(|s| s.kind() != value.kind()) {
                return Err(mismatch("membership set of another kind"));
            }
            Ok(set.contains(value))
        }
        Condition::RelativeTime {
            offset_seconds,
            direction,
        } => {
            let AttributeValue::Date(v) = value else {
                return Err(mismatch("relative time"));
            };
            let now = now_ts.ok_or_else(|| CircuitError::LayoutMismatch("relative time needs now_ts".into()))?;
            let (v, off, now) = (*v as i128, *offset_seconds as i128, now as i128);
            Ok(match direction {
                TimeDirection::NotOlderThan => v + off >= now,
                TimeDirection::NotNewerThan => v <= now - off,
            })
        }
    }
}

#[cfg(test)]
mod tests;
