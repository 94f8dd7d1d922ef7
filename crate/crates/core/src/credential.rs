//! Credential data model and attestation.
//!
//! A credential is a list of claims about one subject. The issuer signs every
//! claim separately so a presentation can load only the claims it needs.

use serde::{Deserialize, Serialize};

use crate::canonical::{to_canonical_json, to_canonical_json_pretty};
use crate::crypto::encode::encode_value;
pub use crate::crypto::encode::{AttributeKind, AttributeValue};
use crate::crypto::{hash_bytes, sign, verify_sig, CryptoError, CurvePoint, FieldElement, HashDigest, SigKeyPair, Signature};

pub const WALLET_VERSION: &str = "cdr-vc/1";
pub const SCHEMA_VERSION: &str = "cdr-schema/1";

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum CredentialError {
    #[error("unknown attribute id {0}")]
    UnknownAttribute(u32),
    #[error("attribute {name}: schema expects {expected}, got {got}")]
    KindMismatch {
        name: String,
        expected: AttributeKind,
        got: AttributeKind,
    },
    #[error("claims reference more than one subject")]
    MixedSubjects,
    #[error("credential has no claims")]
    Empty,
    #[error("more than one claim for attribute {0}")]
    DuplicateAttribute(String),
    #[error("credential was issued under schema {vc} but schema {schema} was given")]
    SchemaMismatch { vc: HashDigest, schema: HashDigest },
    #[error("invalid schema: {0}")]
    InvalidSchema(String),
    #[error("bad file: {0}")]
    Format(String),
    #[error(transparent)]
    Crypto(#[from] CryptoError),
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SchemaAttribute {
    pub attribute_id: u32,
    pub name: String,
    pub kind: AttributeKind,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct IssuerMeta {
    pub name: String,
    /// manufacturer, regulator, service provider, owner, ...
    pub role: String,
}

/// Everything the schema id commits to.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SchemaBody {
    pub name: String,
    pub version: String,
    pub issuer: IssuerMeta,
    pub attributes: Vec<SchemaAttribute>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CredentialSchema {
    pub schema_id: HashDigest,
    #[serde(flatten)]
    pub body: SchemaBody,
}

impl SchemaBody {
    pub fn schema_id(&self) -> HashDigest {
        hash_bytes(to_canonical_json(self).as_bytes()).expect("non-empty packing")
    }
}

impl CredentialSchema {
    pub fn new(body: SchemaBody) -> Result<Self, CredentialError> {
        check_body(&body)?;
        Ok(CredentialSchema {
            schema_id: body.schema_id(),
            body,
        })
    }

    /// Recomputes the id and re-checks the attribute table.
    pub fn check(&self) -> Result<(), CredentialError> {
        check_body(&self.body)?;
        if self.body.schema_id() != self.schema_id {
            return Err(CredentialError::InvalidSchema("schema id does not match body".into()));
        }
        Ok(())
    }

    pub fn attribute(&self, id: u32) -> Option<&SchemaAttribute> {
        self.body.attributes.get(id as usize).filter(|a| a.attribute_id == id)
    }

    pub fn attribute_by_name(&self, name: &str) -> Option<&SchemaAttribute> {
        self.body.attributes.iter().find(|a| a.name == name)
    }

    pub fn attributes(&self) -> &[SchemaAttribute] {
        &self.body.attributes
    }

    pub fn to_file(&self) -> String {
        to_canonical_json_pretty(&SchemaFile {
            version: SCHEMA_VERSION.into(),
            schema: self.clone(),
        })
    }

    pub fn from_file(text: &str) -> Result<Self, CredentialError> {
        let file: SchemaFile = serde_json::from_str(text).map_err(|e| CredentialError::Format(e.to_string()))?;
        if file.version != SCHEMA_VERSION {
            return Err(CredentialError::Format(format!("unsupported schema version {}", file.version)));
        }
        file.schema.check()?;
        Ok(file.schema)
    }
}

fn check_body(body: &SchemaBody) -> Result<(), CredentialError> {
    if body.attributes.is_empty() {
        return Err(CredentialError::InvalidSchema("no attributes".into()));
    }
    for (i, a) in body.attributes.iter().enumerate() {
        if a.attribute_id as usize != i {
            return Err(CredentialError::InvalidSchema(format!(
                "attribute ids must be dense from 0; position {i} has id {}",
                a.attribute_id
            )));
        }
        if body.attributes[..i].iter().any(|b| b.name == a.name) {
            return Err(CredentialError::InvalidSchema(format!("duplicate attribute name {}", a.name)));
        }
    }
    Ok(())
}

#[derive(Serialize, Deserialize)]
struct SchemaFile {
    version: String,
    schema: CredentialSchema,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Claim {
    pub subject_id: FieldElement,
    pub attribute_id: u32,
    pub value: AttributeValue,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct VerifiableClaim {
    pub claim: Claim,
    pub signature: Signature,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct VerifiableCredential {
    pub schema_id: HashDigest,
    pub issuer_pubkey: CurvePoint,
    pub claims: Vec<VerifiableClaim>,
}

impl VerifiableCredential {
    pub fn claim(&self, attribute_id: u32) -> Option<&VerifiableClaim> {
        self.claims.iter().find(|c| c.claim.attribute_id == attribute_id)
    }

    pub fn subject_id(&self) -> Option<FieldElement> {
        self.claims.first().map(|c| c.claim.subject_id)
    }

    pub fn to_file(&self) -> String {
        to_canonical_json_pretty(&WalletFile {
            version: WALLET_VERSION.into(),
            credential: self.clone(),
        })
    }

    pub fn from_file(text: &str) -> Result<Self, CredentialError> {
        let file: WalletFile = serde_json::from_str(text).map_err(|e| CredentialError::Format(e.to_string()))?;
        if file.version != WALLET_VERSION {
            return Err(CredentialError::Format(format!("unsupported wallet version {}", file.version)));
        }
        Ok(file.credential)
    }
}

#[derive(Serialize, Deserialize)]
struct WalletFile {
    version: String,
    credential: VerifiableCredential,
}

/// The signed message for one claim: `[schema_id, subject_id, attribute_id, encode(value)]`.
pub fn claim_message(
    schema_id: &HashDigest,
    subject_id: &FieldElement,
    attribute_id: u32,
    value: &AttributeValue,
) -> Result<Vec<FieldElement>, CryptoError> {
    Ok(vec![
        schema_id.value(),
        *subject_id,
        FieldElement::from_u64(attribute_id as u64),
        encode_value(value)?,
    ])
}

fn conform(claim: &Claim, schema: &CredentialSchema) -> Result<(), CredentialError> {
    let attr = schema
        .attribute(claim.attribute_id)
        .ok_or(CredentialError::UnknownAttribute(claim.attribute_id))?;
    if attr.kind != claim.value.kind() {
        return Err(CredentialError::KindMismatch {
            name: attr.name.clone(),
            expected: attr.kind,
            got: claim.value.kind(),
        });
    }
    Ok(())
}

fn check_claim_set<'a>(
    claims: impl Iterator<Item = &'a Claim>,
    schema: &CredentialSchema,
) -> Result<(), CredentialError> {
    let mut subject = None;
    let mut seen = Vec::new();
    for claim in claims {
        conform(claim, schema)?;
        match subject {
            None => subject = Some(claim.subject_id),
            Some(s) if s != claim.subject_id => return Err(CredentialError::MixedSubjects),
            _ => {}
        }
        if seen.contains(&claim.attribute_id) {
            let name = schema.attribute(claim.attribute_id).map(|a| a.name.clone()).unwrap_or_default();
            return Err(CredentialError::DuplicateAttribute(name));
        }
        seen.push(claim.attribute_id);
    }
    if subject.is_none() {
        return Err(CredentialError::Empty);
    }
    Ok(())
}

/// Signs every claim with the issuer key.
pub fn attest(
    claims: &[Claim],
    issuer: &SigKeyPair,
    schema: &CredentialSchema,
) -> Result<VerifiableCredential, CredentialError> {
    schema.check()?;
    check_claim_set(claims.iter(), schema)?;
    let claims = claims
        .iter()
        .map(|claim| {
            let msg = claim_message(&schema.schema_id, &claim.subject_id, claim.attribute_id, &claim.value)?;
            Ok(VerifiableClaim {
                claim: claim.clone(),
                signature: sign(&issuer.secret, &msg)?,
            })
        })
        .collect::<Result<Vec<_>, CredentialError>>()?;
    Ok(VerifiableCredential {
        schema_id: schema.schema_id,
        issuer_pubkey: issuer.public,
        claims,
    })
}

/// `Err` for malformed input (unknown attribute, off-curve key); `Ok(false)` for anything
/// that simply does not verify.
pub fn verify_vc(
    vc: &VerifiableCredential,
    issuer_pubkey: &CurvePoint,
    schema: &CredentialSchema,
) -> Result<bool, CredentialError> {
    for c in &vc.claims {
        if schema.attribute(c.claim.attribute_id).is_none() {
            return Err(CredentialError::UnknownAttribute(c.claim.attribute_id));
        }
    }
    if schema.check().is_err() || vc.schema_id != schema.schema_id || vc.issuer_pubkey != *issuer_pubkey {
        return Ok(false);
    }
    if check_claim_set(vc.claims.iter().map(|c| &c.claim), schema).is_err() {
        return Ok(false);
    }
    for c in &vc.claims {
        let msg = claim_message(&vc.schema_id, &c.claim.subject_id, c.claim.attribute_id, &c.claim.value)?;
        if !verify_sig(issuer_pubkey, &msg, &c.signature)? {
            return Ok(false);
        }
    }
    Ok(true)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::crypto::keygen;

    fn schema() -> CredentialSchema {
        CredentialSchema::new(SchemaBody {
            name: "sensor".into(),
            version: "1".into(),
            issuer: IssuerMeta {
                name: "acme".into(),
                role: "manufacturer".into(),
            },
            attributes: vec![
                SchemaAttribute { attribute_id: 0, name: "device_key".into(), kind: AttributeKind::Key },
                SchemaAttribute { attribute_id: 1, name: "firmware_version".into(), kind: AttributeKind::Uint },
                SchemaAttribute { attribute_id: 2, name: "measurement_type".into(), kind: AttributeKind::String },
            ],
        })
        .unwrap()
    }

    fn claims(subject: u64) -> Vec<Claim> {
        let device = keygen(&[42u8; 32]).unwrap();
        let s = FieldElement::from_u64(subject);
        vec![
            Claim { subject_id: s, attribute_id: 0, value: AttributeValue::Key(device.public) },
            Claim { subject_id: s, attribute_id: 1, value: AttributeValue::Uint(7) },
            Claim { subject_id: s, attribute_id: 2, value: AttributeValue::String("temperature".into()) },
        ]
    }

    #[test]
    fn message_layout() {
        let sid = HashDigest(FieldElement::from_u64(99));
        let m = claim_message(&sid, &FieldElement::from_u64(1), 3, &AttributeValue::Uint(7)).unwrap();
        assert_eq!(m.len(), 4);
        assert_eq!(m[3], FieldElement::from_u64(7));
        let other = claim_message(&sid, &FieldElement::from_u64(1), 2, &AttributeValue::Uint(7)).unwrap();
        assert_ne!(m, other);
        let other_schema =
            claim_message(&HashDigest(FieldElement::from_u64(98)), &FieldElement::from_u64(1), 3, &AttributeValue::Uint(7))
                .unwrap();
        assert_ne!(m, other_schema);
    }

    #[test]
    fn attest_and_verify() {
        let issuer = keygen(&[1u8; 32]).unwrap();
        let s = schema();
        let vc = attest(&claims(5), &issuer, &s).unwrap();
        assert_eq!(vc.claims.len(), 3);
        assert!(verify_vc(&vc, &issuer.public, &s).unwrap());
    }

    #[test]
    fn mixed_subjects_rejected() {
        let issuer = keygen(&[1u8; 32]).unwrap();
        let mut cl = claims(5);
        cl[1].subject_id = FieldElement::from_u64(6);
        assert_eq!(attest(&cl, &issuer, &schema()), Err(CredentialError::MixedSubjects));
    }

    #[test]
    fn kind_mismatch_names_attribute() {
        let issuer = keygen(&[1u8; 32]).unwrap();
        let mut cl = claims(5);
        cl[1].value = AttributeValue::String("seven".into());
        let err = attest(&cl, &issuer, &schema()).unwrap_err();
        assert!(err.to_string().contains("firmware_version"), "{err}");
    }

    #[test]
    fn tampered_value_and_foreign_issuer() {
        let issuer = keygen(&[1u8; 32]).unwrap();
        let other = keygen(&[2u8; 32]).unwrap();
        let s = schema();
        let vc = attest(&claims(5), &issuer, &s).unwrap();
        let mut bad = vc.clone();
        bad.claims[1].claim.value = AttributeValue::Uint(8);
        assert!(!verify_vc(&bad, &issuer.public, &s).unwrap());
        assert!(!verify_vc(&vc, &other.public, &s).unwrap());
    }

    #[test]
    fn unknown_attribute_is_an_error() {
        let issuer = keygen(&[1u8; 32]).unwrap();
        let s = schema();
        let mut vc = attest(&claims(5), &issuer, &s).unwrap();
        vc.claims[0].claim.attribute_id = 17;
        assert_eq!(verify_vc(&vc, &issuer.public, &s), Err(CredentialError::UnknownAttribute(17)));
    }

    #[test]
    fn wallet_and_schema_files_round_trip() {
        let issuer = keygen(&[1u8; 32]).unwrap();
        let s = schema();
        let vc = attest(&claims(5), &issuer, &s).unwrap();
        let text = vc.to_file();
        assert_eq!(VerifiableCredential::from_file(&text).unwrap(), vc);
        assert_eq!(VerifiableCredential::from_file(&text).unwrap().to_file(), text);
        assert_eq!(CredentialSchema::from_file(&s.to_file()).unwrap(), s);
    }

    #[test]
    fn schema_rejects_sparse_ids() {
        let mut body = schema().body;
        body.attributes[1].attribute_id = 5;
        assert!(CredentialSchema::new(body).is_err());
    }
}
