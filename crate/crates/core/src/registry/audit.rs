//! Byte scan of serialized chain state for credential data that must stay private.
//!
//! Every sensitive value is searched for in each textual form it could take in the
//! JSON encodings used here: little- and big-endian hex of its field encoding, and
//! for long values the decimal form.

use serde::Serialize;

use crate::credential::VerifiableCredential;
use crate::crypto::encode::encode_key;
use crate::crypto::{encode_value, AttributeValue, CurvePoint, FieldElement, Signature};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Needle {
    pub label: String,
    pub pattern: Vec<u8>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Leak {
    pub label: String,
    pub offset: usize,
}

/// Decimal forms shorter than this match too much unrelated text to be useful.
const MIN_DECIMAL_DIGITS: usize = 10;

fn push(out: &mut Vec<Needle>, label: &str, pattern: impl Into<Vec<u8>>) {
    let pattern = pattern.into();
    if !pattern.is_empty() {
        out.push(Needle {
            label: label.to_string(),
            pattern,
        });
    }
}

pub fn field_needles(label: &str, v: &FieldElement) -> Vec<Needle> {
    let mut out = Vec::new();
    let le = v.to_le_bytes();
    let mut be = le;
    be.reverse();
    push(&mut out, label, hex::encode(le));
    push(&mut out, label, hex::encode(be));
    push(&mut out, label, le.to_vec());
    let dec = v.to_biguint().to_string();
    if dec.len() >= MIN_DECIMAL_DIGITS {
        push(&mut out, label, dec);
    }
    out
}

pub fn point_needles(label: &str, p: &CurvePoint) -> Vec<Needle> {
    let mut out = Vec::new();
    push(&mut out, label, p.to_hex());
    push(&mut out, label, p.to_bytes().to_vec());
    out.extend(field_needles(&format!("{label}.x"), &p.x()));
    out.extend(field_needles(&format!("{label}.y"), &p.y()));
    out
}

pub fn signature_needles(label: &str, s: &Signature) -> Vec<Needle> {
    let mut out = Vec::new();
    push(&mut out, label, s.to_hex());
    out.extend(point_needles(&format!("{label}.R"), &s.r));
    let bytes = s.to_bytes();
    push(&mut out, &format!("{label}.S"), hex::encode(&bytes[64..]));
    out
}

/// The device key in every form, including the subject id derived from it.
pub fn device_key_needles(key: &CurvePoint) -> Vec<Needle> {
    let mut out = point_needles("device key", key);
    out.extend(field_needles("device subject id", &encode_key(key)));
    out
}

/// Claim values and claim signatures of `vc`. Values whose encoding is in `public`
/// (aux whitelist entries, e.g. an equality target) are public by construction and
/// skipped; the device-key claim is left to [`device_key_needles`].
pub fn credential_needles(vc: &VerifiableCredential, public: &[FieldElement]) -> Vec<Needle> {
    let mut out = Vec::new();
    for vcl in &vc.claims {
        let id = vcl.claim.attribute_id;
        out.extend(signature_needles(&format!("claim {id} signature"), &vcl.signature));
        let value = &vcl.claim.value;
        if matches!(value, AttributeValue::Key(_)) {
            continue;
        }
        let Ok(enc) = encode_value(value) else { continue };
        if public.contains(&enc) {
            continue;
        }
        let label = format!("claim {id} value");
        out.extend(field_needles(&label, &enc));
        if let AttributeValue::String(s) = value {
            push(&mut out, &label, s.as_bytes());
        }
    }
    out
}

pub fn scan(haystack: &[u8], needles: &[Needle]) -> Vec<Leak> {
    needles
        .iter()
        .filter_map(|n| {
            haystack
                .windows(n.pattern.len())
                .position(|w| w == n.pattern.as_slice())
                .map(|offset| Leak {
                    label: n.label.clone(),
                    offset,
                })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario;

    #[test]
    fn finds_planted_values_in_any_form() {
        let device = scenario::device(0);
        let needles = device_key_needles(&device.public);
        for text in [
            format!("{{\"k\":\"{}\"}}", device.public.to_hex()),
            format!("[\"{}\"]", device.public.y()),
            format!("x={}", device.public.x().to_biguint()),
        ] {
            assert!(!scan(text.as_bytes(), &needles).is_empty(), "{text}");
        }
        assert!(scan(b"nothing here", &needles).is_empty());
    }

    #[test]
    fn public_values_are_not_needles() {
        let vc = scenario::eligible_credential(&scenario::device(0));
        let target = encode_value(&AttributeValue::String(scenario::MEASUREMENT_TYPE.into())).unwrap();
        let all = credential_needles(&vc, &[]);
        let some = credential_needles(&vc, &[target]);
        assert!(some.len() < all.len());
        assert!(all.iter().any(|n| n.pattern == b"temperature"));
        assert!(!some.iter().any(|n| n.pattern == b"temperature"));
    }
}
