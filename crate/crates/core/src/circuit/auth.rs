//! Authentication circuit for committed device keys.
//!
//! Proves knowledge of a key `A`, randomness `r` and a signature over
//! `[payload_hash]` such that `commitment = hash_fields([A.x, A.y, r])` and the
//! signature verifies under `A`. Public inputs: `[commitment, payload_hash]`.

use std::sync::OnceLock;

use super::gadgets::{self, PointVar};
use super::r1cs::{Builder, Lc, Mode};
use super::{CircuitError, ConstraintSystem, Witness, BINDING_LABEL};
use crate::canonical::ContentHash;
use crate::crypto::{CurvePoint, FieldElement, Fr, HashDigest, Signature};
use crate::zkspec::KeyBinding;

const DOMAIN: &[u8] = b"cdr/auth-circuit/1";

/// Stands in for a spec id: keys for this circuit are bound to it.
pub fn auth_circuit_id() -> ContentHash {
    ContentHash::of(DOMAIN)
}

struct AuthValues {
    commitment: Fr,
    payload: Fr,
    key: (Fr, Fr),
    randomness: Fr,
    r: (Fr, Fr),
    s: num_bigint::BigUint,
}

fn synthesize(b: &mut Builder, v: &AuthValues) {
    let commitment = b.alloc_public(v.commitment);
    let payload = b.alloc_public(v.payload);
    let key = PointVar::alloc(b, v.key.0, v.key.1);
    let randomness = Lc::var(b.alloc(v.randomness));
    let r = PointVar::alloc(b, v.r.0, v.r.1);
    b.section(BINDING_LABEL, |b| {
        gadgets::enforce_on_curve(b, &key);
        let c = gadgets::hash(b, &[key.x.clone(), key.y.clone(), randomness]);
        b.enforce_equal(&c, &Lc::var(commitment));
    });
    b.section("signature: device", |b| {
        let s_bits = gadgets::integer_bits(b, &v.s, gadgets::SCALAR_BITS);
        let key8 = gadgets::times_eight(b, &key);
        gadgets::eddsa_verify(b, &key, &key8, &[Lc::var(payload)], &r, &s_bits);
    });
}

fn build() -> ConstraintSystem {
    let zero = Fr::default();
    let mut b = Builder::new(Mode::Compile);
    synthesize(
        &mut b,
        &AuthValues {
            commitment: zero,
            payload: zero,
            key: (zero, zero),
            randomness: zero,
            r: (zero, zero),
            s: Default::default(),
        },
    );
    let out = b.into_parts();
    ConstraintSystem {
        spec_id: auth_circuit_id(),
        schema_id: HashDigest(FieldElement::ZERO),
        binding: KeyBinding::Committed,
        layout: vec!["device.commitment".into(), "payload_hash".into()],
        slots: Vec::new(),
        requirements: Vec::new(),
        num_private: out.private.len(),
        constraints: out.constraints,
        sections: out.sections,
    }
}

/// The circuit is fixed, so it is compiled once per process.
pub fn compile_auth() -> &'static ConstraintSystem {
    static CS: OnceLock<ConstraintSystem> = OnceLock::new();
    CS.get_or_init(build)
}

pub fn auth_public_inputs(commitment: &HashDigest, payload_hash: &HashDigest) -> Vec<FieldElement> {
    vec![commitment.value(), payload_hash.value()]
}

pub fn assign_auth(
    key: &CurvePoint,
    randomness: &FieldElement,
    commitment: &HashDigest,
    payload_hash: &HashDigest,
    signature: &Signature,
) -> Result<Witness, CircuitError> {
    let ecs = compile_auth();
    let values = AuthValues {
        commitment: commitment.value().fr(),
        payload: payload_hash.value().fr(),
        key: (key.x().fr(), key.y().fr()),
        randomness: randomness.fr(),
        r: (signature.r.x().fr(), signature.r.y().fr()),
        s: signature.s.clone(),
    };
    let mut b = Builder::new(Mode::Assign);
    synthesize(&mut b, &values);
    let out = b.into_parts();
    if let Some(v) = out.violation {
        return Err(super::violation_error(&v.label, v.index));
    }
    Ok(Witness {
        spec_id: ecs.spec_id,
        public: auth_public_inputs(commitment, payload_hash),
        private: out.private,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::commit_device_key;
    use crate::crypto::{hash_bytes, keygen, sign};

    #[test]
    fn honest_authentication_assigns() {
        let device = keygen(&[9u8; 32]).unwrap();
        let r = FieldElement::from_u64(424242);
        let commitment = commit_device_key(&device.public, &r).unwrap();
        let payload = hash_bytes(b"reading: 21.5C").unwrap();
        let sig = sign(&device.secret, &[payload.value()]).unwrap();
        let w = assign_auth(&device.public, &r, &commitment, &payload, &sig).unwrap();
        assert_eq!(w.first_unsatisfied(compile_auth()), None);
        assert_eq!(w.public.len(), 2);
    }

    #[test]
    fn wrong_opening_or_signature_fails() {
        let device = keygen(&[9u8; 32]).unwrap();
        let r = FieldElement::from_u64(1);
        let commitment = commit_device_key(&device.public, &r).unwrap();
        let payload = hash_bytes(b"x").unwrap();
        let sig = sign(&device.secret, &[payload.value()]).unwrap();
        let other = hash_bytes(b"y").unwrap();
        assert_eq!(
            assign_auth(&device.public, &FieldElement::from_u64(2), &commitment, &payload, &sig),
            Err(CircuitError::BindingFailed)
        );
        assert_eq!(
            assign_auth(&device.public, &r, &commitment, &other, &sig),
            Err(CircuitError::SignatureInvalid("device".into()))
        );
    }
}
