//! Randomized properties of the primitives, credentials and zkSpecs.

use std::collections::HashMap;

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

use cdr_core::canonical::ContentHash;
use cdr_core::circuit::gadgets;
use cdr_core::circuit::r1cs::{Builder, Lc, Mode};
use cdr_core::circuit::compile;
use cdr_core::credential::{
    attest, verify_vc, Claim, CredentialSchema, IssuerMeta, SchemaAttribute, SchemaBody, VerifiableCredential,
    SCHEMA_VERSION,
};
use cdr_core::crypto::babyjubjub::base_point;
use cdr_core::crypto::{
    hash_fields, keygen, sign, verify_sig, AttributeKind, AttributeValue, CurvePoint, FieldElement, HashDigest,
    SigKeyPair, Signature,
};
use cdr_core::proofsys::{setup, SchemeId};
use cdr_core::scenario::{self, ConditionKind};
use cdr_core::zkspec::{
    build_zkvpr, canonical_bytes, decode_canonical, validate_spec, ArtifactRef, ClaimRequirement, Condition,
    KeyBinding, TimeDirection, ZkSpec, ZkvprMeta,
};

fn field() -> impl Strategy<Value = FieldElement> {
    any::<[u8; 32]>().prop_map(|b| FieldElement::from_le_bytes_mod_order(&b))
}

fn keypair() -> impl Strategy<Value = SigKeyPair> {
    any::<[u8; 32]>().prop_map(|s| keygen(&s).unwrap())
}

fn message() -> impl Strategy<Value = Vec<FieldElement>> {
    prop::collection::vec(field(), 1..6)
}

fn flip(bytes: &mut [u8], bit: usize) {
    let bit = bit % (bytes.len() * 8);
    bytes[bit / 8] ^= 1 << (bit % 8);
}

/// `Ok(false)` and `Err` both count as rejection.
fn accepts(public: &CurvePoint, msg: &[FieldElement], sig: &Signature) -> bool {
    matches!(verify_sig(public, msg, sig), Ok(true))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn signatures_round_trip(kp in keypair(), msg in message()) {
        let sig = sign(&kp.secret, &msg).unwrap();
        prop_assert!(verify_sig(&kp.public, &msg, &sig).unwrap());
        prop_assert_eq!(sign(&kp.secret, &msg).unwrap(), sig);
    }

    #[test]
    fn serializations_are_bit_exact(x in field(), kp in keypair(), msg in message()) {
        prop_assert_eq!(FieldElement::from_le_bytes(&x.to_le_bytes()).unwrap(), x);
        prop_assert_eq!(FieldElement::from_hex(&x.to_hex()).unwrap(), x);
        let p = kp.public;
        prop_assert!(p.is_on_curve());
        prop_assert_eq!(CurvePoint::from_bytes(&p.to_bytes()).unwrap(), p);
        let sig = sign(&kp.secret, &msg).unwrap();
        let bytes = sig.to_bytes();
        let back = Signature::from_bytes(&bytes).unwrap();
        prop_assert_eq!(back.to_bytes(), bytes);
        prop_assert_eq!(Signature::from_hex(&sig.to_hex()).unwrap(), sig);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn single_bit_flips_are_rejected(
        kp in keypair(),
        msg in message(),
        target in 0u8..3,
        bit in any::<usize>(),
        pos in any::<usize>(),
    ) {
        let sig = sign(&kp.secret, &msg).unwrap();
        match target {
            0 => {
                let mut bytes = sig.to_bytes();
                flip(&mut bytes, bit);
                if let Ok(bad) = Signature::from_bytes(&bytes) {
                    prop_assert!(!accepts(&kp.public, &msg, &bad));
                }
            }
            1 => {
                let mut msg2 = msg.clone();
                let i = pos % msg2.len();
                let mut bytes = msg2[i].to_le_bytes();
                flip(&mut bytes, bit);
                if let Ok(x) = FieldElement::from_le_bytes(&bytes) {
                    msg2[i] = x;
                    prop_assert!(!accepts(&kp.public, &msg2, &sig));
                }
            }
            _ => {
                let mut bytes = kp.public.to_bytes();
                flip(&mut bytes, bit);
                if let Ok(pk) = CurvePoint::from_bytes(&bytes) {
                    prop_assert!(!accepts(&pk, &msg, &sig));
                }
            }
        }
    }
}

// ---- credentials -------------------------------------------------------------------------------

const KINDS: [AttributeKind; 4] = [AttributeKind::Uint, AttributeKind::String, AttributeKind::Date, AttributeKind::Key];

fn random_schema(kinds: &[AttributeKind], tag: u64) -> CredentialSchema {
    CredentialSchema::new(SchemaBody {
        name: format!("schema-{tag}"),
        version: SCHEMA_VERSION.into(),
        issuer: IssuerMeta {
            name: "issuer".into(),
            role: "manufacturer".into(),
        },
        attributes: kinds
            .iter()
            .enumerate()
            .map(|(i, k)| SchemaAttribute {
                attribute_id: i as u32,
                name: format!("attr{i}"),
                kind: *k,
            })
            .collect(),
    })
    .unwrap()
}

fn value_of(kind: AttributeKind, rng: &mut ChaCha20Rng) -> AttributeValue {
    match kind {
        AttributeKind::Uint => AttributeValue::Uint(rng.gen()),
        AttributeKind::Date => AttributeValue::Date(rng.gen()),
        AttributeKind::String => {
            let len = rng.gen_range(0..80);
            AttributeValue::String((0..len).map(|_| rng.gen_range(' '..='~')).collect())
        }
        AttributeKind::Key => AttributeValue::Key(keygen(&rng.gen::<[u8; 32]>()).unwrap().public),
    }
}

fn mutate(v: &AttributeValue) -> AttributeValue {
    match v {
        AttributeValue::Uint(x) => AttributeValue::Uint(x.wrapping_add(1)),
        AttributeValue::Date(x) => AttributeValue::Date(x.wrapping_add(1)),
        AttributeValue::String(s) => AttributeValue::String(format!("{s}!")),
        AttributeValue::Key(p) => AttributeValue::Key(p.add(&base_point())),
    }
}

struct Issued {
    schema: CredentialSchema,
    issuer: SigKeyPair,
    vc: VerifiableCredential,
}

fn issue(kind_idx: &[usize], seed: u64) -> Issued {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let kinds: Vec<AttributeKind> = kind_idx.iter().map(|i| KINDS[*i]).collect();
    let schema = random_schema(&kinds, seed);
    let issuer = keygen(&rng.gen::<[u8; 32]>()).unwrap();
    let subject = FieldElement::from_le_bytes_mod_order(&rng.gen::<[u8; 32]>());
    let claims: Vec<Claim> = kinds
        .iter()
        .enumerate()
        .map(|(i, k)| Claim {
            subject_id: subject,
            attribute_id: i as u32,
            value: value_of(*k, &mut rng),
        })
        .collect();
    let vc = attest(&claims, &issuer, &schema).unwrap();
    Issued { schema, issuer, vc }
}

fn breaks(vc: &VerifiableCredential, issued: &Issued) -> bool {
    !matches!(verify_vc(vc, &issued.issuer.public, &issued.schema), Ok(true))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn attest_then_verify(kinds in prop::collection::vec(0usize..4, 1..=16), seed in any::<u64>()) {
        let issued = issue(&kinds, seed);
        prop_assert!(verify_vc(&issued.vc, &issued.issuer.public, &issued.schema).unwrap());
        let back = VerifiableCredential::from_file(&issued.vc.to_file()).unwrap();
        prop_assert_eq!(back.to_file(), issued.vc.to_file());
        prop_assert_eq!(&back, &issued.vc);
    }

    #[test]
    fn any_single_claim_mutation_breaks_the_credential(
        kinds in prop::collection::vec(0usize..4, 1..=16),
        seed in any::<u64>(),
        which in any::<usize>(),
        how in 0u8..5,
    ) {
        let issued = issue(&kinds, seed);
        let mut vc = issued.vc.clone();
        let n = vc.claims.len();
        let c = &mut vc.claims[which % n];
        match how {
            0 => c.claim.subject_id = FieldElement::from_fr(c.claim.subject_id.fr() + FieldElement::from_u64(1).fr()),
            1 => c.claim.attribute_id = (c.claim.attribute_id + 1) % (n as u32 + 1),
            2 => c.claim.value = mutate(&c.claim.value),
            3 => c.signature.s += 1u32,
            _ => {
                let mut bytes = c.signature.to_bytes();
                bytes[0] ^= 1;
                match Signature::from_bytes(&bytes) {
                    Ok(s) => c.signature = s,
                    Err(_) => c.signature.s += 2u32,
                }
            }
        }
        prop_assert!(breaks(&vc, &issued));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(50))]

    #[test]
    fn foreign_issuer_key_never_verifies(seed in any::<u64>(), other in any::<[u8; 32]>()) {
        let issued = issue(&[3, 0, 1, 2], seed);
        let other = keygen(&other).unwrap();
        prop_assume!(other.public != issued.issuer.public);
        prop_assert!(!verify_vc(&issued.vc, &other.public, &issued.schema).unwrap());
        // Re-stamping the credential with the other key does not help either.
        let mut vc = issued.vc.clone();
        vc.issuer_pubkey = other.public;
        prop_assert!(!verify_vc(&vc, &other.public, &issued.schema).unwrap());
    }
}

// ---- hashing -----------------------------------------------------------------------------------

fn random_fields(rng: &mut ChaCha20Rng, max_len: usize) -> Vec<FieldElement> {
    let n = rng.gen_range(1..=max_len);
    (0..n)
        .map(|_| FieldElement::from_le_bytes_mod_order(&rng.gen::<[u8; 32]>()))
        .collect()
}

#[test]
fn no_hash_collisions_over_random_pairs() {
    let mut rng = ChaCha20Rng::seed_from_u64(0x4841_5348);
    let mut checked = 0;
    while checked < 1000 {
        let a = random_fields(&mut rng, 8);
        let mut b = if rng.gen_bool(0.5) { random_fields(&mut rng, 8) } else { a.clone() };
        if b == a {
            // Near miss: same prefix, one element or the length differs.
            if rng.gen_bool(0.5) {
                b.push(FieldElement::ZERO);
            } else {
                let i = rng.gen_range(0..b.len());
                b[i] = FieldElement::from_fr(b[i].fr() + FieldElement::from_u64(1).fr());
            }
        }
        assert_ne!(hash_fields(&a).unwrap(), hash_fields(&b).unwrap(), "{a:?} vs {b:?}");
        checked += 1;
    }
}

#[test]
fn hash_gadget_agrees_with_native_hash() {
    let mut rng = ChaCha20Rng::seed_from_u64(0x4741_4447);
    for _ in 0..100 {
        let inputs = random_fields(&mut rng, 12);
        let mut b = Builder::new(Mode::Assign);
        let vars: Vec<Lc> = inputs.iter().map(|x| Lc::var(b.alloc(x.fr()))).collect();
        let out = gadgets::hash(&mut b, &vars);
        assert!(b.violation().is_none());
        assert_eq!(b.eval(&out), hash_fields(&inputs).unwrap().value().fr());
    }
}

// ---- zkSpecs -----------------------------------------------------------------------------------

fn random_value(rng: &mut ChaCha20Rng) -> AttributeValue {
    let kind = KINDS[rng.gen_range(0..4)];
    match kind {
        AttributeKind::Key => AttributeValue::Key(base_point().mul_u64(rng.gen_range(1..1000))),
        AttributeKind::String => AttributeValue::String(format!("s{}", rng.gen_range(0..1000))),
        k => value_of(k, rng),
    }
}

fn random_condition(rng: &mut ChaCha20Rng) -> Condition {
    match rng.gen_range(0..4) {
        0 => Condition::Equality {
            target: random_value(rng),
        },
        1 => Condition::Range {
            min: rng.gen_bool(0.7).then(|| rng.gen_range(0..1000)),
            max: rng.gen_bool(0.7).then(|| rng.gen_range(0..1000)),
        },
        2 => {
            let n = rng.gen_range(0..6);
            Condition::Membership {
                set: (0..n).map(|_| random_value(rng)).collect(),
            }
        }
        _ => Condition::RelativeTime {
            offset_seconds: rng.gen_range(-100_000..100_000),
            direction: if rng.gen() { TimeDirection::NotOlderThan } else { TimeDirection::NotNewerThan },
        },
    }
}

fn random_spec(rng: &mut ChaCha20Rng) -> ZkSpec {
    let n = rng.gen_range(0..5);
    ZkSpec::new(
        HashDigest(FieldElement::from_u64(rng.gen_range(0..4))),
        rng.gen_range(0..4),
        if rng.gen() { KeyBinding::Plain } else { KeyBinding::Committed },
        (0..n)
            .map(|_| ClaimRequirement {
                attribute_id: rng.gen_range(0..6),
                condition: random_condition(rng),
            })
            .collect(),
    )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn canonical_encoding_round_trips(seed in any::<u64>()) {
        let spec = random_spec(&mut ChaCha20Rng::seed_from_u64(seed));
        let bytes = canonical_bytes(&spec);
        prop_assert_eq!(decode_canonical(&bytes).unwrap(), spec.normalized());
        prop_assert_eq!(ZkSpec::from_text(&spec.to_text()).unwrap().id(), spec.id());
        let mut shuffled = spec.clone();
        shuffled.requirements.reverse();
        prop_assert_eq!(canonical_bytes(&shuffled), bytes);
    }
}

#[test]
fn spec_ids_are_injective() {
    let mut rng = ChaCha20Rng::seed_from_u64(0x1d5);
    let mut seen: HashMap<ContentHash, ZkSpec> = HashMap::new();
    let mut draws = 0;
    while seen.len() < 10_000 {
        draws += 1;
        assert!(draws < 50_000, "generator too repetitive");
        let spec = random_spec(&mut rng).normalized();
        let id = spec.id();
        if let Some(prev) = seen.get(&id) {
            assert_eq!(prev, &spec, "two specs share id {id}");
        }
        seen.insert(id, spec);
    }
}

/// Requirements over the reference schema, valid or not.
fn scenario_requirement(rng: &mut ChaCha20Rng, schema: &CredentialSchema) -> ClaimRequirement {
    let attr = |name: &str| schema.attribute_by_name(name).unwrap().attribute_id;
    let (attribute_id, condition) = match rng.gen_range(0..12) {
        0 => (attr(scenario::FIRMWARE_VERSION), Condition::Range { min: Some(rng.gen_range(0..10)), max: None }),
        1 => {
            let a = rng.gen_range(0..20);
            let b = rng.gen_range(0..20);
            (attr(scenario::FIRMWARE_VERSION), Condition::Range { min: Some(a), max: Some(b) })
        }
        2 => (attr(scenario::FIRMWARE_VERSION), Condition::Range { min: None, max: None }),
        3 => (attr(scenario::MEASUREMENT_TYPE_ATTR), Condition::Range { min: Some(1), max: None }),
        4 => {
            let n = rng.gen_range(0..4);
            let set = (0..n).map(|i| AttributeValue::Uint(10_000 + i)).collect();
            (attr(scenario::POSTCODE), Condition::Membership { set })
        }
        5 => (
            attr(scenario::POSTCODE),
            Condition::Membership {
                set: vec![AttributeValue::Uint(1), AttributeValue::String("x".into())],
            },
        ),
        6 => (
            attr(scenario::POSTCODE),
            Condition::Membership {
                set: (0..65).map(AttributeValue::Uint).collect(),
            },
        ),
        7 => (
            attr(scenario::MEASUREMENT_TYPE_ATTR),
            Condition::Equality {
                target: AttributeValue::String(scenario::MEASUREMENT_TYPE.into()),
            },
        ),
        8 => (attr(scenario::MEASUREMENT_TYPE_ATTR), Condition::Equality { target: AttributeValue::Uint(3) }),
        9 => (
            attr(scenario::MANUFACTURED_AT),
            Condition::RelativeTime {
                offset_seconds: 86_400 * rng.gen_range(1..400),
                direction: TimeDirection::NotOlderThan,
            },
        ),
        10 => (
            attr(scenario::FIRMWARE_VERSION),
            Condition::RelativeTime {
                offset_seconds: 60,
                direction: TimeDirection::NotNewerThan,
            },
        ),
        _ => (99, Condition::Range { min: Some(1), max: None }),
    };
    ClaimRequirement { attribute_id, condition }
}

#[test]
fn validation_agrees_with_compilation() {
    let schema = scenario::schema();
    let key = schema.attribute_by_name(scenario::DEVICE_KEY).unwrap().attribute_id;
    let mut rng = ChaCha20Rng::seed_from_u64(0xa9ee);
    let (mut accepted, mut refused) = (0, 0);
    for _ in 0..60 {
        let n = rng.gen_range(0..3);
        let reqs = (0..n).map(|_| scenario_requirement(&mut rng, &schema)).collect();
        let device_key = if rng.gen_ratio(1, 8) { key + 1 } else { key };
        let schema_ref = if rng.gen_ratio(1, 8) { HashDigest(FieldElement::from_u64(1)) } else { schema.schema_id };
        let spec = ZkSpec::new(schema_ref, device_key, KeyBinding::Plain, reqs);
        let report = validate_spec(&spec, &schema);
        let compiled = compile(&spec, &schema);
        assert_eq!(report.is_ok(), compiled.is_ok(), "spec {spec:?}\nreport {report}\ncompile {:?}", compiled.err());
        if report.is_ok() {
            accepted += 1;
        } else {
            refused += 1;
        }
    }
    assert!(accepted >= 5 && refused >= 5, "{accepted} accepted, {refused} refused");
}

#[test]
fn reference_conditions_have_distinct_zkvprs() {
    let schema = scenario::schema();
    let mut rng = ChaCha20Rng::seed_from_u64(3);
    let mut ids = Vec::new();
    for kind in ConditionKind::ALL {
        let spec = kind.spec(&schema, KeyBinding::Plain);
        let ecs = compile(&spec, &schema).unwrap();
        let (pk, _) = setup(SchemeId::PerCircuitSetup, &ecs, None, &mut rng).unwrap();
        let meta = ZkvprMeta {
            initiator: "0xinitiator".into(),
            created_at: 0,
            ..Default::default()
        };
        let zkvpr = build_zkvpr(&spec, &pk, None, ArtifactRef::vdr(ecs.digest()), SchemeId::PerCircuitSetup, meta).unwrap();
        zkvpr.check_integrity(&pk.to_bytes(), &schema).unwrap();
        ids.push((zkvpr.id(), zkvpr.spec_id));
    }
    for i in 0..ids.len() {
        for j in i + 1..ids.len() {
            assert_ne!(ids[i].0, ids[j].0);
            assert_ne!(ids[i].1, ids[j].1);
        }
    }
}
