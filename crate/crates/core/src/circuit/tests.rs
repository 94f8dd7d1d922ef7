use super::*;
use crate::crypto::SigKeyPair;
use crate::scenario::{self, ConditionKind, DeviceProfile};
use crate::zkspec::ClaimRequirement;

fn public_for(spec: &ZkSpec, issuer: &SigKeyPair, device: &SigKeyPair, now: Option<u64>) -> PublicInputs {
    PublicInputs {
        issuer_pubkey: issuer.public,
        device: DeviceEntry::Key(device.public),
        aux: expected_aux(spec).unwrap(),
        owner_binding: owner_binding("owner-1").unwrap(),
        now_ts: now,
    }
}

fn with_profile(spec: &ZkSpec, profile: &DeviceProfile) -> Result<Witness, CircuitError> {
    let schema = scenario::schema();
    let ecs = compile(spec, &schema).unwrap();
    let (issuer, device) = (scenario::issuer(), scenario::device(1));
    let vc = scenario::credential(&schema, &issuer, &device, profile).unwrap();
    assign(spec, &ecs, &vc, &public_for(spec, &issuer, &device, None), None)
}

#[test]
fn reference_specs_assign_and_satisfy() {
    let schema = scenario::schema();
    let device = scenario::device(0);
    let vc = scenario::eligible_credential(&device);
    for kind in ConditionKind::ALL {
        let spec = kind.spec(&schema, KeyBinding::Plain);
        let ecs = compile(&spec, &schema).unwrap();
        let public = public_for(&spec, &scenario::issuer(), &device, None);
        let w = assign(&spec, &ecs, &vc, &public, None).unwrap();
        assert_eq!(w.first_unsatisfied(&ecs), None, "{kind}");
        assert_eq!(w.public, public.to_field_vec());
        assert_eq!(w.public.len(), ecs.num_public());
    }
}

#[test]
fn committed_binding_assigns_with_opening() {
    let schema = scenario::schema();
    let spec = scenario::range_spec(&schema, KeyBinding::Committed);
    let ecs = compile(&spec, &schema).unwrap();
    let device = scenario::device(0);
    let vc = scenario::eligible_credential(&device);
    let r = FieldElement::from_u64(987_654_321);
    let mut public = public_for(&spec, &scenario::issuer(), &device, None);
    public.device = DeviceEntry::Commitment(commit_device_key(&device.public, &r).unwrap());
    let w = assign(&spec, &ecs, &vc, &public, Some(r)).unwrap();
    assert_eq!(w.first_unsatisfied(&ecs), None);
    assert_eq!(
        assign(&spec, &ecs, &vc, &public, Some(FieldElement::from_u64(1))),
        Err(CircuitError::BindingFailed)
    );
    assert_eq!(assign(&spec, &ecs, &vc, &public, None), Err(CircuitError::BindingFailed));
    // The key itself never appears among the public inputs.
    assert!(!w.public.contains(&device.public.x()));
}

#[test]
fn firmware_bounds() {
    let schema = scenario::schema();
    let spec = scenario::range_spec(&schema, KeyBinding::Plain);
    for (fw, ok) in [(7, true), (5, true), (4, false), (3, false), (0, false), (u64::MAX, true)] {
        let p = DeviceProfile {
            firmware_version: fw,
            ..DeviceProfile::eligible()
        };
        let r = with_profile(&spec, &p);
        if ok {
            assert!(r.is_ok(), "firmware {fw}: {r:?}");
        } else {
            assert_eq!(r, Err(CircuitError::ConditionUnsatisfied("firmware_version".into())), "firmware {fw}");
        }
    }
}

#[test]
fn membership_all_placements() {
    let schema = scenario::schema();
    let set = [10115u64, 10117, 10119];
    let spec = scenario::membership_spec_with(&schema, KeyBinding::Plain, &set);
    let cond = &spec.requirements[0].condition;
    for postcode in [10115u64, 10117, 10119, 10178] {
        let native = eval_condition(cond, &AttributeValue::Uint(postcode), None).unwrap();
        let p = DeviceProfile {
            postcode,
            ..DeviceProfile::eligible()
        };
        assert_eq!(with_profile(&spec, &p).is_ok(), native, "postcode {postcode}");
    }
}

#[test]
fn equality_rejects_other_measurement() {
    let schema = scenario::schema();
    let spec = scenario::equality_spec(&schema, KeyBinding::Plain);
    let p = DeviceProfile {
        measurement_type: "humidity".into(),
        ..DeviceProfile::eligible()
    };
    assert_eq!(
        with_profile(&spec, &p),
        Err(CircuitError::ConditionUnsatisfied("measurement_type".into()))
    );
}

#[test]
fn tampered_claim_fails_signature() {
    let schema = scenario::schema();
    let spec = scenario::range_spec(&schema, KeyBinding::Plain);
    let ecs = compile(&spec, &schema).unwrap();
    let device = scenario::device(0);
    let mut vc = scenario::eligible_credential(&device);
    let fw = schema.attribute_by_name(scenario::FIRMWARE_VERSION).unwrap().attribute_id;
    let idx = vc.claims.iter().position(|c| c.claim.attribute_id == fw).unwrap();
    vc.claims[idx].claim.value = AttributeValue::Uint(8);
    let public = public_for(&spec, &scenario::issuer(), &device, None);
    assert_eq!(
        assign(&spec, &ecs, &vc, &public, None),
        Err(CircuitError::SignatureInvalid("firmware_version".into()))
    );
}

#[test]
fn wrong_issuer_key_fails_signature() {
    let schema = scenario::schema();
    let spec = scenario::range_spec(&schema, KeyBinding::Plain);
    let ecs = compile(&spec, &schema).unwrap();
    let device = scenario::device(0);
    let vc = scenario::eligible_credential(&device);
    let public = public_for(&spec, &scenario::other_issuer(0), &device, None);
    assert_eq!(
        assign(&spec, &ecs, &vc, &public, None),
        Err(CircuitError::SignatureInvalid("device_key".into()))
    );
}

#[test]
fn mixed_subjects_never_assign() {
    let schema = scenario::schema();
    let spec = scenario::range_spec(&schema, KeyBinding::Plain);
    let ecs = compile(&spec, &schema).unwrap();
    let (a, b) = (scenario::device(0), scenario::device(1));
    let vc_a = scenario::eligible_credential(&a);
    let vc_b = scenario::credential(
        &schema,
        &scenario::issuer(),
        &b,
        &DeviceProfile {
            firmware_version: 9,
            ..DeviceProfile::eligible()
        },
    )
    .unwrap();
    // Device key from A, firmware claim from B: both signatures are honest.
    let fw = schema.attribute_by_name(scenario::FIRMWARE_VERSION).unwrap().attribute_id;
    let mut mixed = vc_a.clone();
    let idx = mixed.claims.iter().position(|c| c.claim.attribute_id == fw).unwrap();
    mixed.claims[idx] = vc_b.claim(fw).unwrap().clone();
    let public = public_for(&spec, &scenario::issuer(), &a, None);
    assert_eq!(assign(&spec, &ecs, &mixed, &public, None), Err(CircuitError::SubjectMismatch));
}

#[test]
fn device_key_must_match_attested_key() {
    let schema = scenario::schema();
    let spec = scenario::range_spec(&schema, KeyBinding::Plain);
    let ecs = compile(&spec, &schema).unwrap();
    let device = scenario::device(0);
    let vc = scenario::eligible_credential(&device);
    let public = public_for(&spec, &scenario::issuer(), &scenario::device(7), None);
    assert_eq!(assign(&spec, &ecs, &vc, &public, None), Err(CircuitError::BindingFailed));
}

#[test]
fn missing_claim_is_named() {
    let schema = scenario::schema();
    let spec = scenario::equality_spec(&schema, KeyBinding::Plain);
    let ecs = compile(&spec, &schema).unwrap();
    let device = scenario::device(0);
    let mut vc = scenario::eligible_credential(&device);
    let attr = schema.attribute_by_name(scenario::MEASUREMENT_TYPE_ATTR).unwrap().attribute_id;
    vc.claims.retain(|c| c.claim.attribute_id != attr);
    let public = public_for(&spec, &scenario::issuer(), &device, None);
    assert_eq!(
        assign(&spec, &ecs, &vc, &public, None),
        Err(CircuitError::MissingClaim("measurement_type".into()))
    );
}

#[test]
fn aux_and_layout_checks() {
    let schema = scenario::schema();
    let spec = scenario::range_spec(&schema, KeyBinding::Plain);
    let ecs = compile(&spec, &schema).unwrap();
    let device = scenario::device(0);
    let vc = scenario::eligible_credential(&device);
    let mut public = public_for(&spec, &scenario::issuer(), &device, None);
    public.aux = vec![FieldElement::from_u64(1)];
    assert!(matches!(assign(&spec, &ecs, &vc, &public, None), Err(CircuitError::LayoutMismatch(_))));
    let mut public = public_for(&spec, &scenario::issuer(), &device, Some(5));
    public.aux = expected_aux(&spec).unwrap();
    assert!(matches!(assign(&spec, &ecs, &vc, &public, None), Err(CircuitError::LayoutMismatch(_))));
    let other = scenario::equality_spec(&schema, KeyBinding::Plain);
    assert!(matches!(
        assign(&other, &ecs, &vc, &public_for(&other, &scenario::issuer(), &device, None), None),
        Err(CircuitError::WrongCircuit { .. })
    ));
}

#[test]
fn owner_binding_is_constrained() {
    let schema = scenario::schema();
    let spec = scenario::range_spec(&schema, KeyBinding::Plain);
    let ecs = compile(&spec, &schema).unwrap();
    let owner = ecs.layout.iter().position(|n| n == "owner_binding").unwrap() as u32;
    let used = ecs
        .constraints
        .iter()
        .any(|k| [&k.a, &k.b, &k.c].iter().any(|lc| lc.0.iter().any(|(v, _)| *v == Var::Public(owner))));
    assert!(used);
    assert_ne!(owner_binding("alice").unwrap(), owner_binding("bob").unwrap());
}

#[test]
fn every_public_input_is_constrained() {
    let schema = scenario::schema();
    for spec in [
        scenario::membership_spec(&schema, KeyBinding::Committed),
        relative_time_spec(&schema, TimeDirection::NotOlderThan),
    ] {
        let ecs = compile(&spec, &schema).unwrap();
        for i in 0..ecs.num_public() as u32 {
            let used = ecs
                .constraints
                .iter()
                .any(|k| [&k.a, &k.b, &k.c].iter().any(|lc| lc.0.iter().any(|(v, _)| *v == Var::Public(i))));
            assert!(used, "public input {} unconstrained", ecs.layout[i as usize]);
        }
    }
}

fn relative_time_spec(schema: &CredentialSchema, direction: TimeDirection) -> ZkSpec {
    ZkSpec::new(
        schema.schema_id,
        0,
        KeyBinding::Plain,
        vec![ClaimRequirement {
            attribute_id: schema.attribute_by_name(scenario::MANUFACTURED_AT).unwrap().attribute_id,
            condition: Condition::RelativeTime {
                offset_seconds: 30 * 86_400,
                direction,
            },
        }],
    )
}

#[test]
fn relative_time_in_circuit() {
    let schema = scenario::schema();
    let day = 86_400u64;
    let now = scenario::MANUFACTURED + 400 * day;
    for direction in [TimeDirection::NotOlderThan, TimeDirection::NotNewerThan] {
        let spec = relative_time_spec(&schema, direction);
        let ecs = compile(&spec, &schema).unwrap();
        assert_eq!(ecs.layout.last().unwrap(), "now_ts");
        let (issuer, device) = (scenario::issuer(), scenario::device(2));
        for age in [0u64, 29, 30, 31, 365] {
            let made = now - age * day;
            let p = DeviceProfile {
                manufactured_at: made,
                ..DeviceProfile::eligible()
            };
            let vc = scenario::credential(&schema, &issuer, &device, &p).unwrap();
            let native = eval_condition(&spec.requirements[0].condition, &AttributeValue::Date(made), Some(now)).unwrap();
            let r = assign(&spec, &ecs, &vc, &public_for(&spec, &issuer, &device, Some(now)), None);
            assert_eq!(r.is_ok(), native, "{direction:?} age {age}: {r:?}");
        }
    }
}

#[test]
fn eval_condition_examples() {
    let range = Condition::Range { min: Some(5), max: None };
    assert!(eval_condition(&range, &AttributeValue::Uint(5), None).unwrap());
    assert!(!eval_condition(&range, &AttributeValue::Uint(4), None).unwrap());
    let set = Condition::Membership {
        set: vec![AttributeValue::Uint(10115), AttributeValue::Uint(10117)],
    };
    assert!(!eval_condition(&set, &AttributeValue::Uint(10119), None).unwrap());
    assert!(eval_condition(&set, &AttributeValue::String("x".into()), None).is_err());
    assert!(eval_condition(&range, &AttributeValue::String("5".into()), None).is_err());

    // 31 days old against a 30-day window, computed independently from calendar dates.
    let now = chrono::DateTime::parse_from_rfc3339("2024-06-30T12:00:00Z").unwrap();
    let made = now - chrono::Duration::days(31);
    let window = Condition::RelativeTime {
        offset_seconds: chrono::Duration::days(30).num_seconds(),
        direction: TimeDirection::NotOlderThan,
    };
    let v = AttributeValue::Date(made.timestamp() as u64);
    assert!(!eval_condition(&window, &v, Some(now.timestamp() as u64)).unwrap());
    let fresh = AttributeValue::Date((now - chrono::Duration::days(29)).timestamp() as u64);
    assert!(eval_condition(&window, &fresh, Some(now.timestamp() as u64)).unwrap());
    assert!(eval_condition(&window, &v, None).is_err());
}

#[test]
fn compile_is_deterministic_and_serializes() {
    let schema = scenario::schema();
    let spec = scenario::membership_spec(&schema, KeyBinding::Plain);
    let a = compile(&spec, &schema).unwrap();
    let b = compile(&spec, &schema).unwrap();
    assert_eq!(a, b);
    let bytes = a.to_bytes();
    assert_eq!(bytes, b.to_bytes());
    let back = ConstraintSystem::from_bytes(&bytes).unwrap();
    assert_eq!(back, a);
    assert_eq!(back.digest(), a.digest());
    assert!(ConstraintSystem::from_bytes(&bytes[..bytes.len() - 1]).is_err());
    let manifest: serde_json::Value = serde_json::from_str(&a.layout_manifest()).unwrap();
    assert_eq!(manifest["public_inputs"].as_array().unwrap().len(), a.num_public());
}

#[test]
fn size_ordering_across_conditions() {
    let schema = scenario::schema();
    let count = |spec: &ZkSpec| constraint_count(&compile(spec, &schema).unwrap());
    let range = count(&scenario::range_spec(&schema, KeyBinding::Plain));
    let equality = count(&scenario::equality_spec(&schema, KeyBinding::Plain));
    let m10 = count(&scenario::membership_spec(&schema, KeyBinding::Plain));
    let twenty: Vec<u64> = (0..20).map(|i| 20_000 + i).collect();
    let m20 = count(&scenario::membership_spec_with(&schema, KeyBinding::Plain, &twenty));
    assert!(range > 0);
    assert!(m10 > range);
    assert!(m20 > m10);
    assert!(range.abs_diff(equality) * 4 <= range.max(equality));
}

#[test]
fn adding_a_requirement_costs_one_signature_gadget() {
    let schema = scenario::schema();
    let base = scenario::range_spec(&schema, KeyBinding::Plain);
    let base_ecs = compile(&base, &schema).unwrap();
    let mut extended = base.clone();
    extended.requirements.push(ClaimRequirement {
        attribute_id: schema.attribute_by_name(scenario::POSTCODE).unwrap().attribute_id,
        condition: Condition::Range { min: Some(10000), max: None },
    });
    extended.normalize();
    let ext = compile(&extended, &schema).unwrap();
    // Measured: one signature section, one subject link and one range gadget with a single bound.
    let sig = base_ecs
        .sections
        .iter()
        .find(|s| s.label == "signature: firmware_version")
        .map(|s| s.end - s.start)
        .unwrap();
    let cond = base_ecs
        .sections
        .iter()
        .find(|s| s.label == "condition: firmware_version")
        .map(|s| s.end - s.start)
        .unwrap();
    assert_eq!(ext.num_constraints() - base_ecs.num_constraints(), sig + 1 + cond);
}

#[test]
fn invalid_spec_does_not_compile() {
    let schema = scenario::schema();
    let mut spec = scenario::range_spec(&schema, KeyBinding::Plain);
    spec.requirements.clear();
    assert!(matches!(compile(&spec, &schema), Err(CircuitError::InvalidSpec(_))));
}

#[test]
fn duplicate_attribute_requirements_get_distinct_names() {
    let schema = scenario::schema();
    let fw = schema.attribute_by_name(scenario::FIRMWARE_VERSION).unwrap().attribute_id;
    let spec = ZkSpec::new(
        schema.schema_id,
        0,
        KeyBinding::Plain,
        vec![
            ClaimRequirement {
                attribute_id: fw,
                condition: Condition::Range { min: Some(5), max: None },
            },
            ClaimRequirement {
                attribute_id: fw,
                condition: Condition::Membership {
                    set: vec![AttributeValue::Uint(7), AttributeValue::Uint(9)],
                },
            },
        ],
    );
    let ecs = compile(&spec, &schema).unwrap();
    assert_eq!(ecs.slots.len(), 2);
    let names: Vec<&str> = ecs.requirements.iter().map(|r| r.name.as_str()).collect();
    assert_eq!(names, ["firmware_version range", "firmware_version membership"]);
    let p = DeviceProfile {
        firmware_version: 8,
        ..DeviceProfile::eligible()
    };
    assert_eq!(
        with_profile(&spec, &p),
        Err(CircuitError::ConditionUnsatisfied("firmware_version membership".into()))
    );
}

#[test]
fn signature_gadget_agrees_with_native_verify() {
    let schema = scenario::schema();
    let spec = scenario::range_spec(&schema, KeyBinding::Plain);
    let ecs = compile(&spec, &schema).unwrap();
    let device = scenario::device(0);
    let issuer = scenario::issuer();
    let vc = scenario::eligible_credential(&device);
    let public = public_for(&spec, &issuer, &device, None);
    let good = PrivateInputs::from_vc(&ecs, &vc, None).unwrap();
    let mut bad = good.clone();
    bad.claims[1].signature.s += 1u32;
    for p in [good, bad] {
        let c = &p.claims[1];
        let msg = crate::credential::claim_message(&schema.schema_id, &c.subject_id, 1, &c.value).unwrap();
        let native = crate::crypto::verify_sig(&issuer.public, &msg, &c.signature).unwrap();
        assert_eq!(assign_inputs(&ecs, &public, &p).is_ok(), native);
    }
}

#[test]
fn unchecked_assignment_keeps_the_violation() {
    let schema = scenario::schema();
    let spec = scenario::range_spec(&schema, KeyBinding::Plain);
    let ecs = compile(&spec, &schema).unwrap();
    let (issuer, device) = (scenario::issuer(), scenario::device(0));
    let profile = DeviceProfile {
        firmware_version: 4,
        ..DeviceProfile::eligible()
    };
    let vc = scenario::credential(&schema, &issuer, &device, &profile).unwrap();
    let public = public_for(&spec, &issuer, &device, None);
    let private = PrivateInputs::from_vc(&ecs, &vc, None).unwrap();
    assert!(assign_inputs(&ecs, &public, &private).is_err());
    let forged = assign_unchecked(&ecs, &public, &private).unwrap();
    let index = forged.first_unsatisfied(&ecs).unwrap();
    assert_eq!(ecs.label_of(index), Some("condition: firmware_version"));
}
