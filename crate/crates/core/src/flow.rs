//! Owner-side steps shared by the CLI, the bench and the tests: turning a credential
//! into a zkVP and authenticating data under a committed key.

use rand::RngCore;

use crate::circuit::auth::{assign_auth, compile_auth};
use crate::circuit::{self, commit_device_key, owner_binding, CircuitError, ConstraintSystem, DeviceEntry, PublicInputs};
use crate::credential::VerifiableCredential;
use crate::crypto::{hash_bytes, sign, CryptoError, FieldElement, HashDigest, SigKeyPair};
use crate::proofsys::{self, ProofError, ProvingKey, SchemeId, UniversalSrs, VerificationKey};
use crate::registry::{RegistrationParams, ZkVp};
use crate::zkspec::{expected_aux, KeyBinding, ZkSpec};

#[derive(Debug, thiserror::Error)]
pub enum FlowError {
    #[error(transparent)]
    Circuit(#[from] CircuitError),
    #[error(transparent)]
    Proof(#[from] ProofError),
    #[error(transparent)]
    Crypto(#[from] CryptoError),
    #[error("{0}")]
    Input(String),
}

/// Public inputs for presenting `vc` under `spec`. `randomness` opens the device-key
/// commitment and is required for committed binding.
pub fn public_inputs(
    spec: &ZkSpec,
    ecs: &ConstraintSystem,
    vc: &VerifiableCredential,
    randomness: Option<&FieldElement>,
    sender: &str,
    now_ts: u64,
) -> Result<PublicInputs, FlowError> {
    let key = vc
        .claim(spec.device_key_attribute_id)
        .and_then(|c| match &c.claim.value {
            crate::crypto::AttributeValue::Key(k) => Some(*k),
            _ => None,
        })
        .ok_or_else(|| CircuitError::MissingClaim("device key".into()))?;
    let device = match (spec.binding, randomness) {
        (KeyBinding::Plain, _) => DeviceEntry::Key(key),
        (KeyBinding::Committed, Some(r)) => DeviceEntry::Commitment(commit_device_key(&key, r)?),
        (KeyBinding::Committed, None) => return Err(FlowError::Input("committed binding needs commitment randomness".into())),
    };
    Ok(PublicInputs {
        issuer_pubkey: vc.issuer_pubkey,
        device,
        aux: expected_aux(spec)?,
        owner_binding: owner_binding(sender)?,
        now_ts: ecs.has_time().then_some(now_ts),
    })
}

/// Witness generation and proving in one step.
#[allow(clippy::too_many_arguments)]
pub fn present<R: RngCore>(
    spec: &ZkSpec,
    ecs: &ConstraintSystem,
    pk: &ProvingKey,
    vc: &VerifiableCredential,
    randomness: Option<&FieldElement>,
    sender: &str,
    now_ts: u64,
    rng: &mut R,
) -> Result<ZkVp, FlowError> {
    let public = public_inputs(spec, ecs, vc, randomness, sender, now_ts)?;
    let witness = circuit::assign(spec, ecs, vc, &public, randomness.copied())?;
    let proof = proofsys::prove(pk.scheme, ecs, &witness, pk, rng)?;
    Ok(ZkVp { public, proof })
}

/// Keys for a spec plus, under committed binding, for the authentication circuit.
pub struct Keys {
    pub pk: ProvingKey,
    pub vk: VerificationKey,
    pub auth: Option<(ProvingKey, VerificationKey)>,
}

pub fn setup_keys<R: RngCore>(
    scheme: SchemeId,
    ecs: &ConstraintSystem,
    srs: Option<&UniversalSrs>,
    rng: &mut R,
) -> Result<Keys, FlowError> {
    let (pk, vk) = proofsys::setup(scheme, ecs, srs, rng)?;
    let auth = match ecs.binding {
        KeyBinding::Plain => None,
        KeyBinding::Committed => Some(proofsys::setup(scheme, compile_auth(), srs, rng)?),
    };
    Ok(Keys { pk, vk, auth })
}

/// Contract parameters admitting exactly the aux vector of `spec`.
pub fn registration_params(
    spec: &ZkSpec,
    keys: &Keys,
    zkvpr_ref: crate::canonical::ContentHash,
    issuers: Vec<crate::crypto::CurvePoint>,
) -> Result<RegistrationParams, FlowError> {
    Ok(RegistrationParams {
        vk: keys.vk.clone(),
        auth_vk: keys.auth.as_ref().map(|(_, vk)| vk.clone()),
        zkvpr_ref,
        allowed_issuer_keys: issuers,
        allowed_aux: vec![expected_aux(spec)?],
        mode: spec.binding,
    })
}

/// Signs `payload` with the device key and proves, without revealing the key, that the
/// signer opens `commitment`.
pub fn authenticate<R: RngCore>(
    auth_pk: &ProvingKey,
    device: &SigKeyPair,
    randomness: &FieldElement,
    payload: &[u8],
    rng: &mut R,
) -> Result<(HashDigest, proofsys::Proof), FlowError> {
    let commitment = commit_device_key(&device.public, randomness)?;
    let payload_hash = hash_bytes(payload)?;
    let signature = sign(&device.secret, &[payload_hash.value()])?;
    let witness = assign_auth(&device.public, randomness, &commitment, &payload_hash, &signature)?;
    let proof = proofsys::prove(auth_pk.scheme, compile_auth(), &witness, auth_pk, rng)?;
    Ok((commitment, proof))
}
