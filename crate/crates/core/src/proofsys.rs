//! Proof backends behind one setup/prove/verify contract.
//!
//! `PerCircuitSetup` is Groth16 with a fresh trusted setup per circuit.
//! `UniversalSetup` is Marlin over a KZG structured reference string that can be
//! reused by every circuit under its size bound. Both run on BN254.

use std::fmt;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::str::FromStr;

use ark_bn254::Bn254;
use ark_ff::Zero;
use ark_marlin::ahp::AHPForR1CS;
use ark_marlin::{IndexProverKey, IndexVerifierKey, Marlin};
use ark_poly::univariate::DensePolynomial;
use ark_poly_commit::marlin_pc::MarlinKZG10;
use ark_poly_commit::PCUniversalParams;
use ark_relations::lc;
use ark_relations::r1cs::{
    ConstraintSynthesizer, ConstraintSystemRef, LinearCombination, SynthesisError, Variable,
};
use ark_serialize::{CanonicalDeserialize, CanonicalSerialize};
use blake2::Blake2s;
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::canonical::ContentHash;
use crate::circuit::r1cs::{Lc, Var};
use crate::circuit::{ConstraintSystem, Witness};
use crate::crypto::{FieldElement, Fr};

type Pc = MarlinKZG10<Bn254, DensePolynomial<Fr>>;
type MarlinBn = Marlin<Fr, Pc, Blake2s>;
type Srs = ark_marlin::UniversalSRS<Fr, Pc>;

pub const ENVELOPE_MAGIC: &[u8; 4] = b"CDRK";
pub const ENVELOPE_VERSION: u16 = 1;
const HEADER_LEN: usize = 4 + 2 + 1 + 1 + 32 + 4;

#[derive(Debug, Clone, thiserror::Error, PartialEq, Eq)]
pub enum ProofError {
    #[error("SRS required for {0}")]
    SrsRequired(SchemeId),
    #[error("SRS too small: circuit needs degree {needed}, SRS supports {available}")]
    SrsTooSmall { needed: usize, available: usize },
    #[error("key mismatch: {0}")]
    KeyMismatch(String),
    #[error("unsatisfied witness: constraint {index} ({label})")]
    Unsatisfied { index: usize, label: String },
    #[error("public input count {got} does not match the verification key ({expected})")]
    LayoutMismatch { expected: usize, got: usize },
    #[error("malformed {0}")]
    Malformed(String),
    #[error("backend failure: {0}")]
    Backend(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SchemeId {
    /// Groth16.
    PerCircuitSetup,
    /// Marlin with a universal KZG reference string.
    UniversalSetup,
}

impl SchemeId {
    pub const ALL: [SchemeId; 2] = [SchemeId::PerCircuitSetup, SchemeId::UniversalSetup];

    pub fn as_str(&self) -> &'static str {
        match self {
            SchemeId::PerCircuitSetup => "per_circuit_setup",
            SchemeId::UniversalSetup => "universal_setup",
        }
    }

    pub fn backend(&self) -> &'static str {
        match self {
            SchemeId::PerCircuitSetup => "groth16",
            SchemeId::UniversalSetup => "marlin",
        }
    }

    fn tag(&self) -> u8 {
        match self {
            SchemeId::PerCircuitSetup => 1,
            SchemeId::UniversalSetup => 2,
        }
    }

    fn from_tag(t: u8) -> Option<Self> {
        match t {
            1 => Some(SchemeId::PerCircuitSetup),
            2 => Some(SchemeId::UniversalSetup),
            _ => None,
        }
    }
}

impl fmt::Display for SchemeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SchemeId {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().replace('-', "_").as_str() {
            "per_circuit_setup" | "per_circuit" | "groth16" => Ok(SchemeId::PerCircuitSetup),
            "universal_setup" | "universal" | "marlin" => Ok(SchemeId::UniversalSetup),
            _ => Err(format!("unknown scheme {s:?} (expected per_circuit_setup or universal_setup)")),
        }
    }
}

// ---- envelope ----------------------------------------------------------------------------

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Kind {
    ProvingKey = 1,
    VerificationKey = 2,
    Proof = 3,
    Srs = 4,
}

struct Envelope<'a> {
    scheme: SchemeId,
    spec_id: ContentHash,
    num_public: u32,
    payload: &'a [u8],
}

fn seal(kind: Kind, scheme: SchemeId, spec_id: &ContentHash, num_public: usize, payload: &[u8]) -> Vec<u8> {
    let mut out = Vec::with_capacity(HEADER_LEN + payload.len());
    out.extend_from_slice(ENVELOPE_MAGIC);
    out.extend_from_slice(&ENVELOPE_VERSION.to_le_bytes());
    out.push(kind as u8);
    out.push(scheme.tag());
    out.extend_from_slice(&spec_id.0);
    out.extend_from_slice(&(num_public as u32).to_le_bytes());
    out.extend_from_slice(payload);
    out
}

fn open(kind: Kind, bytes: &[u8]) -> Result<Envelope<'_>, ProofError> {
    let what = format!("{kind:?}").to_lowercase();
    let bad = |m: &str| ProofError::Malformed(format!("{what}: {m}"));
    if bytes.len() < HEADER_LEN {
        return Err(bad("truncated header"));
    }
    if &bytes[..4] != ENVELOPE_MAGIC {
        return Err(bad("bad magic"));
    }
    if u16::from_le_bytes([bytes[4], bytes[5]]) != ENVELOPE_VERSION {
        return Err(bad("unsupported version"));
    }
    if bytes[6] != kind as u8 {
        return Err(bad("wrong artifact kind"));
    }
    let scheme = SchemeId::from_tag(bytes[7]).ok_or_else(|| bad("unknown scheme"))?;
    let mut id = [0u8; 32];
    id.copy_from_slice(&bytes[8..40]);
    Ok(Envelope {
        scheme,
        spec_id: ContentHash(id),
        num_public: u32::from_le_bytes(bytes[40..44].try_into().unwrap()),
        payload: &bytes[HEADER_LEN..],
    })
}

fn ser_err(e: impl fmt::Debug) -> ProofError {
    ProofError::Backend(format!("serialization: {e:?}"))
}

// ---- keys, proofs, SRS -----------------------------------------------------------------------

#[derive(Clone)]
enum PkInner {
    Groth16(ark_groth16::ProvingKey<Bn254>),
    Marlin(Box<IndexProverKey<Fr, Pc>>),
}

#[derive(Clone)]
enum VkInner {
    Groth16(ark_groth16::VerifyingKey<Bn254>),
    Marlin(IndexVerifierKey<Fr, Pc>),
}

#[derive(Clone)]
pub struct ProvingKey {
    pub scheme: SchemeId,
    pub spec_id: ContentHash,
    pub num_public: usize,
    inner: PkInner,
}

#[derive(Clone)]
pub struct VerificationKey {
    pub scheme: SchemeId,
    pub spec_id: ContentHash,
    pub num_public: usize,
    inner: VkInner,
}

impl fmt::Debug for ProvingKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "ProvingKey({}, spec {})", self.scheme, self.spec_id.short())
    }
}

impl fmt::Debug for VerificationKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "VerificationKey({}, spec {})", self.scheme, self.spec_id.short())
    }
}

impl PartialEq for VerificationKey {
    fn eq(&self, other: &Self) -> bool {
        self.to_bytes() == other.to_bytes()
    }
}

impl Eq for VerificationKey {}

impl ProvingKey {
    /// Proving keys are large, so they are stored uncompressed and read back without
    /// subgroup checks; integrity comes from the content hash pinned in the zkVPR.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut payload = Vec::new();
        match &self.inner {
            PkInner::Groth16(k) => k.serialize_unchecked(&mut payload),
            PkInner::Marlin(k) => k.serialize_unchecked(&mut payload),
        }
        .expect("in-memory serialization");
        seal(Kind::ProvingKey, self.scheme, &self.spec_id, self.num_public, &payload)
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, ProofError> {
        let env = open(Kind::ProvingKey, bytes)?;
        let mut reader = env.payload;
        let inner = match env.scheme {
            SchemeId::PerCircuitSetup => ark_groth16::ProvingKey::deserialize_unchecked(&mut reader)
                .map(PkInner::Groth16),
            SchemeId::UniversalSetup => IndexProverKey::deserialize_unchecked(&mut reader)
                .map(|k| PkInner::Marlin(Box::new(k))),
        }
        .map_err(|e| ProofError::Malformed(format!("proving key: {e:?}")))?;
        if !reader.is_empty() {
            return Err(ProofError::Malformed("proving key: trailing bytes".into()));
        }
        Ok(ProvingKey {
            scheme: env.scheme,
            spec_id: env.spec_id,
            num_public: env.num_public as usize,
            inner,
        })
    }

    pub fn size_bytes(&self) -> usize {
        HEADER_LEN
            + match &self.inner {
                PkInner::Groth16(k) => k.uncompressed_size(),
                PkInner::Marlin(k) => k.uncompressed_size(),
            }
    }

    pub fn content_hash(&self) -> ContentHash {
        ContentHash::of(&self.to_bytes())
    }
}

impl VerificationKey {
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut payload = Vec::new();
        match &self.inner {
            VkInner::Groth16(k) => k.serialize(&mut payload),
            VkInner::Marlin(k) => k.serialize(&mut payload),
        }
        .expect("in-memory serialization");
        seal(Kind::VerificationKey, self.scheme, &self.spec_id, self.num_public, &payload)
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, ProofError> {
        let env = open(Kind::VerificationKey, bytes)?;
        let mut reader = env.payload;
        let inner = match env.scheme {
            SchemeId::PerCircuitSetup => {
                ark_groth16::VerifyingKey::deserialize(&mut reader).map(VkInner::Groth16)
            }
            SchemeId::UniversalSetup => IndexVerifierKey::deserialize(&mut reader).map(VkInner::Marlin),
        }
        .map_err(|e| ProofError::Malformed(format!("verification key: {e:?}")))?;
        if !reader.is_empty() {
            return Err(ProofError::Malformed("verification key: trailing bytes".into()));
        }
        let vk = VerificationKey {
            scheme: env.scheme,
            spec_id: env.spec_id,
            num_public: env.num_public as usize,
            inner,
        };
        let consistent = match &vk.inner {
            VkInner::Groth16(k) => k.gamma_abc_g1.len() == vk.num_public + 1,
            VkInner::Marlin(k) => k.index_info.num_instance_variables >= vk.num_public + 1,
        };
        if !consistent {
            return Err(ProofError::Malformed("verification key: input count disagrees with header".into()));
        }
        Ok(vk)
    }

    pub fn size_bytes(&self) -> usize {
        HEADER_LEN
            + match &self.inner {
                VkInner::Groth16(k) => k.serialized_size(),
                VkInner::Marlin(k) => k.serialized_size(),
            }
    }

    pub fn content_hash(&self) -> ContentHash {
        ContentHash::of(&self.to_bytes())
    }

    /// Group elements of the key that enter verification as commitments.
    pub fn index_commitments(&self) -> usize {
        match &self.inner {
            VkInner::Groth16(_) => 0,
            VkInner::Marlin(k) => k.index_comms.len(),
        }
    }
}

impl Serialize for VerificationKey {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&hex::encode(self.to_bytes()))
    }
}

impl<'de> Deserialize<'de> for VerificationKey {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = <String as Deserialize>::deserialize(d)?;
        let bytes = hex::decode(s).map_err(serde::de::Error::custom)?;
        VerificationKey::from_bytes(&bytes).map_err(serde::de::Error::custom)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Proof {
    pub scheme: SchemeId,
    pub spec_id: ContentHash,
    /// Compressed backend proof.
    pub bytes: Vec<u8>,
}

impl Proof {
    pub fn size_bytes(&self) -> usize {
        self.bytes.len()
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        seal(Kind::Proof, self.scheme, &self.spec_id, 0, &self.bytes)
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, ProofError> {
        let env = open(Kind::Proof, bytes)?;
        Ok(Proof {
            scheme: env.scheme,
            spec_id: env.spec_id,
            bytes: env.payload.to_vec(),
        })
    }

    pub fn to_hex(&self) -> String {
        hex::encode(self.to_bytes())
    }

    pub fn from_hex(s: &str) -> Result<Self, ProofError> {
        let bytes = hex::decode(s).map_err(|e| ProofError::Malformed(format!("proof hex: {e}")))?;
        Proof::from_bytes(&bytes)
    }

    /// Group elements the verifier must process from the proof itself.
    pub fn commitment_count(&self) -> usize {
        match self.scheme {
            SchemeId::PerCircuitSetup => 3,
            SchemeId::UniversalSetup => ark_marlin::Proof::<Fr, Pc>::deserialize(self.bytes.as_slice())
                .map(|p| p.commitments.iter().map(Vec::len).sum())
                .unwrap_or(0),
        }
    }
}

impl Serialize for Proof {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_hex())
    }
}

impl<'de> Deserialize<'de> for Proof {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = <String as Deserialize>::deserialize(d)?;
        Proof::from_hex(&s).map_err(serde::de::Error::custom)
    }
}

/// Size parameters of a universal reference string, in Marlin's terms.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SrsBounds {
    pub num_constraints: usize,
    pub num_variables: usize,
    pub num_non_zero: usize,
}

/// Nonzero matrix entries per constraint assumed when sizing an SRS by constraint
/// count alone. The compiled circuits stay below this.
pub const SRS_DENSITY: usize = 3;

/// Constraint bound of the SRS the tools create when none is supplied.
pub const DEFAULT_SRS_MAX_CONSTRAINTS: usize = 1 << 16;

impl SrsBounds {
    pub fn for_max_constraints(n: usize) -> Self {
        SrsBounds {
            num_constraints: n,
            num_variables: n,
            num_non_zero: n * SRS_DENSITY,
        }
    }

    /// The smallest bounds that fit `ecs` after Marlin's input padding.
    pub fn for_circuit(ecs: &ConstraintSystem) -> Self {
        let inputs = (1 + ecs.num_public()).next_power_of_two();
        let dim = (inputs + ecs.num_private).max(ecs.num_constraints());
        let (a, b, c) = ecs.matrix_nnz();
        SrsBounds {
            num_constraints: dim,
            num_variables: dim,
            num_non_zero: a.max(b).max(c).max(1),
        }
    }

    pub fn max_degree(&self) -> Result<usize, ProofError> {
        AHPForR1CS::<Fr>::max_degree(self.num_constraints, self.num_variables, self.num_non_zero)
            .map_err(|e| ProofError::Backend(format!("{e:?}")))
    }
}

#[derive(Clone)]
pub struct UniversalSrs {
    pub bounds: SrsBounds,
    pub entropy_commitment: [u8; 32],
    params: Srs,
}

impl fmt::Debug for UniversalSrs {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "UniversalSrs(max degree {})", self.max_degree())
    }
}

impl UniversalSrs {
    pub fn max_degree(&self) -> usize {
        self.params.max_degree()
    }

    pub fn max_constraints(&self) -> usize {
        self.bounds.num_constraints
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut payload = Vec::new();
        for v in [self.bounds.num_constraints, self.bounds.num_variables, self.bounds.num_non_zero] {
            payload.extend_from_slice(&(v as u64).to_le_bytes());
        }
        payload.extend_from_slice(&self.entropy_commitment);
        self.params.serialize_unchecked(&mut payload).expect("in-memory serialization");
        seal(Kind::Srs, SchemeId::UniversalSetup, &ContentHash([0; 32]), 0, &payload)
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, ProofError> {
        let env = open(Kind::Srs, bytes)?;
        let p = env.payload;
        if p.len() < 56 {
            return Err(ProofError::Malformed("srs: truncated".into()));
        }
        let word = |i: usize| u64::from_le_bytes(p[i * 8..i * 8 + 8].try_into().unwrap()) as usize;
        let bounds = SrsBounds {
            num_constraints: word(0),
            num_variables: word(1),
            num_non_zero: word(2),
        };
        let mut entropy_commitment = [0u8; 32];
        entropy_commitment.copy_from_slice(&p[24..56]);
        let mut reader = &p[56..];
        let params = Srs::deserialize_unchecked(&mut reader).map_err(|e| ProofError::Malformed(format!("srs: {e:?}")))?;
        if !reader.is_empty() {
            return Err(ProofError::Malformed("srs: trailing bytes".into()));
        }
        Ok(UniversalSrs {
            bounds,
            entropy_commitment,
            params,
        })
    }

    pub fn content_hash(&self) -> ContentHash {
        ContentHash::of(&self.to_bytes())
    }
}

pub fn entropy_commitment(entropy: &[u8]) -> [u8; 32] {
    let mut h = Sha256::new();
    h.update(b"cdr/srs/entropy");
    h.update(entropy);
    h.finalize().into()
}

fn rng_from_entropy(entropy: &[u8]) -> ChaCha20Rng {
    ChaCha20Rng::from_seed(Sha256::digest(entropy).into())
}

pub fn universal_setup_with_bounds(bounds: SrsBounds, entropy: &[u8]) -> Result<UniversalSrs, ProofError> {
    let mut rng = rng_from_entropy(entropy);
    let params = MarlinBn::universal_setup(bounds.num_constraints, bounds.num_variables, bounds.num_non_zero, &mut rng)
        .map_err(|e| ProofError::Backend(format!("universal setup: {e:?}")))?;
    Ok(UniversalSrs {
        bounds,
        entropy_commitment: entropy_commitment(entropy),
        params,
    })
}

/// Reference string for circuits of up to `max_constraints` constraints.
pub fn universal_setup(max_constraints: usize, entropy: &[u8]) -> Result<UniversalSrs, ProofError> {
    universal_setup_with_bounds(SrsBounds::for_max_constraints(max_constraints), entropy)
}

// ---- circuit adapter ---------------------------------------------------------------------------

struct ArkCircuit<'a> {
    ecs: &'a ConstraintSystem,
    witness: Option<&'a Witness>,
}

impl ConstraintSynthesizer<Fr> for ArkCircuit<'_> {
    fn generate_constraints(self, cs: ConstraintSystemRef<Fr>) -> Result<(), SynthesisError> {
        let mut public = Vec::with_capacity(self.ecs.num_public());
        for i in 0..self.ecs.num_public() {
            let v = self.witness.map(|w| w.public[i].fr()).unwrap_or_else(Fr::zero);
            public.push(cs.new_input_variable(|| Ok(v))?);
        }
        let mut private = Vec::with_capacity(self.ecs.num_private);
        for j in 0..self.ecs.num_private {
            let v = self.witness.map(|w| w.private[j]).unwrap_or_else(Fr::zero);
            private.push(cs.new_witness_variable(|| Ok(v))?);
        }
        let convert = |l: &Lc| -> LinearCombination<Fr> {
            let mut out = lc!();
            for (v, c) in &l.0 {
                let var = match v {
                    Var::One => Variable::One,
                    Var::Public(i) => public[*i as usize],
                    Var::Private(j) => private[*j as usize],
                };
                out.0.push((*c, var));
            }
            out
        };
        for k in &self.ecs.constraints {
            cs.enforce_constraint(convert(&k.a), convert(&k.b), convert(&k.c))?;
        }
        Ok(())
    }
}

// ---- setup / prove / verify ---------------------------------------------------------------------

/// Generates keys bound to `ecs.spec_id`. Groth16 draws its toxic randomness from
/// `rng` and drops it before returning.
pub fn setup<R: RngCore>(
    scheme: SchemeId,
    ecs: &ConstraintSystem,
    srs: Option<&UniversalSrs>,
    rng: &mut R,
) -> Result<(ProvingKey, VerificationKey), ProofError> {
    let circuit = ArkCircuit { ecs, witness: None };
    let (pk, vk) = match scheme {
        SchemeId::PerCircuitSetup => {
            let pk = ark_groth16::generate_random_parameters::<Bn254, _, _>(circuit, rng)
                .map_err(|e| ProofError::Backend(format!("groth16 setup: {e:?}")))?;
            let vk = pk.vk.clone();
            (PkInner::Groth16(pk), VkInner::Groth16(vk))
        }
        SchemeId::UniversalSetup => {
            let srs = srs.ok_or(ProofError::SrsRequired(scheme))?;
            let needed = SrsBounds::for_circuit(ecs).max_degree()?;
            if needed > srs.max_degree() {
                return Err(ProofError::SrsTooSmall {
                    needed,
                    available: srs.max_degree(),
                });
            }
            let (pk, vk) = MarlinBn::index(&srs.params, circuit).map_err(|e| match e {
                ark_marlin::Error::IndexTooLarge => ProofError::SrsTooSmall {
                    needed,
                    available: srs.max_degree(),
                },
                e => ProofError::Backend(format!("marlin index: {e:?}")),
            })?;
            (PkInner::Marlin(Box::new(pk)), VkInner::Marlin(vk))
        }
    };
    Ok((
        ProvingKey {
            scheme,
            spec_id: ecs.spec_id,
            num_public: ecs.num_public(),
            inner: pk,
        },
        VerificationKey {
            scheme,
            spec_id: ecs.spec_id,
            num_public: ecs.num_public(),
            inner: vk,
        },
    ))
}

pub fn prove<R: RngCore>(
    scheme: SchemeId,
    ecs: &ConstraintSystem,
    witness: &Witness,
    pk: &ProvingKey,
    rng: &mut R,
) -> Result<Proof, ProofError> {
    if pk.scheme != scheme {
        return Err(ProofError::KeyMismatch(format!("proving key is for {}, not {scheme}", pk.scheme)));
    }
    if pk.spec_id != ecs.spec_id || witness.spec_id != ecs.spec_id {
        return Err(ProofError::KeyMismatch("key, circuit and witness belong to different specs".into()));
    }
    if witness.public.len() != ecs.num_public() || witness.private.len() != ecs.num_private {
        return Err(ProofError::KeyMismatch("witness shape does not match the circuit".into()));
    }
    if let Some(index) = witness.first_unsatisfied(ecs) {
        return Err(ProofError::Unsatisfied {
            index,
            label: ecs.label_of(index).unwrap_or("?").to_string(),
        });
    }
    prove_unchecked(ecs, witness, pk, rng)
}

/// Runs the backend prover without checking the witness. Only useful for showing that
/// unsatisfying witnesses do not produce accepted proofs.
#[doc(hidden)]
pub fn prove_unchecked<R: RngCore>(
    ecs: &ConstraintSystem,
    witness: &Witness,
    pk: &ProvingKey,
    rng: &mut R,
) -> Result<Proof, ProofError> {
    let circuit = ArkCircuit {
        ecs,
        witness: Some(witness),
    };
    let mut bytes = Vec::new();
    match &pk.inner {
        PkInner::Groth16(k) => {
            let proof = catch_unwind(AssertUnwindSafe(|| ark_groth16::create_random_proof(circuit, k, rng)))
                .map_err(|_| ProofError::Backend("groth16 prover aborted".into()))?
                .map_err(|e| ProofError::Backend(format!("groth16 prove: {e:?}")))?;
            proof.serialize(&mut bytes).map_err(ser_err)?;
        }
        PkInner::Marlin(k) => {
            let proof = catch_unwind(AssertUnwindSafe(|| MarlinBn::prove(k, circuit, rng)))
                .map_err(|_| ProofError::Backend("marlin prover aborted".into()))?
                .map_err(|e| ProofError::Backend(format!("marlin prove: {e:?}")))?;
            proof.serialize(&mut bytes).map_err(ser_err)?;
        }
    }
    Ok(Proof {
        scheme: pk.scheme,
        spec_id: pk.spec_id,
        bytes,
    })
}

/// `Err` when the input count does not fit the key or the proof cannot be decoded;
/// `Ok(false)` for any well-formed proof that does not verify.
pub fn verify(
    scheme: SchemeId,
    proof: &Proof,
    public: &[FieldElement],
    vk: &VerificationKey,
) -> Result<bool, ProofError> {
    if public.len() != vk.num_public {
        return Err(ProofError::LayoutMismatch {
            expected: vk.num_public,
            got: public.len(),
        });
    }
    if scheme != vk.scheme || proof.scheme != vk.scheme || proof.spec_id != vk.spec_id {
        return Ok(false);
    }
    let inputs: Vec<Fr> = public.iter().map(FieldElement::fr).collect();
    match &vk.inner {
        VkInner::Groth16(k) => {
            let p = ark_groth16::Proof::<Bn254>::deserialize(proof.bytes.as_slice())
                .map_err(|e| ProofError::Malformed(format!("proof: {e:?}")))?;
            let pvk = ark_groth16::prepare_verifying_key(k);
            Ok(ark_groth16::verify_proof(&pvk, &p, &inputs).unwrap_or(false))
        }
        VkInner::Marlin(k) => {
            let mut reader = proof.bytes.as_slice();
            let p = ark_marlin::Proof::<Fr, Pc>::deserialize(&mut reader)
                .map_err(|e| ProofError::Malformed(format!("proof: {e:?}")))?;
            if !reader.is_empty() {
                return Err(ProofError::Malformed("proof: trailing bytes".into()));
            }
            if p.commitments.len() != 3 || p.prover_messages.len() != 3 {
                return Err(ProofError::Malformed("proof: wrong number of rounds".into()));
            }
            // The verifier indexes into the proof without bounds checks.
            let mut rng = rand::thread_rng();
            let outcome = catch_unwind(AssertUnwindSafe(|| MarlinBn::verify(k, &inputs, &p, &mut rng)));
            match outcome {
                Ok(Ok(ok)) => Ok(ok),
                Ok(Err(_)) => Ok(false),
                Err(_) => Err(ProofError::Malformed("proof: rejected by structural checks".into())),
            }
        }
    }
}
