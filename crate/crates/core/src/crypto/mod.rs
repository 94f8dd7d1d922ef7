//! Field, curve, hash and signature primitives shared by native code and circuit gadgets.

pub mod babyjubjub;
pub mod eddsa;
pub mod encode;
pub mod field;
pub mod hash;
pub mod poseidon;

pub use babyjubjub::CurvePoint;
pub use encode::{encode_value, AttributeKind, AttributeValue};
pub use eddsa::{keygen, sign, verify_sig, KeyFile, SecretKey, SigKeyPair, Signature};
pub use field::{FieldElement, Fr};
pub use hash::{hash_bytes, hash_fields, HashDigest};

#[derive(Debug, Clone, thiserror::Error, PartialEq, Eq)]
pub enum CryptoError {
    #[error("encoding error: {0}")]
    Encoding(String),
    #[error("hash input is empty")]
    EmptyInput,
    #[error("too many hash inputs: {0}")]
    TooManyInputs(usize),
    #[error("point is not on the curve")]
    OffCurve,
}
