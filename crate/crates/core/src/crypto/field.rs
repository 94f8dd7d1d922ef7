use std::fmt;
use std::str::FromStr;

use ark_ff::{BigInteger, FpParameters, PrimeField, Zero};
use num_bigint::BigUint;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::CryptoError;

/// Scalar field of the BN254 pairing curve. Every circuit value lives here.
pub type Fr = ark_bn254::Fr;

/// Width of the canonical little-endian encoding.
pub const FIELD_BYTES: usize = 32;

/// A canonical element of the SNARK scalar field.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct FieldElement(pub(crate) Fr);

impl FieldElement {
    pub const ZERO: FieldElement = FieldElement(ark_ff::field_new!(Fr, "0"));

    pub fn from_fr(value: Fr) -> Self {
        FieldElement(value)
    }

    pub fn fr(&self) -> Fr {
        self.0
    }

    pub fn from_u64(value: u64) -> Self {
        FieldElement(Fr::from(value))
    }

    /// Two's-complement style embedding: negative values map to `p - |v|`.
    pub fn from_i64(value: i64) -> Self {
        let magnitude = FieldElement::from_u64(value.unsigned_abs());
        if value < 0 {
            FieldElement(-magnitude.0)
        } else {
            magnitude
        }
    }

    pub fn to_le_bytes(&self) -> [u8; FIELD_BYTES] {
        let bytes = self.0.into_repr().to_bytes_le();
        let mut out = [0u8; FIELD_BYTES];
        out.copy_from_slice(&bytes);
        out
    }

    /// Parses a canonical encoding. Values `>= p` are rejected rather than reduced.
    pub fn from_le_bytes(bytes: &[u8]) -> Result<Self, CryptoError> {
        if bytes.len() != FIELD_BYTES {
            return Err(CryptoError::Encoding(format!(
                "field element must be {FIELD_BYTES} bytes, got {}",
                bytes.len()
            )));
        }
        let value = BigUint::from_bytes_le(bytes);
        Self::from_biguint(&value)
    }

    /// Reduces arbitrary bytes modulo `p`.
    pub fn from_le_bytes_mod_order(bytes: &[u8]) -> Self {
        FieldElement(Fr::from_le_bytes_mod_order(bytes))
    }

    pub fn from_biguint(value: &BigUint) -> Result<Self, CryptoError> {
        if value >= &modulus() {
            return Err(CryptoError::Encoding("field element not canonical".into()));
        }
        Ok(FieldElement(Fr::from_le_bytes_mod_order(&value.to_bytes_le())))
    }

    pub fn to_biguint(&self) -> BigUint {
        BigUint::from_bytes_le(&self.to_le_bytes())
    }

    /// Returns the value if it fits in 64 bits.
    pub fn to_u64(&self) -> Option<u64> {
        let bytes = self.to_le_bytes();
        if bytes[8..].iter().any(|b| *b != 0) {
            return None;
        }
        Some(u64::from_le_bytes(bytes[..8].try_into().unwrap()))
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_zero()
    }

    pub fn to_hex(&self) -> String {
        hex::encode(self.to_le_bytes())
    }

    pub fn from_hex(s: &str) -> Result<Self, CryptoError> {
        let bytes = hex::decode(s.trim_start_matches("0x"))
            .map_err(|e| CryptoError::Encoding(format!("bad hex: {e}")))?;
        Self::from_le_bytes(&bytes)
    }
}

/// The scalar field modulus `p`.
pub fn modulus() -> BigUint {
    BigUint::from_bytes_le(&<Fr as PrimeField>::Params::MODULUS.to_bytes_le())
}

impl From<Fr> for FieldElement {
    fn from(value: Fr) -> Self {
        FieldElement(value)
    }
}

impl From<u64> for FieldElement {
    fn from(value: u64) -> Self {
        FieldElement::from_u64(value)
    }
}

impl fmt::Debug for FieldElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.to_u64() {
            Some(v) => write!(f, "Fe({v})"),
            None => write!(f, "Fe(0x{})", self.to_hex()),
        }
    }
}

impl fmt::Display for FieldElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_hex())
    }
}

impl FromStr for FieldElement {
    type Err = CryptoError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::from_hex(s)
    }
}

impl PartialOrd for FieldElement {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for FieldElement {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.0.into_repr().cmp(&other.0.into_repr())
    }
}

impl Serialize for FieldElement {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.to_hex())
    }
}

impl<'de> Deserialize<'de> for FieldElement {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        FieldElement::from_hex(&s).map_err(serde::de::Error::custom)
    }
}
