//! `hash_fields`: variable-length Poseidon sponge.
//!
//! Width 6 (rate 5, capacity 1). The capacity lane is initialised with the input
//! length, so zero-padding of the final block is unambiguous. Inputs of up to
//! [`HASH_RATE`] elements cost a single permutation.

use serde::{Deserialize, Serialize};

use super::field::{FieldElement, Fr};
use super::poseidon::{params, PoseidonParams};
use super::CryptoError;

pub const HASH_WIDTH: usize = 6;
pub const HASH_RATE: usize = HASH_WIDTH - 1;
/// Upper bound on the number of absorbed elements.
pub const MAX_HASH_INPUTS: usize = 1 << 16;
/// Bytes packed per field element when hashing byte strings.
pub const BYTES_PER_ELEMENT: usize = 31;

/// Output of [`hash_fields`].
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Debug, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct HashDigest(pub FieldElement);

impl HashDigest {
    pub fn value(&self) -> FieldElement {
        self.0
    }

    pub fn to_hex(&self) -> String {
        self.0.to_hex()
    }

    pub fn from_hex(s: &str) -> Result<Self, CryptoError> {
        FieldElement::from_hex(s).map(HashDigest)
    }
}

impl std::fmt::Display for HashDigest {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0.to_hex())
    }
}

pub fn hash_params() -> &'static PoseidonParams {
    params(HASH_WIDTH)
}

pub fn hash_fields(inputs: &[FieldElement]) -> Result<HashDigest, CryptoError> {
    if inputs.is_empty() {
        return Err(CryptoError::EmptyInput);
    }
    if inputs.len() > MAX_HASH_INPUTS {
        return Err(CryptoError::TooManyInputs(inputs.len()));
    }
    let fr: Vec<Fr> = inputs.iter().map(|x| x.0).collect();
    Ok(HashDigest(FieldElement(hash_raw(&fr))))
}

pub(crate) fn hash_raw(inputs: &[Fr]) -> Fr {
    let p = hash_params();
    let mut state = vec![Fr::from(0u64); HASH_WIDTH];
    state[0] = Fr::from(inputs.len() as u64);
    for chunk in inputs.chunks(HASH_RATE) {
        for (lane, value) in chunk.iter().enumerate() {
            state[lane + 1] += value;
        }
        p.permute(&mut state);
    }
    state[1]
}

/// Packs bytes into field elements: `[byte_len, chunk_0, chunk_1, ...]`, each chunk
/// holding up to 31 little-endian bytes.
pub fn pack_bytes(bytes: &[u8]) -> Vec<FieldElement> {
    let mut out = Vec::with_capacity(1 + bytes.len().div_ceil(BYTES_PER_ELEMENT));
    out.push(FieldElement::from_u64(bytes.len() as u64));
    out.extend(
        bytes
            .chunks(BYTES_PER_ELEMENT)
            .map(FieldElement::from_le_bytes_mod_order),
    );
    out
}

/// Poseidon digest of an arbitrary byte string.
pub fn hash_bytes(bytes: &[u8]) -> Result<HashDigest, CryptoError> {
    hash_fields(&pack_bytes(bytes))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_input_rejected() {
        assert_eq!(hash_fields(&[]), Err(CryptoError::EmptyInput));
    }

    // Regression value; the permutation itself is pinned by the reference vectors in `poseidon`.
    #[test]
    fn golden_single_zero() {
        let d = hash_fields(&[FieldElement::ZERO]).unwrap();
        assert_eq!(
            d.to_hex(),
            "9d0979682566f3723870742122c6bbe8ce63790cc0ac035f0570c4b00cc0c109"
        );
    }

    #[test]
    fn sponge_matches_manual_permutation() {
        let p = hash_params();
        let mut state = vec![Fr::from(0u64); HASH_WIDTH];
        state[0] = Fr::from(2u64);
        state[1] = Fr::from(11u64);
        state[2] = Fr::from(22u64);
        p.permute(&mut state);
        let d = hash_fields(&[FieldElement::from_u64(11), FieldElement::from_u64(22)]).unwrap();
        assert_eq!(d.value().fr(), state[1]);
    }

    #[test]
    fn length_tag_separates_zero_padding() {
        let one = hash_fields(&[FieldElement::ZERO]).unwrap();
        let two = hash_fields(&[FieldElement::ZERO, FieldElement::ZERO]).unwrap();
        assert_ne!(one, two);
        let five = vec![FieldElement::from_u64(1); 5];
        let mut six = five.clone();
        six.push(FieldElement::ZERO);
        assert_ne!(hash_fields(&five).unwrap(), hash_fields(&six).unwrap());
    }

    #[test]
    fn byte_packing_is_length_prefixed() {
        assert_ne!(hash_bytes(b"").unwrap(), hash_bytes(b"\0").unwrap());
        assert_eq!(pack_bytes(&[7u8; 62]).len(), 3);
    }
}
