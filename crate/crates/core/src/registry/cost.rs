//! Cost units, a stand-in for EVM gas.
//!
//! Prices follow the Ethereum schedule for the operations an on-chain verifier would
//! run (calldata bytes, BN254 precompiles, storage words). Verification work is counted
//! from the key and proof structure rather than timed, so the same transaction always
//! costs the same.

use serde::{Deserialize, Serialize};

use crate::proofsys::{Proof, SchemeId, VerificationKey};

pub const TX_BASE: u64 = 21_000;
pub const CALLDATA_BYTE: u64 = 16;
/// Reading one public input into the verifier.
pub const PUBLIC_INPUT: u64 = 200;
pub const EC_MUL: u64 = 6_000;
pub const EC_ADD: u64 = 150;
pub const PAIRING_BASE: u64 = 45_000;
pub const PAIRING_PER_PAIR: u64 = 34_000;
/// One 32-byte storage slot.
pub const STORAGE_WORD: u64 = 20_000;
/// Evaluating the EdDSA check natively in a contract (one Poseidon hash, two scalar
/// multiplications on Baby Jubjub), priced as a flat charge.
pub const SIG_CHECK: u64 = 60_000;

/// Group operations a verifier performs for one proof.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct VerifyWork {
    pub msm_terms: u64,
    pub pairings: u64,
}

impl VerifyWork {
    pub fn units(&self) -> u64 {
        let pairing = if self.pairings == 0 {
            0
        } else {
            PAIRING_BASE + PAIRING_PER_PAIR * self.pairings
        };
        self.msm_terms * (EC_MUL + EC_ADD) + pairing
    }
}

/// Groth16: one MSM over the public inputs and a four-pairing product check.
/// Marlin: the inputs plus a linear combination of every index and proof commitment,
/// and two KZG batch checks of two pairings each.
pub fn verify_work(vk: &VerificationKey, proof: &Proof, num_public: usize) -> VerifyWork {
    match vk.scheme {
        SchemeId::PerCircuitSetup => VerifyWork {
            msm_terms: num_public as u64,
            pairings: 4,
        },
        SchemeId::UniversalSetup => VerifyWork {
            msm_terms: (num_public + vk.index_commitments() + proof.commitment_count()) as u64,
            pairings: 4,
        },
    }
}

pub fn calldata(bytes: usize) -> u64 {
    CALLDATA_BYTE * bytes as u64
}

pub fn storage(bytes: usize) -> u64 {
    STORAGE_WORD * bytes.div_ceil(32) as u64
}

/// Full charge for a proof-carrying call that reached verification.
pub fn proof_call(vk: &VerificationKey, proof: &Proof, num_public: usize, extra_calldata: usize) -> u64 {
    TX_BASE
        + calldata(proof.size_bytes() + 32 * num_public + extra_calldata)
        + PUBLIC_INPUT * num_public as u64
        + verify_work(vk, proof, num_public).units()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pairing_charge_matches_schedule() {
        // 45000 + 34000·k, as for the bn256 pairing precompile.
        assert_eq!(VerifyWork { msm_terms: 0, pairings: 4 }.units(), 181_000);
        assert_eq!(VerifyWork { msm_terms: 2, pairings: 0 }.units(), 12_300);
    }

    #[test]
    fn storage_rounds_up_to_words() {
        assert_eq!(storage(0), 0);
        assert_eq!(storage(1), STORAGE_WORD);
        assert_eq!(storage(64), 2 * STORAGE_WORD);
        assert_eq!(storage(65), 3 * STORAGE_WORD);
    }
}
