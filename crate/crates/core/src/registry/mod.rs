//! Chain simulator: the verifiable data registry, the registration contract with its
//! device registry, and the application contract gated on it.

pub mod audit;
pub mod chain;
pub mod contract;
pub mod cost;
pub mod vdr;

use serde::{Deserialize, Serialize};

use crate::canonical::{from_json, to_canonical_json_pretty, ContentHash};
use crate::circuit::PublicInputs;
use crate::proofsys::Proof;

pub use chain::{Chain, ChainConfig, ChainExport, ChainState, RejectReason, Tx, TxReceipt, TxStatus};
pub use contract::{Address, ApplicationContract, Contract, RegistrationContract, RegistrationParams, RegistryEntry};
pub use vdr::{RecordKind, Vdr, VdrRecord};

#[derive(Debug, thiserror::Error)]
pub enum RegistryError {
    #[error("empty payload")]
    EmptyPayload,
    #[error("unknown record {0}")]
    UnknownRecord(ContentHash),
    #[error("record {id} is already published as {existing}")]
    KindConflict { id: ContentHash, existing: RecordKind },
    #[error("record {id} was tampered with (payload hashes to {actual})")]
    Tampered { id: ContentHash, actual: ContentHash },
    #[error("unknown contract {0}")]
    UnknownContract(Address),
    #[error("contract {0} has the wrong type")]
    WrongContractType(Address),
    #[error("rejected({reason}): {detail}")]
    Rejected { reason: RejectReason, detail: String },
    #[error("replayed state hash {actual} does not match {expected}")]
    ReplayMismatch { expected: ContentHash, actual: ContentHash },
    #[error("{0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Zero-knowledge verifiable presentation: public inputs plus the proof over them.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ZkVp {
    pub public: PublicInputs,
    pub proof: Proof,
}

impl ZkVp {
    pub fn to_file(&self) -> String {
        to_canonical_json_pretty(self)
    }

    pub fn from_file(text: &str) -> Result<Self, RegistryError> {
        from_json(text).map_err(|e| RegistryError::Format(format!("zkVP: {e}")))
    }
}
