use cdr_client::ClientError;
use cdr_core::circuit::CircuitError;
use cdr_core::credential::CredentialError;
use cdr_core::crypto::CryptoError;
use cdr_core::flow::FlowError;
use cdr_core::proofsys::ProofError;
use cdr_core::registry::RegistryError;
use cdr_core::zkspec::SpecError;

/// Command failure. The variant picks the exit code.
#[derive(Debug, thiserror::Error)]
pub enum Failure {
    /// Something failed a check: an unsatisfied condition, a bad signature, a rejected
    /// transaction, an integrity mismatch. Exit code 1.
    #[error("{0}")]
    Rejected(String),
    /// Bad flags, missing files, unreachable node, malformed input. Exit code 2.
    #[error("{0}")]
    Usage(String),
}

impl Failure {
    pub fn code(&self) -> u8 {
        match self {
            Failure::Rejected(_) => 1,
            Failure::Usage(_) => 2,
        }
    }

    pub fn usage(msg: impl std::fmt::Display) -> Failure {
        Failure::Usage(msg.to_string())
    }

    pub fn rejected(msg: impl std::fmt::Display) -> Failure {
        Failure::Rejected(msg.to_string())
    }

    /// Prefixes the message, keeping the exit code.
    pub fn context(self, ctx: impl std::fmt::Display) -> Failure {
        match self {
            Failure::Rejected(m) => Failure::Rejected(format!("{ctx}: {m}")),
            Failure::Usage(m) => Failure::Usage(format!("{ctx}: {m}")),
        }
    }
}

pub type CmdResult<T = ()> = Result<T, Failure>;

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Usage(e.to_string())
    }
}

impl From<serde_json::Error> for Failure {
    fn from(e: serde_json::Error) -> Self {
        Failure::Usage(format!("malformed JSON: {e}"))
    }
}

impl From<CryptoError> for Failure {
    fn from(e: CryptoError) -> Self {
        Failure::Usage(e.to_string())
    }
}

impl From<CredentialError> for Failure {
    fn from(e: CredentialError) -> Self {
        Failure::Usage(e.to_string())
    }
}

impl From<CircuitError> for Failure {
    fn from(e: CircuitError) -> Self {
        match e {
            CircuitError::ConditionUnsatisfied(_)
            | CircuitError::SignatureInvalid(_)
            | CircuitError::SubjectMismatch
            | CircuitError::BindingFailed
            | CircuitError::Unsatisfied { .. }
            | CircuitError::WrongCircuit { .. } => Failure::Rejected(e.to_string()),
            _ => Failure::Usage(e.to_string()),
        }
    }
}

impl From<ProofError> for Failure {
    fn from(e: ProofError) -> Self {
        match e {
            ProofError::Unsatisfied { .. } | ProofError::KeyMismatch(_) => Failure::Rejected(e.to_string()),
            _ => Failure::Usage(e.to_string()),
        }
    }
}

impl From<SpecError> for Failure {
    fn from(e: SpecError) -> Self {
        match e {
            SpecError::Integrity(_) | SpecError::KeyMismatch(_) => Failure::Rejected(e.to_string()),
            _ => Failure::Usage(e.to_string()),
        }
    }
}

impl From<FlowError> for Failure {
    fn from(e: FlowError) -> Self {
        match e {
            FlowError::Circuit(e) => e.into(),
            FlowError::Proof(e) => e.into(),
            FlowError::Crypto(e) => e.into(),
            FlowError::Input(m) => Failure::Usage(m),
        }
    }
}

impl From<RegistryError> for Failure {
    fn from(e: RegistryError) -> Self {
        match e {
            RegistryError::Tampered { .. } | RegistryError::ReplayMismatch { .. } | RegistryError::Rejected { .. } => {
                Failure::Rejected(e.to_string())
            }
            _ => Failure::Usage(e.to_string()),
        }
    }
}

impl From<ClientError> for Failure {
    fn from(e: ClientError) -> Self {
        match e {
            ClientError::Tampered { .. } => Failure::Rejected(e.to_string()),
            ClientError::Api { status, ref message } if status == 500 && message.contains("tampered") => {
                Failure::Rejected(e.to_string())
            }
            _ => Failure::Usage(e.to_string()),
        }
    }
}
