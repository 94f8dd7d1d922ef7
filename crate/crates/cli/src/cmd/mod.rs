pub mod bench;
pub mod chain;
pub mod init;
pub mod issuer;
pub mod owner;

use cdr_core::canonical::ContentHash;
use cdr_core::registry::TxReceipt;
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;

use crate::backend::Backend;
use crate::error::{CmdResult, Failure};
use crate::workspace::Workspace;

pub struct Ctx {
    pub ws: Workspace,
    pub node: Option<String>,
    pub seed: Option<u64>,
}

impl Ctx {
    pub fn backend(&self) -> CmdResult<Backend> {
        Backend::connect(&self.ws, self.node.as_deref())
    }

    /// Randomness for one purpose. With `--seed` every purpose gets its own
    /// deterministic stream, so repeated runs reproduce the same artifacts.
    pub fn rng(&self, purpose: &str) -> ChaCha20Rng {
        match self.seed {
            Some(seed) => ChaCha20Rng::from_seed(ContentHash::of(format!("cdr-cli/{seed}/{purpose}").as_bytes()).0),
            None => ChaCha20Rng::from_entropy(),
        }
    }

    pub fn random_bytes(&self, purpose: &str) -> [u8; 32] {
        let mut out = [0u8; 32];
        self.rng(purpose).fill_bytes(&mut out);
        out
    }
}

/// Prints a receipt; a rejected transaction is a failed command.
pub fn report(receipt: &TxReceipt) -> CmdResult {
    println!("{receipt}");
    if receipt.is_accepted() {
        Ok(())
    } else {
        Err(Failure::rejected(format!("transaction {} rejected", receipt.index)))
    }
}
