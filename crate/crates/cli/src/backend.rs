//! Where registry records and transactions go: the workspace itself (`vdr/`,
//! `chain/chain.json`) or a running node.

use cdr_client::Client;
use cdr_core::canonical::ContentHash;
use cdr_core::circuit::DeviceEntry;
use cdr_core::credential::CredentialSchema;
use cdr_core::crypto::HashDigest;
use cdr_core::registry::vdr::RecordInfo;
use cdr_core::registry::{Address, ChainConfig, ChainExport, Contract, RecordKind, Tx, TxReceipt};
use cdr_node::Node;

use crate::error::{CmdResult, Failure};
use crate::workspace::Workspace;

pub const LOCAL_CHAIN_FILE: &str = "chain/chain.json";

pub struct ChainStatus {
    pub height: u64,
    pub timestamp: u64,
    pub next_timestamp: u64,
    pub state_hash: ContentHash,
    pub records: usize,
}

pub enum Backend {
    Local(Node),
    Remote(Client),
}

impl Backend {
    pub fn connect(ws: &Workspace, node: Option<&str>) -> CmdResult<Backend> {
        match node {
            Some(url) => Ok(Backend::Remote(Client::new(url)?)),
            None => {
                let chain = ws.path(LOCAL_CHAIN_FILE)?;
                let vdr = ws.path("vdr")?;
                Ok(Backend::Local(Node::open_at(&chain, &vdr, ChainConfig::default())?))
            }
        }
    }

    pub fn describe(&self) -> String {
        match self {
            Backend::Local(_) => "local workspace".into(),
            Backend::Remote(c) => format!("node {}", c.base_url()),
        }
    }

    pub fn publish(&self, kind: RecordKind, payload: Vec<u8>) -> CmdResult<ContentHash> {
        match self {
            Backend::Local(n) => Ok(n.publish(kind, payload)?),
            Backend::Remote(c) => Ok(c.publish(kind, payload)?),
        }
    }

    /// Fetches a record, checking both its hash and its kind.
    pub fn fetch(&self, id: &ContentHash, kind: RecordKind) -> CmdResult<Vec<u8>> {
        let (got, bytes) = match self {
            Backend::Local(n) => n.fetch(id)?,
            Backend::Remote(c) => c.fetch(id)?,
        };
        if got != kind {
            return Err(Failure::usage(format!("record {id} is a {}, expected {}", got.as_str(), kind.as_str())));
        }
        Ok(bytes)
    }

    pub fn records(&self) -> CmdResult<Vec<RecordInfo>> {
        match self {
            Backend::Local(n) => Ok(n.records()),
            Backend::Remote(c) => Ok(c.records()?),
        }
    }

    /// The published schema with the given id.
    pub fn find_schema(&self, schema_id: &HashDigest) -> CmdResult<CredentialSchema> {
        for info in self.records()?.into_iter().filter(|r| r.kind == RecordKind::Schema) {
            let bytes = self.fetch(&info.record_id, RecordKind::Schema)?;
            let Ok(schema) = CredentialSchema::from_file(&String::from_utf8_lossy(&bytes)) else {
                continue;
            };
            if &schema.schema_id == schema_id {
                return Ok(schema);
            }
        }
        Err(Failure::usage(format!("schema {} is not published", schema_id.to_hex())))
    }

    pub fn submit(&self, tx: Tx) -> CmdResult<TxReceipt> {
        match self {
            Backend::Local(n) => Ok(n.submit(tx)?),
            Backend::Remote(c) => Ok(c.submit(&tx)?),
        }
    }

    pub fn status(&self) -> CmdResult<ChainStatus> {
        Ok(match self {
            Backend::Local(n) => {
                let s = n.status();
                ChainStatus {
                    height: s.height,
                    timestamp: s.timestamp,
                    next_timestamp: s.next_timestamp,
                    state_hash: s.state_hash,
                    records: s.records,
                }
            }
            Backend::Remote(c) => {
                let s = c.health()?;
                ChainStatus {
                    height: s.height,
                    timestamp: s.timestamp,
                    next_timestamp: s.next_timestamp,
                    state_hash: s.state_hash,
                    records: s.records,
                }
            }
        })
    }

    pub fn receipts(&self) -> CmdResult<Vec<TxReceipt>> {
        match self {
            Backend::Local(n) => Ok(n.receipts()),
            Backend::Remote(c) => Ok(c.receipts()?),
        }
    }

    pub fn export(&self) -> CmdResult<ChainExport> {
        match self {
            Backend::Local(n) => Ok(n.export()),
            Backend::Remote(c) => Ok(c.export()?),
        }
    }

    pub fn contract(&self, addr: &Address) -> CmdResult<Contract> {
        match self {
            Backend::Local(n) => Ok(n.contract(addr)?),
            Backend::Remote(c) => Ok(c.contract(addr)?),
        }
    }

    pub fn is_registered(&self, addr: &Address, entry: &DeviceEntry) -> CmdResult<bool> {
        match self {
            Backend::Local(n) => Ok(n.is_registered(addr, entry)?),
            Backend::Remote(c) => Ok(c.is_registered(addr, entry)?),
        }
    }
}
