//! Blocking client for the HTTP interface of `cdr-node`.
//!
//! Records fetched from the registry are re-hashed here, so a node serving altered
//! bytes is caught by the client and not only by the node's own store check.

use std::time::Duration;

use cdr_core::canonical::ContentHash;
use cdr_core::circuit::DeviceEntry;
use cdr_core::registry::vdr::RecordInfo;
use cdr_core::registry::{Address, ChainExport, ChainState, Contract, RecordKind, Tx, TxReceipt};
use reqwest::blocking::{Client as Http, RequestBuilder};
use serde::de::DeserializeOwned;
use serde::Deserialize;

pub const KIND_HEADER: &str = "x-cdr-kind";

#[derive(Debug, thiserror::Error)]
pub enum ClientError {
    #[error("cannot reach node at {url}: {source}")]
    Transport { url: String, source: reqwest::Error },
    #[error("node answered {status}: {message}")]
    Api { status: u16, message: String },
    #[error("record {id} from the node hashes to {actual}")]
    Tampered { id: ContentHash, actual: ContentHash },
    #[error("unexpected response: {0}")]
    Decode(String),
}

impl ClientError {
    pub fn is_not_found(&self) -> bool {
        matches!(self, ClientError::Api { status: 404, .. })
    }
}

#[derive(Clone, Debug, Deserialize)]
pub struct Status {
    pub height: u64,
    pub timestamp: u64,
    pub next_timestamp: u64,
    pub block_time: u64,
    pub state_hash: ContentHash,
    pub records: usize,
}

#[derive(Deserialize)]
struct Published {
    record_id: ContentHash,
}

#[derive(Deserialize)]
struct Registered {
    registered: bool,
}

#[derive(Deserialize)]
struct ErrorBody {
    error: String,
}

#[derive(Clone, Debug)]
pub struct Client {
    base: String,
    http: Http,
}

impl Client {
    pub fn new(base: &str) -> Result<Client, ClientError> {
        let base = base.trim_end_matches('/').to_string();
        // Proof verification on the node can take seconds; key uploads are large.
        let http = Http::builder()
            .timeout(Duration::from_secs(600))
            .build()
            .map_err(|source| ClientError::Transport { url: base.clone(), source })?;
        Ok(Client { base, http })
    }

    pub fn base_url(&self) -> &str {
        &self.base
    }

    fn url(&self, path: &str) -> String {
        format!("{}{}", self.base, path)
    }

    fn send(&self, req: RequestBuilder) -> Result<reqwest::blocking::Response, ClientError> {
        let resp = req.send().map_err(|source| ClientError::Transport {
            url: self.base.clone(),
            source,
        })?;
        let status = resp.status();
        if status.is_success() {
            return Ok(resp);
        }
        let text = resp.text().unwrap_or_default();
        let message = serde_json::from_str::<ErrorBody>(&text).map(|b| b.error).unwrap_or(text);
        Err(ClientError::Api {
            status: status.as_u16(),
            message,
        })
    }

    fn json<T: DeserializeOwned>(&self, req: RequestBuilder) -> Result<T, ClientError> {
        self.send(req)?.json().map_err(|e| ClientError::Decode(e.to_string()))
    }

    pub fn health(&self) -> Result<Status, ClientError> {
        self.json(self.http.get(self.url("/health")))
    }

    pub fn publish(&self, kind: RecordKind, payload: Vec<u8>) -> Result<ContentHash, ClientError> {
        let expected = ContentHash::of(&payload);
        let p: Published = self.json(self.http.post(self.url(&format!("/vdr/{}", kind.as_str()))).body(payload))?;
        if p.record_id != expected {
            return Err(ClientError::Decode(format!("node filed the record as {}, expected {expected}", p.record_id)));
        }
        Ok(p.record_id)
    }

    pub fn fetch(&self, id: &ContentHash) -> Result<(RecordKind, Vec<u8>), ClientError> {
        let resp = self.send(self.http.get(self.url(&format!("/vdr/{id}"))))?;
        let kind = resp
            .headers()
            .get(KIND_HEADER)
            .and_then(|v| v.to_str().ok())
            .and_then(|v| v.parse().ok())
            .ok_or_else(|| ClientError::Decode("missing record kind".into()))?;
        let bytes = resp.bytes().map_err(|e| ClientError::Decode(e.to_string()))?.to_vec();
        let actual = ContentHash::of(&bytes);
        if &actual != id {
            return Err(ClientError::Tampered { id: *id, actual });
        }
        Ok((kind, bytes))
    }

    /// Fetches a record and checks that it was published as `kind`.
    pub fn fetch_kind(&self, id: &ContentHash, kind: RecordKind) -> Result<Vec<u8>, ClientError> {
        let (got, bytes) = self.fetch(id)?;
        if got != kind {
            return Err(ClientError::Decode(format!("record {id} is a {}, expected {}", got.as_str(), kind.as_str())));
        }
        Ok(bytes)
    }

    pub fn records(&self) -> Result<Vec<RecordInfo>, ClientError> {
        self.json(self.http.get(self.url("/vdr")))
    }

    pub fn submit(&self, tx: &Tx) -> Result<TxReceipt, ClientError> {
        self.json(self.http.post(self.url("/chain/tx")).json(tx))
    }

    pub fn receipts(&self) -> Result<Vec<TxReceipt>, ClientError> {
        self.json(self.http.get(self.url("/chain/receipts")))
    }

    pub fn receipt(&self, index: u64) -> Result<TxReceipt, ClientError> {
        self.json(self.http.get(self.url(&format!("/chain/receipts/{index}"))))
    }

    pub fn export(&self) -> Result<ChainExport, ClientError> {
        self.json(self.http.get(self.url("/chain/export")))
    }

    pub fn state(&self) -> Result<ChainState, ClientError> {
        self.json(self.http.get(self.url("/chain/state")))
    }

    pub fn contract(&self, addr: &Address) -> Result<Contract, ClientError> {
        self.json(self.http.get(self.url(&format!("/chain/contracts/{addr}"))))
    }

    pub fn is_registered(&self, addr: &Address, entry: &DeviceEntry) -> Result<bool, ClientError> {
        let r: Registered = self.json(self.http.post(self.url(&format!("/chain/contracts/{addr}/registered"))).json(entry))?;
        Ok(r.registered)
    }
}
