//! Node serving one chain and one verifiable data registry over HTTP.
//!
//! The chain log is written to `<data>/chain.json` after every transaction and
//! replayed on start; registry records live under `<data>/vdr/`.
//!
//! | method | path | body | response |
//! |---|---|---|---|
//! | GET | `/health` | | [`Status`] |
//! | GET | `/vdr` | | `[RecordInfo]` |
//! | POST | `/vdr/{kind}` | raw bytes | [`Published`] |
//! | GET | `/vdr/{id}` | | raw bytes, kind in `x-cdr-kind` |
//! | POST | `/chain/tx` | `Tx` | `TxReceipt` |
//! | GET | `/chain/receipts` | | `[TxReceipt]` |
//! | GET | `/chain/receipts/{index}` | | `TxReceipt` |
//! | GET | `/chain/export` | | `ChainExport` |
//! | GET | `/chain/state` | | `ChainState` |
//! | GET | `/chain/contracts/{addr}` | | `Contract` |
//! | POST | `/chain/contracts/{addr}/registered` | `DeviceEntry` | [`Registered`] |
//!
//! A rejected transaction is still a successful request; the verdict is in the receipt.

use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex};

use axum::body::Bytes;
use axum::extract::{Path as UrlPath, State};
use axum::http::{header, HeaderValue, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use cdr_core::canonical::ContentHash;
use cdr_core::circuit::DeviceEntry;
use cdr_core::registry::vdr::RecordInfo;
use cdr_core::registry::{
    Address, Chain, ChainConfig, ChainExport, ChainState, Contract, RecordKind, RegistryError, Tx, TxReceipt, Vdr,
};
use serde::{Deserialize, Serialize};

pub const CHAIN_FILE: &str = "chain.json";
pub const VDR_DIR: &str = "vdr";
pub const KIND_HEADER: &str = "x-cdr-kind";

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Status {
    pub height: u64,
    pub timestamp: u64,
    pub next_timestamp: u64,
    pub block_time: u64,
    pub state_hash: ContentHash,
    pub records: usize,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Published {
    pub record_id: ContentHash,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Registered {
    pub registered: bool,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ErrorBody {
    pub error: String,
}

struct Inner {
    chain: Chain,
    vdr: Vdr,
    chain_file: Option<PathBuf>,
}

/// Shared node state. Cheap to clone.
#[derive(Clone)]
pub struct Node {
    inner: Arc<Mutex<Inner>>,
}

impl Node {
    /// Volatile node, for tests.
    pub fn in_memory(config: ChainConfig) -> Node {
        Node::from_parts(Chain::new(config), Vdr::in_memory(), None)
    }

    /// Opens or creates the data directory. An existing chain log is replayed and must
    /// reproduce its recorded state hash; `config` only applies to a fresh chain.
    pub fn open(dir: &Path, config: ChainConfig) -> Result<Node, RegistryError> {
        Node::open_at(&dir.join(CHAIN_FILE), &dir.join(VDR_DIR), config)
    }

    /// Like [`Node::open`] with the chain log and the registry placed separately.
    pub fn open_at(chain_file: &Path, vdr_dir: &Path, config: ChainConfig) -> Result<Node, RegistryError> {
        if let Some(parent) = chain_file.parent() {
            std::fs::create_dir_all(parent)?;
        }
        let chain = if chain_file.exists() {
            let text = std::fs::read_to_string(chain_file)?;
            let export: ChainExport = serde_json::from_str(&text).map_err(|e| RegistryError::Format(e.to_string()))?;
            Chain::import(export)?
        } else {
            Chain::new(config)
        };
        let vdr = Vdr::open(vdr_dir)?;
        Ok(Node::from_parts(chain, vdr, Some(chain_file.to_path_buf())))
    }

    fn from_parts(chain: Chain, vdr: Vdr, chain_file: Option<PathBuf>) -> Node {
        Node {
            inner: Arc::new(Mutex::new(Inner { chain, vdr, chain_file })),
        }
    }

    fn lock(&self) -> std::sync::MutexGuard<'_, Inner> {
        // A panic while holding the lock leaves the chain as it was before the tx.
        self.inner.lock().unwrap_or_else(|p| p.into_inner())
    }

    pub fn status(&self) -> Status {
        let g = self.lock();
        Status {
            height: g.chain.height(),
            timestamp: g.chain.timestamp(),
            next_timestamp: g.chain.next_timestamp(),
            block_time: g.chain.config().block_time,
            state_hash: g.chain.state_hash(),
            records: g.vdr.len(),
        }
    }

    /// Executes one transaction and persists the log before answering.
    pub fn submit(&self, tx: Tx) -> Result<TxReceipt, RegistryError> {
        let mut g = self.lock();
        let receipt = g.chain.submit(tx);
        if let Some(path) = &g.chain_file {
            write_atomic(path, serde_json::to_string(&g.chain.export()).expect("json").as_bytes())?;
        }
        Ok(receipt)
    }

    pub fn publish(&self, kind: RecordKind, payload: Vec<u8>) -> Result<ContentHash, RegistryError> {
        self.lock().vdr.publish(kind, payload)
    }

    pub fn fetch(&self, id: &ContentHash) -> Result<(RecordKind, Vec<u8>), RegistryError> {
        let rec = self.lock().vdr.fetch(id)?;
        Ok((rec.kind, rec.payload))
    }

    pub fn records(&self) -> Vec<RecordInfo> {
        self.lock().vdr.list().cloned().collect()
    }

    pub fn receipts(&self) -> Vec<TxReceipt> {
        self.lock().chain.receipts().to_vec()
    }

    pub fn export(&self) -> ChainExport {
        self.lock().chain.export()
    }

    pub fn state(&self) -> ChainState {
        self.lock().chain.state().clone()
    }

    pub fn contract(&self, addr: &Address) -> Result<Contract, RegistryError> {
        self.lock().chain.contract(addr).cloned()
    }

    pub fn is_registered(&self, addr: &Address, entry: &DeviceEntry) -> Result<bool, RegistryError> {
        self.lock().chain.is_registered(addr, entry)
    }
}

fn write_atomic(path: &Path, bytes: &[u8]) -> std::io::Result<()> {
    let tmp = path.with_extension("json.tmp");
    std::fs::write(&tmp, bytes)?;
    std::fs::rename(tmp, path)
}

pub struct ApiError(StatusCode, String);

impl ApiError {
    fn bad_request(msg: impl ToString) -> ApiError {
        ApiError(StatusCode::BAD_REQUEST, msg.to_string())
    }
}

impl From<RegistryError> for ApiError {
    fn from(e: RegistryError) -> Self {
        let code = match &e {
            RegistryError::UnknownRecord(_) | RegistryError::UnknownContract(_) => StatusCode::NOT_FOUND,
            RegistryError::KindConflict { .. } | RegistryError::WrongContractType(_) => StatusCode::CONFLICT,
            RegistryError::EmptyPayload | RegistryError::Format(_) => StatusCode::BAD_REQUEST,
            RegistryError::Rejected { .. } => StatusCode::UNPROCESSABLE_ENTITY,
            RegistryError::Tampered { .. } | RegistryError::ReplayMismatch { .. } | RegistryError::Io(_) => {
                StatusCode::INTERNAL_SERVER_ERROR
            }
        };
        ApiError(code, e.to_string())
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.0, Json(ErrorBody { error: self.1 })).into_response()
    }
}

type ApiResult<T> = Result<T, ApiError>;

/// Runs blocking chain work (proof verification) off the async workers.
async fn blocking<T: Send + 'static>(f: impl FnOnce() -> ApiResult<T> + Send + 'static) -> ApiResult<T> {
    tokio::task::spawn_blocking(f)
        .await
        .map_err(|e| ApiError(StatusCode::INTERNAL_SERVER_ERROR, e.to_string()))?
}

fn parse<T: std::str::FromStr>(s: &str) -> ApiResult<T>
where
    T::Err: ToString,
{
    s.parse().map_err(|e: T::Err| ApiError::bad_request(e.to_string()))
}

async fn health(State(node): State<Node>) -> Json<Status> {
    Json(node.status())
}

async fn list_records(State(node): State<Node>) -> Json<Vec<RecordInfo>> {
    Json(node.records())
}

async fn publish(State(node): State<Node>, UrlPath(kind): UrlPath<String>, body: Bytes) -> ApiResult<Json<Published>> {
    let kind: RecordKind = parse(&kind)?;
    let record_id = blocking(move || Ok(node.publish(kind, body.to_vec())?)).await?;
    Ok(Json(Published { record_id }))
}

async fn fetch(State(node): State<Node>, UrlPath(id): UrlPath<String>) -> ApiResult<Response> {
    let id: ContentHash = parse(&id)?;
    let (kind, payload) = blocking(move || Ok(node.fetch(&id)?)).await?;
    let mut resp = payload.into_response();
    let headers = resp.headers_mut();
    headers.insert(header::CONTENT_TYPE, HeaderValue::from_static("application/octet-stream"));
    headers.insert(KIND_HEADER, HeaderValue::from_static(kind.as_str()));
    Ok(resp)
}

async fn submit(State(node): State<Node>, Json(tx): Json<Tx>) -> ApiResult<Json<TxReceipt>> {
    let kind = tx.kind();
    let receipt = blocking(move || Ok(node.submit(tx)?)).await?;
    tracing::info!(index = receipt.index, kind, status = ?receipt.status, "tx");
    Ok(Json(receipt))
}

async fn receipts(State(node): State<Node>) -> Json<Vec<TxReceipt>> {
    Json(node.receipts())
}

async fn receipt(State(node): State<Node>, UrlPath(index): UrlPath<u64>) -> ApiResult<Json<TxReceipt>> {
    node.receipts()
        .into_iter()
        .find(|r| r.index == index)
        .map(Json)
        .ok_or_else(|| ApiError(StatusCode::NOT_FOUND, format!("no receipt {index}")))
}

async fn export(State(node): State<Node>) -> Json<ChainExport> {
    Json(node.export())
}

async fn state(State(node): State<Node>) -> Json<ChainState> {
    Json(node.state())
}

async fn contract(State(node): State<Node>, UrlPath(addr): UrlPath<String>) -> ApiResult<Json<Contract>> {
    Ok(Json(node.contract(&parse(&addr)?)?))
}

async fn registered(
    State(node): State<Node>,
    UrlPath(addr): UrlPath<String>,
    Json(entry): Json<DeviceEntry>,
) -> ApiResult<Json<Registered>> {
    let registered = node.is_registered(&parse(&addr)?, &entry)?;
    Ok(Json(Registered { registered }))
}

/// Request bodies carry proving keys; the default 2 MB axum limit is too small.
pub const BODY_LIMIT: usize = 512 << 20;

pub fn router(node: Node) -> Router {
    Router::new()
        .route("/health", get(health))
        .route("/vdr", get(list_records))
        .route("/vdr/{key}", post(publish).get(fetch))
        .route("/chain/tx", post(submit))
        .route("/chain/receipts", get(receipts))
        .route("/chain/receipts/{index}", get(receipt))
        .route("/chain/export", get(export))
        .route("/chain/state", get(state))
        .route("/chain/contracts/{addr}", get(contract))
        .route("/chain/contracts/{addr}/registered", post(registered))
        .layer(axum::extract::DefaultBodyLimit::max(BODY_LIMIT))
        .with_state(node)
}

pub async fn serve(listener: tokio::net::TcpListener, node: Node) -> std::io::Result<()> {
    axum::serve(listener, router(node)).await
}
