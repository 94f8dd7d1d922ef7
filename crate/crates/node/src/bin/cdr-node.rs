use std::net::SocketAddr;
use std::path::PathBuf;

use anyhow::Context;
use cdr_core::registry::chain::{DEFAULT_BLOCK_TIME, DEFAULT_GENESIS};
use cdr_core::registry::ChainConfig;
use cdr_node::Node;
use clap::Parser;

/// Serves a registration chain and a verifiable data registry over HTTP.
#[derive(Parser)]
#[command(name = "cdr-node", version)]
struct Args {
    /// Directory holding chain.json and the registry records.
    #[arg(long, env = "CDR_NODE_DATA", default_value = "cdr-node-data")]
    data_dir: PathBuf,
    #[arg(long, env = "CDR_NODE_LISTEN", default_value = "127.0.0.1:8645")]
    listen: SocketAddr,
    /// Timestamp of the genesis block (fresh chains only).
    #[arg(long, default_value_t = DEFAULT_GENESIS)]
    genesis: u64,
    /// Seconds between consecutive blocks (fresh chains only).
    #[arg(long, default_value_t = DEFAULT_BLOCK_TIME)]
    block_time: u64,
}

#[tokio::main]
async fn main() -> anyhow::Result<()> {
    tracing_subscriber::fmt().with_target(false).init();
    let args = Args::parse();
    let config = ChainConfig {
        genesis_timestamp: args.genesis,
        block_time: args.block_time,
    };
    let node = Node::open(&args.data_dir, config).with_context(|| format!("opening {}", args.data_dir.display()))?;
    let status = node.status();
    let listener = tokio::net::TcpListener::bind(args.listen).await?;
    tracing::info!(
        addr = %listener.local_addr()?,
        height = status.height,
        state = %status.state_hash,
        records = status.records,
        "listening"
    );
    tokio::select! {
        r = cdr_node::serve(listener, node) => r?,
        _ = tokio::signal::ctrl_c() => tracing::info!("shutting down"),
    }
    Ok(())
}
