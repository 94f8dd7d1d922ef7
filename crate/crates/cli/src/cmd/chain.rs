use cdr_core::circuit::DeviceEntry;
use cdr_core::crypto::{CurvePoint, HashDigest};
use cdr_core::registry::{Chain, ChainExport, Tx};

use super::{report, Ctx};
use crate::error::{CmdResult, Failure};
use crate::ChainCmd;

pub fn run(ctx: &Ctx, cmd: ChainCmd) -> CmdResult {
    let backend = ctx.backend()?;
    match cmd {
        ChainCmd::Status => {
            let s = backend.status()?;
            println!("backend     {}", backend.describe());
            println!("height      {}", s.height);
            println!("timestamp   {}", s.timestamp);
            println!("state hash  {}", s.state_hash);
            println!("records     {}", s.records);
        }
        ChainCmd::Receipts { json } => {
            let receipts = backend.receipts()?;
            if json {
                println!("{}", serde_json::to_string_pretty(&receipts)?);
            } else {
                for r in receipts {
                    println!("{r}\n");
                }
            }
        }
        ChainCmd::Records => {
            for r in backend.records()? {
                println!("{}  {:<17} {:>10} bytes", r.record_id, r.kind.as_str(), r.size);
            }
        }
        ChainCmd::Contract { addr } => {
            println!("{}", serde_json::to_string_pretty(&backend.contract(&addr)?)?);
        }
        ChainCmd::DeployApp { registration, account } => {
            let receipt = backend.submit(Tx::DeployApplication {
                sender: account,
                registration,
            })?;
            report(&receipt)?;
        }
        ChainCmd::IsRegistered {
            contract,
            device,
            key,
            commitment,
        } => {
            let entry = match (device, key, commitment) {
                (Some(name), None, None) => DeviceEntry::Key(ctx.ws.key_file(&name)?.public),
                (None, Some(hex), None) => DeviceEntry::Key(CurvePoint::from_hex(&hex)?),
                (None, None, Some(hex)) => DeviceEntry::Commitment(HashDigest::from_hex(&hex)?),
                _ => return Err(Failure::usage("give exactly one of --device, --key, --commitment")),
            };
            let registered = backend.is_registered(&contract, &entry)?;
            println!("{registered}");
            if !registered {
                return Err(Failure::rejected("not registered"));
            }
        }
        ChainCmd::Export { out } => {
            let export = backend.export()?;
            let path = ctx.ws.write_json(&out, &export)?;
            println!("transactions  {}", export.txs.len());
            println!("state hash    {}", export.state_hash);
            println!("file          {}", path.display());
        }
        ChainCmd::Verify { file } => {
            let export: ChainExport = match file {
                Some(f) => ctx.ws.read_json(&f)?,
                None => backend.export()?,
            };
            let n = export.txs.len();
            let chain = Chain::import(export)?;
            println!("replayed {n} transactions; state hash {} matches", chain.state_hash());
        }
    }
    Ok(())
}
