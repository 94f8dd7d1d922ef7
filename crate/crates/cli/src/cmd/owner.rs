use std::path::PathBuf;

use cdr_core::canonical::ContentHash;
use cdr_core::circuit::{compile, DeviceEntry};
use cdr_core::crypto::{hash_bytes, sign, FieldElement};
use cdr_core::flow;
use cdr_core::proofsys::ProvingKey;
use cdr_core::registry::{Address, RecordKind, Tx, ZkVp};
use cdr_core::zkspec::{KeyBinding, ZkVpr};

use super::{report, Ctx};
use crate::backend::Backend;
use crate::error::{CmdResult, Failure};
use crate::workspace::Workspace;
use crate::OwnerCmd;

pub fn run(ctx: &Ctx, cmd: OwnerCmd) -> CmdResult {
    match cmd {
        OwnerCmd::Prove {
            zkvpr,
            device,
            wallet,
            account,
            out,
        } => prove(ctx, &zkvpr, &device, wallet, &account, out),
        OwnerCmd::Register { contract, zkvp, account } => register(ctx, contract, &zkvp, &account),
        OwnerCmd::Authenticate {
            zkvpr,
            contract,
            device,
            payload,
            account,
        } => authenticate(ctx, &zkvpr, contract, &device, &payload, &account),
        OwnerCmd::Provision {
            app,
            device,
            payload,
            account,
        } => {
            let kp = ctx.ws.keypair(&device)?;
            let signature = sign(&kp.secret, &[hash_bytes(payload.as_bytes())?.value()])?;
            let receipt = ctx.backend()?.submit(Tx::ProvisionData {
                sender: account,
                app,
                payload: payload.into_bytes(),
                device_key: kp.public,
                signature,
            })?;
            report(&receipt)
        }
    }
}

fn integrity(what: &str, e: Failure) -> Failure {
    match e {
        Failure::Rejected(m) => Failure::Rejected(format!("integrity check failed: {what}: {m}")),
        other => other,
    }
}

/// Fetches an artifact the zkVPR points to. Bytes that do not hash to the reference
/// fail the integrity check.
fn fetch_artifact(backend: &Backend, id: &ContentHash, kind: RecordKind, what: &str) -> CmdResult<Vec<u8>> {
    let bytes = backend.fetch(id, kind).map_err(|e| integrity(what, e))?;
    if &ContentHash::of(&bytes) != id {
        return Err(Failure::rejected(format!("integrity check failed: {what} does not hash to {id}")));
    }
    Ok(bytes)
}

fn fetch_zkvpr(backend: &Backend, id: &ContentHash) -> CmdResult<ZkVpr> {
    let bytes = fetch_artifact(backend, id, RecordKind::Zkvpr, "zkVPR")?;
    Ok(ZkVpr::from_bytes(&bytes)?)
}

fn randomness(ctx: &Ctx, device: &str, create: bool) -> CmdResult<FieldElement> {
    let rel = Workspace::randomness_path(device);
    let path = ctx.ws.path(&rel)?;
    if path.exists() {
        let text = ctx.ws.read_text(&rel)?;
        return Ok(FieldElement::from_hex(text.trim())?);
    }
    if !create {
        return Err(Failure::usage(format!("no commitment randomness for {device} at {}", path.display())));
    }
    let r = FieldElement::from_le_bytes_mod_order(&ctx.random_bytes(&format!("commitment/{device}")));
    ctx.ws.write(&rel, format!("{}\n", r.to_hex()).as_bytes())?;
    Ok(r)
}

fn prove(
    ctx: &Ctx,
    zkvpr_id: &ContentHash,
    device: &str,
    wallet: Option<PathBuf>,
    account: &str,
    out: Option<PathBuf>,
) -> CmdResult {
    let backend = ctx.backend()?;
    let zkvpr = fetch_zkvpr(&backend, zkvpr_id)?;
    let pk_bytes = fetch_artifact(&backend, &zkvpr.proving_key.hash, RecordKind::ProvingKey, "proving key")?;
    let schema = backend.find_schema(&zkvpr.zkspec.schema_ref)?;
    zkvpr.check_integrity(&pk_bytes, &schema)?;

    // The owner compiles the zkSpec itself and compares with what the initiator published.
    let ecs = compile(&zkvpr.zkspec, &schema)?;
    if ecs.digest() != zkvpr.cs_ref.hash {
        return Err(Failure::rejected(format!(
            "integrity check failed: locally compiled circuit {} differs from published {}",
            ecs.digest(),
            zkvpr.cs_ref.hash
        )));
    }
    let published = fetch_artifact(&backend, &zkvpr.cs_ref.hash, RecordKind::ConstraintSystem, "constraint system")?;
    if published != ecs.to_bytes() {
        return Err(Failure::rejected("integrity check failed: published constraint system differs"));
    }
    let pk = ProvingKey::from_bytes(&pk_bytes)?;
    drop(pk_bytes);

    let vc = ctx.ws.credential(&wallet.unwrap_or_else(|| Workspace::wallet_path(device)))?;
    let r = match zkvpr.zkspec.binding {
        KeyBinding::Plain => None,
        KeyBinding::Committed => Some(randomness(ctx, device, true)?),
    };
    let now = backend.status()?.next_timestamp;
    let mut rng = ctx.rng(&format!("prove/{device}/{zkvpr_id}"));
    let t = std::time::Instant::now();
    let vp = flow::present(&zkvpr.zkspec, &ecs, &pk, &vc, r.as_ref(), account, now, &mut rng)?;
    let prove_s = t.elapsed().as_secs_f64();

    let rel = out.unwrap_or_else(|| Workspace::zkvp_path(device));
    let path = ctx.ws.write(&rel, vp.to_file().as_bytes())?;
    println!("checked   zkVPR {}, proving key, schema, constraint system", zkvpr_id.short());
    println!("proof     {} ({} bytes, {prove_s:.1} s)", zkvpr.scheme, vp.proof.bytes.len());
    match &vp.public.device {
        DeviceEntry::Key(k) => println!("device    key {}", k.to_hex()),
        DeviceEntry::Commitment(c) => println!("device    commitment {}", c.to_hex()),
    }
    println!("zkvp      {}", path.display());
    Ok(())
}

fn register(ctx: &Ctx, contract: Address, zkvp: &std::path::Path, account: &str) -> CmdResult {
    let vp = ZkVp::from_file(&ctx.ws.read_text(zkvp)?)?;
    let backend = ctx.backend()?;
    let entry = vp.public.device.clone();
    let receipt = backend.submit(Tx::SubmitRegistration {
        sender: account.into(),
        contract,
        zkvp: vp,
    })?;
    report(&receipt)?;
    println!("registered {}", backend.is_registered(&contract, &entry)?);
    Ok(())
}

fn authenticate(
    ctx: &Ctx,
    zkvpr_id: &ContentHash,
    contract: Address,
    device: &str,
    payload: &str,
    account: &str,
) -> CmdResult {
    let backend = ctx.backend()?;
    let zkvpr = fetch_zkvpr(&backend, zkvpr_id)?;
    let auth_ref = zkvpr
        .auth_proving_key
        .as_ref()
        .ok_or_else(|| Failure::usage("this zkVPR uses plain key binding; use `owner provision`"))?;
    let pk = ProvingKey::from_bytes(&fetch_artifact(
        &backend,
        &auth_ref.hash,
        RecordKind::ProvingKey,
        "authentication proving key",
    )?)?;
    let kp = ctx.ws.keypair(device)?;
    let r = randomness(ctx, device, false)?;
    let mut rng = ctx.rng(&format!("authenticate/{device}/{payload}"));
    let (commitment, proof) = flow::authenticate(&pk, &kp, &r, payload.as_bytes(), &mut rng)?;
    let receipt = backend.submit(Tx::AuthenticateCommitted {
        sender: account.into(),
        contract,
        commitment,
        payload: payload.as_bytes().to_vec(),
        proof,
    })?;
    report(&receipt)
}
