use std::path::{Path, PathBuf};

use cdr_core::canonical::ContentHash;
use cdr_core::circuit::compile;
use cdr_core::flow;
use cdr_core::proofsys::{universal_setup, SchemeId, UniversalSrs};
use cdr_core::registry::{Address, RecordKind, Tx};
use cdr_core::scenario::ConditionKind;
use cdr_core::zkspec::{build_zkvpr, validate_spec, ArtifactRef, KeyBinding, ZkSpec, ZkvprMeta};
use serde::{Deserialize, Serialize};

use super::{report, Ctx};
use crate::error::{CmdResult, Failure};
use crate::workspace::{check_name, Workspace};
use crate::InitCmd;

/// What `init setup` produced, written to artifacts/<name>/deployment.json.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Deployment {
    pub name: String,
    pub contract: Address,
    pub zkvpr: ContentHash,
    pub scheme: SchemeId,
    pub spec_id: ContentHash,
    pub constraint_system: ContentHash,
    pub constraints: usize,
    pub proving_key: ContentHash,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub auth_proving_key: Option<ContentHash>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub srs: Option<ContentHash>,
}

pub fn run(ctx: &Ctx, cmd: InitCmd) -> CmdResult {
    match cmd {
        InitCmd::Spec {
            condition,
            binding,
            out,
            schema,
        } => spec(ctx, condition, binding.into(), out, schema.as_deref()),
        InitCmd::Srs {
            max_constraints,
            entropy,
            out,
        } => srs(ctx, max_constraints, entropy, &out),
        InitCmd::Setup {
            spec,
            scheme,
            srs,
            issuers,
            name,
            account,
            schema,
        } => setup(ctx, &spec, scheme, srs.as_deref(), &issuers, name, &account, schema.as_deref()),
    }
}

fn spec(ctx: &Ctx, kind: ConditionKind, binding: KeyBinding, out: Option<PathBuf>, schema: Option<&Path>) -> CmdResult {
    let schema = ctx.ws.schema(schema)?;
    let spec = kind.spec(&schema, binding);
    let binding_name = match binding {
        KeyBinding::Plain => "plain",
        KeyBinding::Committed => "committed",
    };
    let rel = out.unwrap_or_else(|| PathBuf::from(format!("artifacts/specs/{kind}-{binding_name}.json")));
    let path = ctx.ws.write(&rel, spec.to_text().as_bytes())?;
    println!("spec  {}", spec.id());
    println!("file  {}", path.display());
    Ok(())
}

fn srs(ctx: &Ctx, max_constraints: usize, entropy: Option<String>, out: &Path) -> CmdResult {
    let entropy = match entropy {
        Some(e) => e.into_bytes(),
        None => ctx.random_bytes("srs").to_vec(),
    };
    let t = std::time::Instant::now();
    let srs = universal_setup(max_constraints, &entropy)?;
    let bytes = srs.to_bytes();
    let path = ctx.ws.write(out, &bytes)?;
    println!("srs       {} ({} bytes, {:.1} s)", ContentHash::of(&bytes), bytes.len(), t.elapsed().as_secs_f64());
    println!("capacity  {max_constraints} constraints");
    println!("file      {}", path.display());
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn setup(
    ctx: &Ctx,
    spec_path: &Path,
    scheme: SchemeId,
    srs_path: Option<&Path>,
    issuers: &[String],
    name: Option<String>,
    account: &str,
    schema: Option<&Path>,
) -> CmdResult {
    let schema = ctx.ws.schema(schema)?;
    let spec = ZkSpec::from_text(&ctx.ws.read_text(spec_path)?)?.normalized();
    let findings = validate_spec(&spec, &schema);
    if !findings.is_ok() {
        return Err(Failure::usage(format!("invalid spec: {findings}")));
    }
    let issuer_keys = issuers
        .iter()
        .map(|n| Ok(ctx.ws.key_file(n)?.public))
        .collect::<CmdResult<Vec<_>>>()?;
    let srs = match srs_path {
        Some(p) => Some(UniversalSrs::from_bytes(&ctx.ws.read(p)?)?),
        None => None,
    };
    let name = name.unwrap_or_else(|| format!("{}-{scheme}", spec.id().short()));
    check_name(&name)?;

    let backend = ctx.backend()?;
    let ecs = compile(&spec, &schema)?;
    let mut rng = ctx.rng(&format!("setup/{name}"));
    let t = std::time::Instant::now();
    let keys = flow::setup_keys(scheme, &ecs, srs.as_ref(), &mut rng)?;
    let setup_s = t.elapsed().as_secs_f64();

    let schema_id = backend.publish(RecordKind::Schema, schema.to_file().into_bytes())?;
    let cs_id = backend.publish(RecordKind::ConstraintSystem, ecs.to_bytes())?;
    let pk_bytes = keys.pk.to_bytes();
    let pk_id = backend.publish(RecordKind::ProvingKey, pk_bytes.clone())?;
    let auth_pk_id = match &keys.auth {
        Some((pk, _)) => Some(backend.publish(RecordKind::ProvingKey, pk.to_bytes())?),
        None => None,
    };
    let status = backend.status()?;
    let meta = ZkvprMeta {
        initiator: account.into(),
        created_at: status.timestamp,
        extra: [("schema_record".to_string(), schema_id.to_hex())].into_iter().collect(),
    };
    let zkvpr = build_zkvpr(
        &spec,
        &keys.pk,
        keys.auth.as_ref().map(|(pk, _)| pk),
        ArtifactRef::vdr(cs_id),
        scheme,
        meta,
    )?;
    let zkvpr_id = backend.publish(RecordKind::Zkvpr, zkvpr.to_bytes())?;

    let params = flow::registration_params(&spec, &keys, zkvpr_id, issuer_keys)?;
    let receipt = backend.submit(Tx::DeployRegistration {
        sender: account.into(),
        params,
    })?;
    report(&receipt)?;
    let contract = receipt.contract.ok_or_else(|| Failure::usage("deployment receipt without address"))?;

    let dir = Workspace::deployment_dir(&name);
    ctx.ws.write(dir.join("pk.bin"), &pk_bytes)?;
    ctx.ws.write(dir.join("vk.bin"), &keys.vk.to_bytes())?;
    if let Some((pk, vk)) = &keys.auth {
        ctx.ws.write(dir.join("auth-pk.bin"), &pk.to_bytes())?;
        ctx.ws.write(dir.join("auth-vk.bin"), &vk.to_bytes())?;
    }
    let deployment = Deployment {
        name: name.clone(),
        contract,
        zkvpr: zkvpr_id,
        scheme,
        spec_id: spec.id(),
        constraint_system: cs_id,
        constraints: ecs.num_constraints(),
        proving_key: pk_id,
        auth_proving_key: auth_pk_id,
        srs: srs_path.map(|p| ctx.ws.read(p).map(|b| ContentHash::of(&b))).transpose()?,
    };
    let file = ctx.ws.write_json(dir.join("deployment.json"), &deployment)?;

    println!();
    println!("contract     {contract}");
    println!("zkvpr        {zkvpr_id}");
    println!("scheme       {scheme} (setup {setup_s:.1} s, {} constraints)", ecs.num_constraints());
    println!("proving key  {pk_id} ({} bytes)", pk_bytes.len());
    println!("deployment   {}", file.display());
    Ok(())
}
