use std::path::Path;

use cdr_core::credential::{attest, verify_vc, Claim};
use cdr_core::crypto::encode::encode_key;
use cdr_core::crypto::{keygen as derive_key, AttributeKind, AttributeValue};
use cdr_core::registry::RecordKind;
use cdr_core::scenario;

use super::Ctx;
use crate::error::{CmdResult, Failure};
use crate::workspace::{Workspace, SCHEMA_FILE};
use crate::IssuerCmd;

pub fn run(ctx: &Ctx, cmd: IssuerCmd) -> CmdResult {
    match cmd {
        IssuerCmd::Keygen(a) => keygen(ctx, &a.name),
        IssuerCmd::PublishSchema { from } => publish_schema(ctx, from.as_deref()),
        IssuerCmd::Attest {
            issuer,
            device,
            claims,
            schema,
            out,
        } => attest_cmd(ctx, &issuer, &device, &claims, schema.as_deref(), out),
        IssuerCmd::Verify { wallet, issuer, schema } => {
            let vc = ctx.ws.credential(&wallet)?;
            let key = ctx.ws.key_file(&issuer)?.public;
            let schema = ctx.ws.schema(schema.as_deref())?;
            if verify_vc(&vc, &key, &schema)? {
                println!("credential verifies under issuer {issuer} ({} claims)", vc.claims.len());
                Ok(())
            } else {
                Err(Failure::rejected(format!("credential does not verify under issuer {issuer}")))
            }
        }
    }
}

pub fn keygen(ctx: &Ctx, name: &str) -> CmdResult {
    let kp = derive_key(&ctx.random_bytes(&format!("key/{name}")))?;
    let path = ctx.ws.save_key(name, &kp)?;
    println!("key     {name}");
    println!("public  {}", kp.public.to_hex());
    println!("file    {}", path.display());
    Ok(())
}

fn publish_schema(ctx: &Ctx, from: Option<&Path>) -> CmdResult {
    let schema = match from {
        Some(p) => cdr_core::credential::CredentialSchema::from_file(&ctx.ws.read_text(p)?)?,
        None => scenario::schema(),
    };
    let text = schema.to_file();
    ctx.ws.write(SCHEMA_FILE, text.as_bytes())?;
    let backend = ctx.backend()?;
    let id = backend.publish(RecordKind::Schema, text.into_bytes())?;
    println!("schema    {} ({} attributes)", schema.schema_id.to_hex(), schema.attributes().len());
    println!("record    {id}");
    println!("published to {}", backend.describe());
    Ok(())
}

fn attest_cmd(
    ctx: &Ctx,
    issuer: &str,
    device: &str,
    claims: &[String],
    schema: Option<&Path>,
    out: Option<std::path::PathBuf>,
) -> CmdResult {
    let schema = ctx.ws.schema(schema)?;
    let issuer_kp = ctx.ws.keypair(issuer)?;
    let device_key = ctx.ws.key_file(device)?.public;
    let subject = encode_key(&device_key);

    let mut given = std::collections::BTreeMap::new();
    for c in claims {
        let (name, value) = c
            .split_once('=')
            .ok_or_else(|| Failure::usage(format!("claim {c:?} is not NAME=VALUE")))?;
        if given.insert(name.trim().to_string(), value.trim().to_string()).is_some() {
            return Err(Failure::usage(format!("attribute {name} given twice")));
        }
    }
    let mut out_claims = Vec::new();
    for attr in schema.attributes() {
        let value = match (attr.kind, given.remove(&attr.name)) {
            (AttributeKind::Key, None) => AttributeValue::Key(device_key),
            (kind, Some(text)) => AttributeValue::parse(kind, &text)
                .map_err(|e| Failure::usage(format!("attribute {} ({kind}): {e}", attr.name)))?,
            (_, None) => return Err(Failure::usage(format!("missing claim for attribute {}", attr.name))),
        };
        out_claims.push(Claim {
            subject_id: subject,
            attribute_id: attr.attribute_id,
            value,
        });
    }
    if let Some(name) = given.keys().next() {
        return Err(Failure::usage(format!("attribute {name} is not in schema {}", schema.body.name)));
    }
    let vc = attest(&out_claims, &issuer_kp, &schema)?;
    let rel = out.unwrap_or_else(|| Workspace::wallet_path(device));
    let path = ctx.ws.write(&rel, vc.to_file().as_bytes())?;
    println!("credential  {} claims about {device}, signed by {issuer}", vc.claims.len());
    println!("wallet      {}", path.display());
    Ok(())
}
