use std::path::Path;
use std::process::{Command, Output};

use cdr_core::registry::ChainConfig;
use cdr_node::Node;

const ELIGIBLE: [&str; 4] = [
    "firmware_version=7",
    "postcode=10178",
    "measurement_type=temperature",
    "manufactured_at=2024-03-01",
];

struct Run {
    code: i32,
    stdout: String,
    stderr: String,
}

impl Run {
    fn ok(self) -> Run {
        assert_eq!(self.code, 0, "stdout:\n{}\nstderr:\n{}", self.stdout, self.stderr);
        self
    }

    fn fails(self, code: i32, needle: &str) -> Run {
        assert_eq!(self.code, code, "stdout:\n{}\nstderr:\n{}", self.stdout, self.stderr);
        let all = format!("{}{}", self.stdout, self.stderr);
        assert!(all.contains(needle), "{needle:?} not in:\n{all}");
        self
    }

    /// Second column of the first line starting with `key`.
    fn field(&self, key: &str) -> String {
        self.stdout
            .lines()
            .find(|l| l.split_whitespace().next() == Some(key))
            .and_then(|l| l.split_whitespace().nth(1))
            .unwrap_or_else(|| panic!("no {key} in:\n{}", self.stdout))
            .to_string()
    }
}

fn cdr(ws: &Path, node: Option<&str>, args: &[&str]) -> Run {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_cdr"));
    cmd.env("CDR_WORKSPACE", ws).env_remove("CDR_NODE").args(args);
    if let Some(url) = node {
        cmd.args(["--node", url]);
    }
    let Output { status, stdout, stderr } = cmd.output().unwrap();
    Run {
        code: status.code().unwrap_or(-1),
        stdout: String::from_utf8_lossy(&stdout).into_owned(),
        stderr: String::from_utf8_lossy(&stderr).into_owned(),
    }
}

fn attest(ws: &Path, node: Option<&str>, device: &str, claims: &[&str]) -> Run {
    let mut args = vec!["issuer", "attest", "--issuer", "maker", "--device", device];
    for c in claims {
        args.extend(["--claim", c]);
    }
    cdr(ws, node, &args)
}

/// Issuer key, schema, one eligible device and a deployed contract for `condition`.
fn deploy(ws: &Path, node: Option<&str>, condition: &str, binding: &str, seed: &str) -> (String, String) {
    cdr(ws, node, &["--seed", seed, "issuer", "keygen", "--name", "maker"]).ok();
    cdr(ws, node, &["--seed", seed, "keygen", "--name", "station-1"]).ok();
    cdr(ws, node, &["issuer", "publish-schema"]).ok();
    attest(ws, node, "station-1", &ELIGIBLE).ok();
    let spec = format!("artifacts/specs/{condition}-{binding}.json");
    cdr(ws, node, &["init", "spec", "--condition", condition, "--binding", binding]).ok();
    let setup = cdr(
        ws,
        node,
        &["--seed", seed, "init", "setup", "--spec", &spec, "--scheme", "per_circuit_setup", "--issuer", "maker", "--name", "app"],
    )
    .ok();
    (setup.field("contract"), setup.field("zkvpr"))
}

#[test]
fn issuer_commands() {
    let dir = tempfile::tempdir().unwrap();
    let ws = dir.path();
    cdr(ws, None, &["issuer", "keygen", "--name", "maker"]).ok();
    cdr(ws, None, &["issuer", "keygen", "--name", "maker"]).fails(2, "already exists");
    cdr(ws, None, &["keygen", "--name", "station-1"]).ok();
    for d in ["keys", "wallet", "vdr", "chain", "artifacts"] {
        assert!(ws.join(d).is_dir());
    }

    let first = cdr(ws, None, &["issuer", "publish-schema"]).ok().field("record");
    let second = cdr(ws, None, &["issuer", "publish-schema"]).ok().field("record");
    assert_eq!(first, second);

    attest(ws, None, "station-1", &ELIGIBLE).ok();
    assert!(ws.join("wallet/station-1.vc.json").exists());
    cdr(ws, None, &["issuer", "verify", "--wallet", "wallet/station-1.vc.json", "--issuer", "maker"]).ok();
    cdr(ws, None, &["keygen", "--name", "other"]).ok();
    cdr(ws, None, &["issuer", "verify", "--wallet", "wallet/station-1.vc.json", "--issuer", "other"])
        .fails(1, "does not verify");

    let mut bad = ELIGIBLE.to_vec();
    bad[0] = "firmware_version=seven";
    attest(ws, None, "station-1", &bad).fails(2, "firmware_version");
    attest(ws, None, "station-1", &ELIGIBLE[1..]).fails(2, "firmware_version");
    let mut extra = ELIGIBLE.to_vec();
    extra.push("colour=red");
    attest(ws, None, "station-1", &extra).fails(2, "colour");
    attest(ws, None, "ghost", &ELIGIBLE).fails(2, "ghost");
}

#[test]
fn usage_errors_exit_with_2() {
    let dir = tempfile::tempdir().unwrap();
    let ws = dir.path();
    cdr(ws, None, &["init", "setup", "--spec", "x.json", "--scheme", "fastest", "--issuer", "a"]).fails(2, "fastest");
    cdr(ws, None, &["issuer", "keygen", "--name", "../escape"]).fails(2, "invalid name");
    cdr(ws, None, &["init", "spec", "--condition", "range"]).fails(2, "publish-schema");
    cdr(ws, None, &["issuer", "publish-schema"]).ok();
    cdr(ws, None, &["init", "spec", "--condition", "range", "--out", "/tmp/outside.json"]).fails(2, "outside the workspace");
    cdr(ws, None, &["chain", "status"]).ok();
    cdr(ws, Some("http://127.0.0.1:1"), &["chain", "status"]).fails(2, "cannot reach node");
}

#[test]
fn universal_setup_needs_an_srs() {
    let dir = tempfile::tempdir().unwrap();
    let ws = dir.path();
    cdr(ws, None, &["issuer", "keygen", "--name", "maker"]).ok();
    cdr(ws, None, &["issuer", "publish-schema"]).ok();
    cdr(ws, None, &["init", "spec", "--condition", "membership"]).ok();
    cdr(
        ws,
        None,
        &["init", "setup", "--spec", "artifacts/specs/membership-plain.json", "--scheme", "universal_setup", "--issuer", "maker"],
    )
    .fails(2, "SRS required");
}

#[test]
fn owner_registers_locally() {
    let dir = tempfile::tempdir().unwrap();
    let ws = dir.path();
    let (contract, zkvpr) = deploy(ws, None, "range", "plain", "1");
    assert!(ws.join("artifacts/app/deployment.json").exists());
    assert!(ws.join("artifacts/app/pk.bin").exists());

    cdr(ws, None, &["owner", "prove", "--zkvpr", &zkvpr, "--device", "station-1", "--account", "0xalice"]).ok();
    let reg = cdr(
        ws,
        None,
        &["owner", "register", "--contract", &contract, "--zkvp", "wallet/station-1.zkvp.json", "--account", "0xalice"],
    )
    .ok();
    assert!(reg.stdout.contains("registered true"), "{}", reg.stdout);
    cdr(ws, None, &["chain", "is-registered", "--contract", &contract, "--device", "station-1"]).ok();

    cdr(
        ws,
        None,
        &["owner", "register", "--contract", &contract, "--zkvp", "wallet/station-1.zkvp.json", "--account", "0xmallory"],
    )
    .fails(1, "owner_mismatch");
    cdr(
        ws,
        None,
        &["owner", "register", "--contract", &contract, "--zkvp", "wallet/station-1.zkvp.json", "--account", "0xalice"],
    )
    .fails(1, "duplicate_device");

    // Data from the registered device goes through; an unregistered one is refused.
    let app = cdr(ws, None, &["chain", "deploy-app", "--registration", &contract]).ok().field("contract");
    cdr(ws, None, &["owner", "provision", "--app", &app, "--device", "station-1", "--payload", "t=21.5", "--account", "0xalice"])
        .ok();
    cdr(ws, None, &["keygen", "--name", "station-2"]).ok();
    cdr(ws, None, &["owner", "provision", "--app", &app, "--device", "station-2", "--payload", "t=9", "--account", "0xbob"])
        .fails(1, "unregistered_device");

    // Ineligible firmware.
    let mut old = ELIGIBLE.to_vec();
    old[0] = "firmware_version=3";
    attest(ws, None, "station-2", &old).ok();
    cdr(ws, None, &["owner", "prove", "--zkvpr", &zkvpr, "--device", "station-2", "--account", "0xbob"])
        .fails(1, "condition unsatisfied: firmware_version");
    assert!(!ws.join("wallet/station-2.zkvp.json").exists());

    // Log export and replay.
    cdr(ws, None, &["chain", "export"]).ok();
    cdr(ws, None, &["chain", "verify", "--file", "artifacts/chain-export.json"]).ok();
    cdr(ws, None, &["chain", "receipts", "--json"]).ok();

    // Corrupted proving key in the registry.
    let pk_dir = ws.join("vdr/proving_key");
    let pk_file = std::fs::read_dir(&pk_dir).unwrap().next().unwrap().unwrap().path();
    let mut bytes = std::fs::read(&pk_file).unwrap();
    bytes[64] ^= 0x40;
    std::fs::write(&pk_file, bytes).unwrap();
    let run = cdr(ws, None, &["owner", "prove", "--zkvpr", &zkvpr, "--device", "station-1", "--account", "0xalice"])
        .fails(1, "integrity check failed");
    assert!(!run.stdout.contains("proof "), "{}", run.stdout);
}

#[test]
fn committed_key_binding() {
    let dir = tempfile::tempdir().unwrap();
    let ws = dir.path();
    let (contract, zkvpr) = deploy(ws, None, "equality", "committed", "2");
    let proof = cdr(ws, None, &["owner", "prove", "--zkvpr", &zkvpr, "--device", "station-1", "--account", "0xalice"]).ok();
    assert!(proof.stdout.contains("commitment"), "{}", proof.stdout);
    assert!(ws.join("wallet/station-1.randomness").exists());
    cdr(
        ws,
        None,
        &["owner", "register", "--contract", &contract, "--zkvp", "wallet/station-1.zkvp.json", "--account", "0xalice"],
    )
    .ok();
    cdr(
        ws,
        None,
        &[
            "owner", "authenticate", "--zkvpr", &zkvpr, "--contract", &contract, "--device", "station-1", "--payload", "t=21.5",
            "--account", "0xalice",
        ],
    )
    .ok();

    // The device key never reaches the chain.
    let key = std::fs::read_to_string(ws.join("keys/station-1.json")).unwrap();
    let key: serde_json::Value = serde_json::from_str(&key).unwrap();
    let public = key["public"].as_str().unwrap().to_string();
    let chain = std::fs::read_to_string(ws.join("chain/chain.json")).unwrap();
    assert!(!chain.contains(&public));
    cdr(ws, None, &["chain", "is-registered", "--contract", &contract, "--device", "station-1"]).fails(1, "not registered");
}

#[test]
fn same_seed_same_artifacts() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let da = deploy(a.path(), None, "membership", "plain", "7");
    let db = deploy(b.path(), None, "membership", "plain", "7");
    assert_eq!(da, db);
    let sa = cdr(a.path(), None, &["chain", "status"]).ok().field("state");
    let sb = cdr(b.path(), None, &["chain", "status"]).ok().field("state");
    assert_eq!(sa, sb);
    assert_eq!(
        std::fs::read(a.path().join("artifacts/app/pk.bin")).unwrap(),
        std::fs::read(b.path().join("artifacts/app/pk.bin")).unwrap()
    );
}

#[test]
fn registration_through_a_node() {
    let data = tempfile::tempdir().unwrap();
    let node = Node::open(data.path(), ChainConfig::default()).unwrap();
    let rt = tokio::runtime::Builder::new_multi_thread()
        .worker_threads(1)
        .enable_all()
        .build()
        .unwrap();
    let listener = rt.block_on(tokio::net::TcpListener::bind("127.0.0.1:0")).unwrap();
    let url = format!("http://{}", listener.local_addr().unwrap());
    std::thread::spawn(move || rt.block_on(cdr_node::serve(listener, node)));

    let dir = tempfile::tempdir().unwrap();
    let ws = dir.path();
    let node = Some(url.as_str());
    let (contract, zkvpr) = deploy(ws, node, "range", "plain", "3");
    cdr(ws, node, &["owner", "prove", "--zkvpr", &zkvpr, "--device", "station-1", "--account", "0xalice"]).ok();
    cdr(
        ws,
        node,
        &["owner", "register", "--contract", &contract, "--zkvp", "wallet/station-1.zkvp.json", "--account", "0xalice"],
    )
    .ok();
    cdr(ws, node, &["chain", "is-registered", "--contract", &contract, "--device", "station-1"]).ok();
    let status = cdr(ws, node, &["chain", "status"]).ok();
    assert!(status.stdout.contains(&url));
    assert_eq!(status.field("height"), "2");

    // Nothing went to the workspace's own registry or chain.
    assert!(!ws.join("chain/chain.json").exists());
    assert_eq!(std::fs::read_dir(ws.join("vdr")).unwrap().count(), 0);
    assert!(data.path().join("chain.json").exists());
}

#[test]
fn bench_single_cell() {
    let dir = tempfile::tempdir().unwrap();
    let ws = dir.path();
    let run = cdr(
        ws,
        None,
        &["bench", "--schemes", "per_circuit_setup", "--conditions", "range,equality", "--repeat", "1"],
    )
    .ok();
    assert!(run.stdout.contains("range"), "{}", run.stdout);
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(ws.join("artifacts/bench.json")).unwrap()).unwrap();
    let rows = report["rows"].as_array().unwrap();
    assert_eq!(rows.len(), 2);
    for row in rows {
        for key in ["setup_s", "witness_s", "prove_s", "verify_s", "cost_units", "constraint_count", "pk_bytes", "vk_bytes", "proof_bytes"] {
            assert!(row.get(key).is_some(), "{key} missing");
        }
    }
    assert_eq!(report["repeat"], 1);
    cdr(ws, None, &["bench", "--repeat", "0"]).fails(2, "repeat");
}
