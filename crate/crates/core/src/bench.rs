//! Bench harness: the full attest → setup → prove → register flow for every
//! (condition, scheme) cell, timed on a single thread.
//!
//! Universal setup time is the SRS generation for the configured constraint bound plus
//! indexing. The SRS is generated once per repetition and shared by the universal cells
//! of that repetition, and its time is charged to each of them.

use std::fmt::Write as _;
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};

use crate::canonical::{to_canonical_json_pretty, ContentHash};
use crate::circuit::{self, compile};
use crate::flow;
use crate::proofsys::{self, universal_setup, SchemeId, DEFAULT_SRS_MAX_CONSTRAINTS};
use crate::registry::Chain;
use crate::scenario::{self, ConditionKind};
use crate::zkspec::KeyBinding;

pub const REPORT_VERSION: &str = "cdr-bench/1";

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BenchConfig {
    pub conditions: Vec<ConditionKind>,
    pub schemes: Vec<SchemeId>,
    pub repeat: usize,
    pub srs_max_constraints: usize,
    pub seed: u64,
}

impl Default for BenchConfig {
    fn default() -> Self {
        BenchConfig {
            conditions: ConditionKind::ALL.to_vec(),
            schemes: SchemeId::ALL.to_vec(),
            repeat: 1,
            srs_max_constraints: DEFAULT_SRS_MAX_CONSTRAINTS,
            seed: 0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BenchRow {
    pub condition: ConditionKind,
    pub scheme: SchemeId,
    /// Includes `srs_s` for the universal scheme.
    pub setup_s: f64,
    pub srs_s: f64,
    pub witness_s: f64,
    pub prove_s: f64,
    pub verify_s: f64,
    pub cost_units: u64,
    pub constraint_count: usize,
    pub pk_bytes: usize,
    pub vk_bytes: usize,
    pub proof_bytes: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BenchReport {
    pub version: String,
    /// Times are medians over this many runs.
    pub repeat: usize,
    pub threads: usize,
    pub srs_max_constraints: usize,
    pub rows: Vec<BenchRow>,
}

#[derive(Debug, thiserror::Error)]
#[error("{cell}: {message}")]
pub struct BenchError {
    pub cell: String,
    pub message: String,
}

fn cell_err(condition: ConditionKind, scheme: SchemeId, message: impl ToString) -> BenchError {
    BenchError {
        cell: format!("{condition}/{scheme}"),
        message: message.to_string(),
    }
}

fn median(mut xs: Vec<f64>) -> f64 {
    xs.sort_by(f64::total_cmp);
    let n = xs.len();
    if n == 0 {
        return 0.0;
    }
    if n % 2 == 1 {
        xs[n / 2]
    } else {
        (xs[n / 2 - 1] + xs[n / 2]) / 2.0
    }
}

#[derive(Default)]
struct Samples {
    setup: Vec<f64>,
    srs: Vec<f64>,
    witness: Vec<f64>,
    prove: Vec<f64>,
    verify: Vec<f64>,
    fixed: Option<(u64, usize, usize, usize, usize)>,
}

/// Runs the matrix inside a one-thread pool so every cell is timed single-threaded.
pub fn run(config: &BenchConfig) -> Result<BenchReport, BenchError> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(1)
        .build()
        .map_err(|e| BenchError {
            cell: "pool".into(),
            message: e.to_string(),
        })?;
    pool.install(|| run_inner(config))
}

fn run_inner(config: &BenchConfig) -> Result<BenchReport, BenchError> {
    let schema = scenario::schema();
    let issuer = scenario::issuer();
    let cells: Vec<(ConditionKind, SchemeId)> = config
        .conditions
        .iter()
        .flat_map(|c| config.schemes.iter().map(move |s| (*c, *s)))
        .collect();
    let mut samples: Vec<Samples> = cells.iter().map(|_| Samples::default()).collect();
    let compiled = config
        .conditions
        .iter()
        .map(|c| {
            let spec = c.spec(&schema, KeyBinding::Plain);
            let ecs = compile(&spec, &schema).map_err(|e| cell_err(*c, SchemeId::PerCircuitSetup, e))?;
            Ok((*c, spec, ecs))
        })
        .collect::<Result<Vec<_>, BenchError>>()?;

    for rep in 0..config.repeat.max(1) {
        let mut rng = ChaCha20Rng::seed_from_u64(config.seed.wrapping_add(rep as u64));
        let needs_srs = config.schemes.contains(&SchemeId::UniversalSetup);
        let (srs, srs_s) = if needs_srs {
            let t = Instant::now();
            let entropy = [b"cdr/bench/".as_slice(), &config.seed.to_le_bytes(), &(rep as u64).to_le_bytes()].concat();
            let srs = universal_setup(config.srs_max_constraints, &entropy)
                .map_err(|e| cell_err(config.conditions[0], SchemeId::UniversalSetup, e))?;
            (Some(srs), t.elapsed().as_secs_f64())
        } else {
            (None, 0.0)
        };

        for (i, (condition, scheme)) in cells.iter().enumerate() {
            let (condition, scheme) = (*condition, *scheme);
            let err = |e: &dyn std::fmt::Display| cell_err(condition, scheme, e);
            let (_, spec, ecs) = compiled.iter().find(|c| c.0 == condition).expect("compiled");
            let srs_ref = if scheme == SchemeId::UniversalSetup { srs.as_ref() } else { None };

            let t = Instant::now();
            let (pk, vk) = proofsys::setup(scheme, ecs, srs_ref, &mut rng).map_err(|e| err(&e))?;
            let index_s = t.elapsed().as_secs_f64();
            let srs_part = if scheme == SchemeId::UniversalSetup { srs_s } else { 0.0 };

            let device = scenario::device(i as u64 + 1000 * rep as u64);
            let vc = scenario::eligible_credential(&device);
            let owner = format!("0xbench-owner-{i}");
            let mut chain = Chain::default();
            let keys = flow::Keys { pk, vk, auth: None };
            let params = flow::registration_params(spec, &keys, ContentHash::of(&spec.id().0), vec![issuer.public])
                .map_err(|e| err(&e))?;
            let addr = chain.deploy_registration("0xbench-operator", params).map_err(|e| err(&e))?;

            let t = Instant::now();
            let public = flow::public_inputs(spec, ecs, &vc, None, &owner, chain.next_timestamp()).map_err(|e| err(&e))?;
            let witness = circuit::assign(spec, ecs, &vc, &public, None).map_err(|e| err(&e))?;
            let witness_s = t.elapsed().as_secs_f64();

            let t = Instant::now();
            let proof = proofsys::prove(scheme, ecs, &witness, &keys.pk, &mut rng).map_err(|e| err(&e))?;
            let prove_s = t.elapsed().as_secs_f64();

            let t = Instant::now();
            let ok = proofsys::verify(scheme, &proof, &witness.public, &keys.vk).map_err(|e| err(&e))?;
            let verify_s = t.elapsed().as_secs_f64();
            if !ok {
                return Err(err(&"honest proof did not verify"));
            }

            let proof_bytes = proof.size_bytes();
            let receipt = chain.submit_registration(addr, crate::registry::ZkVp { public, proof }, &owner);
            if !receipt.is_accepted() {
                return Err(err(&format!("registration rejected: {:?} {}", receipt.status, receipt.detail)));
            }

            let s = &mut samples[i];
            s.setup.push(srs_part + index_s);
            s.srs.push(srs_part);
            s.witness.push(witness_s);
            s.prove.push(prove_s);
            s.verify.push(verify_s);
            s.fixed = Some((
                receipt.cost_units,
                ecs.num_constraints(),
                keys.pk.size_bytes(),
                keys.vk.size_bytes(),
                proof_bytes,
            ));
        }
    }

    let rows = cells
        .iter()
        .zip(samples)
        .map(|((condition, scheme), s)| {
            let (cost_units, constraint_count, pk_bytes, vk_bytes, proof_bytes) = s.fixed.expect("at least one run");
            BenchRow {
                condition: *condition,
                scheme: *scheme,
                setup_s: median(s.setup),
                srs_s: median(s.srs),
                witness_s: median(s.witness),
                prove_s: median(s.prove),
                verify_s: median(s.verify),
                cost_units,
                constraint_count,
                pk_bytes,
                vk_bytes,
                proof_bytes,
            }
        })
        .collect();
    Ok(BenchReport {
        version: REPORT_VERSION.into(),
        repeat: config.repeat.max(1),
        threads: 1,
        srs_max_constraints: config.srs_max_constraints,
        rows,
    })
}

fn human_bytes(n: usize) -> String {
    const UNITS: [&str; 4] = ["B", "kB", "MB", "GB"];
    let mut v = n as f64;
    let mut u = 0;
    while v >= 1000.0 && u + 1 < UNITS.len() {
        v /= 1000.0;
        u += 1;
    }
    if u == 0 {
        format!("{n} B")
    } else {
        format!("{v:.1} {}", UNITS[u])
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CheckResult {
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

impl BenchReport {
    pub fn row(&self, condition: ConditionKind, scheme: SchemeId) -> Option<&BenchRow> {
        self.rows.iter().find(|r| r.condition == condition && r.scheme == scheme)
    }

    pub fn to_json(&self) -> String {
        to_canonical_json_pretty(self)
    }

    pub fn render_table(&self) -> String {
        let header = [
            "condition", "scheme", "constraints", "setup s", "witness s", "prove s", "verify ms", "cost units", "pk",
            "vk", "proof",
        ];
        let body: Vec<[String; 11]> = self
            .rows
            .iter()
            .map(|r| {
                [
                    r.condition.to_string(),
                    r.scheme.to_string(),
                    r.constraint_count.to_string(),
                    format!("{:.2}", r.setup_s),
                    format!("{:.3}", r.witness_s),
                    format!("{:.2}", r.prove_s),
                    format!("{:.1}", r.verify_s * 1e3),
                    r.cost_units.to_string(),
                    human_bytes(r.pk_bytes),
                    human_bytes(r.vk_bytes),
                    human_bytes(r.proof_bytes),
                ]
            })
            .collect();
        let mut widths: Vec<usize> = header.iter().map(|h| h.len()).collect();
        for row in &body {
            for (w, cell) in widths.iter_mut().zip(row) {
                *w = (*w).max(cell.len());
            }
        }
        let mut out = String::new();
        let line = |out: &mut String, cells: &[&str]| {
            let parts: Vec<String> = cells
                .iter()
                .zip(&widths)
                .enumerate()
                .map(|(i, (c, w))| if i < 2 { format!("{c:<w$}") } else { format!("{c:>w$}") })
                .collect();
            let _ = writeln!(out, "{}", parts.join("  ").trim_end());
        };
        line(&mut out, &header);
        let rule: Vec<String> = widths.iter().map(|w| "-".repeat(*w)).collect();
        line(&mut out, &rule.iter().map(String::as_str).collect::<Vec<_>>());
        for row in &body {
            line(&mut out, &row.iter().map(String::as_str).collect::<Vec<_>>());
        }
        let _ = writeln!(
            out,
            "times are medians of {} run(s) on {} thread; universal setup includes SRS generation for {} constraints",
            self.repeat, self.threads, self.srs_max_constraints
        );
        out
    }

    /// Ordering properties between schemes and between conditions.
    pub fn check(&self) -> Vec<CheckResult> {
        let mut out = Vec::new();
        let mut push = |name: String, pass: bool, detail: String| out.push(CheckResult { name, pass, detail });
        for c in ConditionKind::ALL {
            let (Some(p), Some(u)) = (self.row(c, SchemeId::PerCircuitSetup), self.row(c, SchemeId::UniversalSetup)) else {
                continue;
            };
            push(
                format!("{c}: setup(universal) >= 10x setup(per-circuit)"),
                u.setup_s >= 10.0 * p.setup_s,
                format!("{:.2} s vs {:.2} s ({:.1}x)", u.setup_s, p.setup_s, u.setup_s / p.setup_s),
            );
            push(
                format!("{c}: prove(universal) > prove(per-circuit)"),
                u.prove_s > p.prove_s,
                format!("{:.2} s vs {:.2} s", u.prove_s, p.prove_s),
            );
            push(
                format!("{c}: pk(universal) > pk(per-circuit)"),
                u.pk_bytes > p.pk_bytes,
                format!("{} vs {}", human_bytes(u.pk_bytes), human_bytes(p.pk_bytes)),
            );
            push(
                format!("{c}: cost(universal) > cost(per-circuit)"),
                u.cost_units > p.cost_units,
                format!("{} vs {}", u.cost_units, p.cost_units),
            );
            for r in [p, u] {
                push(
                    format!("{c}/{}: vk <= pk / 100", r.scheme),
                    r.vk_bytes * 100 <= r.pk_bytes,
                    format!("{} vs {}", human_bytes(r.vk_bytes), human_bytes(r.pk_bytes)),
                );
            }
        }
        for s in SchemeId::ALL {
            let get = |c| self.row(c, s);
            if let (Some(m), Some(r), Some(e)) = (
                get(ConditionKind::Membership),
                get(ConditionKind::Range),
                get(ConditionKind::Equality),
            ) {
                push(
                    format!("{s}: constraints(membership) > constraints(range)"),
                    m.constraint_count > r.constraint_count,
                    format!("{} vs {}", m.constraint_count, r.constraint_count),
                );
                let larger = r.constraint_count.max(e.constraint_count);
                let diff = r.constraint_count.abs_diff(e.constraint_count);
                push(
                    format!("{s}: |constraints(range) - constraints(equality)| <= 25%"),
                    diff * 4 <= larger,
                    format!("{} vs {} ({:.1}%)", r.constraint_count, e.constraint_count, 100.0 * diff as f64 / larger as f64),
                );
                push(
                    format!("{s}: cost(membership) >= cost(equality)"),
                    m.cost_units >= e.cost_units,
                    format!("{} vs {}", m.cost_units, e.cost_units),
                );
            }
        }
        out
    }
}

pub fn render_checks(checks: &[CheckResult]) -> String {
    let mut out = String::new();
    for c in checks {
        let _ = writeln!(out, "[{}] {} ({})", if c.pass { "PASS" } else { "FAIL" }, c.name, c.detail);
    }
    out
}
