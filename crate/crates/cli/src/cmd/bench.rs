use cdr_core::bench::{self, BenchConfig};

use super::Ctx;
use crate::error::{CmdResult, Failure};
use crate::BenchArgs;

pub fn run(ctx: &Ctx, args: BenchArgs) -> CmdResult {
    if args.repeat == 0 {
        return Err(Failure::usage("--repeat must be at least 1"));
    }
    let config = BenchConfig {
        conditions: args.conditions,
        schemes: args.schemes,
        repeat: args.repeat,
        srs_max_constraints: args.srs_max_constraints,
        seed: ctx.seed.unwrap_or(0),
    };
    let report = bench::run(&config).map_err(|e| Failure::rejected(format!("bench aborted: {e}")))?;
    let path = ctx.ws.write(&args.json, report.to_json().as_bytes())?;
    print!("{}", report.render_table());
    println!("report: {}", path.display());
    if args.check {
        let checks = report.check();
        print!("{}", bench::render_checks(&checks));
        let failed = checks.iter().filter(|c| !c.pass).count();
        if failed > 0 {
            return Err(Failure::rejected(format!("{failed} of {} checks failed", checks.len())));
        }
    }
    Ok(())
}
