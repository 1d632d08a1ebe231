//! Symbolically execute a sliced program: every feasible path is explored,
//! and each machine-error path comes with a satisfying input model.
//!
//!     cargo run --example symbolic_paths

use minisse::frontend::{build_cfg, parse_and_check, restrict_to_entry};
use minisse::instrument::instrument;
use minisse::machines::{match_sites, parse_machine, LOCK_SM};
use minisse::pointsto::andersen;
use minisse::slicer::{criteria_from_instrumentation, slice};
use minisse::symexec::{sym_execute, Limits, PathKind};

const SRC: &str = "\
int L;
extern void lock(int *l);
extern void unlock(int *l);
void work(int a, int b) {
    if (a > 0) {
        lock(&L);
    }
    if (b > 0) {
        return;
    }
    if (a > 0) {
        unlock(&L);
    }
    return;
}
";

fn main() {
    let prog = parse_and_check(SRC).expect("parse");
    let cfg = build_cfg(restrict_to_entry(&prog, "work").unwrap());
    let spec = parse_machine(LOCK_SM).expect("machine spec");
    let sites = match_sites(&cfg, &spec);
    let pts = andersen(&cfg);
    let ip = instrument(&cfg, &spec, &sites, &pts, None).expect("instrument");
    let criteria = criteria_from_instrumentation(&ip);
    let pts_i = andersen(&ip.cfg);
    let sliced = slice(&ip, &criteria, &pts_i);

    let entry = sliced.instr.cfg.func_id("work").unwrap();
    let out = sym_execute(&sliced.instr, entry, &Limits { loop_bound: None, ..Limits::default() });

    println!(
        "{} paths ({} solver calls, {} pruned infeasible):",
        out.paths.len(),
        out.solver_calls,
        out.pruned_infeasible
    );
    for p in &out.paths {
        match &p.kind {
            PathKind::Returned => println!("  returned        ({} steps)", p.steps),
            PathKind::Bug { target, error_state, model, .. } => {
                println!(
                    "  BUG {error_state} on {target} ({} steps), witness {:?}",
                    p.steps,
                    out.table.render_model(model)
                );
            }
            other => println!("  {other:?}"),
        }
    }
}
