//! Weave a typestate machine into a program as explicit state variables and
//! fire pseudo-calls, then run the instrumented program concretely until
//! the machine steps into an error state.
//!
//!     cargo run --example instrument_and_replay

use minisse::frontend::interp::{run, CVal, InterpOptions, Outcome, RunInputs};
use minisse::frontend::pretty::print_program;
use minisse::frontend::{build_cfg, parse_and_check};
use minisse::instrument::instrument;
use minisse::machines::{match_sites, parse_machine, LOCK_SM};
use minisse::pointsto::andersen;

const SRC: &str = "\
int L;
extern void lock(int *l);
extern void unlock(int *l);
void work(int n) {
    lock(&L);
    if (n > 0) {
        unlock(&L);
    }
    return;
}
";

fn main() {
    let prog = parse_and_check(SRC).expect("parse");
    let cfg = build_cfg(prog);
    let spec = parse_machine(LOCK_SM).expect("machine spec");
    let sites = match_sites(&cfg, &spec);
    let pts = andersen(&cfg);
    let ip = instrument(&cfg, &spec, &sites, &pts, None).expect("instrument");

    println!("// instrumented source\n{}", print_program(&ip.cfg.ast));

    let entry = ip.cfg.func_id("work").unwrap();
    let opts = InterpOptions::default();
    for n in [3, 0] {
        let mut inputs = RunInputs::default();
        inputs.args = vec![CVal::Int(n)];
        match run(&ip.cfg, entry, &inputs, &opts).outcome {
            Outcome::Returned(_) => println!("work({n}) -> returned cleanly"),
            Outcome::Fault(f) => println!("work({n}) -> {f:?}"),
            other => println!("work({n}) -> {other:?}"),
        }
    }
}
