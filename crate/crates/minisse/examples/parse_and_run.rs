//! Parse a MiniC program, pretty-print it back, and run it concretely.
//!
//!     cargo run --example parse_and_run

use minisse::frontend::interp::{run, CVal, InterpOptions, Outcome, RunInputs};
use minisse::frontend::pretty::print_program;
use minisse::frontend::{build_cfg, parse_and_check};

const SRC: &str = "\
int total;
int clamp(int x) {
    if (x > 100) {
        return 100;
    }
    return x;
}
void add(int x) {
    int c;
    c = clamp(x);
    total = total + c;
}
";

fn main() {
    let prog = parse_and_check(SRC).expect("parse");
    println!("// round-tripped source\n{}", print_program(&prog));

    let cfg = build_cfg(prog);
    let entry = cfg.func_id("add").unwrap();
    let total = cfg.objects.lookup_display("total").unwrap();

    let opts = InterpOptions::default();
    let mut running = 0i64;
    for x in [7, 250, -3] {
        let mut inputs = RunInputs::default();
        inputs.args = vec![CVal::Int(x)];
        inputs.globals.insert(total, CVal::Int(running));
        let res = run(&cfg, entry, &inputs, &opts);
        match res.outcome {
            Outcome::Returned(_) => {
                if let CVal::Int(t) = res.store[total.0 as usize][0] {
                    println!("add({x:4}) -> total = {t}  ({} steps)", res.steps);
                    running = t;
                }
            }
            other => println!("add({x:4}) -> {other:?}"),
        }
    }
}
