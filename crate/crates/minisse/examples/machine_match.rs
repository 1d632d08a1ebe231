//! Parse a typestate machine spec and list the call sites and returns it
//! matches in a program, with each site's transition label and binder.
//!
//!     cargo run --example machine_match

use minisse::frontend::{build_cfg, parse_and_check};
use minisse::machines::{match_sites, parse_machine, LOCK_SM};

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
    let spec = parse_machine(LOCK_SM).expect("machine spec");
    println!("machine {} — states {:?}, initial {}", spec.name, spec.states, spec.states[spec.initial as usize]);
    for (q, msg) in &spec.errors {
        println!("  error {}: {msg}", spec.states[*q as usize]);
    }

    let prog = parse_and_check(SRC).expect("parse");
    let cfg = build_cfg(prog);
    let sites = match_sites(&cfg, &spec);
    println!("\n{} match sites in `work`:", sites.len());
    for s in &sites {
        let binder = match &s.binder {
            Some(b) => format!("{b:?}"),
            None => "-".into(),
        };
        println!("  {}  label={}  binder={}", cfg.loc_label(s.loc), s.label, binder);
    }
}
