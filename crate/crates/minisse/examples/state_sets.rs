//! Flow the machine's states over a program and annotate every source line
//! with the set of states the tracked lock can be in after it, then list
//! the candidate error reports the sets imply.
//!
//!     cargo run --example state_sets

use minisse::frontend::{build_cfg, parse_and_check, restrict_to_entry};
use minisse::machines::{match_sites, parse_machine, LOCK_SM};
use minisse::metal::{metal_fixpoint, metal_reports, render_annotated};
use minisse::pointsto::andersen;

const SRC: &str = "\
char *buf1, *buf2;
int L1, L2;
extern void lock(int *l);
extern void unlock(int *l);
char *copy(char *dst, char *src, int n, int *L) {
    int i, len;
    len = 0;
    if (src != NULL && dst != NULL) {
        len = n;
        lock(L);
    }
    i = 0;
    while (i < len) {
        dst[i] = src[i];
        i++;
    }
    if (len > 0) {
        unlock(L);
    }
    return dst;
}
void foo(char *src, int n) {
    copy(src, buf1, n, &L1);
    copy(src, buf2, n, &L2);
}
";

fn main() {
    let prog = parse_and_check(SRC).expect("parse");
    let cfg = build_cfg(restrict_to_entry(&prog, "copy").unwrap());
    let spec = parse_machine(LOCK_SM).expect("machine spec");
    let sites = match_sites(&cfg, &spec);
    let pts = andersen(&cfg);
    let entry = cfg.func_id("copy").unwrap();
    let ssm = metal_fixpoint(&cfg, &spec, &sites, &pts, None, entry);

    let ann = ssm.line_annotations(&cfg, &spec);
    println!("{}", render_annotated(SRC, &ann));

    for r in metal_reports(&cfg, &ssm, &spec) {
        println!("candidate: {} may reach {} at {} — {}", r.target_name, r.error_state, cfg.loc_label(r.witness), r.message);
    }
}
