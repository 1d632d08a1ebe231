//! Slice an instrumented program down to the statements that can affect
//! its machine-state checks: the copy loop disappears, the locking
//! skeleton stays.
//!
//!     cargo run --example slice_reduction

use minisse::frontend::pretty::print_program;
use minisse::frontend::{build_cfg, parse_and_check, restrict_to_entry};
use minisse::instrument::instrument;
use minisse::machines::{match_sites, parse_machine, LOCK_SM};
use minisse::pointsto::andersen;
use minisse::slicer::{criteria_from_instrumentation, slice};

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
    let cfg = build_cfg(restrict_to_entry(&prog, "foo").unwrap());
    let spec = parse_machine(LOCK_SM).expect("machine spec");
    let sites = match_sites(&cfg, &spec);
    let pts = andersen(&cfg);
    let ip = instrument(&cfg, &spec, &sites, &pts, None).expect("instrument");

    let criteria = criteria_from_instrumentation(&ip);
    let pts_i = andersen(&ip.cfg);
    let sliced = slice(&ip, &criteria, &pts_i);

    println!("{}", print_program(&sliced.instr.cfg.ast));
    println!(
        "// sliced away {:.1}% ({} of {} statements kept)",
        sliced.ratio() * 100.0,
        sliced.kept_stmts,
        sliced.total_stmts
    );
}
