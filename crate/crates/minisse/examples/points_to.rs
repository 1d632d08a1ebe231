//! Inclusion-based points-to analysis: build the constraint graph for a
//! program that passes pointers around and print the solved map.
//!
//!     cargo run --example points_to

use minisse::frontend::{build_cfg, parse_and_check};
use minisse::pointsto::andersen;

const SRC: &str = "\
int a, b;
int *take(int *p) {
    return p;
}
void pick(int c) {
    int *q;
    int *r;
    if (c > 0) {
        q = &a;
    } else {
        q = &b;
    }
    r = take(q);
    *r = 1;
}
";

fn main() {
    let prog = parse_and_check(SRC).expect("parse");
    let cfg = build_cfg(prog);
    let pts = andersen(&cfg);
    // `q` may point at either global, and the assignment flows through
    // `take`, so `r` inherits both.
    print!("{}", pts.render(&cfg));
}
