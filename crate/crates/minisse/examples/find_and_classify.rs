//! The whole pipeline through the driver: `find` hunts for machine errors
//! and replay-confirms each hit; `classify` takes a candidate report and
//! answers BUG, FP, TO, or ME.
//!
//!     cargo run --example find_and_classify

use minisse::driver::{emit, run_classify, run_find, CandidateQuery, Format, RunConfig};
use minisse::machines::LOCK_SM;

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
    // Hunt from `foo`: both locks leak on the n <= 0 path.
    let config = RunConfig { entry: Some("foo".into()), ..RunConfig::default() };
    let report = run_find(SRC, LOCK_SM, &config).expect("find");
    println!("== find --entry foo ==\n{}", emit(&report, Format::Text));

    // Classify two candidate reports against `copy` itself: the double
    // unlock is unreachable (FP), the leak is real (BUG).
    let config = RunConfig { entry: Some("copy".into()), ..RunConfig::default() };
    for error_state in ["DU", "RL"] {
        let query = CandidateQuery {
            machine: "lock_sm".into(),
            target: "region(copy.L)".into(),
            error_state: error_state.into(),
        };
        let report = run_classify(SRC, LOCK_SM, &query, &config).expect("classify");
        println!("== classify {error_state} ==\n{}", emit(&report, Format::Text));
    }
}
