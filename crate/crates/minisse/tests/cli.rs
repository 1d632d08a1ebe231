//! End-to-end checks of the `minisse` binary: subcommands, output formats,
//! and the exit-code contract (0 clean, 1 bug, 2 usage/pipeline error,
//! 3 timeout or memory error without a bug).

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use minisse::machines::LOCK_SM;

const COPY_SRC: &str = "\
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

/// A program whose slice keeps a loop: the lock is released only after a
/// counted drain, so the counter feeds the criterion.
const CYCLIC_SRC: &str = "\
int L;
extern void lock(int *l);
extern void unlock(int *l);
void spin(int n) {
    lock(&L);
    while (n != 0) {
        n = n - 1;
        if (n == 5) {
            unlock(&L);
        }
    }
    return;
}
";

struct Fixture {
    #[allow(dead_code)]
    dir: tempfile::TempDir,
    source: PathBuf,
    machine: PathBuf,
}

fn fixture(src: &str) -> Fixture {
    let dir = tempfile::tempdir().unwrap();
    let source = dir.path().join("prog.mc");
    let machine = dir.path().join("lock.sm");
    fs::write(&source, src).unwrap();
    fs::write(&machine, LOCK_SM).unwrap();
    Fixture { dir, source, machine }
}

fn minisse(args: &[&str], fx: &Fixture) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_minisse"));
    cmd.args(args).arg("--source").arg(&fx.source);
    if args[0] != "pointsto" {
        cmd.arg("--machine").arg(&fx.machine);
    }
    cmd.output().expect("spawn minisse")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

#[test]
fn find_reports_bugs_in_text_and_exits_one() {
    let fx = fixture(COPY_SRC);
    let out = minisse(&["find", "--entry", "foo"], &fx);
    let text = stdout(&out);
    assert_eq!(out.status.code(), Some(1), "stderr: {}", stderr(&out));
    assert!(text.contains("VERDICT"), "missing header: {text}");
    assert!(text.contains("BUG"), "missing verdicts: {text}");
    assert!(text.contains("RL"), "missing error state: {text}");
    assert!(text.lines().last().unwrap_or("").starts_with("# find"), "missing footer: {text}");
}

#[test]
fn find_emits_one_json_object_per_verdict() {
    let fx = fixture(COPY_SRC);
    let out = minisse(&["find", "--entry", "foo", "--format", "json"], &fx);
    assert_eq!(out.status.code(), Some(1));
    let lines: Vec<serde_json::Value> = stdout(&out)
        .lines()
        .map(|l| serde_json::from_str(l).expect("each line parses as JSON"))
        .collect();
    assert_eq!(lines.len(), 2, "one verdict per leaked lock");
    for v in &lines {
        assert_eq!(v["verdict"], "BUG");
        assert_eq!(v["error_state"], "RL");
        assert!(v["model"].is_object());
        assert!(v["trace"].is_array());
        assert!(v["slice_ratio"].is_number());
        assert!(v["timings"]["total_ms"].is_number());
    }
}

#[test]
fn a_clean_program_exits_zero() {
    let fx = fixture("int g;\nvoid f(int x) {\n    g = x;\n    return;\n}\n");
    let out = minisse(&["find", "--entry", "f"], &fx);
    assert_eq!(out.status.code(), Some(0), "stderr: {}", stderr(&out));
    assert!(stdout(&out).contains("CLEAN-WITHIN-BOUNDS"), "got: {}", stdout(&out));

    let out = minisse(&["find", "--entry", "f", "--format", "json"], &fx);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(stdout(&out), "", "clean JSON output is empty");
}

#[test]
fn metal_annotates_lines_and_its_reports_classify_cleanly() {
    let fx = fixture(COPY_SRC);
    let out = minisse(&["metal", "--entry", "copy"], &fx);
    assert_eq!(out.status.code(), Some(0), "stderr: {}", stderr(&out));
    let text = stdout(&out);
    assert!(text.contains("{U,L}"), "missing state annotations: {text}");
    let reports: Vec<&str> = text.lines().filter(|l| l.starts_with('{')).collect();
    assert_eq!(reports.len(), 2, "candidate reports: {text}");

    // Feed the reports straight back into classify.
    let report_path = fx.dir.path().join("reports.json");
    fs::write(&report_path, reports.join("\n")).unwrap();
    let out = minisse(
        &["classify", "--entry", "copy", "--report", report_path.to_str().unwrap()],
        &fx,
    );
    assert_eq!(out.status.code(), Some(1), "stderr: {}", stderr(&out));
    let text = stdout(&out);
    assert!(text.contains("FP"), "double unlock must be refuted: {text}");
    assert!(text.contains("BUG"), "leaked lock must be confirmed: {text}");
}

#[test]
fn slice_drops_the_copy_loop() {
    let fx = fixture(COPY_SRC);
    let out = minisse(&["slice", "--entry", "foo"], &fx);
    assert_eq!(out.status.code(), Some(0), "stderr: {}", stderr(&out));
    let text = stdout(&out);
    assert!(!text.contains("while"), "loop survived: {text}");
    assert!(text.contains("sliced away"), "missing ratio note: {text}");
}

#[test]
fn pointsto_renders_the_graph() {
    let fx = fixture(COPY_SRC);
    let out = minisse(&["pointsto"], &fx);
    assert_eq!(out.status.code(), Some(0), "stderr: {}", stderr(&out));
    let text = stdout(&out);
    assert!(text.contains("->"), "missing edges: {text}");
    assert!(text.contains("copy.L"), "missing the lock pointer: {text}");
}

#[test]
fn instrument_emits_fires_and_honors_target_selection() {
    let fx = fixture(COPY_SRC);
    let out = minisse(&["instrument"], &fx);
    assert_eq!(out.status.code(), Some(0), "stderr: {}", stderr(&out));
    assert!(stdout(&out).contains("__fire"), "got: {}", stdout(&out));

    let out = minisse(&["instrument", "--target", "L1"], &fx);
    assert_eq!(out.status.code(), Some(0), "stderr: {}", stderr(&out));
    let text = stdout(&out);
    assert!(text.contains("__fire"), "got: {text}");

    let out = minisse(&["instrument", "--target", "nosuch"], &fx);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("minisse:"), "got: {}", stderr(&out));
}

#[test]
fn dump_tree_writes_dot_to_stderr() {
    let fx = fixture(COPY_SRC);
    let out = minisse(&["find", "--entry", "foo", "--dump-tree"], &fx);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("digraph"), "stderr: {}", stderr(&out));
}

#[test]
fn a_loopy_slice_times_out_and_exits_three() {
    let fx = fixture(CYCLIC_SRC);
    let report_path = fx.dir.path().join("report.json");
    fs::write(
        &report_path,
        r#"{"machine":"lock_sm","target_name":"L","error_state":"RL"}"#,
    )
    .unwrap();
    let out = minisse(
        &[
            "classify",
            "--entry",
            "spin",
            "--report",
            report_path.to_str().unwrap(),
            "--timeout",
            "1",
        ],
        &fx,
    );
    assert_eq!(out.status.code(), Some(3), "stderr: {}", stderr(&out));
    assert!(stdout(&out).contains("TO"), "got: {}", stdout(&out));
}

#[test]
fn unknown_entries_and_parse_errors_exit_two() {
    let fx = fixture(COPY_SRC);
    let out = minisse(&["find", "--entry", "nope"], &fx);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("entry"), "stderr: {}", stderr(&out));

    let broken = fixture("int x = ;");
    let out = minisse(&["find", "--entry", "f"], &broken);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("minisse:"), "stderr: {}", stderr(&out));
}

#[test]
fn loop_bound_is_adjustable_from_the_command_line() {
    // The third loop iteration locks twice; bound 2 must miss it, bound 3
    // must find it.
    let src = "\
int L;
extern void lock(int *l);
void f(int n) {
    int i;
    i = 0;
    while (i < n) {
        if (i == 2) {
            lock(&L);
            lock(&L);
        }
        i = i + 1;
    }
}
";
    let fx = fixture(src);
    let out = minisse(&["find", "--entry", "f", "--loop-bound", "2"], &fx);
    assert_eq!(out.status.code(), Some(0), "stderr: {}", stderr(&out));
    assert!(stdout(&out).contains("CLEAN-WITHIN-BOUNDS"));

    let out = minisse(&["find", "--entry", "f", "--loop-bound", "3"], &fx);
    assert_eq!(out.status.code(), Some(1), "stderr: {}", stderr(&out));
    assert!(stdout(&out).contains("DL"), "got: {}", stdout(&out));
}

/// The width flag accepts only the three supported widths.
#[test]
fn int_width_is_validated() {
    let fx = fixture(COPY_SRC);
    let out = minisse(&["find", "--entry", "foo", "--int-width", "7"], &fx);
    assert_eq!(out.status.code(), Some(2));

    let out = minisse(&["find", "--entry", "foo", "--int-width", "16"], &fx);
    assert_eq!(out.status.code(), Some(1), "stderr: {}", stderr(&out));
}

fn path_exists(p: &Path) -> bool {
    p.exists()
}

#[test]
fn the_binary_is_where_cargo_says_it_is() {
    assert!(path_exists(Path::new(env!("CARGO_BIN_EXE_minisse"))));
}
