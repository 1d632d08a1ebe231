//! Shared corpus and concrete-execution harness for the integration suite.
//!
//! The corpus is a set of small MiniC programs, each with a machine spec,
//! an entry function, and *declared input domains*: the exact argument and
//! global values the exhaustive oracles enumerate. Each program declares
//! domains that cover all of its feasible branches and boundary behavior;
//! the engine-exactness checks widen integer domains to the full 8-bit
//! range instead, so wraparound is exercised bit-for-bit.
//!
//! All oracle runs use an 8-bit cell width, 4-cell synthesized regions,
//! and a 10^4-node step budget; an input whose run exceeds the budget is
//! excluded from equivalence comparisons (the guarantees quantify over
//! terminating runs).

use std::collections::{BTreeMap, BTreeSet};

use minisse::frontend::ast::StmtId;
use minisse::frontend::cfg::{FuncId, LocationId, ObjId, RExpr, RStmt};
use minisse::frontend::interp::{
    run as interp_run, CPtr, CVal, Fault, InterpOptions, Outcome, RunInputs, RunResult, TraceEntry,
};
use minisse::frontend::{build_cfg, parse_and_check, restrict_to_entry, ProgramCfg};
use minisse::instrument::{instrument, Instrumented};
use minisse::machines::{match_sites, parse_machine, MachineSpec};
use minisse::pointsto::andersen;
use minisse::slicer::{criteria_from_instrumentation, slice, SlicedProgram};

pub const WIDTH: u32 = 8;
pub const PTR_ELEMS: u32 = 4;
pub const STEP_BUDGET: u64 = 10_000;

pub use minisse::machines::LOCK_SM;

/// A resource machine over open/close/use calls, for non-lock coverage.
pub const FILE_SM: &str = r#"machine file_sm
states C O UB DC
initial C
error UB "use before open"
error DC "double close"
trans C -> O  on call fopen($x@1)
trans O -> C  on call fclose($x@1)
trans C -> DC on call fclose($x@1)
trans C -> UB on call fuse($x@1)
trans O -> O  on call fuse($x@1)
"#;

/// The documentation's running example, transcribed once for every suite.
pub const FIG_SRC: &str = "\
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

/// 1-based line of the first source line containing `needle`.
pub fn line_of(src: &str, needle: &str) -> u32 {
    (src.lines().position(|l| l.contains(needle)).unwrap() + 1) as u32
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Dom {
    /// An integer input ranging over these values.
    Int(&'static [i64]),
    /// A pointer input: NULL, or aimed at its pointee region.
    Ptr,
}

pub struct Program {
    pub name: &'static str,
    pub source: &'static str,
    pub machine: &'static str,
    pub entry: &'static str,
    /// One domain per entry parameter.
    pub params: &'static [Dom],
    /// Enumerated scalar globals, by display name.
    pub globals: &'static [(&'static str, Dom)],
    /// The slice is loop-free and the declared inputs are its only
    /// engine-visible ones: eligible for the exactness comparison.
    pub exact: bool,
}

pub fn corpus() -> Vec<Program> {
    vec![
        Program {
            name: "pair_straight",
            source: "int L;\nextern void lock(int *l);\nextern void unlock(int *l);\nvoid go() {\n    lock(&L);\n    unlock(&L);\n    return;\n}\n",
            machine: LOCK_SM,
            entry: "go",
            params: &[],
            globals: &[],
            exact: true,
        },
        Program {
            name: "lock_lock",
            source: "int L;\nextern void lock(int *l);\nvoid go(int a) {\n    if (a > 0) {\n        lock(&L);\n    }\n    lock(&L);\n    return;\n}\n",
            machine: LOCK_SM,
            entry: "go",
            params: &[Dom::Int(&[-2, 0, 1, 3])],
            globals: &[],
            exact: true,
        },
        Program {
            name: "unlock_first",
            source: "int L;\nextern void unlock(int *l);\nvoid go() {\n    unlock(&L);\n    return;\n}\n",
            machine: LOCK_SM,
            entry: "go",
            params: &[],
            globals: &[],
            exact: true,
        },
        Program {
            name: "leak_unless_positive",
            source: "int L;\nextern void lock(int *l);\nextern void unlock(int *l);\nvoid go(int n) {\n    lock(&L);\n    if (n > 0) {\n        unlock(&L);\n    }\n    return;\n}\n",
            machine: LOCK_SM,
            entry: "go",
            params: &[Dom::Int(&[-3, -1, 0, 1, 2])],
            globals: &[],
            exact: true,
        },
        Program {
            name: "counted_release",
            source: "int L;\nextern void lock(int *l);\nextern void unlock(int *l);\nvoid go(int n) {\n    int len;\n    len = 0;\n    while (len < n) {\n        len = len + 1;\n    }\n    if (len > 0) {\n        lock(&L);\n    }\n    if (len > 1) {\n        unlock(&L);\n    }\n    return;\n}\n",
            machine: LOCK_SM,
            entry: "go",
            params: &[Dom::Int(&[-1, 0, 1, 2, 3])],
            globals: &[],
            exact: false, // the counting loop feeds the guards and survives slicing
        },
        Program {
            name: "double_copy",
            source: FIG_SRC,
            machine: LOCK_SM,
            entry: "foo",
            params: &[Dom::Ptr, Dom::Int(&[-2, -1, 0, 1, 3])],
            globals: &[("buf1", Dom::Ptr), ("buf2", Dom::Ptr)],
            exact: false, // four inputs
        },
        Program {
            name: "nested_pair",
            source: "int A;\nint B;\nextern void lock(int *l);\nextern void unlock(int *l);\nvoid go() {\n    lock(&A);\n    lock(&B);\n    unlock(&B);\n    unlock(&A);\n    return;\n}\n",
            machine: LOCK_SM,
            entry: "go",
            params: &[],
            globals: &[],
            exact: true,
        },
        Program {
            name: "helper_dispatch",
            source: "int A;\nint B;\nextern void lock(int *l);\nextern void unlock(int *l);\nvoid help(int *l) {\n    lock(l);\n}\nvoid go(int c) {\n    if (c > 0) {\n        help(&A);\n    } else {\n        help(&B);\n    }\n    unlock(&A);\n    return;\n}\n",
            machine: LOCK_SM,
            entry: "go",
            params: &[Dom::Int(&[-1, 0, 1])],
            globals: &[],
            exact: true,
        },
        Program {
            name: "summed_noise",
            source: "int L;\nint g[4];\nextern void lock(int *l);\nextern void unlock(int *l);\nvoid go(int n) {\n    int i;\n    int s;\n    s = 0;\n    i = 0;\n    while (i < 4) {\n        s = s + g[i];\n        i++;\n    }\n    lock(&L);\n    if (n == 7) {\n        unlock(&L);\n    }\n    return;\n}\n",
            machine: LOCK_SM,
            entry: "go",
            params: &[Dom::Int(&[0, 7, 8])],
            globals: &[],
            exact: true, // the summing loop is criterion-irrelevant and sliced away
        },
        Program {
            name: "guard_pair",
            source: "int L;\nextern void lock(int *l);\nextern void unlock(int *l);\nvoid go(int a, int b) {\n    if (a > 0 && b > 0) {\n        lock(&L);\n    }\n    if (a > 0) {\n        if (b > 0) {\n            unlock(&L);\n        }\n    }\n    return;\n}\n",
            machine: LOCK_SM,
            entry: "go",
            params: &[Dom::Int(&[-1, 0, 1, 2]), Dom::Int(&[-1, 0, 2])],
            globals: &[],
            exact: true,
        },
        Program {
            name: "relock_loop",
            source: "int L;\nextern void lock(int *l);\nextern void unlock(int *l);\nvoid go() {\n    int i;\n    i = 0;\n    while (i < 3) {\n        lock(&L);\n        unlock(&L);\n        i++;\n    }\n    return;\n}\n",
            machine: LOCK_SM,
            entry: "go",
            params: &[],
            globals: &[],
            exact: false, // the fires live inside the loop, so the loop survives
        },
        Program {
            name: "checked_write",
            source: "int L;\nextern void lock(int *l);\nextern void unlock(int *l);\nvoid go(int *p) {\n    lock(&L);\n    if (p != NULL) {\n        *p = 1;\n    }\n    unlock(&L);\n    return;\n}\n",
            machine: LOCK_SM,
            entry: "go",
            params: &[Dom::Ptr],
            globals: &[],
            exact: true,
        },
        Program {
            name: "use_before_open",
            source: "int F;\nextern void fopen(int *f);\nextern void fclose(int *f);\nextern void fuse(int *f);\nvoid go(int a) {\n    if (a == 1) {\n        fopen(&F);\n    }\n    fuse(&F);\n    return;\n}\n",
            machine: FILE_SM,
            entry: "go",
            params: &[Dom::Int(&[0, 1, 2])],
            globals: &[],
            exact: true,
        },
        Program {
            name: "close_twice",
            source: "int F;\nextern void fopen(int *f);\nextern void fclose(int *f);\nvoid go(int a) {\n    fopen(&F);\n    fclose(&F);\n    if (a > 2) {\n        fclose(&F);\n    }\n    return;\n}\n",
            machine: FILE_SM,
            entry: "go",
            params: &[Dom::Int(&[0, 2, 3, 4])],
            globals: &[],
            exact: true,
        },
        Program {
            name: "mode_gate",
            source: "int L;\nint mode;\nextern void lock(int *l);\nextern void unlock(int *l);\nvoid go() {\n    if (mode > 0) {\n        lock(&L);\n    }\n    if (mode > 0) {\n        unlock(&L);\n    }\n    return;\n}\n",
            machine: LOCK_SM,
            entry: "go",
            params: &[],
            globals: &[("mode", Dom::Int(&[-1, 0, 1, 2]))],
            exact: true,
        },
        Program {
            name: "mode_leak",
            source: "int L;\nint mode;\nextern void lock(int *l);\nextern void unlock(int *l);\nvoid go() {\n    if (mode > 0) {\n        lock(&L);\n    }\n    if (mode > 1) {\n        unlock(&L);\n    }\n    return;\n}\n",
            machine: LOCK_SM,
            entry: "go",
            params: &[],
            globals: &[("mode", Dom::Int(&[-1, 0, 1, 2]))],
            exact: true,
        },
        Program {
            name: "wrapping_guard",
            source: "int L;\nextern void lock(int *l);\nextern void unlock(int *l);\nvoid go(int n) {\n    lock(&L);\n    if (n + 100 > 0) {\n        unlock(&L);\n    }\n    return;\n}\n",
            machine: LOCK_SM,
            entry: "go",
            params: &[Dom::Int(&[-128, -100, -99, 0, 27, 28, 127])],
            globals: &[],
            exact: true,
        },
        Program {
            name: "scaled_key",
            source: "int L;\nextern void lock(int *l);\nextern void unlock(int *l);\nvoid go(int n) {\n    lock(&L);\n    if (n * 51 == 3) {\n        unlock(&L);\n    }\n    return;\n}\n",
            machine: LOCK_SM,
            entry: "go",
            params: &[Dom::Int(&[-15, 0, 1])],
            globals: &[],
            exact: true,
        },
        Program {
            name: "indexed_release",
            source: "int L;\nint g[2];\nextern void lock(int *l);\nextern void unlock(int *l);\nvoid go(int n) {\n    g[0] = 0;\n    g[1] = 7;\n    lock(&L);\n    if (n >= 0) {\n        if (n < 2) {\n            if (g[n] > 0) {\n                unlock(&L);\n            }\n        }\n    }\n    return;\n}\n",
            machine: LOCK_SM,
            entry: "go",
            params: &[Dom::Int(&[-1, 0, 1, 2])],
            globals: &[],
            exact: true,
        },
        Program {
            name: "deep_chain",
            source: "int L;\nextern void lock(int *l);\nvoid c3() {\n    lock(&L);\n}\nvoid b2() {\n    c3();\n}\nvoid go(int n) {\n    if (n > 0) {\n        b2();\n    }\n    return;\n}\n",
            machine: LOCK_SM,
            entry: "go",
            params: &[Dom::Int(&[-1, 0, 1])],
            globals: &[],
            exact: true,
        },
        Program {
            name: "branch_returns",
            source: "int L;\nextern void lock(int *l);\nextern void unlock(int *l);\nvoid go(int a, int b) {\n    if (a > 0) {\n        lock(&L);\n    }\n    if (b > 0) {\n        return;\n    }\n    if (a > 0) {\n        unlock(&L);\n    }\n    return;\n}\n",
            machine: LOCK_SM,
            entry: "go",
            params: &[Dom::Int(&[-1, 0, 1]), Dom::Int(&[-1, 0, 1])],
            globals: &[],
            exact: true,
        },
        Program {
            name: "split_targets",
            source: "int L1;\nint L2;\nextern void lock(int *l);\nvoid go(int c) {\n    if (c > 0) {\n        lock(&L1);\n    } else {\n        lock(&L2);\n    }\n    return;\n}\n",
            machine: LOCK_SM,
            entry: "go",
            params: &[Dom::Int(&[-1, 0, 1])],
            globals: &[],
            exact: true,
        },
        Program {
            name: "countdown_drain",
            source: "int L;\nextern void lock(int *l);\nextern void unlock(int *l);\nvoid go(int n) {\n    while (n != 0) {\n        n = n - 1;\n    }\n    lock(&L);\n    unlock(&L);\n    return;\n}\n",
            machine: LOCK_SM,
            entry: "go",
            params: &[Dom::Int(&[-128, -1, 0, 1, 17])],
            globals: &[],
            exact: true, // the countdown is criterion-irrelevant and sliced away
        },
        Program {
            name: "param_lock",
            source: "extern void lock(int *l);\nextern void unlock(int *l);\nvoid go(int *p) {\n    lock(p);\n    unlock(p);\n    return;\n}\n",
            machine: LOCK_SM,
            entry: "go",
            params: &[Dom::Ptr],
            globals: &[],
            exact: true,
        },
        Program {
            name: "gated_loop_use",
            source: "int F;\nextern void fopen(int *f);\nextern void fuse(int *f);\nvoid go(int k) {\n    int i;\n    if (k > 0) {\n        fopen(&F);\n    }\n    i = 0;\n    while (i < 2) {\n        fuse(&F);\n        i++;\n    }\n    return;\n}\n",
            machine: FILE_SM,
            entry: "go",
            params: &[Dom::Int(&[-1, 0, 1])],
            globals: &[],
            exact: false, // the uses live inside the loop, so the loop survives
        },
    ]
}

/// Everything the oracles need, built once per program.
pub struct Built {
    pub plain: ProgramCfg,
    pub spec: MachineSpec,
    pub ip: Instrumented,
    pub sliced: SlicedProgram,
    pub entry_plain: FuncId,
    pub entry_ip: FuncId,
    pub entry_sliced: FuncId,
}

pub fn build(p: &Program) -> Built {
    let prog = parse_and_check(p.source).unwrap_or_else(|e| panic!("{}: {e}", p.name));
    let prog = restrict_to_entry(&prog, p.entry)
        .unwrap_or_else(|| panic!("{}: entry `{}` missing", p.name, p.entry));
    let plain = build_cfg(prog);
    let spec = parse_machine(p.machine).unwrap_or_else(|e| panic!("{}: {e}", p.name));
    let sites = match_sites(&plain, &spec);
    let pts = andersen(&plain);
    let ip = instrument(&plain, &spec, &sites, &pts, None)
        .unwrap_or_else(|e| panic!("{}: {e}", p.name));
    let criteria = criteria_from_instrumentation(&ip);
    let pts_i = andersen(&ip.cfg);
    let sliced = slice(&ip, &criteria, &pts_i);
    let entry_plain = plain.func_id(p.entry).unwrap();
    let entry_ip = ip.cfg.func_id(p.entry).unwrap();
    let entry_sliced = sliced
        .instr
        .cfg
        .func_id(p.entry)
        .unwrap_or_else(|| panic!("{}: entry sliced away", p.name));
    Built { plain, spec, ip, sliced, entry_plain, entry_ip, entry_sliced }
}

/// One abstract input choice; materialized per CFG because object ids
/// differ between builds of the same program.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Choice {
    IntArg(usize, i64),
    /// `true` aims the argument at its pointee region's middle cell.
    PtrArg(usize, bool),
    IntGlobal(&'static str, i64),
    PtrGlobal(&'static str, bool),
}

fn expand(p: &Program, widen: bool) -> Vec<Vec<Choice>> {
    let full: Vec<i64> = (-128..=127).collect();
    let axis_vals = |d: &Dom| -> Vec<Choice> {
        match d {
            Dom::Int(vals) => {
                let vs: &[i64] = if widen { &full } else { vals };
                vs.iter().map(|&v| Choice::IntArg(0, v)).collect()
            }
            Dom::Ptr => vec![Choice::PtrArg(0, false), Choice::PtrArg(0, true)],
        }
    };
    let mut axes: Vec<Vec<Choice>> = Vec::new();
    for (i, d) in p.params.iter().enumerate() {
        let vs = axis_vals(d)
            .into_iter()
            .map(|c| match c {
                Choice::IntArg(_, v) => Choice::IntArg(i, v),
                Choice::PtrArg(_, b) => Choice::PtrArg(i, b),
                other => other,
            })
            .collect();
        axes.push(vs);
    }
    for (name, d) in p.globals.iter() {
        let vs = axis_vals(d)
            .into_iter()
            .map(|c| match c {
                Choice::IntArg(_, v) => Choice::IntGlobal(name, v),
                Choice::PtrArg(_, b) => Choice::PtrGlobal(name, b),
                other => other,
            })
            .collect();
        axes.push(vs);
    }
    // Cartesian product.
    let mut out: Vec<Vec<Choice>> = vec![Vec::new()];
    for axis in axes {
        let mut next = Vec::with_capacity(out.len() * axis.len());
        for prefix in &out {
            for c in &axis {
                let mut t = prefix.clone();
                t.push(c.clone());
                next.push(t);
            }
        }
        out = next;
    }
    out
}

/// Every declared input tuple.
pub fn tuples(p: &Program) -> Vec<Vec<Choice>> {
    expand(p, false)
}

/// Declared tuples with integer domains widened to the whole 8-bit range.
pub fn tuples_full_width(p: &Program) -> Vec<Vec<Choice>> {
    expand(p, true)
}

/// A non-NULL value for pointer variable `var`: its pointee region's middle
/// cell when one exists, else the variable's own address (such a pointer is
/// only ever null-checked in builds that lack the region).
fn nonnull_for(cfg: &ProgramCfg, var: ObjId) -> CVal {
    match cfg.objects.region_for(var) {
        Some(r) => {
            let len = cfg.objects.fixed_elems(r).unwrap_or(PTR_ELEMS) as i64;
            CVal::addr(r, len / 2)
        }
        None => CVal::addr(var, 0),
    }
}

pub fn materialize(choices: &[Choice], cfg: &ProgramCfg, entry: FuncId) -> RunInputs {
    let f = cfg.func(entry);
    let mut inputs = RunInputs::default();
    inputs.args = f
        .params
        .iter()
        .map(|&p| if cfg.objects.info(p).elem_ty.is_ptr() { CVal::NULL } else { CVal::Int(0) })
        .collect();
    for c in choices {
        match c {
            Choice::IntArg(i, v) => inputs.args[*i] = CVal::Int(*v),
            Choice::PtrArg(i, aimed) => {
                inputs.args[*i] =
                    if *aimed { nonnull_for(cfg, f.params[*i]) } else { CVal::NULL };
            }
            Choice::IntGlobal(name, v) => {
                let g = cfg.objects.lookup_display(name).unwrap_or_else(|| panic!("global {name}"));
                inputs.globals.insert(g, CVal::Int(*v));
            }
            Choice::PtrGlobal(name, aimed) => {
                let g = cfg.objects.lookup_display(name).unwrap_or_else(|| panic!("global {name}"));
                let v = if *aimed { nonnull_for(cfg, g) } else { CVal::NULL };
                inputs.globals.insert(g, v);
            }
        }
    }
    inputs
}

pub fn run_on(cfg: &ProgramCfg, entry: FuncId, inputs: &RunInputs, watch: Vec<ObjId>) -> RunResult {
    let opts = InterpOptions {
        int_width: WIDTH,
        ptr_elems: PTR_ELEMS,
        step_budget: STEP_BUDGET,
        watch,
        record_trace: true,
    };
    interp_run(cfg, entry, inputs, &opts)
}

/// A CFG-independent rendering of a concrete value, comparable across
/// builds of the same program.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Obs {
    Int(i64),
    Null,
    Addr(String, i64),
}

pub fn obs(cfg: &ProgramCfg, v: CVal) -> Obs {
    match v {
        CVal::Int(i) => Obs::Int(i),
        CVal::Ptr(CPtr::Null) => Obs::Null,
        CVal::Ptr(CPtr::Addr { obj, off }) => Obs::Addr(cfg.objects.display(obj), off),
    }
}

/// Fire sites whose binder is a pointer variable and can therefore be NULL
/// at runtime (an `&x` binder always resolves), with the variable to watch.
pub fn missable_fires(cfg: &ProgramCfg) -> Vec<(LocationId, ObjId)> {
    let mut out = Vec::new();
    for f in &cfg.funcs {
        for (i, n) in f.nodes.iter().enumerate() {
            if let RStmt::Fire { binder: Some(b), .. } = &n.stmt {
                match b {
                    RExpr::Load(o) => out.push((LocationId::new(f.id, i as u32), *o)),
                    RExpr::AddrOfObj(_) => {}
                    other => panic!("fire binder too complex to watch: {other:?}"),
                }
            }
        }
    }
    out
}

/// True when some executed fire dispatched on NULL: `miss_at` maps a fire
/// location to the index of its binder variable in the run's watch list.
pub fn dispatch_missed(trace: &[TraceEntry], miss_at: &BTreeMap<LocationId, usize>) -> bool {
    trace.iter().any(|e| {
        miss_at.get(&e.loc).is_some_and(|&k| matches!(e.vals[k], CVal::Ptr(CPtr::Null)))
    })
}

/// (machine, target display, error state) of an assertion fault, if any.
pub fn fault_key(cfg: &ProgramCfg, outcome: &Outcome) -> Option<(String, String, String)> {
    match outcome {
        Outcome::Fault(Fault::AssertionFailure { machine, target, error_state, .. }) => Some((
            machine.clone(),
            cfg.objects.display(*target),
            error_state.clone(),
        )),
        _ => None,
    }
}

/// Positional node map between two builds of the same program: statements
/// keep their ids through instrumentation and slicing, and a statement's
/// lowering is identical in every build that keeps it, so nodes pair up by
/// (function name, statement id, occurrence index).
pub fn node_map(from: &ProgramCfg, to: &ProgramCfg) -> BTreeMap<LocationId, LocationId> {
    let mut out = BTreeMap::new();
    for ff in &from.funcs {
        let Some(tf_id) = to.func_id(&ff.name) else { continue };
        let tf = to.func(tf_id);
        let mut to_occ: BTreeMap<StmtId, Vec<u32>> = BTreeMap::new();
        for (i, n) in tf.nodes.iter().enumerate() {
            if let Some(s) = n.stmt_id {
                to_occ.entry(s).or_default().push(i as u32);
            }
        }
        let mut seen: BTreeMap<StmtId, usize> = BTreeMap::new();
        for (i, n) in ff.nodes.iter().enumerate() {
            let Some(s) = n.stmt_id else { continue };
            let k = seen.entry(s).or_default();
            if let Some(&t) = to_occ.get(&s).and_then(|list| list.get(*k)) {
                out.insert(LocationId::new(ff.id, i as u32), LocationId::new(tf_id, t));
            }
            *k += 1;
        }
    }
    out
}

/// Resolve objects from one build in another by display name.
pub fn resolve_objs(from: &ProgramCfg, objs: &[ObjId], to: &ProgramCfg) -> Vec<ObjId> {
    objs.iter()
        .map(|&o| {
            let name = from.objects.display(o);
            to.objects
                .lookup_display(&name)
                .unwrap_or_else(|| panic!("object `{name}` missing in the other build"))
        })
        .collect()
}

/// The watched-value sequence at `locs`, canonicalized.
pub fn seq_at(cfg: &ProgramCfg, trace: &[TraceEntry], locs: &BTreeSet<LocationId>) -> Vec<Vec<Obs>> {
    trace
        .iter()
        .filter(|e| locs.contains(&e.loc))
        .map(|e| e.vals.iter().map(|&v| obs(cfg, v)).collect())
        .collect()
}

/// One sample per executed source statement, restricted to statement ids
/// in `allowed`; the sample is the watched values on arrival at the
/// statement's first node.
pub fn stmt_samples(
    cfg: &ProgramCfg,
    trace: &[TraceEntry],
    allowed: &BTreeSet<StmtId>,
) -> Vec<(StmtId, Vec<Obs>)> {
    let mut out = Vec::new();
    let mut last: Option<(FuncId, StmtId)> = None;
    for e in trace {
        let n = cfg.node(e.loc);
        let Some(s) = n.stmt_id else {
            last = None;
            continue;
        };
        if !allowed.contains(&s) {
            last = None;
            continue;
        }
        let key = (e.loc.func, s);
        if last != Some(key) {
            out.push((s, e.vals.iter().map(|&v| obs(cfg, v)).collect()));
            last = Some(key);
        }
    }
    out
}

/// All statement ids present in a build.
pub fn stmt_ids(cfg: &ProgramCfg) -> BTreeSet<StmtId> {
    cfg.funcs
        .iter()
        .flat_map(|f| f.nodes.iter().filter_map(|n| n.stmt_id))
        .collect()
}

/// True when no function of the build contains a control-flow cycle.
pub fn is_acyclic(cfg: &ProgramCfg) -> bool {
    for f in &cfg.funcs {
        // Iterative DFS with an on-stack mark.
        let n = f.nodes.len();
        if n == 0 {
            continue;
        }
        let mut state = vec![0u8; n]; // 0 unvisited, 1 on stack, 2 done
        let mut stack: Vec<(u32, usize)> = vec![(0, 0)];
        state[0] = 1;
        while let Some(&mut (node, ref mut next)) = stack.last_mut() {
            let succs = &f.nodes[node as usize].succs;
            if *next < succs.len() {
                let s = succs[*next];
                *next += 1;
                match state[s as usize] {
                    0 => {
                        state[s as usize] = 1;
                        stack.push((s, 0));
                    }
                    1 => return false,
                    _ => {}
                }
            } else {
                state[node as usize] = 2;
                stack.pop();
            }
        }
    }
    true
}
