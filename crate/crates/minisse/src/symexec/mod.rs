//! Forward symbolic execution of instrumented (and sliced) programs.
//!
//! The engine mirrors the concrete interpreter node for node — same
//! evaluation order, same bounds discipline, same machine stepping — but
//! runs on symbolic values and explores every feasible branch outcome
//! instead of the one a concrete input picks. Program inputs (entry
//! arguments, uninitialized globals, array and region cells) become fresh
//! symbols; pointer inputs get a nullability flag and otherwise aim at the
//! middle cell of their synthesized region, so both the NULL and the
//! aliased world are explored from a single run.
//!
//! Forking happens at statement granularity: a branch whose condition was
//! lowered to a chain of comparison nodes forks once, on the conjunction /
//! disjunction the chain denotes, as long as every comparison is free of
//! memory accesses (those must stay short-circuited and fork per node).
//! Each fork arm is checked for satisfiability before it is explored, so
//! infeasible arms are pruned eagerly and every recorded path has a
//! satisfiable condition. A path terminates when the entry function
//! returns, a typestate machine steps into an error state (a bug, reported
//! with a satisfying model), a memory access fails (likewise with a
//! model), or a budget gives out. Loops are bounded by a per-frame cap on
//! body entries; within the bound exploration is exhaustive, and the
//! outcome says honestly whether anything was cut off.

pub mod expr;
pub mod solver;

use std::collections::{BTreeMap, BTreeSet};
use std::rc::Rc;
use std::time::{Duration, Instant};

use crate::frontend::ast::{BinOp, CmpOp};
use crate::frontend::cfg::{
    FireRuntime, FuncCfg, FuncId, LocationId, ObjId, ObjKind, ProgramCfg, RCond, RExpr, RPlace,
    RStmt, ENTRY,
};
use crate::frontend::interp::{run, CVal, Fault, InterpOptions, Outcome, RunInputs};
use crate::instrument::Instrumented;

pub use expr::{Model, SymBool, SymExpr, SymId, SymPlace, SymPtr, SymTable, SymVal, Width};
pub use solver::{solve, SolveResult};

/// Default work budget per solver query (narrowing steps plus assignments).
pub const DEFAULT_SOLVER_BUDGET: u64 = 200_000;

/// Exploration budgets. Within the loop bound the engine is exhaustive;
/// every other limit only cuts exploration short and is reported as such.
#[derive(Debug, Clone)]
pub struct Limits {
    /// Maximum body entries per loop per activation; `None` is unbounded
    /// (used for classification runs under a wall-clock timeout). Must be
    /// at least 1 when set.
    pub loop_bound: Option<u32>,
    /// Work units per solver query.
    pub solver_budget: u64,
    /// Executed CFG nodes per path.
    pub step_budget: u64,
    /// Completed paths before the rest of the frontier is drained.
    pub path_budget: u64,
    pub wall_timeout: Option<Duration>,
    /// Arithmetic cell width in bits: 8, 16, or 32.
    pub int_width: u32,
    /// Cell count of synthesized pointer-input regions.
    pub ptr_elems: u32,
    /// Record the exploration tree for debugging dumps.
    pub record_tree: bool,
}

impl Default for Limits {
    fn default() -> Self {
        Limits {
            loop_bound: Some(2),
            solver_budget: DEFAULT_SOLVER_BUDGET,
            step_budget: 1_000_000,
            path_budget: 4096,
            wall_timeout: None,
            int_width: 32,
            ptr_elems: 16,
            record_tree: false,
        }
    }
}

/// How one explored path ended.
#[derive(Debug, Clone, PartialEq)]
pub enum PathKind {
    /// The entry function returned.
    Returned,
    /// A typestate machine stepped into an error state.
    Bug {
        machine: String,
        target: String,
        error_state: String,
        loc: LocationId,
        model: Model,
    },
    /// A memory access failed: NULL dereference or out-of-bounds.
    MemoryError { loc: LocationId, reason: String, model: Model },
    /// The path condition turned out unsatisfiable.
    PrunedInfeasible,
    /// A budget or bound cut the path short.
    BudgetStopped { reason: String },
}

#[derive(Debug, Clone, PartialEq)]
pub struct PathResult {
    pub kind: PathKind,
    /// CFG nodes executed along the path.
    pub steps: u64,
    /// The full path condition at the end of the path.
    pub pc: Vec<SymBool>,
    /// A solver query on this path returned UNKNOWN; exhaustiveness claims
    /// do not extend to it.
    pub tainted: bool,
}

/// The result of one symbolic execution.
#[derive(Debug, Clone)]
pub struct SymOutcome {
    /// Every explored path, in deterministic depth-first order (true arms
    /// first).
    pub paths: Vec<PathResult>,
    /// The symbols minted for this run; models index into it.
    pub table: SymTable,
    pub solver_calls: u64,
    /// Fork arms and terminals discarded because their condition was
    /// proven unsatisfiable.
    pub pruned_infeasible: u64,
    /// Longest path condition seen.
    pub max_depth: usize,
    pub wall_timeout_hit: bool,
    /// Nothing was cut off: no budget stops, no timeout. Together with
    /// `!tainted` this means the bug list is exact within the loop bound.
    pub exhausted: bool,
    /// Some solver query returned UNKNOWN somewhere.
    pub tainted: bool,
    /// Present when [`Limits::record_tree`] was set.
    pub tree: Option<ExecTree>,
}

impl SymOutcome {
    /// Paths that ran to a verdict: returned, bug, or memory error.
    pub fn completed(&self) -> usize {
        self.paths
            .iter()
            .filter(|p| {
                matches!(
                    p.kind,
                    PathKind::Returned | PathKind::Bug { .. } | PathKind::MemoryError { .. }
                )
            })
            .count()
    }

    pub fn returned(&self) -> usize {
        self.paths.iter().filter(|p| matches!(p.kind, PathKind::Returned)).count()
    }

    pub fn bugs(&self) -> impl Iterator<Item = &PathResult> {
        self.paths.iter().filter(|p| matches!(p.kind, PathKind::Bug { .. }))
    }

    pub fn memory_errors(&self) -> usize {
        self.paths.iter().filter(|p| matches!(p.kind, PathKind::MemoryError { .. })).count()
    }

    pub fn budget_stopped(&self) -> usize {
        self.paths.iter().filter(|p| matches!(p.kind, PathKind::BudgetStopped { .. })).count()
    }
}

/// One node of the recorded exploration tree: interior nodes are fork
/// sites labeled with their source line, leaves are path terminals.
#[derive(Debug, Clone)]
pub struct TreeNode {
    pub label: String,
    pub parent: Option<usize>,
    /// Label of the edge from the parent ("T"/"F", or an arm index).
    pub edge: Option<String>,
    pub terminal: bool,
}

#[derive(Debug, Clone, Default)]
pub struct ExecTree {
    pub nodes: Vec<TreeNode>,
}

impl ExecTree {
    fn add(&mut self, label: String, parent: Option<usize>, edge: Option<String>, terminal: bool) -> usize {
        self.nodes.push(TreeNode { label, parent, edge, terminal });
        self.nodes.len() - 1
    }

    pub fn leaves(&self) -> usize {
        self.nodes.iter().filter(|n| n.terminal).count()
    }

    /// Render as Graphviz DOT: fork nodes are ellipses labeled with source
    /// lines, terminals are boxes, edges carry the branch outcome.
    pub fn to_dot(&self) -> String {
        let mut out = String::from("digraph paths {\n  node [fontname=\"monospace\"];\n");
        for (i, n) in self.nodes.iter().enumerate() {
            let shape = if n.terminal { "box" } else { "ellipse" };
            out.push_str(&format!(
                "  n{} [label=\"{}\", shape={}];\n",
                i,
                n.label.replace('"', "\\\""),
                shape
            ));
        }
        for (i, n) in self.nodes.iter().enumerate() {
            if let Some(p) = n.parent {
                let e = n.edge.clone().unwrap_or_default();
                out.push_str(&format!("  n{} -> n{} [label=\"{}\"];\n", p, i, e));
            }
        }
        out.push_str("}\n");
        out
    }
}

/// Result of replaying a model on a concrete interpreter run.
#[derive(Debug, Clone, PartialEq)]
pub enum ReplayOutcome {
    Confirmed {
        machine: String,
        target: String,
        error_state: String,
        loc: LocationId,
        /// Source lines the confirming run visited, consecutive repeats
        /// collapsed.
        trace: Vec<u32>,
    },
    NotConfirmed { reason: String },
}

/// Turn a model back into concrete inputs for `ip` (resolving symbol
/// places by display name, so a model found on a slice replays against the
/// original) and run the interpreter. Confirmation requires the same
/// machine and error state to fail; unmentioned inputs default to zero.
pub fn replay(
    ip: &Instrumented,
    entry: FuncId,
    table: &SymTable,
    model: &Model,
    machine: &str,
    error_state: &str,
    opts: &InterpOptions,
) -> ReplayOutcome {
    let objects = &ip.cfg.objects;
    let f = ip.cfg.func(entry);
    let mut inputs = RunInputs::default();
    for &p in &f.params {
        inputs.args.push(if objects.info(p).elem_ty.is_ptr() { CVal::NULL } else { CVal::Int(0) });
    }
    let mid = |o: ObjId| (objects.fixed_elems(o).unwrap_or(opts.ptr_elems) / 2) as i64;
    let miss =
        |what: &str| ReplayOutcome::NotConfirmed { reason: format!("input `{what}` has no home in the target program") };
    for s in table.ids() {
        let Some(&v) = model.get(&s) else { continue };
        match &table.info(s).place {
            SymPlace::Arg(i) => {
                if *i >= inputs.args.len() {
                    return ReplayOutcome::NotConfirmed {
                        reason: format!("entry takes {} arguments, model sets #{i}", inputs.args.len()),
                    };
                }
                inputs.args[*i] = CVal::Int(v);
            }
            SymPlace::ArgNullFlag(i, region) => {
                let Some(r) = objects.lookup_display(region) else { return miss(region) };
                if *i >= inputs.args.len() {
                    return ReplayOutcome::NotConfirmed {
                        reason: format!("entry takes {} arguments, model sets #{i}", inputs.args.len()),
                    };
                }
                inputs.args[*i] = if v != 0 { CVal::addr(r, mid(r)) } else { CVal::NULL };
            }
            SymPlace::GlobalInt(name) => {
                let Some(o) = objects.lookup_display(name) else { return miss(name) };
                inputs.globals.insert(o, CVal::Int(v));
            }
            SymPlace::GlobalNullFlag(name, region) => {
                let Some(o) = objects.lookup_display(name) else { return miss(name) };
                let Some(r) = objects.lookup_display(region) else { return miss(region) };
                inputs.globals.insert(o, if v != 0 { CVal::addr(r, mid(r)) } else { CVal::NULL });
            }
            SymPlace::Cell(name, k) => {
                let Some(o) = objects.lookup_display(name) else { return miss(name) };
                inputs.cells.insert((o, *k), CVal::Int(v));
            }
            SymPlace::Free => {}
        }
    }

    let mut opts = opts.clone();
    opts.record_trace = true;
    let res = run(&ip.cfg, entry, &inputs, &opts);
    match res.outcome {
        Outcome::Fault(Fault::AssertionFailure { loc, machine: m, target, error_state: e }) => {
            if m == machine && e == error_state {
                let mut trace: Vec<u32> = Vec::new();
                for t in &res.trace {
                    let line = ip.cfg.node(t.loc).pos.line;
                    if trace.last() != Some(&line) {
                        trace.push(line);
                    }
                }
                ReplayOutcome::Confirmed { machine: m, target: objects.display(target), error_state: e, loc, trace }
            } else {
                ReplayOutcome::NotConfirmed {
                    reason: format!("a different failure fired: {m} reached {e} on {}", objects.display(target)),
                }
            }
        }
        Outcome::Fault(f) => {
            let line = ip.cfg.node(f.loc()).pos.line;
            ReplayOutcome::NotConfirmed { reason: format!("memory fault at line {line} before any machine error") }
        }
        Outcome::Returned(_) => {
            ReplayOutcome::NotConfirmed { reason: "the run completed without the reported error".into() }
        }
        Outcome::BudgetExhausted => {
            ReplayOutcome::NotConfirmed { reason: "interpreter step budget exhausted".into() }
        }
    }
}

/// Symbolically execute `ip` from `entry` under `limits`.
pub fn sym_execute(ip: &Instrumented, entry: FuncId, limits: &Limits) -> SymOutcome {
    assert!(matches!(limits.int_width, 8 | 16 | 32), "cell width is 8, 16, or 32 bits");
    if let Some(b) = limits.loop_bound {
        assert!(b >= 1, "a loop bound of 0 would forbid even entering a loop");
    }
    let cfg = &ip.cfg;
    let width = Width(limits.int_width);
    for o in cfg.objects.ids() {
        let len = cfg.objects.fixed_elems(o).unwrap_or(limits.ptr_elems) as i64;
        assert!(len <= width.max(), "object sizes must be representable at the cell width");
    }

    let mut eng = Engine {
        cfg,
        limits,
        width,
        table: SymTable::default(),
        solver_calls: 0,
        pruned: 0,
        completed: 0,
        max_depth: 0,
        paths: Vec::new(),
        tree: limits.record_tree.then(ExecTree::default),
        headers: cfg.funcs.iter().map(loop_headers).collect(),
    };

    let (store, args) = eng.symbolic_inputs(entry);
    let mut init = State {
        frames: Vec::new(),
        store,
        pc: Vec::new(),
        steps: 0,
        tainted: false,
        tparent: None,
        tedge: None,
    };
    eng.enter(&mut init, entry, args);

    let start = Instant::now();
    let mut timed_out = false;
    let mut stack = vec![init];
    while let Some(st) = stack.pop() {
        if !timed_out {
            if let Some(w) = limits.wall_timeout {
                timed_out = start.elapsed() >= w;
            }
        }
        if timed_out {
            eng.finish(st, Term::Stopped { reason: "wall timeout" });
            continue;
        }
        if eng.completed >= limits.path_budget {
            eng.finish(st, Term::Stopped { reason: "path budget" });
            continue;
        }
        eng.run_state(st, &mut stack);
    }

    let exhausted = !timed_out
        && !eng.paths.iter().any(|p| matches!(p.kind, PathKind::BudgetStopped { .. }));
    let tainted = eng.paths.iter().any(|p| p.tainted);
    SymOutcome {
        paths: eng.paths,
        table: eng.table,
        solver_calls: eng.solver_calls,
        pruned_infeasible: eng.pruned,
        max_depth: eng.max_depth,
        wall_timeout_hit: timed_out,
        exhausted,
        tainted,
        tree: eng.tree,
    }
}

type Store = Vec<Rc<Vec<SymVal>>>;

#[derive(Debug, Clone)]
struct SFrame {
    func: FuncId,
    /// Next node to execute.
    node: u32,
    /// Where the pending callee's return value lands, if anywhere.
    pending_dst: Option<(ObjId, SymExpr)>,
    /// Body entries per loop header in this activation.
    loop_counts: BTreeMap<u32, u32>,
}

#[derive(Debug, Clone)]
struct State {
    frames: Vec<SFrame>,
    store: Store,
    pc: Vec<SymBool>,
    steps: u64,
    tainted: bool,
    /// Exploration-tree bookkeeping: the fork node this state hangs under
    /// and the label of the edge that led here.
    tparent: Option<usize>,
    tedge: Option<String>,
}

/// One way to continue after a fork. `jump: None` re-executes the current
/// node (pure evaluation makes that safe — nothing was mutated before the
/// fork); with a constraint and an optional store patch the retry resolves
/// the choice point deterministically.
struct Arm {
    constraint: Option<SymBool>,
    patch: Option<(ObjId, usize, SymVal)>,
    jump: Option<u32>,
    /// Loop header whose body this arm enters, for bound accounting.
    counted: Option<u32>,
    label: String,
}

/// Why a path stopped.
enum Term {
    Returned,
    NullDeref { loc: LocationId },
    OutOfBounds { loc: LocationId, obj: ObjId },
    MachineError { loc: LocationId, machine: String, target: ObjId, error_state: String },
    Pruned,
    Stopped { reason: &'static str },
}

/// Control-flow interrupt during node execution.
enum Ev {
    Fork { line: u32, arms: Vec<Arm> },
    Term(Term),
}

impl From<Term> for Ev {
    fn from(t: Term) -> Ev {
        Ev::Term(t)
    }
}

struct Engine<'a> {
    cfg: &'a ProgramCfg,
    limits: &'a Limits,
    width: Width,
    table: SymTable,
    solver_calls: u64,
    pruned: u64,
    completed: u64,
    max_depth: usize,
    paths: Vec<PathResult>,
    tree: Option<ExecTree>,
    /// Per function: loop header node -> natural loop node set.
    headers: Vec<BTreeMap<u32, BTreeSet<u32>>>,
}

impl<'a> Engine<'a> {
    fn obj_len(&self, o: ObjId) -> u32 {
        self.cfg.objects.fixed_elems(o).unwrap_or(self.limits.ptr_elems)
    }

    fn mid(&self, o: ObjId) -> i64 {
        (self.obj_len(o) / 2) as i64
    }

    /// Build the initial store and entry arguments, minting one symbol per
    /// unknown input: integer arguments and uninitialized integer globals,
    /// nullability flags for pointer inputs, and one symbol per array or
    /// region cell. Initialized globals stay concrete; locals are zero.
    fn symbolic_inputs(&mut self, entry: FuncId) -> (Store, Vec<SymVal>) {
        let cfg = self.cfg;
        let objects = &cfg.objects;
        let mut store: Store = Vec::with_capacity(objects.len());
        for o in objects.ids() {
            let info = objects.info(o);
            let len = self.obj_len(o) as usize;
            let zero = if info.elem_ty.is_ptr() { SymVal::NULL } else { SymVal::Int(SymExpr::Const(0)) };
            let mut cells = vec![zero; len];
            match &info.kind {
                ObjKind::Global { init: Some(init) } => {
                    cells[0] = match init {
                        crate::frontend::ast::ConstInit::Int(v) => {
                            SymVal::Int(SymExpr::int(self.width, *v))
                        }
                        crate::frontend::ast::ConstInit::Null => SymVal::NULL,
                    };
                }
                ObjKind::Global { init: None } => {
                    let disp = objects.display(o);
                    if info.elem_ty.is_ptr() {
                        if let Some(r) = objects.region_for(o) {
                            let off = SymExpr::Const(self.mid(r));
                            let flag = self.table.fresh(
                                format!("{disp} != NULL"),
                                true,
                                SymPlace::GlobalNullFlag(disp, objects.display(r)),
                            );
                            cells[0] = SymVal::Ptr(SymPtr::MaybeNull { flag, obj: r, off });
                        }
                        // A pointer global that is never dereferenced or
                        // compared has no region and stays NULL.
                    } else {
                        let s = self.table.fresh(disp.clone(), false, SymPlace::GlobalInt(disp));
                        cells[0] = SymVal::Int(SymExpr::Sym(s));
                    }
                }
                ObjKind::GlobalArray { .. } => {
                    let disp = objects.display(o);
                    for (k, c) in cells.iter_mut().enumerate() {
                        let s = self.table.fresh(
                            format!("{disp}[{k}]"),
                            false,
                            SymPlace::Cell(disp.clone(), k as i64),
                        );
                        *c = SymVal::Int(SymExpr::Sym(s));
                    }
                }
                ObjKind::Local { .. } => {}
                ObjKind::Region { .. } => {
                    // Unknown caller memory: integer cells are symbolic.
                    // Pointer-typed cells stay NULL — multi-level input
                    // graphs are out of scope.
                    if !info.elem_ty.is_ptr() {
                        let disp = objects.display(o);
                        for (k, c) in cells.iter_mut().enumerate() {
                            let s = self.table.fresh(
                                format!("{disp}[{k}]"),
                                false,
                                SymPlace::Cell(disp.clone(), k as i64),
                            );
                            *c = SymVal::Int(SymExpr::Sym(s));
                        }
                    }
                }
            }
            store.push(Rc::new(cells));
        }

        let f = cfg.func(entry);
        let mut args = Vec::with_capacity(f.params.len());
        for (i, &p) in f.params.iter().enumerate() {
            let info = objects.info(p);
            let disp = objects.display(p);
            if info.elem_ty.is_ptr() {
                match objects.region_for(p) {
                    Some(r) => {
                        let off = SymExpr::Const(self.mid(r));
                        let flag = self.table.fresh(
                            format!("{disp} != NULL"),
                            true,
                            SymPlace::ArgNullFlag(i, objects.display(r)),
                        );
                        args.push(SymVal::Ptr(SymPtr::MaybeNull { flag, obj: r, off }));
                    }
                    None => args.push(SymVal::NULL),
                }
            } else {
                let s = self.table.fresh(disp, false, SymPlace::Arg(i));
                args.push(SymVal::Int(SymExpr::Sym(s)));
            }
        }
        (store, args)
    }

    /// Zero the callee's locals, bind arguments, and push its frame.
    fn enter(&mut self, st: &mut State, callee: FuncId, args: Vec<SymVal>) {
        let cfg = self.cfg;
        let f = cfg.func(callee);
        for &l in f.params.iter().chain(&f.locals) {
            let zero = if cfg.objects.info(l).elem_ty.is_ptr() {
                SymVal::NULL
            } else {
                SymVal::Int(SymExpr::Const(0))
            };
            Rc::make_mut(&mut st.store[l.0 as usize])[0] = zero;
        }
        for (i, v) in args.into_iter().enumerate() {
            if let Some(&p) = f.params.get(i) {
                Rc::make_mut(&mut st.store[p.0 as usize])[0] = v;
            }
        }
        st.frames.push(SFrame {
            func: callee,
            node: ENTRY,
            pending_dst: None,
            loop_counts: BTreeMap::new(),
        });
    }

    /// Run one state until it terminates or forks.
    fn run_state(&mut self, mut st: State, stack: &mut Vec<State>) {
        loop {
            match self.exec_node(&mut st) {
                Ok(()) => {}
                Err(Ev::Term(t)) => {
                    self.finish(st, t);
                    return;
                }
                Err(Ev::Fork { line, arms }) => {
                    self.spawn(st, line, arms, stack);
                    return;
                }
            }
        }
    }

    /// Fork `st` into `arms`, pushing children so the first arm is
    /// explored first.
    fn spawn(&mut self, st: State, line: u32, arms: Vec<Arm>, stack: &mut Vec<State>) {
        let tid = self
            .tree
            .as_mut()
            .map(|t| t.add(line.to_string(), st.tparent, st.tedge.clone(), false));
        let mut children = Vec::with_capacity(arms.len());
        for arm in arms {
            let mut c = st.clone();
            if let Some(g) = arm.constraint {
                c.pc.push(g);
            }
            if let Some((o, k, v)) = arm.patch {
                Rc::make_mut(&mut c.store[o.0 as usize])[k] = v;
            }
            c.tparent = tid.or(st.tparent);
            c.tedge = Some(arm.label);
            if let Some(t) = arm.jump {
                match self.move_frame(&mut c, t, arm.counted) {
                    Ok(()) => children.push(c),
                    Err(term) => self.finish(c, term),
                }
            } else {
                children.push(c);
            }
        }
        for c in children.into_iter().rev() {
            stack.push(c);
        }
    }

    /// Advance the top frame to `to`, charging the loop bound when the
    /// move enters the body of loop header `counted`. Entering a loop body
    /// resets the budgets of the loops nested inside it.
    fn move_frame(&mut self, st: &mut State, to: u32, counted: Option<u32>) -> Result<(), Term> {
        if let (Some(bound), Some(h)) = (self.limits.loop_bound, counted) {
            let func = st.frames.last().expect("non-empty stack while moving").func;
            let inner: Vec<u32> = self.headers[func.0 as usize]
                .get(&h)
                .map(|set| {
                    self.headers[func.0 as usize]
                        .keys()
                        .filter(|&&h2| h2 != h && set.contains(&h2))
                        .copied()
                        .collect()
                })
                .unwrap_or_default();
            let f = st.frames.last_mut().expect("non-empty stack while moving");
            let c = f.loop_counts.entry(h).or_insert(0);
            if *c >= bound {
                return Err(Term::Stopped { reason: "loop bound" });
            }
            *c += 1;
            for h2 in inner {
                f.loop_counts.remove(&h2);
            }
        }
        st.frames.last_mut().expect("non-empty stack while moving").node = to;
        Ok(())
    }

    /// Execute one node, mirroring the interpreter's `step`.
    fn exec_node(&mut self, st: &mut State) -> Result<(), Ev> {
        if st.steps >= self.limits.step_budget {
            return Err(Term::Stopped { reason: "step budget" }.into());
        }
        let cfg = self.cfg;
        let frame = st.frames.last().expect("non-empty stack while stepping");
        let (func, index) = (frame.func, frame.node);
        let loc = LocationId::new(func, index);
        let node = &cfg.funcs[func.0 as usize].nodes[index as usize];
        st.steps += 1;

        match &node.stmt {
            RStmt::Entry => {
                st.frames.last_mut().unwrap().node = node.succs[0];
            }
            RStmt::Exit => {
                unreachable!("exit is reached via Return, which pops the frame");
            }
            RStmt::Assign { dst, src } => {
                let v = self.eval(st, src, loc)?;
                let (obj, off) = self.place_addr(st, dst, loc)?;
                self.write_sym(st, obj, &off, v, loc)?;
                st.frames.last_mut().unwrap().node = node.succs[0];
            }
            RStmt::Branch { .. } => {
                self.exec_branch(st, func, index)?;
            }
            RStmt::Call { callee, dst, args } => {
                let dst_addr = match dst {
                    Some(p) => Some(self.place_addr(st, p, loc)?),
                    None => None,
                };
                let mut vals = Vec::with_capacity(args.len());
                for a in args {
                    vals.push(self.eval(st, a, loc)?);
                }
                {
                    let f = st.frames.last_mut().unwrap();
                    f.node = node.succs[0];
                    f.pending_dst = dst_addr;
                }
                self.enter(st, *callee, vals);
            }
            RStmt::Return { value, .. } => {
                let v = match value {
                    Some(e) => Some(self.eval(st, e, loc)?),
                    None => None,
                };
                if st.frames.len() == 1 {
                    return Err(Term::Returned.into());
                }
                // Deliver before popping: a fork during delivery restarts
                // this node with the frame stack intact.
                let caller_dst = st.frames[st.frames.len() - 2].pending_dst.clone();
                if let Some((obj, off)) = caller_dst {
                    let val = v.expect("checked: value call has a value");
                    self.write_sym(st, obj, &off, val, loc)?;
                }
                st.frames.pop();
                st.frames.last_mut().unwrap().pending_dst = None;
            }
            RStmt::Fire { label, binder, .. } => {
                self.fire(st, label, binder.as_ref(), loc)?;
                st.frames.last_mut().unwrap().node = node.succs[0];
            }
        }
        Ok(())
    }

    /// Execute a branch node. When the whole lowered condition chain is
    /// free of memory accesses it forks once, at statement granularity, on
    /// the guards the chain denotes; otherwise it forks per comparison
    /// (preserving short-circuit safety). Arms are satisfiability-checked;
    /// a uniquely feasible arm is taken without growing the path
    /// condition.
    fn exec_branch(&mut self, st: &mut State, func: FuncId, head: u32) -> Result<(), Ev> {
        let cfg = self.cfg;
        let f = &cfg.funcs[func.0 as usize];
        let line = f.nodes[head as usize].pos.line;

        let chain = chain_nodes(f, head);
        let atomic = chain.iter().all(|&n| cond_is_simple(branch_cond(f, n)));
        let members: Vec<u32> = if atomic { chain } else { vec![head] };
        let mut conds: BTreeMap<u32, SymBool> = BTreeMap::new();
        for &n in &members {
            let c = self.cond_to_sym(st, branch_cond(f, n), LocationId::new(func, n))?;
            conds.insert(n, c);
        }

        let raw = if atomic {
            let mut visited = BTreeSet::new();
            expand_guards(f, head, &conds, &mut visited)
        } else {
            let c = conds[&head].clone();
            let node = &f.nodes[head as usize];
            vec![(c.clone(), node.succs[0]), (SymBool::not(c), node.succs[1])]
        };

        // Merge guards by target, preserving first-occurrence order (the
        // all-true outcome comes first).
        let mut guards: Vec<(u32, SymBool)> = Vec::new();
        for (g, t) in raw {
            match guards.iter_mut().find(|(tt, _)| *tt == t) {
                Some(e) => e.1 = SymBool::or(e.1.clone(), g),
                None => guards.push((t, g)),
            }
        }

        // Feasibility per arm.
        enum Via {
            Decided,
            Sat,
            Unknown,
        }
        let mut viable: Vec<(u32, SymBool, Via, usize)> = Vec::new();
        for (gi, (t, g)) in guards.into_iter().enumerate() {
            match g.as_const() {
                Some(false) => continue,
                Some(true) => viable.push((t, g, Via::Decided, gi)),
                None => match self.feasible(&st.pc, &g) {
                    SolveResult::Sat(_) => viable.push((t, g, Via::Sat, gi)),
                    SolveResult::Unsat => self.pruned += 1,
                    SolveResult::Unknown => {
                        st.tainted = true;
                        viable.push((t, g, Via::Unknown, gi));
                    }
                },
            }
        }

        let counted_for = |eng: &Engine, target: u32| -> Option<u32> {
            eng.headers[func.0 as usize]
                .get(&head)
                .is_some_and(|set| set.contains(&target))
                .then_some(head)
        };

        match viable.len() {
            0 => Err(Term::Pruned.into()),
            1 => {
                let (t, g, via, _) = viable.pop().unwrap();
                // The sole surviving arm is implied by the path condition
                // unless the others were only unknown, in which case the
                // guard must be recorded.
                if matches!(via, Via::Unknown) {
                    st.pc.push(g);
                }
                let counted = counted_for(self, t);
                self.move_frame(st, t, counted).map_err(Ev::Term)
            }
            _ => {
                let arms = viable
                    .into_iter()
                    .map(|(t, g, _, gi)| Arm {
                        constraint: Some(g),
                        patch: None,
                        jump: Some(t),
                        counted: counted_for(self, t),
                        label: edge_label(gi),
                    })
                    .collect();
                Err(Ev::Fork { line, arms })
            }
        }
    }

    /// Lower one comparison to a boolean formula. Pointer comparisons
    /// never fork: nullability flags and region identities make them
    /// expressible directly.
    fn cond_to_sym(&mut self, st: &mut State, cond: &RCond, loc: LocationId) -> Result<SymBool, Ev> {
        let l = self.eval(st, &cond.lhs, loc)?;
        let r = self.eval(st, &cond.rhs, loc)?;
        match (l, r) {
            (SymVal::Int(a), SymVal::Int(b)) => Ok(SymBool::cmp(cond.op, a, b)),
            (SymVal::Ptr(a), SymVal::Ptr(b)) => {
                let eq = ptr_eq_formula(&a, &b);
                match cond.op {
                    CmpOp::Eq => Ok(eq),
                    CmpOp::Ne => Ok(SymBool::not(eq)),
                    _ => unreachable!("checked: pointer comparison is Eq/Ne"),
                }
            }
            _ => unreachable!("checked: comparison operands agree"),
        }
    }

    fn eval(&mut self, st: &mut State, e: &RExpr, loc: LocationId) -> Result<SymVal, Ev> {
        Ok(self.eval_traced(st, e, loc)?.0)
    }

    /// Evaluate, also reporting the storage slot the value was read from
    /// (when it was) so nullability choices can concretize it in place.
    fn eval_traced(
        &mut self,
        st: &mut State,
        e: &RExpr,
        loc: LocationId,
    ) -> Result<(SymVal, Option<(ObjId, usize)>), Ev> {
        let w = self.width;
        match e {
            RExpr::Const(v) => Ok((SymVal::Int(SymExpr::int(w, *v)), None)),
            RExpr::Null => Ok((SymVal::NULL, None)),
            RExpr::Load(o) => Ok((st.store[o.0 as usize][0].clone(), Some((*o, 0)))),
            RExpr::AddrOfObj(o) => {
                Ok((SymVal::Ptr(SymPtr::Addr { obj: *o, off: SymExpr::Const(0) }), None))
            }
            RExpr::Deref(inner) => {
                let (obj, off) = self.deref_addr(st, inner, SymExpr::Const(0), loc)?;
                self.read_traced(st, obj, &off, loc)
            }
            RExpr::Index(base, idx) => {
                let i = self.eval_int(st, idx, loc)?;
                let (obj, off) = self.deref_addr(st, base, i, loc)?;
                self.read_traced(st, obj, &off, loc)
            }
            RExpr::Neg(inner) => {
                let v = self.eval_int(st, inner, loc)?;
                Ok((SymVal::Int(SymExpr::neg(w, v)), None))
            }
            RExpr::Bin(op, l, r) => {
                let a = self.eval_int(st, l, loc)?;
                let b = self.eval_int(st, r, loc)?;
                let v = match op {
                    BinOp::Add => SymExpr::add(w, a, b),
                    BinOp::Sub => SymExpr::sub(w, a, b),
                    BinOp::Mul => SymExpr::mul(w, a, b),
                };
                Ok((SymVal::Int(v), None))
            }
        }
    }

    fn eval_int(&mut self, st: &mut State, e: &RExpr, loc: LocationId) -> Result<SymExpr, Ev> {
        match self.eval(st, e, loc)? {
            SymVal::Int(v) => Ok(v),
            SymVal::Ptr(_) => unreachable!("checked: arithmetic operand is an integer"),
        }
    }

    /// Resolve a pointer expression to an object and symbolic offset,
    /// forking on nullability when needed. Offsets stay canonical at the
    /// cell width; since object sizes are bounded by the width's maximum,
    /// a wrapped offset and the ideal one agree on in-bounds-ness.
    fn deref_addr(
        &mut self,
        st: &mut State,
        base: &RExpr,
        extra: SymExpr,
        loc: LocationId,
    ) -> Result<(ObjId, SymExpr), Ev> {
        let (v, origin) = self.eval_traced(st, base, loc)?;
        match v {
            SymVal::Ptr(SymPtr::Null) => Err(Term::NullDeref { loc }.into()),
            SymVal::Ptr(SymPtr::Addr { obj, off }) => {
                Ok((obj, SymExpr::add(self.width, off, extra)))
            }
            SymVal::Ptr(SymPtr::MaybeNull { flag, obj, off }) => {
                let c = SymBool::cmp(CmpOp::Ne, SymExpr::Sym(flag), SymExpr::Const(0));
                let t_patch = origin.map(|(o, k)| {
                    (o, k, SymVal::Ptr(SymPtr::Addr { obj, off: off.clone() }))
                });
                let f_patch = origin.map(|(o, k)| (o, k, SymVal::NULL));
                if self.resolve2(st, loc, c, t_patch, f_patch)? {
                    if let Some((o, k)) = origin {
                        Rc::make_mut(&mut st.store[o.0 as usize])[k] =
                            SymVal::Ptr(SymPtr::Addr { obj, off: off.clone() });
                    }
                    Ok((obj, SymExpr::add(self.width, off, extra)))
                } else {
                    if let Some((o, k)) = origin {
                        Rc::make_mut(&mut st.store[o.0 as usize])[k] = SymVal::NULL;
                    }
                    Err(Term::NullDeref { loc }.into())
                }
            }
            SymVal::Int(_) => unreachable!("checked: dereferenced value is a pointer"),
        }
    }

    fn place_addr(&mut self, st: &mut State, p: &RPlace, loc: LocationId) -> Result<(ObjId, SymExpr), Ev> {
        match p {
            RPlace::Var(o) => Ok((*o, SymExpr::Const(0))),
            RPlace::Deref(e) => self.deref_addr(st, e, SymExpr::Const(0), loc),
            RPlace::Index { base, idx } => {
                let i = self.eval_int(st, idx, loc)?;
                self.deref_addr(st, base, i, loc)
            }
        }
    }

    /// Read `obj[off]`. Symbolic offsets fork on in-bounds-ness; in-bounds
    /// integer reads collapse to a conditional over the cells, pointer
    /// reads pin the offset to one feasible cell per arm.
    fn read_traced(
        &mut self,
        st: &mut State,
        obj: ObjId,
        off: &SymExpr,
        loc: LocationId,
    ) -> Result<(SymVal, Option<(ObjId, usize)>), Ev> {
        let len = self.obj_len(obj);
        if let Some(k) = off.as_const() {
            if !(0..len as i64).contains(&k) {
                return Err(Term::OutOfBounds { loc, obj }.into());
            }
            return Ok((st.store[obj.0 as usize][k as usize].clone(), Some((obj, k as usize))));
        }

        if !self.bounds_ok(st, obj, off, loc)? {
            return Err(Term::OutOfBounds { loc, obj }.into());
        }

        let cells = &st.store[obj.0 as usize];
        if cells.iter().all(|c| c == &cells[0]) {
            return Ok((cells[0].clone(), None));
        }
        if !self.cfg.objects.info(obj).elem_ty.is_ptr() {
            let ints: Vec<SymExpr> = cells
                .iter()
                .map(|c| match c {
                    SymVal::Int(e) => e.clone(),
                    SymVal::Ptr(_) => unreachable!("typed store: integer object holds integers"),
                })
                .collect();
            let mut acc = ints[ints.len() - 1].clone();
            for k in (0..ints.len() - 1).rev() {
                let is_k = SymBool::cmp(CmpOp::Eq, off.clone(), SymExpr::int(self.width, k as i64));
                acc = SymExpr::ite(is_k, ints[k].clone(), acc);
            }
            return Ok((SymVal::Int(acc), None));
        }

        // Pointer cells cannot live under a conditional value; pin the
        // offset to one feasible cell per arm instead.
        let k = self.pin_offset(st, obj, off, loc)?;
        Ok((st.store[obj.0 as usize][k].clone(), Some((obj, k))))
    }

    /// Write `obj[off] = v`, mirroring `read_traced`'s forking.
    fn write_sym(
        &mut self,
        st: &mut State,
        obj: ObjId,
        off: &SymExpr,
        v: SymVal,
        loc: LocationId,
    ) -> Result<(), Ev> {
        let len = self.obj_len(obj);
        if let Some(k) = off.as_const() {
            if !(0..len as i64).contains(&k) {
                return Err(Term::OutOfBounds { loc, obj }.into());
            }
            Rc::make_mut(&mut st.store[obj.0 as usize])[k as usize] = v;
            return Ok(());
        }

        if !self.bounds_ok(st, obj, off, loc)? {
            return Err(Term::OutOfBounds { loc, obj }.into());
        }

        if !self.cfg.objects.info(obj).elem_ty.is_ptr() {
            let val = match v {
                SymVal::Int(e) => e,
                SymVal::Ptr(_) => unreachable!("typed store: integer object holds integers"),
            };
            let w = self.width;
            let cells = Rc::make_mut(&mut st.store[obj.0 as usize]);
            for (k, cell) in cells.iter_mut().enumerate() {
                let old = match cell {
                    SymVal::Int(e) => e.clone(),
                    SymVal::Ptr(_) => unreachable!("typed store: integer object holds integers"),
                };
                let is_k = SymBool::cmp(CmpOp::Eq, off.clone(), SymExpr::int(w, k as i64));
                *cell = SymVal::Int(SymExpr::ite(is_k, val.clone(), old));
            }
            return Ok(());
        }

        let k = self.pin_offset(st, obj, off, loc)?;
        Rc::make_mut(&mut st.store[obj.0 as usize])[k] = v;
        Ok(())
    }

    /// Establish that a symbolic offset is in bounds, forking when both
    /// outcomes are live. `Ok(false)` means proven out of bounds.
    fn bounds_ok(&mut self, st: &mut State, obj: ObjId, off: &SymExpr, loc: LocationId) -> Result<bool, Ev> {
        let len = self.obj_len(obj);
        let inb = SymBool::and(
            SymBool::cmp(CmpOp::Ge, off.clone(), SymExpr::Const(0)),
            SymBool::cmp(CmpOp::Lt, off.clone(), SymExpr::int(self.width, len as i64)),
        );
        self.resolve2(st, loc, inb, None, None)
    }

    /// Pin an in-bounds symbolic offset to concrete cells: fork one arm
    /// per feasible cell, or proceed directly when only one is feasible.
    fn pin_offset(&mut self, st: &mut State, obj: ObjId, off: &SymExpr, loc: LocationId) -> Result<usize, Ev> {
        let len = self.obj_len(obj) as usize;
        let w = self.width;
        // A previously pinned offset resolves without solver work.
        for k in 0..len {
            let is_k = SymBool::cmp(CmpOp::Eq, off.clone(), SymExpr::int(w, k as i64));
            if st.pc.contains(&is_k) {
                return Ok(k);
            }
        }
        let mut feas: Vec<(usize, SymBool)> = Vec::new();
        let mut saw_unknown = false;
        for k in 0..len {
            let is_k = SymBool::cmp(CmpOp::Eq, off.clone(), SymExpr::int(w, k as i64));
            match is_k.as_const() {
                Some(true) => return Ok(k),
                Some(false) => continue,
                None => match self.feasible(&st.pc, &is_k) {
                    SolveResult::Sat(_) => feas.push((k, is_k)),
                    SolveResult::Unsat => {}
                    SolveResult::Unknown => {
                        saw_unknown = true;
                        st.tainted = true;
                        feas.push((k, is_k));
                    }
                },
            }
        }
        match feas.len() {
            0 => Err(Term::Pruned.into()),
            1 => {
                let (k, is_k) = feas.pop().unwrap();
                if saw_unknown {
                    st.pc.push(is_k);
                }
                Ok(k)
            }
            _ => {
                let line = self.cfg.node(loc).pos.line;
                let arms = feas
                    .into_iter()
                    .map(|(k, is_k)| Arm {
                        constraint: Some(is_k),
                        patch: None,
                        jump: None,
                        counted: None,
                        label: k.to_string(),
                    })
                    .collect();
                Err(Ev::Fork { line, arms })
            }
        }
    }

    /// Resolve a two-way choice on `c` against the path condition: take
    /// the only live arm inline, or fork (restarting the current node)
    /// when both are live. Patches accompany the fork arms so retries
    /// resolve deterministically.
    fn resolve2(
        &mut self,
        st: &mut State,
        loc: LocationId,
        c: SymBool,
        t_patch: Option<(ObjId, usize, SymVal)>,
        f_patch: Option<(ObjId, usize, SymVal)>,
    ) -> Result<bool, Ev> {
        if let Some(v) = c.as_const() {
            return Ok(v);
        }
        let not_c = SymBool::not(c.clone());
        if st.pc.contains(&c) {
            return Ok(true);
        }
        if st.pc.contains(&not_c) {
            return Ok(false);
        }
        let ft = self.feasible(&st.pc, &c);
        let ff = self.feasible(&st.pc, &not_c);
        let fork = |this: &mut Self| -> Ev {
            let line = this.cfg.node(loc).pos.line;
            Ev::Fork {
                line,
                arms: vec![
                    Arm {
                        constraint: Some(c.clone()),
                        patch: t_patch,
                        jump: None,
                        counted: None,
                        label: "T".into(),
                    },
                    Arm {
                        constraint: Some(not_c.clone()),
                        patch: f_patch,
                        jump: None,
                        counted: None,
                        label: "F".into(),
                    },
                ],
            }
        };
        match (ft, ff) {
            (SolveResult::Sat(_), SolveResult::Unsat) => {
                self.pruned += 1;
                Ok(true)
            }
            (SolveResult::Unsat, SolveResult::Sat(_)) => {
                self.pruned += 1;
                Ok(false)
            }
            // The two arms partition the worlds, so one being impossible
            // decides the other even if its own query was inconclusive.
            (SolveResult::Unknown, SolveResult::Unsat) => {
                self.pruned += 1;
                Ok(true)
            }
            (SolveResult::Unsat, SolveResult::Unknown) => {
                self.pruned += 1;
                Ok(false)
            }
            (SolveResult::Unsat, SolveResult::Unsat) => Err(Term::Pruned.into()),
            (SolveResult::Sat(_), SolveResult::Sat(_)) => Err(fork(self)),
            (SolveResult::Unknown, _) | (_, SolveResult::Unknown) => {
                st.tainted = true;
                Err(fork(self))
            }
        }
    }

    /// Step the machine(s) a fire statement addresses, mirroring the
    /// interpreter: an explicit binder dispatches on the object it
    /// references (nullable binders fork); without a binder every tracked
    /// machine steps, in object order.
    fn fire(&mut self, st: &mut State, label: &str, binder: Option<&RExpr>, loc: LocationId) -> Result<(), Ev> {
        let cfg = self.cfg;
        let Some(rt) = &cfg.fire else { return Ok(()) };
        match binder {
            Some(b) => {
                let (v, origin) = self.eval_traced(st, b, loc)?;
                match v {
                    SymVal::Ptr(SymPtr::Addr { obj, .. }) => {
                        if let Some(&sv) = rt.dispatch.get(&obj) {
                            self.fire_on(st, rt, obj, sv, label, loc)?;
                        }
                    }
                    SymVal::Ptr(SymPtr::MaybeNull { flag, obj, off }) => {
                        // Only fork when the non-NULL world actually
                        // dispatches somewhere; otherwise both worlds are
                        // no-ops.
                        if let Some(&sv) = rt.dispatch.get(&obj) {
                            let c = SymBool::cmp(CmpOp::Ne, SymExpr::Sym(flag), SymExpr::Const(0));
                            let t_patch = origin.map(|(o, k)| {
                                (o, k, SymVal::Ptr(SymPtr::Addr { obj, off: off.clone() }))
                            });
                            let f_patch = origin.map(|(o, k)| (o, k, SymVal::NULL));
                            if self.resolve2(st, loc, c, t_patch.clone(), f_patch.clone())? {
                                if let Some((o, k, pv)) = t_patch {
                                    Rc::make_mut(&mut st.store[o.0 as usize])[k] = pv;
                                }
                                self.fire_on(st, rt, obj, sv, label, loc)?;
                            } else if let Some((o, k, pv)) = f_patch {
                                Rc::make_mut(&mut st.store[o.0 as usize])[k] = pv;
                            }
                        }
                    }
                    // NULL or arithmetic binder: no tracked target.
                    _ => {}
                }
            }
            None => {
                for (&target, &sv) in &rt.dispatch {
                    self.fire_on(st, rt, target, sv, label, loc)?;
                }
            }
        }
        Ok(())
    }

    fn fire_on(
        &mut self,
        st: &mut State,
        rt: &FireRuntime,
        target: ObjId,
        state_var: ObjId,
        label: &str,
        loc: LocationId,
    ) -> Result<(), Ev> {
        let cur = match &st.store[state_var.0 as usize][0] {
            SymVal::Int(e) => e.as_const(),
            SymVal::Ptr(_) => unreachable!("state variables hold state indices"),
        };
        let Some(cur) = cur else {
            // State variables are only written concretely; a symbolic one
            // means user code aliased it somehow. Give up honestly.
            st.tainted = true;
            return Err(Term::Stopped { reason: "symbolic machine state" }.into());
        };
        if let Some(&next) = rt.transitions.get(&(cur as u8, label.to_string())) {
            if rt.errors.contains_key(&next) {
                return Err(Term::MachineError {
                    loc,
                    machine: rt.machine.clone(),
                    target,
                    error_state: rt.state_name(next).to_string(),
                }
                .into());
            }
            Rc::make_mut(&mut st.store[state_var.0 as usize])[0] =
                SymVal::Int(SymExpr::Const(next as i64));
        }
        Ok(())
    }

    fn feasible(&mut self, pc: &[SymBool], extra: &SymBool) -> SolveResult {
        let mut q = pc.to_vec();
        q.push(extra.clone());
        self.msolve(&q)
    }

    fn msolve(&mut self, pc: &[SymBool]) -> SolveResult {
        self.solver_calls += 1;
        solve(pc, &self.table, self.width, self.limits.solver_budget)
    }

    /// Record a finished path, solving for a model when the terminal is a
    /// report that needs one.
    fn finish(&mut self, mut st: State, term: Term) {
        let kind = match term {
            Term::Returned => PathKind::Returned,
            Term::Pruned => {
                self.pruned += 1;
                PathKind::PrunedInfeasible
            }
            Term::Stopped { reason } => PathKind::BudgetStopped { reason: reason.to_string() },
            Term::NullDeref { loc } => match self.msolve(&st.pc) {
                SolveResult::Sat(model) => {
                    PathKind::MemoryError { loc, reason: "null dereference".into(), model }
                }
                SolveResult::Unsat => {
                    self.pruned += 1;
                    PathKind::PrunedInfeasible
                }
                SolveResult::Unknown => {
                    st.tainted = true;
                    PathKind::BudgetStopped { reason: "solver".into() }
                }
            },
            Term::OutOfBounds { loc, obj } => match self.msolve(&st.pc) {
                SolveResult::Sat(model) => PathKind::MemoryError {
                    loc,
                    reason: format!("out of bounds on {}", self.cfg.objects.display(obj)),
                    model,
                },
                SolveResult::Unsat => {
                    self.pruned += 1;
                    PathKind::PrunedInfeasible
                }
                SolveResult::Unknown => {
                    st.tainted = true;
                    PathKind::BudgetStopped { reason: "solver".into() }
                }
            },
            Term::MachineError { loc, machine, target, error_state } => match self.msolve(&st.pc) {
                SolveResult::Sat(model) => PathKind::Bug {
                    machine,
                    target: self.cfg.objects.display(target),
                    error_state,
                    loc,
                    model,
                },
                SolveResult::Unsat => {
                    self.pruned += 1;
                    PathKind::PrunedInfeasible
                }
                SolveResult::Unknown => {
                    st.tainted = true;
                    PathKind::BudgetStopped { reason: "solver".into() }
                }
            },
        };
        if matches!(kind, PathKind::Returned | PathKind::Bug { .. } | PathKind::MemoryError { .. })
        {
            self.completed += 1;
        }
        if let Some(t) = self.tree.as_mut() {
            let label = match &kind {
                PathKind::Returned => "ret".to_string(),
                PathKind::Bug { error_state, target, .. } => format!("BUG {error_state} on {target}"),
                PathKind::MemoryError { reason, .. } => format!("memory error: {reason}"),
                PathKind::PrunedInfeasible => "infeasible".to_string(),
                PathKind::BudgetStopped { reason } => format!("stop: {reason}"),
            };
            t.add(label, st.tparent, st.tedge.clone(), true);
        }
        self.max_depth = self.max_depth.max(st.pc.len());
        self.paths.push(PathResult { kind, steps: st.steps, pc: st.pc, tainted: st.tainted });
    }
}

/// Equality formula between two symbolic pointers. Distinct objects are
/// never equal; nullable pointers contribute their flags.
fn ptr_eq_formula(a: &SymPtr, b: &SymPtr) -> SymBool {
    let null_of = |p: &SymPtr| match p {
        SymPtr::Null => SymBool::TRUE,
        SymPtr::Addr { .. } => SymBool::FALSE,
        SymPtr::MaybeNull { flag, .. } => {
            SymBool::cmp(CmpOp::Eq, SymExpr::Sym(*flag), SymExpr::Const(0))
        }
    };
    let addr_part = |p: &SymPtr| match p {
        SymPtr::Null => None,
        SymPtr::Addr { obj, off } => Some((SymBool::TRUE, *obj, off.clone())),
        SymPtr::MaybeNull { flag, obj, off } => Some((
            SymBool::cmp(CmpOp::Ne, SymExpr::Sym(*flag), SymExpr::Const(0)),
            *obj,
            off.clone(),
        )),
    };
    let both_null = SymBool::and(null_of(a), null_of(b));
    let both_addr = match (addr_part(a), addr_part(b)) {
        (Some((ga, oa, offa)), Some((gb, ob, offb))) if oa == ob => SymBool::and(
            SymBool::and(ga, gb),
            SymBool::cmp(CmpOp::Eq, offa, offb),
        ),
        _ => SymBool::FALSE,
    };
    SymBool::or(both_null, both_addr)
}

fn branch_cond(f: &FuncCfg, n: u32) -> &RCond {
    match &f.nodes[n as usize].stmt {
        RStmt::Branch { cond } => cond,
        _ => unreachable!("chain members are branch nodes"),
    }
}

/// All branch nodes lowered from the same source condition as `head`,
/// reachable through same-statement successors.
fn chain_nodes(f: &FuncCfg, head: u32) -> Vec<u32> {
    let sid = f.nodes[head as usize].stmt_id;
    if sid.is_none() {
        return vec![head];
    }
    let mut seen = BTreeSet::new();
    seen.insert(head);
    let mut work = vec![head];
    while let Some(n) = work.pop() {
        for &s in &f.nodes[n as usize].succs {
            let sn = &f.nodes[s as usize];
            if matches!(sn.stmt, RStmt::Branch { .. }) && sn.stmt_id == sid && seen.insert(s) {
                work.push(s);
            }
        }
    }
    seen.into_iter().collect()
}

/// A condition safe to evaluate eagerly: no memory accesses, so no faults
/// and no forks can hide behind short-circuiting.
fn cond_is_simple(c: &RCond) -> bool {
    expr_is_simple(&c.lhs) && expr_is_simple(&c.rhs)
}

fn expr_is_simple(e: &RExpr) -> bool {
    match e {
        RExpr::Deref(_) | RExpr::Index(..) => false,
        RExpr::Neg(a) => expr_is_simple(a),
        RExpr::Bin(_, a, b) => expr_is_simple(a) && expr_is_simple(b),
        RExpr::Const(_) | RExpr::Null | RExpr::Load(_) | RExpr::AddrOfObj(_) => true,
    }
}

/// Expand a condition chain into guarded exit targets. `visited` makes
/// revisits (an empty loop body cycling back to its header) exit leaves.
fn expand_guards(
    f: &FuncCfg,
    n: u32,
    conds: &BTreeMap<u32, SymBool>,
    visited: &mut BTreeSet<u32>,
) -> Vec<(SymBool, u32)> {
    let node = &f.nodes[n as usize];
    let in_chain = conds.contains_key(&n) && !visited.contains(&n);
    if !in_chain {
        return vec![(SymBool::TRUE, n)];
    }
    visited.insert(n);
    let c = conds[&n].clone();
    let mut out = Vec::new();
    for (g, t) in expand_guards(f, node.succs[0], conds, visited) {
        out.push((SymBool::and(c.clone(), g), t));
    }
    for (g, t) in expand_guards(f, node.succs[1], conds, visited) {
        out.push((SymBool::and(SymBool::not(c.clone()), g), t));
    }
    visited.remove(&n);
    out
}

fn edge_label(guard_index: usize) -> String {
    match guard_index {
        0 => "T".into(),
        1 => "F".into(),
        k => k.to_string(),
    }
}

/// Loop headers of a function: back-edge targets mapped to their natural
/// loop's node set.
fn loop_headers(f: &FuncCfg) -> BTreeMap<u32, BTreeSet<u32>> {
    let mut out: BTreeMap<u32, BTreeSet<u32>> = BTreeMap::new();
    if f.nodes.is_empty() {
        return out;
    }
    let idoms = f.idoms();
    let preds = f.preds();
    for (u, n) in f.nodes.iter().enumerate() {
        let u = u as u32;
        for &h in &n.succs {
            if !FuncCfg::dominates(&idoms, h, u) {
                continue;
            }
            let set = out.entry(h).or_default();
            set.insert(h);
            let mut work = vec![u];
            while let Some(x) = work.pop() {
                if x != h && set.insert(x) {
                    for &p in &preds[x as usize] {
                        work.push(p);
                    }
                }
            }
        }
    }
    out
}
