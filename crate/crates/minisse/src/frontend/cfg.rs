//! Control-flow graph IR over a resolved object table.
//!
//! Every checked program lowers to one [`ProgramCfg`]: per function, a dense
//! vector of nodes (entry at index 0, exit at index 1) holding atomic
//! statements over interned [`ObjId`]s. Short-circuit `&&`/`||` conditions are
//! lowered into chains of branch nodes, one atomic comparison per branch, so
//! downstream analyses see a single condition per branch node. Every `return`
//! routes through the function's exit node; functions that can fall off the
//! end get a synthesized (non-explicit) return of their zero value.
//!
//! The object table interns one object per variable — a pointer variable is a
//! one-cell object like any scalar — plus one synthesized pointee *region* per
//! pointer parameter and per uninitialized pointer global. Regions give the
//! points-to analysis, the interpreter, and the symbolic executor a common
//! notion of "the memory this pointer may be aimed at".

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use crate::diag::Pos;
use crate::frontend::ast::*;

pub const ENTRY: u32 = 0;
pub const EXIT: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, serde::Serialize)]
pub struct FuncId(pub u32);

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, serde::Serialize)]
pub struct ObjId(pub u32);

/// A stable program location: function plus dense node index.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, serde::Serialize)]
pub struct LocationId {
    pub func: FuncId,
    pub index: u32,
}

impl LocationId {
    pub fn new(func: FuncId, index: u32) -> Self {
        LocationId { func, index }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ObjKind {
    Global { init: Option<ConstInit> },
    GlobalArray { len: u32 },
    Local { func: FuncId, param_index: Option<u32> },
    /// Synthesized pointee memory for the pointer variable `owner`.
    Region { owner: ObjId },
}

#[derive(Debug, Clone)]
pub struct ObjInfo {
    /// Source name for variables; owner-derived for regions.
    pub name: String,
    pub kind: ObjKind,
    /// Cell type: the variable's type for scalars, the element type for
    /// arrays, the pointee type for regions.
    pub elem_ty: Ty,
}

impl ObjInfo {
    pub fn is_region(&self) -> bool {
        matches!(self.kind, ObjKind::Region { .. })
    }

    pub fn is_global_var(&self) -> bool {
        matches!(self.kind, ObjKind::Global { .. } | ObjKind::GlobalArray { .. })
    }
}

#[derive(Debug, Clone, Default)]
pub struct ObjTable {
    pub objs: Vec<ObjInfo>,
    pub func_names: Vec<String>,
    by_name: BTreeMap<(Option<FuncId>, String), ObjId>,
    region_of: BTreeMap<ObjId, ObjId>,
}

impl ObjTable {
    pub fn info(&self, o: ObjId) -> &ObjInfo {
        &self.objs[o.0 as usize]
    }

    pub fn len(&self) -> usize {
        self.objs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.objs.is_empty()
    }

    pub fn ids(&self) -> impl Iterator<Item = ObjId> {
        (0..self.objs.len() as u32).map(ObjId)
    }

    /// The synthesized region for a pointer parameter or uninitialized
    /// pointer global, if one exists.
    pub fn region_for(&self, var: ObjId) -> Option<ObjId> {
        self.region_of.get(&var).copied()
    }

    pub fn lookup(&self, func: Option<FuncId>, name: &str) -> Option<ObjId> {
        self.by_name
            .get(&(func, name.to_string()))
            .or_else(|| self.by_name.get(&(None, name.to_string())))
            .copied()
    }

    /// Human-readable object name: `L1` for globals, `copy.i` for locals and
    /// parameters, `region(copy.src)` for synthesized regions. These names are
    /// the external identity of objects (CLI `--target`, report JSON).
    pub fn display(&self, o: ObjId) -> String {
        let info = self.info(o);
        match &info.kind {
            ObjKind::Global { .. } | ObjKind::GlobalArray { .. } => info.name.clone(),
            ObjKind::Local { func, .. } => {
                format!("{}.{}", self.func_names[func.0 as usize], info.name)
            }
            ObjKind::Region { owner } => format!("region({})", self.display(*owner)),
        }
    }

    /// Inverse of [`display`](Self::display).
    pub fn lookup_display(&self, name: &str) -> Option<ObjId> {
        if let Some(inner) = name.strip_prefix("region(").and_then(|s| s.strip_suffix(')')) {
            return self.lookup_display(inner).and_then(|v| self.region_for(v));
        }
        if let Some((f, v)) = name.split_once('.') {
            let func = self.func_names.iter().position(|n| n == f)?;
            return self.by_name.get(&(Some(FuncId(func as u32)), v.to_string())).copied();
        }
        self.by_name.get(&(None, name.to_string())).copied()
    }

    /// Fixed cell count for array objects; `None` for regions, whose length is
    /// the run-time `ptr_elems` configuration.
    pub fn fixed_elems(&self, o: ObjId) -> Option<u32> {
        match &self.info(o).kind {
            ObjKind::GlobalArray { len } => Some(*len),
            ObjKind::Region { .. } => None,
            _ => Some(1),
        }
    }
}

/// Resolved value expression.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum RExpr {
    Const(i64),
    Null,
    /// Read a scalar variable's single cell.
    Load(ObjId),
    /// `&x`, or a decayed array/region base: the address (obj, 0).
    AddrOfObj(ObjId),
    Deref(Box<RExpr>),
    Index(Box<RExpr>, Box<RExpr>),
    Neg(Box<RExpr>),
    Bin(BinOp, Box<RExpr>, Box<RExpr>),
}

impl RExpr {
    /// Scalar variables read by this expression (not the cells behind
    /// pointers; those are resolved via points-to where needed).
    pub fn vars_read(&self, out: &mut BTreeSet<ObjId>) {
        match self {
            RExpr::Const(_) | RExpr::Null | RExpr::AddrOfObj(_) => {}
            RExpr::Load(o) => {
                out.insert(*o);
            }
            RExpr::Deref(e) | RExpr::Neg(e) => e.vars_read(out),
            RExpr::Index(a, b) | RExpr::Bin(_, a, b) => {
                a.vars_read(out);
                b.vars_read(out);
            }
        }
    }

    /// Does this expression dereference memory (directly or via indexing)?
    pub fn has_deref(&self) -> bool {
        match self {
            RExpr::Const(_) | RExpr::Null | RExpr::Load(_) | RExpr::AddrOfObj(_) => false,
            RExpr::Deref(_) | RExpr::Index(_, _) => true,
            RExpr::Neg(e) => e.has_deref(),
            RExpr::Bin(_, a, b) => a.has_deref() || b.has_deref(),
        }
    }
}

/// Resolved assignment target.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum RPlace {
    Var(ObjId),
    Deref(RExpr),
    Index { base: RExpr, idx: RExpr },
}

/// One atomic branch condition: a single comparison.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RCond {
    pub op: CmpOp,
    pub lhs: RExpr,
    pub rhs: RExpr,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum RStmt {
    Entry,
    Exit,
    Assign { dst: RPlace, src: RExpr },
    Call { callee: FuncId, dst: Option<RPlace>, args: Vec<RExpr> },
    Return { value: Option<RExpr>, explicit: bool },
    Branch { cond: RCond },
    Fire { machine: String, label: String, binder: Option<RExpr> },
}

#[derive(Debug, Clone)]
pub struct Node {
    pub stmt: RStmt,
    /// Branch nodes: `[true_succ, false_succ]`; exit: empty; otherwise one.
    pub succs: Vec<u32>,
    pub pos: Pos,
    /// Provenance: the AST statement this node was lowered from.
    pub stmt_id: Option<StmtId>,
    /// For branch nodes: position within the statement's lowered chain.
    pub cond_index: u16,
}

#[derive(Debug, Clone)]
pub struct FuncCfg {
    pub id: FuncId,
    pub name: String,
    pub ret: RetTy,
    pub params: Vec<ObjId>,
    pub locals: Vec<ObjId>,
    pub is_extern: bool,
    pub nodes: Vec<Node>,
}

impl FuncCfg {
    pub fn preds(&self) -> Vec<Vec<u32>> {
        let mut preds = vec![Vec::new(); self.nodes.len()];
        for (i, n) in self.nodes.iter().enumerate() {
            for &s in &n.succs {
                preds[s as usize].push(i as u32);
            }
        }
        preds
    }

    /// Reverse postorder from entry, visiting successors in edge order.
    pub fn rpo(&self) -> Vec<u32> {
        let mut seen = vec![false; self.nodes.len()];
        let mut post = Vec::new();
        // Iterative DFS with an explicit stack of (node, next-successor).
        let mut stack: Vec<(u32, usize)> = vec![(ENTRY, 0)];
        seen[ENTRY as usize] = true;
        while let Some(&mut (n, ref mut next)) = stack.last_mut() {
            let succs = &self.nodes[n as usize].succs;
            if *next < succs.len() {
                let s = succs[*next];
                *next += 1;
                if !seen[s as usize] {
                    seen[s as usize] = true;
                    stack.push((s, 0));
                }
            } else {
                post.push(n);
                stack.pop();
            }
        }
        post.reverse();
        post
    }

    /// Immediate dominators, indexed by node (entry maps to itself).
    /// Unreachable nodes (none, by construction) would map to `u32::MAX`.
    pub fn idoms(&self) -> Vec<u32> {
        let rpo = self.rpo();
        let preds = self.preds();
        iterative_idoms(self.nodes.len(), ENTRY, &rpo, &preds)
    }

    /// Immediate postdominators over the reversed CFG, rooted at exit.
    pub fn ipostdoms(&self) -> Vec<u32> {
        // Reverse the graph: succs become preds and vice versa.
        let preds = self.preds();
        let mut rpo_rev = {
            // Postorder over the reversed graph from EXIT.
            let mut seen = vec![false; self.nodes.len()];
            let mut post = Vec::new();
            let mut stack: Vec<(u32, usize)> = vec![(EXIT, 0)];
            seen[EXIT as usize] = true;
            while let Some(&mut (n, ref mut next)) = stack.last_mut() {
                let ps = &preds[n as usize];
                if *next < ps.len() {
                    let s = ps[*next];
                    *next += 1;
                    if !seen[s as usize] {
                        seen[s as usize] = true;
                        stack.push((s, 0));
                    }
                } else {
                    post.push(n);
                    stack.pop();
                }
            }
            post.reverse();
            post
        };
        if rpo_rev.first() != Some(&EXIT) {
            rpo_rev.retain(|&n| n != EXIT);
            rpo_rev.insert(0, EXIT);
        }
        let succs_as_preds: Vec<Vec<u32>> =
            self.nodes.iter().map(|n| n.succs.clone()).collect();
        iterative_idoms(self.nodes.len(), EXIT, &rpo_rev, &succs_as_preds)
    }

    /// `true` iff `a` dominates `b` under the given idom vector.
    pub fn dominates(idoms: &[u32], a: u32, b: u32) -> bool {
        let mut n = b;
        loop {
            if n == a {
                return true;
            }
            let d = idoms[n as usize];
            if d == n || d == u32::MAX {
                return false;
            }
            n = d;
        }
    }

    /// Natural-loop back edges: edges `(from, to)` where `to` dominates `from`.
    pub fn back_edges(&self) -> Vec<(u32, u32)> {
        let idoms = self.idoms();
        let mut out = Vec::new();
        for (i, n) in self.nodes.iter().enumerate() {
            for &s in &n.succs {
                if Self::dominates(&idoms, s, i as u32) {
                    out.push((i as u32, s));
                }
            }
        }
        out
    }

    /// Structural validity: arities, reachability, dense indices, returns
    /// routed through exit. Used by tests and debug assertions.
    pub fn validate(&self) -> Result<(), String> {
        if self.nodes.len() < 2 {
            return Err(format!("{}: fewer than two nodes", self.name));
        }
        if !matches!(self.nodes[ENTRY as usize].stmt, RStmt::Entry) {
            return Err(format!("{}: node 0 is not entry", self.name));
        }
        if !matches!(self.nodes[EXIT as usize].stmt, RStmt::Exit) {
            return Err(format!("{}: node 1 is not exit", self.name));
        }
        for (i, n) in self.nodes.iter().enumerate() {
            let want = match n.stmt {
                RStmt::Exit => 0,
                RStmt::Branch { .. } => 2,
                _ => 1,
            };
            if n.succs.len() != want {
                return Err(format!("{}: node {i} has {} successors, wants {want}", self.name, n.succs.len()));
            }
            for &s in &n.succs {
                if s as usize >= self.nodes.len() {
                    return Err(format!("{}: node {i} has out-of-range successor {s}", self.name));
                }
            }
            if let RStmt::Return { .. } = n.stmt {
                if n.succs != [EXIT] {
                    return Err(format!("{}: return at {i} does not route to exit", self.name));
                }
            }
            if matches!(n.stmt, RStmt::Entry) && i != ENTRY as usize {
                return Err(format!("{}: duplicate entry at {i}", self.name));
            }
            if matches!(n.stmt, RStmt::Exit) && i != EXIT as usize {
                return Err(format!("{}: duplicate exit at {i}", self.name));
            }
        }
        // Reachability from entry.
        let mut seen = vec![false; self.nodes.len()];
        let mut q = VecDeque::from([ENTRY]);
        seen[ENTRY as usize] = true;
        while let Some(n) = q.pop_front() {
            for &s in &self.nodes[n as usize].succs {
                if !seen[s as usize] {
                    seen[s as usize] = true;
                    q.push_back(s);
                }
            }
        }
        if let Some(i) = seen.iter().position(|&b| !b) {
            return Err(format!("{}: node {i} unreachable from entry", self.name));
        }
        Ok(())
    }
}

/// Cooper–Harvey–Kennedy iterative dominator computation, shared between the
/// forward (dominator) and reverse (postdominator) directions.
fn iterative_idoms(n: usize, root: u32, rpo: &[u32], preds: &[Vec<u32>]) -> Vec<u32> {
    let mut order = vec![u32::MAX; n]; // node -> rpo position
    for (i, &node) in rpo.iter().enumerate() {
        order[node as usize] = i as u32;
    }
    let mut idom = vec![u32::MAX; n];
    idom[root as usize] = root;
    let intersect = |idom: &[u32], order: &[u32], mut a: u32, mut b: u32| -> u32 {
        while a != b {
            while order[a as usize] > order[b as usize] {
                a = idom[a as usize];
            }
            while order[b as usize] > order[a as usize] {
                b = idom[b as usize];
            }
        }
        a
    };
    let mut changed = true;
    while changed {
        changed = false;
        for &node in rpo.iter().skip(1) {
            let mut new_idom = u32::MAX;
            for &p in &preds[node as usize] {
                if idom[p as usize] == u32::MAX {
                    continue;
                }
                new_idom = if new_idom == u32::MAX {
                    p
                } else {
                    intersect(&idom, &order, new_idom, p)
                };
            }
            if new_idom != u32::MAX && idom[node as usize] != new_idom {
                idom[node as usize] = new_idom;
                changed = true;
            }
        }
    }
    idom
}

/// Run-time machine semantics attached to an instrumented CFG: the transition
/// table plus the dispatch from target object to state-variable object. Plain
/// data, so the frontend interpreter can execute `__fire` without depending on
/// the machine-spec module.
#[derive(Debug, Clone)]
pub struct FireRuntime {
    pub machine: String,
    pub state_names: Vec<String>,
    pub initial: u8,
    /// Error state -> human-readable message.
    pub errors: BTreeMap<u8, String>,
    /// (state, label) -> next state. Missing entries are identity.
    pub transitions: BTreeMap<(u8, String), u8>,
    /// Target object -> machine state variable object.
    pub dispatch: BTreeMap<ObjId, ObjId>,
}

impl FireRuntime {
    pub fn state_index(&self, name: &str) -> Option<u8> {
        self.state_names.iter().position(|s| s == name).map(|i| i as u8)
    }

    pub fn state_name(&self, idx: u8) -> &str {
        &self.state_names[idx as usize]
    }
}

#[derive(Debug, Clone)]
pub struct ProgramCfg {
    pub funcs: Vec<FuncCfg>,
    pub objects: ObjTable,
    /// The AST this CFG was built from; instrumentation and slicing transform
    /// the AST and rebuild, keeping both views in sync.
    pub ast: MiniCProgram,
    /// Machine semantics for `__fire` nodes; `None` on uninstrumented programs
    /// (fires, if any, are then inert).
    pub fire: Option<FireRuntime>,
}

impl ProgramCfg {
    pub fn func_id(&self, name: &str) -> Option<FuncId> {
        self.funcs.iter().position(|f| f.name == name).map(|i| FuncId(i as u32))
    }

    pub fn func(&self, id: FuncId) -> &FuncCfg {
        &self.funcs[id.0 as usize]
    }

    pub fn node(&self, loc: LocationId) -> &Node {
        &self.funcs[loc.func.0 as usize].nodes[loc.index as usize]
    }

    pub fn loc_label(&self, loc: LocationId) -> String {
        format!("{}@{}", self.func(loc.func).name, loc.index)
    }

    /// All locations, function by function, index order.
    pub fn locations(&self) -> impl Iterator<Item = LocationId> + '_ {
        self.funcs.iter().flat_map(|f| {
            (0..f.nodes.len() as u32).map(move |i| LocationId::new(f.id, i))
        })
    }

    /// Functions reachable from `entry` through call statements (externs
    /// included), in deterministic breadth-first order.
    pub fn reachable_funcs(&self, entry: FuncId) -> Vec<FuncId> {
        let mut seen = BTreeSet::from([entry]);
        let mut order = vec![entry];
        let mut q = VecDeque::from([entry]);
        while let Some(f) = q.pop_front() {
            let mut callees = BTreeSet::new();
            for n in &self.funcs[f.0 as usize].nodes {
                if let RStmt::Call { callee, .. } = &n.stmt {
                    callees.insert(*callee);
                }
            }
            for c in callees {
                if seen.insert(c) {
                    order.push(c);
                    q.push_back(c);
                }
            }
        }
        order
    }

    /// Direct call sites of each function.
    pub fn call_sites(&self) -> BTreeMap<FuncId, Vec<LocationId>> {
        let mut out: BTreeMap<FuncId, Vec<LocationId>> = BTreeMap::new();
        for f in &self.funcs {
            for (i, n) in f.nodes.iter().enumerate() {
                if let RStmt::Call { callee, .. } = &n.stmt {
                    out.entry(*callee).or_default().push(LocationId::new(f.id, i as u32));
                }
            }
        }
        out
    }

    pub fn validate(&self) -> Result<(), String> {
        for f in &self.funcs {
            f.validate()?;
        }
        Ok(())
    }
}

/// Restrict a checked program to the functions reachable from `entry`
/// (globals are kept). This is the subprogram every entry-driven pipeline
/// stage analyzes.
pub fn restrict_to_entry(prog: &MiniCProgram, entry: &str) -> Option<MiniCProgram> {
    prog.function(entry)?;
    let mut keep: BTreeSet<String> = BTreeSet::new();
    let mut q = VecDeque::from([entry.to_string()]);
    keep.insert(entry.to_string());
    while let Some(f) = q.pop_front() {
        let Some(f) = prog.function(&f) else { continue };
        walk_stmts(&f.body, &mut |s| {
            if let StmtKind::Call { call } | StmtKind::AssignCall { call, .. } = &s.kind {
                if keep.insert(call.callee.clone()) {
                    q.push_back(call.callee.clone());
                }
            }
        });
    }
    let mut out = prog.clone();
    out.functions.retain(|f| keep.contains(&f.name));
    Some(out)
}

/// Lower a checked program. Panics on unchecked input; run
/// [`check`](crate::frontend::check::check) first.
pub fn build_cfg(prog: MiniCProgram) -> ProgramCfg {
    let objects = build_objects(&prog);
    let func_ids: BTreeMap<&str, FuncId> = prog
        .functions
        .iter()
        .enumerate()
        .map(|(i, f)| (f.name.as_str(), FuncId(i as u32)))
        .collect();

    let mut funcs = Vec::new();
    for (i, f) in prog.functions.iter().enumerate() {
        let id = FuncId(i as u32);
        let mut b = Lowerer {
            objects: &objects,
            func_ids: &func_ids,
            func: id,
            nodes: vec![
                Node { stmt: RStmt::Entry, succs: vec![u32::MAX], pos: f.pos, stmt_id: None, cond_index: 0 },
                Node { stmt: RStmt::Exit, succs: vec![], pos: f.pos, stmt_id: None, cond_index: 0 },
            ],
        };
        let open = b.lower_stmts(&f.body, vec![(ENTRY, 0)]);
        if !open.is_empty() {
            // Fall-through: synthesized, non-explicit return of the zero value.
            let value = match &f.ret {
                RetTy::Void => None,
                RetTy::Val(t) if t.is_ptr() => Some(RExpr::Null),
                RetTy::Val(_) => Some(RExpr::Const(0)),
            };
            let n = b.push_node(
                RStmt::Return { value, explicit: false },
                vec![EXIT],
                f.pos,
                None,
            );
            b.patch(open, n);
        }
        let nodes = b.nodes;
        debug_assert!(
            nodes.iter().all(|n| n.succs.iter().all(|&s| s != u32::MAX)),
            "{}: unpatched successor",
            f.name
        );
        let params = f
            .params
            .iter()
            .map(|p| objects.lookup(Some(id), &p.name).expect("param interned"))
            .collect();
        let locals = f
            .locals
            .iter()
            .map(|l| objects.lookup(Some(id), &l.name).expect("local interned"))
            .collect();
        let fc = FuncCfg {
            id,
            name: f.name.clone(),
            ret: f.ret.clone(),
            params,
            locals,
            is_extern: f.is_extern,
            nodes,
        };
        debug_assert_eq!(fc.validate(), Ok(()));
        funcs.push(fc);
    }

    ProgramCfg { funcs, objects, ast: prog, fire: None }
}

fn build_objects(prog: &MiniCProgram) -> ObjTable {
    let mut t = ObjTable {
        func_names: prog.functions.iter().map(|f| f.name.clone()).collect(),
        ..ObjTable::default()
    };
    let push = |t: &mut ObjTable, name: String, scope: Option<FuncId>, kind: ObjKind, elem_ty: Ty| {
        let id = ObjId(t.objs.len() as u32);
        t.objs.push(ObjInfo { name: name.clone(), kind, elem_ty });
        if !matches!(t.objs[id.0 as usize].kind, ObjKind::Region { .. }) {
            t.by_name.insert((scope, name), id);
        }
        id
    };

    for g in &prog.globals {
        match &g.kind {
            GlobalKind::Scalar { ty, init } => {
                push(&mut t, g.name.clone(), None, ObjKind::Global { init: *init }, ty.clone());
            }
            GlobalKind::Array { elem, len } => {
                push(&mut t, g.name.clone(), None, ObjKind::GlobalArray { len: *len }, elem.clone());
            }
        }
    }
    for (i, f) in prog.functions.iter().enumerate() {
        let fid = FuncId(i as u32);
        for (pi, p) in f.params.iter().enumerate() {
            push(
                &mut t,
                p.name.clone(),
                Some(fid),
                ObjKind::Local { func: fid, param_index: Some(pi as u32) },
                p.ty.clone(),
            );
        }
        for l in &f.locals {
            push(
                &mut t,
                l.name.clone(),
                Some(fid),
                ObjKind::Local { func: fid, param_index: None },
                l.ty.clone(),
            );
        }
    }
    // Regions: one per uninitialized pointer global, then one per pointer
    // parameter, in declaration order. These are the objects pointer inputs
    // may be aimed at.
    let var_count = t.objs.len() as u32;
    for id in 0..var_count {
        let id = ObjId(id);
        let info = t.info(id).clone();
        let make_region = match &info.kind {
            ObjKind::Global { init: None } => info.elem_ty.is_ptr(),
            ObjKind::Local { param_index: Some(_), .. } => info.elem_ty.is_ptr(),
            _ => false,
        };
        if make_region {
            let pointee = info.elem_ty.pointee().expect("pointer type").clone();
            let rid = push(
                &mut t,
                format!("<region:{}>", info.name),
                None,
                ObjKind::Region { owner: id },
                pointee,
            );
            t.region_of.insert(id, rid);
        }
    }
    t
}

/// (node index, successor slot awaiting a target)
type Edge = (u32, usize);

struct Lowerer<'a> {
    objects: &'a ObjTable,
    func_ids: &'a BTreeMap<&'a str, FuncId>,
    func: FuncId,
    nodes: Vec<Node>,
}

impl<'a> Lowerer<'a> {
    fn push_node(
        &mut self,
        stmt: RStmt,
        succs: Vec<u32>,
        pos: Pos,
        stmt_id: Option<StmtId>,
    ) -> u32 {
        let idx = self.nodes.len() as u32;
        self.nodes.push(Node { stmt, succs, pos, stmt_id, cond_index: 0 });
        idx
    }

    fn patch(&mut self, edges: Vec<Edge>, target: u32) {
        for (n, slot) in edges {
            self.nodes[n as usize].succs[slot] = target;
        }
    }

    fn lower_stmts(&mut self, stmts: &[Stmt], mut incoming: Vec<Edge>) -> Vec<Edge> {
        for s in stmts {
            incoming = self.lower_stmt(s, incoming);
        }
        incoming
    }

    fn lower_stmt(&mut self, s: &Stmt, incoming: Vec<Edge>) -> Vec<Edge> {
        match &s.kind {
            StmtKind::Assign { lhs, rhs } => {
                let stmt = RStmt::Assign { dst: self.place(lhs), src: self.expr(rhs) };
                let n = self.push_node(stmt, vec![u32::MAX], s.pos, Some(s.id));
                self.patch(incoming, n);
                vec![(n, 0)]
            }
            StmtKind::Call { call } => {
                let stmt = self.call_stmt(call, None);
                let n = self.push_node(stmt, vec![u32::MAX], s.pos, Some(s.id));
                self.patch(incoming, n);
                vec![(n, 0)]
            }
            StmtKind::AssignCall { lhs, call } => {
                let stmt = self.call_stmt(call, Some(self.place(lhs)));
                let n = self.push_node(stmt, vec![u32::MAX], s.pos, Some(s.id));
                self.patch(incoming, n);
                vec![(n, 0)]
            }
            StmtKind::Fire { machine, label, binder } => {
                let stmt = RStmt::Fire {
                    machine: machine.clone(),
                    label: label.clone(),
                    binder: binder.as_ref().map(|b| self.expr(b)),
                };
                let n = self.push_node(stmt, vec![u32::MAX], s.pos, Some(s.id));
                self.patch(incoming, n);
                vec![(n, 0)]
            }
            StmtKind::Return { value } => {
                let stmt = RStmt::Return {
                    value: value.as_ref().map(|v| self.expr(v)),
                    explicit: true,
                };
                let n = self.push_node(stmt, vec![EXIT], s.pos, Some(s.id));
                self.patch(incoming, n);
                Vec::new()
            }
            StmtKind::If { cond, then_body, else_body } => {
                let mut chain = 0u16;
                let (_, t, f) = self.lower_cond(cond, incoming, s, &mut chain);
                let mut t_exits = self.lower_stmts(then_body, t);
                let e_exits = self.lower_stmts(else_body, f);
                t_exits.extend(e_exits);
                t_exits
            }
            StmtKind::While { cond, body } => {
                let mut chain = 0u16;
                let (first, t, f) = self.lower_cond(cond, incoming, s, &mut chain);
                let body_exits = self.lower_stmts(body, t);
                self.patch(body_exits, first); // back edge(s)
                f
            }
        }
    }

    /// Lower a boolean condition to a chain of branch nodes. Returns the chain
    /// entry node and the open true/false edge lists.
    fn lower_cond(
        &mut self,
        c: &Cond,
        incoming: Vec<Edge>,
        s: &Stmt,
        chain: &mut u16,
    ) -> (u32, Vec<Edge>, Vec<Edge>) {
        match c {
            Cond::Cmp(op, l, r, pos) => {
                let cond = RCond { op: *op, lhs: self.expr(l), rhs: self.expr(r) };
                let n = self.push_node(
                    RStmt::Branch { cond },
                    vec![u32::MAX, u32::MAX],
                    *pos,
                    Some(s.id),
                );
                self.nodes[n as usize].cond_index = *chain;
                *chain += 1;
                self.patch(incoming, n);
                (n, vec![(n, 0)], vec![(n, 1)])
            }
            Cond::And(a, b, _) => {
                let (first, at, af) = self.lower_cond(a, incoming, s, chain);
                let (_, bt, bf) = self.lower_cond(b, at, s, chain);
                (first, bt, [af, bf].concat())
            }
            Cond::Or(a, b, _) => {
                let (first, at, af) = self.lower_cond(a, incoming, s, chain);
                let (_, bt, bf) = self.lower_cond(b, af, s, chain);
                (first, [at, bt].concat(), bf)
            }
            Cond::Not(inner, _) => {
                let (first, t, f) = self.lower_cond(inner, incoming, s, chain);
                (first, f, t)
            }
        }
    }

    fn call_stmt(&self, call: &Call, dst: Option<RPlace>) -> RStmt {
        let callee = *self.func_ids.get(call.callee.as_str()).expect("checked callee");
        RStmt::Call { callee, dst, args: call.args.iter().map(|a| self.expr(a)).collect() }
    }

    fn resolve(&self, name: &str) -> ObjId {
        self.objects.lookup(Some(self.func), name).expect("checked name resolves")
    }

    fn expr(&self, e: &Expr) -> RExpr {
        match e {
            Expr::IntLit(v, _) => RExpr::Const(*v),
            Expr::Null(_) => RExpr::Null,
            Expr::Var(n, _) => {
                let o = self.resolve(n);
                if matches!(self.objects.info(o).kind, ObjKind::GlobalArray { .. }) {
                    RExpr::AddrOfObj(o) // array-to-pointer decay
                } else {
                    RExpr::Load(o)
                }
            }
            Expr::AddrOf(n, _) => RExpr::AddrOfObj(self.resolve(n)),
            Expr::Deref(inner, _) => RExpr::Deref(Box::new(self.expr(inner))),
            Expr::Index(b, i, _) => {
                RExpr::Index(Box::new(self.expr(b)), Box::new(self.expr(i)))
            }
            Expr::Unary(UnOp::Neg, inner, _) => RExpr::Neg(Box::new(self.expr(inner))),
            Expr::Binary(op, l, r, _) => {
                RExpr::Bin(*op, Box::new(self.expr(l)), Box::new(self.expr(r)))
            }
        }
    }

    fn place(&self, lv: &LValue) -> RPlace {
        match lv {
            LValue::Var(n, _) => RPlace::Var(self.resolve(n)),
            LValue::Deref(e, _) => RPlace::Deref(self.expr(e)),
            LValue::Index(b, i, _) => RPlace::Index { base: self.expr(b), idx: self.expr(i) },
        }
    }
}
