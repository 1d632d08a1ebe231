//! Interprocedural static slicing in the style of Weiser.
//!
//! Given criteria — (location, variable set) pairs — the slicer removes
//! every statement that cannot affect any criterion variable's value at its
//! criterion location. Relevance propagates backward from the criteria:
//! a statement joins the slice when it may define a relevant object (writes
//! through pointers count against every points-to target), its reads then
//! become relevant, branches join when a sliced-in statement is
//! control-dependent on them, and call sites route relevance through callee
//! bodies with argument/return binding. The fixpoint guarantees: on every
//! input where the original halts, the sliced program produces the same
//! sequence of criterion-variable values at each criterion location. (The
//! sliced program may halt where the original diverges — removing a loop
//! nobody depends on is the whole point.)
//!
//! Slicing operates on an instrumented program and produces another: the
//! fire statements at error-check locations are the criteria of record, so
//! everything that can influence a machine state survives and everything
//! else — in the running example, the copy loop and the lock calls
//! themselves — goes away.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use crate::frontend::ast::{Cond, Expr, LValue, MiniCProgram, Stmt, StmtId, StmtKind};
use crate::frontend::cfg::{
    build_cfg, FuncCfg, FuncId, LocationId, ObjId, ProgramCfg, RExpr, RPlace, RStmt, ENTRY, EXIT,
};
use crate::frontend::check::check;
use crate::instrument::{attach_runtime, Instrumented};
use crate::pointsto::PointsTo;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SlicingCriterion {
    pub loc: LocationId,
    pub vars: BTreeSet<ObjId>,
}

/// One criterion per error-check location, each observing every machine
/// state variable.
pub fn criteria_from_instrumentation(ip: &Instrumented) -> Vec<SlicingCriterion> {
    let vars: BTreeSet<ObjId> = ip.machine_vars.iter().map(|m| m.state_var).collect();
    ip.error_sites
        .iter()
        .map(|&loc| SlicingCriterion { loc, vars: vars.clone() })
        .collect()
}

#[derive(Debug, Clone)]
pub struct SlicedProgram {
    /// The sliced program, re-instrumented: fire sites, machine variables and
    /// error-check locations all refer to the new (smaller) CFG.
    pub instr: Instrumented,
    /// Surviving statement nodes (and entry/exit nodes), mapped back to
    /// their locations in the input program.
    pub provenance: BTreeMap<LocationId, LocationId>,
    /// Statement nodes in the input program.
    pub total_stmts: usize,
    /// Statement nodes that survived.
    pub kept_stmts: usize,
}

impl SlicedProgram {
    /// Fraction of statements removed.
    pub fn ratio(&self) -> f64 {
        if self.total_stmts == 0 {
            0.0
        } else {
            (self.total_stmts - self.kept_stmts) as f64 / self.total_stmts as f64
        }
    }
}

/// What relevance can attach to: an object's value, or a function's return
/// value (the channel between `return e` and a call's destination).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum Fact {
    Obj(ObjId),
    Ret(FuncId),
}

/// Reads of an expression, conservatively: named loads plus, for every
/// dereference, everything the address may point at.
fn expr_refs(e: &RExpr, pts: &PointsTo, out: &mut BTreeSet<ObjId>) {
    match e {
        RExpr::Const(_) | RExpr::Null | RExpr::AddrOfObj(_) => {}
        RExpr::Load(o) => {
            out.insert(*o);
        }
        RExpr::Deref(inner) => {
            expr_refs(inner, pts, out);
            out.extend(pts.expr_targets(inner));
        }
        RExpr::Index(base, idx) => {
            expr_refs(base, pts, out);
            expr_refs(idx, pts, out);
            out.extend(pts.expr_targets(base));
        }
        RExpr::Neg(inner) => expr_refs(inner, pts, out),
        RExpr::Bin(_, l, r) => {
            expr_refs(l, pts, out);
            expr_refs(r, pts, out);
        }
    }
}

/// Write effect of a place: (may-defined objects, definitely-overwritten
/// object, objects read to evaluate the address).
fn place_effect(
    p: &RPlace,
    pts: &PointsTo,
) -> (BTreeSet<ObjId>, Option<ObjId>, BTreeSet<ObjId>) {
    match p {
        RPlace::Var(o) => (BTreeSet::from([*o]), Some(*o), BTreeSet::new()),
        RPlace::Deref(addr) => {
            let mut refs = BTreeSet::new();
            expr_refs(addr, pts, &mut refs);
            (pts.expr_targets(addr), None, refs)
        }
        RPlace::Index { base, idx } => {
            let mut refs = BTreeSet::new();
            expr_refs(base, pts, &mut refs);
            expr_refs(idx, pts, &mut refs);
            (pts.expr_targets(base), None, refs)
        }
    }
}

/// Per-node dataflow facts (calls to defined functions are handled
/// separately by the propagation).
#[derive(Debug, Default, Clone)]
struct NodeFacts {
    /// May-define (weak).
    defs: BTreeSet<Fact>,
    /// Definitely overwritten — removable from relevance going backward.
    kill: Option<Fact>,
    /// Everything the node reads when it executes.
    refs: BTreeSet<Fact>,
}

struct Slicer<'a> {
    cfg: &'a ProgramCfg,
    pts: &'a PointsTo,
    facts: BTreeMap<LocationId, NodeFacts>,
    /// Objects each function (transitively) may write.
    mods: Vec<BTreeSet<ObjId>>,
    /// Branches each node is directly control-dependent on.
    ctrl: BTreeMap<LocationId, Vec<LocationId>>,
    /// Call sites per callee.
    callers: BTreeMap<FuncId, Vec<LocationId>>,
    /// Explicit return nodes per function.
    returns: Vec<Vec<LocationId>>,

    /// Relevant facts immediately before each location.
    r_before: BTreeMap<LocationId, BTreeSet<Fact>>,
    /// The slice.
    s: BTreeSet<LocationId>,
    /// Count of non-fiat slice members per function; a function is live when
    /// it has any.
    data_kept: Vec<usize>,
    work: VecDeque<LocationId>,
    queued: BTreeSet<LocationId>,
}

impl<'a> Slicer<'a> {
    fn new(ip: &'a Instrumented, pts: &'a PointsTo) -> Self {
        let cfg = &ip.cfg;
        let dispatch: BTreeMap<ObjId, ObjId> =
            ip.machine_vars.iter().map(|m| (m.target, m.state_var)).collect();

        // Direct per-node facts.
        let mut facts: BTreeMap<LocationId, NodeFacts> = BTreeMap::new();
        let mut callers: BTreeMap<FuncId, Vec<LocationId>> = BTreeMap::new();
        let mut returns = vec![Vec::new(); cfg.funcs.len()];
        let mut direct_mods: Vec<BTreeSet<ObjId>> = vec![BTreeSet::new(); cfg.funcs.len()];
        for f in &cfg.funcs {
            for (i, n) in f.nodes.iter().enumerate() {
                let loc = LocationId::new(f.id, i as u32);
                let mut nf = NodeFacts::default();
                match &n.stmt {
                    RStmt::Entry | RStmt::Exit => {}
                    RStmt::Assign { dst, src } => {
                        let (defs, kill, addr_refs) = place_effect(dst, pts);
                        nf.defs = defs.iter().map(|&o| Fact::Obj(o)).collect();
                        nf.kill = kill.map(Fact::Obj);
                        let mut refs = addr_refs;
                        expr_refs(src, pts, &mut refs);
                        nf.refs = refs.into_iter().map(Fact::Obj).collect();
                        direct_mods[f.id.0 as usize].extend(defs);
                    }
                    RStmt::Call { callee, dst, args } => {
                        callers.entry(*callee).or_default().push(loc);
                        let mut refs = BTreeSet::new();
                        for a in args {
                            expr_refs(a, pts, &mut refs);
                        }
                        if let Some(place) = dst {
                            let (defs, kill, addr_refs) = place_effect(place, pts);
                            nf.defs = defs.iter().map(|&o| Fact::Obj(o)).collect();
                            nf.kill = kill.map(Fact::Obj);
                            refs.extend(addr_refs);
                            direct_mods[f.id.0 as usize].extend(defs);
                        }
                        nf.refs = refs.into_iter().map(Fact::Obj).collect();
                    }
                    RStmt::Return { value, explicit } => {
                        nf.defs = BTreeSet::from([Fact::Ret(f.id)]);
                        nf.kill = Some(Fact::Ret(f.id));
                        if let Some(v) = value {
                            let mut refs = BTreeSet::new();
                            expr_refs(v, pts, &mut refs);
                            nf.refs = refs.into_iter().map(Fact::Obj).collect();
                        }
                        if *explicit {
                            returns[f.id.0 as usize].push(loc);
                        }
                    }
                    RStmt::Branch { cond } => {
                        let mut refs = BTreeSet::new();
                        expr_refs(&cond.lhs, pts, &mut refs);
                        expr_refs(&cond.rhs, pts, &mut refs);
                        nf.refs = refs.into_iter().map(Fact::Obj).collect();
                    }
                    RStmt::Fire { binder, .. } => {
                        let touched: BTreeSet<ObjId> = match binder {
                            Some(b) => pts
                                .expr_targets(b)
                                .into_iter()
                                .filter_map(|t| dispatch.get(&t).copied())
                                .collect(),
                            None => dispatch.values().copied().collect(),
                        };
                        let mut refs = BTreeSet::new();
                        if let Some(b) = binder {
                            expr_refs(b, pts, &mut refs);
                        }
                        refs.extend(&touched);
                        nf.defs = touched.iter().map(|&o| Fact::Obj(o)).collect();
                        nf.refs = refs.into_iter().map(Fact::Obj).collect();
                        direct_mods[f.id.0 as usize].extend(touched);
                    }
                }
                facts.insert(loc, nf);
            }
        }

        // Transitive MOD sets over the call graph.
        let mut mods = direct_mods;
        loop {
            let mut grew = false;
            for (callee, sites) in &callers {
                let callee_mods = mods[callee.0 as usize].clone();
                for site in sites {
                    let caller = &mut mods[site.func.0 as usize];
                    let before = caller.len();
                    caller.extend(&callee_mods);
                    grew |= caller.len() != before;
                }
            }
            if !grew {
                break;
            }
        }

        // Direct control dependence via postdominators: a node depends on a
        // branch when it postdominates one branch successor but not the
        // branch itself.
        let mut ctrl: BTreeMap<LocationId, Vec<LocationId>> = BTreeMap::new();
        for f in &cfg.funcs {
            let ipdt = f.ipostdoms();
            for (b, n) in f.nodes.iter().enumerate() {
                if !matches!(n.stmt, RStmt::Branch { .. }) {
                    continue;
                }
                for i in 0..f.nodes.len() {
                    let depends = n.succs.iter().any(|&s| {
                        FuncCfg::dominates(&ipdt, i as u32, s)
                            && !FuncCfg::dominates(&ipdt, i as u32, b as u32)
                    });
                    if depends {
                        ctrl.entry(LocationId::new(f.id, i as u32))
                            .or_default()
                            .push(LocationId::new(f.id, b as u32));
                    }
                }
            }
        }

        Slicer {
            cfg,
            pts,
            facts,
            mods,
            ctrl,
            callers,
            returns,
            r_before: BTreeMap::new(),
            s: BTreeSet::new(),
            data_kept: vec![0; cfg.funcs.len()],
            work: VecDeque::new(),
            queued: BTreeSet::new(),
        }
    }

    fn push(&mut self, loc: LocationId) {
        if self.queued.insert(loc) {
            self.work.push_back(loc);
        }
    }

    /// Revisit everything whose relevance computation reads `loc`'s.
    fn push_dependents(&mut self, loc: LocationId) {
        let f = &self.cfg.funcs[loc.func.0 as usize];
        // Intra-function predecessors (covers the around-the-call path too).
        for (i, n) in f.nodes.iter().enumerate() {
            if n.succs.contains(&loc.index) {
                self.push(LocationId::new(loc.func, i as u32));
                // A successor of a call to a defined function also feeds the
                // callee's exit.
                if let RStmt::Call { callee, .. } = &n.stmt {
                    if !self.cfg.funcs[callee.0 as usize].is_extern {
                        self.push(LocationId::new(*callee, EXIT));
                    }
                }
            }
        }
        // A function entry's relevance binds back into every call site.
        if loc.index == ENTRY {
            if let Some(sites) = self.callers.get(&loc.func) {
                for &site in sites.clone().iter() {
                    self.push(site);
                }
            }
        }
    }

    fn add_relevant(&mut self, loc: LocationId, fact: Fact) -> bool {
        if self.r_before.entry(loc).or_default().insert(fact) {
            self.push(loc);
            self.push_dependents(loc);
            true
        } else {
            false
        }
    }

    /// Put a node in the slice: its reads become relevant before it, its
    /// controlling branches join too, and — first time a function gains a
    /// non-fiat member — the function's explicit returns are pinned to keep
    /// its control flow intact.
    fn keep(&mut self, loc: LocationId, fiat_return: bool) {
        if !self.s.insert(loc) {
            return;
        }
        let refs = self.facts.get(&loc).map(|nf| nf.refs.clone()).unwrap_or_default();
        for fact in refs {
            self.add_relevant(loc, fact);
        }
        for b in self.ctrl.get(&loc).cloned().unwrap_or_default() {
            self.keep(b, false);
        }
        if !fiat_return {
            let fi = loc.func.0 as usize;
            self.data_kept[fi] += 1;
            if self.data_kept[fi] == 1 {
                for r in self.returns[fi].clone() {
                    self.keep(r, true);
                }
                // The call-removal decision for this function changed.
                if let Some(sites) = self.callers.get(&loc.func) {
                    for &site in sites.clone().iter() {
                        self.push(site);
                    }
                }
            }
        }
        self.push(loc);
    }

    fn func_live(&self, f: FuncId) -> bool {
        self.data_kept[f.0 as usize] > 0
    }

    /// Facts that travel from a call's successor back through the callee
    /// body: object facts pass unchanged; the callee's return fact joins
    /// when the call's destination is relevant.
    fn through_callee(
        &self,
        call: LocationId,
        callee: FuncId,
        after: &BTreeSet<Fact>,
    ) -> BTreeSet<Fact> {
        let mut out: BTreeSet<Fact> =
            after.iter().filter(|f| matches!(f, Fact::Obj(_))).copied().collect();
        if self.dst_relevant(call, after) {
            out.insert(Fact::Ret(callee));
        }
        out
    }

    fn dst_relevant(&self, call: LocationId, after: &BTreeSet<Fact>) -> bool {
        let RStmt::Call { dst: Some(place), .. } = &self.cfg.node(call).stmt else {
            return false;
        };
        let (defs, _, _) = place_effect(place, self.pts);
        defs.iter().any(|o| after.contains(&Fact::Obj(*o)))
    }

    fn run(&mut self, criteria: &[SlicingCriterion]) {
        for c in criteria {
            for &v in &c.vars {
                self.add_relevant(c.loc, Fact::Obj(v));
            }
            self.keep(c.loc, false);
        }
        while let Some(loc) = self.work.pop_front() {
            self.queued.remove(&loc);
            self.visit(loc);
        }
    }

    fn visit(&mut self, loc: LocationId) {
        let f = &self.cfg.funcs[loc.func.0 as usize];
        let node = &f.nodes[loc.index as usize];

        // Relevance after the node.
        let mut after: BTreeSet<Fact> = BTreeSet::new();
        if loc.index == EXIT {
            // A function exit continues at every call site's successors.
            if let Some(sites) = self.callers.get(&loc.func) {
                for &site in sites {
                    let caller = &self.cfg.funcs[site.func.0 as usize];
                    for &s in &caller.nodes[site.index as usize].succs {
                        let succ = LocationId::new(site.func, s);
                        if let Some(r) = self.r_before.get(&succ) {
                            after.extend(self.through_callee(site, loc.func, r));
                        }
                    }
                }
            }
        } else {
            for &s in &node.succs {
                if let Some(r) = self.r_before.get(&LocationId::new(loc.func, s)) {
                    after.extend(r.iter().copied());
                }
            }
        }

        match &node.stmt {
            RStmt::Call { callee, args, .. } if !self.cfg.funcs[callee.0 as usize].is_extern => {
                let callee = *callee;
                let nf = self.facts[&loc].clone();
                // In the slice if it writes something relevant (through its
                // destination or anything the callee may modify), if the
                // callee needs arguments bound, or if the callee has sliced-in
                // statements of its own.
                let dst_hit = nf.defs.iter().any(|d| after.contains(d));
                let mod_hit = self.mods[callee.0 as usize]
                    .iter()
                    .any(|o| after.contains(&Fact::Obj(*o)));
                let entry_r = self
                    .r_before
                    .get(&LocationId::new(callee, ENTRY))
                    .cloned()
                    .unwrap_or_default();
                let param_hit = self.cfg.funcs[callee.0 as usize]
                    .params
                    .iter()
                    .any(|p| entry_r.contains(&Fact::Obj(*p)));
                if dst_hit || mod_hit || param_hit || self.func_live(callee) {
                    self.keep(loc, false);
                }
                // Route relevance backward: everything except the
                // overwritten destination survives the call...
                let killed = nf.kill;
                for fact in after.iter() {
                    if Some(*fact) != killed {
                        self.add_relevant(loc, *fact);
                    }
                }
                // ...and whatever the callee needs at entry maps back:
                // parameters to their argument reads, other facts unchanged.
                let params = &self.cfg.funcs[callee.0 as usize].params;
                for fact in entry_r {
                    match fact {
                        Fact::Obj(o) => match params.iter().position(|&p| p == o) {
                            Some(k) => {
                                let mut refs = BTreeSet::new();
                                expr_refs(&args[k], self.pts, &mut refs);
                                for r in refs {
                                    self.add_relevant(loc, Fact::Obj(r));
                                }
                            }
                            None => {
                                self.add_relevant(loc, Fact::Obj(o));
                            }
                        },
                        Fact::Ret(_) => {}
                    }
                }
            }
            _ => {
                let nf = self.facts.get(&loc).cloned().unwrap_or_default();
                if nf.defs.iter().any(|d| after.contains(d)) {
                    // Explicit returns may only be kept by liveness fiat;
                    // their *relevance* (the return value) still counts as
                    // data.
                    let fiat = matches!(node.stmt, RStmt::Return { .. })
                        && !after.contains(&Fact::Ret(loc.func));
                    self.keep(loc, fiat);
                }
                for fact in after {
                    if Some(fact) != nf.kill {
                        self.add_relevant(loc, fact);
                    }
                }
            }
        }
    }
}

/// Slice `ip` against `criteria`. `pts` must be the points-to solution for
/// `ip.cfg`.
pub fn slice(ip: &Instrumented, criteria: &[SlicingCriterion], pts: &PointsTo) -> SlicedProgram {
    assert!(!criteria.is_empty(), "slicing requires at least one criterion");
    let mut sl = Slicer::new(ip, pts);
    sl.run(criteria);

    // Keep the explicit returns of live functions even when no criterion
    // reached them: run() already pinned them via keep(); nothing to do here.
    let kept_ids: BTreeSet<StmtId> = sl
        .s
        .iter()
        .filter_map(|&loc| ip.cfg.node(loc).stmt_id)
        .collect();

    // Rebuild the AST: filter statements, drop now-unused local
    // declarations, keep globals and signatures as they are.
    let mut ast = ip.cfg.ast.clone();
    for f in &mut ast.functions {
        let body = std::mem::take(&mut f.body);
        f.body = filter_stmts(body, &kept_ids);
        let mut used = BTreeSet::new();
        used_names(&f.body, &mut used);
        f.locals.retain(|l| used.contains(&l.name));
    }
    check(&ast).expect("slicing must preserve well-formedness");
    let mut cfg = build_cfg(ast);

    let vars: Vec<(String, String)> = ip
        .machine_vars
        .iter()
        .map(|m| (ip.cfg.objects.display(m.target), m.name.clone()))
        .collect();
    let (machine_vars, fire_sites, error_sites) = attach_runtime(&mut cfg, &ip.spec, &vars);

    // Provenance by statement identity (+ condition index within a
    // statement's branch chain), plus the structural entry/exit nodes.
    let mut old_by_id: BTreeMap<(StmtId, u16), LocationId> = BTreeMap::new();
    for f in &ip.cfg.funcs {
        for (i, n) in f.nodes.iter().enumerate() {
            if let Some(id) = n.stmt_id {
                old_by_id.insert((id, n.cond_index), LocationId::new(f.id, i as u32));
            }
        }
    }
    let mut provenance = BTreeMap::new();
    let mut kept_stmts = 0usize;
    for f in &cfg.funcs {
        provenance.insert(LocationId::new(f.id, ENTRY), LocationId::new(f.id, ENTRY));
        provenance.insert(LocationId::new(f.id, EXIT), LocationId::new(f.id, EXIT));
        for (i, n) in f.nodes.iter().enumerate() {
            if let Some(id) = n.stmt_id {
                kept_stmts += 1;
                let old = old_by_id[&(id, n.cond_index)];
                provenance.insert(LocationId::new(f.id, i as u32), old);
            }
        }
    }
    let total_stmts =
        ip.cfg.funcs.iter().flat_map(|f| &f.nodes).filter(|n| n.stmt_id.is_some()).count();

    SlicedProgram {
        instr: Instrumented {
            cfg,
            spec: ip.spec.clone(),
            machine_vars,
            fire_sites,
            error_sites,
            warnings: Vec::new(),
        },
        provenance,
        total_stmts,
        kept_stmts,
    }
}

/// Keep a statement when any of its CFG nodes was sliced in; branching
/// statements also survive structurally when a nested statement does.
fn filter_stmts(stmts: Vec<Stmt>, keep: &BTreeSet<StmtId>) -> Vec<Stmt> {
    let mut out = Vec::new();
    for mut s in stmts {
        match &mut s.kind {
            StmtKind::If { then_body, else_body, .. } => {
                let t = filter_stmts(std::mem::take(then_body), keep);
                let e = filter_stmts(std::mem::take(else_body), keep);
                if keep.contains(&s.id) || !t.is_empty() || !e.is_empty() {
                    *then_body = t;
                    *else_body = e;
                    out.push(s);
                }
            }
            StmtKind::While { body, .. } => {
                let b = filter_stmts(std::mem::take(body), keep);
                if keep.contains(&s.id) || !b.is_empty() {
                    *body = b;
                    out.push(s);
                }
            }
            _ => {
                if keep.contains(&s.id) {
                    out.push(s);
                }
            }
        }
    }
    out
}

fn used_names(stmts: &[Stmt], out: &mut BTreeSet<String>) {
    fn expr(e: &Expr, out: &mut BTreeSet<String>) {
        match e {
            Expr::IntLit(..) | Expr::Null(_) => {}
            Expr::Var(n, _) | Expr::AddrOf(n, _) => {
                out.insert(n.clone());
            }
            Expr::Deref(i, _) | Expr::Unary(_, i, _) => expr(i, out),
            Expr::Index(b, i, _) => {
                expr(b, out);
                expr(i, out);
            }
            Expr::Binary(_, l, r, _) => {
                expr(l, out);
                expr(r, out);
            }
        }
    }
    fn cond(c: &Cond, out: &mut BTreeSet<String>) {
        match c {
            Cond::Cmp(_, l, r, _) => {
                expr(l, out);
                expr(r, out);
            }
            Cond::And(a, b, _) | Cond::Or(a, b, _) => {
                cond(a, out);
                cond(b, out);
            }
            Cond::Not(i, _) => cond(i, out),
        }
    }
    fn lvalue(l: &LValue, out: &mut BTreeSet<String>) {
        match l {
            LValue::Var(n, _) => {
                out.insert(n.clone());
            }
            LValue::Deref(e, _) => expr(e, out),
            LValue::Index(b, i, _) => {
                expr(b, out);
                expr(i, out);
            }
        }
    }
    for s in stmts {
        match &s.kind {
            StmtKind::Assign { lhs, rhs } => {
                lvalue(lhs, out);
                expr(rhs, out);
            }
            StmtKind::Call { call } => {
                for a in &call.args {
                    expr(a, out);
                }
            }
            StmtKind::AssignCall { lhs, call } => {
                lvalue(lhs, out);
                for a in &call.args {
                    expr(a, out);
                }
            }
            StmtKind::If { cond: c, then_body, else_body } => {
                cond(c, out);
                used_names(then_body, out);
                used_names(else_body, out);
            }
            StmtKind::While { cond: c, body } => {
                cond(c, out);
                used_names(body, out);
            }
            StmtKind::Return { value } => {
                if let Some(v) = value {
                    expr(v, out);
                }
            }
            StmtKind::Fire { binder, .. } => {
                if let Some(b) = binder {
                    expr(b, out);
                }
            }
        }
    }
}

/// Statement counts for a program, used by reporting.
pub fn stmt_count(prog: &MiniCProgram) -> usize {
    fn count(stmts: &[Stmt]) -> usize {
        stmts
            .iter()
            .map(|s| match &s.kind {
                StmtKind::If { then_body, else_body, .. } => {
                    1 + count(then_body) + count(else_body)
                }
                StmtKind::While { body, .. } => 1 + count(body),
                _ => 1,
            })
            .sum()
    }
    prog.functions.iter().map(|f| count(&f.body)).sum()
}
