//! Inclusion-based (Andersen-style) flow-insensitive points-to analysis.
//!
//! Every object — a pointer variable is a one-cell object like any other —
//! gets one set: the objects its cells may point at. Assignments propagate
//! sets, `p = &a` seeds `{a}`, dereferencing composes through the sets, and
//! call sites bind arguments to parameters context-insensitively. Pointer
//! inputs are grounded by the synthesized regions from the object table:
//! every uninitialized pointer global points at its region, and so does every
//! pointer parameter of a function nobody in the analyzed program calls —
//! those parameters are program inputs, everything else gets its values from
//! actual call sites.
//!
//! The result is a sound over-approximation: any address a variable holds in
//! any concrete run is in its set. The solver is a deterministic FIFO
//! worklist; output ordering is lexicographic.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use crate::frontend::cfg::{ObjId, ProgramCfg, RExpr, RPlace, RStmt};

/// The solved map. Query with [`of`](PointsTo::of) and
/// [`targets_of`](PointsTo::targets_of).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PointsTo {
    pts: BTreeMap<ObjId, BTreeSet<ObjId>>,
}

/// A match site whose binder can never reference a tracked object.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EmptyTargetSet;

impl std::fmt::Display for EmptyTargetSet {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "match site has an empty target set (no tracked object can reach it)")
    }
}

impl std::error::Error for EmptyTargetSet {}

static EMPTY: BTreeSet<ObjId> = BTreeSet::new();

impl PointsTo {
    /// Objects the cells of `o` may point at.
    pub fn of(&self, o: ObjId) -> &BTreeSet<ObjId> {
        self.pts.get(&o).unwrap_or(&EMPTY)
    }

    /// Objects an address expression may evaluate to: `&x` yields `{x}`, a
    /// pointer variable yields its set, `*p` and `p[i]` yield the union over
    /// the cells `p` may point at.
    pub fn expr_targets(&self, e: &RExpr) -> BTreeSet<ObjId> {
        match e {
            RExpr::AddrOfObj(o) => BTreeSet::from([*o]),
            RExpr::Load(o) => self.of(*o).clone(),
            RExpr::Deref(b) | RExpr::Index(b, _) => {
                let mut out = BTreeSet::new();
                for o in self.expr_targets(b) {
                    out.extend(self.of(o).iter().copied());
                }
                out
            }
            RExpr::Const(_) | RExpr::Null | RExpr::Neg(_) | RExpr::Bin(..) => BTreeSet::new(),
        }
    }

    /// Union of [`expr_targets`](Self::expr_targets) over a site's binder
    /// expressions; empty unions are surfaced as an error so callers can skip
    /// the site and warn.
    pub fn targets_of(&self, args: &[RExpr]) -> Result<BTreeSet<ObjId>, EmptyTargetSet> {
        let mut out = BTreeSet::new();
        for a in args {
            out.extend(self.expr_targets(a));
        }
        if out.is_empty() {
            Err(EmptyTargetSet)
        } else {
            Ok(out)
        }
    }

    /// Sorted `var -> {obj,...}` lines for every address-typed named variable.
    pub fn render(&self, cfg: &ProgramCfg) -> String {
        let mut lines = Vec::new();
        for o in cfg.objects.ids() {
            let info = cfg.objects.info(o);
            if info.is_region() || !info.elem_ty.is_ptr() {
                continue;
            }
            let mut targets: Vec<String> =
                self.of(o).iter().map(|&t| cfg.objects.display(t)).collect();
            targets.sort();
            lines.push(format!("{} -> {{{}}}", cfg.objects.display(o), targets.join(", ")));
        }
        lines.sort();
        let mut out = lines.join("\n");
        if !out.is_empty() {
            out.push('\n');
        }
        out
    }
}

/// Solver node: an object's cell contents, a function's return value, or an
/// intermediate expression value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum PtVar {
    Obj(ObjId),
    Ret(u32),
    Tmp(u32),
}

#[derive(Default)]
struct Solver {
    pts: BTreeMap<PtVar, BTreeSet<ObjId>>,
    succs: BTreeMap<PtVar, BTreeSet<PtVar>>,
    /// `*base` flows into dst for every object base points at.
    loads: BTreeMap<PtVar, Vec<PtVar>>,
    /// src flows into `*base` for every object base points at.
    stores: BTreeMap<PtVar, Vec<PtVar>>,
    work: VecDeque<PtVar>,
    queued: BTreeSet<PtVar>,
    tmp_count: u32,
}

impl Solver {
    fn tmp(&mut self) -> PtVar {
        self.tmp_count += 1;
        PtVar::Tmp(self.tmp_count - 1)
    }

    fn enqueue(&mut self, v: PtVar) {
        if self.queued.insert(v) {
            self.work.push_back(v);
        }
    }

    fn seed(&mut self, v: PtVar, objs: impl IntoIterator<Item = ObjId>) {
        let set = self.pts.entry(v).or_default();
        let before = set.len();
        set.extend(objs);
        if set.len() != before {
            self.enqueue(v);
        }
    }

    /// pts(a) ⊆ pts(b)
    fn edge(&mut self, a: PtVar, b: PtVar) {
        if a == b || !self.succs.entry(a).or_default().insert(b) {
            return;
        }
        let add: Vec<ObjId> =
            self.pts.get(&a).map(|s| s.iter().copied().collect()).unwrap_or_default();
        if !add.is_empty() {
            self.seed(b, add);
        }
    }

    fn solve(&mut self) {
        while let Some(v) = self.work.pop_front() {
            self.queued.remove(&v);
            let objs: Vec<ObjId> =
                self.pts.get(&v).map(|s| s.iter().copied().collect()).unwrap_or_default();
            for dst in self.loads.get(&v).cloned().unwrap_or_default() {
                for &o in &objs {
                    self.edge(PtVar::Obj(o), dst);
                }
            }
            for src in self.stores.get(&v).cloned().unwrap_or_default() {
                for &o in &objs {
                    self.edge(src, PtVar::Obj(o));
                }
            }
            for succ in self.succs.get(&v).cloned().unwrap_or_default() {
                let add: Vec<ObjId> = objs
                    .iter()
                    .filter(|o| !self.pts.get(&succ).is_some_and(|s| s.contains(o)))
                    .copied()
                    .collect();
                if !add.is_empty() {
                    self.seed(succ, add);
                }
            }
        }
    }

    /// The solver node for an address-valued expression, or `None` for
    /// expressions that never carry an address (arithmetic, `NULL`).
    fn eval(&mut self, cfg: &ProgramCfg, e: &RExpr) -> Option<PtVar> {
        match e {
            RExpr::Const(_) | RExpr::Null | RExpr::Neg(_) | RExpr::Bin(..) => None,
            RExpr::Load(o) => {
                cfg.objects.info(*o).elem_ty.is_ptr().then_some(PtVar::Obj(*o))
            }
            RExpr::AddrOfObj(o) => {
                let t = self.tmp();
                self.seed(t, [*o]);
                Some(t)
            }
            RExpr::Deref(b) | RExpr::Index(b, _) => {
                let base = self.eval(cfg, b)?;
                let t = self.tmp();
                self.loads.entry(base).or_default().push(t);
                self.enqueue(base);
                Some(t)
            }
        }
    }

    /// Flow `src` into an assignment target.
    fn flow_into_place(&mut self, cfg: &ProgramCfg, place: &RPlace, src: PtVar) {
        match place {
            RPlace::Var(o) => {
                if cfg.objects.info(*o).elem_ty.is_ptr() {
                    self.edge(src, PtVar::Obj(*o));
                }
            }
            RPlace::Deref(b) | RPlace::Index { base: b, .. } => {
                if let Some(base) = self.eval(cfg, b) {
                    self.stores.entry(base).or_default().push(src);
                    self.enqueue(base);
                }
            }
        }
    }
}

/// Solve the whole given program. Callers that care about a specific entry
/// point restrict the program first (see
/// [`restrict_to_entry`](crate::frontend::restrict_to_entry)); parameters of
/// functions without call sites are treated as inputs aimed at their regions.
pub fn andersen(cfg: &ProgramCfg) -> PointsTo {
    let mut s = Solver::default();

    // Input seeding.
    for o in cfg.objects.ids() {
        if let Some(region) = cfg.objects.region_for(o) {
            use crate::frontend::cfg::ObjKind;
            let is_input = match cfg.objects.info(o).kind {
                ObjKind::Global { .. } => true,
                ObjKind::Local { func, .. } => {
                    !cfg.funcs.iter().flat_map(|f| &f.nodes).any(|n| {
                        matches!(&n.stmt, RStmt::Call { callee, .. } if *callee == func)
                    })
                }
                _ => false,
            };
            if is_input {
                s.seed(PtVar::Obj(o), [region]);
            }
        }
    }

    // Constraints from every statement.
    for f in &cfg.funcs {
        for n in &f.nodes {
            match &n.stmt {
                RStmt::Assign { dst, src } => {
                    if let Some(v) = s.eval(cfg, src) {
                        s.flow_into_place(cfg, dst, v);
                    }
                }
                RStmt::Call { callee, dst, args } => {
                    let cf = cfg.func(*callee);
                    for (i, &p) in cf.params.iter().enumerate() {
                        if !cfg.objects.info(p).elem_ty.is_ptr() {
                            continue;
                        }
                        if let Some(v) = args.get(i).and_then(|a| s.eval(cfg, a)) {
                            s.edge(v, PtVar::Obj(p));
                        }
                    }
                    if let Some(place) = dst {
                        s.flow_into_place(cfg, place, PtVar::Ret(callee.0));
                    }
                }
                RStmt::Return { value: Some(v), .. } => {
                    if let Some(node) = s.eval(cfg, v) {
                        s.edge(node, PtVar::Ret(f.id.0));
                    }
                }
                _ => {}
            }
        }
    }

    s.solve();

    let pts = s
        .pts
        .into_iter()
        .filter_map(|(v, set)| match v {
            PtVar::Obj(o) if !set.is_empty() => Some((o, set)),
            _ => None,
        })
        .collect();
    PointsTo { pts }
}
