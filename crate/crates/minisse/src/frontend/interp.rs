//! Concrete reference interpreter over the CFG IR.
//!
//! This is the ground truth the rest of the pipeline is measured against: the
//! symbolic executor must agree with it path by path, and replay uses it to
//! confirm reported bugs. Execution is small-step over CFG nodes under a step
//! budget, with every memory access bounds-checked.
//!
//! Evaluation order is fixed: an assignment evaluates its right-hand side,
//! then the destination address; a call evaluates the destination address
//! first, then arguments left to right, then transfers control. Because MiniC
//! has no recursion, each object gets exactly one storage slot, so the store
//! is a flat `ObjId`-indexed table.

use std::collections::BTreeMap;

use crate::frontend::ast::{BinOp, RetTy};
use crate::frontend::cfg::*;

/// A concrete pointer: null, or an offset into an object.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum CPtr {
    Null,
    Addr { obj: ObjId, off: i64 },
}

/// A concrete value. Integers are kept canonical: sign-extended from the
/// configured cell width.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum CVal {
    Int(i64),
    Ptr(CPtr),
}

impl CVal {
    pub const NULL: CVal = CVal::Ptr(CPtr::Null);

    pub fn addr(obj: ObjId, off: i64) -> CVal {
        CVal::Ptr(CPtr::Addr { obj, off })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Fault {
    NullDeref { loc: LocationId },
    OutOfBounds { loc: LocationId, obj: ObjId, off: i64, len: u32 },
    /// A typestate machine stepped into an error state.
    AssertionFailure { loc: LocationId, machine: String, target: ObjId, error_state: String },
}

impl Fault {
    pub fn loc(&self) -> LocationId {
        match self {
            Fault::NullDeref { loc }
            | Fault::OutOfBounds { loc, .. }
            | Fault::AssertionFailure { loc, .. } => *loc,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Outcome {
    Returned(Option<CVal>),
    Fault(Fault),
    BudgetExhausted,
}

#[derive(Debug, Clone)]
pub struct TraceEntry {
    pub loc: LocationId,
    /// Watched values, sampled before the node executes.
    pub vals: Vec<CVal>,
}

#[derive(Debug, Clone)]
pub struct RunResult {
    pub outcome: Outcome,
    pub steps: u64,
    pub trace: Vec<TraceEntry>,
    /// Final store, for oracle comparisons in tests.
    pub store: Vec<Vec<CVal>>,
}

/// Inputs for one run, resolved against the program being executed. Missing
/// entries default to zero values (0 / NULL).
#[derive(Debug, Clone, Default)]
pub struct RunInputs {
    /// Entry-function arguments, positional.
    pub args: Vec<CVal>,
    /// Overrides for scalar globals.
    pub globals: BTreeMap<ObjId, CVal>,
    /// Overrides for array and region cells.
    pub cells: BTreeMap<(ObjId, i64), CVal>,
}

#[derive(Debug, Clone)]
pub struct InterpOptions {
    /// Arithmetic cell width in bits: 8, 16, or 32.
    pub int_width: u32,
    /// Cell count of synthesized pointer-input regions.
    pub ptr_elems: u32,
    /// Maximum number of CFG nodes to execute.
    pub step_budget: u64,
    /// Objects whose first cell is sampled into the trace at every step.
    pub watch: Vec<ObjId>,
    pub record_trace: bool,
}

impl Default for InterpOptions {
    fn default() -> Self {
        InterpOptions {
            int_width: 32,
            ptr_elems: 16,
            step_budget: 1_000_000,
            watch: Vec::new(),
            record_trace: false,
        }
    }
}

pub fn run(cfg: &ProgramCfg, entry: FuncId, inputs: &RunInputs, opts: &InterpOptions) -> RunResult {
    Interp::new(cfg, opts).run(entry, inputs)
}

struct Frame {
    func: FuncId,
    /// Next node to execute.
    node: u32,
    /// Where the pending callee's return value lands, if anywhere.
    pending_dst: Option<(ObjId, i64)>,
}

struct Interp<'a> {
    cfg: &'a ProgramCfg,
    opts: &'a InterpOptions,
    store: Vec<Vec<CVal>>,
    frames: Vec<Frame>,
    steps: u64,
    trace: Vec<TraceEntry>,
}

impl<'a> Interp<'a> {
    fn new(cfg: &'a ProgramCfg, opts: &'a InterpOptions) -> Self {
        let shift = 64 - opts.int_width;
        let canon = |v: i64| ((v as u64) << shift) as i64 >> shift;
        let store = cfg
            .objects
            .ids()
            .map(|o| {
                let info = cfg.objects.info(o);
                let len = cfg.objects.fixed_elems(o).unwrap_or(opts.ptr_elems) as usize;
                let zero = if info.elem_ty.is_ptr() { CVal::NULL } else { CVal::Int(0) };
                let mut cells = vec![zero; len];
                if let ObjKind::Global { init: Some(init) } = &info.kind {
                    cells[0] = match init {
                        crate::frontend::ast::ConstInit::Int(v) => CVal::Int(canon(*v)),
                        crate::frontend::ast::ConstInit::Null => CVal::NULL,
                    };
                }
                cells
            })
            .collect();
        Interp { cfg, opts, store, frames: Vec::new(), steps: 0, trace: Vec::new() }
    }

    fn canon(&self, v: i64) -> i64 {
        let w = self.opts.int_width;
        debug_assert!(matches!(w, 8 | 16 | 32));
        let shift = 64 - w;
        ((v as u64) << shift) as i64 >> shift
    }

    fn canon_val(&self, v: CVal) -> CVal {
        match v {
            CVal::Int(i) => CVal::Int(self.canon(i)),
            p => p,
        }
    }

    fn obj_len(&self, o: ObjId) -> u32 {
        self.cfg.objects.fixed_elems(o).unwrap_or(self.opts.ptr_elems)
    }

    fn run(mut self, entry: FuncId, inputs: &RunInputs) -> RunResult {
        for (&g, &v) in &inputs.globals {
            self.store[g.0 as usize][0] = self.canon_val(v);
        }
        for (&(o, off), &v) in &inputs.cells {
            let len = self.obj_len(o) as i64;
            if (0..len).contains(&off) {
                self.store[o.0 as usize][off as usize] = self.canon_val(v);
            }
        }
        self.enter(entry, {
            let f = self.cfg.func(entry);
            (0..f.params.len())
                .map(|i| {
                    let v = inputs.args.get(i).copied().unwrap_or_else(|| {
                        if self.cfg.objects.info(f.params[i]).elem_ty.is_ptr() {
                            CVal::NULL
                        } else {
                            CVal::Int(0)
                        }
                    });
                    self.canon_val(v)
                })
                .collect()
        });

        let outcome = loop {
            match self.step() {
                Ok(Some(out)) => break out,
                Ok(None) => {}
                Err(f) => break Outcome::Fault(f),
            }
        };
        RunResult { outcome, steps: self.steps, trace: self.trace, store: self.store }
    }

    /// Zero the callee's locals, bind arguments, and push its frame.
    fn enter(&mut self, callee: FuncId, args: Vec<CVal>) {
        let f = self.cfg.func(callee);
        for &l in f.params.iter().chain(&f.locals) {
            let zero = if self.cfg.objects.info(l).elem_ty.is_ptr() {
                CVal::NULL
            } else {
                CVal::Int(0)
            };
            self.store[l.0 as usize][0] = zero;
        }
        for (i, v) in args.into_iter().enumerate() {
            if let Some(&p) = f.params.get(i) {
                self.store[p.0 as usize][0] = v;
            }
        }
        self.frames.push(Frame { func: callee, node: ENTRY, pending_dst: None });
    }

    /// Execute one node. `Ok(Some(_))` ends the run.
    fn step(&mut self) -> Result<Option<Outcome>, Fault> {
        if self.steps >= self.opts.step_budget {
            return Ok(Some(Outcome::BudgetExhausted));
        }
        let frame = self.frames.last().expect("non-empty stack while stepping");
        let (func, index) = (frame.func, frame.node);
        let loc = LocationId::new(func, index);
        let node = &self.cfg.funcs[func.0 as usize].nodes[index as usize];
        self.steps += 1;
        if self.opts.record_trace {
            let vals = self
                .opts
                .watch
                .iter()
                .map(|&o| self.store[o.0 as usize][0])
                .collect();
            self.trace.push(TraceEntry { loc, vals });
        }

        match &node.stmt {
            RStmt::Entry => {
                self.frames.last_mut().unwrap().node = node.succs[0];
            }
            RStmt::Exit => {
                // Frame ends. Return values are delivered by the Return node
                // that routed here, stashed in `pending_dst` of the caller.
                unreachable!("exit is reached via Return, which pops the frame");
            }
            RStmt::Assign { dst, src } => {
                let v = self.eval(src, loc)?;
                let (obj, off) = self.place_addr(dst, loc)?;
                self.write(obj, off, v, loc)?;
                self.frames.last_mut().unwrap().node = node.succs[0];
            }
            RStmt::Branch { cond } => {
                let l = self.eval(&cond.lhs, loc)?;
                let r = self.eval(&cond.rhs, loc)?;
                let taken = match (l, r) {
                    (CVal::Int(a), CVal::Int(b)) => cond.op.eval(a, b),
                    (CVal::Ptr(a), CVal::Ptr(b)) => match cond.op {
                        crate::frontend::ast::CmpOp::Eq => a == b,
                        crate::frontend::ast::CmpOp::Ne => a != b,
                        _ => unreachable!("checked: pointer comparison is Eq/Ne"),
                    },
                    _ => unreachable!("checked: comparison operands agree"),
                };
                let next = if taken { node.succs[0] } else { node.succs[1] };
                self.frames.last_mut().unwrap().node = next;
            }
            RStmt::Call { callee, dst, args } => {
                let dst_addr = match dst {
                    Some(p) => Some(self.place_addr(p, loc)?),
                    None => None,
                };
                let mut vals = Vec::with_capacity(args.len());
                for a in args {
                    vals.push(self.eval(a, loc)?);
                }
                {
                    let f = self.frames.last_mut().unwrap();
                    f.node = node.succs[0];
                    f.pending_dst = dst_addr;
                }
                self.enter(*callee, vals);
            }
            RStmt::Return { value, .. } => {
                let v = match value {
                    Some(e) => Some(self.eval(e, loc)?),
                    None => None,
                };
                self.frames.pop();
                match self.frames.last_mut() {
                    None => return Ok(Some(Outcome::Returned(v))),
                    Some(caller) => {
                        if let Some((obj, off)) = caller.pending_dst.take() {
                            let v = v.expect("checked: value call has a value");
                            self.write(obj, off, v, loc)?;
                        }
                    }
                }
            }
            RStmt::Fire { label, binder, .. } => {
                self.fire(label, binder.as_ref(), loc)?;
                self.frames.last_mut().unwrap().node = node.succs[0];
            }
        }
        Ok(None)
    }

    /// Step the machine(s) a `__fire` addresses. Without a runtime attached
    /// the statement is inert.
    fn fire(
        &mut self,
        label: &str,
        binder: Option<&RExpr>,
        loc: LocationId,
    ) -> Result<(), Fault> {
        let Some(rt) = &self.cfg.fire else { return Ok(()) };
        let rt = rt.clone(); // tiny table; simplest way past the borrow
        match binder {
            Some(b) => match self.eval(b, loc)? {
                CVal::Ptr(CPtr::Addr { obj, .. }) => {
                    if let Some(&sv) = rt.dispatch.get(&obj) {
                        self.fire_on(&rt, obj, sv, label, loc)?;
                    }
                }
                // NULL or arithmetic binder: no tracked target, no effect.
                _ => {}
            },
            None => {
                for (&target, &sv) in &rt.dispatch {
                    self.fire_on(&rt, target, sv, label, loc)?;
                }
            }
        }
        Ok(())
    }

    fn fire_on(
        &mut self,
        rt: &FireRuntime,
        target: ObjId,
        state_var: ObjId,
        label: &str,
        loc: LocationId,
    ) -> Result<(), Fault> {
        let cur = match self.store[state_var.0 as usize][0] {
            CVal::Int(v) => v as u8,
            CVal::Ptr(_) => unreachable!("state variables hold state indices"),
        };
        if let Some(&next) = rt.transitions.get(&(cur, label.to_string())) {
            if rt.errors.contains_key(&next) {
                return Err(Fault::AssertionFailure {
                    loc,
                    machine: rt.machine.clone(),
                    target,
                    error_state: rt.state_name(next).to_string(),
                });
            }
            self.store[state_var.0 as usize][0] = CVal::Int(next as i64);
        }
        Ok(())
    }

    fn read(&self, obj: ObjId, off: i64, loc: LocationId) -> Result<CVal, Fault> {
        let len = self.obj_len(obj);
        if !(0..len as i64).contains(&off) {
            return Err(Fault::OutOfBounds { loc, obj, off, len });
        }
        Ok(self.store[obj.0 as usize][off as usize])
    }

    fn write(&mut self, obj: ObjId, off: i64, v: CVal, loc: LocationId) -> Result<(), Fault> {
        let len = self.obj_len(obj);
        if !(0..len as i64).contains(&off) {
            return Err(Fault::OutOfBounds { loc, obj, off, len });
        }
        self.store[obj.0 as usize][off as usize] = self.canon_val(v);
        Ok(())
    }

    fn place_addr(&mut self, p: &RPlace, loc: LocationId) -> Result<(ObjId, i64), Fault> {
        match p {
            RPlace::Var(o) => Ok((*o, 0)),
            RPlace::Deref(e) => self.deref_addr(e, 0, loc),
            RPlace::Index { base, idx } => {
                let i = self.eval_int(idx, loc)?;
                self.deref_addr(base, i, loc)
            }
        }
    }

    fn deref_addr(&mut self, base: &RExpr, extra: i64, loc: LocationId) -> Result<(ObjId, i64), Fault> {
        match self.eval(base, loc)? {
            CVal::Ptr(CPtr::Null) => Err(Fault::NullDeref { loc }),
            CVal::Ptr(CPtr::Addr { obj, off }) => Ok((obj, off + extra)),
            CVal::Int(_) => unreachable!("checked: dereferenced value is a pointer"),
        }
    }

    fn eval_int(&mut self, e: &RExpr, loc: LocationId) -> Result<i64, Fault> {
        match self.eval(e, loc)? {
            CVal::Int(v) => Ok(v),
            CVal::Ptr(_) => unreachable!("checked: arithmetic operand is an integer"),
        }
    }

    fn eval(&mut self, e: &RExpr, loc: LocationId) -> Result<CVal, Fault> {
        match e {
            RExpr::Const(v) => Ok(CVal::Int(self.canon(*v))),
            RExpr::Null => Ok(CVal::NULL),
            RExpr::Load(o) => Ok(self.store[o.0 as usize][0]),
            RExpr::AddrOfObj(o) => Ok(CVal::addr(*o, 0)),
            RExpr::Deref(inner) => {
                let (obj, off) = self.deref_addr(inner, 0, loc)?;
                self.read(obj, off, loc)
            }
            RExpr::Index(base, idx) => {
                let i = self.eval_int(idx, loc)?;
                let (obj, off) = self.deref_addr(base, i, loc)?;
                self.read(obj, off, loc)
            }
            RExpr::Neg(inner) => {
                let v = self.eval_int(inner, loc)?;
                Ok(CVal::Int(self.canon(v.wrapping_neg())))
            }
            RExpr::Bin(op, l, r) => {
                let a = self.eval_int(l, loc)?;
                let b = self.eval_int(r, loc)?;
                let v = match op {
                    BinOp::Add => a.wrapping_add(b),
                    BinOp::Sub => a.wrapping_sub(b),
                    BinOp::Mul => a.wrapping_mul(b),
                };
                Ok(CVal::Int(self.canon(v)))
            }
        }
    }
}

/// Zero value for a return type, matching what synthesized returns produce.
pub fn zero_of(ret: &RetTy) -> Option<CVal> {
    match ret {
        RetTy::Void => None,
        RetTy::Val(t) if t.is_ptr() => Some(CVal::NULL),
        RetTy::Val(_) => Some(CVal::Int(0)),
    }
}
