//! Symbolic values: width-annotated integer expression trees, boolean
//! formulas over them, and pointers with deferred nullability.
//!
//! Every integer node lives at the engine's configured cell width; constants
//! are kept canonical (sign-extended) and constant subtrees fold at
//! construction. Addresses never enter arithmetic except through their
//! offset component.

use std::collections::{BTreeMap, BTreeSet};
use std::rc::Rc;

use crate::frontend::ast::CmpOp;
use crate::frontend::cfg::ObjId;

/// Arithmetic cell width in bits (8, 16, or 32).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Width(pub u32);

impl Width {
    /// Sign-extend `v` from the low `bits` to i64.
    pub fn canon(self, v: i64) -> i64 {
        let shift = 64 - self.0;
        ((v as u64) << shift) as i64 >> shift
    }

    pub fn min(self) -> i64 {
        -(1i64 << (self.0 - 1))
    }

    pub fn max(self) -> i64 {
        (1i64 << (self.0 - 1)) - 1
    }
}

/// Index into a [`SymTable`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub struct SymId(pub u32);

/// Where a symbol's value lands when a model is turned back into concrete
/// run inputs. Places name objects by their display string so a model found
/// on one build of a program (the slice) can be replayed against another
/// (the original).
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SymPlace {
    /// Integer entry argument, positional.
    Arg(usize),
    /// Pointer entry argument: nonzero aims the argument at the named
    /// region's middle cell, zero passes NULL.
    ArgNullFlag(usize, String),
    /// Scalar integer global.
    GlobalInt(String),
    /// Pointer global: nonzero aims it at the named region's middle cell.
    GlobalNullFlag(String, String),
    /// One cell of an array or synthesized region.
    Cell(String, i64),
    /// Solver-internal symbol with no concrete counterpart.
    Free,
}

#[derive(Debug, Clone)]
pub struct SymInfo {
    pub name: String,
    /// Boolean symbols range over {0, 1}; the rest over the full cell width.
    pub boolean: bool,
    pub place: SymPlace,
}

/// The symbols minted during one symbolic execution.
#[derive(Debug, Clone, Default)]
pub struct SymTable {
    syms: Vec<SymInfo>,
}

impl SymTable {
    pub fn fresh(
        &mut self,
        name: impl Into<String>,
        boolean: bool,
        place: SymPlace,
    ) -> SymId {
        self.syms.push(SymInfo { name: name.into(), boolean, place });
        SymId(self.syms.len() as u32 - 1)
    }

    pub fn info(&self, s: SymId) -> &SymInfo {
        &self.syms[s.0 as usize]
    }

    pub fn len(&self) -> usize {
        self.syms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.syms.is_empty()
    }

    pub fn ids(&self) -> impl Iterator<Item = SymId> {
        (0..self.syms.len() as u32).map(SymId)
    }

    /// Render a model with human-readable symbol names, sorted by name.
    pub fn render_model(&self, m: &Model) -> BTreeMap<String, i64> {
        m.iter().map(|(&s, &v)| (self.info(s).name.clone(), v)).collect()
    }
}

/// A concrete assignment to symbols.
pub type Model = BTreeMap<SymId, i64>;

/// Width-annotated integer expression.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub enum SymExpr {
    Const(i64),
    Sym(SymId),
    Neg(Rc<SymExpr>),
    Add(Rc<SymExpr>, Rc<SymExpr>),
    Sub(Rc<SymExpr>, Rc<SymExpr>),
    Mul(Rc<SymExpr>, Rc<SymExpr>),
    /// Conditional value; lets loads and stores at symbolic offsets stay on
    /// one path instead of forking per cell.
    Ite(Rc<SymBool>, Rc<SymExpr>, Rc<SymExpr>),
}

impl SymExpr {
    pub fn int(w: Width, v: i64) -> SymExpr {
        SymExpr::Const(w.canon(v))
    }

    pub fn add(w: Width, a: SymExpr, b: SymExpr) -> SymExpr {
        match (&a, &b) {
            (SymExpr::Const(x), SymExpr::Const(y)) => SymExpr::Const(w.canon(x.wrapping_add(*y))),
            (SymExpr::Const(0), _) => b,
            (_, SymExpr::Const(0)) => a,
            _ => SymExpr::Add(Rc::new(a), Rc::new(b)),
        }
    }

    pub fn sub(w: Width, a: SymExpr, b: SymExpr) -> SymExpr {
        match (&a, &b) {
            (SymExpr::Const(x), SymExpr::Const(y)) => SymExpr::Const(w.canon(x.wrapping_sub(*y))),
            (_, SymExpr::Const(0)) => a,
            _ if a == b => SymExpr::Const(0),
            _ => SymExpr::Sub(Rc::new(a), Rc::new(b)),
        }
    }

    pub fn mul(w: Width, a: SymExpr, b: SymExpr) -> SymExpr {
        match (&a, &b) {
            (SymExpr::Const(x), SymExpr::Const(y)) => SymExpr::Const(w.canon(x.wrapping_mul(*y))),
            (SymExpr::Const(0), _) | (_, SymExpr::Const(0)) => SymExpr::Const(0),
            (SymExpr::Const(1), _) => b,
            (_, SymExpr::Const(1)) => a,
            _ => SymExpr::Mul(Rc::new(a), Rc::new(b)),
        }
    }

    pub fn neg(w: Width, a: SymExpr) -> SymExpr {
        match &a {
            SymExpr::Const(x) => SymExpr::Const(w.canon(x.wrapping_neg())),
            SymExpr::Neg(inner) => (**inner).clone(),
            _ => SymExpr::Neg(Rc::new(a)),
        }
    }

    pub fn ite(c: SymBool, t: SymExpr, e: SymExpr) -> SymExpr {
        match &c {
            SymBool::Const(true) => t,
            SymBool::Const(false) => e,
            _ if t == e => t,
            _ => SymExpr::Ite(Rc::new(c), Rc::new(t), Rc::new(e)),
        }
    }

    pub fn as_const(&self) -> Option<i64> {
        match self {
            SymExpr::Const(v) => Some(*v),
            _ => None,
        }
    }

    /// Evaluate under a (total for this expression) assignment.
    pub fn eval(&self, m: &Model, w: Width) -> i64 {
        match self {
            SymExpr::Const(v) => *v,
            SymExpr::Sym(s) => w.canon(m.get(s).copied().unwrap_or(0)),
            SymExpr::Neg(a) => w.canon(a.eval(m, w).wrapping_neg()),
            SymExpr::Add(a, b) => w.canon(a.eval(m, w).wrapping_add(b.eval(m, w))),
            SymExpr::Sub(a, b) => w.canon(a.eval(m, w).wrapping_sub(b.eval(m, w))),
            SymExpr::Mul(a, b) => w.canon(a.eval(m, w).wrapping_mul(b.eval(m, w))),
            SymExpr::Ite(c, t, e) => {
                if c.eval(m, w) {
                    t.eval(m, w)
                } else {
                    e.eval(m, w)
                }
            }
        }
    }

    pub fn syms(&self, out: &mut BTreeSet<SymId>) {
        match self {
            SymExpr::Const(_) => {}
            SymExpr::Sym(s) => {
                out.insert(*s);
            }
            SymExpr::Neg(a) => a.syms(out),
            SymExpr::Add(a, b) | SymExpr::Sub(a, b) | SymExpr::Mul(a, b) => {
                a.syms(out);
                b.syms(out);
            }
            SymExpr::Ite(c, t, e) => {
                c.syms(out);
                t.syms(out);
                e.syms(out);
            }
        }
    }

    pub fn render(&self, t: &SymTable) -> String {
        match self {
            SymExpr::Const(v) => v.to_string(),
            SymExpr::Sym(s) => t.info(*s).name.clone(),
            SymExpr::Neg(a) => format!("-({})", a.render(t)),
            SymExpr::Add(a, b) => format!("({} + {})", a.render(t), b.render(t)),
            SymExpr::Sub(a, b) => format!("({} - {})", a.render(t), b.render(t)),
            SymExpr::Mul(a, b) => format!("({} * {})", a.render(t), b.render(t)),
            SymExpr::Ite(c, a, b) => {
                format!("({} ? {} : {})", c.render(t), a.render(t), b.render(t))
            }
        }
    }
}

/// Boolean formula over integer expressions.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub enum SymBool {
    Const(bool),
    Cmp(CmpOp, Rc<SymExpr>, Rc<SymExpr>),
    And(Rc<SymBool>, Rc<SymBool>),
    Or(Rc<SymBool>, Rc<SymBool>),
    Not(Rc<SymBool>),
}

impl SymBool {
    pub const TRUE: SymBool = SymBool::Const(true);
    pub const FALSE: SymBool = SymBool::Const(false);

    pub fn cmp(op: CmpOp, a: SymExpr, b: SymExpr) -> SymBool {
        if let (Some(x), Some(y)) = (a.as_const(), b.as_const()) {
            return SymBool::Const(op.eval(x, y));
        }
        if a == b {
            return SymBool::Const(matches!(op, CmpOp::Eq | CmpOp::Le | CmpOp::Ge));
        }
        SymBool::Cmp(op, Rc::new(a), Rc::new(b))
    }

    pub fn and(a: SymBool, b: SymBool) -> SymBool {
        match (&a, &b) {
            (SymBool::Const(false), _) | (_, SymBool::Const(false)) => SymBool::FALSE,
            (SymBool::Const(true), _) => b,
            (_, SymBool::Const(true)) => a,
            _ => SymBool::And(Rc::new(a), Rc::new(b)),
        }
    }

    pub fn or(a: SymBool, b: SymBool) -> SymBool {
        match (&a, &b) {
            (SymBool::Const(true), _) | (_, SymBool::Const(true)) => SymBool::TRUE,
            (SymBool::Const(false), _) => b,
            (_, SymBool::Const(false)) => a,
            _ => SymBool::Or(Rc::new(a), Rc::new(b)),
        }
    }

    pub fn not(a: SymBool) -> SymBool {
        match &a {
            SymBool::Const(v) => SymBool::Const(!v),
            SymBool::Not(inner) => (**inner).clone(),
            SymBool::Cmp(op, l, r) => SymBool::Cmp(negate(*op), l.clone(), r.clone()),
            _ => SymBool::Not(Rc::new(a)),
        }
    }

    pub fn as_const(&self) -> Option<bool> {
        match self {
            SymBool::Const(v) => Some(*v),
            _ => None,
        }
    }

    pub fn eval(&self, m: &Model, w: Width) -> bool {
        match self {
            SymBool::Const(v) => *v,
            SymBool::Cmp(op, a, b) => op.eval(a.eval(m, w), b.eval(m, w)),
            SymBool::And(a, b) => a.eval(m, w) && b.eval(m, w),
            SymBool::Or(a, b) => a.eval(m, w) || b.eval(m, w),
            SymBool::Not(a) => !a.eval(m, w),
        }
    }

    pub fn syms(&self, out: &mut BTreeSet<SymId>) {
        match self {
            SymBool::Const(_) => {}
            SymBool::Cmp(_, a, b) => {
                a.syms(out);
                b.syms(out);
            }
            SymBool::And(a, b) | SymBool::Or(a, b) => {
                a.syms(out);
                b.syms(out);
            }
            SymBool::Not(a) => a.syms(out),
        }
    }

    pub fn render(&self, t: &SymTable) -> String {
        match self {
            SymBool::Const(v) => v.to_string(),
            SymBool::Cmp(op, a, b) => format!("{} {} {}", a.render(t), cmp_str(*op), b.render(t)),
            SymBool::And(a, b) => format!("({} && {})", a.render(t), b.render(t)),
            SymBool::Or(a, b) => format!("({} || {})", a.render(t), b.render(t)),
            SymBool::Not(a) => format!("!({})", a.render(t)),
        }
    }
}

pub fn negate(op: CmpOp) -> CmpOp {
    match op {
        CmpOp::Eq => CmpOp::Ne,
        CmpOp::Ne => CmpOp::Eq,
        CmpOp::Lt => CmpOp::Ge,
        CmpOp::Ge => CmpOp::Lt,
        CmpOp::Gt => CmpOp::Le,
        CmpOp::Le => CmpOp::Gt,
    }
}

fn cmp_str(op: CmpOp) -> &'static str {
    match op {
        CmpOp::Eq => "==",
        CmpOp::Ne => "!=",
        CmpOp::Lt => "<",
        CmpOp::Gt => ">",
        CmpOp::Le => "<=",
        CmpOp::Ge => ">=",
    }
}

/// A symbolic pointer. Region base addresses are concrete, distinct abstract
/// objects; only offsets and nullability can be symbolic.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SymPtr {
    Null,
    Addr { obj: ObjId, off: SymExpr },
    /// NULL when `flag` is zero, `(obj, off)` otherwise — a pointer input
    /// whose caller may or may not have supplied memory.
    MaybeNull { flag: SymId, obj: ObjId, off: SymExpr },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SymVal {
    Int(SymExpr),
    Ptr(SymPtr),
}

impl SymVal {
    pub const NULL: SymVal = SymVal::Ptr(SymPtr::Null);

    pub fn zero() -> SymVal {
        SymVal::Int(SymExpr::Const(0))
    }
}
