//! The MiniC abstract syntax tree.
//!
//! MiniC is a deliberately small C subset: `int`, `char`, pointers, fixed-size
//! global arrays of `int`/`char`, `NULL` as the sole address literal, no
//! recursion, no structs, no heap, no function pointers, no division.
//! Conditions are boolean expressions (comparisons combined with `&&`, `||`,
//! `!`); everything else is value-typed. Calls appear only as statements or as
//! the sole right-hand side of an assignment.
//!
//! The tree also carries one construct the parser accepts but ordinary source
//! never contains: the `__fire` pseudo-statement inserted by instrumentation
//! (see the `instrument` module). Keeping it in the AST is what lets slicing
//! filter statements at AST level, re-check, and rebuild the CFG without a
//! separate instrumented IR.

use crate::diag::Pos;
use std::fmt;

/// Value types. Arrays are not first-class: a global array declaration stores
/// its element type and length separately, and the array name decays to a
/// pointer in expressions.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub enum Ty {
    Int,
    Char,
    Ptr(Box<Ty>),
}

impl Ty {
    pub fn ptr_to(self) -> Ty {
        Ty::Ptr(Box::new(self))
    }

    pub fn is_ptr(&self) -> bool {
        matches!(self, Ty::Ptr(_))
    }

    /// `int` and `char` are interchangeable arithmetic cells of the configured
    /// width; this is the only implicit conversion in the language.
    pub fn is_arith(&self) -> bool {
        matches!(self, Ty::Int | Ty::Char)
    }

    pub fn pointee(&self) -> Option<&Ty> {
        match self {
            Ty::Ptr(t) => Some(t),
            _ => None,
        }
    }

    /// Assignment compatibility: arithmetic mixes freely, pointers must agree
    /// exactly (NULL is handled separately by the checker).
    pub fn assignable_from(&self, rhs: &Ty) -> bool {
        if self.is_arith() && rhs.is_arith() {
            return true;
        }
        self == rhs
    }
}

impl fmt::Display for Ty {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Ty::Int => write!(f, "int"),
            Ty::Char => write!(f, "char"),
            Ty::Ptr(t) => write!(f, "{t}*"),
        }
    }
}

/// Function return types.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum RetTy {
    Void,
    Val(Ty),
}

impl fmt::Display for RetTy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RetTy::Void => write!(f, "void"),
            RetTy::Val(t) => write!(f, "{t}"),
        }
    }
}

/// Constant initializers for globals.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConstInit {
    Int(i64),
    Null,
}

/// What a global declaration declares.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum GlobalKind {
    Scalar { ty: Ty, init: Option<ConstInit> },
    /// Fixed-size array of `int` or `char`; `elem` is the element type.
    Array { elem: Ty, len: u32 },
}

#[derive(Debug, Clone)]
pub struct GlobalDecl {
    pub name: String,
    pub kind: GlobalKind,
    pub pos: Pos,
}

#[derive(Debug, Clone)]
pub struct Param {
    pub name: String,
    pub ty: Ty,
    pub pos: Pos,
}

#[derive(Debug, Clone)]
pub struct LocalDecl {
    pub name: String,
    pub ty: Ty,
    pub pos: Pos,
}

/// Unary operators in value position. `!` is a boolean operator and lives in
/// the condition grammar, not here.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UnOp {
    Neg,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
}

impl fmt::Display for BinOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BinOp::Add => write!(f, "+"),
            BinOp::Sub => write!(f, "-"),
            BinOp::Mul => write!(f, "*"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum CmpOp {
    Eq,
    Ne,
    Lt,
    Gt,
    Le,
    Ge,
}

impl CmpOp {
    pub fn eval(self, l: i64, r: i64) -> bool {
        match self {
            CmpOp::Eq => l == r,
            CmpOp::Ne => l != r,
            CmpOp::Lt => l < r,
            CmpOp::Gt => l > r,
            CmpOp::Le => l <= r,
            CmpOp::Ge => l >= r,
        }
    }

    pub fn negate(self) -> CmpOp {
        match self {
            CmpOp::Eq => CmpOp::Ne,
            CmpOp::Ne => CmpOp::Eq,
            CmpOp::Lt => CmpOp::Ge,
            CmpOp::Gt => CmpOp::Le,
            CmpOp::Le => CmpOp::Gt,
            CmpOp::Ge => CmpOp::Lt,
        }
    }
}

impl fmt::Display for CmpOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            CmpOp::Eq => "==",
            CmpOp::Ne => "!=",
            CmpOp::Lt => "<",
            CmpOp::Gt => ">",
            CmpOp::Le => "<=",
            CmpOp::Ge => ">=",
        };
        write!(f, "{s}")
    }
}

/// Value-kind expressions. The checker guarantees these never contain
/// comparisons or logical connectives.
#[derive(Debug, Clone)]
pub enum Expr {
    IntLit(i64, Pos),
    Null(Pos),
    Var(String, Pos),
    /// `&name`; the operand is restricted to a scalar variable name.
    AddrOf(String, Pos),
    /// `*e` where `e` is pointer-typed.
    Deref(Box<Expr>, Pos),
    /// `e[i]`.
    Index(Box<Expr>, Box<Expr>, Pos),
    Unary(UnOp, Box<Expr>, Pos),
    Binary(BinOp, Box<Expr>, Box<Expr>, Pos),
}

impl Expr {
    pub fn pos(&self) -> Pos {
        match self {
            Expr::IntLit(_, p)
            | Expr::Null(p)
            | Expr::Var(_, p)
            | Expr::AddrOf(_, p)
            | Expr::Deref(_, p)
            | Expr::Index(_, _, p)
            | Expr::Unary(_, _, p)
            | Expr::Binary(_, _, _, p) => *p,
        }
    }
}

/// Boolean-kind expressions: the condition grammar of `if`/`while`.
#[derive(Debug, Clone)]
pub enum Cond {
    Cmp(CmpOp, Expr, Expr, Pos),
    And(Box<Cond>, Box<Cond>, Pos),
    Or(Box<Cond>, Box<Cond>, Pos),
    Not(Box<Cond>, Pos),
}

impl Cond {
    pub fn pos(&self) -> Pos {
        match self {
            Cond::Cmp(_, _, _, p) | Cond::And(_, _, p) | Cond::Or(_, _, p) | Cond::Not(_, p) => *p,
        }
    }

    /// Number of atomic comparisons, i.e. branch nodes this condition lowers to.
    pub fn atom_count(&self) -> usize {
        match self {
            Cond::Cmp(..) => 1,
            Cond::And(a, b, _) | Cond::Or(a, b, _) => a.atom_count() + b.atom_count(),
            Cond::Not(c, _) => c.atom_count(),
        }
    }
}

/// Assignment targets.
#[derive(Debug, Clone)]
pub enum LValue {
    Var(String, Pos),
    Deref(Expr, Pos),
    Index(Expr, Expr, Pos),
}

impl LValue {
    pub fn pos(&self) -> Pos {
        match self {
            LValue::Var(_, p) | LValue::Deref(_, p) | LValue::Index(_, _, p) => *p,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Call {
    pub callee: String,
    pub args: Vec<Expr>,
    pub pos: Pos,
}

/// Statement identity, dense and unique within one program, assigned in parse
/// order and preserved by instrumentation and slicing. This is the provenance
/// link between an AST statement and its CFG node(s) across rebuilds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct StmtId(pub u32);

#[derive(Debug, Clone)]
pub enum StmtKind {
    Assign { lhs: LValue, rhs: Expr },
    /// `f(args);`
    Call { call: Call },
    /// `x = f(args);` — the only place a call may produce a value.
    AssignCall { lhs: LValue, call: Call },
    If { cond: Cond, then_body: Vec<Stmt>, else_body: Vec<Stmt> },
    While { cond: Cond, body: Vec<Stmt> },
    Return { value: Option<Expr> },
    /// Instrumentation pseudo-statement: advance the named machine on `label`,
    /// dispatching on `binder`'s runtime object (all tracked targets when the
    /// binder is absent). Printed and parsed as `__fire("m", "label", e);`.
    Fire { machine: String, label: String, binder: Option<Expr> },
}

#[derive(Debug, Clone)]
pub struct Stmt {
    pub kind: StmtKind,
    pub id: StmtId,
    pub pos: Pos,
}

#[derive(Debug, Clone)]
pub struct Function {
    pub name: String,
    pub ret: RetTy,
    pub params: Vec<Param>,
    pub locals: Vec<LocalDecl>,
    pub body: Vec<Stmt>,
    /// Declared without a body (`extern void lock(int *l);` or a bare
    /// prototype). Externs are no-ops returning the zero value of their type.
    pub is_extern: bool,
    pub pos: Pos,
}

#[derive(Debug, Clone, Default)]
pub struct MiniCProgram {
    pub globals: Vec<GlobalDecl>,
    pub functions: Vec<Function>,
    /// One past the largest StmtId in use; instrumentation allocates fresh ids
    /// from here.
    pub next_stmt_id: u32,
}

impl MiniCProgram {
    pub fn function(&self, name: &str) -> Option<&Function> {
        self.functions.iter().find(|f| f.name == name)
    }

    pub fn global(&self, name: &str) -> Option<&GlobalDecl> {
        self.globals.iter().find(|g| g.name == name)
    }

    pub fn fresh_stmt_id(&mut self) -> StmtId {
        let id = StmtId(self.next_stmt_id);
        self.next_stmt_id += 1;
        id
    }
}

/// Walk a statement list depth-first, visiting every statement.
pub fn walk_stmts<'a>(stmts: &'a [Stmt], visit: &mut dyn FnMut(&'a Stmt)) {
    for s in stmts {
        visit(s);
        match &s.kind {
            StmtKind::If { then_body, else_body, .. } => {
                walk_stmts(then_body, visit);
                walk_stmts(else_body, visit);
            }
            StmtKind::While { body, .. } => walk_stmts(body, visit),
            _ => {}
        }
    }
}
