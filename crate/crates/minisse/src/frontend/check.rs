//! Semantic checks for parsed MiniC.
//!
//! Enforces the language's static rules: a single flat namespace per function
//! (params, locals, globals, and function names are pairwise disjoint — no
//! shadowing), value/boolean kind separation, pointer type agreement, no
//! pointer arithmetic, call arity/type agreement, no calls in expression
//! position (already syntactic), an acyclic static call graph, and no
//! unreachable statements. A checked program always lowers to a CFG.

use std::collections::{BTreeMap, BTreeSet};

use crate::diag::Pos;
use crate::frontend::ast::*;
use crate::frontend::FrontendError;

/// Checked view of an expression's type.
#[derive(Debug, Clone, PartialEq, Eq)]
enum ChkTy {
    Val(Ty),
    /// The NULL literal: assignable/comparable to any pointer.
    Null,
    /// A global array name before decay; `Ty` is the element type.
    Arr(Ty),
}

impl ChkTy {
    /// Array-to-pointer decay for value positions.
    fn decayed(self) -> ChkTy {
        match self {
            ChkTy::Arr(elem) => ChkTy::Val(elem.ptr_to()),
            other => other,
        }
    }
}

struct Checker<'p> {
    prog: &'p MiniCProgram,
    globals: BTreeMap<&'p str, &'p GlobalDecl>,
    funcs: BTreeMap<&'p str, &'p Function>,
}

pub fn check(prog: &MiniCProgram) -> Result<(), FrontendError> {
    let mut globals = BTreeMap::new();
    for g in &prog.globals {
        if globals.insert(g.name.as_str(), g).is_some() {
            return Err(FrontendError::type_(g.pos, format!("`{}` is declared twice", g.name)));
        }
    }
    let mut funcs = BTreeMap::new();
    for f in &prog.functions {
        if funcs.insert(f.name.as_str(), f).is_some() {
            return Err(FrontendError::type_(
                f.pos,
                format!("function `{}` is declared twice", f.name),
            ));
        }
        if globals.contains_key(f.name.as_str()) {
            return Err(FrontendError::type_(
                f.pos,
                format!("`{}` names both a global and a function", f.name),
            ));
        }
    }
    let ck = Checker { prog, globals, funcs };
    ck.check_globals()?;
    for f in &prog.functions {
        ck.check_function(f)?;
    }
    ck.check_acyclic_calls()?;
    Ok(())
}

impl<'p> Checker<'p> {
    fn check_globals(&self) -> Result<(), FrontendError> {
        for g in &self.prog.globals {
            if let GlobalKind::Scalar { ty, init: Some(init) } = &g.kind {
                let ok = match init {
                    ConstInit::Int(_) => ty.is_arith(),
                    ConstInit::Null => ty.is_ptr(),
                };
                if !ok {
                    return Err(FrontendError::type_(
                        g.pos,
                        format!("initializer does not match the type of `{}`", g.name),
                    ));
                }
            }
        }
        Ok(())
    }

    fn check_function(&self, f: &'p Function) -> Result<(), FrontendError> {
        let mut scope: BTreeMap<&str, Ty> = BTreeMap::new();
        for (what, name, ty, pos) in f
            .params
            .iter()
            .map(|p| ("parameter", p.name.as_str(), &p.ty, p.pos))
            .chain(f.locals.iter().map(|l| ("local", l.name.as_str(), &l.ty, l.pos)))
        {
            if self.globals.contains_key(name) || self.funcs.contains_key(name) {
                return Err(FrontendError::type_(
                    pos,
                    format!("{what} `{name}` shadows a global declaration"),
                ));
            }
            if scope.insert(name, ty.clone()).is_some() {
                return Err(FrontendError::type_(
                    pos,
                    format!("`{name}` is declared twice in `{}`", f.name),
                ));
            }
        }
        let fcx = FuncCx { ck: self, f, scope };
        let always_returns = fcx.check_stmts(&f.body)?;
        let _ = always_returns; // non-void fallthrough synthesizes `return 0`
        Ok(())
    }

    fn check_acyclic_calls(&self) -> Result<(), FrontendError> {
        // DFS three-color cycle detection over the static call graph.
        let mut state: BTreeMap<&str, u8> = BTreeMap::new(); // 1 = on stack, 2 = done
        for f in &self.prog.functions {
            self.dfs_calls(f, &mut state, &mut Vec::new())?;
        }
        Ok(())
    }

    fn dfs_calls(
        &self,
        f: &'p Function,
        state: &mut BTreeMap<&'p str, u8>,
        stack: &mut Vec<&'p str>,
    ) -> Result<(), FrontendError> {
        match state.get(f.name.as_str()) {
            Some(2) => return Ok(()),
            Some(_) => {
                let mut cycle: Vec<&str> = stack.clone();
                cycle.push(&f.name);
                return Err(FrontendError::unsupported(
                    f.pos,
                    format!("recursion is not supported (call cycle: {})", cycle.join(" -> ")),
                ));
            }
            None => {}
        }
        state.insert(&f.name, 1);
        stack.push(&f.name);
        let mut callees = BTreeSet::new();
        walk_stmts(&f.body, &mut |s| {
            if let StmtKind::Call { call } | StmtKind::AssignCall { call, .. } = &s.kind {
                callees.insert(call.callee.clone());
            }
        });
        for callee in callees {
            if let Some(g) = self.funcs.get(callee.as_str()) {
                self.dfs_calls(g, state, stack)?;
            }
        }
        stack.pop();
        state.insert(&f.name, 2);
        Ok(())
    }
}

struct FuncCx<'p> {
    ck: &'p Checker<'p>,
    f: &'p Function,
    scope: BTreeMap<&'p str, Ty>,
}

impl<'p> FuncCx<'p> {
    /// Checks a statement list; returns whether every path through it returns.
    /// Statements after a point where all paths have returned are rejected.
    fn check_stmts(&self, stmts: &[Stmt]) -> Result<bool, FrontendError> {
        let mut returned = false;
        for s in stmts {
            if returned {
                return Err(FrontendError::unsupported(s.pos, "unreachable statement"));
            }
            returned = self.check_stmt(s)?;
        }
        Ok(returned)
    }

    fn check_stmt(&self, s: &Stmt) -> Result<bool, FrontendError> {
        match &s.kind {
            StmtKind::Assign { lhs, rhs } => {
                let lt = self.lvalue_ty(lhs)?;
                self.check_assignable(&lt, rhs, s.pos)?;
                Ok(false)
            }
            StmtKind::Call { call } => {
                self.check_call(call)?;
                Ok(false)
            }
            StmtKind::AssignCall { lhs, call } => {
                let lt = self.lvalue_ty(lhs)?;
                let ret = self.check_call(call)?;
                match ret {
                    RetTy::Void => Err(FrontendError::type_(
                        call.pos,
                        format!("`{}` returns void; its result cannot be assigned", call.callee),
                    )),
                    RetTy::Val(rt) => {
                        if lt.assignable_from(&rt) {
                            Ok(false)
                        } else {
                            Err(FrontendError::type_(
                                s.pos,
                                format!("cannot assign `{rt}` result to `{lt}`"),
                            ))
                        }
                    }
                }
            }
            StmtKind::If { cond, then_body, else_body } => {
                self.check_cond(cond)?;
                let t = self.check_stmts(then_body)?;
                let e = self.check_stmts(else_body)?;
                Ok(t && e && !else_body.is_empty())
            }
            StmtKind::While { cond, body } => {
                self.check_cond(cond)?;
                self.check_stmts(body)?;
                Ok(false)
            }
            StmtKind::Return { value } => {
                match (&self.f.ret, value) {
                    (RetTy::Void, None) => {}
                    (RetTy::Void, Some(v)) => {
                        return Err(FrontendError::type_(
                            v.pos(),
                            format!("`{}` is void and cannot return a value", self.f.name),
                        ));
                    }
                    (RetTy::Val(t), Some(v)) => {
                        let t = t.clone();
                        self.check_assignable(&t, v, s.pos)?;
                    }
                    (RetTy::Val(_), None) => {
                        return Err(FrontendError::type_(
                            s.pos,
                            format!("`{}` must return a value", self.f.name),
                        ));
                    }
                }
                Ok(true)
            }
            StmtKind::Fire { binder, .. } => {
                if let Some(b) = binder {
                    let bt = self.expr_ty(b)?.decayed();
                    match bt {
                        ChkTy::Val(t) if t.is_ptr() => {}
                        ChkTy::Null => {}
                        _ => {
                            return Err(FrontendError::type_(
                                b.pos(),
                                "fire binder must be address-typed",
                            ));
                        }
                    }
                }
                Ok(false)
            }
        }
    }

    fn check_assignable(&self, lt: &Ty, rhs: &Expr, pos: Pos) -> Result<(), FrontendError> {
        let rt = self.expr_ty(rhs)?.decayed();
        let ok = match &rt {
            ChkTy::Val(t) => lt.assignable_from(t),
            ChkTy::Null => lt.is_ptr(),
            ChkTy::Arr(_) => unreachable!("decayed"),
        };
        if ok {
            Ok(())
        } else {
            let shown = match rt {
                ChkTy::Val(t) => t.to_string(),
                _ => "NULL".into(),
            };
            Err(FrontendError::type_(pos, format!("cannot assign `{shown}` to `{lt}`")))
        }
    }

    fn check_call(&self, call: &Call) -> Result<RetTy, FrontendError> {
        let callee = self.ck.funcs.get(call.callee.as_str()).ok_or_else(|| {
            FrontendError::type_(call.pos, format!("call to undeclared function `{}`", call.callee))
        })?;
        if callee.params.len() != call.args.len() {
            return Err(FrontendError::type_(
                call.pos,
                format!(
                    "`{}` takes {} argument(s), {} given",
                    call.callee,
                    callee.params.len(),
                    call.args.len()
                ),
            ));
        }
        for (arg, param) in call.args.iter().zip(&callee.params) {
            self.check_assignable(&param.ty, arg, arg.pos()).map_err(|_| {
                FrontendError::type_(
                    arg.pos(),
                    format!(
                        "argument for `{}` of `{}` must be `{}`",
                        param.name, call.callee, param.ty
                    ),
                )
            })?;
        }
        Ok(callee.ret.clone())
    }

    fn check_cond(&self, c: &Cond) -> Result<(), FrontendError> {
        match c {
            Cond::Cmp(op, l, r, pos) => {
                let lt = self.expr_ty(l)?.decayed();
                let rt = self.expr_ty(r)?.decayed();
                let eq_only = matches!(op, CmpOp::Eq | CmpOp::Ne);
                let ok = match (&lt, &rt) {
                    (ChkTy::Val(a), ChkTy::Val(b)) if a.is_arith() && b.is_arith() => true,
                    (ChkTy::Val(a), ChkTy::Val(b)) if a.is_ptr() && b.is_ptr() => {
                        eq_only && a == b
                    }
                    (ChkTy::Val(a), ChkTy::Null) => eq_only && a.is_ptr(),
                    (ChkTy::Null, ChkTy::Val(b)) => eq_only && b.is_ptr(),
                    (ChkTy::Null, ChkTy::Null) => eq_only,
                    _ => false,
                };
                if ok {
                    Ok(())
                } else {
                    Err(FrontendError::type_(
                        *pos,
                        format!("invalid operands for `{op}` comparison"),
                    ))
                }
            }
            Cond::And(l, r, _) | Cond::Or(l, r, _) => {
                self.check_cond(l)?;
                self.check_cond(r)
            }
            Cond::Not(inner, _) => self.check_cond(inner),
        }
    }

    fn name_ty(&self, name: &str, pos: Pos) -> Result<ChkTy, FrontendError> {
        if let Some(t) = self.scope.get(name) {
            return Ok(ChkTy::Val(t.clone()));
        }
        if let Some(g) = self.ck.globals.get(name) {
            return Ok(match &g.kind {
                GlobalKind::Scalar { ty, .. } => ChkTy::Val(ty.clone()),
                GlobalKind::Array { elem, .. } => ChkTy::Arr(elem.clone()),
            });
        }
        if self.ck.funcs.contains_key(name) {
            return Err(FrontendError::type_(
                pos,
                format!("`{name}` is a function; function values are not supported"),
            ));
        }
        Err(FrontendError::type_(pos, format!("`{name}` is undeclared")))
    }

    fn lvalue_ty(&self, lv: &LValue) -> Result<Ty, FrontendError> {
        match lv {
            LValue::Var(name, pos) => match self.name_ty(name, *pos)? {
                ChkTy::Val(t) => Ok(t),
                ChkTy::Arr(_) => {
                    Err(FrontendError::type_(*pos, format!("cannot assign to array `{name}`")))
                }
                ChkTy::Null => unreachable!(),
            },
            LValue::Deref(e, pos) => match self.expr_ty(e)?.decayed() {
                ChkTy::Val(Ty::Ptr(t)) => Ok(*t),
                _ => Err(FrontendError::type_(*pos, "`*` requires a pointer operand")),
            },
            LValue::Index(base, idx, pos) => self.index_ty(base, idx, *pos),
        }
    }

    fn index_ty(&self, base: &Expr, idx: &Expr, pos: Pos) -> Result<Ty, FrontendError> {
        let bt = self.expr_ty(base)?;
        let elem = match bt {
            ChkTy::Arr(elem) => elem,
            ChkTy::Val(Ty::Ptr(t)) => *t,
            _ => {
                return Err(FrontendError::type_(
                    pos,
                    "indexing requires an array or pointer base",
                ));
            }
        };
        match self.expr_ty(idx)?.decayed() {
            ChkTy::Val(t) if t.is_arith() => Ok(elem),
            _ => Err(FrontendError::type_(pos, "array index must be arithmetic")),
        }
    }

    fn expr_ty(&self, e: &Expr) -> Result<ChkTy, FrontendError> {
        match e {
            Expr::IntLit(_, _) => Ok(ChkTy::Val(Ty::Int)),
            Expr::Null(_) => Ok(ChkTy::Null),
            Expr::Var(name, pos) => self.name_ty(name, *pos),
            Expr::AddrOf(name, pos) => match self.name_ty(name, *pos)? {
                ChkTy::Val(t) => Ok(ChkTy::Val(t.ptr_to())),
                ChkTy::Arr(_) => Err(FrontendError::unsupported(
                    *pos,
                    format!("`&{name}`: taking the address of an array is not supported (the array name already decays)"),
                )),
                ChkTy::Null => unreachable!(),
            },
            Expr::Deref(inner, pos) => match self.expr_ty(inner)?.decayed() {
                ChkTy::Val(Ty::Ptr(t)) => Ok(ChkTy::Val(*t)),
                _ => Err(FrontendError::type_(*pos, "`*` requires a pointer operand")),
            },
            Expr::Index(base, idx, pos) => Ok(ChkTy::Val(self.index_ty(base, idx, *pos)?)),
            Expr::Unary(UnOp::Neg, inner, pos) => match self.expr_ty(inner)?.decayed() {
                ChkTy::Val(t) if t.is_arith() => Ok(ChkTy::Val(Ty::Int)),
                _ => Err(FrontendError::type_(*pos, "`-` requires an arithmetic operand")),
            },
            Expr::Binary(op, l, r, pos) => {
                let lt = self.expr_ty(l)?.decayed();
                let rt = self.expr_ty(r)?.decayed();
                match (lt, rt) {
                    (ChkTy::Val(a), ChkTy::Val(b)) if a.is_arith() && b.is_arith() => {
                        Ok(ChkTy::Val(Ty::Int))
                    }
                    _ => Err(FrontendError::type_(
                        *pos,
                        format!("`{op}` requires arithmetic operands (pointer arithmetic is not supported; use indexing)"),
                    )),
                }
            }
        }
    }
}
