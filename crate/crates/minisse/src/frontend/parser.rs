//! Recursive-descent parser for MiniC.
//!
//! Expressions are parsed with one unified precedence grammar and then split
//! into the AST's two kinds — value expressions and boolean conditions — so
//! that `(a) < b` and `(a < b)` parse without backtracking while the AST keeps
//! the boolean/value separation the rest of the pipeline relies on.

use crate::diag::Pos;
use crate::frontend::ast::*;
use crate::frontend::lexer::{lex, Tok, Token};
use crate::frontend::FrontendError;

const MAX_ARRAY_LEN: i64 = 1 << 16;

pub fn parse(source: &str) -> Result<MiniCProgram, FrontendError> {
    let tokens = lex(source)?;
    let mut p = Parser { tokens, at: 0, next_stmt_id: 0 };
    p.program()
}

/// Parser-internal unified expression; converted to [`Expr`] or [`Cond`].
enum PExpr {
    Int(i64, Pos),
    Null(Pos),
    Var(String, Pos),
    AddrOf(String, Pos),
    Deref(Box<PExpr>, Pos),
    Index(Box<PExpr>, Box<PExpr>, Pos),
    Neg(Box<PExpr>, Pos),
    Bin(BinOp, Box<PExpr>, Box<PExpr>, Pos),
    Cmp(CmpOp, Box<PExpr>, Box<PExpr>, Pos),
    And(Box<PExpr>, Box<PExpr>, Pos),
    Or(Box<PExpr>, Box<PExpr>, Pos),
    Not(Box<PExpr>, Pos),
}

impl PExpr {
    fn pos(&self) -> Pos {
        match self {
            PExpr::Int(_, p)
            | PExpr::Null(p)
            | PExpr::Var(_, p)
            | PExpr::AddrOf(_, p)
            | PExpr::Deref(_, p)
            | PExpr::Index(_, _, p)
            | PExpr::Neg(_, p)
            | PExpr::Bin(_, _, _, p)
            | PExpr::Cmp(_, _, _, p)
            | PExpr::And(_, _, p)
            | PExpr::Or(_, _, p)
            | PExpr::Not(_, p) => *p,
        }
    }

    fn into_value(self) -> Result<Expr, FrontendError> {
        match self {
            PExpr::Int(v, p) => Ok(Expr::IntLit(v, p)),
            PExpr::Null(p) => Ok(Expr::Null(p)),
            PExpr::Var(n, p) => Ok(Expr::Var(n, p)),
            PExpr::AddrOf(n, p) => Ok(Expr::AddrOf(n, p)),
            PExpr::Deref(e, p) => Ok(Expr::Deref(Box::new(e.into_value()?), p)),
            PExpr::Index(b, i, p) => {
                Ok(Expr::Index(Box::new(b.into_value()?), Box::new(i.into_value()?), p))
            }
            PExpr::Neg(e, p) => Ok(Expr::Unary(UnOp::Neg, Box::new(e.into_value()?), p)),
            PExpr::Bin(op, l, r, p) => {
                Ok(Expr::Binary(op, Box::new(l.into_value()?), Box::new(r.into_value()?), p))
            }
            PExpr::Cmp(_, _, _, p) | PExpr::And(_, _, p) | PExpr::Or(_, _, p)
            | PExpr::Not(_, p) => Err(FrontendError::type_(
                p,
                "a boolean expression cannot be used as a value",
            )),
        }
    }

    fn into_cond(self) -> Result<Cond, FrontendError> {
        match self {
            PExpr::Cmp(op, l, r, p) => Ok(Cond::Cmp(op, l.into_value()?, r.into_value()?, p)),
            PExpr::And(l, r, p) => {
                Ok(Cond::And(Box::new(l.into_cond()?), Box::new(r.into_cond()?), p))
            }
            PExpr::Or(l, r, p) => {
                Ok(Cond::Or(Box::new(l.into_cond()?), Box::new(r.into_cond()?), p))
            }
            PExpr::Not(e, p) => Ok(Cond::Not(Box::new(e.into_cond()?), p)),
            other => Err(FrontendError::type_(
                other.pos(),
                "condition must be a boolean expression (use a comparison)",
            )),
        }
    }
}

struct Parser {
    tokens: Vec<Token>,
    at: usize,
    next_stmt_id: u32,
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.tokens[self.at].tok
    }

    fn peek2(&self) -> &Tok {
        &self.tokens[(self.at + 1).min(self.tokens.len() - 1)].tok
    }

    fn pos(&self) -> Pos {
        self.tokens[self.at].pos
    }

    fn bump(&mut self) -> Tok {
        let t = self.tokens[self.at].tok.clone();
        if self.at < self.tokens.len() - 1 {
            self.at += 1;
        }
        t
    }

    fn expect(&mut self, want: Tok, what: &str) -> Result<Pos, FrontendError> {
        let pos = self.pos();
        if *self.peek() == want {
            self.bump();
            Ok(pos)
        } else {
            Err(FrontendError::syntax(
                pos,
                format!("expected {what}, found {}", self.peek().describe()),
            ))
        }
    }

    fn ident(&mut self, what: &str) -> Result<(String, Pos), FrontendError> {
        let pos = self.pos();
        match self.bump() {
            Tok::Ident(s) => Ok((s, pos)),
            other => Err(FrontendError::syntax(
                pos,
                format!("expected {what}, found {}", other.describe()),
            )),
        }
    }

    fn fresh_id(&mut self) -> StmtId {
        let id = StmtId(self.next_stmt_id);
        self.next_stmt_id += 1;
        id
    }

    fn program(&mut self) -> Result<MiniCProgram, FrontendError> {
        let mut prog = MiniCProgram::default();
        while *self.peek() != Tok::Eof {
            self.top_level(&mut prog)?;
        }
        prog.next_stmt_id = self.next_stmt_id;
        Ok(prog)
    }

    /// One top-level item: either a function (possibly `extern`/prototype) or
    /// one global declaration line (possibly several declarators).
    fn top_level(&mut self, prog: &mut MiniCProgram) -> Result<(), FrontendError> {
        let start = self.pos();
        let is_extern_kw = if *self.peek() == Tok::KwExtern {
            self.bump();
            true
        } else {
            false
        };

        let base = match self.bump() {
            Tok::KwVoid => None,
            Tok::KwInt => Some(Ty::Int),
            Tok::KwChar => Some(Ty::Char),
            other => {
                return Err(FrontendError::syntax(
                    start,
                    format!("expected a declaration, found {}", other.describe()),
                ));
            }
        };

        let mut stars = 0u32;
        while *self.peek() == Tok::Star {
            self.bump();
            stars += 1;
        }
        if base.is_none() && stars > 0 {
            return Err(FrontendError::unsupported(start, "void* is not supported"));
        }
        let (name, name_pos) = self.ident("a name")?;

        if *self.peek() == Tok::LParen {
            let ret = match base {
                None => RetTy::Void,
                Some(b) => {
                    let mut t = b;
                    for _ in 0..stars {
                        t = t.ptr_to();
                    }
                    RetTy::Val(t)
                }
            };
            let f = self.function_rest(name, name_pos, ret, is_extern_kw)?;
            prog.functions.push(f);
            return Ok(());
        }

        if is_extern_kw {
            return Err(FrontendError::unsupported(
                start,
                "`extern` applies to function declarations only",
            ));
        }
        let base = base.ok_or_else(|| {
            FrontendError::syntax(name_pos, "`void` is only valid as a function return type")
        })?;

        // Global declarator list; the first declarator's stars are consumed.
        let mut pending_stars = stars;
        let mut pending = (name, name_pos);
        loop {
            let decl = self.global_declarator(&base, pending_stars, pending.0, pending.1)?;
            prog.globals.push(decl);
            match self.bump() {
                Tok::Semi => break,
                Tok::Comma => {
                    let mut s = 0u32;
                    while *self.peek() == Tok::Star {
                        self.bump();
                        s += 1;
                    }
                    pending_stars = s;
                    pending = self.ident("a global name")?;
                }
                other => {
                    return Err(FrontendError::syntax(
                        start,
                        format!("expected `,` or `;` in declaration, found {}", other.describe()),
                    ));
                }
            }
        }
        Ok(())
    }

    fn global_declarator(
        &mut self,
        base: &Ty,
        stars: u32,
        name: String,
        pos: Pos,
    ) -> Result<GlobalDecl, FrontendError> {
        let mut ty = base.clone();
        for _ in 0..stars {
            ty = ty.ptr_to();
        }

        if *self.peek() == Tok::LBracket {
            if stars > 0 {
                return Err(FrontendError::unsupported(
                    pos,
                    "arrays of pointers are not supported",
                ));
            }
            self.bump();
            let len_pos = self.pos();
            let len = match self.bump() {
                Tok::Int(v) if v > 0 && v <= MAX_ARRAY_LEN => v as u32,
                Tok::Int(_) => {
                    return Err(FrontendError::syntax(
                        len_pos,
                        format!("array length must be in 1..={MAX_ARRAY_LEN}"),
                    ));
                }
                other => {
                    return Err(FrontendError::syntax(
                        len_pos,
                        format!("expected array length, found {}", other.describe()),
                    ));
                }
            };
            self.expect(Tok::RBracket, "`]`")?;
            if *self.peek() == Tok::Assign {
                return Err(FrontendError::unsupported(
                    pos,
                    "array initializers are not supported",
                ));
            }
            return Ok(GlobalDecl { name, kind: GlobalKind::Array { elem: ty, len }, pos });
        }

        let init = if *self.peek() == Tok::Assign {
            self.bump();
            let ip = self.pos();
            Some(match self.bump() {
                Tok::Int(v) => ConstInit::Int(v),
                Tok::Minus => match self.bump() {
                    Tok::Int(v) => ConstInit::Int(-v),
                    other => {
                        return Err(FrontendError::syntax(
                            ip,
                            format!("expected integer constant, found {}", other.describe()),
                        ));
                    }
                },
                Tok::KwNull => ConstInit::Null,
                other => {
                    return Err(FrontendError::syntax(
                        ip,
                        format!(
                            "global initializers must be integer constants or NULL, found {}",
                            other.describe()
                        ),
                    ));
                }
            })
        } else {
            None
        };
        Ok(GlobalDecl { name, kind: GlobalKind::Scalar { ty, init }, pos })
    }

    fn function_rest(
        &mut self,
        name: String,
        pos: Pos,
        ret: RetTy,
        extern_kw: bool,
    ) -> Result<Function, FrontendError> {
        self.expect(Tok::LParen, "`(`")?;
        let mut params = Vec::new();
        if *self.peek() == Tok::KwVoid && *self.peek2() == Tok::RParen {
            self.bump();
        }
        if *self.peek() != Tok::RParen {
            loop {
                let p_pos = self.pos();
                let base = match self.bump() {
                    Tok::KwInt => Ty::Int,
                    Tok::KwChar => Ty::Char,
                    other => {
                        return Err(FrontendError::syntax(
                            p_pos,
                            format!("expected parameter type, found {}", other.describe()),
                        ));
                    }
                };
                let mut ty = base;
                while *self.peek() == Tok::Star {
                    self.bump();
                    ty = ty.ptr_to();
                }
                let (pname, _) = self.ident("a parameter name")?;
                params.push(Param { name: pname, ty, pos: p_pos });
                match self.bump() {
                    Tok::Comma => continue,
                    Tok::RParen => break,
                    other => {
                        return Err(FrontendError::syntax(
                            p_pos,
                            format!("expected `,` or `)`, found {}", other.describe()),
                        ));
                    }
                }
            }
        } else {
            self.bump();
        }

        if *self.peek() == Tok::Semi {
            self.bump();
            return Ok(Function {
                name,
                ret,
                params,
                locals: Vec::new(),
                body: Vec::new(),
                is_extern: true,
                pos,
            });
        }
        if extern_kw {
            return Err(FrontendError::syntax(
                self.pos(),
                "`extern` function declarations cannot have a body",
            ));
        }

        self.expect(Tok::LBrace, "`{` or `;`")?;
        let mut locals = Vec::new();
        while matches!(self.peek(), Tok::KwInt | Tok::KwChar) {
            self.local_decl_line(&mut locals)?;
        }
        let body = self.stmt_list_until_rbrace()?;
        Ok(Function { name, ret, params, locals, body, is_extern: false, pos })
    }

    fn local_decl_line(&mut self, locals: &mut Vec<LocalDecl>) -> Result<(), FrontendError> {
        let pos = self.pos();
        let base = match self.bump() {
            Tok::KwInt => Ty::Int,
            Tok::KwChar => Ty::Char,
            _ => unreachable!("caller checked the type keyword"),
        };
        loop {
            let mut ty = base.clone();
            while *self.peek() == Tok::Star {
                self.bump();
                ty = ty.ptr_to();
            }
            let (name, npos) = self.ident("a local name")?;
            if *self.peek() == Tok::LBracket {
                return Err(FrontendError::unsupported(
                    npos,
                    "local arrays are not supported; declare arrays at global scope",
                ));
            }
            if *self.peek() == Tok::Assign {
                return Err(FrontendError::unsupported(
                    npos,
                    "local initializers are not supported; assign in a statement",
                ));
            }
            locals.push(LocalDecl { name, ty, pos: npos });
            match self.bump() {
                Tok::Comma => continue,
                Tok::Semi => return Ok(()),
                other => {
                    return Err(FrontendError::syntax(
                        pos,
                        format!("expected `,` or `;`, found {}", other.describe()),
                    ));
                }
            }
        }
    }

    fn stmt_list_until_rbrace(&mut self) -> Result<Vec<Stmt>, FrontendError> {
        let mut out = Vec::new();
        while *self.peek() != Tok::RBrace {
            if *self.peek() == Tok::Eof {
                return Err(FrontendError::syntax(self.pos(), "expected `}`, found end of input"));
            }
            out.push(self.stmt()?);
        }
        self.bump();
        Ok(out)
    }

    /// A statement body: a braced block or a single statement.
    fn body(&mut self) -> Result<Vec<Stmt>, FrontendError> {
        if *self.peek() == Tok::LBrace {
            self.bump();
            if matches!(self.peek(), Tok::KwInt | Tok::KwChar) {
                return Err(FrontendError::unsupported(
                    self.pos(),
                    "declarations are only allowed at the top of a function body",
                ));
            }
            self.stmt_list_until_rbrace()
        } else {
            Ok(vec![self.stmt()?])
        }
    }

    fn stmt(&mut self) -> Result<Stmt, FrontendError> {
        let pos = self.pos();
        match self.peek().clone() {
            Tok::KwIf => {
                self.bump();
                self.expect(Tok::LParen, "`(`")?;
                let cond = self.pexpr()?.into_cond()?;
                self.expect(Tok::RParen, "`)`")?;
                let then_body = self.body()?;
                let else_body = if *self.peek() == Tok::KwElse {
                    self.bump();
                    self.body()?
                } else {
                    Vec::new()
                };
                Ok(Stmt { kind: StmtKind::If { cond, then_body, else_body }, id: self.fresh_id(), pos })
            }
            Tok::KwWhile => {
                self.bump();
                self.expect(Tok::LParen, "`(`")?;
                let cond = self.pexpr()?.into_cond()?;
                self.expect(Tok::RParen, "`)`")?;
                let body = self.body()?;
                Ok(Stmt { kind: StmtKind::While { cond, body }, id: self.fresh_id(), pos })
            }
            Tok::KwReturn => {
                self.bump();
                let value = if *self.peek() == Tok::Semi {
                    None
                } else {
                    Some(self.pexpr()?.into_value()?)
                };
                self.expect(Tok::Semi, "`;`")?;
                Ok(Stmt { kind: StmtKind::Return { value }, id: self.fresh_id(), pos })
            }
            Tok::KwFire => {
                self.bump();
                self.expect(Tok::LParen, "`(`")?;
                let machine = self.string_arg("a machine name string")?;
                self.expect(Tok::Comma, "`,`")?;
                let label = self.string_arg("a transition label string")?;
                let binder = if *self.peek() == Tok::Comma {
                    self.bump();
                    Some(self.pexpr()?.into_value()?)
                } else {
                    None
                };
                self.expect(Tok::RParen, "`)`")?;
                self.expect(Tok::Semi, "`;`")?;
                Ok(Stmt { kind: StmtKind::Fire { machine, label, binder }, id: self.fresh_id(), pos })
            }
            Tok::Ident(name) => {
                // `x++;` | `f(args);` | `lvalue = ...;`
                if *self.peek2() == Tok::PlusPlus {
                    self.bump();
                    self.bump();
                    self.expect(Tok::Semi, "`;`")?;
                    let lhs = LValue::Var(name.clone(), pos);
                    let rhs = Expr::Binary(
                        BinOp::Add,
                        Box::new(Expr::Var(name, pos)),
                        Box::new(Expr::IntLit(1, pos)),
                        pos,
                    );
                    return Ok(Stmt { kind: StmtKind::Assign { lhs, rhs }, id: self.fresh_id(), pos });
                }
                if *self.peek2() == Tok::LParen {
                    let call = self.call()?;
                    self.expect(Tok::Semi, "`;` (calls cannot appear inside expressions)")?;
                    return Ok(Stmt { kind: StmtKind::Call { call }, id: self.fresh_id(), pos });
                }
                self.assign_stmt(pos)
            }
            Tok::Star => self.assign_stmt(pos),
            other => Err(FrontendError::syntax(
                pos,
                format!("expected a statement, found {}", other.describe()),
            )),
        }
    }

    fn string_arg(&mut self, what: &str) -> Result<String, FrontendError> {
        let pos = self.pos();
        match self.bump() {
            Tok::Str(s) => Ok(s),
            other => Err(FrontendError::syntax(
                pos,
                format!("expected {what}, found {}", other.describe()),
            )),
        }
    }

    fn assign_stmt(&mut self, pos: Pos) -> Result<Stmt, FrontendError> {
        let lhs_expr = self.unary()?;
        let lhs = match lhs_expr {
            PExpr::Var(n, p) => LValue::Var(n, p),
            PExpr::Deref(e, p) => LValue::Deref(e.into_value()?, p),
            PExpr::Index(b, i, p) => LValue::Index(b.into_value()?, i.into_value()?, p),
            other => {
                return Err(FrontendError::syntax(
                    other.pos(),
                    "assignment target must be a variable, `*p`, or `p[i]`",
                ));
            }
        };
        self.expect(Tok::Assign, "`=`")?;
        if matches!(self.peek(), Tok::Ident(_)) && *self.peek2() == Tok::LParen {
            let call = self.call()?;
            self.expect(Tok::Semi, "`;` (calls cannot appear inside expressions)")?;
            return Ok(Stmt { kind: StmtKind::AssignCall { lhs, call }, id: self.fresh_id(), pos });
        }
        let rhs = self.pexpr()?.into_value()?;
        self.expect(Tok::Semi, "`;`")?;
        Ok(Stmt { kind: StmtKind::Assign { lhs, rhs }, id: self.fresh_id(), pos })
    }

    fn call(&mut self) -> Result<Call, FrontendError> {
        let (callee, pos) = self.ident("a function name")?;
        self.expect(Tok::LParen, "`(`")?;
        let mut args = Vec::new();
        if *self.peek() != Tok::RParen {
            loop {
                args.push(self.pexpr()?.into_value()?);
                match self.bump() {
                    Tok::Comma => continue,
                    Tok::RParen => return Ok(Call { callee, args, pos }),
                    other => {
                        return Err(FrontendError::syntax(
                            pos,
                            format!("expected `,` or `)`, found {}", other.describe()),
                        ));
                    }
                }
            }
        }
        self.bump();
        Ok(Call { callee, args, pos })
    }

    // ---- unified expression grammar, lowest to highest precedence ----

    fn pexpr(&mut self) -> Result<PExpr, FrontendError> {
        self.or_expr()
    }

    fn or_expr(&mut self) -> Result<PExpr, FrontendError> {
        let mut l = self.and_expr()?;
        while *self.peek() == Tok::OrOr {
            let pos = self.pos();
            self.bump();
            let r = self.and_expr()?;
            l = PExpr::Or(Box::new(l), Box::new(r), pos);
        }
        Ok(l)
    }

    fn and_expr(&mut self) -> Result<PExpr, FrontendError> {
        let mut l = self.cmp_expr()?;
        while *self.peek() == Tok::AndAnd {
            let pos = self.pos();
            self.bump();
            let r = self.cmp_expr()?;
            l = PExpr::And(Box::new(l), Box::new(r), pos);
        }
        Ok(l)
    }

    fn cmp_expr(&mut self) -> Result<PExpr, FrontendError> {
        let l = self.add_expr()?;
        let op = match self.peek() {
            Tok::Eq => Some(CmpOp::Eq),
            Tok::Ne => Some(CmpOp::Ne),
            Tok::Lt => Some(CmpOp::Lt),
            Tok::Gt => Some(CmpOp::Gt),
            Tok::Le => Some(CmpOp::Le),
            Tok::Ge => Some(CmpOp::Ge),
            _ => None,
        };
        let Some(op) = op else { return Ok(l) };
        let pos = self.pos();
        self.bump();
        let r = self.add_expr()?;
        if matches!(self.peek(), Tok::Eq | Tok::Ne | Tok::Lt | Tok::Gt | Tok::Le | Tok::Ge) {
            return Err(FrontendError::syntax(
                self.pos(),
                "comparison chains are not supported; parenthesize or use `&&`",
            ));
        }
        Ok(PExpr::Cmp(op, Box::new(l), Box::new(r), pos))
    }

    fn add_expr(&mut self) -> Result<PExpr, FrontendError> {
        let mut l = self.mul_expr()?;
        loop {
            let op = match self.peek() {
                Tok::Plus => BinOp::Add,
                Tok::Minus => BinOp::Sub,
                _ => return Ok(l),
            };
            let pos = self.pos();
            self.bump();
            let r = self.mul_expr()?;
            l = PExpr::Bin(op, Box::new(l), Box::new(r), pos);
        }
    }

    fn mul_expr(&mut self) -> Result<PExpr, FrontendError> {
        let mut l = self.unary()?;
        while *self.peek() == Tok::Star {
            let pos = self.pos();
            self.bump();
            let r = self.unary()?;
            l = PExpr::Bin(BinOp::Mul, Box::new(l), Box::new(r), pos);
        }
        Ok(l)
    }

    fn unary(&mut self) -> Result<PExpr, FrontendError> {
        let pos = self.pos();
        match self.peek() {
            Tok::Not => {
                self.bump();
                Ok(PExpr::Not(Box::new(self.unary()?), pos))
            }
            Tok::Minus => {
                self.bump();
                Ok(PExpr::Neg(Box::new(self.unary()?), pos))
            }
            Tok::Star => {
                self.bump();
                Ok(PExpr::Deref(Box::new(self.unary()?), pos))
            }
            Tok::Amp => {
                self.bump();
                let (name, _) = self.ident("a variable name after `&`")?;
                Ok(PExpr::AddrOf(name, pos))
            }
            _ => self.postfix(),
        }
    }

    fn postfix(&mut self) -> Result<PExpr, FrontendError> {
        let mut e = self.primary()?;
        while *self.peek() == Tok::LBracket {
            let pos = self.pos();
            self.bump();
            let idx = self.pexpr()?;
            self.expect(Tok::RBracket, "`]`")?;
            e = PExpr::Index(Box::new(e), Box::new(idx), pos);
        }
        Ok(e)
    }

    fn primary(&mut self) -> Result<PExpr, FrontendError> {
        let pos = self.pos();
        match self.bump() {
            Tok::Int(v) => Ok(PExpr::Int(v, pos)),
            Tok::KwNull => Ok(PExpr::Null(pos)),
            Tok::Ident(n) => {
                if *self.peek() == Tok::LParen {
                    return Err(FrontendError::syntax(
                        pos,
                        "calls cannot appear inside expressions; use `x = f(...);`",
                    ));
                }
                Ok(PExpr::Var(n, pos))
            }
            Tok::LParen => {
                let e = self.pexpr()?;
                self.expect(Tok::RParen, "`)`")?;
                Ok(e)
            }
            other => Err(FrontendError::syntax(
                pos,
                format!("expected an expression, found {}", other.describe()),
            )),
        }
    }
}
