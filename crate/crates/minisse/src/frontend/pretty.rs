//! Turns an AST back into MiniC source. Output is stable (a fixed point of
//! parse ∘ print) and re-parseable, which is what the instrumentation and
//! slicing commands emit.

use crate::frontend::ast::*;

pub fn print_program(p: &MiniCProgram) -> String {
    let mut out = String::new();
    for g in &p.globals {
        print_global(&mut out, g);
    }
    if !p.globals.is_empty() && !p.functions.is_empty() {
        out.push('\n');
    }
    let mut first = true;
    for f in &p.functions {
        if !first {
            out.push('\n');
        }
        first = false;
        print_function(&mut out, f);
    }
    out
}

fn print_global(out: &mut String, g: &GlobalDecl) {
    match &g.kind {
        GlobalKind::Scalar { ty, init } => {
            out.push_str(&decl(ty, &g.name));
            match init {
                Some(ConstInit::Int(v)) => out.push_str(&format!(" = {v}")),
                Some(ConstInit::Null) => out.push_str(" = NULL"),
                None => {}
            }
            out.push_str(";\n");
        }
        GlobalKind::Array { elem, len } => {
            out.push_str(&format!("{}[{}];\n", decl(elem, &g.name), len));
        }
    }
}

fn print_function(out: &mut String, f: &Function) {
    if f.is_extern {
        out.push_str("extern ");
    }
    let header = match &f.ret {
        RetTy::Void => format!("void {}", f.name),
        RetTy::Val(t) => decl(t, &f.name),
    };
    out.push_str(&format!("{header}("));
    if f.params.is_empty() {
        out.push_str("void");
    } else {
        let ps: Vec<String> = f.params.iter().map(|p| decl(&p.ty, &p.name)).collect();
        out.push_str(&ps.join(", "));
    }
    out.push(')');
    if f.is_extern {
        out.push_str(";\n");
        return;
    }
    out.push_str(" {\n");
    for l in &f.locals {
        out.push_str(&format!("    {};\n", decl(&l.ty, &l.name)));
    }
    print_stmts(out, &f.body, 1);
    out.push_str("}\n");
}

/// `int x`, `char *p`, `int **pp` — the pointer stars bind to the name.
fn decl(ty: &Ty, name: &str) -> String {
    let mut stars = String::new();
    let mut t = ty;
    while let Ty::Ptr(inner) = t {
        stars.push('*');
        t = inner;
    }
    format!("{t} {stars}{name}")
}

fn print_stmts(out: &mut String, stmts: &[Stmt], depth: usize) {
    for s in stmts {
        print_stmt(out, s, depth);
    }
}

fn print_stmt(out: &mut String, s: &Stmt, depth: usize) {
    let pad = "    ".repeat(depth);
    match &s.kind {
        StmtKind::Assign { lhs, rhs } => {
            out.push_str(&format!("{pad}{} = {};\n", lvalue(lhs), expr(rhs, 0)));
        }
        StmtKind::Call { call } => {
            out.push_str(&format!("{pad}{};\n", call_str(call)));
        }
        StmtKind::AssignCall { lhs, call } => {
            out.push_str(&format!("{pad}{} = {};\n", lvalue(lhs), call_str(call)));
        }
        StmtKind::If { cond, then_body, else_body } => {
            out.push_str(&format!("{pad}if ({}) {{\n", cond_str(cond, 0)));
            print_stmts(out, then_body, depth + 1);
            if else_body.is_empty() {
                out.push_str(&format!("{pad}}}\n"));
            } else {
                out.push_str(&format!("{pad}}} else {{\n"));
                print_stmts(out, else_body, depth + 1);
                out.push_str(&format!("{pad}}}\n"));
            }
        }
        StmtKind::While { cond, body } => {
            out.push_str(&format!("{pad}while ({}) {{\n", cond_str(cond, 0)));
            print_stmts(out, body, depth + 1);
            out.push_str(&format!("{pad}}}\n"));
        }
        StmtKind::Return { value } => match value {
            Some(v) => out.push_str(&format!("{pad}return {};\n", expr(v, 0))),
            None => out.push_str(&format!("{pad}return;\n")),
        },
        StmtKind::Fire { machine, label, binder } => match binder {
            Some(b) => out.push_str(&format!(
                "{pad}__fire(\"{machine}\", \"{label}\", {});\n",
                expr(b, 0)
            )),
            None => out.push_str(&format!("{pad}__fire(\"{machine}\", \"{label}\");\n")),
        },
    }
}

fn call_str(c: &Call) -> String {
    let args: Vec<String> = c.args.iter().map(|a| expr(a, 0)).collect();
    format!("{}({})", c.callee, args.join(", "))
}

fn lvalue(lv: &LValue) -> String {
    match lv {
        LValue::Var(n, _) => n.clone(),
        LValue::Deref(e, _) => format!("*{}", expr(e, 3)),
        LValue::Index(b, i, _) => format!("{}[{}]", expr(b, 4), expr(i, 0)),
    }
}

/// Condition precedence: `||` = 0, `&&` = 1, atoms above.
fn cond_str(c: &Cond, min: u8) -> String {
    let (s, prec) = match c {
        Cond::Or(a, b, _) => (format!("{} || {}", cond_str(a, 0), cond_str(b, 1)), 0),
        Cond::And(a, b, _) => (format!("{} && {}", cond_str(a, 1), cond_str(b, 2)), 1),
        Cond::Not(inner, _) => (format!("!({})", cond_str(inner, 0)), 2),
        Cond::Cmp(op, l, r, _) => (format!("{} {op} {}", expr(l, 1), expr(r, 1)), 2),
    };
    if prec < min {
        format!("({s})")
    } else {
        s
    }
}

/// Expression precedence: additive = 1, multiplicative = 2, unary = 3,
/// postfix = 4. `min` is the weakest precedence printable without parens.
fn expr(e: &Expr, min: u8) -> String {
    let (s, prec) = match e {
        Expr::IntLit(v, _) => (v.to_string(), 5),
        Expr::Null(_) => ("NULL".to_string(), 5),
        Expr::Var(n, _) => (n.clone(), 5),
        Expr::AddrOf(n, _) => (format!("&{n}"), 3),
        Expr::Deref(inner, _) => (format!("*{}", expr(inner, 3)), 3),
        Expr::Unary(UnOp::Neg, inner, _) => (format!("-{}", expr(inner, 3)), 3),
        Expr::Index(b, i, _) => (format!("{}[{}]", expr(b, 4), expr(i, 0)), 4),
        Expr::Binary(op, l, r, _) => {
            let prec = match op {
                BinOp::Add | BinOp::Sub => 1,
                BinOp::Mul => 2,
            };
            // Left-associative: the right child needs strictly higher binding.
            (format!("{} {op} {}", expr(l, prec), expr(r, prec + 1)), prec)
        }
    };
    if prec < min {
        format!("({s})")
    } else {
        s
    }
}
