//! Built-in path-condition solver: normalization and constant folding at
//! expression construction, interval propagation per symbol, then a
//! systematic assignment search over the configured width with
//! propagation-guided ordering and zero-first value order.
//!
//! Everything is deterministic in (formula, budget): budget units are
//! narrowing steps plus assignments tried. UNSAT is only ever returned with
//! a proof (interval contradiction, or exhaustion of the finite search
//! space); a satisfying model is verified by substitution before it is
//! returned; budget exhaustion yields UNKNOWN.
//!
//! Interval arithmetic is wrap-aware: any operation whose result could leave
//! the cell width widens to the full domain instead of assuming ideal
//! integers, so `x + 1 < x` correctly stays satisfiable.

use std::collections::BTreeMap;

use crate::frontend::ast::CmpOp;

use super::expr::{negate, Model, SymBool, SymExpr, SymId, SymTable, Width};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SolveResult {
    Sat(Model),
    Unsat,
    Unknown,
}

/// Inclusive interval; empty iff `lo > hi`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct Iv {
    lo: i64,
    hi: i64,
}

impl Iv {
    fn full(w: Width) -> Iv {
        Iv { lo: w.min(), hi: w.max() }
    }

    fn point(v: i64) -> Iv {
        Iv { lo: v, hi: v }
    }

    fn is_empty(self) -> bool {
        self.lo > self.hi
    }

    fn meet(self, other: Iv) -> Iv {
        Iv { lo: self.lo.max(other.lo), hi: self.hi.min(other.hi) }
    }

    fn hull(self, other: Iv) -> Iv {
        Iv { lo: self.lo.min(other.lo), hi: self.hi.max(other.hi) }
    }

    fn len(self) -> u64 {
        if self.is_empty() {
            0
        } else {
            (self.hi as i128 - self.lo as i128 + 1) as u64
        }
    }
}

struct Solver {
    width: Width,
    conjuncts: Vec<SymBool>,
    /// Current domain per symbol (only symbols that occur in the formula).
    env: BTreeMap<SymId, Iv>,
    budget: u64,
    spent: u64,
}

struct Contradiction;
struct OutOfBudget;

enum Stop {
    Contradiction,
    OutOfBudget,
}

impl From<Contradiction> for Stop {
    fn from(_: Contradiction) -> Stop {
        Stop::Contradiction
    }
}

impl From<OutOfBudget> for Stop {
    fn from(_: OutOfBudget) -> Stop {
        Stop::OutOfBudget
    }
}

/// Decide a conjunction of constraints. See the module docs for the
/// algorithm and the budget contract.
pub fn solve(pc: &[SymBool], table: &SymTable, width: Width, budget: u64) -> SolveResult {
    // Flatten conjunctions and fold literals.
    let mut conjuncts = Vec::new();
    let mut stack: Vec<&SymBool> = pc.iter().collect();
    while let Some(b) = stack.pop() {
        match b {
            SymBool::Const(true) => {}
            SymBool::Const(false) => return SolveResult::Unsat,
            SymBool::And(x, y) => {
                stack.push(x);
                stack.push(y);
            }
            other => conjuncts.push(other.clone()),
        }
    }
    conjuncts.sort();
    conjuncts.dedup();

    let mut env = BTreeMap::new();
    for c in &conjuncts {
        let mut syms = std::collections::BTreeSet::new();
        c.syms(&mut syms);
        for s in syms {
            let dom =
                if table.info(s).boolean { Iv { lo: 0, hi: 1 } } else { Iv::full(width) };
            env.insert(s, dom);
        }
    }

    let mut solver = Solver { width, conjuncts, env, budget, spent: 0 };
    match solver.propagate() {
        Err(Stop::Contradiction) => return SolveResult::Unsat,
        Err(Stop::OutOfBudget) => return SolveResult::Unknown,
        Ok(()) => {}
    }
    match solver.search() {
        Ok(Some(model)) => SolveResult::Sat(model),
        Ok(None) => SolveResult::Unsat,
        Err(_) => SolveResult::Unknown,
    }
}

impl Solver {
    fn charge(&mut self) -> Result<(), OutOfBudget> {
        self.spent += 1;
        if self.spent > self.budget {
            Err(OutOfBudget)
        } else {
            Ok(())
        }
    }

    fn iv(&self, s: SymId) -> Iv {
        self.env[&s]
    }

    /// Forward interval of an expression, widening to the full domain
    /// whenever a result could wrap.
    fn eval_iv(&self, e: &SymExpr) -> Iv {
        let full = Iv::full(self.width);
        let clamp = |lo: i128, hi: i128| -> Iv {
            if lo >= full.lo as i128 && hi <= full.hi as i128 {
                Iv { lo: lo as i64, hi: hi as i64 }
            } else {
                full
            }
        };
        match e {
            SymExpr::Const(v) => Iv::point(*v),
            SymExpr::Sym(s) => self.iv(*s),
            SymExpr::Neg(a) => {
                let ia = self.eval_iv(a);
                clamp(-(ia.hi as i128), -(ia.lo as i128))
            }
            SymExpr::Add(a, b) => {
                let (ia, ib) = (self.eval_iv(a), self.eval_iv(b));
                clamp(ia.lo as i128 + ib.lo as i128, ia.hi as i128 + ib.hi as i128)
            }
            SymExpr::Sub(a, b) => {
                let (ia, ib) = (self.eval_iv(a), self.eval_iv(b));
                clamp(ia.lo as i128 - ib.hi as i128, ia.hi as i128 - ib.lo as i128)
            }
            SymExpr::Mul(a, b) => {
                let (ia, ib) = (self.eval_iv(a), self.eval_iv(b));
                let corners = [
                    ia.lo as i128 * ib.lo as i128,
                    ia.lo as i128 * ib.hi as i128,
                    ia.hi as i128 * ib.lo as i128,
                    ia.hi as i128 * ib.hi as i128,
                ];
                clamp(*corners.iter().min().unwrap(), *corners.iter().max().unwrap())
            }
            SymExpr::Ite(c, t, e2) => match self.truth(c) {
                Some(true) => self.eval_iv(t),
                Some(false) => self.eval_iv(e2),
                None => self.eval_iv(t).hull(self.eval_iv(e2)),
            },
        }
    }

    /// Three-valued truth under the current domains.
    fn truth(&self, b: &SymBool) -> Option<bool> {
        match b {
            SymBool::Const(v) => Some(*v),
            SymBool::Cmp(op, a, c) => {
                let (ia, ic) = (self.eval_iv(a), self.eval_iv(c));
                match op {
                    CmpOp::Lt => decide(ia.hi < ic.lo, ia.lo >= ic.hi),
                    CmpOp::Le => decide(ia.hi <= ic.lo, ia.lo > ic.hi),
                    CmpOp::Gt => decide(ia.lo > ic.hi, ia.hi <= ic.lo),
                    CmpOp::Ge => decide(ia.lo >= ic.hi, ia.hi < ic.lo),
                    CmpOp::Eq => decide(
                        ia.lo == ia.hi && ic.lo == ic.hi && ia.lo == ic.lo,
                        ia.hi < ic.lo || ic.hi < ia.lo,
                    ),
                    CmpOp::Ne => decide(
                        ia.hi < ic.lo || ic.hi < ia.lo,
                        ia.lo == ia.hi && ic.lo == ic.hi && ia.lo == ic.lo,
                    ),
                }
            }
            SymBool::And(a, b2) => match (self.truth(a), self.truth(b2)) {
                (Some(false), _) | (_, Some(false)) => Some(false),
                (Some(true), Some(true)) => Some(true),
                _ => None,
            },
            SymBool::Or(a, b2) => match (self.truth(a), self.truth(b2)) {
                (Some(true), _) | (_, Some(true)) => Some(true),
                (Some(false), Some(false)) => Some(false),
                _ => None,
            },
            SymBool::Not(a) => self.truth(a).map(|v| !v),
        }
    }

    /// Round-robin narrowing until no domain changes.
    fn propagate(&mut self) -> Result<(), Stop> {
        loop {
            let mut changed = false;
            for i in 0..self.conjuncts.len() {
                let c = self.conjuncts[i].clone();
                self.charge()?;
                changed |= self.narrow_bool(&c, true)?;
            }
            if !changed {
                return Ok(());
            }
        }
    }

    /// Narrow domains so `b == want` can still hold; error on contradiction.
    fn narrow_bool(&mut self, b: &SymBool, want: bool) -> Result<bool, Stop> {
        match (b, want) {
            (SymBool::Const(v), _) => {
                if *v != want {
                    return Err(Stop::Contradiction);
                }
                Ok(false)
            }
            (SymBool::Cmp(op, a, c), _) => {
                let op = if want { *op } else { negate(*op) };
                self.narrow_cmp(op, a, c)
            }
            (SymBool::And(x, y), true) => {
                let c1 = self.narrow_bool(x, true)?;
                let c2 = self.narrow_bool(y, true)?;
                Ok(c1 || c2)
            }
            (SymBool::Or(x, y), false) => {
                let c1 = self.narrow_bool(x, false)?;
                let c2 = self.narrow_bool(y, false)?;
                Ok(c1 || c2)
            }
            (SymBool::And(x, y), false) => {
                // Only narrowable once one side is known true.
                match (self.truth(x), self.truth(y)) {
                    (Some(true), _) => self.narrow_bool(y, false),
                    (_, Some(true)) => self.narrow_bool(x, false),
                    (Some(false), _) | (_, Some(false)) => Ok(false),
                    _ => Ok(false),
                }
            }
            (SymBool::Or(x, y), true) => match (self.truth(x), self.truth(y)) {
                (Some(false), _) => self.narrow_bool(y, true),
                (_, Some(false)) => self.narrow_bool(x, true),
                (Some(true), _) | (_, Some(true)) => Ok(false),
                _ => Ok(false),
            },
            (SymBool::Not(x), _) => self.narrow_bool(x, !want),
        }
    }

    fn narrow_cmp(&mut self, op: CmpOp, a: &SymExpr, b: &SymExpr) -> Result<bool, Stop> {
        let full = Iv::full(self.width);
        let (ia, ib) = (self.eval_iv(a), self.eval_iv(b));
        let (want_a, want_b) = match op {
            CmpOp::Lt => (
                Iv { lo: full.lo, hi: ib.hi.saturating_sub(1) },
                Iv { lo: ia.lo.saturating_add(1), hi: full.hi },
            ),
            CmpOp::Le => (Iv { lo: full.lo, hi: ib.hi }, Iv { lo: ia.lo, hi: full.hi }),
            CmpOp::Gt => (
                Iv { lo: ib.lo.saturating_add(1), hi: full.hi },
                Iv { lo: full.lo, hi: ia.hi.saturating_sub(1) },
            ),
            CmpOp::Ge => (Iv { lo: ib.lo, hi: full.hi }, Iv { lo: full.lo, hi: ia.hi }),
            CmpOp::Eq => (ib, ia),
            CmpOp::Ne => {
                // Only narrows when one side is a point at the other's edge.
                let mut changed = false;
                if ib.lo == ib.hi {
                    let mut na = ia;
                    if na.lo == ib.lo {
                        na.lo += 1;
                    }
                    if na.hi == ib.lo {
                        na.hi -= 1;
                    }
                    changed |= self.narrow_expr(a, na)?;
                }
                if ia.lo == ia.hi {
                    let mut nb = ib;
                    if nb.lo == ia.lo {
                        nb.lo += 1;
                    }
                    if nb.hi == ia.lo {
                        nb.hi -= 1;
                    }
                    changed |= self.narrow_expr(b, nb)?;
                }
                return Ok(changed);
            }
        };
        let c1 = self.narrow_expr(a, want_a)?;
        let c2 = self.narrow_expr(b, want_b)?;
        Ok(c1 || c2)
    }

    /// Require `e`'s value to lie in `want`, pushing the demand down to
    /// symbols where the algebra is exact (wrap-free).
    fn narrow_expr(&mut self, e: &SymExpr, want: Iv) -> Result<bool, Stop> {
        if want.is_empty() {
            return Err(Stop::Contradiction);
        }
        let full = Iv::full(self.width);
        if want.lo <= full.lo && want.hi >= full.hi {
            return Ok(false);
        }
        match e {
            SymExpr::Const(v) => {
                if *v < want.lo || *v > want.hi {
                    return Err(Stop::Contradiction);
                }
                Ok(false)
            }
            SymExpr::Sym(s) => {
                let cur = self.iv(*s);
                let next = cur.meet(want);
                if next.is_empty() {
                    return Err(Stop::Contradiction);
                }
                if next != cur {
                    self.env.insert(*s, next);
                    return Ok(true);
                }
                Ok(false)
            }
            SymExpr::Neg(x) => {
                // Pre-image is exact only when the negation cannot wrap.
                let ix = self.eval_iv(x);
                if ix.lo > full.lo {
                    self.narrow_expr(x, Iv { lo: -want.hi, hi: -want.lo })
                } else {
                    Ok(false)
                }
            }
            SymExpr::Add(x, y) => {
                let (ix, iy) = (self.eval_iv(x), self.eval_iv(y));
                if exact_add(ix, iy, full) {
                    let c1 = self.narrow_expr(
                        x,
                        Iv {
                            lo: want.lo.saturating_sub(iy.hi),
                            hi: want.hi.saturating_sub(iy.lo),
                        },
                    )?;
                    let c2 = self.narrow_expr(
                        y,
                        Iv {
                            lo: want.lo.saturating_sub(ix.hi),
                            hi: want.hi.saturating_sub(ix.lo),
                        },
                    )?;
                    return Ok(c1 || c2);
                }
                Ok(false)
            }
            SymExpr::Sub(x, y) => {
                let (ix, iy) = (self.eval_iv(x), self.eval_iv(y));
                if exact_sub(ix, iy, full) {
                    let c1 = self.narrow_expr(
                        x,
                        Iv {
                            lo: want.lo.saturating_add(iy.lo),
                            hi: want.hi.saturating_add(iy.hi),
                        },
                    )?;
                    let c2 = self.narrow_expr(
                        y,
                        Iv {
                            lo: ix.lo.saturating_sub(want.hi),
                            hi: ix.hi.saturating_sub(want.lo),
                        },
                    )?;
                    return Ok(c1 || c2);
                }
                Ok(false)
            }
            SymExpr::Mul(x, y) => {
                // Narrow through multiplication by a nonzero constant when
                // the product cannot wrap.
                let narrow_by_const = |this: &mut Self, var: &SymExpr, c: i64| {
                    if c == 0 {
                        return Ok(false);
                    }
                    let iv = this.eval_iv(var);
                    let wraps = (iv.lo as i128 * c as i128) < full.lo as i128
                        || (iv.hi as i128 * c as i128) > full.hi as i128
                        || (iv.lo as i128 * c as i128) > full.hi as i128
                        || (iv.hi as i128 * c as i128) < full.lo as i128;
                    if wraps {
                        return Ok(false);
                    }
                    let (lo, hi) = if c > 0 {
                        (div_ceil(want.lo, c), div_floor(want.hi, c))
                    } else {
                        (div_ceil(want.hi, c), div_floor(want.lo, c))
                    };
                    this.narrow_expr(var, Iv { lo, hi })
                };
                match (x.as_const(), y.as_const()) {
                    (Some(c), None) => narrow_by_const(self, y, c),
                    (None, Some(c)) => narrow_by_const(self, x, c),
                    _ => Ok(false),
                }
            }
            SymExpr::Ite(..) => Ok(false),
        }
    }

    /// Depth-first assignment search: smallest domain first, values in
    /// zero-first spiral order, propagating after each assignment.
    fn search(&mut self) -> Result<Option<Model>, OutOfBudget> {
        let mut order: Vec<SymId> = self.env.keys().copied().collect();
        order.sort_by_key(|s| (self.env[s].len(), *s));
        let mut model = Model::new();
        self.assign(&order, 0, &mut model)
    }

    fn assign(
        &mut self,
        order: &[SymId],
        depth: usize,
        model: &mut Model,
    ) -> Result<Option<Model>, OutOfBudget> {
        if depth == order.len() {
            // Verify by substitution: interval widening around wrapping
            // operations can let spurious assignments reach a leaf, and
            // they are rejected here rather than ever reported as models.
            let ok = self.conjuncts.iter().all(|c| c.eval(model, self.width));
            return Ok(if ok { Some(model.clone()) } else { None });
        }
        let s = order[depth];
        let dom = self.iv(s);
        for v in SpiralValues::new(dom) {
            if self.charge().is_err() {
                return Err(OutOfBudget);
            }
            let saved = self.env.clone();
            self.env.insert(s, Iv::point(v));
            let feasible = match self.propagate() {
                Ok(()) => true,
                Err(Stop::Contradiction) => false,
                Err(Stop::OutOfBudget) => {
                    self.env = saved;
                    return Err(OutOfBudget);
                }
            };
            if feasible {
                model.insert(s, v);
                if let Some(found) = self.assign(order, depth + 1, model)? {
                    return Ok(Some(found));
                }
                model.remove(&s);
            }
            self.env = saved;
        }
        Ok(None)
    }
}

fn decide(yes: bool, no: bool) -> Option<bool> {
    if yes {
        Some(true)
    } else if no {
        Some(false)
    } else {
        None
    }
}

fn exact_add(a: Iv, b: Iv, full: Iv) -> bool {
    a.lo as i128 + b.lo as i128 >= full.lo as i128 && a.hi as i128 + b.hi as i128 <= full.hi as i128
}

fn exact_sub(a: Iv, b: Iv, full: Iv) -> bool {
    a.lo as i128 - b.hi as i128 >= full.lo as i128 && a.hi as i128 - b.lo as i128 <= full.hi as i128
}

fn div_floor(a: i64, b: i64) -> i64 {
    let q = a / b;
    if (a % b != 0) && ((a < 0) != (b < 0)) {
        q - 1
    } else {
        q
    }
}

fn div_ceil(a: i64, b: i64) -> i64 {
    let q = a / b;
    if (a % b != 0) && ((a < 0) == (b < 0)) {
        q + 1
    } else {
        q
    }
}

/// Yields an interval's values in 0, 1, -1, 2, -2, … order (clipped to the
/// interval; intervals entirely on one side of zero enumerate from the
/// endpoint nearest zero outward).
struct SpiralValues {
    iv: Iv,
    next_pos: i64,
    next_neg: i64,
}

impl SpiralValues {
    fn new(iv: Iv) -> SpiralValues {
        SpiralValues { iv, next_pos: iv.lo.max(0), next_neg: iv.hi.min(-1) }
    }
}

impl Iterator for SpiralValues {
    type Item = i64;

    fn next(&mut self) -> Option<i64> {
        let pos_ok = self.next_pos <= self.iv.hi && self.next_pos >= 0;
        let neg_ok = self.next_neg >= self.iv.lo && self.next_neg < 0;
        let take_pos = match (pos_ok, neg_ok) {
            // Prefer the smaller magnitude; ties go to the positive side.
            (true, true) => self.next_pos <= -self.next_neg,
            (true, false) => true,
            (false, true) => false,
            (false, false) => return None,
        };
        if take_pos {
            let v = self.next_pos;
            self.next_pos += 1;
            Some(v)
        } else {
            let v = self.next_neg;
            self.next_neg -= 1;
            Some(v)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symexec::expr::SymPlace;

    const W8: Width = Width(8);

    fn table_with(names: &[&str]) -> (SymTable, Vec<SymExpr>) {
        let mut t = SymTable::default();
        let syms = names
            .iter()
            .map(|n| SymExpr::Sym(t.fresh(*n, false, SymPlace::Free)))
            .collect();
        (t, syms)
    }

    fn gt(a: &SymExpr, v: i64) -> SymBool {
        SymBool::cmp(CmpOp::Gt, a.clone(), SymExpr::Const(v))
    }

    #[test]
    fn contradictions_are_proven_unsat() {
        let (t, s) = table_with(&["n"]);
        let n = &s[0];
        let pc = vec![gt(n, 0), SymBool::not(gt(n, 0))];
        assert_eq!(solve(&pc, &t, W8, 10_000), SolveResult::Unsat);
    }

    #[test]
    fn the_empty_conjunction_is_vacuously_sat() {
        let t = SymTable::default();
        match solve(&[], &t, W8, 10) {
            SolveResult::Sat(m) => assert!(m.is_empty()),
            other => panic!("expected SAT, got {other:?}"),
        }
    }

    #[test]
    fn models_prefer_zero_and_satisfy_by_substitution() {
        // The shape of the first buggy path: two non-NULL flags and a
        // non-positive length.
        let mut t = SymTable::default();
        let src = t.fresh("src!nonnull", true, SymPlace::Free);
        let dst = t.fresh("dst!nonnull", true, SymPlace::Free);
        let n = t.fresh("n", false, SymPlace::Free);
        let nz = |s| SymBool::cmp(CmpOp::Ne, SymExpr::Sym(s), SymExpr::Const(0));
        let pc = vec![
            nz(src),
            nz(dst),
            SymBool::not(SymBool::cmp(CmpOp::Gt, SymExpr::Sym(n), SymExpr::Const(0))),
        ];
        match solve(&pc, &t, W8, 100_000) {
            SolveResult::Sat(m) => {
                assert_eq!(m[&n], 0, "zero-first value order");
                assert_eq!(m[&src], 1);
                assert_eq!(m[&dst], 1);
                assert!(pc.iter().all(|c| c.eval(&m, W8)));
                // Brute-force cross-check: n = 0 works, every n > 0 fails.
                let sat_at = |v: i64| {
                    let mm: Model = [(src, 1), (dst, 1), (n, v)].into_iter().collect();
                    pc.iter().all(|c| c.eval(&mm, W8))
                };
                assert!(sat_at(0));
                assert!((1..=127).all(|v| !sat_at(v)));
            }
            other => panic!("expected SAT, got {other:?}"),
        }
    }

    #[test]
    fn intervals_respect_wrapping() {
        // x + 1 < x holds exactly at the top of the width.
        let (t, s) = table_with(&["x"]);
        let x = &s[0];
        let pc = vec![SymBool::cmp(
            CmpOp::Lt,
            SymExpr::Add(std::rc::Rc::new(x.clone()), std::rc::Rc::new(SymExpr::Const(1))),
            x.clone(),
        )];
        match solve(&pc, &t, W8, 100_000) {
            SolveResult::Sat(m) => {
                let v = *m.values().next().unwrap();
                assert_eq!(v, 127);
            }
            other => panic!("expected SAT at the wrap point, got {other:?}"),
        }
    }

    #[test]
    fn unsatisfiable_products_exhaust_to_unsat_at_narrow_width() {
        // 2*x == 1 has no solution at any two's-complement width.
        let (t, s) = table_with(&["x"]);
        let x = &s[0];
        let pc = vec![SymBool::cmp(
            CmpOp::Eq,
            SymExpr::Mul(std::rc::Rc::new(SymExpr::Const(2)), std::rc::Rc::new(x.clone())),
            SymExpr::Const(1),
        )];
        assert_eq!(solve(&pc, &t, W8, 100_000), SolveResult::Unsat);
    }

    #[test]
    fn tiny_budgets_yield_unknown_never_a_wrong_answer() {
        let mut t = SymTable::default();
        let x = t.fresh("x", false, SymPlace::Free);
        let y = t.fresh("y", false, SymPlace::Free);
        let pc = vec![SymBool::cmp(
            CmpOp::Eq,
            SymExpr::Mul(
                std::rc::Rc::new(SymExpr::Sym(x)),
                std::rc::Rc::new(SymExpr::Sym(y)),
            ),
            SymExpr::Const(77),
        )];
        assert_eq!(solve(&pc, &t, W8, 3), SolveResult::Unknown);
        match solve(&pc, &t, W8, 1_000_000) {
            SolveResult::Sat(m) => {
                assert_eq!(Width(8).canon(m[&x].wrapping_mul(m[&y])), 77);
            }
            other => panic!("expected SAT with a large budget, got {other:?}"),
        }
    }

    #[test]
    fn results_are_deterministic() {
        let (t, s) = table_with(&["a", "b"]);
        let pc = vec![
            gt(&s[0], 3),
            SymBool::cmp(CmpOp::Lt, s[0].clone(), s[1].clone()),
        ];
        let r1 = solve(&pc, &t, W8, 100_000);
        let r2 = solve(&pc, &t, W8, 100_000);
        assert_eq!(r1, r2);
        match r1 {
            SolveResult::Sat(m) => {
                assert!(pc.iter().all(|c| c.eval(&m, W8)));
                assert_eq!(m[&s0(&s[0])], 4, "smallest value above 3");
            }
            other => panic!("expected SAT, got {other:?}"),
        }
    }

    fn s0(e: &SymExpr) -> SymId {
        match e {
            SymExpr::Sym(s) => *s,
            _ => unreachable!(),
        }
    }

    #[test]
    fn boolean_symbols_stay_in_their_domain() {
        let mut t = SymTable::default();
        let f = t.fresh("flag", true, SymPlace::Free);
        let pc = vec![SymBool::cmp(CmpOp::Ne, SymExpr::Sym(f), SymExpr::Const(0))];
        match solve(&pc, &t, W8, 1_000) {
            SolveResult::Sat(m) => assert_eq!(m[&f], 1),
            other => panic!("expected SAT, got {other:?}"),
        }
        let pc2 = vec![SymBool::cmp(CmpOp::Gt, SymExpr::Sym(f), SymExpr::Const(1))];
        assert_eq!(solve(&pc2, &t, W8, 1_000), SolveResult::Unsat);
    }
}
