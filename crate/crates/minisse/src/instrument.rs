//! Compile a typestate machine into a program.
//!
//! For every tracked target object the instrumented program gets one fresh
//! integer global — the machine instance's state variable, initialized to the
//! machine's initial state — plus a `__fire(machine, label, binder)`
//! statement spliced immediately before every matched statement. At run time
//! a fire evaluates its binder, dispatches to the state variable of the
//! object the binder points at (a no-op for untracked objects and NULL), and
//! applies the machine's transition; a transition into an error state raises
//! an assertion-failure fault instead of updating. Fires without a binder
//! (return patterns) step every machine instance.
//!
//! The transformation is semantics-preserving: projecting fires and state
//! variables out of any concrete trace yields a trace of the original
//! program, up to the instrumented run stopping early at an assertion fault.

use std::collections::{BTreeMap, BTreeSet};

use crate::diag::Pos;
use crate::frontend::ast::*;
use crate::frontend::cfg::{
    build_cfg, FireRuntime, LocationId, ObjId, ObjKind, ProgramCfg, RStmt,
};
use crate::frontend::check::check;
use crate::machines::{MachineSpec, MatchSite, RETURN_LABEL};
use crate::pointsto::PointsTo;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum InstrumentError {
    /// No tracked objects: nothing to check, the analysis would be vacuous.
    NoTargets,
    /// A requested target is not among the objects the match sites can touch.
    UnknownTarget(String),
}

impl std::fmt::Display for InstrumentError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            InstrumentError::NoTargets => {
                write!(f, "no tracked objects: no match site can reach a target")
            }
            InstrumentError::UnknownTarget(name) => {
                write!(f, "`{name}` is not a target of any match site")
            }
        }
    }
}

impl std::error::Error for InstrumentError {}

/// One machine instance: a tracked object and its state variable.
/// Object ids refer to the instrumented program's object table.
#[derive(Debug, Clone)]
pub struct MachineVar {
    pub target: ObjId,
    pub state_var: ObjId,
    pub name: String,
}

#[derive(Debug, Clone)]
pub struct FireSite {
    /// Location of the fire node in the instrumented CFG.
    pub loc: LocationId,
    pub label: String,
    pub has_binder: bool,
}

#[derive(Debug, Clone)]
pub struct Instrumented {
    pub cfg: ProgramCfg,
    pub spec: MachineSpec,
    /// One entry per tracked object, in object-table order.
    pub machine_vars: Vec<MachineVar>,
    /// Every inserted fire, in location order.
    pub fire_sites: Vec<FireSite>,
    /// Fire sites whose label has some transition into an error state — the
    /// places where a run can newly fail.
    pub error_sites: Vec<LocationId>,
    /// Match sites that were skipped (empty target sets).
    pub warnings: Vec<String>,
}

/// Instrument `cfg` with `spec` at `sites`. `targets` restricts tracking to a
/// subset of the objects the sites can touch (ids from `cfg`'s table);
/// `None` tracks all of them. Sites whose binder has an empty points-to
/// target set are skipped with a warning.
pub fn instrument(
    cfg: &ProgramCfg,
    spec: &MachineSpec,
    sites: &[MatchSite],
    pts: &PointsTo,
    targets: Option<&BTreeSet<ObjId>>,
) -> Result<Instrumented, InstrumentError> {
    let mut warnings = Vec::new();
    let mut all_targets: BTreeSet<ObjId> = BTreeSet::new();
    let mut skipped: BTreeSet<StmtId> = BTreeSet::new();
    for site in sites {
        let Some(binder) = &site.binder else { continue };
        match pts.targets_of(std::slice::from_ref(binder)) {
            Ok(t) => all_targets.extend(t),
            Err(e) => {
                warnings.push(format!(
                    "skipping `{}` site at {}: {e}",
                    site.label,
                    cfg.loc_label(site.loc)
                ));
                skipped.insert(site.stmt_id);
            }
        }
    }

    let chosen: BTreeSet<ObjId> = match targets {
        Some(requested) => {
            for &t in requested {
                if !all_targets.contains(&t) {
                    return Err(InstrumentError::UnknownTarget(cfg.objects.display(t)));
                }
            }
            requested.clone()
        }
        None => all_targets,
    };
    if chosen.is_empty() {
        return Err(InstrumentError::NoTargets);
    }

    // Allocate fresh state-variable names.
    let mut taken = taken_names(&cfg.ast);
    let mut var_names: Vec<(ObjId, String)> = Vec::new(); // input-table target id
    for &t in &chosen {
        let mut name = state_var_name(cfg, t);
        while taken.contains(&name) {
            name.push('_');
        }
        taken.insert(name.clone());
        var_names.push((t, name));
    }

    // Build the instrumented AST: appended state variables, spliced fires.
    let mut ast = cfg.ast.clone();
    for (_, name) in &var_names {
        ast.globals.push(GlobalDecl {
            name: name.clone(),
            kind: GlobalKind::Scalar {
                ty: Ty::Int,
                init: Some(ConstInit::Int(spec.initial as i64)),
            },
            pos: Pos::new(1, 1),
        });
    }
    let call_patterns: BTreeMap<String, Option<u32>> = spec
        .call_patterns()
        .into_iter()
        .map(|(k, v)| (k.to_string(), v))
        .collect();
    let inserts: BTreeMap<StmtId, (String, Option<u32>)> = sites
        .iter()
        .filter(|s| !skipped.contains(&s.stmt_id))
        .map(|s| {
            let pos = if s.label == RETURN_LABEL {
                None
            } else {
                call_patterns.get(&s.label).copied().flatten()
            };
            (s.stmt_id, (s.label.clone(), pos))
        })
        .collect();
    let mut next_id = ast.next_stmt_id;
    for f in &mut ast.functions {
        let body = std::mem::take(&mut f.body);
        f.body = splice(body, &spec.name, &inserts, &mut next_id);
    }
    ast.next_stmt_id = next_id;

    check(&ast).expect("instrumentation must preserve well-formedness");
    let mut new_cfg = build_cfg(ast);

    let vars: Vec<(String, String)> = var_names
        .iter()
        .map(|(t, name)| (cfg.objects.display(*t), name.clone()))
        .collect();
    let (machine_vars, fire_sites, error_sites) = attach_runtime(&mut new_cfg, spec, &vars);

    Ok(Instrumented {
        cfg: new_cfg,
        spec: spec.clone(),
        machine_vars,
        fire_sites,
        error_sites,
        warnings,
    })
}

/// Resolve machine instances against a (re)built CFG — object ids shift
/// whenever the AST changes — and attach the fire runtime. `vars` pairs each
/// target's display name with its state variable's name; both must exist in
/// the program. Returns the machine instances, all fire sites in location
/// order, and the error-check locations among them.
pub(crate) fn attach_runtime(
    cfg: &mut ProgramCfg,
    spec: &MachineSpec,
    vars: &[(String, String)],
) -> (Vec<MachineVar>, Vec<FireSite>, Vec<LocationId>) {
    let mut machine_vars = Vec::new();
    let mut dispatch = BTreeMap::new();
    for (target_name, name) in vars {
        let target = cfg
            .objects
            .lookup_display(target_name)
            .expect("targets survive program transformations");
        let state_var = cfg
            .objects
            .lookup_display(name)
            .expect("state variables survive program transformations");
        dispatch.insert(target, state_var);
        machine_vars.push(MachineVar { target, state_var, name: name.clone() });
    }
    cfg.fire = Some(FireRuntime {
        machine: spec.name.clone(),
        state_names: spec.states.clone(),
        initial: spec.initial,
        errors: spec.errors.clone(),
        transitions: spec.transition_table(),
        dispatch,
    });

    let mut fire_sites = Vec::new();
    let mut error_sites = Vec::new();
    for f in &cfg.funcs {
        for (i, n) in f.nodes.iter().enumerate() {
            if let RStmt::Fire { label, binder, .. } = &n.stmt {
                let loc = LocationId::new(f.id, i as u32);
                fire_sites.push(FireSite {
                    loc,
                    label: label.clone(),
                    has_binder: binder.is_some(),
                });
                let can_err = spec
                    .transitions
                    .iter()
                    .any(|t| t.pattern.label() == label.as_str() && spec.is_error(t.to));
                if can_err {
                    error_sites.push(loc);
                }
            }
        }
    }
    (machine_vars, fire_sites, error_sites)
}

/// Fresh-name scheme: `smL1` for a global target, `sm_copy_v` for a local,
/// `sm_mem_copy_p` / `sm_mem_buf1` for regions.
fn state_var_name(cfg: &ProgramCfg, target: ObjId) -> String {
    let info = cfg.objects.info(target);
    match &info.kind {
        ObjKind::Global { .. } | ObjKind::GlobalArray { .. } => format!("sm{}", info.name),
        ObjKind::Local { func, .. } => {
            format!("sm_{}_{}", cfg.objects.func_names[func.0 as usize], info.name)
        }
        ObjKind::Region { owner } => {
            let o = cfg.objects.info(*owner);
            match &o.kind {
                ObjKind::Local { func, .. } => format!(
                    "sm_mem_{}_{}",
                    cfg.objects.func_names[func.0 as usize],
                    o.name
                ),
                _ => format!("sm_mem_{}", o.name),
            }
        }
    }
}

fn taken_names(prog: &MiniCProgram) -> BTreeSet<String> {
    let mut out = BTreeSet::new();
    for g in &prog.globals {
        out.insert(g.name.clone());
    }
    for f in &prog.functions {
        out.insert(f.name.clone());
        for p in &f.params {
            out.insert(p.name.clone());
        }
        for l in &f.locals {
            out.insert(l.name.clone());
        }
    }
    out
}

/// Insert a fire immediately before every statement in `inserts`, recursing
/// into nested bodies.
fn splice(
    stmts: Vec<Stmt>,
    machine: &str,
    inserts: &BTreeMap<StmtId, (String, Option<u32>)>,
    next_id: &mut u32,
) -> Vec<Stmt> {
    let mut out = Vec::with_capacity(stmts.len());
    for mut s in stmts {
        if let Some((label, binder_pos)) = inserts.get(&s.id) {
            let binder = binder_pos.map(|p| {
                let call = match &s.kind {
                    StmtKind::Call { call } | StmtKind::AssignCall { call, .. } => call,
                    _ => unreachable!("call patterns match call statements"),
                };
                call.args[p as usize - 1].clone()
            });
            let id = StmtId(*next_id);
            *next_id += 1;
            out.push(Stmt {
                kind: StmtKind::Fire {
                    machine: machine.to_string(),
                    label: label.clone(),
                    binder,
                },
                id,
                pos: s.pos,
            });
        }
        match &mut s.kind {
            StmtKind::If { then_body, else_body, .. } => {
                let t = std::mem::take(then_body);
                *then_body = splice(t, machine, inserts, next_id);
                let e = std::mem::take(else_body);
                *else_body = splice(e, machine, inserts, next_id);
            }
            StmtKind::While { body, .. } => {
                let b = std::mem::take(body);
                *body = splice(b, machine, inserts, next_id);
            }
            _ => {}
        }
        out.push(s);
    }
    out
}
