//! End-to-end orchestration: compile, instrument, slice, symbolically
//! execute, replay — and fold the outcome into one verdict per queried
//! (machine, target, error state).
//!
//! Two analysis modes share the pipeline. `find` instruments every
//! trackable object, explores under a loop bound, and reports only
//! replay-confirmed errors; absence of findings is CLEAN-WITHIN-BOUNDS,
//! never FP, because bounded exploration cannot refute. `classify` takes
//! one candidate report (ours or a foreign tool's), instruments only its
//! target, and explores without a loop bound under a wall-clock timeout:
//! confirming the error makes it BUG, exploring every path without
//! reaching it makes it FP, and anything less conclusive is TO (or ME when
//! a memory fault got in the way). The remaining modes are debugging
//! views over the same stages: `metal` prints the state-set
//! over-approximation and its candidate reports, `slice` and `instrument`
//! print transformed programs, `pointsto` dumps the alias analysis.
//!
//! Every pipeline stage works on the subprogram reachable from the entry
//! function; picking the entry is the caller's job (one run per entry).

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::PathBuf;
use std::time::{Duration, Instant};

use serde::Serialize;

use crate::frontend::interp::InterpOptions;
use crate::frontend::pretty::print_program;
use crate::frontend::{build_cfg, parse_and_check, restrict_to_entry, FrontendError, ProgramCfg};
use crate::instrument::{instrument, Instrumented, InstrumentError};
use crate::machines::{match_sites, parse_machine, MachineSpec, SpecError};
use crate::metal::{metal_fixpoint, metal_reports, render_annotated};
use crate::pointsto::andersen;
use crate::slicer::{criteria_from_instrumentation, slice};
use crate::symexec::{
    replay, sym_execute, Limits, PathKind, ReplayOutcome, SymOutcome, DEFAULT_SOLVER_BUDGET,
};

/// The caveat attached to every FP verdict: slicing preserves behavior
/// only on inputs where the original program halts, so a refutation on the
/// slice does not cover runs the original spends diverging.
pub const FP_CAVEAT: &str = "slicing ignores nonterminating originals";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Json,
    Text,
}

#[derive(Debug, Clone)]
pub enum Mode {
    Find,
    Classify { report: PathBuf },
    Metal,
    Slice { targets: Vec<String> },
    Pointsto,
    Instrument { targets: Vec<String> },
}

/// One pipeline invocation, fully parameterized.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub source: PathBuf,
    pub machine: PathBuf,
    /// Entry function; required by every mode except pointsto/instrument.
    pub entry: Option<String>,
    pub mode: Mode,
    /// Body entries per loop; find mode only (classify is unbounded).
    pub loop_bound: u32,
    pub int_width: u32,
    pub ptr_elems: u32,
    pub solver_budget: u64,
    pub path_budget: u64,
    pub timeout: Duration,
    pub format: Format,
    /// Dump the exploration tree (DOT) alongside the verdicts.
    pub dump_tree: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            source: PathBuf::new(),
            machine: PathBuf::new(),
            entry: None,
            mode: Mode::Find,
            loop_bound: 2,
            int_width: 32,
            ptr_elems: 16,
            solver_budget: DEFAULT_SOLVER_BUDGET,
            path_budget: 4096,
            timeout: Duration::from_secs(300),
            format: Format::Text,
            dump_tree: false,
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum DriverError {
    #[error("reading {path}: {err}")]
    Io { path: PathBuf, err: std::io::Error },
    #[error("compile: {0}")]
    Compile(#[from] FrontendError),
    #[error("machine spec: {0}")]
    Spec(#[from] SpecError),
    #[error("instrument: {0}")]
    Instrument(InstrumentError),
    #[error("{0}")]
    Entry(String),
    #[error("target `{0}` is not an object in the program")]
    UnknownTarget(String),
    #[error("report mismatch: {0}")]
    ReportMismatch(String),
    #[error("report file: {0}")]
    BadReport(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum VerdictKind {
    #[serde(rename = "BUG")]
    Bug,
    #[serde(rename = "FP")]
    Fp,
    #[serde(rename = "TO")]
    To,
    #[serde(rename = "ME")]
    Me,
}

impl std::fmt::Display for VerdictKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            VerdictKind::Bug => "BUG",
            VerdictKind::Fp => "FP",
            VerdictKind::To => "TO",
            VerdictKind::Me => "ME",
        })
    }
}

/// Wall-clock milliseconds per pipeline phase.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct Timings {
    pub compile_ms: u64,
    pub instrument_ms: u64,
    pub slice_ms: u64,
    pub symexec_ms: u64,
    pub total_ms: u64,
}

/// One answer to one (machine, target, error state) question.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Verdict {
    pub machine: String,
    pub target: String,
    pub error_state: String,
    pub verdict: VerdictKind,
    /// Source line of the confirmed error (BUG) or fault (ME).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub line: Option<u32>,
    /// Named input assignment witnessing the verdict.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub model: Option<BTreeMap<String, i64>>,
    /// Source lines the confirming replay visited (BUG only).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub trace: Option<Vec<u32>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fp_caveat: Option<String>,
    /// Why exploration was inconclusive: "wall", "budget", or "tainted".
    #[serde(skip_serializing_if = "Option::is_none")]
    pub to_reason: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
    /// Fraction of statements the slicer removed for this run.
    pub slice_ratio: f64,
    pub timings: Timings,
}

impl Verdict {
    fn new(machine: &str, target: &str, error_state: &str, verdict: VerdictKind) -> Verdict {
        Verdict {
            machine: machine.to_string(),
            target: target.to_string(),
            error_state: error_state.to_string(),
            verdict,
            line: None,
            model: None,
            trace: None,
            fp_caveat: None,
            to_reason: None,
            note: None,
            slice_ratio: 0.0,
            timings: Timings::default(),
        }
    }
}

/// Run-level bookkeeping for the human-readable footer.
#[derive(Debug, Clone, Default, Serialize)]
pub struct Summary {
    pub mode: String,
    pub entry: String,
    pub paths: usize,
    pub completed: usize,
    pub stopped: usize,
    pub pruned: u64,
    pub solver_calls: u64,
    pub tainted: bool,
    pub exhausted: bool,
    pub loop_bound: Option<u32>,
    pub slice_ratio: f64,
    pub timings: Timings,
    pub warnings: Vec<String>,
}

/// Verdicts plus run bookkeeping; what find and classify produce.
#[derive(Debug, Clone)]
pub struct Report {
    pub verdicts: Vec<Verdict>,
    pub summary: Summary,
    /// DOT rendering of the exploration tree, when requested.
    pub tree_dot: Option<String>,
}

/// What a full `run` produces: verdicts (find/classify) or a plain
/// text view (metal/slice/pointsto/instrument).
#[derive(Debug, Clone)]
pub enum RunOutput {
    Verdicts(Report),
    Text { body: String, warnings: Vec<String> },
}

/// A candidate report to classify: ours (`minisse metal` output) or a
/// foreign tool's, as JSON with `machine`, `target` (a variable name;
/// `target_name` is accepted too), and `error_state`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CandidateQuery {
    pub machine: String,
    pub target: String,
    pub error_state: String,
}

/// CI-stable exit code: 0 none of the below, 1 some BUG, 3 TO or ME
/// present without a BUG. (Pipeline errors exit 2 at the CLI.)
pub fn exit_code(report: &Report) -> i32 {
    if report.verdicts.iter().any(|v| v.verdict == VerdictKind::Bug) {
        1
    } else if report
        .verdicts
        .iter()
        .any(|v| matches!(v.verdict, VerdictKind::To | VerdictKind::Me))
    {
        3
    } else {
        0
    }
}

/// Execute `config` end to end, reading the referenced files.
pub fn run(config: &RunConfig) -> Result<RunOutput, DriverError> {
    let read = |path: &PathBuf| {
        fs::read_to_string(path).map_err(|err| DriverError::Io { path: path.clone(), err })
    };
    let source = read(&config.source)?;
    match &config.mode {
        Mode::Pointsto => {
            let cfg = compile_whole(&source)?;
            let pts = andersen(&cfg);
            Ok(RunOutput::Text { body: pts.render(&cfg), warnings: Vec::new() })
        }
        Mode::Find => {
            let machine = read(&config.machine)?;
            run_find(&source, &machine, config).map(RunOutput::Verdicts)
        }
        Mode::Classify { report } => {
            let machine = read(&config.machine)?;
            let queries = parse_reports(&read(report)?)?;
            run_classify_all(&source, &machine, &queries, config).map(RunOutput::Verdicts)
        }
        Mode::Metal => {
            let machine = read(&config.machine)?;
            metal_view(&source, &machine, config)
        }
        Mode::Slice { targets } => {
            let machine = read(&config.machine)?;
            slice_view(&source, &machine, targets, config)
        }
        Mode::Instrument { targets } => {
            let machine = read(&config.machine)?;
            instrument_view(&source, &machine, targets)
        }
    }
}

/// Find mode: instrument everything trackable, slice to the checks,
/// explore under the loop bound, and report replay-confirmed errors.
/// Never emits FP — an empty verdict list means clean within bounds.
pub fn run_find(source: &str, machine: &str, config: &RunConfig) -> Result<Report, DriverError> {
    let t0 = Instant::now();
    let mut timings = Timings::default();
    let entry_name = required_entry(config)?;

    let cfg = compile_entry(source, &entry_name)?;
    let spec = parse_machine(machine)?;
    resolve_entry(&cfg, &entry_name)?;
    timings.compile_ms = ms(t0);

    let mut summary = Summary {
        mode: "find".into(),
        entry: entry_name.clone(),
        loop_bound: Some(config.loop_bound),
        ..Summary::default()
    };

    let t1 = Instant::now();
    let sites = match_sites(&cfg, &spec);
    let pts = andersen(&cfg);
    let ip = match instrument(&cfg, &spec, &sites, &pts, None) {
        Ok(ip) => ip,
        Err(InstrumentError::NoTargets) => {
            // Nothing to track: the machine cannot fail here.
            summary.warnings.push("no tracked objects: the machine matches nothing reachable from the entry".into());
            timings.instrument_ms = ms(t1);
            timings.total_ms = ms(t0);
            summary.timings = timings;
            return Ok(Report { verdicts: Vec::new(), summary, tree_dot: None });
        }
        Err(e) => return Err(DriverError::Instrument(e)),
    };
    summary.warnings.extend(ip.warnings.iter().cloned());
    timings.instrument_ms = ms(t1);

    let t2 = Instant::now();
    let criteria = criteria_from_instrumentation(&ip);
    let pts_i = andersen(&ip.cfg);
    let sliced = slice(&ip, &criteria, &pts_i);
    summary.slice_ratio = sliced.ratio();
    timings.slice_ms = ms(t2);

    let entry_orig = resolve_entry(&ip.cfg, &entry_name)?;
    let Some(entry_sliced) = sliced.instr.cfg.func_id(&entry_name) else {
        // The slicer found nothing relevant reachable from the entry.
        summary.warnings.push("the slice is empty: no check is reachable from the entry".into());
        timings.total_ms = ms(t0);
        summary.timings = timings;
        return Ok(Report { verdicts: Vec::new(), summary, tree_dot: None });
    };

    let t3 = Instant::now();
    let limits = Limits {
        loop_bound: Some(config.loop_bound),
        solver_budget: config.solver_budget,
        path_budget: config.path_budget,
        wall_timeout: Some(config.timeout),
        int_width: config.int_width,
        ptr_elems: config.ptr_elems,
        record_tree: config.dump_tree,
        ..Limits::default()
    };
    let out = sym_execute(&sliced.instr, entry_sliced, &limits);
    timings.symexec_ms = ms(t3);
    timings.total_ms = ms(t0);
    fill_summary(&mut summary, &out, timings);

    let iopts = InterpOptions { int_width: config.int_width, ptr_elems: config.ptr_elems, ..InterpOptions::default() };
    let mut verdicts: Vec<Verdict> = Vec::new();
    let mut seen: BTreeSet<(String, String, String)> = BTreeSet::new();
    for p in &out.paths {
        match &p.kind {
            PathKind::Bug { machine, target, error_state, model, .. } => {
                if !seen.insert((machine.clone(), target.clone(), error_state.clone())) {
                    continue;
                }
                let mut v = Verdict::new(machine, target, error_state, VerdictKind::Bug);
                v.model = Some(out.table.render_model(model));
                match replay(&ip, entry_orig, &out.table, model, machine, error_state, &iopts) {
                    ReplayOutcome::Confirmed { loc, trace, .. } => {
                        v.line = Some(ip.cfg.node(loc).pos.line);
                        v.trace = Some(trace);
                    }
                    ReplayOutcome::NotConfirmed { reason } => {
                        // A model that does not replay is not a reportable
                        // bug; the question stays open.
                        v.verdict = VerdictKind::To;
                        v.to_reason = Some("tainted".into());
                        v.note = Some(format!("model did not replay: {reason}"));
                        v.trace = None;
                    }
                }
                verdicts.push(v);
            }
            PathKind::MemoryError { loc, reason, model } => {
                let line = sliced
                    .provenance
                    .get(loc)
                    .map(|l| ip.cfg.node(*l).pos.line)
                    .unwrap_or_else(|| sliced.instr.cfg.node(*loc).pos.line);
                let key = ("memory".to_string(), reason.clone(), line.to_string());
                if !seen.insert(key) {
                    continue;
                }
                let mut v = Verdict::new(&spec.name, "-", "-", VerdictKind::Me);
                v.line = Some(line);
                v.model = Some(out.table.render_model(model));
                v.note = Some(reason.clone());
                verdicts.push(v);
            }
            _ => {}
        }
    }
    if out.wall_timeout_hit || out.tainted {
        let mut v = Verdict::new(&spec.name, "*", "*", VerdictKind::To);
        v.to_reason = Some(if out.wall_timeout_hit { "wall" } else { "tainted" }.into());
        v.note = Some("exploration was incomplete beyond the configured bounds".into());
        verdicts.push(v);
    }
    for v in &mut verdicts {
        v.slice_ratio = summary.slice_ratio;
        v.timings = timings;
    }

    Ok(Report { verdicts, summary, tree_dot: out.tree.map(|t| t.to_dot()) })
}

/// Classify every query in `queries`, one pipeline run each (the slice is
/// target-specific).
pub fn run_classify_all(
    source: &str,
    machine: &str,
    queries: &[CandidateQuery],
    config: &RunConfig,
) -> Result<Report, DriverError> {
    let mut report: Option<Report> = None;
    for q in queries {
        let one = run_classify(source, machine, q, config)?;
        match &mut report {
            None => report = Some(one),
            Some(r) => {
                r.verdicts.extend(one.verdicts);
                r.summary.paths += one.summary.paths;
                r.summary.completed += one.summary.completed;
                r.summary.stopped += one.summary.stopped;
                r.summary.pruned += one.summary.pruned;
                r.summary.solver_calls += one.summary.solver_calls;
                r.summary.tainted |= one.summary.tainted;
                r.summary.exhausted &= one.summary.exhausted;
                r.summary.timings.total_ms += one.summary.timings.total_ms;
                r.summary.warnings.extend(one.summary.warnings);
                if r.tree_dot.is_none() {
                    r.tree_dot = one.tree_dot;
                }
            }
        }
    }
    report.ok_or_else(|| DriverError::BadReport("no reports to classify".into()))
}

/// Classify one candidate report: instrument only its target, slice, and
/// explore without a loop bound under the wall timeout. BUG means the
/// exact error was confirmed by replay; FP means every path was explored
/// (no taint) without reaching it; ME means a memory fault got in the way;
/// anything else is TO.
pub fn run_classify(
    source: &str,
    machine: &str,
    query: &CandidateQuery,
    config: &RunConfig,
) -> Result<Report, DriverError> {
    let t0 = Instant::now();
    let mut timings = Timings::default();
    let entry_name = required_entry(config)?;

    let cfg = compile_entry(source, &entry_name)?;
    let spec = parse_machine(machine)?;
    resolve_entry(&cfg, &entry_name)?;
    timings.compile_ms = ms(t0);

    // The query must be expressible in this program + spec.
    if query.machine != spec.name {
        return Err(DriverError::ReportMismatch(format!(
            "report names machine `{}`, the spec defines `{}`",
            query.machine, spec.name
        )));
    }
    let is_error_state = spec
        .errors
        .keys()
        .any(|q| spec.states[*q as usize] == query.error_state);
    if !is_error_state {
        return Err(DriverError::ReportMismatch(format!(
            "`{}` is not an error state of machine `{}`",
            query.error_state, spec.name
        )));
    }
    let Some(target_obj) = cfg.objects.lookup_display(&query.target) else {
        return Err(DriverError::ReportMismatch(format!(
            "target `{}` is not an object reachable from `{}`",
            query.target, entry_name
        )));
    };

    let mut summary = Summary {
        mode: "classify".into(),
        entry: entry_name.clone(),
        loop_bound: None,
        ..Summary::default()
    };

    let t1 = Instant::now();
    let sites = match_sites(&cfg, &spec);
    let pts = andersen(&cfg);
    let targets = BTreeSet::from([target_obj]);
    let ip = match instrument(&cfg, &spec, &sites, &pts, Some(&targets)) {
        Ok(ip) => ip,
        Err(InstrumentError::UnknownTarget(name)) => {
            return Err(DriverError::ReportMismatch(format!(
                "no match site can reach target `{name}`"
            )))
        }
        Err(e) => return Err(DriverError::Instrument(e)),
    };
    summary.warnings.extend(ip.warnings.iter().cloned());
    timings.instrument_ms = ms(t1);

    let t2 = Instant::now();
    let criteria = criteria_from_instrumentation(&ip);
    let pts_i = andersen(&ip.cfg);
    let sliced = slice(&ip, &criteria, &pts_i);
    summary.slice_ratio = sliced.ratio();
    timings.slice_ms = ms(t2);

    let entry_orig = resolve_entry(&ip.cfg, &entry_name)?;
    let mut verdict = Verdict::new(&query.machine, &query.target, &query.error_state, VerdictKind::To);

    let out = if let Some(entry_sliced) = sliced.instr.cfg.func_id(&entry_name) {
        let t3 = Instant::now();
        let limits = Limits {
            loop_bound: None,
            solver_budget: config.solver_budget,
            path_budget: config.path_budget,
            wall_timeout: Some(config.timeout),
            int_width: config.int_width,
            ptr_elems: config.ptr_elems,
            record_tree: config.dump_tree,
            ..Limits::default()
        };
        let out = sym_execute(&sliced.instr, entry_sliced, &limits);
        timings.symexec_ms = ms(t3);
        out
    } else {
        // Nothing relevant reachable from the entry: trivially exhausted.
        SymOutcome {
            paths: Vec::new(),
            table: Default::default(),
            solver_calls: 0,
            pruned_infeasible: 0,
            max_depth: 0,
            wall_timeout_hit: false,
            exhausted: true,
            tainted: false,
            tree: None,
        }
    };
    timings.total_ms = ms(t0);
    fill_summary(&mut summary, &out, timings);

    let iopts = InterpOptions { int_width: config.int_width, ptr_elems: config.ptr_elems, ..InterpOptions::default() };
    let confirmed = out.paths.iter().find_map(|p| match &p.kind {
        PathKind::Bug { machine, target, error_state, model, .. }
            if machine == &query.machine
                && target == &query.target
                && error_state == &query.error_state =>
        {
            match replay(&ip, entry_orig, &out.table, model, machine, error_state, &iopts) {
                ReplayOutcome::Confirmed { loc, trace, .. } => Some((model.clone(), loc, trace)),
                ReplayOutcome::NotConfirmed { .. } => None,
            }
        }
        _ => None,
    });

    if let Some((model, loc, trace)) = confirmed {
        verdict.verdict = VerdictKind::Bug;
        verdict.model = Some(out.table.render_model(&model));
        verdict.line = Some(ip.cfg.node(loc).pos.line);
        verdict.trace = Some(trace);
    } else if out.memory_errors() > 0 {
        let me = out
            .paths
            .iter()
            .find(|p| matches!(p.kind, PathKind::MemoryError { .. }))
            .expect("checked: a memory error path exists");
        let PathKind::MemoryError { loc, reason, model } = &me.kind else { unreachable!() };
        verdict.verdict = VerdictKind::Me;
        verdict.line = Some(
            sliced
                .provenance
                .get(loc)
                .map(|l| ip.cfg.node(*l).pos.line)
                .unwrap_or_else(|| sliced.instr.cfg.node(*loc).pos.line),
        );
        verdict.model = Some(out.table.render_model(model));
        verdict.note = Some(format!("memory error before a verdict: {reason}"));
    } else if out.exhausted && !out.tainted {
        verdict.verdict = VerdictKind::Fp;
        verdict.fp_caveat = Some(FP_CAVEAT.into());
    } else {
        verdict.verdict = VerdictKind::To;
        verdict.to_reason = Some(
            if out.wall_timeout_hit {
                "wall"
            } else if !out.exhausted {
                "budget"
            } else {
                "tainted"
            }
            .into(),
        );
    }
    verdict.slice_ratio = summary.slice_ratio;
    verdict.timings = timings;

    Ok(Report { verdicts: vec![verdict], summary, tree_dot: out.tree.map(|t| t.to_dot()) })
}

/// Parse candidate reports: JSON lines (as `minisse metal` emits) or one
/// JSON array. Accepts `target` or `target_name` for the variable name.
pub fn parse_reports(text: &str) -> Result<Vec<CandidateQuery>, DriverError> {
    let trimmed = text.trim();
    if trimmed.is_empty() {
        return Err(DriverError::BadReport("the report file is empty".into()));
    }
    let values: Vec<serde_json::Value> = if trimmed.starts_with('[') {
        serde_json::from_str::<serde_json::Value>(trimmed)
            .map_err(|e| DriverError::BadReport(e.to_string()))?
            .as_array()
            .cloned()
            .ok_or_else(|| DriverError::BadReport("expected an array of reports".into()))?
    } else {
        trimmed
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty())
            .map(|l| serde_json::from_str(l).map_err(|e| DriverError::BadReport(e.to_string())))
            .collect::<Result<_, _>>()?
    };
    values.iter().map(query_from_value).collect()
}

fn query_from_value(v: &serde_json::Value) -> Result<CandidateQuery, DriverError> {
    let bad = |msg: &str| DriverError::BadReport(msg.into());
    let obj = v.as_object().ok_or_else(|| bad("each report is a JSON object"))?;
    let field = |name: &str| obj.get(name).and_then(|x| x.as_str());
    let machine = field("machine").ok_or_else(|| bad("report lacks a `machine` string"))?;
    let target = field("target")
        .or_else(|| field("target_name"))
        .ok_or_else(|| bad("report lacks a `target` (or `target_name`) string"))?;
    let error_state = field("error_state").ok_or_else(|| bad("report lacks an `error_state` string"))?;
    Ok(CandidateQuery {
        machine: machine.to_string(),
        target: target.to_string(),
        error_state: error_state.to_string(),
    })
}

/// Serialize verdicts: one JSON object per line, or an aligned text table
/// with a run summary. An empty find report renders as CLEAN-WITHIN-BOUNDS
/// in text and as nothing in JSON (exit code 0 carries the result).
pub fn emit(report: &Report, format: Format) -> String {
    match format {
        Format::Json => {
            let mut out = String::new();
            for v in &report.verdicts {
                out.push_str(&serde_json::to_string(v).expect("verdicts serialize"));
                out.push('\n');
            }
            out
        }
        Format::Text => {
            let s = &report.summary;
            let mut out = String::new();
            if report.verdicts.is_empty() {
                if s.mode == "find" {
                    let bound = s.loop_bound.map(|b| b.to_string()).unwrap_or_else(|| "-".into());
                    out.push_str(&format!(
                        "CLEAN-WITHIN-BOUNDS: no errors found within loop bound {bound} \
                         ({} paths completed, {} cut short)\n",
                        s.completed, s.stopped
                    ));
                } else {
                    out.push_str("no verdicts\n");
                }
            } else {
                let header = vec![
                    "VERDICT".into(),
                    "MACHINE".into(),
                    "TARGET".into(),
                    "ERROR".into(),
                    "LINE".into(),
                    "SLICED".into(),
                    "TIME".into(),
                    "DETAIL".into(),
                ];
                let mut rows = vec![header];
                for v in &report.verdicts {
                    let detail = match v.verdict {
                        VerdictKind::Bug => format!("model {}", render_model_inline(v.model.as_ref())),
                        VerdictKind::Fp => v.fp_caveat.clone().unwrap_or_default(),
                        VerdictKind::To => {
                            let r = v.to_reason.clone().unwrap_or_default();
                            match &v.note {
                                Some(n) => format!("{r}; {n}"),
                                None => r,
                            }
                        }
                        VerdictKind::Me => format!(
                            "{} — model {}",
                            v.note.clone().unwrap_or_default(),
                            render_model_inline(v.model.as_ref())
                        ),
                    };
                    rows.push(vec![
                        v.verdict.to_string(),
                        v.machine.clone(),
                        v.target.clone(),
                        v.error_state.clone(),
                        v.line.map(|l| l.to_string()).unwrap_or_else(|| "-".into()),
                        format!("{:.0}%", v.slice_ratio * 100.0),
                        format!("{}ms", v.timings.total_ms),
                        detail,
                    ]);
                }
                out.push_str(&align(&rows));
            }
            out.push_str(&format!(
                "# {} `{}`: {} paths ({} completed, {} stopped, {} pruned), \
                 {} solver calls, slice removed {:.0}%, {} ms\n",
                s.mode,
                s.entry,
                s.paths,
                s.completed,
                s.stopped,
                s.pruned,
                s.solver_calls,
                s.slice_ratio * 100.0,
                s.timings.total_ms
            ));
            out
        }
    }
}

fn render_model_inline(model: Option<&BTreeMap<String, i64>>) -> String {
    match model {
        None => "{}".into(),
        Some(m) => {
            let parts: Vec<String> = m.iter().map(|(k, v)| format!("{k}={v}")).collect();
            format!("{{{}}}", parts.join(", "))
        }
    }
}

/// Left-align rows into columns two spaces apart; the last column is not
/// padded.
fn align(rows: &[Vec<String>]) -> String {
    let cols = rows.iter().map(Vec::len).max().unwrap_or(0);
    let mut width = vec![0usize; cols];
    for row in rows {
        for (i, cell) in row.iter().enumerate() {
            if i + 1 < cols {
                width[i] = width[i].max(cell.len());
            }
        }
    }
    let mut out = String::new();
    for row in rows {
        let mut line = String::new();
        for (i, cell) in row.iter().enumerate() {
            if i + 1 < row.len() {
                line.push_str(&format!("{:<w$}  ", cell, w = width[i]));
            } else {
                line.push_str(cell);
            }
        }
        out.push_str(line.trim_end());
        out.push('\n');
    }
    out
}

/// The metal view: the source annotated with per-line reachable state
/// sets, then the candidate reports as JSON lines.
fn metal_view(source: &str, machine: &str, config: &RunConfig) -> Result<RunOutput, DriverError> {
    let entry_name = required_entry(config)?;
    let cfg = compile_entry(source, &entry_name)?;
    let spec = parse_machine(machine)?;
    let entry = resolve_entry(&cfg, &entry_name)?;
    let sites = match_sites(&cfg, &spec);
    let pts = andersen(&cfg);
    let ssm = metal_fixpoint(&cfg, &spec, &sites, &pts, None, entry);
    let ann = ssm.line_annotations(&cfg, &spec);
    let mut body = render_annotated(source, &ann);
    if !body.ends_with('\n') {
        body.push('\n');
    }
    for r in metal_reports(&cfg, &ssm, &spec) {
        body.push_str(&serde_json::to_string(&r).expect("reports serialize"));
        body.push('\n');
    }
    Ok(RunOutput::Text { body, warnings: Vec::new() })
}

/// The slice view: instrument (optionally restricted to named targets),
/// slice, and print the surviving program with the removal ratio.
fn slice_view(
    source: &str,
    machine: &str,
    target_names: &[String],
    config: &RunConfig,
) -> Result<RunOutput, DriverError> {
    let entry_name = required_entry(config)?;
    let cfg = compile_entry(source, &entry_name)?;
    let spec = parse_machine(machine)?;
    resolve_entry(&cfg, &entry_name)?;
    let (ip, warnings) = instrument_named(&cfg, &spec, target_names)?;
    let criteria = criteria_from_instrumentation(&ip);
    let pts_i = andersen(&ip.cfg);
    let sliced = slice(&ip, &criteria, &pts_i);
    let mut body = print_program(&sliced.instr.cfg.ast);
    body.push_str(&format!(
        "// sliced away {:.1}% ({} of {} statements kept)\n",
        sliced.ratio() * 100.0,
        sliced.kept_stmts,
        sliced.total_stmts
    ));
    Ok(RunOutput::Text { body, warnings })
}

/// The instrument view: the program with state variables and fires, as
/// compilable source.
fn instrument_view(source: &str, machine: &str, target_names: &[String]) -> Result<RunOutput, DriverError> {
    let cfg = compile_whole(source)?;
    let spec = parse_machine(machine)?;
    let (ip, warnings) = instrument_named(&cfg, &spec, target_names)?;
    Ok(RunOutput::Text { body: print_program(&ip.cfg.ast), warnings })
}

fn instrument_named(
    cfg: &ProgramCfg,
    spec: &MachineSpec,
    target_names: &[String],
) -> Result<(Instrumented, Vec<String>), DriverError> {
    let sites = match_sites(cfg, spec);
    let pts = andersen(cfg);
    let targets: Option<BTreeSet<_>> = if target_names.is_empty() {
        None
    } else {
        let mut set = BTreeSet::new();
        for name in target_names {
            let obj = cfg
                .objects
                .lookup_display(name)
                .ok_or_else(|| DriverError::UnknownTarget(name.clone()))?;
            set.insert(obj);
        }
        Some(set)
    };
    let ip = instrument(cfg, spec, &sites, &pts, targets.as_ref()).map_err(DriverError::Instrument)?;
    let warnings = ip.warnings.clone();
    Ok((ip, warnings))
}

fn fill_summary(summary: &mut Summary, out: &SymOutcome, timings: Timings) {
    summary.paths = out.paths.len();
    summary.completed = out.completed();
    summary.stopped = out.budget_stopped();
    summary.pruned = out.pruned_infeasible;
    summary.solver_calls = out.solver_calls;
    summary.tainted = out.tainted;
    summary.exhausted = out.exhausted;
    summary.timings = timings;
}

fn required_entry(config: &RunConfig) -> Result<String, DriverError> {
    config
        .entry
        .clone()
        .ok_or_else(|| DriverError::Entry("this mode requires --entry".into()))
}

/// Compile the subprogram reachable from `entry` (the unit every analysis
/// runs on; other functions are other runs).
fn compile_entry(source: &str, entry: &str) -> Result<ProgramCfg, DriverError> {
    let prog = parse_and_check(source)?;
    let restricted = restrict_to_entry(&prog, entry)
        .ok_or_else(|| DriverError::Entry(format!("entry function `{entry}` not found")))?;
    Ok(build_cfg(restricted))
}

fn compile_whole(source: &str) -> Result<ProgramCfg, DriverError> {
    Ok(build_cfg(parse_and_check(source)?))
}

fn resolve_entry(cfg: &ProgramCfg, name: &str) -> Result<crate::frontend::cfg::FuncId, DriverError> {
    let id = cfg
        .func_id(name)
        .ok_or_else(|| DriverError::Entry(format!("entry function `{name}` not found")))?;
    if cfg.func(id).is_extern {
        return Err(DriverError::Entry(format!("entry function `{name}` is extern")));
    }
    Ok(id)
}

fn ms(from: Instant) -> u64 {
    from.elapsed().as_millis() as u64
}
