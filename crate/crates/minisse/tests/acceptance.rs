//! The acceptance gate: one test per advertised guarantee. Each prints a
//! single `criterion N: PASS`/`FAIL` line (visible with `--nocapture`); a
//! failing criterion also panics with the measured counterexample.
//!
//! Criterion 2 is currently red by design: see its comment.

mod common;

use std::collections::BTreeSet;
use std::time::Instant;

use common::*;
use minisse::driver::{run_classify, run_find, CandidateQuery, Mode, RunConfig, VerdictKind};
use minisse::frontend::cfg::{LocationId, ObjId, RStmt};
use minisse::frontend::interp::{run as interp_run, CVal, InterpOptions, Outcome, RunInputs};
use minisse::frontend::{build_cfg, parse_and_check, restrict_to_entry};
use minisse::instrument::instrument;
use minisse::machines::{match_sites, parse_machine};
use minisse::metal::{metal_fixpoint, metal_reports};
use minisse::pointsto::andersen;
use minisse::symexec::{sym_execute, Limits, PathKind, Width};

/// The per-line state sets and the two candidate reports of the running
/// example, analyzed from `copy` with its lock as the single target.
#[test]
fn criterion_1_running_example_state_sets_and_reports() {
    let t0 = Instant::now();
    let prog = parse_and_check(FIG_SRC).unwrap();
    let cfg = build_cfg(restrict_to_entry(&prog, "copy").unwrap());
    let spec = parse_machine(LOCK_SM).unwrap();
    let sites = match_sites(&cfg, &spec);
    let pts = andersen(&cfg);
    let entry = cfg.func_id("copy").unwrap();
    let ssm = metal_fixpoint(&cfg, &spec, &sites, &pts, None, entry);

    let ann = ssm.line_annotations(&cfg, &spec);
    let at = |needle: &str| ann.get(&line_of(FIG_SRC, needle)).map(String::as_str);
    let expected = [
        ("len = 0", "{U}"),
        ("if (src", "{U}"),
        ("len = n", "{U}"),
        ("lock(L)", "{L}"),
        ("i = 0", "{U,L}"),
        ("while (i < len)", "{U,L}"),
        ("dst[i] = src[i]", "{U,L}"),
        ("i++", "{U,L}"),
        ("if (len > 0)", "{U,L}"),
        ("unlock(L)", "{DU,U}"),
        ("return dst", "{U,RL}"),
    ];
    for (needle, want) in expected {
        assert_eq!(at(needle), Some(want), "state set at line `{needle}`");
    }

    let reports = metal_reports(&cfg, &ssm, &spec);
    assert_eq!(
        reports.len(),
        2,
        "expected exactly 2 candidate reports, got {:?}",
        reports.iter().map(|r| &r.error_state).collect::<Vec<_>>()
    );
    assert_eq!(reports[0].error_state, "DU");
    assert_eq!(reports[1].error_state, "RL");
    let copy = cfg.func_id("copy").unwrap();
    let line = |loc: LocationId| cfg.func(copy).nodes[loc.index as usize].pos.line;
    assert_eq!(line(reports[0].witness), line_of(FIG_SRC, "unlock(L)"));
    assert_eq!(line(reports[1].witness), line_of(FIG_SRC, "return dst"));

    let elapsed = t0.elapsed();
    assert!(elapsed.as_secs_f64() < 1.0, "took {elapsed:?}, budget 1s");
    println!(
        "criterion 1: PASS — 11 annotated lines match, 2 candidate reports (DU, RL), {elapsed:?}"
    );
}

/// Slicing the two-buffer program removes the copy loop and the lock calls,
/// and symbolic execution of the slice finishes in a handful of paths.
///
/// Intentionally red: the advertised count is 3 bug paths, but the engine
/// explores 2. Each leaked lock is a distinct error leaf, and reaching an
/// error ends its path, so a third error leaf would have to double-count
/// the first leak. The rest of the criterion (loop-free slice, no lock
/// call sites, 6 completed paths, only RL findings) holds and is asserted
/// first.
#[test]
fn criterion_2_sliced_double_copy_is_loop_free_and_explored_exactly() {
    let t0 = Instant::now();
    let p = corpus().into_iter().find(|p| p.name == "double_copy").unwrap();
    let b = build(&p);
    let scfg = &b.sliced.instr.cfg;

    assert!(is_acyclic(scfg), "sliced program still has a loop");
    let lock_calls = scfg
        .funcs
        .iter()
        .flat_map(|f| &f.nodes)
        .filter(|n| match &n.stmt {
            RStmt::Call { callee, .. } => {
                let name = &scfg.func(*callee).name;
                name == "lock" || name == "unlock"
            }
            _ => false,
        })
        .count();
    assert_eq!(lock_calls, 0, "lock/unlock call sites survived slicing");

    let out = sym_execute(
        &b.sliced.instr,
        b.entry_sliced,
        &Limits { loop_bound: None, ..Limits::default() },
    );
    assert_eq!(out.completed(), 6, "completed paths");
    let bug_states: Vec<String> = out
        .bugs()
        .map(|p| match &p.kind {
            PathKind::Bug { error_state, .. } => error_state.clone(),
            _ => unreachable!(),
        })
        .collect();
    assert!(
        bug_states.iter().all(|s| s == "RL"),
        "non-RL findings on the slice: {bug_states:?}"
    );
    assert_eq!(out.memory_errors(), 0, "memory errors on the slice");

    let elapsed = t0.elapsed();
    assert!(elapsed.as_secs_f64() < 5.0, "took {elapsed:?}, budget 5s");

    let n = bug_states.len();
    if n == 3 {
        println!("criterion 2: PASS — loop-free slice, no lock sites, 6 paths, 3 RL bug paths, {elapsed:?}");
    } else {
        println!(
            "criterion 2: FAIL — expected exactly 3 bug paths, engine explores {n} \
             (each leaked lock is one error leaf and an error ends its path)"
        );
    }
    assert_eq!(
        n, 3,
        "expected exactly 3 bug paths, found {n}: the two leaked locks are distinct \
         error leaves and reaching an error ends its path, so a third error leaf \
         would double-count the first leak"
    );
}

/// Classifying the two reports from criterion 1: the double-unlock is
/// refuted, the leaked lock is confirmed with a concrete witness, and an
/// exhaustive 8-bit sweep over the inputs agrees with both verdicts.
#[test]
fn criterion_3_classify_refutes_du_and_confirms_rl() {
    let t0 = Instant::now();
    let config = RunConfig {
        entry: Some("copy".into()),
        mode: Mode::Classify { report: "unused".into() },
        ..RunConfig::default()
    };
    let query = |error_state: &str| CandidateQuery {
        machine: "lock_sm".into(),
        target: "region(copy.L)".into(),
        error_state: error_state.into(),
    };

    let du = run_classify(FIG_SRC, LOCK_SM, &query("DU"), &config).unwrap();
    assert_eq!(du.verdicts.len(), 1);
    assert_eq!(du.verdicts[0].verdict, VerdictKind::Fp, "DU report: {:?}", du.verdicts[0]);

    let rl = run_classify(FIG_SRC, LOCK_SM, &query("RL"), &config).unwrap();
    assert_eq!(rl.verdicts.len(), 1);
    assert_eq!(rl.verdicts[0].verdict, VerdictKind::Bug, "RL report: {:?}", rl.verdicts[0]);
    let model = rl.verdicts[0].model.as_ref().expect("a confirmed bug carries a model");
    assert_eq!(model.get("copy.n"), Some(&0), "witness model: {model:?}");
    assert_eq!(model.get("copy.src != NULL"), Some(&1), "witness model: {model:?}");
    assert_eq!(model.get("copy.dst != NULL"), Some(&1), "witness model: {model:?}");

    // Independent ground truth: run the instrumented (unsliced) program for
    // every 8-bit n and every NULL-ness combination of dst, src and L. The
    // double-unlock must never fire; the leak must fire exactly when all
    // three pointers are non-NULL and n <= 0.
    let prog = parse_and_check(FIG_SRC).unwrap();
    let cfg = build_cfg(restrict_to_entry(&prog, "copy").unwrap());
    let spec = parse_machine(LOCK_SM).unwrap();
    let sites = match_sites(&cfg, &spec);
    let pts = andersen(&cfg);
    let ip = instrument(&cfg, &spec, &sites, &pts, None).unwrap();
    let entry = ip.cfg.func_id("copy").unwrap();
    let region = |name: &str| {
        ip.cfg.objects.lookup_display(name).unwrap_or_else(|| panic!("no object `{name}`"))
    };
    let opts = InterpOptions {
        int_width: 8,
        ptr_elems: 128, // keep dst[i] in bounds for every positive 8-bit n
        step_budget: 1_000_000,
        watch: Vec::new(),
        record_trace: false,
    };
    let ptr = |on: bool, name: &str| {
        if on { CVal::addr(region(name), 0) } else { CVal::NULL }
    };
    let mut rl_witnesses: BTreeSet<i64> = BTreeSet::new();
    for mask in 0u8..8 {
        let (d, s, l) = (mask & 1 != 0, mask & 2 != 0, mask & 4 != 0);
        for n in -128..=127i64 {
            let mut inputs = RunInputs::default();
            inputs.args = vec![
                ptr(d, "region(copy.dst)"),
                ptr(s, "region(copy.src)"),
                CVal::Int(n),
                ptr(l, "region(copy.L)"),
            ];
            let res = interp_run(&ip.cfg, entry, &inputs, &opts);
            let key = fault_key(&ip.cfg, &res.outcome);
            let err = key.as_ref().map(|(_, _, e)| e.as_str());
            assert_ne!(err, Some("DU"), "double unlock at dst={d} src={s} L={l} n={n}");
            let expect_rl = d && s && l && n <= 0;
            assert_eq!(
                err == Some("RL"),
                expect_rl,
                "leak mismatch at dst={d} src={s} L={l} n={n}: {:?}",
                res.outcome
            );
            if err == Some("RL") && d && s && l {
                rl_witnesses.insert(n);
            }
        }
    }
    assert!(
        rl_witnesses.contains(&model["copy.n"]),
        "the reported witness n={} is not in the concrete failure set",
        model["copy.n"]
    );

    let elapsed = t0.elapsed();
    assert!(elapsed.as_secs_f64() < 10.0, "took {elapsed:?}, budget 10s");
    println!(
        "criterion 3: PASS — DU refuted (FP), RL confirmed (BUG, witness n=0 with \
         non-NULL pointers); 2048-run sweep agrees, {elapsed:?}"
    );
}

/// Slicing equivalence: on every terminating, memory-fault-free run of the
/// instrumented original, the slice observes the same machine-state value
/// sequence at the criterion locations and ends the same way.
#[test]
fn criterion_4_slices_preserve_criterion_observations() {
    let t0 = Instant::now();
    let programs = corpus();
    assert!(programs.len() >= 20, "corpus has only {} programs", programs.len());
    let (mut runs, mut skipped) = (0u64, 0u64);
    for p in &programs {
        let b = build(p);
        let ip_watch: Vec<ObjId> = b.ip.machine_vars.iter().map(|m| m.state_var).collect();
        let s_watch: Vec<ObjId> =
            b.sliced.instr.machine_vars.iter().map(|m| m.state_var).collect();
        let ip_targets: Vec<String> =
            b.ip.machine_vars.iter().map(|m| b.ip.cfg.objects.display(m.target)).collect();
        let s_targets: Vec<String> = b
            .sliced
            .instr
            .machine_vars
            .iter()
            .map(|m| b.sliced.instr.cfg.objects.display(m.target))
            .collect();
        assert_eq!(ip_targets, s_targets, "{}: tracked targets changed under slicing", p.name);
        let ip_locs: BTreeSet<LocationId> = b.ip.error_sites.iter().copied().collect();
        let s_locs: BTreeSet<LocationId> =
            b.sliced.instr.error_sites.iter().copied().collect();

        for t in tuples(p) {
            let ip_in = materialize(&t, &b.ip.cfg, b.entry_ip);
            let ip_res = run_on(&b.ip.cfg, b.entry_ip, &ip_in, ip_watch.clone());
            let ip_key = fault_key(&b.ip.cfg, &ip_res.outcome);
            match &ip_res.outcome {
                Outcome::BudgetExhausted => {
                    skipped += 1;
                    continue;
                }
                Outcome::Fault(_) if ip_key.is_none() => {
                    // Memory faults may involve sliced-away accesses; the
                    // guarantee quantifies over fault-free runs.
                    skipped += 1;
                    continue;
                }
                _ => {}
            }
            let s_in = materialize(&t, &b.sliced.instr.cfg, b.entry_sliced);
            let s_res = run_on(&b.sliced.instr.cfg, b.entry_sliced, &s_in, s_watch.clone());

            let ip_seq = seq_at(&b.ip.cfg, &ip_res.trace, &ip_locs);
            let s_seq = seq_at(&b.sliced.instr.cfg, &s_res.trace, &s_locs);
            assert_eq!(ip_seq, s_seq, "{}: criterion sequences diverge on {t:?}", p.name);
            match ip_key {
                Some(key) => {
                    let s_key = fault_key(&b.sliced.instr.cfg, &s_res.outcome);
                    assert_eq!(
                        Some(key),
                        s_key,
                        "{}: fault mismatch on {t:?}: {:?} vs {:?}",
                        p.name,
                        ip_res.outcome,
                        s_res.outcome
                    );
                }
                None => assert!(
                    matches!(s_res.outcome, Outcome::Returned(_)),
                    "{}: original returned but the slice ended with {:?} on {t:?}",
                    p.name,
                    s_res.outcome
                ),
            }
            runs += 1;
        }
    }
    println!(
        "criterion 4: PASS — {} programs, {runs} input tuples compared ({skipped} \
         non-terminating or memory-faulting originals skipped), {:?}",
        programs.len(),
        t0.elapsed()
    );
}

/// State-set soundness: on every concrete run in which each executed
/// matched site resolved its target, the machine state observed after each
/// visited statement is contained in that statement's set.
///
/// Runs where a fire dispatched on NULL sit outside the guarantee: the
/// state sets deliberately step a site's unique may-alias target (the
/// running example locks through an unchecked pointer parameter, and its
/// documented set after `lock(L)` is `{L}`, not `{U,L}`), while the
/// instrumented runtime steps nothing when the binder is NULL.
#[test]
fn criterion_5_state_sets_cover_every_concrete_state() {
    let t0 = Instant::now();
    let programs = corpus();
    let mut checked = 0u64;
    let mut missed = 0u64;
    for p in &programs {
        let b = build(p);
        let sites = match_sites(&b.plain, &b.spec);
        let pts = andersen(&b.plain);
        let ssm = metal_fixpoint(&b.plain, &b.spec, &sites, &pts, None, b.entry_plain);
        let map = node_map(&b.ip.cfg, &b.plain);
        let ip_watch: Vec<ObjId> = b.ip.machine_vars.iter().map(|m| m.state_var).collect();
        let ip_targets: Vec<ObjId> = b.ip.machine_vars.iter().map(|m| m.target).collect();
        let plain_targets = resolve_objs(&b.ip.cfg, &ip_targets, &b.plain);
        let mut watch = ip_watch.clone();
        let mut binder_index: std::collections::BTreeMap<ObjId, usize> =
            std::collections::BTreeMap::new();
        let missable = missable_fires(&b.ip.cfg);
        for (_, v) in &missable {
            binder_index.entry(*v).or_insert_with(|| {
                watch.push(*v);
                watch.len() - 1
            });
        }
        let miss_at: std::collections::BTreeMap<LocationId, usize> =
            missable.iter().map(|(l, v)| (*l, binder_index[v])).collect();

        for t in tuples(p) {
            let inputs = materialize(&t, &b.ip.cfg, b.entry_ip);
            let res = run_on(&b.ip.cfg, b.entry_ip, &inputs, watch.clone());
            if dispatch_missed(&res.trace, &miss_at) {
                missed += 1;
                continue;
            }
            for w in res.trace.windows(2) {
                let Some(&ploc) = map.get(&w[0].loc) else { continue };
                for (k, val) in w[1].vals.iter().enumerate().take(plain_targets.len()) {
                    let CVal::Int(q) = val else {
                        panic!("{}: machine variable holds a pointer", p.name)
                    };
                    let set = ssm.at(ploc, plain_targets[k]);
                    assert!(
                        set.contains(*q as u8),
                        "{}: on {t:?}, state {} of {} after {:?} is outside {}",
                        p.name,
                        b.spec.state_name(*q as u8),
                        b.plain.objects.display(plain_targets[k]),
                        ploc,
                        set.render(&b.spec)
                    );
                    checked += 1;
                }
            }
        }
    }
    println!(
        "criterion 5: PASS — {} programs, {checked} (location, target) state \
         observations all contained ({missed} NULL-dispatch runs outside the \
         guarantee), {:?}",
        programs.len(),
        t0.elapsed()
    );
}

/// Engine exactness on loop-free slices: the set of (machine, target,
/// error) findings equals the ground truth from running every 8-bit input,
/// and every model satisfies its own path condition.
#[test]
fn criterion_6_symbolic_findings_match_exhaustive_ground_truth() {
    let t0 = Instant::now();
    let programs = corpus();
    let mut analyzed = 0usize;
    let mut models = 0u64;
    for p in programs.iter().filter(|p| p.exact) {
        let b = build(p);
        let scfg = &b.sliced.instr.cfg;
        assert!(is_acyclic(scfg), "{}: slice is not loop-free", p.name);

        let out = sym_execute(
            &b.sliced.instr,
            b.entry_sliced,
            &Limits { loop_bound: None, int_width: WIDTH, ptr_elems: PTR_ELEMS, ..Limits::default() },
        );
        assert!(out.exhausted, "{}: engine stopped early", p.name);
        assert!(!out.tainted, "{}: engine hit an UNKNOWN solver result", p.name);
        let mut engine: BTreeSet<(String, String, String)> = BTreeSet::new();
        for path in out.bugs() {
            let PathKind::Bug { machine, target, error_state, model, .. } = &path.kind else {
                unreachable!()
            };
            engine.insert((machine.clone(), target.clone(), error_state.clone()));
            for c in &path.pc {
                assert!(
                    c.eval(model, Width(WIDTH)),
                    "{}: model {model:?} fails its own path condition",
                    p.name
                );
            }
            models += 1;
        }

        let mut concrete: BTreeSet<(String, String, String)> = BTreeSet::new();
        for t in tuples_full_width(p) {
            let inputs = materialize(&t, scfg, b.entry_sliced);
            let res = run_on(scfg, b.entry_sliced, &inputs, Vec::new());
            assert!(
                !matches!(res.outcome, Outcome::BudgetExhausted),
                "{}: loop-free slice exhausted its budget",
                p.name
            );
            if let Some(key) = fault_key(scfg, &res.outcome) {
                concrete.insert(key);
            }
        }
        assert_eq!(
            engine, concrete,
            "{}: engine findings differ from exhaustive ground truth",
            p.name
        );
        analyzed += 1;
    }
    assert!(analyzed >= 15, "only {analyzed} loop-free-slice programs");
    println!(
        "criterion 6: PASS — {analyzed} programs, finding sets equal ground truth, \
         {models} models satisfy their path conditions, {:?}",
        t0.elapsed()
    );
}

/// Instrumentation transparency: original and instrumented programs agree
/// on every original-variable observation, up to the first machine fault.
#[test]
fn criterion_7_instrumentation_is_transparent() {
    let t0 = Instant::now();
    let programs = corpus();
    let (mut runs, mut skipped) = (0u64, 0u64);
    for p in &programs {
        let b = build(p);
        let mut plain_watch: Vec<ObjId> = b
            .plain
            .objects
            .ids()
            .filter(|&o| b.plain.objects.fixed_elems(o) == Some(1))
            .collect();
        plain_watch.sort_by_key(|&o| b.plain.objects.display(o));
        let ip_watch = resolve_objs(&b.plain, &plain_watch, &b.ip.cfg);
        let allowed = stmt_ids(&b.plain);

        for t in tuples(p) {
            let plain_in = materialize(&t, &b.plain, b.entry_plain);
            let plain_res = run_on(&b.plain, b.entry_plain, &plain_in, plain_watch.clone());
            let ip_in = materialize(&t, &b.ip.cfg, b.entry_ip);
            let ip_res = run_on(&b.ip.cfg, b.entry_ip, &ip_in, ip_watch.clone());
            if matches!(plain_res.outcome, Outcome::BudgetExhausted)
                || matches!(ip_res.outcome, Outcome::BudgetExhausted)
            {
                skipped += 1;
                continue;
            }

            let plain_seq = stmt_samples(&b.plain, &plain_res.trace, &allowed);
            let ip_seq = stmt_samples(&b.ip.cfg, &ip_res.trace, &allowed);
            if fault_key(&b.ip.cfg, &ip_res.outcome).is_some() {
                // The machine faulted: the instrumented run is cut short, and
                // everything observed up to the fault must match.
                assert!(
                    ip_seq.len() <= plain_seq.len() && plain_seq[..ip_seq.len()] == ip_seq[..],
                    "{}: pre-fault observations diverge on {t:?}",
                    p.name
                );
            } else {
                assert_eq!(plain_seq, ip_seq, "{}: observations diverge on {t:?}", p.name);
                let pk = outcome_kind(&b.plain, &plain_res.outcome);
                let ik = outcome_kind(&b.ip.cfg, &ip_res.outcome);
                assert_eq!(pk, ik, "{}: outcomes diverge on {t:?}", p.name);
            }
            runs += 1;
        }
    }
    println!(
        "criterion 7: PASS — {} programs, {runs} paired runs agree ({skipped} budget-bound \
         runs skipped), {:?}",
        programs.len(),
        t0.elapsed()
    );
}

/// A CFG-independent key for comparing how two runs ended.
fn outcome_kind(
    cfg: &minisse::frontend::ProgramCfg,
    o: &Outcome,
) -> (String, Option<Obs>) {
    use minisse::frontend::interp::Fault;
    match o {
        Outcome::Returned(v) => ("returned".into(), v.map(|v| obs(cfg, v))),
        Outcome::Fault(Fault::NullDeref { .. }) => ("null-deref".into(), None),
        Outcome::Fault(Fault::OutOfBounds { obj, off, .. }) => {
            ("out-of-bounds".into(), Some(Obs::Addr(cfg.objects.display(*obj), *off)))
        }
        Outcome::Fault(Fault::AssertionFailure { machine, error_state, .. }) => {
            (format!("fault {machine} {error_state}"), None)
        }
        Outcome::BudgetExhausted => ("budget".into(), None),
    }
}

/// Slice ratios are measured and reported per run; no fixed reduction
/// target is asserted, only that the pipeline reports one.
#[test]
fn criterion_8_slice_ratios_are_reported() {
    let t0 = Instant::now();
    let config = RunConfig { entry: Some("foo".into()), ..RunConfig::default() };
    let report = run_find(FIG_SRC, LOCK_SM, &config).unwrap();
    let ratio = report.summary.slice_ratio;
    assert!(
        (0.0..=1.0).contains(&ratio) && ratio > 0.0,
        "expected a nontrivial slice ratio, got {ratio}"
    );
    assert!(report.verdicts.iter().all(|v| (0.0..=1.0).contains(&v.slice_ratio)));
    println!(
        "criterion 8: PASS — slice removed {:.1}% of statements on the running example \
         (reported per run; no corpus-scale reduction target is asserted), {:?}",
        ratio * 100.0,
        t0.elapsed()
    );
}
