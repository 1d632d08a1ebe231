//! Typestate machine specifications and syntactic site matching.
//!
//! A machine file is line-oriented (`#` starts a comment):
//!
//! ```text
//! machine lock_sm
//! states U L DU DL RL
//! initial U
//! error DU "double unlock"
//! error DL "double lock"
//! error RL "return in locked state"
//! trans U -> L  on call lock($x@1)
//! trans U -> DU on call unlock($x@1)
//! trans L -> U  on call unlock($x@1)
//! trans L -> DL on call lock($x@1)
//! trans L -> RL on return
//! ```
//!
//! `$x@1` binds the machine's pattern variable to the call's first argument;
//! that argument identifies the tracked object. Patterns are matched purely
//! syntactically: a call pattern matches call statements with that exact
//! callee name (and enough arguments to contain the binder), `return` matches
//! explicit return statements. An optional `scope f g` line restricts return
//! matching to the named functions; by default every function in the analyzed
//! program is in scope.

use std::collections::{BTreeMap, BTreeSet};

use crate::frontend::ast::StmtId;
use crate::frontend::cfg::{LocationId, ProgramCfg, RExpr, RStmt};

pub const RETURN_LABEL: &str = "return";

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Pattern {
    Call { callee: String, binder_pos: Option<u32> },
    Return,
}

impl Pattern {
    /// The transition label: the callee name, or `"return"`.
    pub fn label(&self) -> &str {
        match self {
            Pattern::Call { callee, .. } => callee,
            Pattern::Return => RETURN_LABEL,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Transition {
    pub from: u8,
    pub to: u8,
    pub pattern: Pattern,
}

#[derive(Debug, Clone)]
pub struct MachineSpec {
    pub name: String,
    pub states: Vec<String>,
    pub initial: u8,
    /// Error state -> human-readable message.
    pub errors: BTreeMap<u8, String>,
    pub transitions: Vec<Transition>,
    /// The pattern variable, e.g. `$x`; `None` when no pattern binds.
    pub binder: Option<String>,
    /// Functions whose returns are matched; `None` = all.
    pub scope: Option<BTreeSet<String>>,
}

impl MachineSpec {
    pub fn state_index(&self, name: &str) -> Option<u8> {
        self.states.iter().position(|s| s == name).map(|i| i as u8)
    }

    pub fn state_name(&self, idx: u8) -> &str {
        &self.states[idx as usize]
    }

    pub fn is_error(&self, idx: u8) -> bool {
        self.errors.contains_key(&idx)
    }

    /// Deterministic successor for (state, label), if any.
    pub fn next(&self, state: u8, label: &str) -> Option<u8> {
        self.transitions
            .iter()
            .find(|t| t.from == state && t.pattern.label() == label)
            .map(|t| t.to)
    }

    /// Call patterns as callee -> binder position.
    pub fn call_patterns(&self) -> BTreeMap<&str, Option<u32>> {
        let mut out = BTreeMap::new();
        for t in &self.transitions {
            if let Pattern::Call { callee, binder_pos } = &t.pattern {
                out.insert(callee.as_str(), *binder_pos);
            }
        }
        out
    }

    pub fn has_return_pattern(&self) -> bool {
        self.transitions.iter().any(|t| t.pattern == Pattern::Return)
    }

    /// (state, label) -> next state, the run-time transition table.
    pub fn transition_table(&self) -> BTreeMap<(u8, String), u8> {
        self.transitions
            .iter()
            .map(|t| ((t.from, t.pattern.label().to_string()), t.to))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SpecError {
    pub line: u32,
    pub msg: String,
}

impl SpecError {
    fn new(line: u32, msg: impl Into<String>) -> Self {
        SpecError { line, msg: msg.into() }
    }
}

impl std::fmt::Display for SpecError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "machine spec line {}: {}", self.line, self.msg)
    }
}

impl std::error::Error for SpecError {}

pub fn parse_machine(text: &str) -> Result<MachineSpec, SpecError> {
    let mut name: Option<String> = None;
    let mut states: Option<Vec<String>> = None;
    let mut initial: Option<(u8, u32)> = None;
    let mut errors: BTreeMap<u8, String> = BTreeMap::new();
    let mut transitions: Vec<Transition> = Vec::new();
    let mut binder: Option<String> = None;
    let mut scope: Option<BTreeSet<String>> = None;
    // callee -> (binder position, line first seen)
    let mut call_binders: BTreeMap<String, (Option<u32>, u32)> = BTreeMap::new();

    for (i, raw) in text.lines().enumerate() {
        let ln = i as u32 + 1;
        let line = strip_comment(raw).trim().to_string();
        if line.is_empty() {
            continue;
        }
        let toks: Vec<&str> = line.split_whitespace().collect();
        let directive = toks[0];
        if name.is_none() && directive != "machine" {
            return Err(SpecError::new(ln, "expected `machine <name>` as the first directive"));
        }
        match directive {
            "machine" => {
                if name.is_some() {
                    return Err(SpecError::new(ln, "duplicate `machine` directive"));
                }
                if toks.len() != 2 {
                    return Err(SpecError::new(ln, "expected `machine <name>`"));
                }
                name = Some(toks[1].to_string());
            }
            "states" => {
                if states.is_some() {
                    return Err(SpecError::new(ln, "duplicate `states` directive"));
                }
                if toks.len() < 2 {
                    return Err(SpecError::new(ln, "a machine needs at least one state"));
                }
                if toks.len() - 1 > 255 {
                    return Err(SpecError::new(ln, "too many states (at most 255)"));
                }
                let mut list = Vec::new();
                for s in &toks[1..] {
                    if list.iter().any(|x: &String| x == s) {
                        return Err(SpecError::new(ln, format!("duplicate state `{s}`")));
                    }
                    list.push(s.to_string());
                }
                states = Some(list);
            }
            "initial" => {
                if initial.is_some() {
                    return Err(SpecError::new(ln, "duplicate `initial` directive"));
                }
                if toks.len() != 2 {
                    return Err(SpecError::new(ln, "expected `initial <state>`"));
                }
                let idx = resolve_state(&states, toks[1], ln)?;
                initial = Some((idx, ln));
            }
            "error" => {
                if toks.len() < 3 {
                    return Err(SpecError::new(ln, "expected `error <state> \"message\"`"));
                }
                let idx = resolve_state(&states, toks[1], ln)?;
                let (q1, q2) = (line.find('"'), line.rfind('"'));
                let msg = match (q1, q2) {
                    (Some(a), Some(b)) if a < b && line.ends_with('"') => &line[a + 1..b],
                    _ => {
                        return Err(SpecError::new(
                            ln,
                            "error message must be a double-quoted string",
                        ))
                    }
                };
                if errors.insert(idx, msg.to_string()).is_some() {
                    return Err(SpecError::new(ln, format!("duplicate error state `{}`", toks[1])));
                }
            }
            "trans" => {
                // trans FROM -> TO on <pattern>
                if toks.len() < 6 || toks[2] != "->" || toks[4] != "on" {
                    return Err(SpecError::new(ln, "expected `trans <from> -> <to> on <pattern>`"));
                }
                let from = resolve_state(&states, toks[1], ln)?;
                let to = resolve_state(&states, toks[3], ln)?;
                let pattern = parse_pattern(&toks[5..].join(" "), ln, &mut binder)?;
                if errors.contains_key(&from) {
                    return Err(SpecError::new(
                        ln,
                        format!("error state `{}` has an outgoing transition (error states are absorbing)", toks[1]),
                    ));
                }
                let label = pattern.label().to_string();
                if transitions.iter().any(|t| t.from == from && t.pattern.label() == label) {
                    return Err(SpecError::new(
                        ln,
                        format!("duplicate transition for state `{}` on `{label}`", toks[1]),
                    ));
                }
                if let Pattern::Call { callee, binder_pos } = &pattern {
                    match call_binders.get(callee) {
                        Some((pos, first_ln)) if pos != binder_pos => {
                            return Err(SpecError::new(
                                ln,
                                format!(
                                    "call patterns for `{callee}` disagree on the binder position (first defined at line {first_ln})"
                                ),
                            ));
                        }
                        Some(_) => {}
                        None => {
                            call_binders.insert(callee.clone(), (*binder_pos, ln));
                        }
                    }
                }
                transitions.push(Transition { from, to, pattern });
            }
            "scope" => {
                if scope.is_some() {
                    return Err(SpecError::new(ln, "duplicate `scope` directive"));
                }
                if toks.len() < 2 {
                    return Err(SpecError::new(ln, "expected `scope <function>...`"));
                }
                scope = Some(toks[1..].iter().map(|s| s.to_string()).collect());
            }
            other => {
                return Err(SpecError::new(ln, format!("unknown directive `{other}`")));
            }
        }
    }

    let name = name.ok_or_else(|| SpecError::new(1, "missing `machine` directive"))?;
    let states = states.ok_or_else(|| SpecError::new(1, "missing `states` directive"))?;
    let (initial, initial_ln) =
        initial.ok_or_else(|| SpecError::new(1, "missing `initial` directive"))?;
    if errors.contains_key(&initial) {
        return Err(SpecError::new(
            initial_ln,
            format!("initial state `{}` may not be an error state", states[initial as usize]),
        ));
    }
    // Late `error` directives can retroactively make an earlier transition
    // leave an error state; re-check the full list.
    for t in &transitions {
        if errors.contains_key(&t.from) {
            return Err(SpecError::new(
                1,
                format!(
                    "error state `{}` has an outgoing transition (error states are absorbing)",
                    states[t.from as usize]
                ),
            ));
        }
    }
    Ok(MachineSpec { name, states, initial, errors, transitions, binder, scope })
}

fn strip_comment(line: &str) -> &str {
    let mut in_quote = false;
    for (i, c) in line.char_indices() {
        match c {
            '"' => in_quote = !in_quote,
            '#' if !in_quote => return &line[..i],
            _ => {}
        }
    }
    line
}

fn resolve_state(states: &Option<Vec<String>>, name: &str, ln: u32) -> Result<u8, SpecError> {
    let states = states
        .as_ref()
        .ok_or_else(|| SpecError::new(ln, "`states` must be declared before use"))?;
    states
        .iter()
        .position(|s| s == name)
        .map(|i| i as u8)
        .ok_or_else(|| SpecError::new(ln, format!("unknown state `{name}`")))
}

fn parse_pattern(s: &str, ln: u32, binder: &mut Option<String>) -> Result<Pattern, SpecError> {
    let s = s.trim();
    if s == "return" {
        return Ok(Pattern::Return);
    }
    let Some(call) = s.strip_prefix("call ").map(str::trim) else {
        return Err(SpecError::new(ln, format!("unknown pattern `{s}` (expected `call f($x@N)` or `return`)")));
    };
    let (callee, rest) = call
        .split_once('(')
        .ok_or_else(|| SpecError::new(ln, "call pattern needs an argument list, e.g. `lock($x@1)`"))?;
    let callee = callee.trim();
    if callee.is_empty() || !callee.chars().all(|c| c.is_ascii_alphanumeric() || c == '_') {
        return Err(SpecError::new(ln, format!("`{callee}` is not a valid function name")));
    }
    let inner = rest
        .strip_suffix(')')
        .ok_or_else(|| SpecError::new(ln, "unclosed call pattern"))?
        .trim();
    if inner.is_empty() {
        return Ok(Pattern::Call { callee: callee.to_string(), binder_pos: None });
    }
    let body = inner
        .strip_prefix('$')
        .ok_or_else(|| SpecError::new(ln, format!("malformed binder `{inner}` (expected `$x@N`)")))?;
    let (bname, pos) = body
        .split_once('@')
        .ok_or_else(|| SpecError::new(ln, format!("malformed binder `{inner}` (expected `$x@N`)")))?;
    let pos: u32 = pos
        .parse()
        .map_err(|_| SpecError::new(ln, format!("malformed binder position `{pos}`")))?;
    if pos == 0 {
        return Err(SpecError::new(ln, "binder positions are 1-based"));
    }
    let full = format!("${bname}");
    match binder {
        Some(b) if *b != full => {
            return Err(SpecError::new(
                ln,
                format!("pattern binds `{full}` but the machine's binder is `{b}`"),
            ));
        }
        Some(_) => {}
        None => *binder = Some(full),
    }
    Ok(Pattern::Call { callee: callee.to_string(), binder_pos: Some(pos) })
}

/// A statement that matches some transition pattern.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MatchSite {
    pub loc: LocationId,
    /// AST statement the node was lowered from, for instrumentation.
    pub stmt_id: StmtId,
    /// Transition label: callee name or `"return"`.
    pub label: String,
    /// The binder's concrete argument expression; absent for returns and
    /// binder-less call patterns.
    pub binder: Option<RExpr>,
}

/// All and only the statements matching some pattern of `spec`, in
/// `LocationId` order. Call patterns match call statements by exact callee
/// name, provided the call has enough arguments to contain the binder.
/// `return` matches explicit return statements of in-scope functions
/// (synthesized fall-through returns are not source statements).
pub fn match_sites(cfg: &ProgramCfg, spec: &MachineSpec) -> Vec<MatchSite> {
    let call_pats = spec.call_patterns();
    let want_return = spec.has_return_pattern();
    let mut out = Vec::new();
    for f in &cfg.funcs {
        let in_scope = spec.scope.as_ref().map_or(true, |s| s.contains(&f.name));
        for (i, n) in f.nodes.iter().enumerate() {
            let loc = LocationId::new(f.id, i as u32);
            match &n.stmt {
                RStmt::Call { callee, args, .. } => {
                    let callee_name = cfg.func(*callee).name.as_str();
                    let Some(&pos) = call_pats.get(callee_name) else { continue };
                    let binder = match pos {
                        Some(p) => match args.get(p as usize - 1) {
                            Some(a) => Some(a.clone()),
                            None => continue, // too few arguments: no match
                        },
                        None => None,
                    };
                    out.push(MatchSite {
                        loc,
                        stmt_id: n.stmt_id.expect("call nodes come from source"),
                        label: callee_name.to_string(),
                        binder,
                    });
                }
                RStmt::Return { explicit: true, .. } if want_return && in_scope => {
                    out.push(MatchSite {
                        loc,
                        stmt_id: n.stmt_id.expect("explicit returns come from source"),
                        label: RETURN_LABEL.to_string(),
                        binder: None,
                    });
                }
                _ => {}
            }
        }
    }
    out
}

/// The lock-discipline machine used throughout the documentation and tests.
pub const LOCK_SM: &str = r#"machine lock_sm
states U L DU DL RL
initial U
error DU "double unlock"
error DL "double lock"
error RL "return in locked state"
trans U -> L  on call lock($x@1)
trans U -> DU on call unlock($x@1)
trans L -> U  on call unlock($x@1)
trans L -> DL on call lock($x@1)
trans L -> RL on return
"#;

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frontend::{build_cfg, parse_and_check};

    fn compile(src: &str) -> ProgramCfg {
        build_cfg(parse_and_check(src).unwrap())
    }

    #[test]
    fn lock_sm_parses_to_the_documented_machine() {
        let m = parse_machine(LOCK_SM).unwrap();
        assert_eq!(m.name, "lock_sm");
        assert_eq!(m.states, vec!["U", "L", "DU", "DL", "RL"]);
        assert_eq!(m.initial, 0);
        assert_eq!(m.errors.len(), 3);
        assert_eq!(m.errors[&m.state_index("DU").unwrap()], "double unlock");
        assert_eq!(m.errors[&m.state_index("DL").unwrap()], "double lock");
        assert_eq!(m.errors[&m.state_index("RL").unwrap()], "return in locked state");
        assert_eq!(m.transitions.len(), 5);
        assert_eq!(m.binder.as_deref(), Some("$x"));

        let u = m.state_index("U").unwrap();
        let l = m.state_index("L").unwrap();
        assert_eq!(m.next(u, "lock"), Some(l));
        assert_eq!(m.next(l, "unlock"), Some(u));
        assert_eq!(m.next(u, "unlock"), m.state_index("DU"));
        assert_eq!(m.next(l, "lock"), m.state_index("DL"));
        assert_eq!(m.next(l, "return"), m.state_index("RL"));
        assert_eq!(m.next(u, "return"), None, "returning unlocked is fine");
    }

    #[test]
    fn a_single_state_machine_with_no_transitions_is_valid() {
        let m = parse_machine("machine m\nstates S\ninitial S\n").unwrap();
        assert_eq!(m.states, vec!["S"]);
        assert!(m.transitions.is_empty());
        assert!(m.errors.is_empty());
        assert!(m.binder.is_none());
    }

    #[test]
    fn error_states_must_be_absorbing() {
        let text = "machine m\nstates A B\ninitial A\nerror B \"boom\"\ntrans B -> A on return\n";
        let err = parse_machine(text).unwrap_err();
        assert_eq!(err.line, 5);
        assert!(err.msg.contains("absorbing"), "{}", err.msg);

        // Also when the error directive comes after the transition.
        let text2 = "machine m\nstates A B\ninitial A\ntrans B -> A on return\nerror B \"boom\"\n";
        assert!(parse_machine(text2).unwrap_err().msg.contains("absorbing"));
    }

    #[test]
    fn determinism_is_enforced_per_state_and_label() {
        let text = "machine m\nstates A B C\ninitial A\ntrans A -> B on call f($x@1)\ntrans A -> C on call f($x@1)\n";
        let err = parse_machine(text).unwrap_err();
        assert_eq!(err.line, 5);
        assert!(err.msg.contains("duplicate transition"));
    }

    #[test]
    fn malformed_specs_are_rejected_with_line_numbers() {
        let unknown = parse_machine("machine m\nstates A\ninitial B\n").unwrap_err();
        assert_eq!(unknown.line, 3);
        assert!(unknown.msg.contains("unknown state `B`"));

        let missing = parse_machine("machine m\nstates A\n").unwrap_err();
        assert!(missing.msg.contains("missing `initial`"));

        let initial_err =
            parse_machine("machine m\nstates A B\ninitial B\nerror B \"bad\"\n").unwrap_err();
        assert!(initial_err.msg.contains("may not be an error state"));

        let zero = parse_machine("machine m\nstates A B\ninitial A\ntrans A -> B on call f($x@0)\n")
            .unwrap_err();
        assert!(zero.msg.contains("1-based"));

        let mixed = parse_machine(
            "machine m\nstates A B\ninitial A\ntrans A -> B on call f($x@1)\ntrans B -> A on call g($y@1)\n",
        )
        .unwrap_err();
        assert!(mixed.msg.contains("the machine's binder is `$x`"));

        let disagree = parse_machine(
            "machine m\nstates A B C\ninitial A\ntrans A -> B on call f($x@1)\ntrans B -> C on call f($x@2)\n",
        )
        .unwrap_err();
        assert!(disagree.msg.contains("disagree on the binder position"));

        let dup_state = parse_machine("machine m\nstates A A\ninitial A\n").unwrap_err();
        assert!(dup_state.msg.contains("duplicate state `A`"));
    }

    #[test]
    fn comments_and_spacing_are_tolerated() {
        let text = "# lock machine\nmachine m   # trailing\nstates  A  B\ninitial A\nerror B \"has # inside\"\ntrans A ->  B  on  call  f( $x@2 )\n";
        let m = parse_machine(text).unwrap();
        assert_eq!(m.errors[&1], "has # inside");
        assert_eq!(
            m.transitions[0].pattern,
            Pattern::Call { callee: "f".into(), binder_pos: Some(2) }
        );
    }

    const COPY_SRC: &str = r#"
        char *buf1, *buf2;
        int L1, L2;
        extern void lock(int *l);
        extern void unlock(int *l);
        char *copy(char *dst, char *src, int n, int *L) {
            int i, len;
            len = 0;
            if (src != NULL && dst != NULL) { len = n; lock(L); }
            i = 0;
            while (i < len) { dst[i] = src[i]; i++; }
            if (len > 0) { unlock(L); }
            return dst;
        }
        void foo(char *src, int n) {
            copy(src, buf1, n, &L1);
            copy(src, buf2, n, &L2);
        }
    "#;

    #[test]
    fn the_running_example_has_exactly_three_sites() {
        let cfg = compile(COPY_SRC);
        let m = parse_machine(LOCK_SM).unwrap();
        let sites = match_sites(&cfg, &m);
        let labels: Vec<&str> = sites.iter().map(|s| s.label.as_str()).collect();
        assert_eq!(labels, vec!["lock", "unlock", "return"]);
        // Sites arrive in LocationId order within copy.
        assert!(sites.windows(2).all(|w| w[0].loc < w[1].loc));
        // Call binders are the concrete argument expressions.
        let l_param = cfg.objects.lookup_display("copy.L").unwrap();
        assert_eq!(sites[0].binder, Some(RExpr::Load(l_param)));
        assert_eq!(sites[1].binder, Some(RExpr::Load(l_param)));
        assert_eq!(sites[2].binder, None);
        // foo falls off the end; its synthesized return is not a source
        // statement and must not match.
        let foo = cfg.func_id("foo").unwrap();
        assert!(sites.iter().all(|s| s.loc.func != foo));
    }

    #[test]
    fn direct_address_binders_are_captured_verbatim() {
        let cfg = compile(
            "int L1; extern void lock(int *l); void f() { lock(&L1); lock(&L1); }",
        );
        let m = parse_machine(LOCK_SM).unwrap();
        let sites = match_sites(&cfg, &m);
        assert_eq!(sites.len(), 2);
        let l1 = cfg.objects.lookup_display("L1").unwrap();
        for s in &sites {
            assert_eq!(s.binder, Some(RExpr::AddrOfObj(l1)));
        }
    }

    #[test]
    fn lock_free_programs_match_nothing() {
        let cfg = compile("int g; void f() { g = 1; }");
        let m = parse_machine(LOCK_SM).unwrap();
        // f has no explicit return and calls nothing.
        assert!(match_sites(&cfg, &m).is_empty());
    }

    #[test]
    fn scope_restricts_return_matching() {
        let src = "int g; int f() { return 1; } int h() { return 2; }";
        let cfg = compile(src);
        let scoped = parse_machine(
            "machine m\nstates A B\ninitial A\ntrans A -> B on return\nscope f\n",
        )
        .unwrap();
        let sites = match_sites(&cfg, &scoped);
        assert_eq!(sites.len(), 1);
        assert_eq!(sites[0].loc.func, cfg.func_id("f").unwrap());

        let unscoped =
            parse_machine("machine m\nstates A B\ninitial A\ntrans A -> B on return\n").unwrap();
        assert_eq!(match_sites(&cfg, &unscoped).len(), 2);
    }

    #[test]
    fn calls_too_short_for_the_binder_do_not_match() {
        let cfg = compile("extern void f(); void g() { f(); }");
        let m = parse_machine(
            "machine m\nstates A B\ninitial A\ntrans A -> B on call f($x@1)\n",
        )
        .unwrap();
        assert!(match_sites(&cfg, &m).is_empty());
    }
}
