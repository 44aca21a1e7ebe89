//! Alarm specification patterns and the proof obligations they expand to.
//!
//! An alarm pattern relates a diagnosis condition `β` to an alarm variable
//! `A`. Every pattern certifies a past formula `τ` (the condition the alarm
//! vouches for) and, depending on the diagnosability and maximality flags,
//! a set of correctness, completeness and maximality obligations.

use std::collections::VecDeque;
use std::fmt;

use rustc_hash::FxHashSet;
use serde::Serialize;

use crate::expr::Expr;
use crate::kernel::{reachable_graph, Lts, DEFAULT_STATE_CAP};
use crate::pastltl::Past;
use crate::syntax::{resolve_past, Model, Span, SpecDoc};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub enum PatternKind {
    ExactDel,
    BoundDel,
    FiniteDel,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub enum Pattern {
    ExactDel(u32),
    BoundDel(u32),
    FiniteDel,
}

impl Pattern {
    pub fn kind(self) -> PatternKind {
        match self {
            Pattern::ExactDel(_) => PatternKind::ExactDel,
            Pattern::BoundDel(_) => PatternKind::BoundDel,
            Pattern::FiniteDel => PatternKind::FiniteDel,
        }
    }

    pub fn delay(self) -> Option<u32> {
        match self {
            Pattern::ExactDel(d) | Pattern::BoundDel(d) => Some(d),
            Pattern::FiniteDel => None,
        }
    }
}

impl fmt::Display for Pattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Pattern::ExactDel(d) => write!(f, "exactdel({d})"),
            Pattern::BoundDel(d) => write!(f, "bounddel({d})"),
            Pattern::FiniteDel => f.write_str("finitedel"),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub enum Diag {
    System,
    Trace,
}

#[derive(Clone, Debug)]
pub struct AlarmSpec {
    pub name: String,
    pub pattern: Pattern,
    pub beta: Past<Expr>,
    /// Condition as written, for reports.
    pub beta_src: String,
    pub diag: Diag,
    pub maximal: bool,
}

impl AlarmSpec {
    pub fn new(
        name: impl Into<String>,
        pattern: Pattern,
        beta: Past<Expr>,
        diag: Diag,
        maximal: bool,
    ) -> AlarmSpec {
        AlarmSpec {
            name: name.into(),
            pattern,
            beta,
            beta_src: String::new(),
            diag,
            maximal,
        }
    }

    pub fn tau(&self) -> Past<Expr> {
        tau_of(self)
    }
}

/// The past formula an alarm certifies: `Y^d β`, `O^{<=d} β` or `O β`.
pub fn tau_of(spec: &AlarmSpec) -> Past<Expr> {
    let b = Box::new(spec.beta.clone());
    match spec.pattern {
        Pattern::ExactDel(d) => Past::Yn(d, b),
        Pattern::BoundDel(d) => Past::Ole(d, b),
        Pattern::FiniteDel => Past::O(b),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub enum Role {
    Correctness,
    Completeness,
    Maximality,
}

impl fmt::Display for Role {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Role::Correctness => "correctness",
            Role::Completeness => "completeness",
            Role::Maximality => "maximality",
        })
    }
}

/// Temporal shape of one obligation. `⟨φ⟩` abbreviates "φ at an observation
/// point"; `K` is perfect-recall knowledge of `τ`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub enum ObligationKind {
    /// `G(⟨A⟩ → τ)`
    SafetyPast,
    /// `G(β → X^d ⟨A⟩)`
    ExactResponse(u32),
    /// `G(β → F^{<=d} ⟨A⟩)`
    BoundedResponse(u32),
    /// `G(β → F ⟨A⟩)`
    Response,
    /// `G(⟨K τ⟩ → A)`
    EpistemicSafety,
    /// `G((β → X^d ⟨K τ⟩) → (β → X^d ⟨A⟩))`, only in the unsimplified table.
    EpistemicExactResponse(u32),
    /// `G((β ∧ F^{<=d} ⟨K τ⟩) → F^{<=d} ⟨A⟩)`
    EpistemicBoundedResponse(u32),
    /// `G((β ∧ F ⟨K τ⟩) → F ⟨A⟩)`
    EpistemicResponse,
}

impl ObligationKind {
    pub fn role(self) -> Role {
        match self {
            ObligationKind::SafetyPast => Role::Correctness,
            ObligationKind::EpistemicSafety => Role::Maximality,
            _ => Role::Completeness,
        }
    }

    pub fn is_liveness(self) -> bool {
        matches!(
            self,
            ObligationKind::Response | ObligationKind::EpistemicResponse
        )
    }

    /// Formula text for alarm `a`, condition `beta` and certified formula `tau`.
    pub fn instantiate(self, a: &str, beta: &str, tau: &str) -> String {
        match self {
            ObligationKind::SafetyPast => format!("G(<{a}> -> {tau})"),
            ObligationKind::ExactResponse(d) => format!("G({beta} -> X^{d} <{a}>)"),
            ObligationKind::BoundedResponse(d) => format!("G({beta} -> F<={d} <{a}>)"),
            ObligationKind::Response => format!("G({beta} -> F <{a}>)"),
            ObligationKind::EpistemicSafety => format!("G(<K {tau}> -> {a})"),
            ObligationKind::EpistemicExactResponse(d) => {
                format!("G(({beta} -> X^{d} <K {tau}>) -> ({beta} -> X^{d} <{a}>))")
            }
            ObligationKind::EpistemicBoundedResponse(d) => {
                format!("G(({beta} & F<={d} <K {tau}>) -> F<={d} <{a}>)")
            }
            ObligationKind::EpistemicResponse => format!("G(({beta} & F <K {tau}>) -> F <{a}>)"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Obligation {
    pub alarm: String,
    pub role: Role,
    pub kind: ObligationKind,
    /// Instantiated formula, for reports.
    pub formula: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct CheckPlan {
    pub alarm: String,
    pub obligations: Vec<Obligation>,
}

impl CheckPlan {
    pub fn kinds(&self) -> Vec<ObligationKind> {
        self.obligations.iter().map(|o| o.kind).collect()
    }

    pub fn has_role(&self, role: Role) -> bool {
        self.obligations.iter().any(|o| o.role == role)
    }
}

/// Obligation of kind `kind` for `spec`, with its formula text.
pub fn obligation(spec: &AlarmSpec, kind: ObligationKind) -> Obligation {
    plan(spec, vec![kind]).obligations.remove(0)
}

fn plan(spec: &AlarmSpec, kinds: Vec<ObligationKind>) -> CheckPlan {
    let beta = if spec.beta_src.is_empty() {
        "beta".to_string()
    } else {
        format!("({})", spec.beta_src)
    };
    let tau = match spec.pattern {
        Pattern::ExactDel(d) => format!("Y^{d} {beta}"),
        Pattern::BoundDel(d) => format!("O<={d} {beta}"),
        Pattern::FiniteDel => format!("O {beta}"),
    };
    let obligations = kinds
        .into_iter()
        .map(|kind| Obligation {
            alarm: spec.name.clone(),
            role: kind.role(),
            kind,
            formula: kind.instantiate(&spec.name, &beta, &tau),
        })
        .collect();
    CheckPlan {
        alarm: spec.name.clone(),
        obligations,
    }
}

fn system_completeness(p: Pattern) -> ObligationKind {
    match p {
        Pattern::ExactDel(d) => ObligationKind::ExactResponse(d),
        Pattern::BoundDel(d) => ObligationKind::BoundedResponse(d),
        Pattern::FiniteDel => ObligationKind::Response,
    }
}

fn trace_completeness(p: Pattern) -> ObligationKind {
    match p {
        Pattern::ExactDel(d) => ObligationKind::EpistemicExactResponse(d),
        Pattern::BoundDel(d) => ObligationKind::EpistemicBoundedResponse(d),
        Pattern::FiniteDel => ObligationKind::EpistemicResponse,
    }
}

/// Obligations of the simplified table. Trace-diagnosable cells replace
/// completeness by maximality wherever maximality implies it.
pub fn expand_pattern(spec: &AlarmSpec) -> CheckPlan {
    use ObligationKind::*;
    let kinds = match (spec.diag, spec.maximal, spec.pattern) {
        (Diag::System, false, p) => vec![SafetyPast, system_completeness(p)],
        (Diag::System, true, p) => vec![SafetyPast, system_completeness(p), EpistemicSafety],
        (Diag::Trace, _, Pattern::ExactDel(_)) => vec![SafetyPast, EpistemicSafety],
        (Diag::Trace, false, p) => vec![SafetyPast, trace_completeness(p)],
        (Diag::Trace, true, _) => vec![SafetyPast, EpistemicSafety],
    };
    plan(spec, kinds)
}

/// Obligations of the unsimplified table, kept for cross-checking.
pub fn expand_full(spec: &AlarmSpec) -> CheckPlan {
    use ObligationKind::*;
    let mut kinds = vec![SafetyPast];
    kinds.push(match spec.diag {
        Diag::System => system_completeness(spec.pattern),
        Diag::Trace => trace_completeness(spec.pattern),
    });
    if spec.maximal {
        kinds.push(EpistemicSafety);
    }
    plan(spec, kinds)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Severity {
    Error,
    Warning,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Diagnostic {
    pub severity: Severity,
    pub alarm: String,
    pub line: u32,
    pub col: u32,
    pub message: String,
}

impl Diagnostic {
    fn new(severity: Severity, alarm: &str, span: Span, message: impl Into<String>) -> Diagnostic {
        Diagnostic {
            severity,
            alarm: alarm.to_string(),
            line: span.line,
            col: span.col,
            message: message.into(),
        }
    }
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sev = match self.severity {
            Severity::Error => "error",
            Severity::Warning => "warning",
        };
        write!(
            f,
            "{}:{}: {sev}: alarm `{}`: {}",
            self.line, self.col, self.alarm, self.message
        )
    }
}

#[derive(Clone, Debug, Default)]
pub struct Validation {
    /// Specifications that resolved, in source order.
    pub specs: Vec<AlarmSpec>,
    pub diagnostics: Vec<Diagnostic>,
}

impl Validation {
    pub fn has_errors(&self) -> bool {
        self.diagnostics
            .iter()
            .any(|d| d.severity == Severity::Error)
    }

    pub fn errors(&self) -> impl Iterator<Item = &Diagnostic> {
        self.diagnostics
            .iter()
            .filter(|d| d.severity == Severity::Error)
    }
}

/// Longest shortest-path distance from the initial states, if the reachable
/// graph fits under the default cap.
pub fn reachable_diameter(lts: &Lts) -> Option<u32> {
    let g = reachable_graph(lts, DEFAULT_STATE_CAP).ok()?;
    let mut dist = vec![u32::MAX; g.len()];
    let mut queue = VecDeque::new();
    for &i in &g.init {
        dist[i as usize] = 0;
        queue.push_back(i);
    }
    let mut max = 0;
    while let Some(s) = queue.pop_front() {
        let d = dist[s as usize];
        max = max.max(d);
        for &(_, t) in g.edges(s) {
            if dist[t as usize] == u32::MAX {
                dist[t as usize] = d + 1;
                queue.push_back(t);
            }
        }
    }
    Some(max)
}

/// Resolves and checks a specification document against a model. Problems
/// are reported as diagnostics, never as errors.
pub fn validate_specs(doc: &SpecDoc, model: &Model) -> Validation {
    let mut out = Validation::default();
    let mut seen = FxHashSet::default();
    let mut names = FxHashSet::default();
    let diameter = reachable_diameter(&model.lts);
    for a in &doc.alarms {
        let mut ok = true;
        let mut err = |msg: String| {
            out.diagnostics
                .push(Diagnostic::new(Severity::Error, &a.name, a.span, msg));
        };
        if !seen.insert(a.name.clone()) {
            err("duplicate alarm name".into());
            ok = false;
        }
        if model.lts.var_id(&a.name).is_some() {
            err("alarm name clashes with a model variable".into());
            ok = false;
        }
        if a.delay < 0 {
            err(format!("negative delay {}", a.delay));
            ok = false;
        }
        let beta = match resolve_past(&a.beta, &model.scope) {
            Ok(b) => Some(b),
            Err(e) => {
                err(e.to_string());
                None
            }
        };
        names.insert(a.name.clone());
        let (Some(beta), true) = (beta, ok) else {
            continue;
        };
        let d = a.delay as u32;
        let pattern = match a.pattern {
            PatternKind::ExactDel => Pattern::ExactDel(d),
            PatternKind::BoundDel => Pattern::BoundDel(d),
            PatternKind::FiniteDel => Pattern::FiniteDel,
        };
        if let (Some(d), Some(diam)) = (pattern.delay(), diameter) {
            if d > diam {
                out.diagnostics.push(Diagnostic::new(
                    Severity::Warning,
                    &a.name,
                    a.span,
                    format!("delay {d} exceeds the reachable diameter {diam}"),
                ));
            }
        }
        out.specs.push(AlarmSpec {
            name: a.name.clone(),
            pattern,
            beta,
            beta_src: a.beta.to_string(),
            diag: a.diag,
            maximal: a.maximal,
        });
    }
    for a in &doc.alarms {
        if let Some(base) = a.name.strip_suffix("_neg") {
            if names.contains(base) {
                out.diagnostics.push(Diagnostic::new(
                    Severity::Error,
                    &a.name,
                    a.span,
                    format!("name clashes with the negative alarm of `{base}`"),
                ));
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::{load_model, parse_spec_doc};

    fn spec(pattern: Pattern, diag: Diag, maximal: bool) -> AlarmSpec {
        AlarmSpec::new("A", pattern, Past::Atom(Expr::bool(true)), diag, maximal)
    }

    #[test]
    fn tau_per_pattern() {
        let b = Box::new(Past::Atom(Expr::bool(true)));
        assert_eq!(
            tau_of(&spec(Pattern::ExactDel(2), Diag::System, false)),
            Past::Yn(2, b.clone())
        );
        assert_eq!(
            tau_of(&spec(Pattern::BoundDel(0), Diag::System, false)).desugar(),
            *b
        );
        assert_eq!(
            tau_of(&spec(Pattern::FiniteDel, Diag::System, false)),
            Past::O(b)
        );
    }

    #[test]
    fn simplified_cells() {
        use ObligationKind::*;
        let k = |p, d, m| expand_pattern(&spec(p, d, m)).kinds();
        assert_eq!(
            k(Pattern::FiniteDel, Diag::Trace, true),
            vec![SafetyPast, EpistemicSafety]
        );
        assert_eq!(
            k(Pattern::ExactDel(3), Diag::System, false),
            vec![SafetyPast, ExactResponse(3)]
        );
        assert_eq!(
            k(Pattern::BoundDel(2), Diag::Trace, false),
            vec![SafetyPast, EpistemicBoundedResponse(2)]
        );
        assert_eq!(
            k(Pattern::ExactDel(1), Diag::Trace, false),
            vec![SafetyPast, EpistemicSafety]
        );
        assert_eq!(
            k(Pattern::FiniteDel, Diag::Trace, false),
            vec![SafetyPast, EpistemicResponse]
        );
        assert_eq!(
            k(Pattern::ExactDel(0), Diag::System, true),
            vec![SafetyPast, ExactResponse(0), EpistemicSafety]
        );
    }

    #[test]
    fn every_cell_expands_deterministically() {
        for p in [
            Pattern::ExactDel(1),
            Pattern::BoundDel(1),
            Pattern::FiniteDel,
        ] {
            for d in [Diag::System, Diag::Trace] {
                for m in [false, true] {
                    let s = spec(p, d, m);
                    let plan = expand_pattern(&s);
                    assert_eq!(plan, expand_pattern(&s));
                    assert!(plan.has_role(Role::Correctness));
                    if d == Diag::Trace && (m || p.kind() == PatternKind::ExactDel) {
                        assert!(!plan.has_role(Role::Completeness));
                    }
                    let full = expand_full(&s);
                    assert!(full.has_role(Role::Completeness));
                    assert_eq!(full.has_role(Role::Maximality), m);
                }
            }
        }
    }

    #[test]
    fn formulas_are_instantiated() {
        let mut s = spec(Pattern::BoundDel(2), Diag::Trace, false);
        s.beta_src = "x = c".into();
        s.name = "late".into();
        let plan = expand_pattern(&s);
        assert_eq!(plan.obligations[0].formula, "G(<late> -> O<=2 (x = c))");
        assert_eq!(
            plan.obligations[1].formula,
            "G(((x = c) & F<=2 <K O<=2 (x = c)>) -> F<=2 <late>)"
        );
    }

    const TOY: &str = "var x : {a, b, c}\nevent u\nevent f\nevent o obs\nevent p obs\ninit x = a\n\
                       trans u : x = a => x' = b\ntrans f : x = a => x' = c\ntrans o : x = b\ntrans p : x = c\n";

    #[test]
    fn validation_diagnostics() {
        let m = load_model(TOY).unwrap();
        let doc = parse_spec_doc(
            "alarm A : finitedel(x = c) diag=trace\nalarm A : finitedel(x = b) diag=trace\n\
             alarm B : bounddel(y = c, 1) diag=system\nalarm C : exactdel(x = c, -1) diag=system\n\
             alarm x : finitedel(x = c) diag=trace\nalarm D : exactdel(Y x = a, 9) diag=trace maximal\n",
        )
        .unwrap();
        let v = validate_specs(&doc, &m);
        let msgs: Vec<String> = v
            .diagnostics
            .iter()
            .map(|d| format!("{} {}", d.alarm, d.message))
            .collect();
        assert!(
            msgs.iter().any(|m| m == "A duplicate alarm name"),
            "{msgs:?}"
        );
        assert!(
            msgs.iter()
                .any(|m| m.starts_with("B ") && m.contains("undeclared")),
            "{msgs:?}"
        );
        assert!(msgs.iter().any(|m| m == "C negative delay -1"), "{msgs:?}");
        assert!(
            msgs.iter()
                .any(|m| m.starts_with("x ") && m.contains("clashes")),
            "{msgs:?}"
        );
        assert!(
            msgs.iter()
                .any(|m| m == "D delay 9 exceeds the reachable diameter 1"),
            "{msgs:?}"
        );
        assert_eq!(
            v.specs.iter().map(|s| s.name.as_str()).collect::<Vec<_>>(),
            vec!["A", "D"]
        );
    }
}
