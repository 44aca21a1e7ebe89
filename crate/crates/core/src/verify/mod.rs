//! Independent checking of diagnosers against their specifications,
//! determinism checking, diagnosability analysis and validation of alarm
//! pairs.
//!
//! Every obligation is decided by explicit search over the composition of the
//! plant (extended with monitors for `τ` and `β`), the diagnoser under test
//! and, for epistemic obligations, the belief automaton of the plant. Only
//! the plant side is shared with synthesis; the diagnoser is treated as an
//! opaque transition system.

mod determinism;
mod diagnosability;
mod product;
mod quotient;
mod validation;

use serde::Serialize;
use thiserror::Error;

pub use determinism::check_determinism;
pub use diagnosability::{
    check_diagnosability, twin_plant_diagnosable, CriticalPair, DiagnosabilityReport, TwinVerdict,
};
pub use validation::{check_mutual_exclusion, check_possibility, check_subsumption};

use crate::aslk::{
    expand_pattern, obligation, tau_of, AlarmSpec, Obligation, ObligationKind, Role,
};
use crate::expr::Expr;
use crate::kernel::{reachable_graph, EventId, KernelError, Lts, State, StateGraph, TracePrefix};
use crate::pastltl::{MonitorError, Past};
use crate::synth::{attach_monitors, BeliefAutomaton, SynthError};
use product::{Beliefs, Diag, Input, Moves, Path, Product};
use quotient::Quotient;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum VerifyError {
    #[error(transparent)]
    Kernel(#[from] KernelError),
    #[error(transparent)]
    Synth(#[from] SynthError),
    #[error(transparent)]
    Monitor(#[from] MonitorError),
    #[error("diagnoser does not match the plant: {0}")]
    Interface(String),
    #[error("plant has a cycle of unobservable events through `{0}`")]
    UnobservableCycle(String),
    #[error("delay {0} is too large for bounded checks")]
    DelayTooLarge(u32),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Verdict {
    Pass,
    Fail,
    NotApplicable,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Check {
    Determinism,
    Correctness,
    Completeness,
    Maximality,
    AlarmImpliesKnowledge,
    Possibility,
    Subsumption,
    MutualExclusion,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Step {
    pub event: Option<String>,
    pub observable: bool,
    pub state: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub diagnoser: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Counterexample {
    /// Replayable run of the plant, or of the diagnoser for determinism
    /// failures.
    #[serde(skip)]
    pub trace: TracePrefix,
    /// For lassos, the position the last state loops back to.
    pub loop_start: Option<usize>,
    pub steps: Vec<Step>,
}

impl Counterexample {
    pub fn render(&self) -> String {
        let mut out = String::new();
        for (i, s) in self.steps.iter().enumerate() {
            if let Some(e) = &s.event {
                out.push_str(&format!(
                    "  -{e}{}->\n",
                    if s.observable { "" } else { " (hidden)" }
                ));
            }
            let mark = if self.loop_start == Some(i) {
                " <- loop"
            } else {
                ""
            };
            match &s.diagnoser {
                Some(d) => out.push_str(&format!("{i:>3}: {} | {d}{mark}\n", s.state)),
                None => out.push_str(&format!("{i:>3}: {}{mark}\n", s.state)),
            }
        }
        out
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct CheckResult {
    pub alarm: Option<String>,
    pub check: Check,
    pub obligation: Option<ObligationKind>,
    pub formula: Option<String>,
    pub verdict: Verdict,
    pub counterexample: Option<Counterexample>,
    pub detail: String,
}

impl CheckResult {
    pub(crate) fn new(check: Check, alarm: Option<&str>) -> CheckResult {
        CheckResult {
            alarm: alarm.map(str::to_string),
            check,
            obligation: None,
            formula: None,
            verdict: Verdict::Pass,
            counterexample: None,
            detail: String::new(),
        }
    }

    pub fn passed(&self) -> bool {
        self.verdict == Verdict::Pass
    }

    pub fn failed(&self) -> bool {
        self.verdict == Verdict::Fail
    }

    pub(crate) fn fail(
        mut self,
        detail: impl Into<String>,
        cex: Option<Counterexample>,
    ) -> CheckResult {
        self.verdict = Verdict::Fail;
        self.detail = detail.into();
        self.counterexample = cex;
        self
    }
}

#[derive(Clone, Copy, Debug)]
pub struct VerifyOptions {
    pub state_cap: u64,
    pub belief_cap: usize,
}

impl Default for VerifyOptions {
    fn default() -> VerifyOptions {
        VerifyOptions {
            state_cap: crate::kernel::DEFAULT_STATE_CAP,
            belief_cap: crate::synth::DEFAULT_BELIEF_CAP,
        }
    }
}

/// Plant extended with monitors for one specification, with `τ̄`, `β̄` and,
/// when needed, belief unanimity precomputed.
pub(crate) struct SpecSystem {
    pub plant: Lts,
    pub lts: Lts,
    pub graph: StateGraph,
    pub tau: Vec<bool>,
    pub beta: Vec<bool>,
    pub tau_expr: Expr,
    pub beliefs: Option<BeliefAutomaton>,
    /// Per belief: every member satisfies `τ̄`.
    pub known: Vec<bool>,
}

impl SpecSystem {
    pub fn new(
        plant: &Lts,
        spec: &AlarmSpec,
        epistemic: bool,
        opts: VerifyOptions,
    ) -> Result<SpecSystem, VerifyError> {
        let mut formulas = vec![(format!("{}_tau", spec.name), tau_of(spec))];
        let beta_atom = match &spec.beta {
            Past::Atom(e) => Some(e.clone()),
            _ => None,
        };
        if beta_atom.is_none() {
            formulas.push((format!("{}_beta", spec.name), spec.beta.clone()));
        }
        let (lts, _, outputs) = attach_monitors(plant, &formulas)?;
        let beta_expr: Expr = beta_atom.unwrap_or_else(|| outputs[1].clone());
        let graph = reachable_graph(&lts, opts.state_cap)?;
        let tau: Vec<bool> = graph
            .states()
            .iter()
            .map(|s| lts.holds(&outputs[0], s))
            .collect();
        let beta: Vec<bool> = graph
            .states()
            .iter()
            .map(|s| lts.holds(&beta_expr, s))
            .collect();
        let (beliefs, known) = if epistemic {
            let ba = BeliefAutomaton::build(&lts, &graph, opts.belief_cap)?;
            let known = ba
                .beliefs()
                .iter()
                .map(|b| b.iter().all(|&s| tau[s as usize]))
                .collect();
            (Some(ba), known)
        } else {
            (None, Vec::new())
        };
        Ok(SpecSystem {
            plant: plant.clone(),
            lts,
            graph,
            tau,
            beta,
            tau_expr: outputs[0].clone(),
            beliefs,
            known,
        })
    }

    pub fn observable(&self) -> Vec<bool> {
        self.lts.events.iter().map(|e| e.observable).collect()
    }

    /// Belief automaton reduced to what knowledge of `τ̄` distinguishes,
    /// with the knowledge flag per class.
    pub fn known_quotient(&self) -> Option<(Quotient, Vec<bool>)> {
        let ba = self.beliefs.as_ref()?;
        let q = Quotient::build(ba.len(), |b| ba.edges(b), |b| self.known[b as usize] as u64)?;
        let known = q.lift(|b| self.known[b as usize]);
        Some((q, known))
    }
}

/// Maps each observable plant event to the diagnoser event of the same name.
pub(crate) fn event_map(plant: &Lts, diag: &Lts) -> Result<Vec<Option<EventId>>, VerifyError> {
    let mut map = Vec::with_capacity(plant.events.len());
    for e in &plant.events {
        if !e.observable {
            if diag.event_id(&e.name).is_some() {
                return Err(VerifyError::Interface(format!(
                    "`{}` is unobservable in the plant",
                    e.name
                )));
            }
            map.push(None);
            continue;
        }
        match diag.event_id(&e.name) {
            Some(d) => map.push(Some(d)),
            None => {
                return Err(VerifyError::Interface(format!(
                    "diagnoser lacks event `{}`",
                    e.name
                )))
            }
        }
    }
    for e in &diag.events {
        if plant.event_id(&e.name).is_none() {
            return Err(VerifyError::Interface(format!(
                "plant lacks event `{}`",
                e.name
            )));
        }
    }
    Ok(map)
}

/// Index of boolean variable `name` in the diagnoser.
pub(crate) fn alarm_var(diag: &Lts, name: &str) -> Result<u32, VerifyError> {
    let v = diag
        .var_id(name)
        .ok_or_else(|| VerifyError::Interface(format!("diagnoser has no alarm `{name}`")))?;
    if diag.vars[v as usize].domain != crate::expr::Domain::Bool {
        return Err(VerifyError::Interface(format!(
            "alarm `{name}` is not boolean"
        )));
    }
    Ok(v)
}

pub(crate) struct DiagSide {
    pub lts: Lts,
    pub graph: StateGraph,
    pub events: Vec<Option<EventId>>,
    /// When set, products run on this quotient and node ids are classes.
    pub reduced: Option<Quotient>,
}

impl DiagSide {
    pub fn new(plant: &Lts, diag: &Lts, cap: u64) -> Result<DiagSide, VerifyError> {
        let events = event_map(plant, diag)?;
        let graph = reachable_graph(diag, cap)?;
        Ok(DiagSide {
            lts: diag.clone(),
            graph,
            events,
            reduced: None,
        })
    }

    /// Switches to the quotient that only keeps the given variables
    /// observable. Has no effect on a nondeterministic diagnoser.
    pub fn reduce(&mut self, vars: &[u32]) {
        if self.graph.init.len() != 1 {
            return;
        }
        let g = &self.graph;
        let out = |s: u32| {
            vars.iter()
                .fold(0u64, |acc, &v| acc * 64 + g.state(s)[v as usize] as u64)
        };
        self.reduced = Quotient::build(g.len(), |s| g.edges(s), out);
    }

    /// Per product-side id (state or class), a function of the state.
    pub fn values<T: Clone + Default>(&self, f: impl Fn(&State) -> T) -> Vec<T> {
        match &self.reduced {
            Some(q) => q.lift(|s| f(self.graph.state(s))),
            None => self.graph.states().iter().map(f).collect(),
        }
    }

    /// Diagnoser states along a path of plant events; the diagnoser must be
    /// deterministic along it.
    pub fn replay(&self, events: &[EventId]) -> Vec<u32> {
        let mut d = self.graph.init[0];
        let mut out = vec![d];
        for &e in events {
            if let Some(de) = self.events[e as usize] {
                d = self
                    .graph
                    .successors(d, de)
                    .next()
                    .expect("path follows diagnoser edges");
            }
            out.push(d);
        }
        out
    }

    /// Alarm value per product-side id.
    pub fn alarm_values(&self, name: &str) -> Result<Vec<bool>, VerifyError> {
        let v = alarm_var(&self.lts, name)? as usize;
        Ok(self.values(|s| s[v] == 1))
    }

    pub(crate) fn as_input(&self) -> Diag<'_> {
        let moves = match &self.reduced {
            Some(q) => Moves::Quotient {
                q,
                init: q.class[self.graph.init[0] as usize],
            },
            None => Moves::Graph(&self.graph),
        };
        Diag {
            moves,
            events: &self.events,
        }
    }
}

/// Converts a product path to a plant counterexample.
pub(crate) fn counterexample(
    sys: &SpecSystem,
    diag: Option<&DiagSide>,
    prod: &Product,
    path: &Path,
) -> Counterexample {
    path_counterexample(&sys.plant, &sys.lts, &sys.graph, diag, prod, path)
}

/// As [`counterexample`], for a product over `graph`, a reachable graph of
/// `lts`, whose first variables are those of `plant`.
pub(crate) fn path_counterexample(
    plant: &Lts,
    lts: &Lts,
    graph: &StateGraph,
    diag: Option<&DiagSide>,
    prod: &Product,
    path: &Path,
) -> Counterexample {
    let nv = plant.vars.len();
    let node = |i: usize| prod.nodes[path.nodes[i] as usize];
    let state = |i: usize| State::from(&graph.state(node(i).p)[..nv]);
    let mut trace = TracePrefix::new(state(0));
    for (i, &e) in path.events.iter().enumerate() {
        trace.push(e, state(i + 1));
    }
    let dstates: Option<Vec<u32>> = diag.map(|d| match d.reduced {
        Some(_) => d.replay(&path.events),
        None => (0..path.nodes.len()).map(|i| node(i).d).collect(),
    });
    let steps = (0..path.nodes.len())
        .map(|i| {
            let n = node(i);
            Step {
                event: (i > 0).then(|| lts.event_name(path.events[i - 1]).to_string()),
                observable: n.obs,
                state: plant.format_state(&trace.states[i]),
                diagnoser: diag
                    .zip(dstates.as_ref())
                    .map(|(d, ds)| d.lts.format_state(d.graph.state(ds[i]))),
            }
        })
        .collect();
    Counterexample {
        trace,
        loop_start: path.loop_start,
        steps,
    }
}

/// Position predicates an obligation is evaluated against.
pub(crate) struct Signals<'a> {
    pub alarm: &'a dyn Fn(u32) -> bool,
    pub beta: &'a dyn Fn(u32) -> bool,
    pub tau: &'a dyn Fn(u32) -> bool,
    pub known: &'a dyn Fn(u32) -> bool,
}

const NONE: u64 = u64::MAX;
/// Widest window the bitmask automaton supports.
const MAX_MASK_DELAY: u32 = 54;

/// Nearest violation of `kind`, as a path (a lasso for liveness).
pub(crate) fn violation(
    prod: &Product,
    kind: ObligationKind,
    s: &Signals,
    cap: u64,
) -> Result<Option<Path>, VerifyError> {
    use ObligationKind::*;
    Ok(match kind {
        SafetyPast => prod.find(|n| (s.alarm)(n) && !(s.tau)(n)),
        EpistemicSafety | EpistemicExactResponse(_) => prod.find(|n| (s.known)(n) && !(s.alarm)(n)),
        ExactResponse(_) => prod.find(|n| (s.tau)(n) && !(s.alarm)(n)),
        BoundedResponse(d) => {
            let d = d as u64;
            // Age of the oldest unanswered obligation.
            let at = |n: u32, age: u64| {
                let age = if age == NONE && (s.beta)(n) { 0 } else { age };
                if (s.alarm)(n) {
                    Some(NONE)
                } else if age == d {
                    None
                } else {
                    Some(age)
                }
            };
            prod.aux_safety(NONE, at, |a| if a == NONE { NONE } else { a + 1 }, cap)?
        }
        Response => {
            let at = |n: u32, pending: u64| ((pending == 1 || (s.beta)(n)) && !(s.alarm)(n)) as u64;
            prod.aux_lasso(0, at, |p| p == 1, cap)?
        }
        EpistemicBoundedResponse(d) => {
            if d > MAX_MASK_DELAY {
                return Err(VerifyError::DelayTooLarge(d));
            }
            // Low bits: ages of obligations not yet followed by knowledge.
            // Top byte: one plus the age of the oldest obligation that was.
            let width = d + 1;
            let mask_of = |a: u64| a & ((1u64 << width) - 1);
            let seen_of = |a: u64| (a >> 56) as u32;
            let pack = |mask: u64, seen: u32| mask | ((seen as u64) << 56);
            let at = |n: u32, a: u64| {
                let (mut mask, mut seen) = (mask_of(a), seen_of(a));
                if (s.beta)(n) {
                    mask |= 1;
                }
                if (s.known)(n) {
                    if seen == 0 && mask != 0 {
                        seen = 64 - mask.leading_zeros();
                    }
                    mask = 0;
                }
                if (s.alarm)(n) {
                    return Some(0);
                }
                if seen == width {
                    return None;
                }
                Some(pack(mask, seen))
            };
            let advance = |a: u64| {
                let seen = seen_of(a);
                pack(
                    mask_of(mask_of(a) << 1),
                    if seen == 0 { 0 } else { seen + 1 },
                )
            };
            prod.aux_safety(0, at, advance, cap)?
        }
        EpistemicResponse => {
            let at = |n: u32, phase: u64| {
                let mut phase = phase;
                if (s.beta)(n) {
                    phase = phase.max(1);
                }
                if (s.known)(n) && phase >= 1 {
                    phase = 2;
                }
                if (s.alarm)(n) {
                    phase = 0;
                }
                phase
            };
            prod.aux_lasso(0, at, |p| p == 2, cap)?
        }
    })
}

fn check_of(role: Role) -> Check {
    match role {
        Role::Correctness => Check::Correctness,
        Role::Completeness => Check::Completeness,
        Role::Maximality => Check::Maximality,
    }
}

/// Composition of a diagnoser and a plant for one specification.
pub struct SpecCheck {
    spec: AlarmSpec,
    sys: SpecSystem,
    diag: DiagSide,
    prod: Product,
    alarm: Vec<bool>,
    /// Knowledge per belief class of the product.
    known: Vec<bool>,
    cap: u64,
}

impl SpecCheck {
    pub fn new(
        plant: &Lts,
        diag: &Lts,
        spec: &AlarmSpec,
        opts: VerifyOptions,
    ) -> Result<SpecCheck, VerifyError> {
        let sys = SpecSystem::new(plant, spec, true, opts)?;
        let mut dside = DiagSide::new(plant, diag, opts.state_cap)?;
        dside.reduce(&[alarm_var(diag, &spec.name)?]);
        let alarm = dside.alarm_values(&spec.name)?;
        let observable = sys.observable();
        let (bq, known) = sys.known_quotient().expect("epistemic system has beliefs");
        let prod = Product::build(&Input {
            plant: &sys.graph,
            observable: &observable,
            diag: Some(dside.as_input()),
            beliefs: Some(Beliefs::Quotient(&bq)),
            keep: None,
            cap: opts.state_cap,
        })?;
        Ok(SpecCheck {
            spec: spec.clone(),
            sys,
            diag: dside,
            prod,
            alarm,
            known,
            cap: opts.state_cap,
        })
    }

    pub fn product_size(&self) -> usize {
        self.prod.len()
    }

    fn run(&self, kind: ObligationKind) -> Result<Option<Path>, VerifyError> {
        let nodes = &self.prod.nodes;
        let alarm = |n: u32| {
            let x = nodes[n as usize];
            x.obs && self.alarm[x.d as usize]
        };
        let beta = |n: u32| self.sys.beta[nodes[n as usize].p as usize];
        let tau = |n: u32| self.sys.tau[nodes[n as usize].p as usize];
        let known = |n: u32| {
            let x = nodes[n as usize];
            x.obs && self.known[x.b as usize]
        };
        violation(
            &self.prod,
            kind,
            &Signals {
                alarm: &alarm,
                beta: &beta,
                tau: &tau,
                known: &known,
            },
            self.cap,
        )
    }

    pub fn check(&self, ob: &Obligation) -> Result<CheckResult, VerifyError> {
        let mut r = CheckResult::new(check_of(ob.role), Some(&self.spec.name));
        r.obligation = Some(ob.kind);
        r.formula = Some(ob.formula.clone());
        Ok(match self.run(ob.kind)? {
            None => r,
            Some(path) => {
                let cex = counterexample(&self.sys, Some(&self.diag), &self.prod, &path);
                let what = if path.loop_start.is_some() {
                    "lasso"
                } else {
                    "position"
                };
                r.fail(
                    format!("violated at {what} {}", path.nodes.len() - 1),
                    Some(cex),
                )
            }
        })
    }

    pub fn check_kind(&self, kind: ObligationKind) -> Result<CheckResult, VerifyError> {
        self.check(&obligation(&self.spec, kind))
    }

    /// Every alarm raised at an observation point is backed by knowledge.
    /// Only meaningful for a correct diagnoser.
    pub fn alarm_implies_knowledge(&self) -> Result<CheckResult, VerifyError> {
        let mut r = CheckResult::new(Check::AlarmImpliesKnowledge, Some(&self.spec.name));
        if self.run(ObligationKind::SafetyPast)?.is_some() {
            r.verdict = Verdict::NotApplicable;
            r.detail = "diagnoser is not correct".into();
            return Ok(r);
        }
        let nodes = &self.prod.nodes;
        let path = self.prod.find(|n| {
            let x = nodes[n as usize];
            x.obs && self.alarm[x.d as usize] && !self.known[x.b as usize]
        });
        Ok(match path {
            None => r,
            Some(p) => {
                let cex = counterexample(&self.sys, Some(&self.diag), &self.prod, &p);
                r.fail(
                    format!("alarm without knowledge at position {}", p.nodes.len() - 1),
                    Some(cex),
                )
            }
        })
    }

    /// Observation points where the belief states reached by the product
    /// differ from membership of the plant state; empty by construction.
    pub fn belief_inclusion_violations(&self) -> Result<usize, VerifyError> {
        let Some(ba) = &self.sys.beliefs else {
            return Ok(0);
        };
        let observable = self.sys.observable();
        let prod = Product::build(&Input {
            plant: &self.sys.graph,
            observable: &observable,
            diag: None,
            beliefs: Some(Beliefs::Full(ba)),
            keep: None,
            cap: self.cap,
        })?;
        Ok(prod
            .nodes
            .iter()
            .filter(|n| n.obs && ba.belief(n.b).binary_search(&n.p).is_err())
            .count())
    }
}

pub fn check_correctness(
    plant: &Lts,
    diag: &Lts,
    spec: &AlarmSpec,
    opts: VerifyOptions,
) -> Result<CheckResult, VerifyError> {
    SpecCheck::new(plant, diag, spec, opts)?.check_kind(ObligationKind::SafetyPast)
}

pub fn check_maximality(
    plant: &Lts,
    diag: &Lts,
    spec: &AlarmSpec,
    opts: VerifyOptions,
) -> Result<CheckResult, VerifyError> {
    SpecCheck::new(plant, diag, spec, opts)?.check_kind(ObligationKind::EpistemicSafety)
}

pub fn check_completeness(
    plant: &Lts,
    diag: &Lts,
    spec: &AlarmSpec,
    kind: ObligationKind,
    opts: VerifyOptions,
) -> Result<CheckResult, VerifyError> {
    SpecCheck::new(plant, diag, spec, opts)?.check_kind(kind)
}

pub fn check_alarm_implies_knowledge(
    plant: &Lts,
    diag: &Lts,
    spec: &AlarmSpec,
    opts: VerifyOptions,
) -> Result<CheckResult, VerifyError> {
    SpecCheck::new(plant, diag, spec, opts)?.alarm_implies_knowledge()
}

/// The obligations of the spec's check plan followed by the
/// alarm-implies-knowledge check.
pub fn verify_spec(
    plant: &Lts,
    diag: &Lts,
    spec: &AlarmSpec,
    opts: VerifyOptions,
) -> Result<Vec<CheckResult>, VerifyError> {
    let sc = SpecCheck::new(plant, diag, spec, opts)?;
    let mut out = Vec::new();
    for ob in &expand_pattern(spec).obligations {
        out.push(sc.check(ob)?);
    }
    out.push(sc.alarm_implies_knowledge()?);
    Ok(out)
}

#[derive(Clone, Debug, Serialize)]
pub struct Verification {
    pub determinism: CheckResult,
    pub results: Vec<CheckResult>,
}

impl Verification {
    pub fn passed(&self) -> bool {
        self.determinism.passed() && self.results.iter().all(|r| r.verdict != Verdict::Fail)
    }
}

/// Determinism first; the per-spec checks only run on a deterministic
/// diagnoser.
pub fn verify_all(
    plant: &Lts,
    diag: &Lts,
    specs: &[AlarmSpec],
    opts: VerifyOptions,
) -> Result<Verification, VerifyError> {
    let determinism = check_determinism(diag, Some(plant), opts.state_cap)?;
    let mut results = Vec::new();
    if determinism.passed() {
        for s in specs {
            results.extend(verify_spec(plant, diag, s, opts)?);
        }
    }
    Ok(Verification {
        determinism,
        results,
    })
}
