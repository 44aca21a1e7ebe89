//! Diagnoser synthesis by belief-state construction.
//!
//! The plant is composed with one monitor per alarm so every certified
//! formula becomes a state predicate `τ̄`. Beliefs are sets of monitored
//! states consistent with the observations so far; the belief automaton is
//! built by alternating unobservable closure and observable images, and
//! each belief is annotated with a three-valued alarm per specification.

mod belief;
mod emit;

use rustc_hash::FxHashMap;
use thiserror::Error;

pub use belief::{BeliefAutomaton, BeliefStats, DEFAULT_BELIEF_CAP};
pub use emit::{diagnoser_dot, emit_diagnoser, emit_diagnoser_doc, BELIEF_VAR};

use crate::aslk::{tau_of, AlarmSpec};
use crate::expr::Expr;
use crate::kernel::{reachable_graph, KernelError, Lts, State, StateGraph, TracePrefix};
use crate::pastltl::{compile_monitor, Monitor, MonitorError};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SynthError {
    #[error(transparent)]
    Kernel(#[from] KernelError),
    #[error(transparent)]
    Monitor(#[from] MonitorError),
    #[error("belief automaton exceeds the cap of {cap} beliefs")]
    BeliefCapExceeded { cap: usize },
    #[error("diagnoser has no edge for `{event}` at position {position}")]
    NoMatchingEdge { position: usize, event: String },
    #[error("diagnoser is not deterministic: {0}")]
    Nondeterministic(String),
}

/// Plant composed with one monitor per alarm.
#[derive(Clone, Debug)]
pub struct MonitoredPlant {
    pub plant: Lts,
    pub lts: Lts,
    pub specs: Vec<AlarmSpec>,
    pub monitors: Vec<Monitor>,
    /// `τ̄` of each spec as a predicate over monitored states.
    pub outputs: Vec<Expr>,
    pub graph: StateGraph,
}

impl MonitoredPlant {
    /// Restriction of a monitored state to the plant variables.
    pub fn project<'a>(&self, s: &'a [u32]) -> &'a [u32] {
        &s[..self.plant.vars.len()]
    }

    pub fn project_trace(&self, t: &TracePrefix) -> TracePrefix {
        TracePrefix {
            states: t
                .states
                .iter()
                .map(|s| State::from(self.project(s)))
                .collect(),
            events: t.events.clone(),
        }
    }
}

/// Monitors `formulas` on `plant`, one group of bits per formula. Returns the
/// composed system, the monitors and their output predicates.
pub fn attach_monitors(
    plant: &Lts,
    formulas: &[(String, crate::pastltl::Past<Expr>)],
) -> Result<(Lts, Vec<Monitor>, Vec<Expr>), SynthError> {
    let mut lts = plant.clone();
    let mut monitors = Vec::new();
    let mut outputs = Vec::new();
    for (tag, f) in formulas {
        let m = compile_monitor(f, &lts, tag, false)?;
        lts = m.attach(&lts)?;
        outputs.push(m.output_expr());
        monitors.push(m);
    }
    Ok((lts, monitors, outputs))
}

pub fn build_monitored_plant(
    plant: &Lts,
    specs: &[AlarmSpec],
    cap: u64,
) -> Result<MonitoredPlant, SynthError> {
    let formulas: Vec<_> = specs.iter().map(|s| (s.name.clone(), tau_of(s))).collect();
    let (lts, monitors, outputs) = attach_monitors(plant, &formulas)?;
    let graph = reachable_graph(&lts, cap)?;
    Ok(MonitoredPlant {
        plant: plant.clone(),
        lts,
        specs: specs.to_vec(),
        monitors,
        outputs,
        graph,
    })
}

/// States reachable from `b` by unobservable transitions, `b` included.
pub fn u_closure(mp: &MonitoredPlant, b: &[u32]) -> Vec<u32> {
    belief::Explorer::new(&mp.lts, &mp.graph).closure(b)
}

/// Image of the closure of `b` under observable event `e`; empty when `e`
/// cannot occur.
pub fn belief_successor(mp: &MonitoredPlant, b: &[u32], e: crate::kernel::EventId) -> Vec<u32> {
    let x = belief::Explorer::new(&mp.lts, &mp.graph);
    x.image(&x.closure(b), e)
}

pub fn build_belief_automaton(
    mp: &MonitoredPlant,
    cap: usize,
) -> Result<BeliefAutomaton, SynthError> {
    BeliefAutomaton::build(&mp.lts, &mp.graph, cap)
}

/// Three-valued alarm: `pos` when every member satisfies `τ̄`, `neg` when
/// none does.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct AlarmValue {
    pub pos: bool,
    pub neg: bool,
}

#[derive(Clone, Debug)]
pub struct Diagnoser {
    pub name: String,
    pub automaton: BeliefAutomaton,
    pub alarms: Vec<String>,
    /// Per belief, per alarm.
    pub labels: Vec<Vec<AlarmValue>>,
    /// Names of the plant's observable events, in plant order.
    pub events: Vec<String>,
    /// Plant event names indexed by plant event id.
    pub plant_events: Vec<String>,
}

impl Diagnoser {
    pub fn len(&self) -> usize {
        self.automaton.len()
    }

    pub fn is_empty(&self) -> bool {
        self.automaton.len() == 0
    }

    pub fn label(&self, belief: u32, alarm: &str) -> Option<AlarmValue> {
        let k = self.alarms.iter().position(|a| a == alarm)?;
        Some(self.labels[belief as usize][k])
    }
}

pub fn annotate(mp: &MonitoredPlant, ba: BeliefAutomaton) -> Diagnoser {
    let labels = (0..ba.len() as u32)
        .map(|b| {
            mp.outputs
                .iter()
                .map(|tau| {
                    let mut vals = ba
                        .belief(b)
                        .iter()
                        .map(|&s| mp.lts.holds(tau, mp.graph.state(s)));
                    let first = vals.next().expect("beliefs are non-empty");
                    let mut pos = first;
                    let mut neg = !first;
                    for v in vals {
                        pos &= v;
                        neg &= !v;
                    }
                    AlarmValue { pos, neg }
                })
                .collect()
        })
        .collect();
    let plant = &mp.plant;
    Diagnoser {
        name: if plant.name.is_empty() {
            "diagnoser".into()
        } else {
            format!("{}_diagnoser", plant.name)
        },
        automaton: ba,
        alarms: mp.specs.iter().map(|s| s.name.clone()).collect(),
        labels,
        events: plant
            .observable_events()
            .map(|e| plant.event_name(e).to_string())
            .collect(),
        plant_events: plant.events.iter().map(|e| e.name.clone()).collect(),
    }
}

#[derive(Clone, Copy, Debug)]
pub struct SynthOptions {
    pub state_cap: u64,
    pub belief_cap: usize,
}

impl Default for SynthOptions {
    fn default() -> SynthOptions {
        SynthOptions {
            state_cap: crate::kernel::DEFAULT_STATE_CAP,
            belief_cap: DEFAULT_BELIEF_CAP,
        }
    }
}

#[derive(Clone, Debug)]
pub struct Synthesis {
    pub monitored: MonitoredPlant,
    pub diagnoser: Diagnoser,
}

pub fn synthesize(
    plant: &Lts,
    specs: &[AlarmSpec],
    opts: SynthOptions,
) -> Result<Synthesis, SynthError> {
    let mp = build_monitored_plant(plant, specs, opts.state_cap)?;
    let ba = build_belief_automaton(&mp, opts.belief_cap)?;
    let diagnoser = annotate(&mp, ba);
    Ok(Synthesis {
        monitored: mp,
        diagnoser,
    })
}

/// Runs a deterministic diagnoser along the observations of a plant trace.
/// The result has one diagnoser state per observable event of `trace`, plus
/// the initial one.
pub fn match_trace(
    diag: &Lts,
    plant: &Lts,
    trace: &TracePrefix,
) -> Result<TracePrefix, SynthError> {
    let init = diag.initial_states(2)?;
    if init.len() != 1 {
        return Err(SynthError::Nondeterministic(format!(
            "{} initial states",
            init.len()
        )));
    }
    let mut map: FxHashMap<u32, u32> = FxHashMap::default();
    let mut out = TracePrefix::new(init[0].clone());
    for (pos, &e) in trace.events.iter().enumerate() {
        if !plant.is_observable(e) {
            continue;
        }
        let name = plant.event_name(e);
        let de = match map.get(&e) {
            Some(&d) => d,
            None => {
                let d = diag
                    .event_id(name)
                    .ok_or_else(|| SynthError::NoMatchingEdge {
                        position: pos,
                        event: name.to_string(),
                    })?;
                map.insert(e, d);
                d
            }
        };
        let succ = diag.step(out.last(), de)?;
        match succ.len() {
            0 => {
                return Err(SynthError::NoMatchingEdge {
                    position: pos,
                    event: name.to_string(),
                })
            }
            1 => out.push(de, succ.into_iter().next().unwrap()),
            n => {
                return Err(SynthError::Nondeterministic(format!(
                    "{n} successors on `{name}` at position {pos}"
                )))
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use crate::aslk::{Diag, Pattern};
    use crate::expr::Value;
    use crate::kernel::tests::toy1;
    use crate::pastltl::Past;
    use crate::symbol::Symbol;

    pub(crate) fn x_is(s: &str) -> Expr {
        Expr::eq(Expr::Var(0), Expr::Const(Value::Sym(Symbol::intern(s))))
    }

    pub(crate) fn toy_spec() -> AlarmSpec {
        AlarmSpec::new(
            "A_f",
            Pattern::FiniteDel,
            Past::Atom(x_is("c")),
            Diag::Trace,
            true,
        )
    }

    fn names(mp: &MonitoredPlant, b: &[u32]) -> Vec<String> {
        b.iter()
            .map(|&s| mp.lts.format_state(mp.graph.state(s)))
            .collect()
    }

    #[test]
    fn toy_monitored_plant() {
        let mp = build_monitored_plant(&toy1(), &[toy_spec()], 1 << 10).unwrap();
        assert_eq!(mp.lts.vars.len(), 2);
        assert_eq!(mp.graph.len(), 3);
        let two =
            build_monitored_plant(&toy1(), &[toy_spec(), toy_spec_named("B")], 1 << 10).unwrap();
        assert_eq!(two.monitors.len(), 2);
        assert_ne!(two.monitors[0].bits[0].name, two.monitors[1].bits[0].name);
    }

    fn toy_spec_named(n: &str) -> AlarmSpec {
        AlarmSpec {
            name: n.into(),
            ..toy_spec()
        }
    }

    #[test]
    fn toy_closure_and_images() {
        let mp = build_monitored_plant(&toy1(), &[toy_spec()], 1 << 10).unwrap();
        let b0 = mp.graph.init.clone();
        let c = u_closure(&mp, &b0);
        assert_eq!(
            names(&mp, &c),
            vec![
                "x=a, __m_A_f_0=false",
                "x=b, __m_A_f_0=false",
                "x=c, __m_A_f_0=true"
            ]
        );
        let o = mp.lts.event_id("o").unwrap();
        let p = mp.lts.event_id("p").unwrap();
        assert_eq!(
            names(&mp, &belief_successor(&mp, &b0, o)),
            vec!["x=b, __m_A_f_0=false"]
        );
        assert_eq!(
            names(&mp, &belief_successor(&mp, &b0, p)),
            vec!["x=c, __m_A_f_0=true"]
        );
        let b = belief_successor(&mp, &b0, o);
        assert!(belief_successor(&mp, &b, p).is_empty());
    }

    #[test]
    fn toy_diagnoser() {
        let s = synthesize(&toy1(), &[toy_spec()], SynthOptions::default()).unwrap();
        let d = &s.diagnoser;
        assert_eq!(d.len(), 3);
        assert_eq!(d.automaton.edge_count(), 4);
        assert_eq!(
            d.labels[0][0],
            AlarmValue {
                pos: false,
                neg: true
            }
        );
        let p = s.monitored.lts.event_id("p").unwrap();
        let o = s.monitored.lts.event_id("o").unwrap();
        let bc = d.automaton.successor(0, p).unwrap();
        let bb = d.automaton.successor(0, o).unwrap();
        assert_eq!(
            d.labels[bc as usize][0],
            AlarmValue {
                pos: true,
                neg: false
            }
        );
        assert_eq!(
            d.labels[bb as usize][0],
            AlarmValue {
                pos: false,
                neg: true
            }
        );
        assert_eq!(d.automaton.successor(bc, p), Some(bc));
        assert_eq!(d.automaton.successor(bb, o), Some(bb));
    }

    #[test]
    fn matching_traces() {
        let l = toy1();
        let s = synthesize(&l, &[toy_spec()], SynthOptions::default()).unwrap();
        let dl = emit_diagnoser(&s.diagnoser).unwrap().lts;
        let mut t = TracePrefix::new(l.initial_states(4).unwrap().remove(0));
        let m = match_trace(&dl, &l, &t).unwrap();
        assert_eq!(m.len(), 0);
        t.push(
            l.event_id("f").unwrap(),
            l.successors(t.last(), "f").unwrap().remove(0),
        );
        assert_eq!(match_trace(&dl, &l, &t).unwrap().len(), 0);
        t.push(l.event_id("p").unwrap(), t.last().clone());
        let m = match_trace(&dl, &l, &t).unwrap();
        assert_eq!(
            dl.format_state(m.last()),
            "__belief=b2, A_f=true, A_f_neg=false"
        );
    }

    #[test]
    fn fully_observable_plant_has_singleton_beliefs() {
        let l = toy1().with_observability(|_| true);
        let s = synthesize(&l, &[toy_spec()], SynthOptions::default()).unwrap();
        assert_eq!(s.diagnoser.len(), s.monitored.graph.len());
        assert!(s.diagnoser.automaton.beliefs().iter().all(|b| b.len() == 1));
    }
}
