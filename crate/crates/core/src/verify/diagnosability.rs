//! Diagnosability of a specification in a plant, by belief composition and
//! by the twin-plant construction.

use std::collections::VecDeque;

use petgraph::algo::tarjan_scc;
use petgraph::graph::DiGraph;
use rustc_hash::FxHashMap;
use serde::Serialize;

use super::product::{Beliefs, Input, Path, Product};
use super::{
    counterexample, violation, Counterexample, Signals, SpecSystem, VerifyError, VerifyOptions,
};
use crate::aslk::{AlarmSpec, ObligationKind, Pattern};
use crate::epistemic::find_trace_with_obs;
use crate::expr::Expr;
use crate::kernel::{reachable_graph, EventId, Lts, State, TracePrefix};

/// Two runs with the same observations, one satisfying the condition and
/// one not.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct CriticalPair {
    #[serde(skip)]
    pub faulty: TracePrefix,
    #[serde(skip)]
    pub nominal: TracePrefix,
    pub faulty_run: String,
    pub nominal_run: String,
}

impl CriticalPair {
    fn new(plant: &Lts, faulty: TracePrefix, nominal: TracePrefix) -> CriticalPair {
        CriticalPair {
            faulty_run: faulty.render(plant),
            nominal_run: nominal.render(plant),
            faulty,
            nominal,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct DiagnosabilityReport {
    pub alarm: String,
    pub pattern: String,
    /// Diagnosable along every run.
    pub system: bool,
    /// Diagnosable along at least one run.
    pub trace: bool,
    /// Run on which the condition is not diagnosed in time.
    pub violation: Option<Counterexample>,
    /// Run ending at a point where the condition is known.
    pub witness: Option<Counterexample>,
    pub critical_pair: Option<CriticalPair>,
}

fn system_kind(p: Pattern) -> ObligationKind {
    match p {
        Pattern::ExactDel(d) => ObligationKind::ExactResponse(d),
        Pattern::BoundDel(d) => ObligationKind::BoundedResponse(d),
        Pattern::FiniteDel => ObligationKind::Response,
    }
}

/// Decides whether knowledge of `τ` always arrives in time after `β`
/// (system level) and whether it ever does (trace level).
pub fn check_diagnosability(
    plant: &Lts,
    spec: &AlarmSpec,
    opts: VerifyOptions,
) -> Result<DiagnosabilityReport, VerifyError> {
    let sys = SpecSystem::new(plant, spec, true, opts)?;
    let observable = sys.observable();
    let (bq, known_q) = sys.known_quotient().expect("epistemic system has beliefs");
    let prod = Product::build(&Input {
        plant: &sys.graph,
        observable: &observable,
        diag: None,
        beliefs: Some(Beliefs::Quotient(&bq)),
        keep: None,
        cap: opts.state_cap,
    })?;
    let nodes = &prod.nodes;
    let known = |n: u32| {
        let x = nodes[n as usize];
        x.obs && known_q[x.b as usize]
    };
    let beta = |n: u32| sys.beta[nodes[n as usize].p as usize];
    let tau = |n: u32| sys.tau[nodes[n as usize].p as usize];
    let signals = Signals {
        alarm: &known,
        beta: &beta,
        tau: &tau,
        known: &known,
    };
    let bad = violation(&prod, system_kind(spec.pattern), &signals, opts.state_cap)?;
    let witness = prod.find(known);
    let critical_pair = match &bad {
        Some(path) => critical_pair(&sys, &prod, path, opts.state_cap)?,
        None => None,
    };
    Ok(DiagnosabilityReport {
        alarm: spec.name.clone(),
        pattern: spec.pattern.to_string(),
        system: bad.is_none(),
        trace: witness.is_some(),
        violation: bad.as_ref().map(|p| counterexample(&sys, None, &prod, p)),
        witness: witness
            .as_ref()
            .map(|p| counterexample(&sys, None, &prod, p)),
        critical_pair,
    })
}

/// Latest point of `path` where `τ̄` holds but an observationally equivalent
/// point violates it, paired with a run reaching that point.
fn critical_pair(
    sys: &SpecSystem,
    prod: &Product,
    path: &Path,
    cap: u64,
) -> Result<Option<CriticalPair>, VerifyError> {
    let not_tau = Expr::not(sys.tau_expr.clone());
    let states: Vec<State> = path
        .nodes
        .iter()
        .map(|&n| sys.graph.state(prod.nodes[n as usize].p).clone())
        .collect();
    for j in (0..path.nodes.len()).rev() {
        let n = prod.nodes[path.nodes[j] as usize];
        if !sys.tau[n.p as usize] {
            continue;
        }
        let obs: Vec<EventId> = path.events[..j]
            .iter()
            .copied()
            .filter(|&e| sys.lts.is_observable(e))
            .collect();
        if let Some(other) = find_trace_with_obs(&sys.lts, &obs, n.obs, &not_tau, cap)? {
            let mut faulty = TracePrefix::new(states[0].clone());
            for i in 0..j {
                faulty.push(path.events[i], states[i + 1].clone());
            }
            let nv = sys.plant.vars.len();
            let project = |t: &TracePrefix| TracePrefix {
                states: t.states.iter().map(|s| State::from(&s[..nv])).collect(),
                events: t.events.clone(),
            };
            return Ok(Some(CriticalPair::new(
                &sys.plant,
                project(&faulty),
                project(&other),
            )));
        }
    }
    Ok(None)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub enum TwinVerdict {
    Diagnosable,
    NotDiagnosable(CriticalPair),
}

impl TwinVerdict {
    pub fn is_diagnosable(&self) -> bool {
        matches!(self, TwinVerdict::Diagnosable)
    }
}

/// Twin-plant check that every run on which `p` has held is eventually told
/// apart from every run on which it never has. Requires a plant without
/// cycles of unobservable events.
pub fn twin_plant_diagnosable(plant: &Lts, p: &Expr, cap: u64) -> Result<TwinVerdict, VerifyError> {
    let g = reachable_graph(plant, cap)?;
    if let Some(e) = unobservable_cycle(plant, &g) {
        return Err(VerifyError::UnobservableCycle(
            plant.event_name(e).to_string(),
        ));
    }
    let holds: Vec<bool> = g.states().iter().map(|s| plant.holds(p, s)).collect();
    type Twin = (u32, bool, u32, bool);
    let mut index: FxHashMap<Twin, u32> = FxHashMap::default();
    let mut twins: Vec<Twin> = Vec::new();
    // Per twin edge: event, target and which sides moved.
    let mut succ: Vec<Vec<(EventId, u32, u8)>> = Vec::new();
    let mut parent: Vec<Option<(u32, EventId, u8)>> = Vec::new();
    let mut queue = VecDeque::new();
    let mut intern = |t: Twin,
                      par: Option<(u32, EventId, u8)>,
                      twins: &mut Vec<Twin>,
                      succ: &mut Vec<_>,
                      parent: &mut Vec<_>,
                      queue: &mut VecDeque<u32>| {
        if let Some(&id) = index.get(&t) {
            return Ok(id);
        }
        if twins.len() as u64 >= cap {
            return Err(VerifyError::Kernel(
                crate::kernel::KernelError::CapExceeded {
                    what: "twin states",
                    cap,
                },
            ));
        }
        let id = twins.len() as u32;
        index.insert(t, id);
        twins.push(t);
        succ.push(Vec::new());
        parent.push(par);
        queue.push_back(id);
        Ok(id)
    };
    for &a in &g.init {
        for &b in &g.init {
            intern(
                (a, holds[a as usize], b, holds[b as usize]),
                None,
                &mut twins,
                &mut succ,
                &mut parent,
                &mut queue,
            )?;
        }
    }
    while let Some(id) = queue.pop_front() {
        let (s1, f1, s2, f2) = twins[id as usize];
        let mut out = Vec::new();
        for &(e, t) in g.edges(s1) {
            if !plant.is_observable(e) {
                out.push((e, (t, f1 || holds[t as usize], s2, f2), 1u8));
            } else {
                for t2 in g.successors(s2, e) {
                    out.push((
                        e,
                        (t, f1 || holds[t as usize], t2, f2 || holds[t2 as usize]),
                        3u8,
                    ));
                }
            }
        }
        for &(e, t) in g.edges(s2) {
            if !plant.is_observable(e) {
                out.push((e, (s1, f1, t, f2 || holds[t as usize]), 2u8));
            }
        }
        for (e, tw, side) in out {
            let t = intern(
                tw,
                Some((id, e, side)),
                &mut twins,
                &mut succ,
                &mut parent,
                &mut queue,
            )?;
            succ[id as usize].push((e, t, side));
        }
    }
    let split = |k: usize| twins[k].1 != twins[k].3;
    let mut dg: DiGraph<(), ()> = DiGraph::with_capacity(twins.len(), 0);
    for _ in 0..twins.len() {
        dg.add_node(());
    }
    for (k, out) in succ.iter().enumerate() {
        for &(_, t, _) in out {
            if split(k) && split(t as usize) {
                dg.add_edge((k as u32).into(), t.into(), ());
            }
        }
    }
    let mut comp = vec![u32::MAX; twins.len()];
    for (c, scc) in tarjan_scc(&dg).into_iter().enumerate() {
        if scc.len() > 1 || dg.contains_edge(scc[0], scc[0]) {
            for v in scc {
                comp[v.index()] = c as u32;
            }
        }
    }
    let Some(x) = (0..twins.len()).find(|&k| comp[k] != u32::MAX) else {
        return Ok(TwinVerdict::Diagnosable);
    };
    // Stem to x, then once around a cycle of its component.
    let mut moves: Vec<(u32, EventId, u8)> = Vec::new();
    let mut cur = x as u32;
    while let Some((p, e, side)) = parent[cur as usize] {
        moves.push((cur, e, side));
        cur = p;
    }
    let start = cur;
    moves.reverse();
    let c = comp[x];
    let mut prev: FxHashMap<u32, (u32, EventId, u8)> = FxHashMap::default();
    let mut bfs = VecDeque::from([x as u32]);
    'bfs: while let Some(k) = bfs.pop_front() {
        for &(e, t, side) in &succ[k as usize] {
            if comp[t as usize] != c || prev.contains_key(&t) {
                continue;
            }
            prev.insert(t, (k, e, side));
            if t == x as u32 {
                break 'bfs;
            }
            bfs.push_back(t);
        }
    }
    let mut cycle = Vec::new();
    let mut cur = x as u32;
    loop {
        let (p, e, side) = prev[&cur];
        cycle.push((cur, e, side));
        cur = p;
        if cur == x as u32 {
            break;
        }
    }
    cycle.reverse();
    moves.extend(cycle);
    let (a, _, b, _) = twins[start as usize];
    let mut t1 = TracePrefix::new(g.state(a).clone());
    let mut t2 = TracePrefix::new(g.state(b).clone());
    for (to, e, side) in moves {
        let (s1, _, s2, _) = twins[to as usize];
        if side & 1 != 0 {
            t1.push(e, g.state(s1).clone());
        }
        if side & 2 != 0 {
            t2.push(e, g.state(s2).clone());
        }
    }
    let flag1 = twins[x].1;
    let (faulty, nominal) = if flag1 { (t1, t2) } else { (t2, t1) };
    Ok(TwinVerdict::NotDiagnosable(CriticalPair::new(
        plant, faulty, nominal,
    )))
}

/// An event on a cycle of unobservable transitions, if any.
fn unobservable_cycle(plant: &Lts, g: &crate::kernel::StateGraph) -> Option<EventId> {
    let mut dg: DiGraph<(), EventId> = DiGraph::with_capacity(g.len(), 0);
    for _ in 0..g.len() {
        dg.add_node(());
    }
    for s in 0..g.len() as u32 {
        for &(e, t) in g.edges(s) {
            if !plant.is_observable(e) {
                if s == t {
                    return Some(e);
                }
                dg.add_edge(s.into(), t.into(), e);
            }
        }
    }
    let mut comp = vec![usize::MAX; g.len()];
    for (c, scc) in tarjan_scc(&dg).into_iter().enumerate() {
        if scc.len() > 1 {
            for v in scc {
                comp[v.index()] = c;
            }
        }
    }
    dg.edge_indices().find_map(|ei| {
        let (a, b) = dg.edge_endpoints(ei).unwrap();
        (comp[a.index()] != usize::MAX && comp[a.index()] == comp[b.index()]).then(|| dg[ei])
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::aslk::Diag;
    use crate::kernel::tests::toy1;
    use crate::models;
    use crate::pastltl::Past;
    use crate::synth::tests::{toy_spec, x_is};

    #[test]
    fn toy_is_diagnosable() {
        let r = check_diagnosability(&toy1(), &toy_spec(), VerifyOptions::default()).unwrap();
        assert!(r.system && r.trace);
        assert!(r.violation.is_none() && r.critical_pair.is_none());
        assert_eq!(
            twin_plant_diagnosable(&toy1(), &x_is("c"), 64).unwrap(),
            TwinVerdict::Diagnosable
        );
    }

    #[test]
    fn twin_fixture_is_not() {
        let (m, specs) = models::TWIN.load().unwrap();
        let r = check_diagnosability(&m.lts, &specs[0], VerifyOptions::default()).unwrap();
        assert!(!r.system);
        assert!(!r.trace);
        let pair = r.critical_pair.unwrap();
        assert_eq!(
            crate::epistemic::obs_projection(&pair.faulty, &m.lts),
            crate::epistemic::obs_projection(&pair.nominal, &m.lts)
        );
        let c = m
            .scope
            .predicate(&crate::syntax::parse_expr("x = c | x = d").unwrap())
            .unwrap();
        assert!(m.lts.holds(&c, pair.faulty.last()));
        assert!(pair.nominal.states.iter().all(|s| !m.lts.holds(&c, s)));
        match twin_plant_diagnosable(&m.lts, &c, 64).unwrap() {
            TwinVerdict::NotDiagnosable(p) => {
                assert!(p.faulty.validate(&m.lts).is_ok() && p.nominal.validate(&m.lts).is_ok());
                assert_eq!(
                    crate::epistemic::obs_projection(&p.faulty, &m.lts),
                    crate::epistemic::obs_projection(&p.nominal, &m.lts)
                );
                assert!(p.faulty.states.iter().any(|s| m.lts.holds(&c, s)));
                assert!(!p.nominal.states.iter().any(|s| m.lts.holds(&c, s)));
            }
            TwinVerdict::Diagnosable => panic!("twin fixture must not be diagnosable"),
        }
    }

    #[test]
    fn unobservable_self_loop_is_rejected() {
        let l = crate::syntax::load_model(
            "var x : bool\nevent u\nevent o obs\ninit !x\ntrans u\ntrans o\n",
        )
        .unwrap()
        .lts;
        let err = twin_plant_diagnosable(&l, &Expr::bool(true), 64).unwrap_err();
        assert_eq!(err, VerifyError::UnobservableCycle("u".into()));
    }

    #[test]
    fn exact_delay_diagnosability() {
        let l = toy1();
        let exact = |d| {
            AlarmSpec::new(
                "E",
                Pattern::ExactDel(d),
                Past::Atom(x_is("c")),
                Diag::System,
                false,
            )
        };
        // `c` is entered unobservably and only confirmed by the next `p`.
        assert!(
            !check_diagnosability(&l, &exact(0), VerifyOptions::default())
                .unwrap()
                .system
        );
        assert!(
            check_diagnosability(&l, &exact(0), VerifyOptions::default())
                .unwrap()
                .trace
        );
    }
}
