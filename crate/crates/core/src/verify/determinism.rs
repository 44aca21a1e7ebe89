//! The four determinism conditions on a diagnoser, by enumeration.

use std::collections::VecDeque;

use super::product::{Input, Product};
use super::{Check, CheckResult, Counterexample, DiagSide, Step, VerifyError};
use crate::kernel::{reachable_graph, EventId, Lts, StateGraph, TracePrefix};

/// Checks that the initial condition is satisfiable, that it has a single
/// solution and that every reachable state has exactly one successor per
/// event. Totality is relative to `plant`: only events the plant can
/// produce at the matching point are required. Without a plant, totality
/// is not checked.
pub fn check_determinism(
    diag: &Lts,
    plant: Option<&Lts>,
    cap: u64,
) -> Result<CheckResult, VerifyError> {
    let r = CheckResult::new(Check::Determinism, None);
    if !diag.init_satisfiable() {
        return Ok(r.fail("initial condition is unsatisfiable", None));
    }
    let init = diag.initial_states(2)?;
    if init.len() > 1 {
        let shown: Vec<String> = init.iter().map(|s| diag.format_state(s)).collect();
        return Ok(r.fail(
            format!("several initial states, including {}", shown.join(" and ")),
            None,
        ));
    }
    let graph = reachable_graph(diag, cap)?;
    if let Some((s, e)) = first_branching(&graph) {
        let trace = graph_path(&graph, s);
        let detail = format!("two successors on `{}`", diag.event_name(e));
        return Ok(r.fail(detail, Some(diag_counterexample(diag, trace))));
    }
    let Some(plant) = plant else {
        let mut r = r;
        r.detail = "totality not checked without a plant".into();
        return Ok(r);
    };
    let side = DiagSide::new(plant, diag, cap)?;
    let pgraph = reachable_graph(plant, cap)?;
    let observable: Vec<bool> = plant.events.iter().map(|e| e.observable).collect();
    let prod = Product::build(&Input {
        plant: &pgraph,
        observable: &observable,
        diag: Some(side.as_input()),
        beliefs: None,
        keep: None,
        cap,
    })?;
    if let Some((n, e)) = prod.blocked {
        let path = prod.path_to(n);
        let node = |i: usize| prod.nodes[path.nodes[i] as usize];
        let mut trace = TracePrefix::new(pgraph.state(node(0).p).clone());
        for (i, &ev) in path.events.iter().enumerate() {
            trace.push(ev, pgraph.state(node(i + 1).p).clone());
        }
        let steps = (0..path.nodes.len())
            .map(|i| Step {
                event: (i > 0).then(|| plant.event_name(path.events[i - 1]).to_string()),
                observable: node(i).obs,
                state: plant.format_state(&trace.states[i]),
                diagnoser: Some(diag.format_state(side.graph.state(node(i).d))),
            })
            .collect();
        let detail = format!(
            "no successor on `{}` at a point where the plant can produce it",
            plant.event_name(e)
        );
        return Ok(r.fail(
            detail,
            Some(Counterexample {
                trace,
                loop_start: None,
                steps,
            }),
        ));
    }
    Ok(r)
}

fn first_branching(g: &StateGraph) -> Option<(u32, EventId)> {
    (0..g.len() as u32).find_map(|s| {
        g.edges(s)
            .windows(2)
            .find(|w| w[0].0 == w[1].0)
            .map(|w| (s, w[0].0))
    })
}

fn graph_path(g: &StateGraph, target: u32) -> TracePrefix {
    let mut parent: Vec<Option<(u32, EventId)>> = vec![None; g.len()];
    let mut seen = vec![false; g.len()];
    let mut queue: VecDeque<u32> = g.init.iter().copied().collect();
    for &i in &g.init {
        seen[i as usize] = true;
    }
    while let Some(s) = queue.pop_front() {
        if s == target {
            break;
        }
        for &(e, t) in g.edges(s) {
            if !seen[t as usize] {
                seen[t as usize] = true;
                parent[t as usize] = Some((s, e));
                queue.push_back(t);
            }
        }
    }
    let mut ids = vec![target];
    let mut events = Vec::new();
    while let Some((p, e)) = parent[*ids.last().unwrap() as usize] {
        ids.push(p);
        events.push(e);
    }
    ids.reverse();
    events.reverse();
    let mut t = TracePrefix::new(g.state(ids[0]).clone());
    for (id, e) in ids[1..].iter().zip(events) {
        t.push(e, g.state(*id).clone());
    }
    t
}

fn diag_counterexample(diag: &Lts, trace: TracePrefix) -> Counterexample {
    let steps = (0..trace.states.len())
        .map(|i| Step {
            event: (i > 0).then(|| diag.event_name(trace.events[i - 1]).to_string()),
            observable: i > 0,
            state: diag.format_state(&trace.states[i]),
            diagnoser: None,
        })
        .collect();
    Counterexample {
        trace,
        loop_start: None,
        steps,
    }
}
