//! Observations, observational equivalence and a brute-force knowledge
//! oracle with perfect recall.
//!
//! The oracle is deliberately independent of the belief construction in
//! [`crate::synth`]: it explores prefixes of the system directly and decides
//! knowledge from the set of equivalent evaluation points.

use rustc_hash::FxHashSet;
use serde::Serialize;
use thiserror::Error;

use crate::expr::Expr;
use crate::kernel::{reachable_graph, EventId, KernelError, Lts, State, TracePrefix};
use crate::pastltl::IndexOutOfRange;

pub type ObsSequence = Vec<EventId>;

/// Default bound on the reachable states the oracle accepts.
pub const DEFAULT_ORACLE_CAP: u64 = 512;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub enum KVerdict {
    KnowsTrue,
    KnowsFalse,
    Unknown,
}

impl KVerdict {
    /// Verdict of a predicate over a non-empty set of candidate states.
    pub fn of(mut values: impl Iterator<Item = bool>) -> KVerdict {
        let Some(first) = values.next() else {
            return KVerdict::Unknown;
        };
        if values.all(|v| v == first) {
            if first {
                KVerdict::KnowsTrue
            } else {
                KVerdict::KnowsFalse
            }
        } else {
            KVerdict::Unknown
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum OracleError {
    #[error("oracle limited to {cap} reachable states")]
    OracleCapExceeded { cap: u64 },
    #[error(transparent)]
    Kernel(#[from] KernelError),
    #[error(transparent)]
    Index(#[from] IndexOutOfRange),
}

/// Observable events of the first `i` transitions of `trace`.
pub fn obs_projection_upto(trace: &TracePrefix, lts: &Lts, i: usize) -> ObsSequence {
    trace.events[..i]
        .iter()
        .copied()
        .filter(|&e| lts.is_observable(e))
        .collect()
}

pub fn obs_projection(trace: &TracePrefix, lts: &Lts) -> ObsSequence {
    obs_projection_upto(trace, lts, trace.len())
}

/// True iff the event leading into position `i` is observable.
pub fn is_obs_point(trace: &TracePrefix, lts: &Lts, i: usize) -> Result<bool, IndexOutOfRange> {
    if i > trace.len() {
        return Err(IndexOutOfRange {
            pos: i,
            len: trace.len(),
        });
    }
    Ok(i > 0 && lts.is_observable(trace.events[i - 1]))
}

pub fn obs_equivalent(lts: &Lts, t1: &TracePrefix, i: usize, t2: &TracePrefix, j: usize) -> bool {
    match (is_obs_point(t1, lts, i), is_obs_point(t2, lts, j)) {
        (Ok(a), Ok(b)) => {
            a == b && obs_projection_upto(t1, lts, i) == obs_projection_upto(t2, lts, j)
        }
        _ => false,
    }
}

#[derive(Clone, Copy, Debug)]
pub struct OracleOptions {
    pub cap: u64,
    /// Longest unobservable run to explore; defaults to the reachable
    /// state count.
    pub pad: Option<usize>,
}

impl Default for OracleOptions {
    fn default() -> OracleOptions {
        OracleOptions {
            cap: DEFAULT_ORACLE_CAP,
            pad: None,
        }
    }
}

/// States at which prefixes equivalent to one with observations `obs` and
/// observation-point parity `at_obs` can end.
pub fn equivalent_endpoints(
    lts: &Lts,
    obs: &[EventId],
    at_obs: bool,
    opts: OracleOptions,
) -> Result<Vec<State>, OracleError> {
    let graph = reachable_graph(lts, opts.cap).map_err(|e| match e {
        KernelError::CapExceeded { .. } => OracleError::OracleCapExceeded { cap: opts.cap },
        other => other.into(),
    })?;
    let pad = opts.pad.unwrap_or(graph.len());
    // Depth-first enumeration of prefixes. A prefix is summarized by its last
    // state, the number of observations matched and the length of its
    // trailing unobservable run; prefixes with equal summaries have equal
    // futures, so each summary is expanded once.
    let mut seen: FxHashSet<(u32, usize, usize)> = FxHashSet::default();
    let mut ends: FxHashSet<u32> = FxHashSet::default();
    let mut stack: Vec<(u32, usize, usize, bool)> =
        graph.init.iter().map(|&s| (s, 0, 0, false)).collect();
    while let Some((s, k, run, last_obs)) = stack.pop() {
        if !seen.insert((s, k, run)) {
            continue;
        }
        if k == obs.len() && last_obs == at_obs {
            ends.insert(s);
        }
        for &(e, t) in graph.edges(s) {
            if lts.is_observable(e) {
                if k < obs.len() && obs[k] == e {
                    stack.push((t, k + 1, 0, true));
                }
            } else if run < pad {
                stack.push((t, k, run + 1, false));
            }
        }
    }
    let mut out: Vec<State> = ends.into_iter().map(|s| graph.state(s).clone()).collect();
    out.sort();
    Ok(out)
}

/// Perfect-recall knowledge of `pred` at position `i` of `trace`.
pub fn knows_bruteforce(
    lts: &Lts,
    pred: &Expr,
    trace: &TracePrefix,
    i: usize,
    opts: OracleOptions,
) -> Result<KVerdict, OracleError> {
    let at_obs = is_obs_point(trace, lts, i)?;
    let obs = obs_projection_upto(trace, lts, i);
    let ends = equivalent_endpoints(lts, &obs, at_obs, opts)?;
    Ok(KVerdict::of(ends.iter().map(|s| lts.holds(pred, s))))
}

/// Shortest prefix whose observations are `obs`, whose parity is `at_obs`
/// and whose last state satisfies `goal`.
pub fn find_trace_with_obs(
    lts: &Lts,
    obs: &[EventId],
    at_obs: bool,
    goal: &Expr,
    cap: u64,
) -> Result<Option<TracePrefix>, KernelError> {
    let graph = reachable_graph(lts, cap)?;
    // Breadth-first over (state, observations matched, parity).
    let key = |s: u32, k: usize, o: bool| (s, k, o);
    let mut parent = rustc_hash::FxHashMap::default();
    let mut queue = std::collections::VecDeque::new();
    for &s in &graph.init {
        if parent.insert(key(s, 0, false), None).is_none() {
            queue.push_back(key(s, 0, false));
        }
    }
    while let Some((s, k, o)) = queue.pop_front() {
        if k == obs.len() && o == at_obs && lts.holds(goal, graph.state(s)) {
            let mut nodes = vec![(s, k, o)];
            let mut evs = Vec::new();
            while let Some(Some((prev, e))) = parent.get(nodes.last().unwrap()) {
                evs.push(*e);
                nodes.push(*prev);
            }
            nodes.reverse();
            evs.reverse();
            let mut t = TracePrefix::new(graph.state(nodes[0].0).clone());
            for (n, e) in nodes[1..].iter().zip(evs) {
                t.push(e, graph.state(n.0).clone());
            }
            return Ok(Some(t));
        }
        for &(e, t) in graph.edges(s) {
            let next = if lts.is_observable(e) {
                if k < obs.len() && obs[k] == e {
                    key(t, k + 1, true)
                } else {
                    continue;
                }
            } else {
                key(t, k, false)
            };
            if let std::collections::hash_map::Entry::Vacant(v) = parent.entry(next) {
                v.insert(Some(((s, k, o), e)));
                queue.push_back(next);
            }
        }
    }
    Ok(None)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::Value;
    use crate::kernel::tests::toy1;
    use crate::pastltl::{compile_monitor, Past};
    use crate::symbol::Symbol;

    fn x_is(s: &str) -> Expr {
        Expr::eq(Expr::Var(0), Expr::Const(Value::Sym(Symbol::intern(s))))
    }

    fn run(l: &Lts, events: &[&str]) -> TracePrefix {
        let mut t = TracePrefix::new(l.initial_states(16).unwrap().remove(0));
        for e in events {
            let next = l.successors(t.last(), e).unwrap().remove(0);
            t.push(l.event_id(e).unwrap(), next);
        }
        t
    }

    #[test]
    fn projection_and_points() {
        let l = toy1();
        let t = run(&l, &["u", "o"]);
        assert_eq!(
            obs_projection(&TracePrefix::new(t.states[0].clone()), &l),
            Vec::<EventId>::new()
        );
        assert_eq!(obs_projection(&t, &l), vec![l.event_id("o").unwrap()]);
        assert!(!is_obs_point(&t, &l, 0).unwrap());
        assert!(!is_obs_point(&t, &l, 1).unwrap());
        assert!(is_obs_point(&t, &l, 2).unwrap());
        assert!(is_obs_point(&t, &l, 3).is_err());
    }

    #[test]
    fn equivalence() {
        let l = toy1();
        let a = run(&l, &["u", "o", "o"]);
        let b = run(&l, &["f", "p"]);
        assert!(obs_equivalent(&l, &a, 2, &a, 2));
        assert!(!obs_equivalent(&l, &a, 2, &b, 2));
        assert!(obs_equivalent(&l, &a, 0, &b, 1));
        assert!(!obs_equivalent(&l, &a, 1, &a, 2));
    }

    #[test]
    fn oracle_on_toy() {
        let l = toy1();
        let m = compile_monitor(&Past::o(Past::Atom(x_is("c"))), &l, "f", false).unwrap();
        let p = m.attach(&l).unwrap();
        let tau = m.output_expr();
        let opts = OracleOptions::default();
        let fault = run(&p, &["f", "p"]);
        assert_eq!(
            knows_bruteforce(&p, &tau, &fault, 2, opts).unwrap(),
            KVerdict::KnowsTrue
        );
        let ok = run(&p, &["u", "o"]);
        assert_eq!(
            knows_bruteforce(&p, &tau, &ok, 2, opts).unwrap(),
            KVerdict::KnowsFalse
        );
        assert_eq!(
            knows_bruteforce(&p, &tau, &ok, 0, opts).unwrap(),
            KVerdict::Unknown
        );
        let padded = OracleOptions {
            pad: Some(6),
            ..opts
        };
        assert_eq!(
            knows_bruteforce(&p, &tau, &ok, 0, padded).unwrap(),
            KVerdict::Unknown
        );
    }

    #[test]
    fn oracle_cap() {
        let l = toy1();
        let t = run(&l, &[]);
        let err = knows_bruteforce(&l, &x_is("a"), &t, 0, OracleOptions { cap: 2, pad: None })
            .unwrap_err();
        assert_eq!(err, OracleError::OracleCapExceeded { cap: 2 });
    }

    #[test]
    fn witness_traces() {
        let l = toy1();
        let p = l.event_id("p").unwrap();
        let t = find_trace_with_obs(&l, &[p, p], true, &Expr::bool(true), 64)
            .unwrap()
            .unwrap();
        assert_eq!(t.render(&l), "(x=a) -f-> (x=c) -p-> (x=c) -p-> (x=c)");
        assert!(find_trace_with_obs(&l, &[p], true, &x_is("b"), 64)
            .unwrap()
            .is_none());
    }
}
