//! Seeded random plants, predicates and alarm specifications for
//! property-based testing.
//!
//! Plants have a single integer variable `s` and one explicit rule per edge,
//! so every generated system is small enough for brute-force oracles.

use rand::seq::SliceRandom;
use rand::Rng;

use crate::aslk::{AlarmSpec, Diag, Pattern};
use crate::expr::{Domain, Expr, Value};
use crate::kernel::{EventDecl, Lts, Rule, VarDecl};
use crate::pastltl::Past;

#[derive(Clone, Copy, Debug)]
pub struct PlantParams {
    pub max_states: u32,
    pub max_events: u32,
    pub max_observable: u32,
    /// Unobservable edges only go from lower to higher states.
    pub no_unobservable_cycle: bool,
    /// Probability of each extra edge beyond the one every state gets.
    pub density: f64,
}

impl Default for PlantParams {
    fn default() -> Self {
        PlantParams {
            max_states: 8,
            max_events: 5,
            max_observable: 2,
            no_unobservable_cycle: false,
            density: 0.25,
        }
    }
}

fn at(s: u32) -> Expr {
    Expr::eq(Expr::Var(0), Expr::Const(Value::Int(s as i64)))
}

/// The predicate true exactly in the listed states.
pub fn state_set(states: &[u32]) -> Expr {
    if states.is_empty() {
        return Expr::bool(false);
    }
    Expr::or(states.iter().map(|&s| at(s)))
}

/// A deadlock-free plant with at least one observable and one unobservable
/// event. Some plants have two initial states.
pub fn random_plant(rng: &mut impl Rng, p: PlantParams) -> Lts {
    let n = rng.gen_range(2..=p.max_states.max(2));
    let nevents = rng.gen_range(2..=p.max_events.max(2));
    let nobs = rng.gen_range(1..=p.max_observable.clamp(1, nevents - 1));
    let mut events = Vec::new();
    for i in 0..nevents - nobs {
        events.push(EventDecl {
            name: format!("u{i}"),
            observable: false,
        });
    }
    for i in 0..nobs {
        events.push(EventDecl {
            name: format!("o{i}"),
            observable: true,
        });
    }
    let obs_ids: Vec<u32> = (nevents - nobs..nevents).collect();
    let mut edges: Vec<(u32, u32, u32)> = Vec::new();
    let add = |rng: &mut dyn rand::RngCore, s: u32, forced: bool| {
        let e = rng.gen_range(0..nevents);
        let observable = e >= nevents - nobs;
        let t = if observable || !p.no_unobservable_cycle {
            rng.gen_range(0..n)
        } else if s + 1 < n {
            rng.gen_range(s + 1..n)
        } else if forced {
            let e = *obs_ids.choose(rng).unwrap();
            return Some((s, e, rng.gen_range(0..n)));
        } else {
            return None;
        };
        Some((s, e, t))
    };
    for s in 0..n {
        edges.extend(add(rng, s, true));
        for _ in 0..nevents {
            if rng.gen_bool(p.density) {
                edges.extend(add(rng, s, false));
            }
        }
    }
    edges.sort_unstable();
    edges.dedup();
    let rules = edges
        .into_iter()
        .map(|(s, e, t)| Rule {
            event: e,
            guard: at(s),
            updates: vec![(0, Expr::Const(Value::Int(t as i64)))],
        })
        .collect();
    let init = if n > 2 && rng.gen_bool(0.2) {
        state_set(&[0, 1])
    } else {
        at(0)
    };
    let vars = vec![VarDecl {
        name: "s".into(),
        domain: Domain::Range {
            lo: 0,
            hi: n as i64 - 1,
        },
    }];
    Lts::new("random", vars, events, init, rules).expect("generated plant is well formed")
}

/// Number of values of the single state variable.
pub fn state_count(lts: &Lts) -> u32 {
    lts.vars[0].domain.size() as u32
}

/// A predicate over a random nonempty proper subset of the states.
pub fn random_predicate(rng: &mut impl Rng, lts: &Lts) -> Expr {
    let n = state_count(lts);
    let k = rng.gen_range(1..n.max(2));
    let mut all: Vec<u32> = (0..n).collect();
    all.shuffle(rng);
    let mut chosen = all[..k as usize].to_vec();
    chosen.sort_unstable();
    state_set(&chosen)
}

/// A diagnosis condition of temporal depth at most two.
pub fn random_beta(rng: &mut impl Rng, lts: &Lts) -> Past<Expr> {
    let mut atom = || Past::Atom(random_predicate(rng, lts));
    let (a, b) = (atom(), atom());
    match rng.gen_range(0..6) {
        0 => a,
        1 => Past::o(a),
        2 => Past::and(a, Past::y(b)),
        3 => Past::and(a, Past::not(Past::y(Past::o(b)))),
        4 => Past::or(Past::y(a), b),
        _ => Past::o(Past::and(a, Past::y(b))),
    }
}

pub fn random_pattern(rng: &mut impl Rng) -> Pattern {
    match rng.gen_range(0..3) {
        0 => Pattern::ExactDel(rng.gen_range(0..=2)),
        1 => Pattern::BoundDel(rng.gen_range(0..=3)),
        _ => Pattern::FiniteDel,
    }
}

pub fn random_spec(rng: &mut impl Rng, lts: &Lts, name: &str) -> AlarmSpec {
    let beta = random_beta(rng, lts);
    let pattern = random_pattern(rng);
    let diag = if rng.gen_bool(0.5) {
        Diag::Trace
    } else {
        Diag::System
    };
    AlarmSpec::new(name, pattern, beta, diag, rng.gen_bool(0.5))
}
