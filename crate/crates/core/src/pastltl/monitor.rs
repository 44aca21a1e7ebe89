//! Compilation of past formulas into deterministic synchronous observers.
//!
//! Each distinct temporal subformula gets one boolean variable. After the
//! transition into position `i` the variable holds the subformula's value at
//! `i`:
//!
//! * `Y f`: next value is `f` evaluated at the source state, with event atoms
//!   resolved against the fired event; initially false.
//! * `O f`: next value is the old value or `f` evaluated at the target;
//!   initially `f` at the initial state.
//!
//! The output variable `τ̄` is the top-level bit when the formula itself is
//! temporal and a dedicated mirror bit otherwise. An optional extra bit records
//! whether the last fired event was observable.

use rustc_hash::FxHashMap;
use thiserror::Error;

use super::formula::Past;
use crate::expr::{Domain, Expr, VarId};
use crate::kernel::{EventId, Lts, Rule, VarDecl};

/// Prefix reserved for monitor variables.
pub const MONITOR_PREFIX: &str = "__m_";

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum MonitorError {
    #[error("event atom must be guarded by Y")]
    UnguardedEvent,
    #[error("formula references an undeclared symbol")]
    UndeclaredSymbol,
    #[error("monitor was compiled for a system with {expected} variables, got {found}")]
    WrongBase { expected: usize, found: usize },
    #[error("monitor variable `{0}` clashes with an existing variable")]
    Clash(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BitKind {
    Yesterday,
    Once,
    Mirror,
    LastObservable,
}

#[derive(Clone, Debug)]
pub struct MonitorBit {
    pub name: String,
    pub kind: BitKind,
    /// Initial value as a predicate over the initial state and earlier bits.
    pub init: Expr,
    /// Next-value expression per event id.
    pub update: Vec<Expr>,
}

#[derive(Clone, Debug)]
pub struct Monitor {
    pub formula: Past<Expr>,
    pub bits: Vec<MonitorBit>,
    /// Index into `bits` of the output.
    pub output: usize,
    pub last_observable: Option<usize>,
    /// Variable id of the first bit in the system the monitor attaches to.
    pub base: VarId,
}

impl Monitor {
    pub fn var_of(&self, bit: usize) -> VarId {
        self.base + bit as VarId
    }

    /// The output τ̄ as a state predicate of the monitored system.
    pub fn output_expr(&self) -> Expr {
        Expr::Var(self.var_of(self.output))
    }

    pub fn temporal_bits(&self) -> usize {
        self.bits
            .iter()
            .filter(|b| matches!(b.kind, BitKind::Yesterday | BitKind::Once))
            .count()
    }

    /// Synchronous composition: appends the bits and extends every rule.
    pub fn attach(&self, lts: &Lts) -> Result<Lts, MonitorError> {
        if lts.vars.len() != self.base as usize {
            return Err(MonitorError::WrongBase {
                expected: self.base as usize,
                found: lts.vars.len(),
            });
        }
        let mut vars = lts.vars.clone();
        for b in &self.bits {
            if lts.var_id(&b.name).is_some() {
                return Err(MonitorError::Clash(b.name.clone()));
            }
            vars.push(VarDecl {
                name: b.name.clone(),
                domain: Domain::Bool,
            });
        }
        let mut init = vec![lts.init.clone()];
        for (k, b) in self.bits.iter().enumerate() {
            init.push(Expr::Iff(
                Box::new(Expr::Var(self.var_of(k))),
                Box::new(b.init.clone()),
            ));
        }
        let rules = lts
            .rules
            .iter()
            .map(|r| {
                let mut updates = r.updates.clone();
                for (k, b) in self.bits.iter().enumerate() {
                    updates.push((self.var_of(k), b.update[r.event as usize].clone()));
                }
                Rule {
                    event: r.event,
                    guard: r.guard.clone(),
                    updates,
                }
            })
            .collect();
        Lts::new(
            lts.name.clone(),
            vars,
            lts.events.clone(),
            Expr::and(init),
            rules,
        )
        .map_err(|e| MonitorError::Clash(e.to_string()))
    }
}

struct Compiler<'a> {
    lts: &'a Lts,
    prefix: String,
    base: VarId,
    bits: Vec<MonitorBit>,
    /// Hash-consing of temporal subformulas.
    index: FxHashMap<Past<Expr>, usize>,
}

impl Compiler<'_> {
    fn var(&self, bit: usize) -> VarId {
        self.base + bit as VarId
    }

    /// Allocates bits for every temporal subformula, children first.
    fn allocate(&mut self, f: &Past<Expr>) -> Result<(), MonitorError> {
        match f {
            Past::Atom(_) | Past::Event(_) => Ok(()),
            Past::Not(a) => self.allocate(a),
            Past::And(a, b) | Past::Or(a, b) => {
                self.allocate(a)?;
                self.allocate(b)
            }
            Past::Y(a) | Past::O(a) => {
                self.allocate(a)?;
                if self.index.contains_key(f) {
                    return Ok(());
                }
                let k = self.bits.len();
                let (kind, init, update) = if let Past::Y(_) = f {
                    let update = (0..self.lts.events.len() as EventId)
                        .map(|e| self.at_source(a, e))
                        .collect::<Result<Vec<_>, _>>()?;
                    (BitKind::Yesterday, Expr::bool(false), update)
                } else {
                    let target = self.at_target(a)?;
                    let update = Expr::or([Expr::Var(self.var(k)), target]);
                    (
                        BitKind::Once,
                        self.at_init(a)?,
                        vec![update; self.lts.events.len()],
                    )
                };
                self.bits.push(MonitorBit {
                    name: format!("{}{}", self.prefix, k),
                    kind,
                    init,
                    update,
                });
                self.index.insert(f.clone(), k);
                Ok(())
            }
            Past::Yn(..) | Past::Ole(..) => unreachable!("formula is desugared before compilation"),
        }
    }

    fn bit_of(&self, f: &Past<Expr>) -> usize {
        self.index[f]
    }

    fn at_source(&self, f: &Past<Expr>, fired: EventId) -> Result<Expr, MonitorError> {
        Ok(match f {
            Past::Atom(a) => a.clone(),
            Past::Event(e) => Expr::bool(*e == fired),
            Past::Not(a) => Expr::not(self.at_source(a, fired)?),
            Past::And(a, b) => Expr::and([self.at_source(a, fired)?, self.at_source(b, fired)?]),
            Past::Or(a, b) => Expr::or([self.at_source(a, fired)?, self.at_source(b, fired)?]),
            Past::Y(_) | Past::O(_) => Expr::Var(self.var(self.bit_of(f))),
            Past::Yn(..) | Past::Ole(..) => unreachable!(),
        })
    }

    fn at_target(&self, f: &Past<Expr>) -> Result<Expr, MonitorError> {
        Ok(match f {
            Past::Atom(a) => a.primed(),
            Past::Event(_) => return Err(MonitorError::UnguardedEvent),
            Past::Not(a) => Expr::not(self.at_target(a)?),
            Past::And(a, b) => Expr::and([self.at_target(a)?, self.at_target(b)?]),
            Past::Or(a, b) => Expr::or([self.at_target(a)?, self.at_target(b)?]),
            Past::Y(_) | Past::O(_) => Expr::Next(self.var(self.bit_of(f))),
            Past::Yn(..) | Past::Ole(..) => unreachable!(),
        })
    }

    fn at_init(&self, f: &Past<Expr>) -> Result<Expr, MonitorError> {
        Ok(match f {
            Past::Atom(a) => a.clone(),
            Past::Event(_) => return Err(MonitorError::UnguardedEvent),
            Past::Not(a) => Expr::not(self.at_init(a)?),
            Past::And(a, b) => Expr::and([self.at_init(a)?, self.at_init(b)?]),
            Past::Or(a, b) => Expr::or([self.at_init(a)?, self.at_init(b)?]),
            Past::Y(_) => Expr::bool(false),
            Past::O(_) => Expr::Var(self.var(self.bit_of(f))),
            Past::Yn(..) | Past::Ole(..) => unreachable!(),
        })
    }
}

/// Compiles `f` against `lts`. Monitor variables are named
/// `__m_<tag>_<k>`; their ids start right after `lts`'s variables.
pub fn compile_monitor(
    f: &Past<Expr>,
    lts: &Lts,
    tag: &str,
    last_observable: bool,
) -> Result<Monitor, MonitorError> {
    let nvars = lts.vars.len() as VarId;
    let mut ok = true;
    let mut check = |e: &Expr| {
        if e.max_var().is_some_and(|m| m >= nvars) || e.mentions_next() {
            ok = false;
        }
    };
    visit_atoms(f, &mut check);
    if !ok || !events_in_range(f, lts.events.len()) {
        return Err(MonitorError::UndeclaredSymbol);
    }
    let f = f.desugar();
    if !f.events_guarded() {
        return Err(MonitorError::UnguardedEvent);
    }
    let mut c = Compiler {
        lts,
        prefix: format!("{MONITOR_PREFIX}{tag}_"),
        base: nvars,
        bits: Vec::new(),
        index: FxHashMap::default(),
    };
    c.allocate(&f)?;
    let output = match &f {
        Past::Y(_) | Past::O(_) => c.bit_of(&f),
        _ => {
            let k = c.bits.len();
            let update = c.at_target(&f)?;
            let init = c.at_init(&f)?;
            c.bits.push(MonitorBit {
                name: format!("{}out", c.prefix),
                kind: BitKind::Mirror,
                init,
                update: vec![update; lts.events.len()],
            });
            k
        }
    };
    let last = last_observable.then(|| {
        let k = c.bits.len();
        c.bits.push(MonitorBit {
            name: format!("{}obs", c.prefix),
            kind: BitKind::LastObservable,
            init: Expr::bool(false),
            update: (0..lts.events.len() as EventId)
                .map(|e| Expr::bool(lts.is_observable(e)))
                .collect(),
        });
        k
    });
    Ok(Monitor {
        formula: f,
        bits: c.bits,
        output,
        last_observable: last,
        base: nvars,
    })
}

fn visit_atoms(f: &Past<Expr>, g: &mut impl FnMut(&Expr)) {
    match f {
        Past::Atom(a) => g(a),
        Past::Event(_) => {}
        Past::Not(a) | Past::Y(a) | Past::O(a) | Past::Yn(_, a) | Past::Ole(_, a) => {
            visit_atoms(a, g)
        }
        Past::And(a, b) | Past::Or(a, b) => {
            visit_atoms(a, g);
            visit_atoms(b, g);
        }
    }
}

fn events_in_range(f: &Past<Expr>, n: usize) -> bool {
    match f {
        Past::Atom(_) => true,
        Past::Event(e) => (*e as usize) < n,
        Past::Not(a) | Past::Y(a) | Past::O(a) | Past::Yn(_, a) | Past::Ole(_, a) => {
            events_in_range(a, n)
        }
        Past::And(a, b) | Past::Or(a, b) => events_in_range(a, n) && events_in_range(b, n),
    }
}

/// `p` restricted to observation points: true iff `p` holds and the last
/// fired event was observable. Requires a monitor built with the
/// last-observable bit.
pub fn observed_predicate(p: &Expr, monitor: &Monitor) -> Option<Expr> {
    let k = monitor.last_observable?;
    Some(Expr::and([p.clone(), Expr::Var(monitor.var_of(k))]))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::Value;
    use crate::kernel::tests::toy1;
    use crate::kernel::{reachable_graph, State, TracePrefix, DEFAULT_STATE_CAP};
    use crate::symbol::Symbol;

    fn x_is(s: &str) -> Past<Expr> {
        Past::Atom(Expr::eq(
            Expr::Var(0),
            Expr::Const(Value::Sym(Symbol::intern(s))),
        ))
    }

    #[test]
    fn once_has_one_reflexive_bit() {
        let l = toy1();
        let m = compile_monitor(&Past::o(x_is("a")), &l, "t", false).unwrap();
        assert_eq!(m.temporal_bits(), 1);
        assert_eq!(m.bits.len(), 1);
        let p = m.attach(&l).unwrap();
        let init = p.initial_states(16).unwrap();
        assert_eq!(init, vec![State::from(vec![0, 1])]);
    }

    #[test]
    fn y_squared_is_a_shift_register() {
        let l = toy1();
        let f = Past::Yn(2, Box::new(x_is("a")));
        let m = compile_monitor(&f, &l, "t", false).unwrap();
        assert_eq!(m.temporal_bits(), 2);
        assert!(m.bits.iter().all(|b| b.init == Expr::bool(false)));
    }

    #[test]
    fn output_tracks_once_on_fault_run() {
        let l = toy1();
        let m = compile_monitor(&Past::o(x_is("c")), &l, "t", false).unwrap();
        let p = m.attach(&l).unwrap();
        let out = m.output_expr();
        let mut s = p.initial_states(4).unwrap().remove(0);
        let mut vals = vec![p.holds(&out, &s)];
        for ev in ["f", "p"] {
            s = p.successors(&s, ev).unwrap().remove(0);
            vals.push(p.holds(&out, &s));
        }
        assert_eq!(vals, vec![false, true, true]);
    }

    #[test]
    fn monitored_toy1_reachable_states() {
        let l = toy1();
        let m = compile_monitor(&Past::o(x_is("c")), &l, "t", false).unwrap();
        let p = m.attach(&l).unwrap();
        assert_eq!(p.state_space_size(), 6);
        assert_eq!(reachable_graph(&p, DEFAULT_STATE_CAP).unwrap().len(), 3);
    }

    #[test]
    fn state_predicate_gets_a_mirror_bit() {
        let l = toy1();
        let m = compile_monitor(&x_is("b"), &l, "t", false).unwrap();
        assert_eq!(m.bits.len(), 1);
        assert_eq!(m.bits[0].kind, BitKind::Mirror);
    }

    #[test]
    fn observed_predicate_follows_last_event() {
        let l = toy1();
        let m = compile_monitor(&Past::o(x_is("c")), &l, "t", true).unwrap();
        let p = m.attach(&l).unwrap();
        let obs = observed_predicate(&Expr::bool(true), &m).unwrap();
        let s0 = p.initial_states(4).unwrap().remove(0);
        assert!(!p.holds(&obs, &s0));
        let after_f = p.successors(&s0, "f").unwrap().remove(0);
        assert!(!p.holds(&obs, &after_f));
        let after_p = p.successors(&after_f, "p").unwrap().remove(0);
        assert!(p.holds(&obs, &after_p));
        let mut t = TracePrefix::new(s0);
        t.push(l.event_id("f").unwrap(), after_f);
        assert!(t.validate(&p).is_ok());
    }

    #[test]
    fn rejects_unguarded_events() {
        let l = toy1();
        let f = Past::o(Past::Event(1));
        assert_eq!(
            compile_monitor(&f, &l, "t", false).unwrap_err(),
            MonitorError::UnguardedEvent
        );
        let g = Past::y(Past::Event(1));
        assert!(compile_monitor(&g, &l, "t", false).is_ok());
    }
}
