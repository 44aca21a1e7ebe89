//! Guarded-update transition systems with partial observability.
//!
//! An [`Lts`] is a list of finite-domain variables, a list of events (each
//! observable or not), an initial-state predicate and a list of rules. A rule
//! belongs to one event and carries a guard plus an update list; variables the
//! update list does not mention keep their value. Several rules for the same
//! event are a union, which is how nondeterminism is expressed.

mod graph;
mod product;
mod trace;

pub use graph::{reachable_graph, StateGraph};
pub use product::{async_product, sync_product};
pub use trace::TracePrefix;

use rustc_hash::FxHashMap;
use thiserror::Error;

use crate::expr::{Domain, Expr, StateEnv, Value, VarId};

pub type EventId = u32;
pub type State = Box<[u32]>;

pub const DEFAULT_STATE_CAP: u64 = 1 << 20;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum KernelError {
    #[error("{what} exceeds the cap of {cap}")]
    CapExceeded { what: &'static str, cap: u64 },
    #[error("no state satisfies the initial condition")]
    EmptyInit,
    #[error("unknown event `{0}`")]
    UnknownEvent(String),
    #[error("event sets differ: {0}")]
    EventMismatch(String),
    #[error("variable `{0}` is declared by both components")]
    VariableClash(String),
    #[error("event `{event}` assigns {value} to `{var}`, outside its domain {domain}")]
    DomainViolation {
        event: String,
        var: String,
        value: String,
        domain: String,
    },
    #[error("malformed system: {0}")]
    Malformed(String),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct VarDecl {
    pub name: String,
    pub domain: Domain,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EventDecl {
    pub name: String,
    pub observable: bool,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Rule {
    pub event: EventId,
    pub guard: Expr,
    /// Applied in order; a primed reference on a right-hand side reads the
    /// value produced by an earlier update of the same list.
    pub updates: Vec<(VarId, Expr)>,
}

/// Rules of one event bucketed by the value their guard requires of a
/// single variable. Rules without such a conjunct are in every bucket.
#[derive(Clone, Debug)]
struct RuleIndex {
    var: VarId,
    buckets: Vec<Vec<usize>>,
}

/// Events with fewer rules are scanned linearly.
const INDEX_THRESHOLD: usize = 16;

fn required_value(guard: &Expr, domains: &[Domain]) -> Vec<(VarId, u32)> {
    let conj: &[Expr] = match guard {
        Expr::And(parts) => parts,
        g => std::slice::from_ref(g),
    };
    conj.iter()
        .filter_map(|c| match c {
            Expr::Cmp(crate::expr::CmpOp::Eq, a, b) => match (&**a, &**b) {
                (Expr::Var(v), Expr::Const(k)) | (Expr::Const(k), Expr::Var(v)) => {
                    domains[*v as usize].index_of(*k).map(|i| (*v, i))
                }
                _ => None,
            },
            _ => None,
        })
        .collect()
}

impl RuleIndex {
    fn build(rules: &[Rule], ids: &[usize], domains: &[Domain]) -> Option<RuleIndex> {
        if ids.len() < INDEX_THRESHOLD {
            return None;
        }
        let req: Vec<Vec<(VarId, u32)>> = ids
            .iter()
            .map(|&i| required_value(&rules[i].guard, domains))
            .collect();
        let mut count: FxHashMap<VarId, usize> = FxHashMap::default();
        for r in &req {
            for &(v, _) in r {
                *count.entry(v).or_default() += 1;
            }
        }
        let (&var, &n) = count
            .iter()
            .max_by_key(|&(&v, &n)| (n, std::cmp::Reverse(v)))?;
        if n * 2 < ids.len() || domains[var as usize].size() > 1 << 16 {
            return None;
        }
        let mut buckets = vec![Vec::new(); domains[var as usize].size() as usize];
        for (&i, r) in ids.iter().zip(&req) {
            match r.iter().find(|&&(v, _)| v == var) {
                Some(&(_, val)) => buckets[val as usize].push(i),
                None => buckets.iter_mut().for_each(|b| b.push(i)),
            }
        }
        Some(RuleIndex { var, buckets })
    }

    fn candidates(&self, s: &[u32]) -> &[usize] {
        &self.buckets[s[self.var as usize] as usize]
    }
}

#[derive(Clone, Debug)]
pub struct Lts {
    pub name: String,
    pub vars: Vec<VarDecl>,
    pub events: Vec<EventDecl>,
    pub init: Expr,
    pub rules: Vec<Rule>,
    domains: Vec<Domain>,
    by_event: Vec<Vec<usize>>,
    lookup: Vec<Option<RuleIndex>>,
    var_index: FxHashMap<String, VarId>,
    event_index: FxHashMap<String, EventId>,
}

impl Lts {
    /// Builds a system and checks that every reference is declared.
    pub fn new(
        name: impl Into<String>,
        vars: Vec<VarDecl>,
        events: Vec<EventDecl>,
        init: Expr,
        rules: Vec<Rule>,
    ) -> Result<Lts, KernelError> {
        let mut var_index = FxHashMap::default();
        for (i, v) in vars.iter().enumerate() {
            if v.domain.size() == 0 {
                return Err(KernelError::Malformed(format!(
                    "variable `{}` has an empty domain",
                    v.name
                )));
            }
            if let Domain::Enum(syms) = &v.domain {
                let mut seen = syms.clone();
                seen.sort();
                seen.dedup();
                if seen.len() != syms.len() {
                    return Err(KernelError::Malformed(format!(
                        "duplicate value in domain of `{}`",
                        v.name
                    )));
                }
            }
            if var_index.insert(v.name.clone(), i as VarId).is_some() {
                return Err(KernelError::VariableClash(v.name.clone()));
            }
        }
        let mut event_index = FxHashMap::default();
        for (i, e) in events.iter().enumerate() {
            if event_index.insert(e.name.clone(), i as EventId).is_some() {
                return Err(KernelError::Malformed(format!(
                    "event `{}` declared twice",
                    e.name
                )));
            }
        }
        let nvars = vars.len() as VarId;
        let in_range = |e: &Expr| e.max_var().is_none_or(|m| m < nvars);
        if !in_range(&init) || init.mentions_next() {
            return Err(KernelError::Malformed(
                "initial condition references unknown variables".into(),
            ));
        }
        let mut by_event = vec![Vec::new(); events.len()];
        for (i, r) in rules.iter().enumerate() {
            if r.event as usize >= events.len() {
                return Err(KernelError::Malformed(format!(
                    "rule {i} has an unknown event"
                )));
            }
            if !in_range(&r.guard) || r.guard.mentions_next() {
                return Err(KernelError::Malformed(format!(
                    "rule {i} has a malformed guard"
                )));
            }
            for (v, rhs) in &r.updates {
                if *v >= nvars || !in_range(rhs) {
                    return Err(KernelError::Malformed(format!(
                        "rule {i} updates an undeclared variable"
                    )));
                }
            }
            by_event[r.event as usize].push(i);
        }
        let domains: Vec<Domain> = vars.iter().map(|v| v.domain.clone()).collect();
        let lookup = by_event
            .iter()
            .map(|ids| RuleIndex::build(&rules, ids, &domains))
            .collect();
        Ok(Lts {
            name: name.into(),
            vars,
            events,
            init,
            rules,
            domains,
            by_event,
            lookup,
            var_index,
            event_index,
        })
    }

    pub fn domains(&self) -> &[Domain] {
        &self.domains
    }

    pub fn var_names(&self) -> Vec<String> {
        self.vars.iter().map(|v| v.name.clone()).collect()
    }

    pub fn var_id(&self, name: &str) -> Option<VarId> {
        self.var_index.get(name).copied()
    }

    pub fn event_id(&self, name: &str) -> Option<EventId> {
        self.event_index.get(name).copied()
    }

    pub fn event_name(&self, e: EventId) -> &str {
        &self.events[e as usize].name
    }

    pub fn is_observable(&self, e: EventId) -> bool {
        self.events[e as usize].observable
    }

    pub fn observable_events(&self) -> impl Iterator<Item = EventId> + '_ {
        (0..self.events.len() as EventId).filter(|&e| self.is_observable(e))
    }

    pub fn rules_of(&self, e: EventId) -> impl Iterator<Item = &Rule> {
        self.by_event[e as usize].iter().map(|&i| &self.rules[i])
    }

    pub fn holds(&self, pred: &Expr, s: &[u32]) -> bool {
        pred.holds(&self.domains, s)
    }

    /// Successor states of `s` under event `e`, sorted and deduplicated.
    pub fn step(&self, s: &[u32], e: EventId) -> Result<Vec<State>, KernelError> {
        let mut out = Vec::new();
        self.step_into(s, e, &mut out)?;
        out.sort_unstable();
        out.dedup();
        Ok(out)
    }

    /// Appends successors of `s` under `e` to `out` without deduplication.
    pub fn step_into(
        &self,
        s: &[u32],
        e: EventId,
        out: &mut Vec<State>,
    ) -> Result<(), KernelError> {
        let ids: &[usize] = match &self.lookup[e as usize] {
            Some(ix) => ix.candidates(s),
            None => &self.by_event[e as usize],
        };
        for rule in ids.iter().map(|&i| &self.rules[i]) {
            if !rule.guard.holds(&self.domains, s) {
                continue;
            }
            let mut next: Vec<u32> = s.to_vec();
            for (v, rhs) in &rule.updates {
                let val = rhs.eval(&StateEnv {
                    domains: &self.domains,
                    cur: s,
                    next: Some(&next),
                });
                let dom = &self.domains[*v as usize];
                match dom.index_of(val) {
                    Some(i) => next[*v as usize] = i,
                    None => {
                        return Err(KernelError::DomainViolation {
                            event: self.event_name(e).to_string(),
                            var: self.vars[*v as usize].name.clone(),
                            value: val.to_string(),
                            domain: dom.to_string(),
                        })
                    }
                }
            }
            out.push(next.into_boxed_slice());
        }
        Ok(())
    }

    /// Successors by event name.
    pub fn successors(&self, s: &[u32], event: &str) -> Result<Vec<State>, KernelError> {
        let e = self
            .event_id(event)
            .ok_or_else(|| KernelError::UnknownEvent(event.to_string()))?;
        self.step(s, e)
    }

    /// Number of assignments over all variables, saturating.
    pub fn state_space_size(&self) -> u64 {
        self.domains
            .iter()
            .fold(1u64, |acc, d| acc.saturating_mul(d.size()))
    }

    /// Every assignment over the declared variables, in index order.
    pub fn enumerate_states(&self, cap: u64) -> Result<Vec<State>, KernelError> {
        let total = self.state_space_size();
        if total > cap {
            return Err(KernelError::CapExceeded {
                what: "state space",
                cap,
            });
        }
        let mut out = Vec::with_capacity(total as usize);
        let mut cur = vec![0u32; self.vars.len()];
        loop {
            out.push(cur.clone().into_boxed_slice());
            let mut i = self.vars.len();
            loop {
                if i == 0 {
                    return Ok(out);
                }
                i -= 1;
                cur[i] += 1;
                if (cur[i] as u64) < self.domains[i].size() {
                    break;
                }
                cur[i] = 0;
            }
        }
    }

    /// States satisfying the initial condition, found by backtracking with
    /// three-valued pruning. Errors with `EmptyInit` if there are none.
    pub fn initial_states(&self, cap: u64) -> Result<Vec<State>, KernelError> {
        let mut out = Vec::new();
        let mut partial = vec![None; self.vars.len()];
        self.solve_init(0, &mut partial, &mut out, cap, usize::MAX)?;
        if out.is_empty() {
            return Err(KernelError::EmptyInit);
        }
        out.sort_unstable();
        Ok(out)
    }

    pub fn init_satisfiable(&self) -> bool {
        let mut out = Vec::new();
        let mut partial = vec![None; self.vars.len()];
        let _ = self.solve_init(0, &mut partial, &mut out, u64::MAX, 1);
        !out.is_empty()
    }

    fn solve_init(
        &self,
        depth: usize,
        partial: &mut Vec<Option<u32>>,
        out: &mut Vec<State>,
        cap: u64,
        limit: usize,
    ) -> Result<(), KernelError> {
        if out.len() >= limit {
            return Ok(());
        }
        match self.init.eval_partial(&self.domains, partial) {
            Some(Value::Bool(false)) => return Ok(()),
            Some(Value::Bool(true)) if depth == self.vars.len() => {
                if out.len() as u64 >= cap {
                    return Err(KernelError::CapExceeded {
                        what: "initial states",
                        cap,
                    });
                }
                out.push(partial.iter().map(|v| v.unwrap()).collect());
                return Ok(());
            }
            _ => {}
        }
        if depth == self.vars.len() {
            return Ok(());
        }
        for i in 0..self.domains[depth].size() as u32 {
            partial[depth] = Some(i);
            self.solve_init(depth + 1, partial, out, cap, limit)?;
        }
        partial[depth] = None;
        Ok(())
    }

    /// Name/value pairs of a state in declaration order.
    pub fn assignment(&self, s: &[u32]) -> Vec<(String, String)> {
        self.vars
            .iter()
            .zip(s)
            .map(|(v, &i)| (v.name.clone(), v.domain.label(i)))
            .collect()
    }

    pub fn format_state(&self, s: &[u32]) -> String {
        self.assignment(s)
            .into_iter()
            .map(|(n, v)| format!("{n}={v}"))
            .collect::<Vec<_>>()
            .join(", ")
    }

    /// Parses `name=value` pairs into a state. Every variable must be given.
    pub fn parse_state(&self, pairs: &[(String, String)]) -> Result<State, String> {
        let mut s = vec![None; self.vars.len()];
        for (name, value) in pairs {
            let v = self
                .var_id(name)
                .ok_or_else(|| format!("unknown variable `{name}`"))?;
            let dom = &self.vars[v as usize].domain;
            let idx = (0..dom.size() as u32)
                .find(|&i| dom.label(i) == *value)
                .ok_or_else(|| format!("`{value}` is not in the domain of `{name}`"))?;
            s[v as usize] = Some(idx);
        }
        s.into_iter()
            .enumerate()
            .map(|(i, v)| v.ok_or_else(|| format!("variable `{}` not assigned", self.vars[i].name)))
            .collect()
    }

    /// Permutation listing variable indices in name order; the canonical state
    /// order compares values along it.
    pub fn canonical_order(&self) -> Vec<usize> {
        let mut perm: Vec<usize> = (0..self.vars.len()).collect();
        perm.sort_by(|&a, &b| self.vars[a].name.cmp(&self.vars[b].name));
        perm
    }

    /// Copy of the system with some events relabelled as observable or not.
    pub fn with_observability(&self, f: impl Fn(&EventDecl) -> bool) -> Lts {
        let mut out = self.clone();
        for e in &mut out.events {
            e.observable = f(e);
        }
        out
    }

    /// Copy without the rules selected by `drop`.
    pub fn without_rules(&self, drop: impl Fn(usize, &Rule) -> bool) -> Lts {
        let rules = self
            .rules
            .iter()
            .enumerate()
            .filter(|(i, r)| !drop(*i, r))
            .map(|(_, r)| r.clone())
            .collect();
        Lts::new(
            self.name.clone(),
            self.vars.clone(),
            self.events.clone(),
            self.init.clone(),
            rules,
        )
        .expect("subset of a valid rule list")
    }
}

/// Outcome of a deadlock check.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DeadlockReport {
    pub deadlock_free: bool,
    pub witness: Option<State>,
    pub deadlocked: usize,
}

/// Reports whether every reachable state has an enabled transition; the
/// witness is the canonically smallest deadlocked state.
pub fn check_deadlock_free(lts: &Lts, cap: u64) -> Result<DeadlockReport, KernelError> {
    let g = reachable_graph(lts, cap)?;
    let dead: Vec<u32> = (0..g.len() as u32).filter(|&s| g.is_deadlock(s)).collect();
    Ok(DeadlockReport {
        deadlock_free: dead.is_empty(),
        witness: dead.first().map(|&s| g.state(s).clone()),
        deadlocked: dead.len(),
    })
}
