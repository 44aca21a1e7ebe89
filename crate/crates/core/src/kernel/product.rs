//! Synchronous and asynchronous composition.
//!
//! The composed variable list is `a`'s variables followed by `b`'s, with `b`'s
//! expressions shifted accordingly. A shared event gets one rule per pair of
//! component rules: guards are conjoined and update lists concatenated.

use rustc_hash::FxHashMap;

use super::{EventDecl, EventId, KernelError, Lts, Rule};
use crate::expr::{Expr, VarId};

fn check_disjoint(a: &Lts, b: &Lts) -> Result<(), KernelError> {
    for v in &b.vars {
        if a.var_id(&v.name).is_some() {
            return Err(KernelError::VariableClash(v.name.clone()));
        }
    }
    Ok(())
}

fn shift(e: &Expr, offset: VarId) -> Expr {
    e.map_vars(&|v| v + offset)
}

fn shifted_rule(r: &Rule, offset: VarId, event: EventId) -> Rule {
    Rule {
        event,
        guard: shift(&r.guard, offset),
        updates: r
            .updates
            .iter()
            .map(|(v, e)| (v + offset, shift(e, offset)))
            .collect(),
    }
}

fn pair_rules(ra: &Rule, rb: &Rule, offset: VarId, event: EventId) -> Rule {
    let rb = shifted_rule(rb, offset, event);
    Rule {
        event,
        guard: Expr::and([ra.guard.clone(), rb.guard]),
        updates: ra.updates.iter().cloned().chain(rb.updates).collect(),
    }
}

fn combined_vars(a: &Lts, b: &Lts) -> Vec<super::VarDecl> {
    a.vars.iter().chain(&b.vars).cloned().collect()
}

fn combined_init(a: &Lts, b: &Lts) -> Expr {
    Expr::and([a.init.clone(), shift(&b.init, a.vars.len() as VarId)])
}

/// Both components move together on every event. Requires identical event
/// sets with identical observability.
pub fn sync_product(a: &Lts, b: &Lts) -> Result<Lts, KernelError> {
    check_disjoint(a, b)?;
    if a.events.len() != b.events.len() {
        return Err(KernelError::EventMismatch(format!(
            "{} has {} events, {} has {}",
            a.name,
            a.events.len(),
            b.name,
            b.events.len()
        )));
    }
    let mut b_of_a = Vec::with_capacity(a.events.len());
    for ev in &a.events {
        let eb = b.event_id(&ev.name).ok_or_else(|| {
            KernelError::EventMismatch(format!("`{}` missing from {}", ev.name, b.name))
        })?;
        if b.is_observable(eb) != ev.observable {
            return Err(KernelError::EventMismatch(format!(
                "observability of `{}` differs",
                ev.name
            )));
        }
        b_of_a.push(eb);
    }
    let offset = a.vars.len() as VarId;
    let mut rules = Vec::new();
    for (e, &eb) in b_of_a.iter().enumerate() {
        let e = e as EventId;
        for ra in a.rules_of(e) {
            for rb in b.rules_of(eb) {
                rules.push(pair_rules(ra, rb, offset, e));
            }
        }
    }
    Lts::new(
        format!("{}*{}", a.name, b.name),
        combined_vars(a, b),
        a.events.clone(),
        combined_init(a, b),
        rules,
    )
}

/// Shared events synchronize; an event local to one component moves that
/// component alone and frames every variable of the other.
pub fn async_product(a: &Lts, b: &Lts) -> Result<Lts, KernelError> {
    check_disjoint(a, b)?;
    let mut events: Vec<EventDecl> = a.events.clone();
    let mut index: FxHashMap<String, EventId> = a
        .events
        .iter()
        .enumerate()
        .map(|(i, e)| (e.name.clone(), i as EventId))
        .collect();
    for ev in &b.events {
        match index.get(&ev.name) {
            Some(&e) if events[e as usize].observable != ev.observable => {
                return Err(KernelError::EventMismatch(format!(
                    "observability of `{}` differs",
                    ev.name
                )));
            }
            Some(_) => {}
            None => {
                index.insert(ev.name.clone(), events.len() as EventId);
                events.push(ev.clone());
            }
        }
    }
    let offset = a.vars.len() as VarId;
    let mut rules = Vec::new();
    for (e, ev) in events.iter().enumerate() {
        let e = e as EventId;
        let ea = a.event_id(&ev.name);
        let eb = b.event_id(&ev.name);
        match (ea, eb) {
            (Some(ea), Some(eb)) => {
                for ra in a.rules_of(ea) {
                    for rb in b.rules_of(eb) {
                        rules.push(pair_rules(ra, rb, offset, e));
                    }
                }
            }
            (Some(ea), None) => {
                rules.extend(a.rules_of(ea).map(|r| Rule {
                    event: e,
                    ..r.clone()
                }));
            }
            (None, Some(eb)) => {
                rules.extend(b.rules_of(eb).map(|r| shifted_rule(r, offset, e)));
            }
            (None, None) => unreachable!(),
        }
    }
    Lts::new(
        format!("{}||{}", a.name, b.name),
        combined_vars(a, b),
        events,
        combined_init(a, b),
        rules,
    )
}
