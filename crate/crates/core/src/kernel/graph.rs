//! Explicit reachable fragment of a transition system.

use std::collections::VecDeque;

use rustc_hash::FxHashMap;

use super::{EventId, KernelError, Lts, State};

/// Reachable states with canonical ids. Ids follow the lexicographic order of
/// states compared variable by variable in name order, so two explorations of
/// the same system always agree on numbering.
#[derive(Clone, Debug)]
pub struct StateGraph {
    states: Vec<State>,
    index: FxHashMap<State, u32>,
    /// Outgoing edges per state, sorted by (event, target).
    succ: Vec<Vec<(EventId, u32)>>,
    pub init: Vec<u32>,
}

impl StateGraph {
    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn state(&self, id: u32) -> &State {
        &self.states[id as usize]
    }

    pub fn states(&self) -> &[State] {
        &self.states
    }

    pub fn id_of(&self, s: &[u32]) -> Option<u32> {
        self.index.get(s).copied()
    }

    pub fn edges(&self, id: u32) -> &[(EventId, u32)] {
        &self.succ[id as usize]
    }

    pub fn successors(&self, id: u32, e: EventId) -> impl Iterator<Item = u32> + '_ {
        self.succ[id as usize]
            .iter()
            .filter(move |(ev, _)| *ev == e)
            .map(|&(_, t)| t)
    }

    pub fn is_deadlock(&self, id: u32) -> bool {
        self.succ[id as usize].is_empty()
    }

    pub fn edge_count(&self) -> usize {
        self.succ.iter().map(Vec::len).sum()
    }
}

/// Breadth-first exploration from the initial states over every event.
pub fn reachable_graph(lts: &Lts, cap: u64) -> Result<StateGraph, KernelError> {
    let init = lts.initial_states(cap)?;
    let mut index: FxHashMap<State, u32> = FxHashMap::default();
    let mut states: Vec<State> = Vec::new();
    let mut raw: Vec<Vec<(EventId, u32)>> = Vec::new();
    let mut queue = VecDeque::new();
    let intern = |s: State,
                  states: &mut Vec<State>,
                  index: &mut FxHashMap<State, u32>,
                  queue: &mut VecDeque<u32>| {
        if let Some(&id) = index.get(&s) {
            return Ok(id);
        }
        if states.len() as u64 >= cap {
            return Err(KernelError::CapExceeded {
                what: "reachable states",
                cap,
            });
        }
        let id = states.len() as u32;
        index.insert(s.clone(), id);
        states.push(s);
        queue.push_back(id);
        Ok(id)
    };
    for s in init.iter().cloned() {
        intern(s, &mut states, &mut index, &mut queue)?;
    }
    let mut buf = Vec::new();
    while let Some(id) = queue.pop_front() {
        let mut edges = Vec::new();
        let src = states[id as usize].clone();
        for e in 0..lts.events.len() as EventId {
            buf.clear();
            lts.step_into(&src, e, &mut buf)?;
            for t in buf.drain(..) {
                let tid = intern(t, &mut states, &mut index, &mut queue)?;
                edges.push((e, tid));
            }
        }
        if raw.len() <= id as usize {
            raw.resize(id as usize + 1, Vec::new());
        }
        raw[id as usize] = edges;
    }
    raw.resize(states.len(), Vec::new());

    // Canonical renumbering.
    let perm = lts.canonical_order();
    let mut order: Vec<u32> = (0..states.len() as u32).collect();
    order.sort_by(|&a, &b| {
        let (sa, sb) = (&states[a as usize], &states[b as usize]);
        perm.iter().map(|&v| sa[v]).cmp(perm.iter().map(|&v| sb[v]))
    });
    let mut new_id = vec![0u32; states.len()];
    for (new, &old) in order.iter().enumerate() {
        new_id[old as usize] = new as u32;
    }
    let mut succ = vec![Vec::new(); states.len()];
    for (old, edges) in raw.into_iter().enumerate() {
        let mut mapped: Vec<(EventId, u32)> = edges
            .into_iter()
            .map(|(e, t)| (e, new_id[t as usize]))
            .collect();
        mapped.sort_unstable();
        mapped.dedup();
        succ[new_id[old] as usize] = mapped;
    }
    let mut sorted_states = vec![State::default(); states.len()];
    for (old, s) in states.into_iter().enumerate() {
        sorted_states[new_id[old] as usize] = s;
    }
    let index: FxHashMap<State, u32> = sorted_states
        .iter()
        .enumerate()
        .map(|(i, s)| (s.clone(), i as u32))
        .collect();
    let mut init_ids: Vec<u32> = init.iter().map(|s| index[s]).collect();
    init_ids.sort_unstable();
    Ok(StateGraph {
        states: sorted_states,
        index,
        succ,
        init: init_ids,
    })
}
