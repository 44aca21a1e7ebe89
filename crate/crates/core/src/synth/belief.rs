//! Belief automaton by subset construction over a reachable state graph.

use std::collections::VecDeque;

use rustc_hash::FxHashMap;
use serde::Serialize;

use super::SynthError;
use crate::kernel::{EventId, Lts, StateGraph};

pub const DEFAULT_BELIEF_CAP: usize = 1 << 16;

/// Adjacency of a state graph split by observability.
pub(crate) struct Explorer<'a> {
    graph: &'a StateGraph,
    unobs: Vec<Vec<u32>>,
    obs: Vec<Vec<(EventId, u32)>>,
    nevents: usize,
}

impl<'a> Explorer<'a> {
    pub(crate) fn new(lts: &Lts, graph: &'a StateGraph) -> Explorer<'a> {
        let mut unobs = Vec::with_capacity(graph.len());
        let mut obs = Vec::with_capacity(graph.len());
        for s in 0..graph.len() as u32 {
            let (o, u): (Vec<_>, Vec<_>) = graph
                .edges(s)
                .iter()
                .partition(|(e, _)| lts.is_observable(*e));
            let mut u: Vec<u32> = u.into_iter().map(|(_, t)| t).collect();
            u.sort_unstable();
            u.dedup();
            unobs.push(u);
            obs.push(o);
        }
        Explorer {
            graph,
            unobs,
            obs,
            nevents: lts.events.len(),
        }
    }

    pub(crate) fn has_unobservable(&self) -> bool {
        self.unobs.iter().any(|u| !u.is_empty())
    }

    pub(crate) fn closure(&self, b: &[u32]) -> Vec<u32> {
        let mut seen = vec![false; self.graph.len()];
        let mut out: Vec<u32> = Vec::with_capacity(b.len());
        let mut stack: Vec<u32> = b.to_vec();
        while let Some(s) = stack.pop() {
            if std::mem::replace(&mut seen[s as usize], true) {
                continue;
            }
            out.push(s);
            stack.extend(
                self.unobs[s as usize]
                    .iter()
                    .filter(|&&t| !seen[t as usize]),
            );
        }
        out.sort_unstable();
        out
    }

    pub(crate) fn image(&self, closed: &[u32], e: EventId) -> Vec<u32> {
        let mut out: Vec<u32> = closed
            .iter()
            .flat_map(|&s| {
                self.obs[s as usize]
                    .iter()
                    .filter(|(ev, _)| *ev == e)
                    .map(|&(_, t)| t)
            })
            .collect();
        out.sort_unstable();
        out.dedup();
        out
    }

    /// All non-empty observable images of a closed belief, by event.
    fn images(&self, closed: &[u32], buckets: &mut [Vec<u32>]) {
        for &s in closed {
            for &(e, t) in &self.obs[s as usize] {
                buckets[e as usize].push(t);
            }
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
pub struct BeliefStats {
    pub beliefs: usize,
    pub edges: usize,
    pub max_belief: usize,
}

/// Deterministic automaton over beliefs. Each belief is a sorted set of
/// state-graph ids; belief 0 is the initial one.
#[derive(Clone, Debug)]
pub struct BeliefAutomaton {
    beliefs: Vec<Box<[u32]>>,
    index: FxHashMap<Box<[u32]>, u32>,
    /// Outgoing edges per belief, sorted by event.
    edges: Vec<Vec<(EventId, u32)>>,
}

impl BeliefAutomaton {
    pub fn build(lts: &Lts, graph: &StateGraph, cap: usize) -> Result<BeliefAutomaton, SynthError> {
        let x = Explorer::new(lts, graph);
        let sync = !x.has_unobservable();
        let mut ba = BeliefAutomaton {
            beliefs: Vec::new(),
            index: FxHashMap::default(),
            edges: Vec::new(),
        };
        let mut queue = VecDeque::new();
        let mut init = graph.init.clone();
        init.sort_unstable();
        ba.intern(init.into_boxed_slice(), cap, &mut queue)?;
        let mut buckets = vec![Vec::new(); x.nevents];
        while let Some(b) = queue.pop_front() {
            let closed = x.closure(&ba.beliefs[b as usize]);
            if sync {
                assert_eq!(
                    &closed[..],
                    &ba.beliefs[b as usize][..],
                    "closure must be the identity without unobservable events"
                );
            }
            x.images(&closed, &mut buckets);
            let mut out = Vec::new();
            for (e, img) in buckets.iter_mut().enumerate() {
                if img.is_empty() {
                    continue;
                }
                img.sort_unstable();
                img.dedup();
                let t = ba.intern(std::mem::take(img).into_boxed_slice(), cap, &mut queue)?;
                out.push((e as EventId, t));
            }
            ba.edges[b as usize] = out;
        }
        Ok(ba)
    }

    fn intern(
        &mut self,
        b: Box<[u32]>,
        cap: usize,
        queue: &mut VecDeque<u32>,
    ) -> Result<u32, SynthError> {
        if let Some(&id) = self.index.get(&b) {
            return Ok(id);
        }
        if self.beliefs.len() >= cap {
            return Err(SynthError::BeliefCapExceeded { cap });
        }
        let id = self.beliefs.len() as u32;
        self.index.insert(b.clone(), id);
        self.beliefs.push(b);
        self.edges.push(Vec::new());
        queue.push_back(id);
        Ok(id)
    }

    pub fn len(&self) -> usize {
        self.beliefs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.beliefs.is_empty()
    }

    pub fn belief(&self, id: u32) -> &[u32] {
        &self.beliefs[id as usize]
    }

    pub fn beliefs(&self) -> &[Box<[u32]>] {
        &self.beliefs
    }

    pub fn id_of(&self, b: &[u32]) -> Option<u32> {
        self.index.get(b).copied()
    }

    pub fn edges(&self, id: u32) -> &[(EventId, u32)] {
        &self.edges[id as usize]
    }

    pub fn successor(&self, id: u32, e: EventId) -> Option<u32> {
        let edges = &self.edges[id as usize];
        edges
            .binary_search_by_key(&e, |&(ev, _)| ev)
            .ok()
            .map(|i| edges[i].1)
    }

    pub fn edge_count(&self) -> usize {
        self.edges.iter().map(Vec::len).sum()
    }

    pub fn stats(&self) -> BeliefStats {
        BeliefStats {
            beliefs: self.len(),
            edges: self.edge_count(),
            max_belief: self.beliefs.iter().map(|b| b.len()).max().unwrap_or(0),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::reachable_graph;
    use crate::kernel::tests::toy1;

    #[test]
    fn toy_plant_beliefs() {
        let l = toy1();
        let g = reachable_graph(&l, 64).unwrap();
        let ba = BeliefAutomaton::build(&l, &g, 64).unwrap();
        assert_eq!(ba.len(), 3);
        assert_eq!(ba.belief(0), &[0]);
        assert_eq!(
            ba.stats(),
            BeliefStats {
                beliefs: 3,
                edges: 4,
                max_belief: 1
            }
        );
        assert_eq!(ba.id_of(&[1]), Some(1));
    }

    #[test]
    fn cap_is_enforced() {
        let l = toy1();
        let g = reachable_graph(&l, 64).unwrap();
        assert_eq!(
            BeliefAutomaton::build(&l, &g, 2).unwrap_err(),
            SynthError::BeliefCapExceeded { cap: 2 }
        );
    }
}
