//! Explicit composition of a monitored plant with a diagnoser and, for
//! epistemic obligations, with the plant's own belief automaton.
//!
//! Nodes are numbered in breadth-first order, so the tree of first visits
//! yields shortest paths and the smallest matching id is a nearest witness.

use std::collections::VecDeque;

use petgraph::algo::tarjan_scc;
use petgraph::graph::DiGraph;
use rustc_hash::FxHashMap;

use super::quotient::Quotient;
use crate::kernel::{EventId, KernelError, StateGraph};
use crate::synth::BeliefAutomaton;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub(crate) struct Node {
    /// Plant graph id.
    pub p: u32,
    /// Diagnoser graph id, 0 without a diagnoser.
    pub d: u32,
    /// Belief id, 0 without beliefs.
    pub b: u32,
    /// Whether the last event was observable.
    pub obs: bool,
}

/// Moves of the diagnoser side, either on its reachable graph or on a
/// deterministic quotient of it.
#[derive(Clone, Copy)]
pub(crate) enum Moves<'a> {
    Graph(&'a StateGraph),
    Quotient { q: &'a Quotient, init: u32 },
}

pub(crate) struct Diag<'a> {
    pub moves: Moves<'a>,
    /// Diagnoser event for each plant event; `None` for unobservable ones.
    pub events: &'a [Option<EventId>],
}

/// Moves of the belief side; node field `b` holds a belief or a class.
#[derive(Clone, Copy)]
pub(crate) enum Beliefs<'a> {
    Full(&'a BeliefAutomaton),
    Quotient(&'a Quotient),
}

impl Beliefs<'_> {
    fn init(self) -> u32 {
        match self {
            Beliefs::Full(_) => 0,
            Beliefs::Quotient(q) => q.class[0],
        }
    }

    fn successor(self, b: u32, e: EventId) -> Option<u32> {
        match self {
            Beliefs::Full(ba) => ba.successor(b, e),
            Beliefs::Quotient(q) => q.successor(b, e),
        }
    }
}

pub(crate) struct Input<'a> {
    pub plant: &'a StateGraph,
    pub observable: &'a [bool],
    pub diag: Option<Diag<'a>>,
    pub beliefs: Option<Beliefs<'a>>,
    /// Plant states outside the assumption are dropped.
    pub keep: Option<&'a dyn Fn(u32) -> bool>,
    pub cap: u64,
}

pub(crate) struct Product {
    pub nodes: Vec<Node>,
    offsets: Vec<usize>,
    targets: Vec<(EventId, u32)>,
    parent: Vec<Option<(u32, EventId)>>,
    pub init: Vec<u32>,
    /// First plant move the diagnoser cannot follow.
    pub blocked: Option<(u32, EventId)>,
}

/// A path of product nodes with the events between them. For lassos the last
/// node equals the node at `loop_start`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub(crate) struct Path {
    pub nodes: Vec<u32>,
    pub events: Vec<EventId>,
    pub loop_start: Option<usize>,
}

impl Product {
    pub fn build(input: &Input) -> Result<Product, KernelError> {
        let mut prod = Product {
            nodes: Vec::new(),
            offsets: vec![0],
            targets: Vec::new(),
            parent: Vec::new(),
            init: Vec::new(),
            blocked: None,
        };
        let mut index: FxHashMap<Node, u32> = FxHashMap::default();
        let mut queue = VecDeque::new();
        let keep = |p: u32| input.keep.is_none_or(|k| k(p));
        let dinit: Vec<u32> = match &input.diag {
            Some(Diag {
                moves: Moves::Graph(g),
                ..
            }) => g.init.clone(),
            Some(Diag {
                moves: Moves::Quotient { init, .. },
                ..
            }) => vec![*init],
            None => vec![0],
        };
        let binit = input.beliefs.map_or(0, |b| b.init());
        let mut intern = |n: Node,
                          parent: Option<(u32, EventId)>,
                          prod: &mut Product,
                          queue: &mut VecDeque<u32>|
         -> Result<u32, KernelError> {
            if let Some(&id) = index.get(&n) {
                return Ok(id);
            }
            if prod.nodes.len() as u64 >= input.cap {
                return Err(KernelError::CapExceeded {
                    what: "product states",
                    cap: input.cap,
                });
            }
            let id = prod.nodes.len() as u32;
            index.insert(n, id);
            prod.nodes.push(n);
            prod.parent.push(parent);
            queue.push_back(id);
            Ok(id)
        };
        for &p in &input.plant.init {
            if !keep(p) {
                continue;
            }
            for &d in &dinit {
                let id = intern(
                    Node {
                        p,
                        d,
                        b: binit,
                        obs: false,
                    },
                    None,
                    &mut prod,
                    &mut queue,
                )?;
                if !prod.init.contains(&id) {
                    prod.init.push(id);
                }
            }
        }
        let mut dsucc = Vec::new();
        while let Some(id) = queue.pop_front() {
            let n = prod.nodes[id as usize];
            for &(e, p2) in input.plant.edges(n.p) {
                if !keep(p2) {
                    continue;
                }
                if !input.observable[e as usize] {
                    let t = intern(
                        Node {
                            p: p2,
                            obs: false,
                            ..n
                        },
                        Some((id, e)),
                        &mut prod,
                        &mut queue,
                    )?;
                    prod.targets.push((e, t));
                    continue;
                }
                dsucc.clear();
                match &input.diag {
                    Some(d) => {
                        if let Some(de) = d.events[e as usize] {
                            match d.moves {
                                Moves::Graph(g) => dsucc.extend(g.successors(n.d, de)),
                                Moves::Quotient { q, .. } => dsucc.extend(q.successor(n.d, de)),
                            }
                        }
                    }
                    None => dsucc.push(0),
                }
                if dsucc.is_empty() {
                    prod.blocked.get_or_insert((id, e));
                    continue;
                }
                let b2 = match input.beliefs {
                    Some(ba) => ba.successor(n.b, e).expect("plant move outside its belief"),
                    None => 0,
                };
                for &d2 in &dsucc {
                    let t = intern(
                        Node {
                            p: p2,
                            d: d2,
                            b: b2,
                            obs: true,
                        },
                        Some((id, e)),
                        &mut prod,
                        &mut queue,
                    )?;
                    prod.targets.push((e, t));
                }
            }
            prod.offsets.push(prod.targets.len());
        }
        Ok(prod)
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn edges(&self, id: u32) -> &[(EventId, u32)] {
        &self.targets[self.offsets[id as usize]..self.offsets[id as usize + 1]]
    }

    /// Shortest path from an initial node to `id`.
    pub fn path_to(&self, id: u32) -> Path {
        let mut nodes = vec![id];
        let mut events = Vec::new();
        while let Some((prev, e)) = self.parent[*nodes.last().unwrap() as usize] {
            nodes.push(prev);
            events.push(e);
        }
        nodes.reverse();
        events.reverse();
        Path {
            nodes,
            events,
            loop_start: None,
        }
    }

    /// Nearest node satisfying `bad`.
    pub fn find(&self, bad: impl Fn(u32) -> bool) -> Option<Path> {
        (0..self.len() as u32)
            .find(|&i| bad(i))
            .map(|i| self.path_to(i))
    }

    /// Safety search through an auxiliary automaton. `at(node, aux)` reads
    /// the position and returns the state after it, or `None` on violation;
    /// `advance` moves that state across an edge.
    pub fn aux_safety(
        &self,
        init: u64,
        at: impl Fn(u32, u64) -> Option<u64>,
        advance: impl Fn(u64) -> u64,
        cap: u64,
    ) -> Result<Option<Path>, KernelError> {
        let mut index: FxHashMap<(u32, u64), u32> = FxHashMap::default();
        let mut keys: Vec<(u32, u64)> = Vec::new();
        let mut parent: Vec<Option<(u32, EventId)>> = Vec::new();
        let mut queue = VecDeque::new();
        for &i in &self.init {
            if index.insert((i, init), keys.len() as u32).is_none() {
                keys.push((i, init));
                parent.push(None);
                queue.push_back(keys.len() as u32 - 1);
            }
        }
        while let Some(k) = queue.pop_front() {
            let (n, aux) = keys[k as usize];
            let Some(out) = at(n, aux) else {
                return Ok(Some(aux_path(&keys, &parent, k)));
            };
            let next = advance(out);
            for &(e, t) in self.edges(n) {
                let key = (t, next);
                if index.contains_key(&key) {
                    continue;
                }
                if keys.len() as u64 >= cap {
                    return Err(KernelError::CapExceeded {
                        what: "product states",
                        cap,
                    });
                }
                index.insert(key, keys.len() as u32);
                keys.push(key);
                parent.push(Some((k, e)));
                queue.push_back(keys.len() as u32 - 1);
            }
        }
        Ok(None)
    }

    /// Lasso search through an auxiliary automaton: an infinite path whose
    /// states from some point on all satisfy `bad`. `at(node, aux)` is the
    /// state after reading a position given the state before it.
    pub fn aux_lasso(
        &self,
        init: u64,
        at: impl Fn(u32, u64) -> u64,
        bad: impl Fn(u64) -> bool,
        cap: u64,
    ) -> Result<Option<Path>, KernelError> {
        let mut index: FxHashMap<(u32, u64), u32> = FxHashMap::default();
        let mut keys: Vec<(u32, u64)> = Vec::new();
        let mut parent: Vec<Option<(u32, EventId)>> = Vec::new();
        let mut succ: Vec<Vec<(EventId, u32)>> = Vec::new();
        let mut queue = VecDeque::new();
        for &i in &self.init {
            let key = (i, at(i, init));
            if let std::collections::hash_map::Entry::Vacant(v) = index.entry(key) {
                v.insert(keys.len() as u32);
                keys.push(key);
                parent.push(None);
                succ.push(Vec::new());
                queue.push_back(keys.len() as u32 - 1);
            }
        }
        while let Some(k) = queue.pop_front() {
            let (n, aux) = keys[k as usize];
            for &(e, t) in self.edges(n) {
                let key = (t, at(t, aux));
                let id = match index.get(&key) {
                    Some(&id) => id,
                    None => {
                        if keys.len() as u64 >= cap {
                            return Err(KernelError::CapExceeded {
                                what: "product states",
                                cap,
                            });
                        }
                        let id = keys.len() as u32;
                        index.insert(key, id);
                        keys.push(key);
                        parent.push(Some((k, e)));
                        succ.push(Vec::new());
                        queue.push_back(id);
                        id
                    }
                };
                succ[k as usize].push((e, id));
            }
        }
        let is_bad: Vec<bool> = keys.iter().map(|&(_, a)| bad(a)).collect();
        let mut g: DiGraph<(), ()> = DiGraph::with_capacity(keys.len(), 0);
        for _ in 0..keys.len() {
            g.add_node(());
        }
        for (k, out) in succ.iter().enumerate() {
            if !is_bad[k] {
                continue;
            }
            for &(_, t) in out {
                if is_bad[t as usize] {
                    g.add_edge((k as u32).into(), t.into(), ());
                }
            }
        }
        let mut comp = vec![u32::MAX; keys.len()];
        for (c, scc) in tarjan_scc(&g).into_iter().enumerate() {
            let cyclic = scc.len() > 1 || g.contains_edge(scc[0], scc[0]);
            if cyclic {
                for v in scc {
                    comp[v.index()] = c as u32;
                }
            }
        }
        let Some(x) = (0..keys.len()).find(|&k| comp[k] != u32::MAX) else {
            return Ok(None);
        };
        let mut path = aux_path(&keys, &parent, x as u32);
        let (cyc_events, cyc_nodes) = shortest_cycle(&succ, &comp, x as u32);
        path.loop_start = Some(path.nodes.len() - 1);
        path.events.extend(cyc_events);
        path.nodes
            .extend(cyc_nodes.into_iter().map(|k| keys[k as usize].0));
        Ok(Some(path))
    }
}

fn aux_path(keys: &[(u32, u64)], parent: &[Option<(u32, EventId)>], k: u32) -> Path {
    let mut ks = vec![k];
    let mut events = Vec::new();
    while let Some((prev, e)) = parent[*ks.last().unwrap() as usize] {
        ks.push(prev);
        events.push(e);
    }
    ks.reverse();
    events.reverse();
    Path {
        nodes: ks.into_iter().map(|k| keys[k as usize].0).collect(),
        events,
        loop_start: None,
    }
}

/// Shortest cycle through `x` inside its component, as the events and nodes
/// after `x` (ending with `x` again).
fn shortest_cycle(succ: &[Vec<(EventId, u32)>], comp: &[u32], x: u32) -> (Vec<EventId>, Vec<u32>) {
    let c = comp[x as usize];
    let mut prev: FxHashMap<u32, (u32, EventId)> = FxHashMap::default();
    let mut queue = VecDeque::from([x]);
    'bfs: while let Some(k) = queue.pop_front() {
        for &(e, t) in &succ[k as usize] {
            if comp[t as usize] != c || prev.contains_key(&t) {
                continue;
            }
            prev.insert(t, (k, e));
            if t == x {
                break 'bfs;
            }
            queue.push_back(t);
        }
    }
    let mut nodes = vec![x];
    let mut events = Vec::new();
    let mut cur = x;
    loop {
        let (p, e) = prev[&cur];
        events.push(e);
        if p == x {
            break;
        }
        nodes.push(p);
        cur = p;
    }
    nodes.reverse();
    events.reverse();
    (events, nodes)
}
