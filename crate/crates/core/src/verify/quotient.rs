//! Minimization of deterministic machines with state outputs by partition
//! refinement. Products only read a few output bits of the diagnoser and of
//! the belief automaton, so composing with the quotients instead preserves
//! every verdict while collapsing states that differ elsewhere.

use rustc_hash::FxHashMap;

use crate::kernel::EventId;

#[derive(Clone, Debug)]
pub(crate) struct Quotient {
    /// Class of every original state.
    pub class: Vec<u32>,
    /// Outgoing edges per class, sorted by event.
    succ: Vec<Vec<(EventId, u32)>>,
}

impl Quotient {
    /// Coarsest partition that respects `output` and is stable under the
    /// edges. Returns `None` if some state has two edges on one event.
    pub fn build<'a>(
        n: usize,
        edges: impl Fn(u32) -> &'a [(EventId, u32)],
        output: impl Fn(u32) -> u64,
    ) -> Option<Quotient> {
        for s in 0..n as u32 {
            if edges(s).windows(2).any(|w| w[0].0 == w[1].0) {
                return None;
            }
        }
        let mut class = renumber((0..n as u32).map(|s| (output(s), Vec::<(EventId, u32)>::new())));
        let mut count = distinct(&class);
        loop {
            let next = renumber((0..n as u32).map(|s| {
                let sig: Vec<(EventId, u32)> = edges(s)
                    .iter()
                    .map(|&(e, t)| (e, class[t as usize]))
                    .collect();
                (class[s as usize] as u64, sig)
            }));
            let c = distinct(&next);
            class = next;
            if c == count {
                break;
            }
            count = c;
        }
        let mut succ = vec![None; count];
        for s in 0..n as u32 {
            let c = class[s as usize] as usize;
            if succ[c].is_none() {
                succ[c] = Some(
                    edges(s)
                        .iter()
                        .map(|&(e, t)| (e, class[t as usize]))
                        .collect(),
                );
            }
        }
        Some(Quotient {
            class,
            succ: succ.into_iter().map(Option::unwrap).collect(),
        })
    }

    pub fn len(&self) -> usize {
        self.succ.len()
    }

    pub fn successor(&self, c: u32, e: EventId) -> Option<u32> {
        let edges = &self.succ[c as usize];
        edges
            .binary_search_by_key(&e, |&(ev, _)| ev)
            .ok()
            .map(|i| edges[i].1)
    }

    /// Per class, the value `f` takes on its members; members agree on it
    /// whenever `f` factors through the output.
    pub fn lift<T: Clone + Default>(&self, f: impl Fn(u32) -> T) -> Vec<T> {
        let mut out = vec![T::default(); self.len()];
        let mut done = vec![false; self.len()];
        for (s, &c) in self.class.iter().enumerate() {
            if !done[c as usize] {
                done[c as usize] = true;
                out[c as usize] = f(s as u32);
            }
        }
        out
    }
}

/// Dense ids in order of first appearance.
fn renumber<K: std::hash::Hash + Eq>(keys: impl Iterator<Item = K>) -> Vec<u32> {
    let mut ids: FxHashMap<K, u32> = FxHashMap::default();
    keys.map(|k| {
        let next = ids.len() as u32;
        *ids.entry(k).or_insert(next)
    })
    .collect()
}

fn distinct(class: &[u32]) -> usize {
    class.iter().max().map_or(0, |&m| m as usize + 1)
}
