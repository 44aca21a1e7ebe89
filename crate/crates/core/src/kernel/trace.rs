//! Finite trace prefixes `s0 e0 s1 ... sk`.

use super::{EventId, Lts, State};

#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct TracePrefix {
    pub states: Vec<State>,
    pub events: Vec<EventId>,
}

impl TracePrefix {
    pub fn new(s0: State) -> TracePrefix {
        TracePrefix {
            states: vec![s0],
            events: Vec::new(),
        }
    }

    /// Number of transitions.
    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    pub fn push(&mut self, e: EventId, s: State) {
        self.events.push(e);
        self.states.push(s);
    }

    /// Prefix ending at position `k`.
    pub fn prefix(&self, k: usize) -> TracePrefix {
        TracePrefix {
            states: self.states[..=k].to_vec(),
            events: self.events[..k].to_vec(),
        }
    }

    pub fn last(&self) -> &State {
        self.states.last().expect("trace has at least one state")
    }

    /// Checks that the prefix is a run of `lts`: the first state is initial
    /// and every step is produced by some rule of its event.
    pub fn validate(&self, lts: &Lts) -> Result<(), String> {
        if self.states.len() != self.events.len() + 1 {
            return Err("states and events are not interleaved".into());
        }
        if !lts.holds(&lts.init, &self.states[0]) {
            return Err(format!(
                "initial state {} violates init",
                lts.format_state(&self.states[0])
            ));
        }
        for (i, &e) in self.events.iter().enumerate() {
            let succ = lts
                .step(&self.states[i], e)
                .map_err(|err| err.to_string())?;
            if !succ.contains(&self.states[i + 1]) {
                return Err(format!(
                    "step {i}: {} --{}--> {} is not a transition",
                    lts.format_state(&self.states[i]),
                    lts.event_name(e),
                    lts.format_state(&self.states[i + 1])
                ));
            }
        }
        Ok(())
    }

    pub fn render(&self, lts: &Lts) -> String {
        let mut out = format!("({})", lts.format_state(&self.states[0]));
        for (i, &e) in self.events.iter().enumerate() {
            out.push_str(&format!(
                " -{}-> ({})",
                lts.event_name(e),
                lts.format_state(&self.states[i + 1])
            ));
        }
        out
    }
}
