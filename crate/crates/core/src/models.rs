//! Bundled example models and their alarm specifications.

use thiserror::Error;

use crate::aslk::{validate_specs, AlarmSpec};
use crate::syntax::{load_model, parse_spec_doc, LoadError, Model};

#[derive(Clone, Copy, Debug)]
pub struct Fixture {
    pub name: &'static str,
    pub model: &'static str,
    pub spec: &'static str,
}

pub const TOY1: Fixture = Fixture {
    name: "toy1",
    model: include_str!("../models/toy1.fml"),
    spec: include_str!("../models/toy1.aslk"),
};

/// Battery of the running example without its charge; matches the
/// belief-construction figures state for state.
pub const SIMPLIFIED_BATTERY: Fixture = Fixture {
    name: "simplified_battery",
    model: include_str!("../models/simplified_battery.fml"),
    spec: include_str!("../models/simplified_battery.aslk"),
};

pub const BSS: Fixture = Fixture {
    name: "bss",
    model: include_str!("../models/bss.fml"),
    spec: include_str!("../models/bss.aslk"),
};

/// Exact and bounded alarms on a fault announced with a fixed delay.
pub const DELAY: Fixture = Fixture {
    name: "delay",
    model: include_str!("../models/delay.fml"),
    spec: include_str!("../models/delay.aslk"),
};

pub const TWO_FAULT: Fixture = Fixture {
    name: "two_fault",
    model: include_str!("../models/two_fault.fml"),
    spec: include_str!("../models/two_fault.aslk"),
};

/// Faulty and nominal branches that no observation separates.
pub const TWIN: Fixture = Fixture {
    name: "twin",
    model: include_str!("../models/twin.fml"),
    spec: include_str!("../models/twin.aslk"),
};

pub const ALL: &[Fixture] = &[TOY1, SIMPLIFIED_BATTERY, BSS, DELAY, TWO_FAULT, TWIN];

#[derive(Debug, Error)]
pub enum FixtureError {
    #[error(transparent)]
    Model(#[from] LoadError),
    #[error("specification: {0}")]
    Spec(String),
}

pub fn find(name: &str) -> Option<Fixture> {
    ALL.iter().copied().find(|f| f.name == name)
}

impl Fixture {
    pub fn load(&self) -> Result<(Model, Vec<AlarmSpec>), FixtureError> {
        let model = load_model(self.model)?;
        let doc = parse_spec_doc(self.spec).map_err(LoadError::from)?;
        let v = validate_specs(&doc, &model);
        if let Some(e) = v.errors().next() {
            return Err(FixtureError::Spec(e.to_string()));
        }
        Ok((model, v.specs))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::{check_deadlock_free, reachable_graph, DEFAULT_STATE_CAP};

    #[test]
    fn all_fixtures_load_and_are_deadlock_free() {
        for f in ALL {
            let (m, specs) = f.load().unwrap_or_else(|e| panic!("{}: {e}", f.name));
            assert!(!specs.is_empty(), "{}", f.name);
            let r = check_deadlock_free(&m.lts, DEFAULT_STATE_CAP).unwrap();
            assert!(r.deadlock_free, "{} has deadlocks", f.name);
        }
    }

    #[test]
    fn toy1_source_matches_builtin() {
        let (m, _) = TOY1.load().unwrap();
        let g = reachable_graph(&m.lts, 64).unwrap();
        assert_eq!(g.len(), 3);
        let b = reachable_graph(&crate::kernel::tests::toy1(), 64).unwrap();
        assert_eq!(g.states(), b.states());
        assert_eq!(m.lts.observable_events().count(), 2);
    }

    #[test]
    fn bss_charge_rule() {
        let (m, _) = BSS.load().unwrap();
        let l = &m.lts;
        let s0 = l.initial_states(4).unwrap().remove(0);
        assert_eq!(
            l.format_state(&s0),
            "mode=primary, g1=on, b1=nominal, b2=nominal, c1=10, s1=ok, s2=ok"
        );
        // Nominal, primary, charging: +1 - 1, clamped at the capacity.
        assert_eq!(l.successors(&s0, "tick").unwrap(), vec![s0.clone()]);
        let leak = l.successors(&s0, "b1_leak").unwrap().remove(0);
        let double = l.successors(&leak, "toS1").unwrap().remove(0);
        // Faulty, double, charging: 1 - (2 + 2) = -3, leaving the top level.
        assert!(l.successors(&double, "tick").unwrap().is_empty());
        let t = l.successors(&double, "Mid").unwrap().remove(0);
        assert_eq!(
            l.format_state(&t),
            "mode=secondary1, g1=on, b1=leak, b2=nominal, c1=7, s1=ok, s2=ok"
        );
        let t = l.successors(&t, "Low").unwrap().remove(0);
        assert_eq!(
            l.format_state(&t),
            "mode=secondary1, g1=on, b1=leak, b2=nominal, c1=4, s1=ok, s2=ok"
        );
        let off = l.successors(&s0, "g1_off").unwrap().remove(0);
        let off = l.successors(&off, "toS2").unwrap().remove(0);
        assert_eq!(l.successors(&off, "tick").unwrap(), vec![off.clone()]);
    }
}
