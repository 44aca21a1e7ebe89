//! Past-time temporal logic for diagnosis conditions.
//!
//! Formulas are evaluated directly over trace prefixes ([`Past::eval_at`])
//! and compiled into synchronous observers ([`compile_monitor`]) whose output
//! bit tracks the formula along every run.

mod formula;
mod monitor;

pub use formula::{desugar, eval_at, IndexOutOfRange, Past, PastDisplay};
pub use monitor::{
    compile_monitor, observed_predicate, BitKind, Monitor, MonitorBit, MonitorError, MONITOR_PREFIX,
};
