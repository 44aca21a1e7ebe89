//! Past-time formulas and their reference semantics over trace prefixes.

use std::fmt;

use thiserror::Error;

use crate::expr::Expr;
use crate::kernel::{EventId, Lts, TracePrefix};

/// Past-LTL formula over atoms of type `A`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Past<A> {
    Atom(A),
    /// Holds at position `i` when the event leaving position `i` is this one.
    Event(EventId),
    Not(Box<Past<A>>),
    And(Box<Past<A>>, Box<Past<A>>),
    Or(Box<Past<A>>, Box<Past<A>>),
    Y(Box<Past<A>>),
    O(Box<Past<A>>),
    /// `Y^n`, sugar for `n` nested `Y`.
    Yn(u32, Box<Past<A>>),
    /// `O^{<=n}`, sugar for `f | Y f | ... | Y^n f`.
    Ole(u32, Box<Past<A>>),
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("position {pos} is outside a prefix of length {len}")]
pub struct IndexOutOfRange {
    pub pos: usize,
    pub len: usize,
}

impl<A> Past<A> {
    #[allow(clippy::should_implement_trait)]
    pub fn not(f: Past<A>) -> Past<A> {
        Past::Not(Box::new(f))
    }

    pub fn and(a: Past<A>, b: Past<A>) -> Past<A> {
        Past::And(Box::new(a), Box::new(b))
    }

    pub fn or(a: Past<A>, b: Past<A>) -> Past<A> {
        Past::Or(Box::new(a), Box::new(b))
    }

    pub fn y(f: Past<A>) -> Past<A> {
        Past::Y(Box::new(f))
    }

    pub fn o(f: Past<A>) -> Past<A> {
        Past::O(Box::new(f))
    }

    pub fn depth(&self) -> usize {
        match self {
            Past::Atom(_) | Past::Event(_) => 0,
            Past::Not(a) => a.depth(),
            Past::And(a, b) | Past::Or(a, b) => a.depth().max(b.depth()),
            Past::Y(a) | Past::O(a) => 1 + a.depth(),
            Past::Yn(n, a) | Past::Ole(n, a) => *n as usize + a.depth(),
        }
    }

    /// True when every event atom has `Y` as its nearest temporal ancestor,
    /// so the formula is decided by the prefix up to the current position.
    pub fn events_guarded(&self) -> bool {
        fn go<A>(f: &Past<A>, under_y: bool) -> bool {
            match f {
                Past::Atom(_) => true,
                Past::Event(_) => under_y,
                Past::Not(a) => go(a, under_y),
                Past::And(a, b) | Past::Or(a, b) => go(a, under_y) && go(b, under_y),
                Past::Y(a) => go(a, true),
                Past::Yn(n, a) => go(a, under_y || *n > 0),
                Past::O(a) | Past::Ole(_, a) => go(a, false),
            }
        }
        go(self, false)
    }

    pub fn map_atoms<B>(&self, f: &impl Fn(&A) -> B) -> Past<B> {
        let m = |p: &Past<A>| Box::new(p.map_atoms(f));
        match self {
            Past::Atom(a) => Past::Atom(f(a)),
            Past::Event(e) => Past::Event(*e),
            Past::Not(a) => Past::Not(m(a)),
            Past::And(a, b) => Past::And(m(a), m(b)),
            Past::Or(a, b) => Past::Or(m(a), m(b)),
            Past::Y(a) => Past::Y(m(a)),
            Past::O(a) => Past::O(m(a)),
            Past::Yn(n, a) => Past::Yn(*n, m(a)),
            Past::Ole(n, a) => Past::Ole(*n, m(a)),
        }
    }
}

impl<A: Clone> Past<A> {
    /// Expands `Y^n` into nested `Y` and `O^{<=n}` into a disjunction.
    pub fn desugar(&self) -> Past<A> {
        match self {
            Past::Atom(_) | Past::Event(_) => self.clone(),
            Past::Not(a) => Past::not(a.desugar()),
            Past::And(a, b) => Past::and(a.desugar(), b.desugar()),
            Past::Or(a, b) => Past::or(a.desugar(), b.desugar()),
            Past::Y(a) => Past::y(a.desugar()),
            Past::O(a) => Past::o(a.desugar()),
            Past::Yn(n, a) => {
                let mut f = a.desugar();
                for _ in 0..*n {
                    f = Past::y(f);
                }
                f
            }
            Past::Ole(n, a) => {
                let base = a.desugar();
                let mut acc = base.clone();
                let mut shifted = base;
                for _ in 0..*n {
                    shifted = Past::y(shifted);
                    acc = Past::or(acc, shifted.clone());
                }
                acc
            }
        }
    }
}

impl Past<Expr> {
    /// Reference semantics at position `i` of `trace`.
    pub fn eval_at(
        &self,
        lts: &Lts,
        trace: &TracePrefix,
        i: usize,
    ) -> Result<bool, IndexOutOfRange> {
        if i > trace.len() {
            return Err(IndexOutOfRange {
                pos: i,
                len: trace.len(),
            });
        }
        Ok(self.eval_unchecked(lts, trace, i))
    }

    fn eval_unchecked(&self, lts: &Lts, t: &TracePrefix, i: usize) -> bool {
        match self {
            Past::Atom(p) => lts.holds(p, &t.states[i]),
            Past::Event(e) => t.events.get(i) == Some(e),
            Past::Not(a) => !a.eval_unchecked(lts, t, i),
            Past::And(a, b) => a.eval_unchecked(lts, t, i) && b.eval_unchecked(lts, t, i),
            Past::Or(a, b) => a.eval_unchecked(lts, t, i) || b.eval_unchecked(lts, t, i),
            Past::Y(a) => i > 0 && a.eval_unchecked(lts, t, i - 1),
            Past::O(a) => (0..=i).any(|j| a.eval_unchecked(lts, t, j)),
            Past::Yn(n, a) => i >= *n as usize && a.eval_unchecked(lts, t, i - *n as usize),
            Past::Ole(n, a) => {
                (i.saturating_sub(*n as usize)..=i).any(|j| a.eval_unchecked(lts, t, j))
            }
        }
    }

    pub fn display<'a>(&'a self, lts: &'a Lts) -> PastDisplay<'a> {
        PastDisplay { f: self, lts }
    }
}

/// Free-standing semantics of `eval_at`, usable on any prefix.
pub fn eval_at(
    f: &Past<Expr>,
    lts: &Lts,
    trace: &TracePrefix,
    i: usize,
) -> Result<bool, IndexOutOfRange> {
    f.eval_at(lts, trace, i)
}

pub fn desugar<A: Clone>(f: &Past<A>) -> Past<A> {
    f.desugar()
}

pub struct PastDisplay<'a> {
    f: &'a Past<Expr>,
    lts: &'a Lts,
}

impl PastDisplay<'_> {
    fn write(&self, out: &mut fmt::Formatter<'_>, f: &Past<Expr>, top: bool) -> fmt::Result {
        let names = self.lts.var_names();
        match f {
            Past::Atom(e) => {
                let s = e.display(&names).to_string();
                if top || !s.contains(' ') {
                    out.write_str(&s)
                } else {
                    write!(out, "({s})")
                }
            }
            Past::Event(e) => write!(out, "event:{}", self.lts.event_name(*e)),
            Past::Not(a) => {
                out.write_str("!")?;
                self.write(out, a, false)
            }
            Past::And(a, b) | Past::Or(a, b) => {
                if !top {
                    out.write_str("(")?;
                }
                self.write(out, a, false)?;
                out.write_str(if matches!(f, Past::And(..)) {
                    " & "
                } else {
                    " | "
                })?;
                self.write(out, b, false)?;
                if !top {
                    out.write_str(")")?;
                }
                Ok(())
            }
            Past::Y(a) => {
                out.write_str("Y ")?;
                self.write(out, a, false)
            }
            Past::O(a) => {
                out.write_str("O ")?;
                self.write(out, a, false)
            }
            Past::Yn(n, a) => {
                write!(out, "Y^{n} ")?;
                self.write(out, a, false)
            }
            Past::Ole(n, a) => {
                write!(out, "O<={n} ")?;
                self.write(out, a, false)
            }
        }
    }
}

impl fmt::Display for PastDisplay<'_> {
    fn fmt(&self, out: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.write(out, self.f, true)
    }
}
