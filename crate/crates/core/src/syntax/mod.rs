//! Concrete syntax for models (`.fml`) and alarm specifications (`.aslk`).
//!
//! Model grammar, one declaration per item:
//!
//! ```text
//! model battery
//! var health : {nominal, faulty}
//! var charge : 0..10
//! var on : bool
//! event fault
//! event off obs
//! define empty := charge = 0
//! init health = nominal & charge = 10
//! trans fault : health = nominal => health' = faulty
//! ```
//!
//! Specification grammar:
//!
//! ```text
//! alarm leak : finitedel(health = faulty) diag=trace maximal
//! alarm late : exactdel(Y event:fault, 2) diag=system
//! ```
//!
//! `//` and `#` start comments. Documents keep source positions so that
//! semantic errors can point back into the text.

mod lexer;
mod parser;
mod printer;
mod resolve;

use std::fmt;

use thiserror::Error;

pub use lexer::{tokenize, Tok};
pub use parser::{parse_expr, parse_model_doc, parse_spec_doc};
pub use resolve::{build_model, load_model, resolve_past, LoadError, Model, Scope};

use crate::aslk::{Diag, PatternKind};

/// Source position (1-based). Positions are metadata: they never take part
/// in equality, so documents compare structurally.
#[derive(Clone, Copy, Debug, Default)]
pub struct Span {
    pub line: u32,
    pub col: u32,
}

impl PartialEq for Span {
    fn eq(&self, _: &Span) -> bool {
        true
    }
}

impl Eq for Span {}

impl fmt::Display for Span {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.col)
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("{span}: {msg}")]
pub struct SyntaxError {
    pub span: Span,
    pub msg: String,
}

impl SyntaxError {
    pub fn new(span: Span, msg: impl Into<String>) -> SyntaxError {
        SyntaxError {
            span,
            msg: msg.into(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum BinOp {
    Iff,
    Implies,
    Or,
    And,
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
    Add,
    Sub,
}

impl BinOp {
    pub fn text(self) -> &'static str {
        match self {
            BinOp::Iff => "<->",
            BinOp::Implies => "->",
            BinOp::Or => "|",
            BinOp::And => "&",
            BinOp::Eq => "=",
            BinOp::Ne => "!=",
            BinOp::Lt => "<",
            BinOp::Le => "<=",
            BinOp::Gt => ">",
            BinOp::Ge => ">=",
            BinOp::Add => "+",
            BinOp::Sub => "-",
        }
    }

    /// Binding strength; higher binds tighter.
    pub fn prec(self) -> u8 {
        match self {
            BinOp::Iff => 1,
            BinOp::Implies => 2,
            BinOp::Or => 3,
            BinOp::And => 4,
            BinOp::Eq | BinOp::Ne | BinOp::Lt | BinOp::Le | BinOp::Gt | BinOp::Ge => 6,
            BinOp::Add | BinOp::Sub => 7,
        }
    }

    pub fn is_comparison(self) -> bool {
        self.prec() == 6
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Func {
    Min,
    Max,
}

/// Surface expression, also used for past formulas.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SExpr {
    pub kind: SKind,
    pub span: Span,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SKind {
    Bool(bool),
    Int(i64),
    Ident(String),
    Primed(String),
    /// `event:name`, true when the outgoing event is `name`.
    Event(String),
    Not(Box<SExpr>),
    Neg(Box<SExpr>),
    Bin(BinOp, Box<SExpr>, Box<SExpr>),
    Call(Func, Box<SExpr>, Box<SExpr>),
    Ite(Box<SExpr>, Box<SExpr>, Box<SExpr>),
    /// `Y^n`; plain `Y` is `n = 1`.
    Y(u32, Box<SExpr>),
    /// `O` when the bound is absent, `O<=n` otherwise.
    O(Option<u32>, Box<SExpr>),
}

impl SExpr {
    pub fn new(kind: SKind, span: Span) -> SExpr {
        SExpr { kind, span }
    }

    pub fn is_temporal(&self) -> bool {
        match &self.kind {
            SKind::Y(..) | SKind::O(..) | SKind::Event(_) => true,
            SKind::Bool(_) | SKind::Int(_) | SKind::Ident(_) | SKind::Primed(_) => false,
            SKind::Not(a) | SKind::Neg(a) => a.is_temporal(),
            SKind::Bin(_, a, b) | SKind::Call(_, a, b) => a.is_temporal() || b.is_temporal(),
            SKind::Ite(c, t, e) => c.is_temporal() || t.is_temporal() || e.is_temporal(),
        }
    }
}

impl fmt::Display for SExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&printer::expr_to_string(self))
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum DomainSpec {
    Bool,
    Range(i64, i64),
    Enum(Vec<String>),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Update {
    pub var: String,
    pub rhs: SExpr,
    pub span: Span,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Item {
    Var {
        name: String,
        domain: DomainSpec,
        span: Span,
    },
    Event {
        name: String,
        observable: bool,
        span: Span,
    },
    Define {
        name: String,
        body: SExpr,
        span: Span,
    },
    Init {
        expr: SExpr,
        span: Span,
    },
    Trans {
        event: String,
        guard: Option<SExpr>,
        updates: Vec<Update>,
        span: Span,
    },
}

#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct ModelDoc {
    pub name: String,
    pub items: Vec<Item>,
}

impl fmt::Display for ModelDoc {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&printer::model_to_string(self))
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AlarmDecl {
    pub name: String,
    pub pattern: PatternKind,
    /// Delay as written; negative values are reported by validation.
    pub delay: i64,
    pub beta: SExpr,
    pub diag: Diag,
    pub maximal: bool,
    pub span: Span,
}

#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct SpecDoc {
    pub alarms: Vec<AlarmDecl>,
}

impl fmt::Display for SpecDoc {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&printer::spec_to_string(self))
    }
}

/// Words that cannot name variables, values or events.
pub const RESERVED: &[&str] = &[
    "model", "var", "event", "obs", "define", "init", "trans", "bool", "true", "false", "if",
    "then", "else", "min", "max", "Y", "O", "alarm", "diag",
];

pub fn is_reserved(name: &str) -> bool {
    RESERVED.contains(&name)
}
