//! Finite domains, values and resolved expressions over state variables.
//!
//! A state is a vector of value indices, one per variable. Expressions are
//! evaluated against a current state and, inside update right-hand sides, a
//! partially built next state (see [`Expr::Next`]).

use std::fmt;

use crate::symbol::Symbol;

pub type VarId = u32;

#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug)]
pub enum Value {
    Bool(bool),
    Int(i64),
    Sym(Symbol),
}

impl Value {
    pub fn as_bool(self) -> bool {
        match self {
            Value::Bool(b) => b,
            other => panic!("expected boolean, found {other}"),
        }
    }

    pub fn as_int(self) -> i64 {
        match self {
            Value::Int(i) => i,
            other => panic!("expected integer, found {other}"),
        }
    }

    pub fn ty(self) -> Ty {
        match self {
            Value::Bool(_) => Ty::Bool,
            Value::Int(_) => Ty::Int,
            Value::Sym(_) => Ty::Sym,
        }
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Bool(b) => write!(f, "{b}"),
            Value::Int(i) => write!(f, "{i}"),
            Value::Sym(s) => write!(f, "{s}"),
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum Ty {
    Bool,
    Int,
    Sym,
}

impl fmt::Display for Ty {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Ty::Bool => "bool",
            Ty::Int => "int",
            Ty::Sym => "enum",
        })
    }
}

/// Finite, ordered value set of a variable. Integer ranges are sugar for the
/// enumerated values `lo..=hi`.
#[derive(Clone, PartialEq, Eq, Debug)]
pub enum Domain {
    Bool,
    Range { lo: i64, hi: i64 },
    Enum(Vec<Symbol>),
}

impl Domain {
    pub fn size(&self) -> u64 {
        match self {
            Domain::Bool => 2,
            Domain::Range { lo, hi } => (hi - lo + 1) as u64,
            Domain::Enum(v) => v.len() as u64,
        }
    }

    pub fn ty(&self) -> Ty {
        match self {
            Domain::Bool => Ty::Bool,
            Domain::Range { .. } => Ty::Int,
            Domain::Enum(_) => Ty::Sym,
        }
    }

    #[inline]
    pub fn value(&self, idx: u32) -> Value {
        match self {
            Domain::Bool => Value::Bool(idx != 0),
            Domain::Range { lo, .. } => Value::Int(lo + idx as i64),
            Domain::Enum(v) => Value::Sym(v[idx as usize]),
        }
    }

    pub fn index_of(&self, v: Value) -> Option<u32> {
        match (self, v) {
            (Domain::Bool, Value::Bool(b)) => Some(b as u32),
            (Domain::Range { lo, hi }, Value::Int(i)) if *lo <= i && i <= *hi => {
                Some((i - lo) as u32)
            }
            (Domain::Enum(syms), Value::Sym(s)) => {
                syms.iter().position(|&x| x == s).map(|p| p as u32)
            }
            _ => None,
        }
    }

    pub fn label(&self, idx: u32) -> String {
        self.value(idx).to_string()
    }
}

impl fmt::Display for Domain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Domain::Bool => f.write_str("bool"),
            Domain::Range { lo, hi } => write!(f, "{lo}..{hi}"),
            Domain::Enum(v) => {
                f.write_str("{")?;
                for (i, s) in v.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{s}")?;
                }
                f.write_str("}")
            }
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug)]
pub enum CmpOp {
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
}

impl CmpOp {
    pub fn as_str(self) -> &'static str {
        match self {
            CmpOp::Eq => "=",
            CmpOp::Ne => "!=",
            CmpOp::Lt => "<",
            CmpOp::Le => "<=",
            CmpOp::Gt => ">",
            CmpOp::Ge => ">=",
        }
    }

    fn apply(self, a: Value, b: Value) -> bool {
        match self {
            CmpOp::Eq => a == b,
            CmpOp::Ne => a != b,
            CmpOp::Lt => a.as_int() < b.as_int(),
            CmpOp::Le => a.as_int() <= b.as_int(),
            CmpOp::Gt => a.as_int() > b.as_int(),
            CmpOp::Ge => a.as_int() >= b.as_int(),
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug)]
pub enum ArithOp {
    Add,
    Sub,
    Min,
    Max,
}

/// Resolved expression. Variables are referenced by index into the owning
/// system's variable list.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub enum Expr {
    Const(Value),
    /// Value of the variable in the current (source) state.
    Var(VarId),
    /// Value of the variable in the next state as built so far by the
    /// enclosing update list.
    Next(VarId),
    Not(Box<Expr>),
    And(Vec<Expr>),
    Or(Vec<Expr>),
    Implies(Box<Expr>, Box<Expr>),
    Iff(Box<Expr>, Box<Expr>),
    Cmp(CmpOp, Box<Expr>, Box<Expr>),
    Arith(ArithOp, Box<Expr>, Box<Expr>),
    Neg(Box<Expr>),
    Ite(Box<Expr>, Box<Expr>, Box<Expr>),
}

pub const TRUE: Expr = Expr::Const(Value::Bool(true));
pub const FALSE: Expr = Expr::Const(Value::Bool(false));

/// Read access to variable values during evaluation.
pub trait Env {
    fn cur(&self, v: VarId) -> Value;
    fn next(&self, v: VarId) -> Value;
}

/// Evaluation environment over index-encoded states.
pub struct StateEnv<'a> {
    pub domains: &'a [Domain],
    pub cur: &'a [u32],
    pub next: Option<&'a [u32]>,
}

impl Env for StateEnv<'_> {
    #[inline]
    fn cur(&self, v: VarId) -> Value {
        self.domains[v as usize].value(self.cur[v as usize])
    }

    #[inline]
    fn next(&self, v: VarId) -> Value {
        let next = self.next.expect("primed variable outside of an update");
        self.domains[v as usize].value(next[v as usize])
    }
}

impl Expr {
    pub fn bool(b: bool) -> Expr {
        Expr::Const(Value::Bool(b))
    }

    pub fn eq(a: Expr, b: Expr) -> Expr {
        Expr::Cmp(CmpOp::Eq, Box::new(a), Box::new(b))
    }

    #[allow(clippy::should_implement_trait)]
    pub fn not(e: Expr) -> Expr {
        match e {
            Expr::Const(Value::Bool(b)) => Expr::bool(!b),
            Expr::Not(inner) => *inner,
            other => Expr::Not(Box::new(other)),
        }
    }

    /// Conjunction with constant folding and flattening.
    pub fn and(parts: impl IntoIterator<Item = Expr>) -> Expr {
        let mut out = Vec::new();
        for p in parts {
            match p {
                Expr::Const(Value::Bool(true)) => {}
                Expr::Const(Value::Bool(false)) => return FALSE,
                Expr::And(inner) => out.extend(inner),
                other => out.push(other),
            }
        }
        match out.len() {
            0 => TRUE,
            1 => out.pop().unwrap(),
            _ => Expr::And(out),
        }
    }

    /// Disjunction with constant folding and flattening.
    pub fn or(parts: impl IntoIterator<Item = Expr>) -> Expr {
        let mut out = Vec::new();
        for p in parts {
            match p {
                Expr::Const(Value::Bool(false)) => {}
                Expr::Const(Value::Bool(true)) => return TRUE,
                Expr::Or(inner) => out.extend(inner),
                other => out.push(other),
            }
        }
        match out.len() {
            0 => FALSE,
            1 => out.pop().unwrap(),
            _ => Expr::Or(out),
        }
    }

    pub fn eval(&self, env: &impl Env) -> Value {
        match self {
            Expr::Const(v) => *v,
            Expr::Var(v) => env.cur(*v),
            Expr::Next(v) => env.next(*v),
            Expr::Not(e) => Value::Bool(!e.eval(env).as_bool()),
            Expr::And(es) => Value::Bool(es.iter().all(|e| e.eval(env).as_bool())),
            Expr::Or(es) => Value::Bool(es.iter().any(|e| e.eval(env).as_bool())),
            Expr::Implies(a, b) => Value::Bool(!a.eval(env).as_bool() || b.eval(env).as_bool()),
            Expr::Iff(a, b) => Value::Bool(a.eval(env).as_bool() == b.eval(env).as_bool()),
            Expr::Cmp(op, a, b) => Value::Bool(op.apply(a.eval(env), b.eval(env))),
            Expr::Arith(op, a, b) => {
                let (x, y) = (a.eval(env).as_int(), b.eval(env).as_int());
                Value::Int(match op {
                    ArithOp::Add => x + y,
                    ArithOp::Sub => x - y,
                    ArithOp::Min => x.min(y),
                    ArithOp::Max => x.max(y),
                })
            }
            Expr::Neg(e) => Value::Int(-e.eval(env).as_int()),
            Expr::Ite(c, t, e) => {
                if c.eval(env).as_bool() {
                    t.eval(env)
                } else {
                    e.eval(env)
                }
            }
        }
    }

    /// Evaluates a boolean expression over a state (no primed references).
    pub fn holds(&self, domains: &[Domain], state: &[u32]) -> bool {
        self.eval(&StateEnv {
            domains,
            cur: state,
            next: None,
        })
        .as_bool()
    }

    /// Three-valued evaluation over a partial assignment. `None` means the
    /// value depends on an unassigned variable. Boolean connectives
    /// short-circuit on decided operands.
    pub fn eval_partial(&self, domains: &[Domain], partial: &[Option<u32>]) -> Option<Value> {
        let bool_of = |e: &Expr| e.eval_partial(domains, partial).map(Value::as_bool);
        match self {
            Expr::Const(v) => Some(*v),
            Expr::Var(v) => partial[*v as usize].map(|i| domains[*v as usize].value(i)),
            Expr::Next(_) => None,
            Expr::Not(e) => bool_of(e).map(|b| Value::Bool(!b)),
            Expr::And(es) => {
                let mut unknown = false;
                for e in es {
                    match bool_of(e) {
                        Some(false) => return Some(Value::Bool(false)),
                        None => unknown = true,
                        Some(true) => {}
                    }
                }
                (!unknown).then_some(Value::Bool(true))
            }
            Expr::Or(es) => {
                let mut unknown = false;
                for e in es {
                    match bool_of(e) {
                        Some(true) => return Some(Value::Bool(true)),
                        None => unknown = true,
                        Some(false) => {}
                    }
                }
                (!unknown).then_some(Value::Bool(false))
            }
            Expr::Implies(a, b) => match (bool_of(a), bool_of(b)) {
                (Some(false), _) | (_, Some(true)) => Some(Value::Bool(true)),
                (Some(true), Some(false)) => Some(Value::Bool(false)),
                _ => None,
            },
            Expr::Iff(a, b) => Some(Value::Bool(bool_of(a)? == bool_of(b)?)),
            Expr::Cmp(op, a, b) => {
                let x = a.eval_partial(domains, partial)?;
                let y = b.eval_partial(domains, partial)?;
                Some(Value::Bool(op.apply(x, y)))
            }
            Expr::Arith(..) | Expr::Neg(_) => {
                let env = PartialEnv { domains, partial };
                if self.vars_defined(&env) {
                    Some(self.eval(&env))
                } else {
                    None
                }
            }
            Expr::Ite(c, t, e) => match bool_of(c)? {
                true => t.eval_partial(domains, partial),
                false => e.eval_partial(domains, partial),
            },
        }
    }

    fn vars_defined(&self, env: &PartialEnv<'_>) -> bool {
        let mut ok = true;
        self.visit(&mut |e| match e {
            Expr::Var(v) => ok &= env.partial[*v as usize].is_some(),
            Expr::Next(_) => ok = false,
            _ => {}
        });
        ok
    }

    /// Pre-order traversal.
    pub fn visit(&self, f: &mut impl FnMut(&Expr)) {
        f(self);
        match self {
            Expr::Const(_) | Expr::Var(_) | Expr::Next(_) => {}
            Expr::Not(e) | Expr::Neg(e) => e.visit(f),
            Expr::And(es) | Expr::Or(es) => es.iter().for_each(|e| e.visit(f)),
            Expr::Implies(a, b) | Expr::Iff(a, b) | Expr::Cmp(_, a, b) | Expr::Arith(_, a, b) => {
                a.visit(f);
                b.visit(f);
            }
            Expr::Ite(c, t, e) => {
                c.visit(f);
                t.visit(f);
                e.visit(f);
            }
        }
    }

    /// Rewrites every variable reference, current and primed.
    pub fn map_vars(&self, f: &impl Fn(VarId) -> VarId) -> Expr {
        let m = |e: &Expr| Box::new(e.map_vars(f));
        match self {
            Expr::Const(v) => Expr::Const(*v),
            Expr::Var(v) => Expr::Var(f(*v)),
            Expr::Next(v) => Expr::Next(f(*v)),
            Expr::Not(e) => Expr::Not(m(e)),
            Expr::Neg(e) => Expr::Neg(m(e)),
            Expr::And(es) => Expr::And(es.iter().map(|e| e.map_vars(f)).collect()),
            Expr::Or(es) => Expr::Or(es.iter().map(|e| e.map_vars(f)).collect()),
            Expr::Implies(a, b) => Expr::Implies(m(a), m(b)),
            Expr::Iff(a, b) => Expr::Iff(m(a), m(b)),
            Expr::Cmp(op, a, b) => Expr::Cmp(*op, m(a), m(b)),
            Expr::Arith(op, a, b) => Expr::Arith(*op, m(a), m(b)),
            Expr::Ite(c, t, e) => Expr::Ite(m(c), m(t), m(e)),
        }
    }

    /// Replaces current-state references with primed ones, turning a state
    /// predicate into a predicate over the target of a transition.
    pub fn primed(&self) -> Expr {
        self.replace_refs(&|v| Expr::Next(v))
    }

    fn replace_refs(&self, f: &impl Fn(VarId) -> Expr) -> Expr {
        let m = |e: &Expr| Box::new(e.replace_refs(f));
        match self {
            Expr::Const(v) => Expr::Const(*v),
            Expr::Var(v) => f(*v),
            Expr::Next(v) => Expr::Next(*v),
            Expr::Not(e) => Expr::Not(m(e)),
            Expr::Neg(e) => Expr::Neg(m(e)),
            Expr::And(es) => Expr::And(es.iter().map(|e| e.replace_refs(f)).collect()),
            Expr::Or(es) => Expr::Or(es.iter().map(|e| e.replace_refs(f)).collect()),
            Expr::Implies(a, b) => Expr::Implies(m(a), m(b)),
            Expr::Iff(a, b) => Expr::Iff(m(a), m(b)),
            Expr::Cmp(op, a, b) => Expr::Cmp(*op, m(a), m(b)),
            Expr::Arith(op, a, b) => Expr::Arith(*op, m(a), m(b)),
            Expr::Ite(c, t, e) => Expr::Ite(m(c), m(t), m(e)),
        }
    }

    pub fn mentions_next(&self) -> bool {
        let mut found = false;
        self.visit(&mut |e| found |= matches!(e, Expr::Next(_)));
        found
    }

    pub fn max_var(&self) -> Option<VarId> {
        let mut m = None;
        self.visit(&mut |e| {
            if let Expr::Var(v) | Expr::Next(v) = e {
                m = Some(m.map_or(*v, |x: VarId| x.max(*v)));
            }
        });
        m
    }

    /// Renders the expression with the given variable names.
    pub fn display<'a>(&'a self, names: &'a [String]) -> ExprDisplay<'a> {
        ExprDisplay { expr: self, names }
    }
}

struct PartialEnv<'a> {
    domains: &'a [Domain],
    partial: &'a [Option<u32>],
}

impl Env for PartialEnv<'_> {
    fn cur(&self, v: VarId) -> Value {
        self.domains[v as usize].value(self.partial[v as usize].expect("unassigned variable"))
    }

    fn next(&self, _: VarId) -> Value {
        unreachable!("primed reference in partial evaluation")
    }
}

pub struct ExprDisplay<'a> {
    expr: &'a Expr,
    names: &'a [String],
}

impl ExprDisplay<'_> {
    fn prec(e: &Expr) -> u8 {
        match e {
            Expr::Iff(..) => 1,
            Expr::Implies(..) => 2,
            Expr::Or(_) => 3,
            Expr::And(_) => 4,
            Expr::Not(_) => 5,
            Expr::Cmp(..) => 6,
            Expr::Arith(ArithOp::Add | ArithOp::Sub, ..) => 7,
            Expr::Neg(_) => 8,
            _ => 9,
        }
    }

    fn write(&self, f: &mut fmt::Formatter<'_>, e: &Expr, min: u8) -> fmt::Result {
        let p = Self::prec(e);
        let paren = p < min;
        if paren {
            f.write_str("(")?;
        }
        let name = |v: &VarId| {
            self.names
                .get(*v as usize)
                .cloned()
                .unwrap_or_else(|| format!("v{v}"))
        };
        match e {
            Expr::Const(v) => write!(f, "{v}")?,
            Expr::Var(v) => f.write_str(&name(v))?,
            Expr::Next(v) => write!(f, "{}'", name(v))?,
            Expr::Not(a) => {
                f.write_str("!")?;
                self.write(f, a, 5)?;
            }
            Expr::Neg(a) => {
                f.write_str("-")?;
                self.write(f, a, 9)?;
            }
            Expr::And(es) | Expr::Or(es) => {
                let sep = if matches!(e, Expr::And(_)) {
                    " & "
                } else {
                    " | "
                };
                for (i, a) in es.iter().enumerate() {
                    if i > 0 {
                        f.write_str(sep)?;
                    }
                    self.write(f, a, p + 1)?;
                }
            }
            Expr::Implies(a, b) => {
                self.write(f, a, 3)?;
                f.write_str(" -> ")?;
                self.write(f, b, 2)?;
            }
            Expr::Iff(a, b) => {
                self.write(f, a, 2)?;
                f.write_str(" <-> ")?;
                self.write(f, b, 2)?;
            }
            Expr::Cmp(op, a, b) => {
                self.write(f, a, 7)?;
                write!(f, " {} ", op.as_str())?;
                self.write(f, b, 7)?;
            }
            Expr::Arith(op @ (ArithOp::Add | ArithOp::Sub), a, b) => {
                self.write(f, a, 7)?;
                f.write_str(if *op == ArithOp::Add { " + " } else { " - " })?;
                self.write(f, b, 8)?;
            }
            Expr::Arith(op, a, b) => {
                f.write_str(if *op == ArithOp::Min { "min(" } else { "max(" })?;
                self.write(f, a, 0)?;
                f.write_str(", ")?;
                self.write(f, b, 0)?;
                f.write_str(")")?;
            }
            Expr::Ite(c, t, el) => {
                f.write_str("if ")?;
                self.write(f, c, 0)?;
                f.write_str(" then ")?;
                self.write(f, t, 0)?;
                f.write_str(" else ")?;
                self.write(f, el, 0)?;
            }
        }
        if paren {
            f.write_str(")")?;
        }
        Ok(())
    }
}

impl fmt::Display for ExprDisplay<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.write(f, self.expr, 0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn doms() -> Vec<Domain> {
        vec![
            Domain::Enum(vec![Symbol::intern("a"), Symbol::intern("b")]),
            Domain::Range { lo: 0, hi: 3 },
            Domain::Bool,
        ]
    }

    #[test]
    fn domain_round_trip() {
        let d = Domain::Range { lo: -2, hi: 2 };
        assert_eq!(d.size(), 5);
        for i in 0..5 {
            assert_eq!(d.index_of(d.value(i)), Some(i));
        }
        assert_eq!(d.index_of(Value::Int(3)), None);
        assert_eq!(Domain::Bool.value(1), Value::Bool(true));
    }

    #[test]
    fn evaluates_arithmetic_and_comparisons() {
        let d = doms();
        let e = Expr::Cmp(
            CmpOp::Lt,
            Box::new(Expr::Arith(
                ArithOp::Add,
                Box::new(Expr::Var(1)),
                Box::new(Expr::Const(Value::Int(1))),
            )),
            Box::new(Expr::Const(Value::Int(3))),
        );
        assert!(e.holds(&d, &[0, 1, 0]));
        assert!(!e.holds(&d, &[0, 2, 0]));
    }

    #[test]
    fn partial_evaluation_short_circuits() {
        let d = doms();
        let x_is_a = Expr::eq(Expr::Var(0), Expr::Const(Value::Sym(Symbol::intern("a"))));
        let flag = Expr::eq(Expr::Var(2), Expr::bool(true));
        let conj = Expr::and([x_is_a.clone(), flag.clone()]);
        assert_eq!(
            conj.eval_partial(&d, &[Some(1), None, None]),
            Some(Value::Bool(false))
        );
        assert_eq!(conj.eval_partial(&d, &[Some(0), None, None]), None);
        let disj = Expr::or([x_is_a, flag]);
        assert_eq!(
            disj.eval_partial(&d, &[None, None, Some(1)]),
            Some(Value::Bool(true))
        );
    }

    #[test]
    fn connective_folding() {
        assert_eq!(Expr::and([TRUE, TRUE]), TRUE);
        assert_eq!(Expr::or([FALSE, Expr::Var(0), FALSE]), Expr::Var(0));
        assert_eq!(Expr::and([Expr::Var(0), FALSE]), FALSE);
        assert_eq!(Expr::not(Expr::not(Expr::Var(2))), Expr::Var(2));
    }

    #[test]
    fn display_uses_names() {
        let names = vec!["x".to_string(), "n".to_string(), "f".to_string()];
        let e = Expr::Not(Box::new(Expr::and([Expr::Var(2), Expr::Next(2)])));
        assert_eq!(e.display(&names).to_string(), "!(f & f')");
    }
}
