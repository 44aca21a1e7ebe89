//! Name resolution and type checking: surface documents to kernel systems.

use rustc_hash::{FxHashMap, FxHashSet};
use thiserror::Error;

use super::*;
use crate::expr::{ArithOp, CmpOp, Domain, Expr, Ty, Value, VarId};
use crate::kernel::{EventDecl, EventId, Lts, Rule, VarDecl};
use crate::pastltl::{Past, MONITOR_PREFIX};
use crate::symbol::Symbol;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum LoadError {
    #[error("{0}")]
    Syntax(#[from] SyntaxError),
    #[error("{span}: undeclared {what} `{name}`")]
    Undeclared {
        span: Span,
        what: &'static str,
        name: String,
    },
    #[error("{span}: {msg}")]
    Domain { span: Span, msg: String },
    #[error("{span}: {msg}")]
    Type { span: Span, msg: String },
    #[error("{span}: {msg}")]
    Semantic { span: Span, msg: String },
}

impl LoadError {
    pub fn span(&self) -> Span {
        match self {
            LoadError::Syntax(e) => e.span,
            LoadError::Undeclared { span, .. }
            | LoadError::Domain { span, .. }
            | LoadError::Type { span, .. }
            | LoadError::Semantic { span, .. } => *span,
        }
    }
}

fn type_err<T>(span: Span, msg: impl Into<String>) -> Result<T, LoadError> {
    Err(LoadError::Type {
        span,
        msg: msg.into(),
    })
}

fn sem_err<T>(span: Span, msg: impl Into<String>) -> Result<T, LoadError> {
    Err(LoadError::Semantic {
        span,
        msg: msg.into(),
    })
}

/// Names visible to expressions of one model.
#[derive(Clone, Debug, Default)]
pub struct Scope {
    vars: FxHashMap<String, (VarId, Domain)>,
    events: FxHashMap<String, EventId>,
    defines: FxHashMap<String, (Expr, Ty)>,
    symbols: FxHashSet<Symbol>,
}

impl Scope {
    pub fn from_lts(lts: &Lts) -> Scope {
        let mut s = Scope::default();
        for (i, v) in lts.vars.iter().enumerate() {
            if let Domain::Enum(vals) = &v.domain {
                s.symbols.extend(vals.iter().copied());
            }
            s.vars
                .insert(v.name.clone(), (i as VarId, v.domain.clone()));
        }
        for (i, e) in lts.events.iter().enumerate() {
            s.events.insert(e.name.clone(), i as EventId);
        }
        s
    }

    pub fn var(&self, name: &str) -> Option<(VarId, &Domain)> {
        self.vars.get(name).map(|(v, d)| (*v, d))
    }

    pub fn event(&self, name: &str) -> Option<EventId> {
        self.events.get(name).copied()
    }

    pub fn define(&self, name: &str) -> Option<&Expr> {
        self.defines.get(name).map(|(e, _)| e)
    }

    /// Resolves a state predicate. Primed variables and temporal operators
    /// are rejected.
    pub fn predicate(&self, e: &SExpr) -> Result<Expr, LoadError> {
        let r = Resolver {
            scope: self,
            primes: false,
            pending: None,
        };
        r.expect(e, Ty::Bool)
    }
}

struct Pending<'a> {
    bodies: &'a FxHashMap<String, SExpr>,
    stack: std::cell::RefCell<Vec<String>>,
    done: std::cell::RefCell<FxHashMap<String, (Expr, Ty)>>,
}

struct Resolver<'a> {
    scope: &'a Scope,
    /// Whether primed variables may appear (update right-hand sides).
    primes: bool,
    /// Defines still being resolved while a model loads.
    pending: Option<&'a Pending<'a>>,
}

/// A resolved term: an expression with its type, or a bare value name whose
/// meaning is fixed by the comparison it appears in.
enum Term {
    Typed(Expr, Ty),
    Symbol(Symbol),
}

impl Resolver<'_> {
    fn expect(&self, e: &SExpr, ty: Ty) -> Result<Expr, LoadError> {
        match self.term(e)? {
            Term::Typed(x, t) if t == ty => Ok(x),
            Term::Typed(_, t) => type_err(e.span, format!("expected {ty}, found {t} in `{e}`")),
            Term::Symbol(s) if ty == Ty::Sym => Ok(Expr::Const(Value::Sym(s))),
            Term::Symbol(s) => type_err(e.span, format!("expected {ty}, found value `{s}`")),
        }
    }

    fn ident(&self, name: &str, span: Span) -> Result<Term, LoadError> {
        if let Some((v, d)) = self.scope.var(name) {
            return Ok(Term::Typed(Expr::Var(v), d.ty()));
        }
        if let Some((e, t)) = self.scope.defines.get(name) {
            return Ok(Term::Typed(e.clone(), *t));
        }
        if let Some(p) = self.pending {
            if let Some((e, t)) = p.done.borrow().get(name) {
                return Ok(Term::Typed(e.clone(), *t));
            }
            if let Some(body) = p.bodies.get(name) {
                if p.stack.borrow().iter().any(|n| n == name) {
                    return sem_err(span, format!("define `{name}` refers to itself"));
                }
                p.stack.borrow_mut().push(name.to_string());
                let inner = Resolver {
                    scope: self.scope,
                    primes: false,
                    pending: self.pending,
                };
                let r = inner.term(body);
                p.stack.borrow_mut().pop();
                let (e, t) = match r? {
                    Term::Typed(e, t) => (e, t),
                    Term::Symbol(s) => (Expr::Const(Value::Sym(s)), Ty::Sym),
                };
                p.done.borrow_mut().insert(name.to_string(), (e.clone(), t));
                return Ok(Term::Typed(e, t));
            }
        }
        let sym = Symbol::intern(name);
        if self.scope.symbols.contains(&sym) {
            return Ok(Term::Symbol(sym));
        }
        Err(LoadError::Undeclared {
            span,
            what: "identifier",
            name: name.to_string(),
        })
    }

    fn term(&self, e: &SExpr) -> Result<Term, LoadError> {
        let sp = e.span;
        Ok(match &e.kind {
            SKind::Bool(b) => Term::Typed(Expr::bool(*b), Ty::Bool),
            SKind::Int(v) => Term::Typed(Expr::Const(Value::Int(*v)), Ty::Int),
            SKind::Ident(n) => self.ident(n, sp)?,
            SKind::Primed(n) => {
                if !self.primes {
                    return type_err(sp, format!("primed variable `{n}'` outside an update"));
                }
                match self.scope.var(n) {
                    Some((v, d)) => Term::Typed(Expr::Next(v), d.ty()),
                    None => {
                        return Err(LoadError::Undeclared {
                            span: sp,
                            what: "variable",
                            name: n.clone(),
                        })
                    }
                }
            }
            SKind::Event(_) | SKind::Y(..) | SKind::O(..) => {
                return type_err(
                    sp,
                    "temporal operators are only allowed in diagnosis conditions",
                )
            }
            SKind::Not(a) => Term::Typed(Expr::not(self.expect(a, Ty::Bool)?), Ty::Bool),
            SKind::Neg(a) => Term::Typed(Expr::Neg(Box::new(self.expect(a, Ty::Int)?)), Ty::Int),
            SKind::Call(f, a, b) => {
                let op = match f {
                    Func::Min => ArithOp::Min,
                    Func::Max => ArithOp::Max,
                };
                let (a, b) = (self.expect(a, Ty::Int)?, self.expect(b, Ty::Int)?);
                Term::Typed(Expr::Arith(op, Box::new(a), Box::new(b)), Ty::Int)
            }
            SKind::Ite(c, t, f) => {
                let c = self.expect(c, Ty::Bool)?;
                let (t, f, ty) = self.unify(t, f, sp)?;
                Term::Typed(Expr::Ite(Box::new(c), Box::new(t), Box::new(f)), ty)
            }
            SKind::Bin(op, a, b) => match op {
                BinOp::And | BinOp::Or => {
                    let parts = [self.expect(a, Ty::Bool)?, self.expect(b, Ty::Bool)?];
                    let e = if *op == BinOp::And {
                        Expr::and(parts)
                    } else {
                        Expr::or(parts)
                    };
                    Term::Typed(e, Ty::Bool)
                }
                BinOp::Implies | BinOp::Iff => {
                    let (x, y) = (
                        Box::new(self.expect(a, Ty::Bool)?),
                        Box::new(self.expect(b, Ty::Bool)?),
                    );
                    let e = if *op == BinOp::Implies {
                        Expr::Implies(x, y)
                    } else {
                        Expr::Iff(x, y)
                    };
                    Term::Typed(e, Ty::Bool)
                }
                BinOp::Add | BinOp::Sub => {
                    let (x, y) = (self.expect(a, Ty::Int)?, self.expect(b, Ty::Int)?);
                    let op = if *op == BinOp::Add {
                        ArithOp::Add
                    } else {
                        ArithOp::Sub
                    };
                    Term::Typed(Expr::Arith(op, Box::new(x), Box::new(y)), Ty::Int)
                }
                BinOp::Eq | BinOp::Ne => {
                    let (x, y, _) = self.unify(a, b, sp)?;
                    let op = if *op == BinOp::Eq {
                        CmpOp::Eq
                    } else {
                        CmpOp::Ne
                    };
                    Term::Typed(Expr::Cmp(op, Box::new(x), Box::new(y)), Ty::Bool)
                }
                BinOp::Lt | BinOp::Le | BinOp::Gt | BinOp::Ge => {
                    let (x, y) = (self.expect(a, Ty::Int)?, self.expect(b, Ty::Int)?);
                    let op = match op {
                        BinOp::Lt => CmpOp::Lt,
                        BinOp::Le => CmpOp::Le,
                        BinOp::Gt => CmpOp::Gt,
                        _ => CmpOp::Ge,
                    };
                    Term::Typed(Expr::Cmp(op, Box::new(x), Box::new(y)), Ty::Bool)
                }
            },
        })
    }

    /// Resolves two operands that must share a type. A bare value name next
    /// to an enumerated variable must belong to that variable's domain.
    fn unify(&self, a: &SExpr, b: &SExpr, span: Span) -> Result<(Expr, Expr, Ty), LoadError> {
        let (ta, tb) = (self.term(a)?, self.term(b)?);
        let check_member = |x: &Expr, s: Symbol, at: Span| -> Result<(), LoadError> {
            if let Expr::Var(v) | Expr::Next(v) = x {
                let (name, d) = self
                    .scope
                    .vars
                    .iter()
                    .find(|(_, (id, _))| id == v)
                    .map(|(n, (_, d))| (n, d))
                    .unwrap();
                if d.index_of(Value::Sym(s)).is_none() {
                    return Err(LoadError::Domain {
                        span: at,
                        msg: format!("`{s}` is not a value of `{name}`"),
                    });
                }
            }
            Ok(())
        };
        match (ta, tb) {
            (Term::Typed(x, t), Term::Typed(y, u)) => {
                if t != u {
                    return type_err(span, format!("cannot compare {t} with {u}"));
                }
                Ok((x, y, t))
            }
            (Term::Typed(x, t), Term::Symbol(s)) => {
                if t != Ty::Sym {
                    return type_err(b.span, format!("value `{s}` used where {t} is expected"));
                }
                check_member(&x, s, b.span)?;
                Ok((x, Expr::Const(Value::Sym(s)), t))
            }
            (Term::Symbol(s), Term::Typed(y, t)) => {
                if t != Ty::Sym {
                    return type_err(a.span, format!("value `{s}` used where {t} is expected"));
                }
                check_member(&y, s, a.span)?;
                Ok((Expr::Const(Value::Sym(s)), y, t))
            }
            (Term::Symbol(s), Term::Symbol(r)) => Ok((
                Expr::Const(Value::Sym(s)),
                Expr::Const(Value::Sym(r)),
                Ty::Sym,
            )),
        }
    }
}

/// Resolves a diagnosis condition. Non-temporal subterms become atoms; event
/// atoms must have `Y` as their nearest temporal ancestor.
pub fn resolve_past(e: &SExpr, scope: &Scope) -> Result<Past<Expr>, LoadError> {
    fn go(e: &SExpr, scope: &Scope, under_y: bool) -> Result<Past<Expr>, LoadError> {
        if !e.is_temporal() {
            return Ok(Past::Atom(scope.predicate(e)?));
        }
        let sp = e.span;
        Ok(match &e.kind {
            SKind::Event(name) => {
                let Some(id) = scope.event(name) else {
                    return Err(LoadError::Undeclared {
                        span: sp,
                        what: "event",
                        name: name.clone(),
                    });
                };
                if !under_y {
                    return sem_err(sp, "event atom must be guarded by Y");
                }
                Past::Event(id)
            }
            SKind::Not(a) => Past::not(go(a, scope, under_y)?),
            SKind::Y(n, a) => {
                let inner = go(a, scope, under_y || *n > 0)?;
                if *n == 1 {
                    Past::y(inner)
                } else {
                    Past::Yn(*n, Box::new(inner))
                }
            }
            SKind::O(bound, a) => {
                let inner = go(a, scope, false)?;
                match bound {
                    None => Past::o(inner),
                    Some(n) => Past::Ole(*n, Box::new(inner)),
                }
            }
            SKind::Bin(op, a, b) => {
                let (x, y) = (go(a, scope, under_y)?, go(b, scope, under_y)?);
                match op {
                    BinOp::And => Past::and(x, y),
                    BinOp::Or => Past::or(x, y),
                    BinOp::Implies => Past::or(Past::not(x), y),
                    BinOp::Iff => Past::or(
                        Past::and(x.clone(), y.clone()),
                        Past::and(Past::not(x), Past::not(y)),
                    ),
                    _ => return type_err(sp, "temporal operator inside a comparison"),
                }
            }
            _ => return type_err(sp, "temporal operator inside a term"),
        })
    }
    go(e, scope, false)
}

/// A loaded model: its source document, the kernel system and the scope used
/// to resolve conditions against it.
#[derive(Clone, Debug)]
pub struct Model {
    pub doc: ModelDoc,
    pub lts: Lts,
    pub scope: Scope,
}

fn domain_of(spec: &DomainSpec) -> Domain {
    match spec {
        DomainSpec::Bool => Domain::Bool,
        DomainSpec::Range(lo, hi) => Domain::Range { lo: *lo, hi: *hi },
        DomainSpec::Enum(vals) => Domain::Enum(vals.iter().map(|v| Symbol::intern(v)).collect()),
    }
}

/// Rejects constant right-hand sides outside the target's domain.
fn check_constant(rhs: &Expr, d: &Domain, var: &str, span: Span) -> Result<(), LoadError> {
    if let Expr::Const(v) = rhs {
        if d.index_of(*v).is_none() {
            return Err(LoadError::Domain {
                span,
                msg: format!("`{v}` is not a value of `{var}` ({d})"),
            });
        }
    }
    Ok(())
}

pub fn load_model(src: &str) -> Result<Model, LoadError> {
    let doc = parse_model_doc(src)?;
    build_model(doc)
}

pub fn build_model(doc: ModelDoc) -> Result<Model, LoadError> {
    let mut scope = Scope::default();
    let mut vars = Vec::new();
    let mut events = Vec::new();
    let mut bodies = FxHashMap::default();
    let mut define_order = Vec::new();
    let check_name = |name: &str, span: Span| -> Result<(), LoadError> {
        if is_reserved(name) {
            return sem_err(span, format!("`{name}` is a reserved word"));
        }
        if name.starts_with(MONITOR_PREFIX) {
            return sem_err(
                span,
                format!("`{name}` uses the reserved prefix `{MONITOR_PREFIX}`"),
            );
        }
        Ok(())
    };
    for item in &doc.items {
        match item {
            Item::Var { name, domain, span } => {
                check_name(name, *span)?;
                if scope.vars.contains_key(name) {
                    return sem_err(*span, format!("variable `{name}` declared twice"));
                }
                let d = domain_of(domain);
                if let Domain::Enum(vals) = &d {
                    let mut seen = FxHashSet::default();
                    for v in vals {
                        if !seen.insert(*v) {
                            return sem_err(*span, format!("value `{v}` listed twice"));
                        }
                        check_name(v.as_str(), *span)?;
                    }
                    scope.symbols.extend(vals.iter().copied());
                }
                scope
                    .vars
                    .insert(name.clone(), (vars.len() as VarId, d.clone()));
                vars.push(VarDecl {
                    name: name.clone(),
                    domain: d,
                });
            }
            Item::Event {
                name,
                observable,
                span,
            } => {
                check_name(name, *span)?;
                if scope.events.contains_key(name) {
                    return sem_err(*span, format!("event `{name}` declared twice"));
                }
                scope.events.insert(name.clone(), events.len() as EventId);
                events.push(EventDecl {
                    name: name.clone(),
                    observable: *observable,
                });
            }
            Item::Define { name, body, span } => {
                check_name(name, *span)?;
                if scope.vars.contains_key(name)
                    || bodies.insert(name.clone(), body.clone()).is_some()
                {
                    return sem_err(*span, format!("`{name}` is already declared"));
                }
                define_order.push((name.clone(), *span));
            }
            _ => {}
        }
    }
    for v in &vars {
        if let Domain::Enum(vals) = &v.domain {
            for s in vals {
                if scope.vars.contains_key(s.as_str()) || bodies.contains_key(s.as_str()) {
                    return sem_err(
                        Span::default(),
                        format!("value `{s}` clashes with a variable or define"),
                    );
                }
            }
        }
    }
    let pending = Pending {
        bodies: &bodies,
        stack: Default::default(),
        done: Default::default(),
    };
    for (name, span) in &define_order {
        let r = Resolver {
            scope: &scope,
            primes: false,
            pending: Some(&pending),
        };
        let sx = SExpr::new(SKind::Ident(name.clone()), *span);
        r.term(&sx)?;
    }
    scope.defines = pending.done.into_inner();

    let mut init = Vec::new();
    let mut init_span = Span::default();
    let mut rules = Vec::new();
    for item in &doc.items {
        match item {
            Item::Init { expr, span } => {
                init_span = *span;
                init.push(scope.predicate(expr)?);
            }
            Item::Trans {
                event,
                guard,
                updates,
                span,
            } => {
                let Some(ev) = scope.event(event) else {
                    return Err(LoadError::Undeclared {
                        span: *span,
                        what: "event",
                        name: event.clone(),
                    });
                };
                let guard = match guard {
                    Some(g) => scope.predicate(g)?,
                    None => Expr::bool(true),
                };
                let r = Resolver {
                    scope: &scope,
                    primes: true,
                    pending: None,
                };
                let mut ups = Vec::new();
                let mut assigned = FxHashSet::default();
                for u in updates {
                    let Some((v, d)) = scope.var(&u.var) else {
                        return Err(LoadError::Undeclared {
                            span: u.span,
                            what: "variable",
                            name: u.var.clone(),
                        });
                    };
                    if !assigned.insert(v) {
                        return sem_err(
                            u.span,
                            format!("`{}` is updated twice in one rule", u.var),
                        );
                    }
                    let rhs = r.expect(&u.rhs, d.ty())?;
                    check_constant(&rhs, d, &u.var, u.rhs.span)?;
                    ups.push((v, rhs));
                }
                rules.push(Rule {
                    event: ev,
                    guard,
                    updates: ups,
                });
            }
            _ => {}
        }
    }
    let lts = Lts::new(doc.name.clone(), vars, events, Expr::and(init), rules).map_err(|e| {
        LoadError::Semantic {
            span: Span::default(),
            msg: e.to_string(),
        }
    })?;
    if !lts.init_satisfiable() {
        return sem_err(init_span, "initial condition is unsatisfiable");
    }
    Ok(Model { doc, lts, scope })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::{reachable_graph, DEFAULT_STATE_CAP};

    const TOY: &str = "model toy1\nvar x : {a, b, c}\nevent u\nevent f\nevent o obs\nevent p obs\ninit x = a\n\
                       trans u : x = a => x' = b\ntrans f : x = a => x' = c\ntrans o : x = b\ntrans p : x = c\n";

    #[test]
    fn loads_toy() {
        let m = load_model(TOY).unwrap();
        assert_eq!(m.lts.vars.len(), 1);
        assert_eq!(reachable_graph(&m.lts, DEFAULT_STATE_CAP).unwrap().len(), 3);
        assert!(m.lts.is_observable(m.lts.event_id("o").unwrap()));
    }

    #[test]
    fn domain_error_is_positioned() {
        let src = TOY.replace("init x = a", "init x = d");
        let err = load_model(&src).unwrap_err();
        assert!(
            matches!(err, LoadError::Undeclared { .. } | LoadError::Domain { .. }),
            "{err}"
        );
        let src = "var x : {a, b, c}\nvar y : {d}\nevent e\ninit x = d\n";
        let err = load_model(src).unwrap_err();
        assert_eq!(err.to_string(), "4:10: `d` is not a value of `x`");
    }

    #[test]
    fn semantic_errors() {
        let cases = [
            ("var x : bool\ninit x & !x\n", "unsatisfiable"),
            ("var x : bool\nvar x : bool\n", "declared twice"),
            ("var __m_a : bool\n", "reserved prefix"),
            (
                "var x : bool\nevent e\ntrans e => y' = true\n",
                "undeclared variable `y`",
            ),
            ("var x : 0..3\nevent e\ntrans e => x' = 7\n", "not a value"),
            (
                "var x : 0..3\nevent e\ntrans e => x' = true\n",
                "expected int",
            ),
            (
                "var x : bool\ndefine a := b\ndefine b := a\n",
                "refers to itself",
            ),
            ("var x : bool\ninit x'\n", "outside an update"),
            ("var x : {a, b}\nvar a : bool\n", "clashes"),
            ("var x : bool\ninit Y x\n", "temporal"),
        ];
        for (src, needle) in cases {
            let err = load_model(src).unwrap_err().to_string();
            assert!(err.contains(needle), "{src:?}: {err}");
        }
    }

    #[test]
    fn defines_resolve_in_any_order() {
        let src = "var n : 0..3\ndefine big := high | n = 2\ndefine high := n > 2\ninit big\n";
        let m = load_model(src).unwrap();
        assert_eq!(m.lts.initial_states(16).unwrap().len(), 2);
    }

    #[test]
    fn past_resolution() {
        let m = load_model(TOY).unwrap();
        let f = resolve_past(&parse_expr("Y event:f | O<=2 x = c").unwrap(), &m.scope).unwrap();
        assert!(matches!(f, Past::Or(..)));
        let err = resolve_past(&parse_expr("event:f").unwrap(), &m.scope).unwrap_err();
        assert!(err.to_string().contains("guarded by Y"));
        let err = resolve_past(&parse_expr("Y O event:f").unwrap(), &m.scope).unwrap_err();
        assert!(err.to_string().contains("guarded by Y"));
        assert!(resolve_past(&parse_expr("Y^2 (event:u & x = b)").unwrap(), &m.scope).is_ok());
        let err = resolve_past(&parse_expr("(Y x = a) = (x = b)").unwrap(), &m.scope).unwrap_err();
        assert!(err.to_string().contains("comparison"));
        let err = resolve_past(&parse_expr("Y event:zz").unwrap(), &m.scope).unwrap_err();
        assert!(err.to_string().contains("undeclared event"));
    }
}
