//! Pretty printer. Output re-parses to a structurally equal document.

use std::fmt::Write;

use super::*;

const UNARY: u8 = 5;
const NEG: u8 = 8;
const ATOM: u8 = 9;

fn prec(e: &SExpr) -> u8 {
    match &e.kind {
        // `if` extends as far right as possible, so nested uses are bracketed.
        SKind::Ite(..) => 0,
        SKind::Bin(op, ..) => op.prec(),
        SKind::Not(_) | SKind::Y(..) | SKind::O(..) => UNARY,
        SKind::Neg(_) => NEG,
        SKind::Int(v) if *v < 0 => NEG,
        _ => ATOM,
    }
}

fn write_expr(out: &mut String, e: &SExpr, min: u8) {
    let paren = prec(e) < min;
    if paren {
        out.push('(');
    }
    match &e.kind {
        SKind::Bool(b) => write!(out, "{b}").unwrap(),
        SKind::Int(v) => write!(out, "{v}").unwrap(),
        SKind::Ident(n) => out.push_str(n),
        SKind::Primed(n) => write!(out, "{n}'").unwrap(),
        SKind::Event(n) => write!(out, "event:{n}").unwrap(),
        SKind::Not(a) => {
            out.push('!');
            write_expr(out, a, UNARY);
        }
        SKind::Neg(a) => {
            out.push('-');
            write_expr(out, a, ATOM);
        }
        SKind::Y(n, a) => {
            if *n == 1 {
                out.push_str("Y ");
            } else {
                write!(out, "Y^{n} ").unwrap();
            }
            write_expr(out, a, UNARY);
        }
        SKind::O(bound, a) => {
            match bound {
                None => out.push_str("O "),
                Some(n) => write!(out, "O<={n} ").unwrap(),
            }
            write_expr(out, a, UNARY);
        }
        SKind::Bin(op, a, b) => {
            let p = op.prec();
            let (lmin, rmin) = match op {
                BinOp::Implies => (p + 1, p),
                _ if op.is_comparison() => (p + 1, p + 1),
                _ => (p, p + 1),
            };
            write_expr(out, a, lmin);
            write!(out, " {} ", op.text()).unwrap();
            write_expr(out, b, rmin);
        }
        SKind::Call(f, a, b) => {
            out.push_str(match f {
                Func::Min => "min(",
                Func::Max => "max(",
            });
            write_expr(out, a, 0);
            out.push_str(", ");
            write_expr(out, b, 0);
            out.push(')');
        }
        SKind::Ite(c, t, el) => {
            out.push_str("if ");
            write_expr(out, c, 0);
            out.push_str(" then ");
            write_expr(out, t, 0);
            out.push_str(" else ");
            write_expr(out, el, 0);
        }
    }
    if paren {
        out.push(')');
    }
}

pub fn expr_to_string(e: &SExpr) -> String {
    let mut s = String::new();
    write_expr(&mut s, e, 0);
    s
}

fn domain_to_string(d: &DomainSpec) -> String {
    match d {
        DomainSpec::Bool => "bool".into(),
        DomainSpec::Range(lo, hi) => format!("{lo}..{hi}"),
        DomainSpec::Enum(v) => format!("{{{}}}", v.join(", ")),
    }
}

pub fn model_to_string(doc: &ModelDoc) -> String {
    let mut out = String::new();
    if !doc.name.is_empty() {
        writeln!(out, "model {}\n", doc.name).unwrap();
    }
    for item in &doc.items {
        match item {
            Item::Var { name, domain, .. } => {
                writeln!(out, "var {name} : {}", domain_to_string(domain)).unwrap()
            }
            Item::Event {
                name, observable, ..
            } => writeln!(out, "event {name}{}", if *observable { " obs" } else { "" }).unwrap(),
            Item::Define { name, body, .. } => writeln!(out, "define {name} := {body}").unwrap(),
            Item::Init { expr, .. } => writeln!(out, "init {expr}").unwrap(),
            Item::Trans {
                event,
                guard,
                updates,
                ..
            } => {
                write!(out, "trans {event}").unwrap();
                if let Some(g) = guard {
                    write!(out, " : {g}").unwrap();
                }
                if !updates.is_empty() {
                    let ups: Vec<String> = updates
                        .iter()
                        .map(|u| format!("{}' = {}", u.var, u.rhs))
                        .collect();
                    write!(out, " => {}", ups.join(", ")).unwrap();
                }
                out.push('\n');
            }
        }
    }
    out
}

pub fn spec_to_string(doc: &SpecDoc) -> String {
    let mut out = String::new();
    for a in &doc.alarms {
        let pattern = match a.pattern {
            PatternKind::ExactDel => format!("exactdel({}, {})", a.beta, a.delay),
            PatternKind::BoundDel => format!("bounddel({}, {})", a.beta, a.delay),
            PatternKind::FiniteDel => format!("finitedel({})", a.beta),
        };
        let diag = match a.diag {
            Diag::System => "system",
            Diag::Trace => "trace",
        };
        writeln!(
            out,
            "alarm {} : {pattern} diag={diag}{}",
            a.name,
            if a.maximal { " maximal" } else { "" }
        )
        .unwrap();
    }
    out
}
