//! Diagnoser output as a model document and as Graphviz.

use std::fmt::Write;

use super::Diagnoser;
use crate::syntax::{
    build_model, BinOp, DomainSpec, Item, LoadError, Model, ModelDoc, SExpr, SKind, Span, Update,
};

/// Name of the variable holding the current belief.
pub const BELIEF_VAR: &str = "__belief";

fn sx(kind: SKind) -> SExpr {
    SExpr::new(kind, Span::default())
}

fn ident(n: &str) -> SExpr {
    sx(SKind::Ident(n.into()))
}

fn bool_lit(b: bool) -> SExpr {
    sx(SKind::Bool(b))
}

fn and(a: SExpr, b: SExpr) -> SExpr {
    sx(SKind::Bin(BinOp::And, Box::new(a), Box::new(b)))
}

fn eq(a: SExpr, b: SExpr) -> SExpr {
    sx(SKind::Bin(BinOp::Eq, Box::new(a), Box::new(b)))
}

fn lit(b: bool, name: &str) -> SExpr {
    if b {
        ident(name)
    } else {
        sx(SKind::Not(Box::new(ident(name))))
    }
}

fn belief_name(b: u32) -> String {
    format!("b{b}")
}

fn neg_name(alarm: &str) -> String {
    format!("{alarm}_neg")
}

/// The diagnoser as a model: one enumerated belief variable, two boolean
/// variables per alarm, the plant's observable events and one rule per edge.
pub fn emit_diagnoser_doc(d: &Diagnoser) -> ModelDoc {
    let span = Span::default();
    let mut items = vec![Item::Var {
        name: BELIEF_VAR.into(),
        domain: DomainSpec::Enum((0..d.len() as u32).map(belief_name).collect()),
        span,
    }];
    for a in &d.alarms {
        items.push(Item::Var {
            name: a.clone(),
            domain: DomainSpec::Bool,
            span,
        });
        items.push(Item::Var {
            name: neg_name(a),
            domain: DomainSpec::Bool,
            span,
        });
    }
    for e in &d.events {
        items.push(Item::Event {
            name: e.clone(),
            observable: true,
            span,
        });
    }
    let mut init = eq(ident(BELIEF_VAR), ident(&belief_name(0)));
    for (a, v) in d.alarms.iter().zip(&d.labels[0]) {
        init = and(init, lit(v.pos, a));
        init = and(init, lit(v.neg, &neg_name(a)));
    }
    items.push(Item::Init { expr: init, span });
    for b in 0..d.len() as u32 {
        for &(e, t) in d.automaton.edges(b) {
            let mut updates = vec![Update {
                var: BELIEF_VAR.into(),
                rhs: ident(&belief_name(t)),
                span,
            }];
            for (a, v) in d.alarms.iter().zip(&d.labels[t as usize]) {
                updates.push(Update {
                    var: a.clone(),
                    rhs: bool_lit(v.pos),
                    span,
                });
                updates.push(Update {
                    var: neg_name(a),
                    rhs: bool_lit(v.neg),
                    span,
                });
            }
            items.push(Item::Trans {
                event: d.plant_events[e as usize].clone(),
                guard: Some(eq(ident(BELIEF_VAR), ident(&belief_name(b)))),
                updates,
                span,
            });
        }
    }
    ModelDoc {
        name: d.name.clone(),
        items,
    }
}

/// The diagnoser as a loaded model; fails only when an alarm name clashes
/// with a generated symbol.
pub fn emit_diagnoser(d: &Diagnoser) -> Result<Model, LoadError> {
    build_model(emit_diagnoser_doc(d))
}

fn dot_escape(s: &str) -> String {
    s.replace('\\', "\\\\").replace('"', "\\\"")
}

/// Graphviz rendering with one node per belief labeled by its alarm bits.
/// `members`, when given, adds the belief's states to each label.
pub fn diagnoser_dot(d: &Diagnoser, members: Option<&dyn Fn(u32) -> Vec<String>>) -> String {
    let mut out = String::new();
    writeln!(out, "digraph \"{}\" {{", dot_escape(&d.name)).unwrap();
    writeln!(
        out,
        "  rankdir=LR;\n  node [shape=box];\n  start [shape=point];\n  start -> b0;"
    )
    .unwrap();
    for b in 0..d.len() as u32 {
        let mut lines = vec![belief_name(b)];
        if let Some(m) = members {
            lines.push(m(b).join(", "));
        }
        for (a, v) in d.alarms.iter().zip(&d.labels[b as usize]) {
            lines.push(format!(
                "{a}={} {}={}",
                v.pos as u8,
                neg_name(a),
                v.neg as u8
            ));
        }
        let label: Vec<String> = lines.iter().map(|l| dot_escape(l)).collect();
        writeln!(out, "  b{b} [label=\"{}\"];", label.join("\\n")).unwrap();
    }
    for b in 0..d.len() as u32 {
        for &(e, t) in d.automaton.edges(b) {
            writeln!(
                out,
                "  b{b} -> b{t} [label=\"{}\"];",
                dot_escape(&d.plant_events[e as usize])
            )
            .unwrap();
        }
    }
    out.push_str("}\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::tests::toy1;
    use crate::syntax::parse_model_doc;
    use crate::synth::tests::toy_spec;
    use crate::synth::{synthesize, SynthOptions};

    #[test]
    fn toy_diagnoser_model() {
        let s = synthesize(&toy1(), &[toy_spec()], SynthOptions::default()).unwrap();
        let m = emit_diagnoser(&s.diagnoser).unwrap();
        let rules = m
            .doc
            .items
            .iter()
            .filter(|i| matches!(i, Item::Trans { .. }))
            .count();
        assert_eq!(rules, 4);
        assert_eq!(m.lts.vars.len(), 3);
        let g = crate::kernel::reachable_graph(&m.lts, 64).unwrap();
        assert_eq!(g.len(), 3);
        let text = m.doc.to_string();
        assert_eq!(parse_model_doc(&text).unwrap(), m.doc);
        assert!(text
            .contains("trans p : __belief = b0 => __belief' = b2, A_f' = true, A_f_neg' = false"));
    }

    #[test]
    fn dot_lists_alarm_bits() {
        let s = synthesize(&toy1(), &[toy_spec()], SynthOptions::default()).unwrap();
        let dot = diagnoser_dot(&s.diagnoser, None);
        assert!(dot.contains("b0 [label=\"b0\\nA_f=0 A_f_neg=1\"]"));
        assert!(dot.contains("b0 -> b2 [label=\"p\"]"));
        assert_eq!(dot.matches("->").count(), 5);
    }
}
