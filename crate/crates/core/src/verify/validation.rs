//! Model-relative validation of alarms: possibility, subsumption and mutual
//! exclusion, optionally under a state invariant assumed of the plant.

use super::product::{Input, Product};
use super::{path_counterexample, Check, CheckResult, DiagSide, VerifyError, VerifyOptions};
use crate::expr::Expr;
use crate::kernel::{reachable_graph, Lts, StateGraph};

struct Composed {
    graph: StateGraph,
    diag: DiagSide,
    prod: Product,
}

fn compose(
    plant: &Lts,
    diag: &Lts,
    assume: Option<&Expr>,
    opts: VerifyOptions,
) -> Result<Composed, VerifyError> {
    let graph = reachable_graph(plant, opts.state_cap)?;
    let side = DiagSide::new(plant, diag, opts.state_cap)?;
    let observable: Vec<bool> = plant.events.iter().map(|e| e.observable).collect();
    let allowed: Vec<bool> = graph
        .states()
        .iter()
        .map(|s| assume.is_none_or(|a| plant.holds(a, s)))
        .collect();
    let keep = |p: u32| allowed[p as usize];
    let prod = Product::build(&Input {
        plant: &graph,
        observable: &observable,
        diag: Some(side.as_input()),
        beliefs: None,
        keep: Some(&keep),
        cap: opts.state_cap,
    })?;
    Ok(Composed {
        graph,
        diag: side,
        prod,
    })
}

impl Composed {
    /// `⟨A⟩` per product node.
    fn observed(&self, alarm: &str) -> Result<Vec<bool>, VerifyError> {
        let vals = self.diag.alarm_values(alarm)?;
        Ok(self
            .prod
            .nodes
            .iter()
            .map(|n| n.obs && vals[n.d as usize])
            .collect())
    }
}

/// Passes when the alarm can be raised and can be not raised.
pub fn check_possibility(
    plant: &Lts,
    diag: &Lts,
    alarm: &str,
    assume: Option<&Expr>,
    opts: VerifyOptions,
) -> Result<CheckResult, VerifyError> {
    let c = compose(plant, diag, assume, opts)?;
    let a = c.observed(alarm)?;
    let r = CheckResult::new(Check::Possibility, Some(alarm));
    if !a.iter().any(|&x| x) {
        return Ok(r.fail("the alarm is never raised", None));
    }
    if a.iter().all(|&x| x) {
        return Ok(r.fail("the alarm is always raised", None));
    }
    Ok(r)
}

/// Passes when `a1` is raised only where `a2` is.
pub fn check_subsumption(
    plant: &Lts,
    diag: &Lts,
    a1: &str,
    a2: &str,
    assume: Option<&Expr>,
    opts: VerifyOptions,
) -> Result<CheckResult, VerifyError> {
    let c = compose(plant, diag, assume, opts)?;
    let (x, y) = (c.observed(a1)?, c.observed(a2)?);
    let mut r = CheckResult::new(Check::Subsumption, Some(a1));
    r.formula = Some(format!("G(<{a1}> -> <{a2}>)"));
    Ok(match c.prod.find(|n| x[n as usize] && !y[n as usize]) {
        None => r,
        Some(p) => {
            let cex = path_counterexample(plant, plant, &c.graph, Some(&c.diag), &c.prod, &p);
            r.fail(
                format!(
                    "`{a1}` raised without `{a2}` at position {}",
                    p.nodes.len() - 1
                ),
                Some(cex),
            )
        }
    })
}

/// Passes when `a1` and `a2` are never raised together.
pub fn check_mutual_exclusion(
    plant: &Lts,
    diag: &Lts,
    a1: &str,
    a2: &str,
    assume: Option<&Expr>,
    opts: VerifyOptions,
) -> Result<CheckResult, VerifyError> {
    let c = compose(plant, diag, assume, opts)?;
    let (x, y) = (c.observed(a1)?, c.observed(a2)?);
    let mut r = CheckResult::new(Check::MutualExclusion, Some(a1));
    r.formula = Some(format!("G(!(<{a1}> & <{a2}>))"));
    Ok(match c.prod.find(|n| x[n as usize] && y[n as usize]) {
        None => r,
        Some(p) => {
            let cex = path_counterexample(plant, plant, &c.graph, Some(&c.diag), &c.prod, &p);
            r.fail(
                format!(
                    "`{a1}` and `{a2}` raised together at position {}",
                    p.nodes.len() - 1
                ),
                Some(cex),
            )
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models;
    use crate::synth::{emit_diagnoser, synthesize, SynthOptions};

    fn fixture(f: models::Fixture) -> (Lts, Lts) {
        let (m, specs) = f.load().unwrap();
        let s = synthesize(&m.lts, &specs, SynthOptions::default()).unwrap();
        (m.lts, emit_diagnoser(&s.diagnoser).unwrap().lts)
    }

    #[test]
    fn toy_possibility() {
        let (p, d) = fixture(models::TOY1);
        let o = VerifyOptions::default();
        assert!(check_possibility(&p, &d, "A_f", None, o).unwrap().passed());
        // Pinning the plant to the fault branch still leaves undetected points.
        let m = crate::syntax::load_model(models::TOY1.model).unwrap();
        let pin = m
            .scope
            .predicate(&crate::syntax::parse_expr("x != b").unwrap())
            .unwrap();
        assert!(check_possibility(&p, &d, "A_f", Some(&pin), o)
            .unwrap()
            .passed());
        let never = m
            .scope
            .predicate(&crate::syntax::parse_expr("x != c").unwrap())
            .unwrap();
        assert!(check_possibility(&p, &d, "A_f", Some(&never), o)
            .unwrap()
            .failed());
    }

    #[test]
    fn annotation_pairs_are_exclusive() {
        let (p, d) = fixture(models::TOY1);
        let o = VerifyOptions::default();
        assert!(check_mutual_exclusion(&p, &d, "A_f", "A_f_neg", None, o)
            .unwrap()
            .passed());
        assert!(check_subsumption(&p, &d, "A_f", "A_f", None, o)
            .unwrap()
            .passed());
    }

    #[test]
    fn two_faults_do_not_subsume() {
        let (p, d) = fixture(models::TWO_FAULT);
        let r = check_subsumption(&p, &d, "A1", "A2", None, VerifyOptions::default()).unwrap();
        assert!(r.failed());
        let cex = r.counterexample.unwrap();
        assert!(cex.trace.validate(&p).is_ok());
        assert_eq!(
            cex.trace.render(&p),
            "(x1=ok, x2=ok) -f1-> (x1=bad, x2=ok) -r1-> (x1=seen, x2=ok)"
        );
    }

    #[test]
    fn unknown_alarm_is_an_interface_error() {
        let (p, d) = fixture(models::TOY1);
        let err = check_possibility(&p, &d, "nope", None, VerifyOptions::default()).unwrap_err();
        assert!(matches!(err, VerifyError::Interface(_)));
    }
}
