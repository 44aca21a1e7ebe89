//! Lockstep simulation of a plant and a diagnoser.
//!
//! A run comes from a seeded random walk or from a trace file. The timeline
//! lists, per step, the diagnosis conditions and the alarm values at that
//! position. Alarms are reported as `⟨A⟩`, so they can only rise at
//! observation points.

use rand::seq::SliceRandom;
use rand::Rng;
use serde::Serialize;
use thiserror::Error;

use crate::aslk::AlarmSpec;
use crate::kernel::{EventId, KernelError, Lts, State, TracePrefix};
use crate::pastltl::eval_at;
use crate::synth::{match_trace, SynthError};

#[derive(Debug, Error)]
pub enum SimError {
    #[error(transparent)]
    Kernel(#[from] KernelError),
    #[error(transparent)]
    Synth(#[from] SynthError),
    #[error("invalid trace at step {step}: {reason}")]
    InvalidTrace { step: usize, reason: String },
    #[error("diagnoser has no boolean variable `{0}`")]
    MissingAlarm(String),
}

/// Uniform random walk of at most `steps` transitions from a uniformly
/// chosen initial state. Stops early at a deadlock.
pub fn random_walk(lts: &Lts, rng: &mut impl Rng, steps: usize) -> Result<TracePrefix, SimError> {
    let init = lts.initial_states(u64::MAX)?;
    let s0 = init.choose(rng).ok_or_else(|| SimError::InvalidTrace {
        step: 0,
        reason: "no initial state".into(),
    })?;
    let mut trace = TracePrefix::new(s0.clone());
    let mut moves: Vec<(EventId, State)> = Vec::new();
    let mut buf = Vec::new();
    for _ in 0..steps {
        moves.clear();
        for e in 0..lts.events.len() as EventId {
            lts.step_into(trace.last(), e, &mut buf)?;
            moves.extend(buf.drain(..).map(|s| (e, s)));
        }
        let Some((e, s)) = moves.choose(rng) else {
            break;
        };
        trace.push(*e, s.clone());
    }
    Ok(trace)
}

enum Tok {
    State(String),
    Event(String),
}

fn tokens(text: &str) -> Result<Vec<Tok>, SimError> {
    let bad = |reason: String| SimError::InvalidTrace { step: 0, reason };
    let mut out = Vec::new();
    for line in text.lines() {
        let mut rest = line.split('#').next().unwrap_or("").trim_start();
        while !rest.is_empty() {
            if let Some(r) = rest.strip_prefix('(') {
                let end = r
                    .find(')')
                    .ok_or_else(|| bad(format!("unclosed state in `{line}`")))?;
                out.push(Tok::State(r[..end].to_string()));
                rest = &r[end + 1..];
            } else if let Some(r) = rest.strip_prefix('-') {
                let end = r
                    .find("->")
                    .ok_or_else(|| bad(format!("unclosed arrow in `{line}`")))?;
                out.push(Tok::Event(r[..end].trim().to_string()));
                rest = &r[end + 2..];
            } else {
                let end = rest
                    .find(|c: char| c.is_whitespace() || c == '(' || c == ',')
                    .unwrap_or(rest.len());
                out.push(Tok::Event(rest[..end].to_string()));
                rest = &rest[end..];
            }
            rest = rest.trim_start_matches(|c: char| c.is_whitespace() || c == ',');
        }
    }
    Ok(out)
}

fn parse_assignment(lts: &Lts, text: &str) -> Result<State, String> {
    let mut pairs = Vec::new();
    for part in text.split([',', ' ']).filter(|p| !p.trim().is_empty()) {
        let (n, v) = part
            .split_once('=')
            .ok_or_else(|| format!("expected `name=value`, found `{part}`"))?;
        pairs.push((n.trim().to_string(), v.trim().to_string()));
    }
    lts.parse_state(&pairs)
}

/// Reads a run written either as the rendered form `(x=a) -f-> (x=c)` or
/// as bare event names. States may be omitted wherever the successor is
/// unique.
pub fn parse_trace(lts: &Lts, text: &str) -> Result<TracePrefix, SimError> {
    let invalid = |step: usize, reason: String| SimError::InvalidTrace { step, reason };
    let mut toks = tokens(text)?.into_iter().peekable();
    let init = lts.initial_states(u64::MAX)?;
    let s0 = match toks.peek() {
        Some(Tok::State(s)) => {
            let s = parse_assignment(lts, s).map_err(|r| invalid(0, r))?;
            toks.next();
            if !init.contains(&s) {
                return Err(invalid(
                    0,
                    format!("({}) is not initial", lts.format_state(&s)),
                ));
            }
            s
        }
        _ if init.len() == 1 => init[0].clone(),
        _ => {
            return Err(invalid(
                0,
                format!("{} initial states; give the first state", init.len()),
            ))
        }
    };
    let mut trace = TracePrefix::new(s0);
    while let Some(tok) = toks.next() {
        let step = trace.len() + 1;
        let name = match tok {
            Tok::Event(n) => n,
            Tok::State(s) => return Err(invalid(step, format!("expected an event before ({s})"))),
        };
        let e = lts
            .event_id(&name)
            .ok_or_else(|| invalid(step, format!("unknown event `{name}`")))?;
        let succ = lts.step(trace.last(), e)?;
        let next = match toks.peek() {
            Some(Tok::State(s)) => {
                let s = parse_assignment(lts, s).map_err(|r| invalid(step, r))?;
                toks.next();
                if !succ.contains(&s) {
                    return Err(invalid(
                        step,
                        format!("`{name}` cannot reach ({})", lts.format_state(&s)),
                    ));
                }
                s
            }
            _ => match succ.as_slice() {
                [s] => s.clone(),
                [] => {
                    let at = lts.format_state(trace.last());
                    return Err(invalid(step, format!("`{name}` is not enabled in ({at})")));
                }
                _ => {
                    return Err(invalid(
                        step,
                        format!("`{name}` has {} successors; give the state", succ.len()),
                    ))
                }
            },
        };
        trace.push(e, next);
    }
    Ok(trace)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Row {
    pub position: usize,
    pub event: String,
    pub observable: bool,
    pub beta: Vec<bool>,
    pub alarm: Vec<bool>,
    pub alarm_neg: Vec<bool>,
    pub state: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Timeline {
    pub alarms: Vec<String>,
    pub rows: Vec<Row>,
}

fn bool_var(diag: &Lts, name: &str) -> Result<usize, SimError> {
    diag.var_id(name)
        .filter(|&v| diag.vars[v as usize].domain == crate::expr::Domain::Bool)
        .map(|v| v as usize)
        .ok_or_else(|| SimError::MissingAlarm(name.to_string()))
}

/// Runs the diagnoser along `trace` and tabulates every position after the
/// first.
pub fn timeline(
    plant: &Lts,
    diag: &Lts,
    specs: &[AlarmSpec],
    trace: &TracePrefix,
) -> Result<Timeline, SimError> {
    trace
        .validate(plant)
        .map_err(|reason| SimError::InvalidTrace { step: 0, reason })?;
    let vars: Vec<(usize, usize)> = specs
        .iter()
        .map(|s| {
            Ok((
                bool_var(diag, &s.name)?,
                bool_var(diag, &format!("{}_neg", s.name))?,
            ))
        })
        .collect::<Result<_, SimError>>()?;
    let dtrace = match_trace(diag, plant, trace)?;
    let mut rows = Vec::with_capacity(trace.len());
    let mut k = 0;
    for i in 1..=trace.len() {
        let e = trace.events[i - 1];
        let observable = plant.is_observable(e);
        if observable {
            k += 1;
        }
        let d = &dtrace.states[k];
        let beta = specs
            .iter()
            .map(|s| eval_at(&s.beta, plant, trace, i).expect("position in range"))
            .collect();
        rows.push(Row {
            position: i,
            event: plant.event_name(e).to_string(),
            observable,
            beta,
            alarm: vars.iter().map(|&(a, _)| observable && d[a] == 1).collect(),
            alarm_neg: vars.iter().map(|&(_, n)| observable && d[n] == 1).collect(),
            state: plant.format_state(&trace.states[i]),
        });
    }
    Ok(Timeline {
        alarms: specs.iter().map(|s| s.name.clone()).collect(),
        rows,
    })
}

impl Timeline {
    pub fn header(&self) -> Vec<String> {
        let mut h = vec!["position".to_string(), "event".into(), "obs".into()];
        h.extend(self.alarms.iter().map(|a| format!("beta_{a}")));
        for a in &self.alarms {
            h.push(a.clone());
            h.push(format!("{a}_neg"));
        }
        h.push("state".into());
        h
    }

    pub fn records(&self) -> impl Iterator<Item = Vec<String>> + '_ {
        let bit = |b: bool| if b { "1" } else { "0" }.to_string();
        self.rows.iter().map(move |r| {
            let mut rec = vec![r.position.to_string(), r.event.clone(), bit(r.observable)];
            rec.extend(r.beta.iter().map(|&b| bit(b)));
            for (&a, &n) in r.alarm.iter().zip(&r.alarm_neg) {
                rec.push(bit(a));
                rec.push(bit(n));
            }
            rec.push(r.state.clone());
            rec
        })
    }

    /// Column-aligned text with the state left unpadded at the end.
    pub fn to_text(&self) -> String {
        let header = self.header();
        let records: Vec<Vec<String>> = self.records().collect();
        let mut width: Vec<usize> = header.iter().map(|h| h.chars().count()).collect();
        for r in &records {
            for (w, c) in width.iter_mut().zip(r) {
                *w = (*w).max(c.chars().count());
            }
        }
        let line = |cells: &[String]| {
            let last = cells.len() - 1;
            let mut out = String::new();
            for (i, c) in cells.iter().enumerate() {
                if i == last {
                    out.push_str(c);
                } else {
                    out.push_str(&format!("{c:<w$}  ", w = width[i]));
                }
            }
            out.push('\n');
            out
        };
        let mut out = line(&header);
        for r in &records {
            out.push_str(&line(r));
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::tests::toy1;
    use crate::synth::tests::toy_spec;
    use crate::synth::{emit_diagnoser, synthesize, SynthOptions};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn toy_diag() -> Lts {
        emit_diagnoser(
            &synthesize(&toy1(), &[toy_spec()], SynthOptions::default())
                .unwrap()
                .diagnoser,
        )
        .unwrap()
        .lts
    }

    fn col(t: &Timeline, f: impl Fn(&Row) -> bool) -> Vec<bool> {
        t.rows.iter().map(f).collect()
    }

    #[test]
    fn fault_then_announcement() {
        let l = toy1();
        let tr = parse_trace(&l, "f p p").unwrap();
        let t = timeline(&l, &toy_diag(), &[toy_spec()], &tr).unwrap();
        assert_eq!(col(&t, |r| r.beta[0]), [true, true, true]);
        assert_eq!(col(&t, |r| r.alarm[0]), [false, true, true]);
        assert_eq!(col(&t, |r| r.alarm_neg[0]), [false, false, false]);
    }

    #[test]
    fn seeded_walks() {
        let l = toy1();
        let d = toy_diag();
        let f = l.event_id("f").unwrap();
        let (mut faulty, mut nominal) = (false, false);
        for seed in 0..20 {
            let tr = random_walk(&l, &mut ChaCha8Rng::seed_from_u64(seed), 4).unwrap();
            assert_eq!(tr.len(), 4);
            let t = timeline(&l, &d, &[toy_spec()], &tr).unwrap();
            if tr.events[0] == f {
                faulty = true;
                assert!(t.rows[0].beta[0] && !t.rows[0].alarm[0]);
                assert!(t.rows[1].alarm[0]);
            } else {
                nominal = true;
                assert_eq!(col(&t, |r| r.alarm[0]), [false; 4]);
                assert_eq!(col(&t, |r| r.alarm_neg[0]), [false, true, true, true]);
            }
        }
        assert!(faulty && nominal);
    }

    #[test]
    fn header_only_without_steps() {
        let l = toy1();
        let tr = random_walk(&l, &mut ChaCha8Rng::seed_from_u64(0), 0).unwrap();
        let t = timeline(&l, &toy_diag(), &[toy_spec()], &tr).unwrap();
        assert!(t.rows.is_empty());
        assert_eq!(
            t.to_text(),
            "position  event  obs  beta_A_f  A_f  A_f_neg  state\n"
        );
    }

    #[test]
    fn rendered_traces_replay() {
        let l = toy1();
        let tr = parse_trace(&l, "(x=a) -f-> (x=c)\n-p-> (x=c)  # announced\n").unwrap();
        assert_eq!(tr.render(&l), "(x=a) -f-> (x=c) -p-> (x=c)");
        assert_eq!(parse_trace(&l, &tr.render(&l)).unwrap(), tr);
    }

    #[test]
    fn invalid_traces() {
        let l = toy1();
        for (text, step) in [
            ("f o", 2),
            ("(x=b)", 0),
            ("f (x=b)", 1),
            ("zap", 1),
            ("(x=a) (x=c)", 1),
        ] {
            match parse_trace(&l, text) {
                Err(SimError::InvalidTrace { step: s, .. }) => assert_eq!(s, step, "{text}"),
                other => panic!("{text}: {other:?}"),
            }
        }
    }
}
