//! Acceptance criteria. Prints one line per criterion and exits nonzero if
//! any of them fails.

use std::collections::BTreeSet;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::{Duration, Instant};

use kdiag::aslk::{expand_full, AlarmSpec, Diag, Pattern, Role};
use kdiag::epistemic::{find_trace_with_obs, knows_bruteforce, KVerdict, OracleOptions};
use kdiag::expr::TRUE;
use kdiag::gen::{random_beta, random_plant, random_predicate, state_count, PlantParams};
use kdiag::kernel::{EventId, Lts};
use kdiag::models;
use kdiag::pastltl::Past;
use kdiag::synth::{emit_diagnoser, synthesize, u_closure, Diagnoser, SynthOptions, Synthesis};
use kdiag::verify::{
    check_alarm_implies_knowledge, check_correctness, check_determinism, check_diagnosability,
    check_maximality, check_mutual_exclusion, check_subsumption, twin_plant_diagnosable,
    verify_spec, SpecCheck, VerifyOptions,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;

const OPTS: VerifyOptions = VerifyOptions {
    state_cap: 1 << 22,
    belief_cap: 1 << 18,
};

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn within(t: Instant, limit: Duration) -> Result<(), String> {
    ensure(t.elapsed() < limit, || {
        format!("took {:.1?}, limit {limit:?}", t.elapsed())
    })
}

fn synth(plant: &Lts, specs: &[AlarmSpec]) -> Result<Synthesis, String> {
    synthesize(plant, specs, SynthOptions::default()).map_err(|e| e.to_string())
}

fn emit(d: &Diagnoser) -> Result<Lts, String> {
    emit_diagnoser(d).map(|m| m.lts).map_err(|e| e.to_string())
}

/// Short battery state names: health, mode and power initials, with a
/// trailing `~` for not charging.
fn battery_name(plant: &Lts, s: &[u32]) -> String {
    let a = plant.assignment(s);
    let v = |n: &str| {
        a.iter()
            .find(|(k, _)| k == n)
            .map(|(_, v)| v.clone())
            .unwrap()
    };
    let h = if v("health") == "nominal" { "N" } else { "F" };
    let m = match v("mode").as_str() {
        "primary" => "P",
        "offline" => "O",
        _ => "D",
    };
    let p = if v("power") == "charging" { "C" } else { "C~" };
    format!("{h}{m}{p}")
}

fn figure_fidelity() -> Outcome {
    let t = Instant::now();
    let (m, specs) = models::SIMPLIFIED_BATTERY
        .load()
        .map_err(|e| e.to_string())?;
    let s = synth(&m.lts, &specs)?;
    let mp = &s.monitored;
    let ba = &s.diagnoser.automaton;
    let names = |ids: &[u32]| -> BTreeSet<String> {
        ids.iter()
            .map(|&i| battery_name(&m.lts, mp.project(mp.graph.state(i))))
            .collect()
    };
    let set = |xs: &[&str]| -> BTreeSet<String> { xs.iter().map(|x| x.to_string()).collect() };
    let closure = names(&u_closure(mp, ba.belief(0)));
    ensure(closure == set(&["NPC", "NPC~", "FPC", "FPC~"]), || {
        format!("initial closure {closure:?}")
    })?;
    let off = m.lts.event_id("Off").unwrap();
    let succ = ba
        .successor(0, off)
        .ok_or("no Off edge from the initial belief")?;
    let after_off = names(ba.belief(succ));
    ensure(after_off == set(&["NPC~", "FPC", "FPC~"]), || {
        format!("Off successor {after_off:?}")
    })?;
    for a in ["A_NC", "A_N"] {
        let l = s.diagnoser.label(0, a).ok_or(format!("no alarm {a}"))?;
        ensure(l.pos && !l.neg, || format!("initial {a} = {l:?}"))?;
    }
    let edges: BTreeSet<String> = ba
        .edges(0)
        .iter()
        .map(|&(e, _)| m.lts.event_name(e).to_string())
        .collect();
    ensure(edges == set(&["Offline", "Double", "Off"]), || {
        format!("initial edges {edges:?}")
    })?;
    within(t, Duration::from_secs(1))?;
    Ok(format!("{} beliefs, {:.0?}", ba.len(), t.elapsed()))
}

/// One spec per pattern kind with independent conditions and modes.
fn specs_for(rng: &mut ChaCha8Rng, plant: &Lts) -> Vec<AlarmSpec> {
    let patterns = [
        Pattern::ExactDel(rng.gen_range(0..=2)),
        Pattern::BoundDel(rng.gen_range(0..=3)),
        Pattern::FiniteDel,
    ];
    patterns
        .iter()
        .enumerate()
        .map(|(i, &p)| {
            let beta = random_beta(rng, plant);
            let diag = if rng.gen_bool(0.5) {
                Diag::Trace
            } else {
                Diag::System
            };
            AlarmSpec::new(format!("A{i}"), p, beta, diag, rng.gen_bool(0.5))
        })
        .collect()
}

fn theorem_suite() -> Outcome {
    let t = Instant::now();
    let (mut checks, mut system_specs, mut undiagnosable, mut raised) = (0, 0, 0, 0);
    for seed in 0..120 {
        let mut r = rng(seed);
        let plant = random_plant(&mut r, PlantParams::default());
        let specs = specs_for(&mut r, &plant);
        let fail = |what: &str, detail: String| format!("seed {seed}: {what} {detail}");
        let s = synth(&plant, &specs).map_err(|e| fail("synthesis", e))?;
        raised += (0..specs.len())
            .filter(|&i| s.diagnoser.labels.iter().any(|l| l[i].pos))
            .count();
        let d = emit(&s.diagnoser)?;
        let det = check_determinism(&d, Some(&plant), OPTS.state_cap).map_err(|e| e.to_string())?;
        ensure(det.passed(), || fail("determinism", det.detail.clone()))?;
        for spec in &specs {
            let err = |e: kdiag::verify::VerifyError| fail(&spec.name, e.to_string());
            let sc = SpecCheck::new(&plant, &d, spec, OPTS).map_err(err)?;
            let cor = check_correctness(&plant, &d, spec, OPTS).map_err(err)?;
            ensure(cor.passed(), || {
                fail("correctness", format!("{}: {}", spec.name, cor.detail))
            })?;
            let max = check_maximality(&plant, &d, spec, OPTS).map_err(err)?;
            ensure(max.passed(), || {
                fail("maximality", format!("{}: {}", spec.name, max.detail))
            })?;
            let aik = check_alarm_implies_knowledge(&plant, &d, spec, OPTS).map_err(err)?;
            ensure(aik.passed(), || {
                fail("alarm implies knowledge", spec.name.clone())
            })?;
            let plan = expand_full(spec);
            let ob = plan
                .obligations
                .iter()
                .find(|o| o.role == Role::Completeness)
                .unwrap();
            let comp = sc.check(ob).map_err(err)?;
            match spec.diag {
                Diag::Trace => ensure(comp.passed(), || {
                    fail("completeness", format!("{}: {}", spec.name, comp.detail))
                })?,
                Diag::System => {
                    system_specs += 1;
                    let diagnosable = check_diagnosability(&plant, spec, OPTS)
                        .map_err(err)?
                        .system;
                    undiagnosable += !diagnosable as usize;
                    ensure(comp.passed() == diagnosable, || {
                        fail(
                            "completeness",
                            format!(
                                "{}: passed={} diagnosable={diagnosable}",
                                spec.name,
                                comp.passed()
                            ),
                        )
                    })?;
                }
            }
            checks += 5;
        }
    }
    within(t, Duration::from_secs(300))?;
    Ok(format!(
        "120 plants, 360 specs ({raised} ever raised, {system_specs} system, {undiagnosable} of them undiagnosable), \
         {checks} checks, {:.1?}",
        t.elapsed()
    ))
}

fn oracle_equivalence() -> Outcome {
    let params = PlantParams {
        max_states: 6,
        ..PlantParams::default()
    };
    let oracle = OracleOptions::default();
    let mut points = 0;
    for seed in 0..60 {
        let mut r = rng(1000 + seed);
        let plant = random_plant(&mut r, params);
        let p = random_predicate(&mut r, &plant);
        let spec = AlarmSpec::new(
            "K",
            Pattern::ExactDel(0),
            Past::Atom(p.clone()),
            Diag::Trace,
            true,
        );
        let s = synth(&plant, &[spec])?;
        let (mp, ba) = (&s.monitored, &s.diagnoser.automaton);
        let obs: Vec<EventId> = plant.observable_events().collect();
        let mut frontier: Vec<(u32, Vec<EventId>)> = vec![(0, Vec::new())];
        for _ in 0..5 {
            let mut next = Vec::new();
            for (b, word) in &frontier {
                for &e in &obs {
                    let mut w = word.clone();
                    w.push(e);
                    let run = find_trace_with_obs(&plant, &w, true, &TRUE, 1 << 12)
                        .map_err(|e| e.to_string())?;
                    let Some(bn) = ba.successor(*b, e) else {
                        ensure(run.is_none(), || {
                            format!("seed {seed}: run for {w:?} without a belief")
                        })?;
                        continue;
                    };
                    let run =
                        run.ok_or_else(|| format!("seed {seed}: belief for {w:?} without a run"))?;
                    let members = ba
                        .belief(bn)
                        .iter()
                        .map(|&i| plant.holds(&p, mp.project(mp.graph.state(i))));
                    let unanimity = KVerdict::of(members);
                    let brute = knows_bruteforce(&plant, &p, &run, run.len(), oracle)
                        .map_err(|e| e.to_string())?;
                    ensure(unanimity == brute, || {
                        format!(
                            "seed {seed}: {} gives {unanimity:?}, oracle {brute:?}",
                            run.render(&plant)
                        )
                    })?;
                    points += 1;
                    next.push((bn, w));
                }
            }
            frontier = next;
        }
    }
    Ok(format!(
        "60 plants, {points} observation points, 0 mismatches"
    ))
}

fn sampath() -> Outcome {
    let params = PlantParams {
        no_unobservable_cycle: true,
        ..PlantParams::default()
    };
    let (mut agree, mut diagnosable, mut widest) = (0, 0, 0);
    for seed in 0..40 {
        let mut r = rng(2000 + seed);
        let plant = random_plant(&mut r, params);
        let p = random_predicate(&mut r, &plant);
        let twin = twin_plant_diagnosable(&plant, &p, OPTS.state_cap)
            .map_err(|e| e.to_string())?
            .is_diagnosable();
        let n = state_count(&plant);
        let mut bounded = false;
        for d in 0..=n {
            let spec = AlarmSpec::new(
                "S",
                Pattern::BoundDel(d),
                Past::o(Past::Atom(p.clone())),
                Diag::System,
                false,
            );
            if check_diagnosability(&plant, &spec, OPTS)
                .map_err(|e| e.to_string())?
                .system
            {
                bounded = true;
                widest = widest.max(d);
                break;
            }
        }
        ensure(twin == bounded, || {
            format!(
                "seed {}: twin plant {twin}, bounded delay {bounded}",
                2000 + seed
            )
        })?;
        agree += 1;
        diagnosable += twin as usize;
    }
    Ok(format!(
        "{agree} plants agree ({diagnosable} diagnosable, largest delay needed {widest})"
    ))
}

fn subsumption() -> Outcome {
    let (m, specs) = models::DELAY.load().map_err(|e| e.to_string())?;
    let s = synth(&m.lts, &specs)?;
    let d = emit(&s.diagnoser)?;
    let e = |e: kdiag::verify::VerifyError| e.to_string();
    let pe_pb = check_subsumption(&m.lts, &d, "PE", "PB", None, OPTS).map_err(e)?;
    ensure(pe_pb.passed(), || format!("PE below PB: {}", pe_pb.detail))?;
    let pb_pe = check_subsumption(&m.lts, &d, "PB", "PE", None, OPTS).map_err(e)?;
    ensure(pb_pe.failed() && pb_pe.counterexample.is_some(), || {
        "PB below PE did not fail with a witness".into()
    })?;
    let excl = check_mutual_exclusion(&m.lts, &d, "PE", "PB", None, OPTS).map_err(e)?;
    ensure(excl.failed(), || "PE and PB reported exclusive".into())?;
    let w = pb_pe.counterexample.unwrap().trace.render(&m.lts);
    Ok(format!(
        "PE below PB, PB not below PE (witness {w}), not exclusive"
    ))
}

fn synchronous_embedding() -> Outcome {
    let mut n = 0;
    let run = |plant: &Lts, specs: &[AlarmSpec]| -> Result<usize, String> {
        let all = plant.with_observability(|_| true);
        match catch_unwind(AssertUnwindSafe(|| {
            synthesize(&all, specs, SynthOptions::default())
        })) {
            Ok(Ok(s)) => Ok(s.diagnoser.len()),
            Ok(Err(e)) => Err(e.to_string()),
            Err(_) => Err(format!("closure differed from a belief in {}", plant.name)),
        }
    };
    for seed in 0..100 {
        let mut r = rng(3000 + seed);
        let plant = random_plant(&mut r, PlantParams::default());
        let specs = specs_for(&mut r, &plant);
        n += run(&plant, &specs)?;
    }
    for f in models::ALL {
        let (m, specs) = f.load().map_err(|e| e.to_string())?;
        n += run(&m.lts, &specs)?;
    }
    Ok(format!(
        "{n} beliefs over 100 random plants and {} fixtures",
        models::ALL.len()
    ))
}

fn mutation() -> Outcome {
    let (mut mutants, mut killed, mut seed) = (0, 0, 4000);
    let mut used = 0;
    while used < 20 {
        seed += 1;
        ensure(seed < 4500, || {
            format!("only {used} seeds with both mutation sites")
        })?;
        let mut r = rng(seed);
        let plant = random_plant(&mut r, PlantParams::default());
        let spec = AlarmSpec::new(
            "A",
            kdiag::gen::random_pattern(&mut r),
            random_beta(&mut r, &plant),
            Diag::Trace,
            true,
        );
        let s = synth(&plant, std::slice::from_ref(&spec))?;
        let d = &s.diagnoser;
        // Beliefs entered by an observation.
        let mut entered = vec![false; d.len()];
        for b in 0..d.len() as u32 {
            for &(_, t) in d.automaton.edges(b) {
                entered[t as usize] = true;
            }
        }
        let site = |pos: bool| (0..d.len()).find(|&b| entered[b] && d.labels[b][0].pos == pos);
        let (Some(set), Some(clear)) = (site(true), site(false)) else {
            continue;
        };
        used += 1;
        let mut cleared = d.clone();
        cleared.labels[set][0].pos = false;
        let mut forced = d.clone();
        forced.labels[clear][0].pos = true;
        let e = |e: kdiag::verify::VerifyError| e.to_string();
        mutants += 2;
        killed += check_maximality(&plant, &emit(&cleared)?, &spec, OPTS)
            .map_err(e)?
            .failed() as usize;
        killed += check_correctness(&plant, &emit(&forced)?, &spec, OPTS)
            .map_err(e)?
            .failed() as usize;
    }
    ensure(killed == mutants, || {
        format!("killed {killed} of {mutants} mutants")
    })?;
    Ok(format!("{killed}/{mutants} mutants killed over 20 seeds"))
}

fn bss() -> Outcome {
    let t = Instant::now();
    let (m, specs) = models::BSS.load().map_err(|e| e.to_string())?;
    let s = synth(&m.lts, &specs)?;
    let synth_time = t.elapsed();
    ensure(synth_time < Duration::from_secs(60), || {
        format!("synthesis took {synth_time:.1?}")
    })?;
    let e = |e: kdiag::verify::VerifyError| e.to_string();
    let leak = specs
        .iter()
        .find(|s| s.name == "B1Leak")
        .ok_or("no B1Leak alarm")?;
    let r = check_diagnosability(&m.lts, leak, OPTS).map_err(e)?;
    ensure(r.trace && !r.system, || {
        format!("B1Leak trace={} system={}", r.trace, r.system)
    })?;
    let d = emit(&s.diagnoser)?;
    let det = check_determinism(&d, Some(&m.lts), OPTS.state_cap).map_err(e)?;
    ensure(det.passed(), || det.detail.clone())?;
    let mut n = 0;
    for spec in specs.iter().filter(|s| s.diag == Diag::Trace) {
        for r in verify_spec(&m.lts, &d, spec, OPTS).map_err(e)? {
            ensure(r.passed(), || {
                format!("{} {:?}: {}", spec.name, r.check, r.detail)
            })?;
            n += 1;
        }
    }
    Ok(format!(
        "{} states, {} beliefs, synthesis {synth_time:.1?}, {n} trace checks pass, total {:.1?}",
        s.monitored.graph.len(),
        s.diagnoser.len(),
        t.elapsed()
    ))
}

fn main() {
    type Criterion = (&'static str, fn() -> Outcome);
    let criteria: [Criterion; 8] = [
        ("battery figure fidelity", figure_fidelity),
        ("theorem suite on random plants", theorem_suite),
        ("knowledge oracle equivalence", oracle_equivalence),
        ("twin plant against bounded delay", sampath),
        ("subsumption on the delay fixture", subsumption),
        ("synchronous embedding", synchronous_embedding),
        ("mutation sensitivity", mutation),
        ("battery subsystem end to end", bss),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let outcome = catch_unwind(f).unwrap_or_else(|_| Err("panicked".into()));
        match outcome {
            Ok(msg) => println!("PASS {} {name}: {msg}", i + 1),
            Err(msg) => {
                failed += 1;
                println!("FAIL {} {name}: {msg}", i + 1);
            }
        }
    }
    println!(
        "{} of {} criteria pass",
        criteria.len() - failed,
        criteria.len()
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
