//! `kdiag` command-line front end.
//!
//! Exit status is 0 when every check passes, 2 when a verification or
//! validation check fails and 1 on input or engine errors.

mod report;

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use kdiag::aslk::{validate_specs, AlarmSpec, Severity};
use kdiag::expr::Expr;
use kdiag::kernel::{Lts, DEFAULT_STATE_CAP};
use kdiag::sim::{parse_trace, random_walk, timeline, Timeline};
use kdiag::syntax::{load_model, parse_expr, parse_spec_doc, Model};
use kdiag::synth::{diagnoser_dot, emit_diagnoser, synthesize, SynthOptions, DEFAULT_BELIEF_CAP};
use kdiag::verify::{
    check_determinism, check_diagnosability, check_mutual_exclusion, check_possibility,
    check_subsumption, verify_all, CheckResult, Verdict, VerifyOptions,
};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use report::{ErrorInfo, Input, Report};

#[derive(Parser)]
#[command(
    name = "kdiag",
    version,
    about = "Alarm specification, diagnosability analysis and diagnoser synthesis"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Caps {
    /// Bound on explored states.
    #[arg(long, default_value_t = DEFAULT_STATE_CAP)]
    cap_states: u64,
    /// Bound on belief states.
    #[arg(long, default_value_t = DEFAULT_BELIEF_CAP)]
    cap_beliefs: usize,
}

impl Caps {
    fn verify(&self) -> VerifyOptions {
        VerifyOptions {
            state_cap: self.cap_states,
            belief_cap: self.cap_beliefs,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Synthesize a diagnoser for every alarm of a specification.
    Synth {
        model: PathBuf,
        spec: PathBuf,
        /// Diagnoser model output; printed on stdout when absent.
        #[arg(short, long)]
        output: Option<PathBuf>,
        /// Graphviz rendering of the diagnoser.
        #[arg(long)]
        dot: Option<PathBuf>,
        #[arg(long)]
        report: Option<PathBuf>,
        /// Verify the result against the specification.
        #[arg(long)]
        verify: bool,
        /// Record wall time in the report.
        #[arg(long)]
        timings: bool,
        #[command(flatten)]
        caps: Caps,
    },
    /// Check a diagnoser against a specification.
    Verify {
        model: PathBuf,
        spec: PathBuf,
        diagnoser: PathBuf,
        #[arg(long)]
        report: Option<PathBuf>,
        #[command(flatten)]
        caps: Caps,
    },
    /// Decide system and trace diagnosability of each alarm condition.
    Diagnosability {
        model: PathBuf,
        spec: PathBuf,
        /// Only this alarm.
        #[arg(long)]
        alarm: Option<String>,
        #[arg(long)]
        report: Option<PathBuf>,
        #[command(flatten)]
        caps: Caps,
    },
    /// Check possibility, subsumption and exclusion between alarms.
    Validate {
        model: PathBuf,
        spec: PathBuf,
        diagnoser: PathBuf,
        /// Alarm that must be raisable and not always raised; all alarms
        /// when no check is given.
        #[arg(long, value_name = "ALARM")]
        possible: Vec<String>,
        /// `A:B`, every raise of A is a raise of B.
        #[arg(long, value_name = "A:B")]
        subsumes: Vec<String>,
        /// `A:B`, never raised together.
        #[arg(long, value_name = "A:B")]
        exclusive: Vec<String>,
        /// Restrict the plant to states satisfying this predicate.
        #[arg(long)]
        assume: Option<String>,
        #[arg(long)]
        report: Option<PathBuf>,
        #[command(flatten)]
        caps: Caps,
    },
    /// Run plant and diagnoser in lockstep and print a timeline.
    Simulate {
        model: PathBuf,
        spec: PathBuf,
        diagnoser: PathBuf,
        /// Seed of the random walk.
        #[arg(long, default_value_t = 0, conflicts_with = "trace")]
        seed: u64,
        /// Replay this run instead of a random walk.
        #[arg(long)]
        trace: Option<PathBuf>,
        /// Length of the random walk.
        #[arg(long, default_value_t = 20)]
        steps: usize,
        /// Also write the timeline as CSV.
        #[arg(long)]
        csv: Option<PathBuf>,
    },
}

/// Outcome of a subcommand that ran to completion.
enum Outcome {
    Pass,
    Fail,
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn load(path: &Path, text: &str) -> Result<Model> {
    load_model(text).map_err(|e| anyhow!("{}:{e}", path.display()))
}

fn load_specs(path: &Path, text: &str, model: &Model) -> Result<Vec<AlarmSpec>> {
    let doc = parse_spec_doc(text).map_err(|e| anyhow!("{}:{e}", path.display()))?;
    let v = validate_specs(&doc, model);
    for d in &v.diagnostics {
        if d.severity == Severity::Warning {
            eprintln!("{}:{d}", path.display());
        }
    }
    if let Some(e) = v.errors().next() {
        bail!("{}:{e}", path.display());
    }
    Ok(v.specs)
}

struct Inputs {
    plant: Model,
    specs: Vec<AlarmSpec>,
    diag: Option<Lts>,
}

fn inputs(report: &mut Report, model: &Path, spec: &Path, diag: Option<&Path>) -> Result<Inputs> {
    let mtext = read(model)?;
    let stext = read(spec)?;
    report.inputs.push(Input::new(model, &mtext));
    report.inputs.push(Input::new(spec, &stext));
    let plant = load(model, &mtext)?;
    let specs = load_specs(spec, &stext, &plant)?;
    let diag = match diag {
        Some(p) => {
            let dtext = read(p)?;
            report.inputs.push(Input::new(p, &dtext));
            Some(load(p, &dtext)?.lts)
        }
        None => None,
    };
    Ok(Inputs { plant, specs, diag })
}

fn print_result(out: &mut dyn Write, plant: &Lts, r: &CheckResult) -> Result<()> {
    let verdict = match r.verdict {
        Verdict::Pass => "PASS",
        Verdict::Fail => "FAIL",
        Verdict::NotApplicable => "N/A ",
    };
    let alarm = r.alarm.as_deref().unwrap_or("-");
    write!(out, "{verdict} {alarm} {:?}", r.check)?;
    if let Some(f) = &r.formula {
        write!(out, "  {f}")?;
    }
    writeln!(out)?;
    if r.verdict != Verdict::Pass && !r.detail.is_empty() {
        writeln!(out, "     {}", r.detail)?;
    }
    if let Some(c) = &r.counterexample {
        for line in c.render().lines() {
            writeln!(out, "     {line}")?;
        }
        writeln!(out, "     replay: {}", c.trace.render(plant))?;
    }
    Ok(())
}

fn record(
    report: &mut Report,
    out: &mut dyn Write,
    plant: &Lts,
    results: Vec<CheckResult>,
) -> Result<()> {
    for r in results {
        print_result(out, plant, &r)?;
        if r.failed() {
            report.passed = false;
        }
        report.results.push(r);
    }
    Ok(())
}

/// Determinism is a precondition of every check that reads a diagnoser.
fn require_determinism(
    report: &mut Report,
    out: &mut dyn Write,
    plant: &Lts,
    diag: &Lts,
    cap: u64,
) -> Result<bool> {
    let det = check_determinism(diag, Some(plant), cap)?;
    print_result(out, plant, &det)?;
    let ok = det.passed();
    report.passed &= ok;
    report.determinism = Some(det);
    Ok(ok)
}

fn pair(s: &str) -> Result<(&str, &str)> {
    s.split_once(':')
        .ok_or_else(|| anyhow!("expected `A:B`, found `{s}`"))
}

fn run(cmd: Command, report: &mut Report) -> Result<Outcome> {
    let stdout = &mut std::io::stdout();
    match cmd {
        Command::Synth {
            model,
            spec,
            output,
            dot,
            verify,
            timings,
            caps,
            ..
        } => {
            let inp = inputs(report, &model, &spec, None)?;
            let t = Instant::now();
            let opts = SynthOptions {
                state_cap: caps.cap_states,
                belief_cap: caps.cap_beliefs,
            };
            let s = synthesize(&inp.plant.lts, &inp.specs, opts)?;
            let mut stats =
                report::Synthesis::new(s.monitored.graph.len(), s.diagnoser.automaton.stats());
            if timings {
                stats.wall_time_ms = Some(t.elapsed().as_millis());
            }
            report.synthesis = Some(stats);
            let emitted = emit_diagnoser(&s.diagnoser)?;
            let text = emitted.doc.to_string();
            // With the model on stdout, the summary goes to stderr.
            let out: &mut dyn Write = match &output {
                Some(p) => {
                    fs::write(p, &text).with_context(|| format!("writing {}", p.display()))?;
                    stdout
                }
                None => {
                    print!("{text}");
                    &mut std::io::stderr()
                }
            };
            if let Some(p) = &dot {
                let members = |b: u32| {
                    let mp = &s.monitored;
                    let mut names: Vec<String> = s
                        .diagnoser
                        .automaton
                        .belief(b)
                        .iter()
                        .map(|&i| inp.plant.lts.format_state(mp.project(mp.graph.state(i))))
                        .collect();
                    names.dedup();
                    names
                };
                fs::write(p, diagnoser_dot(&s.diagnoser, Some(&members)))
                    .with_context(|| format!("writing {}", p.display()))?;
            }
            let st = s.diagnoser.automaton.stats();
            writeln!(
                out,
                "synthesized {} beliefs, {} edges, {} alarms",
                st.beliefs,
                st.edges,
                s.diagnoser.alarms.len()
            )?;
            if verify {
                let v = verify_all(&inp.plant.lts, &emitted.lts, &inp.specs, caps.verify())?;
                print_result(out, &inp.plant.lts, &v.determinism)?;
                report.passed &= v.determinism.passed();
                report.determinism = Some(v.determinism);
                record(report, out, &inp.plant.lts, v.results)?;
            }
        }
        Command::Verify {
            model,
            spec,
            diagnoser,
            caps,
            ..
        } => {
            let inp = inputs(report, &model, &spec, Some(&diagnoser))?;
            let diag = inp.diag.unwrap();
            let v = verify_all(&inp.plant.lts, &diag, &inp.specs, caps.verify())?;
            print_result(stdout, &inp.plant.lts, &v.determinism)?;
            report.passed &= v.determinism.passed();
            report.determinism = Some(v.determinism);
            record(report, stdout, &inp.plant.lts, v.results)?;
        }
        Command::Diagnosability {
            model,
            spec,
            alarm,
            caps,
            ..
        } => {
            let inp = inputs(report, &model, &spec, None)?;
            let specs: Vec<&AlarmSpec> = inp
                .specs
                .iter()
                .filter(|s| alarm.as_ref().is_none_or(|a| &s.name == a))
                .collect();
            if let Some(a) = &alarm {
                if specs.is_empty() {
                    bail!("no alarm `{a}` in {}", spec.display());
                }
            }
            for s in specs {
                let r = check_diagnosability(&inp.plant.lts, s, caps.verify())?;
                writeln!(
                    stdout,
                    "{} {}: system {}, trace {}",
                    s.name,
                    r.pattern,
                    yes(r.system),
                    yes(r.trace)
                )?;
                if let Some(cp) = &r.critical_pair {
                    writeln!(stdout, "     condition run: {}", cp.faulty_run)?;
                    writeln!(stdout, "     other run:     {}", cp.nominal_run)?;
                }
                // Failing to be diagnosable as the spec demands is a failure.
                let required = match s.diag {
                    kdiag::aslk::Diag::System => r.system,
                    kdiag::aslk::Diag::Trace => r.trace,
                };
                report.passed &= required;
                report.diagnosability.push(r);
            }
        }
        Command::Validate {
            model,
            spec,
            diagnoser,
            possible,
            subsumes,
            exclusive,
            assume,
            caps,
            ..
        } => {
            let inp = inputs(report, &model, &spec, Some(&diagnoser))?;
            let diag = inp.diag.unwrap();
            let plant = &inp.plant.lts;
            let assume: Option<Expr> = match &assume {
                Some(text) => {
                    let e = parse_expr(text).map_err(|e| anyhow!("--assume: {e}"))?;
                    Some(
                        inp.plant
                            .scope
                            .predicate(&e)
                            .map_err(|e| anyhow!("--assume: {e}"))?,
                    )
                }
                None => None,
            };
            let opts = caps.verify();
            if require_determinism(report, stdout, plant, &diag, opts.state_cap)? {
                let mut possible = possible;
                if possible.is_empty() && subsumes.is_empty() && exclusive.is_empty() {
                    possible = inp.specs.iter().map(|s| s.name.clone()).collect();
                }
                let mut results = Vec::new();
                for a in &possible {
                    results.push(check_possibility(plant, &diag, a, assume.as_ref(), opts)?);
                }
                for p in &subsumes {
                    let (a, b) = pair(p)?;
                    results.push(check_subsumption(
                        plant,
                        &diag,
                        a,
                        b,
                        assume.as_ref(),
                        opts,
                    )?);
                }
                for p in &exclusive {
                    let (a, b) = pair(p)?;
                    results.push(check_mutual_exclusion(
                        plant,
                        &diag,
                        a,
                        b,
                        assume.as_ref(),
                        opts,
                    )?);
                }
                record(report, stdout, plant, results)?;
            }
        }
        Command::Simulate {
            model,
            spec,
            diagnoser,
            seed,
            trace,
            steps,
            csv,
        } => {
            let inp = inputs(report, &model, &spec, Some(&diagnoser))?;
            let diag = inp.diag.unwrap();
            let plant = &inp.plant.lts;
            let det = check_determinism(&diag, Some(plant), DEFAULT_STATE_CAP)?;
            if !det.passed() {
                bail!("diagnoser is not deterministic: {}", det.detail);
            }
            let run = match &trace {
                Some(p) => parse_trace(plant, &read(p)?)?,
                None => random_walk(plant, &mut ChaCha8Rng::seed_from_u64(seed), steps)?,
            };
            let t = timeline(plant, &diag, &inp.specs, &run)?;
            print!("{}", t.to_text());
            if let Some(p) = &csv {
                write_csv(&t, p)?;
            }
        }
    }
    Ok(if report.passed {
        Outcome::Pass
    } else {
        Outcome::Fail
    })
}

fn yes(b: bool) -> &'static str {
    if b {
        "yes"
    } else {
        "no"
    }
}

fn write_csv(t: &Timeline, path: &Path) -> Result<()> {
    let mut w =
        csv::Writer::from_path(path).with_context(|| format!("writing {}", path.display()))?;
    w.write_record(t.header())?;
    for r in t.records() {
        w.write_record(r)?;
    }
    w.flush()?;
    Ok(())
}

/// Variant name of the first engine error in the chain.
fn error_kind(e: &anyhow::Error) -> String {
    let name = |d: String| {
        d.split(['(', '{', ' '])
            .next()
            .unwrap_or_default()
            .to_string()
    };
    for cause in e.chain() {
        if let Some(x) = cause.downcast_ref::<kdiag::synth::SynthError>() {
            return match x {
                kdiag::synth::SynthError::Kernel(k) => name(format!("{k:?}")),
                other => name(format!("{other:?}")),
            };
        }
        if let Some(x) = cause.downcast_ref::<kdiag::verify::VerifyError>() {
            return name(format!("{x:?}"));
        }
        if let Some(x) = cause.downcast_ref::<kdiag::kernel::KernelError>() {
            return name(format!("{x:?}"));
        }
        if let Some(x) = cause.downcast_ref::<kdiag::sim::SimError>() {
            return name(format!("{x:?}"));
        }
    }
    "Error".into()
}

fn report_path(cmd: &Command) -> Option<PathBuf> {
    match cmd {
        Command::Synth { report, .. }
        | Command::Verify { report, .. }
        | Command::Diagnosability { report, .. }
        | Command::Validate { report, .. } => report.clone(),
        Command::Simulate { .. } => None,
    }
}

fn command_name(cmd: &Command) -> &'static str {
    match cmd {
        Command::Synth { .. } => "synth",
        Command::Verify { .. } => "verify",
        Command::Diagnosability { .. } => "diagnosability",
        Command::Validate { .. } => "validate",
        Command::Simulate { .. } => "simulate",
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let path = report_path(&cli.command);
    let mut report = Report::new(command_name(&cli.command));
    let outcome = run(cli.command, &mut report);
    let code = match &outcome {
        Ok(Outcome::Pass) => 0,
        Ok(Outcome::Fail) => 2,
        Err(e) => {
            eprintln!("error: {e:#}");
            report.passed = false;
            report.error = Some(ErrorInfo {
                kind: error_kind(e),
                message: format!("{e:#}"),
            });
            1
        }
    };
    if let Some(p) = path {
        if let Err(e) = report.write(&p) {
            eprintln!("error: {e:#}");
            return ExitCode::from(1);
        }
    }
    ExitCode::from(code)
}
