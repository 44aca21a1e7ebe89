//! End-to-end runs of the `kdiag` binary on the bundled models.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use kdiag::models::{self, Fixture};
use serde_json::Value;
use tempfile::TempDir;

struct Workdir {
    dir: TempDir,
}

impl Workdir {
    fn new() -> Workdir {
        Workdir {
            dir: tempfile::tempdir().unwrap(),
        }
    }

    fn path(&self, name: &str) -> PathBuf {
        self.dir.path().join(name)
    }

    fn write(&self, name: &str, text: &str) -> PathBuf {
        let p = self.path(name);
        fs::write(&p, text).unwrap();
        p
    }

    /// Model and spec files of a fixture.
    fn fixture(&self, f: Fixture) -> (PathBuf, PathBuf) {
        (
            self.write(&format!("{}.fml", f.name), f.model),
            self.write(&format!("{}.aslk", f.name), f.spec),
        )
    }

    fn run(&self, args: &[&dyn AsRef<std::ffi::OsStr>]) -> Output {
        Command::new(env!("CARGO_BIN_EXE_kdiag"))
            .current_dir(self.dir.path())
            .args(args)
            .output()
            .unwrap()
    }

    /// Synthesizes a diagnoser for the fixture into `<name>_diag.fml`.
    fn synth(&self, f: Fixture) -> (PathBuf, PathBuf, PathBuf) {
        let (m, s) = self.fixture(f);
        let d = self.path(&format!("{}_diag.fml", f.name));
        let out = self.run(&[&"synth", &m, &s, &"-o", &d]);
        assert_eq!(code(&out), 0, "{}", stderr(&out));
        (m, s, d)
    }
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn json(p: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(p).unwrap()).unwrap()
}

#[test]
fn synth_toy_reports_three_beliefs() {
    let w = Workdir::new();
    let (m, s) = w.fixture(models::TOY1);
    let (d, r, dot) = (w.path("d.fml"), w.path("r.json"), w.path("d.dot"));
    let out = w.run(&[
        &"synth",
        &m,
        &s,
        &"-o",
        &d,
        &"--report",
        &r,
        &"--dot",
        &dot,
        &"--verify",
    ]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let rep = json(&r);
    assert_eq!(rep["schema_version"], 1);
    assert_eq!(rep["synthesis"]["beliefs"], 3);
    assert_eq!(rep["passed"], true);
    assert!(rep["synthesis"].get("wall_time_ms").is_none());
    let hash = rep["inputs"][0]["sha256"].as_str().unwrap();
    assert_eq!(hash.len(), 64);
    assert!(!rep["results"].as_array().unwrap().is_empty());
    assert!(fs::read_to_string(&dot).unwrap().starts_with("digraph"));
    assert!(fs::read_to_string(&d).unwrap().starts_with("model "));
}

#[test]
fn synth_without_output_prints_the_diagnoser() {
    let w = Workdir::new();
    let (m, s) = w.fixture(models::TOY1);
    let out = w.run(&[&"synth", &m, &s]);
    assert_eq!(code(&out), 0);
    assert!(stdout(&out).starts_with("model toy1_diagnoser"));
    assert!(stderr(&out).contains("3 beliefs"));
}

#[test]
fn timings_are_opt_in() {
    let w = Workdir::new();
    let (m, s) = w.fixture(models::TOY1);
    let r = w.path("r.json");
    w.run(&[
        &"synth",
        &m,
        &s,
        &"-o",
        &"d.fml",
        &"--report",
        &r,
        &"--timings",
    ]);
    assert!(json(&r)["synthesis"]["wall_time_ms"].is_u64());
}

#[test]
fn belief_cap_is_an_engine_error() {
    let w = Workdir::new();
    let (m, s) = w.fixture(models::BSS);
    let r = w.path("r.json");
    let out = w.run(&[
        &"synth",
        &m,
        &s,
        &"-o",
        &"d.fml",
        &"--cap-beliefs",
        &"5",
        &"--report",
        &r,
    ]);
    assert_eq!(code(&out), 1);
    let rep = json(&r);
    assert_eq!(rep["error"]["kind"], "BeliefCapExceeded");
    assert_eq!(rep["passed"], false);
}

#[test]
fn synthesized_toy_verifies() {
    let w = Workdir::new();
    let (m, s, d) = w.synth(models::TOY1);
    let out = w.run(&[&"verify", &m, &s, &d]);
    assert_eq!(code(&out), 0, "{}", stdout(&out));
    assert!(!stdout(&out).contains("FAIL"));
}

#[test]
fn nondeterministic_diagnoser_fails_determinism() {
    let w = Workdir::new();
    let (m, s, d) = w.synth(models::TOY1);
    let text = fs::read_to_string(&d).unwrap();
    let bad = text.replace(
        "trans o : __belief = b1 => __belief' = b1",
        "trans p : __belief = b0 => __belief' = b1",
    );
    assert_ne!(bad, text);
    let bad = w.write("bad.fml", &bad);
    let r = w.path("r.json");
    let out = w.run(&[&"verify", &m, &s, &bad, &"--report", &r]);
    assert_eq!(code(&out), 2);
    let rep = json(&r);
    assert_eq!(rep["determinism"]["verdict"], "Fail");
    for cmd in ["validate", "simulate"] {
        let out = w.run(&[&cmd, &m, &s, &bad]);
        assert_ne!(code(&out), 0, "{cmd}");
    }
}

#[test]
fn stuck_alarm_fails_with_a_replayable_counterexample() {
    let w = Workdir::new();
    let (m, s, d) = w.synth(models::TOY1);
    // The alarm is raised on the fault-free branch too.
    let text = fs::read_to_string(&d).unwrap().replace(
        "trans o : __belief = b0 => __belief' = b1, A_f' = false, A_f_neg' = true",
        "trans o : __belief = b0 => __belief' = b1, A_f' = true, A_f_neg' = false",
    );
    let bad = w.write("bad.fml", &text);
    let out = w.run(&[&"verify", &m, &s, &bad]);
    assert_eq!(code(&out), 2);
    let text = stdout(&out);
    let replay = text
        .lines()
        .find_map(|l| l.trim().strip_prefix("replay: "))
        .expect("replay line");
    let trace = w.write("cex.trace", replay);
    let sim = w.run(&[&"simulate", &m, &s, &d, &"--trace", &trace]);
    assert_eq!(code(&sim), 0, "{}", stderr(&sim));
}

#[test]
fn reports_are_byte_stable() {
    let w = Workdir::new();
    let (m, s, d) = w.synth(models::TOY1);
    let (a, b) = (w.path("a.json"), w.path("b.json"));
    w.run(&[&"verify", &m, &s, &d, &"--report", &a]);
    w.run(&[&"verify", &m, &s, &d, &"--report", &b]);
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
}

#[test]
fn exact_alarm_is_subsumed_by_bounded_alarm() {
    let w = Workdir::new();
    let (m, s, d) = w.synth(models::DELAY);
    let out = w.run(&[&"validate", &m, &s, &d, &"--subsumes", &"PE:PB"]);
    assert_eq!(code(&out), 0, "{}", stdout(&out));
    let out = w.run(&[&"validate", &m, &s, &d, &"--subsumes", &"PB:PE"]);
    assert_eq!(code(&out), 2);
}

#[test]
fn validate_defaults_to_possibility() {
    let w = Workdir::new();
    let (m, s, d) = w.synth(models::TOY1);
    let r = w.path("r.json");
    let out = w.run(&[&"validate", &m, &s, &d, &"--report", &r]);
    assert_eq!(code(&out), 0);
    assert_eq!(json(&r)["results"][0]["check"], "Possibility");
}

#[test]
fn assumption_must_be_a_plant_predicate() {
    let w = Workdir::new();
    let (m, s, d) = w.synth(models::TOY1);
    let out = w.run(&[&"validate", &m, &s, &d, &"--assume", &"y = a"]);
    assert_eq!(code(&out), 1);
    let out = w.run(&[&"validate", &m, &s, &d, &"--assume", &"x != c"]);
    assert_eq!(code(&out), 2, "{}", stdout(&out));
}

#[test]
fn undiagnosable_twin_is_reported() {
    let w = Workdir::new();
    let (m, s) = w.fixture(models::TWIN);
    let r = w.path("r.json");
    let out = w.run(&[&"diagnosability", &m, &s, &"--report", &r]);
    assert_eq!(code(&out), 2);
    assert!(stdout(&out).contains("condition run"));
    assert_eq!(json(&r)["diagnosability"][0]["system"], false);
}

#[test]
fn simulate_fault_then_observation() {
    let w = Workdir::new();
    let (m, s, d) = w.synth(models::TOY1);
    let trace = w.write("t.trace", "# fault first\nf\np\n");
    let csv = w.path("t.csv");
    let out = w.run(&[&"simulate", &m, &s, &d, &"--trace", &trace, &"--csv", &csv]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    assert_eq!(
        fs::read_to_string(&csv).unwrap(),
        "position,event,obs,beta_A_f,A_f,A_f_neg,state\n1,f,0,1,0,0,x=c\n2,p,1,1,1,0,x=c\n"
    );
}

#[test]
fn simulate_fault_free_branch() {
    let w = Workdir::new();
    let (m, s, d) = w.synth(models::TOY1);
    let trace = w.write("t.trace", "u o");
    let out = w.run(&[&"simulate", &m, &s, &d, &"--trace", &trace]);
    let rows: Vec<Vec<String>> = stdout(&out)
        .lines()
        .skip(1)
        .map(|l| l.split_whitespace().map(String::from).collect())
        .collect();
    assert_eq!(rows.len(), 2);
    assert_eq!(rows[1][1..6], ["o", "1", "0", "0", "1"]);
}

#[test]
fn invalid_trace_is_rejected() {
    let w = Workdir::new();
    let (m, s, d) = w.synth(models::TOY1);
    let trace = w.write("t.trace", "p");
    let out = w.run(&[&"simulate", &m, &s, &d, &"--trace", &trace]);
    assert_eq!(code(&out), 1);
}

#[test]
fn zero_steps_prints_only_the_header() {
    let w = Workdir::new();
    let (m, s, d) = w.synth(models::TOY1);
    let out = w.run(&[&"simulate", &m, &s, &d, &"--steps", &"0"]);
    assert_eq!(code(&out), 0);
    assert_eq!(
        stdout(&out),
        "position  event  obs  beta_A_f  A_f  A_f_neg  state\n"
    );
}

#[test]
fn seeded_walks_repeat() {
    let w = Workdir::new();
    let (m, s, d) = w.synth(models::SIMPLIFIED_BATTERY);
    let run = || stdout(&w.run(&[&"simulate", &m, &s, &d, &"--seed", &"7", &"--steps", &"15"]));
    let first = run();
    assert_eq!(first.lines().count(), 16);
    assert_eq!(first, run());
}

#[test]
fn parse_errors_exit_one() {
    let w = Workdir::new();
    let m = w.write("m.fml", "model m\nvar x : {a, b, c}\ninit x = d\n");
    let s = w.write("s.aslk", "alarm A : finitedel(x = c) diag=trace\n");
    let out = w.run(&[&"diagnosability", &m, &s]);
    assert_eq!(code(&out), 1);
    assert!(stderr(&out).contains("m.fml:"));
}
