//! End-to-end acceptance: the ten criteria, each reduced to the check records
//! of one suite run on the shipped configuration. Thresholds are pinned here
//! and override whatever the configuration files say.

use std::path::PathBuf;
use std::time::Instant;

use hormander::cli_report::{load_config, run_suite, CheckRecord, ExperimentReport, Resolved, SUITES};

const DEVIATION: f64 = 1e-12;
const RESIDUAL: f64 = 1e-12;
const MANUFACTURED: f64 = 1e-10;
const CLOSED_FORM: f64 = 1e-6;
const HEINZ_SLACK: f64 = 1e-9;
const RATIO_BOUND: f64 = 10.0;
const BAND_CHANGE: f64 = 0.1;
const BAND_RATIO: f64 = 10.0;
const DECAY_FACTOR: f64 = 1.5;
const ORIGIN_TOLERANCE: f64 = 1e-3;
const ORACLE_TOLERANCE: f64 = 1e-12;
const IDENTITY_TOLERANCE: f64 = 1e-14;
const DRIFT: f64 = 0.05;
const CP_FACTOR: f64 = 5.0;
const INTERP5_SECONDS: f64 = 10.0;
const OPNORM_SECONDS: f64 = 60.0;

fn config(name: &str) -> Resolved {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs").join(name);
    let mut r = load_config(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
    let c = &mut r.config;
    c.tolerances.deviation = DEVIATION;
    c.tolerances.residual = RESIDUAL;
    c.tolerances.manufactured = MANUFACTURED;
    c.tolerances.closed_form = CLOSED_FORM;
    c.opnorm.slack = HEINZ_SLACK;
    c.opnorm.ratio_bound = RATIO_BOUND;
    c.trace.band_change = BAND_CHANGE;
    c.trace.band_ratio = BAND_RATIO;
    c.trace.decay_factor = DECAY_FACTOR;
    c.trace.origin_tolerance = ORIGIN_TOLERANCE;
    c.trace.oracle_tolerance = ORACLE_TOLERANCE;
    c.trace.identity_tolerance = IDENTITY_TOLERANCE;
    c.localreg.drift = DRIFT;
    if let Some(ratio) = c.cp.ratio.as_mut() {
        ratio.factor = CP_FACTOR;
    }
    r
}

fn timed(suite: &str, r: &Resolved) -> (ExperimentReport, f64) {
    let start = Instant::now();
    let rep = run_suite(suite, r).unwrap_or_else(|e| panic!("{suite}: {e}"));
    (rep, start.elapsed().as_secs_f64())
}

struct Verdict {
    number: usize,
    title: &'static str,
    problems: Vec<String>,
    note: String,
}

impl Verdict {
    fn new(number: usize, title: &'static str) -> Self {
        Self { number, title, problems: Vec::new(), note: String::new() }
    }

    fn require(&mut self, ok: bool, what: impl Into<String>) {
        if !ok {
            self.problems.push(what.into());
        }
    }

    fn records<'a>(&mut self, checks: impl IntoIterator<Item = &'a CheckRecord>) -> usize {
        let mut count = 0;
        for c in checks {
            count += 1;
            if !c.passed {
                self.problems.push(c.summary());
            }
        }
        self.require(count > 0, "no checks were produced");
        count
    }

    fn line(&self) -> String {
        let status = if self.problems.is_empty() { "PASS" } else { "FAIL" };
        let mut s = format!("{status} criterion {:>2}: {} ({})", self.number, self.title, self.note);
        for p in &self.problems {
            s.push_str("\n      ");
            s.push_str(p);
        }
        s
    }
}

fn max_measured<'a>(checks: impl IntoIterator<Item = &'a CheckRecord>) -> f64 {
    checks.into_iter().filter_map(|c| c.measured.as_f64()).fold(0.0, f64::max)
}

fn interp5() -> Verdict {
    let mut v = Verdict::new(1, "interpolation identity");
    let r = config("interp.toml");
    v.require(r.catalog.len() >= 8, format!("catalog has {} entries", r.catalog.len()));
    v.require(r.config.lattice.dims == [1, 2] && r.config.lattice.radii == [16], "lattice must be n in {1,2}, N = 16");
    v.require(r.config.interp.samples >= 50, "fewer than 50 samples per cell");
    let (rep, secs) = timed("interp5", &r);
    let count = v.records(&rep.checks);
    // every φ needs at least three admissible pairs in each dimension
    for (label, _) in &r.catalog {
        let cells = rep.checks.iter().filter(|c| c.id.starts_with(&format!("interp5/{label}/"))).count();
        v.require(cells >= 6, format!("{label}: only {cells} admissible cells"));
    }
    v.require(secs < INTERP5_SECONDS, format!("runtime {secs:.2} s"));
    v.note = format!("{count} cells, max deviation {:.2e}, {secs:.2} s", max_measured(&rep.checks));
    v
}

fn interp6() -> Verdict {
    let mut v = Verdict::new(2, "reiteration");
    let r = config("interp.toml");
    let (rep, _) = timed("interp6", &r);
    let count = v.records(&rep.checks);
    let from_parameter = rep.checks.iter().filter(|c| c.id.starts_with("interp6/thm5:")).count();
    let from_powers = rep.checks.iter().filter(|c| c.id.starts_with("interp6/pow(")).count();
    v.require(from_parameter > 0 && from_powers > 0, "both parameter families must be exercised");
    v.note = format!(
        "{count} cells ({from_parameter} derived, {from_powers} power), max deviation {:.2e}",
        max_measured(&rep.checks)
    );
    v
}

fn embed() -> Verdict {
    let mut v = Verdict::new(3, "embedding truth table");
    let r = config("embed.toml");
    let cases = &r.config.embed.cases;
    v.require(cases.len() == 12, format!("{} cases", cases.len()));
    v.require(
        cases.iter().any(|c| {
            c.phi0.get_ref() == "pow(2)" && c.phi1.get_ref() == "pow(2) * log(1)" && c.expect == "compact"
        }),
        "borderline pair missing",
    );
    let (rep, _) = timed("embed", &r);
    let count = v.records(&rep.checks);
    let verdicts = rep.checks.iter().filter(|c| c.id.ends_with("/verdict")).count();
    v.require(verdicts == 12, format!("{verdicts} verdicts"));
    let tails = rep.checks.iter().filter(|c| c.id.ends_with("/tail_decrease")).count();
    let counts = rep.checks.iter().filter(|c| c.id.ends_with("/eps_fraction_change")).count();
    v.note = format!("{count} checks: {verdicts} verdicts, {tails} tail series, {counts} eps-count series");
    v
}

fn opnorm() -> Verdict {
    let mut v = Verdict::new(4, "operator interpolation");
    let r = config("opnorm.toml");
    let o = &r.config.opnorm;
    v.require(o.trials == 200 && o.radius == 12, "must be 200 trials at N = 12");
    v.require(o.thetas == [0.25, 0.5, 0.75], "theta set");
    let (rep, secs) = timed("opnorm", &r);
    let count = v.records(&rep.checks);
    v.require(secs < OPNORM_SECONDS, format!("runtime {secs:.2} s"));
    let worst = rep
        .checks
        .iter()
        .filter(|c| c.id.ends_with("/ratio"))
        .filter_map(|c| c.measured.as_f64())
        .fold(0.0, f64::max);
    v.note = format!("{count} checks, max certified-parameter ratio {worst:.4}, {secs:.2} s");
    v
}

fn is_extension_check(c: &CheckRecord) -> bool {
    c.id.ends_with("/extension_oracle") || c.id.ends_with("/trace_of_extension")
}

fn trace_band(rep: &ExperimentReport) -> Verdict {
    let mut v = Verdict::new(5, "trace band and degeneration");
    let count = v.records(rep.checks.iter().filter(|c| !is_extension_check(c)));
    for label in ["pow(3/4)", "pow(1)", "pow(2)", "pow(1) * log(1)", "pow(1) * log(-1)"] {
        v.require(
            rep.checks.iter().any(|c| c.id == format!("trace/{label}/band_ratio")),
            format!("{label} is not in the band study"),
        );
    }
    v.require(rep.checks.iter().any(|c| c.id == "trace/pow(1/2)/inf_decay"), "degenerate case missing");
    v.require(rep.checks.iter().any(|c| c.id == "trace/origin_mass"), "origin check missing");
    v.note = format!("{count} checks");
    v
}

fn trace_extension(rep: &ExperimentReport) -> Verdict {
    let mut v = Verdict::new(6, "minimal extension");
    let checks: Vec<_> = rep.checks.iter().filter(|c| is_extension_check(c)).collect();
    let count = v.records(checks.iter().copied());
    v.note = format!("{count} checks, max deviation {:.2e}", max_measured(checks.iter().copied()));
    v
}

fn bvp() -> Verdict {
    let mut v = Verdict::new(7, "elliptic problems");
    let r = config("bvp.toml");
    v.require(r.config.bvp.samples >= 100 && r.config.bvp.weights.len() >= 2, "sample counts");
    v.require(r.config.bvp.manufactured_modes == 64 && r.config.bvp.step_modes == 4096, "mode counts");
    let (rep, _) = timed("bvp", &r);
    let count = v.records(&rep.checks);
    v.note = format!("{count} checks");
    v
}

fn localreg() -> Verdict {
    let mut v = Verdict::new(8, "local regularity");
    let r = config("localreg.toml");
    let (rep, _) = timed("localreg", &r);
    let count = v.records(&rep.checks);
    let drift = rep.checks.iter().find(|c| c.id == "localreg/interior/drift").and_then(|c| c.measured.as_f64());
    let rate = rep.checks.iter().find(|c| c.id == "localreg/global/log_rate").and_then(|c| c.measured.as_f64());
    v.note = format!("{count} checks, interior drift {:.2e}, global log-rate {:.3}", drift.unwrap_or(f64::NAN), rate.unwrap_or(f64::NAN));
    v
}

fn cp() -> Verdict {
    let mut v = Verdict::new(9, "pointwise differentiability");
    let r = config("cp.toml");
    v.require(r.catalog.len() == 10, format!("{} indices", r.catalog.len()));
    for borderline in ["pow(1/2)", "pow(1/2) * log(1)"] {
        v.require(r.catalog.iter().any(|(l, _)| l == borderline), format!("{borderline} missing"));
    }
    v.require(r.config.cp.elements >= 1000, "fewer than 1000 elements");
    let (rep, _) = timed("cp", &r);
    let count = v.records(&rep.checks);
    let verdicts = rep.checks.iter().filter(|c| c.id.ends_with("/verdict")).count();
    v.require(verdicts == 10, format!("{verdicts} analytic verdicts"));
    let ratio = rep.checks.iter().find(|c| c.id == "cp/partial_over_limit").and_then(|c| c.measured.as_f64());
    v.require(ratio.is_some(), "partial-sum ratio missing");
    v.note = format!("{count} checks, partial/limit ratio {:.2}", ratio.unwrap_or(f64::NAN));
    v
}

fn determinism() -> Verdict {
    let mut v = Verdict::new(10, "determinism");
    for suite in SUITES {
        let file = match suite {
            "interp5" | "interp6" => "interp.toml".to_string(),
            s => format!("{s}.toml"),
        };
        let r = config(&file);
        let a = run_suite(suite, &r).unwrap().to_json();
        let b = run_suite(suite, &r).unwrap().to_json();
        v.require(a == b, format!("{suite}: JSON differs between runs"));
    }
    v.note = format!("{} suites rerun", SUITES.len());
    v
}

#[test]
fn acceptance_criteria() {
    let (trace, _) = timed("trace", &config("trace.toml"));
    let verdicts = vec![
        interp5(),
        interp6(),
        embed(),
        opnorm(),
        trace_band(&trace),
        trace_extension(&trace),
        bvp(),
        localreg(),
        cp(),
        determinism(),
    ];
    for v in &verdicts {
        println!("{}", v.line());
    }
    let failed: Vec<usize> = verdicts.iter().filter(|v| !v.problems.is_empty()).map(|v| v.number).collect();
    assert!(failed.is_empty(), "criteria not met: {failed:?}");
}
