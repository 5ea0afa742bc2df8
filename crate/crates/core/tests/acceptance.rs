//! Acceptance run: one PASS/FAIL line per criterion, with the tolerances
//! pinned here on top of the shipped configs.
//!
//! Failures are reported but do not fail `cargo test` unless
//! FRACLAP_ACCEPTANCE_STRICT=1 is set.

use std::path::Path;
use std::process::ExitCode;
use std::time::Instant;

use fraclap::config::ExperimentConfig;
use fraclap::experiments;
use fraclap::report::ExperimentReport;
use serde_json::{json, Value};

struct Criterion {
    id: u32,
    what: &'static str,
    runs: Vec<(&'static str, Value)>,
    time_limit: Option<f64>,
}

fn criteria() -> Vec<Criterion> {
    let c = |id, what, runs, time_limit| Criterion { id, what, runs, time_limit };
    vec![
        c(1, "slice kernel constants and slice identity", vec![("slice-kernel", json!({"tolerance": 1e-8}))], None),
        c(
            2,
            "second differences control the fractional norm",
            vec![(
                "second-diff",
                json!({"spacing": 0.03125, "samples": 30, "pairs": [[0.3, 2.0], [0.5, 4.0]], "slack": 0.05}),
            )],
            None,
        ),
        c(3, "even reflection doubles at most by 4", vec![("reflection", json!({"samples": 30, "bound": 4.0 + 1e-12}))], None),
        c(
            4,
            "discrete solver: residual, symmetry, PSD, golden",
            vec![(
                "solve",
                json!({"residual_tol": 1e-8, "golden_tol": 1e-8, "psd_tol": 1e-12, "psd_vectors": 100}),
            )],
            None,
        ),
        c(
            5,
            "solution scaling under dilation",
            vec![("solver-scaling", json!({"spacing": 0.015625, "lambdas": [2.0, 4.0], "tolerance": 0.05}))],
            None,
        ),
        c(
            6,
            "operator calculus sanity",
            vec![(
                "operator-sanity",
                json!({"composition_tol": 1e-3, "oracle_value": 0.327987, "oracle_tol": 1e-4, "constant_tol": 1e-6}),
            )],
            None,
        ),
        c(
            7,
            "dimension reduction identity and duality",
            vec![("reduction", json!({"residual_tol": 1e-5, "spread_bound": 3.0}))],
            Some(300.0),
        ),
        c(
            8,
            "tangential regularity gain",
            vec![(
                "tangential",
                json!({"s": 0.75, "t": 0.0, "p": 4.0, "s_tilde": 0.9, "spacings": [0.03125, 0.015625], "growth": 0.1}),
            )],
            Some(600.0),
        ),
        c(
            9,
            "Hardy and Fefferman-Stein stability",
            vec![("hardy", json!({"stability": 0.1})), ("fefferman-stein", json!({"stability": 0.1}))],
            None,
        ),
        c(10, "Holder decay of mean oscillation", vec![("holder-decay", json!({"patches": 5, "min_slope": 0.0}))], None),
    ]
}

fn pinned_config(name: &str, pins: &Value) -> ExperimentConfig {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs").join(format!("{name}.json"));
    let text = std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
    let mut v: Value = serde_json::from_str(&text).unwrap();
    for (k, x) in pins.as_object().unwrap() {
        v["params"][k] = x.clone();
    }
    ExperimentConfig::from_json(&v.to_string()).unwrap()
}

fn run(name: &str, pins: &Value) -> Result<(ExperimentReport, f64), String> {
    let start = Instant::now();
    let report = experiments::run(&pinned_config(name, pins), None, None).map_err(|e| format!("{name}: {e}"))?;
    Ok((report, start.elapsed().as_secs_f64()))
}

fn main() -> ExitCode {
    let mut failed = Vec::new();
    for crit in criteria() {
        let mut pass = true;
        let mut detail = Vec::new();
        let mut seconds = 0.0;
        for (name, pins) in &crit.runs {
            match run(name, pins) {
                Ok((report, t)) => {
                    seconds += t;
                    for c in &report.checks {
                        let v = c.value.map_or("none".into(), |v| format!("{v:.4e}"));
                        if !c.pass {
                            pass = false;
                            detail.push(format!("{name}/{} = {v} not {} {:e}", c.name, c.op, c.threshold));
                        }
                    }
                    if report.checks.iter().all(|c| c.pass) {
                        detail.push(format!("{name}: {} checks ok", report.checks.len()));
                    }
                }
                Err(e) => {
                    pass = false;
                    detail.push(e);
                }
            }
        }
        if let Some(limit) = crit.time_limit {
            if seconds >= limit {
                pass = false;
            }
            detail.push(format!("{seconds:.1}s of {limit:.0}s"));
        }
        println!("{} criterion {:>2}: {} [{}]", if pass { "PASS" } else { "FAIL" }, crit.id, crit.what, detail.join("; "));
        if !pass {
            failed.push(crit.id);
        }
    }
    println!("acceptance: {} of 10 criteria pass{}", 10 - failed.len(), if failed.is_empty() { String::new() } else { format!(", failing {failed:?}") });
    if !failed.is_empty() && std::env::var("FRACLAP_ACCEPTANCE_STRICT").is_ok_and(|v| v == "1") {
        return ExitCode::FAILURE;
    }
    ExitCode::SUCCESS
}
