//! Command-line driver for the registered experiments.
//!
//! Exit codes: 0 pass (or vacuous pass), 1 failed checks or a runtime error,
//! 2 config error.

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use clap::{Parser, Subcommand};
use fraclap::config::ExperimentConfig;
use fraclap::experiments;
use fraclap::report::{write_report, Format};
use fraclap::Error;

#[derive(Parser)]
#[command(name = "fraclap", version, about = "Numerical experiments for the regional fractional Laplacian on half-spaces")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one experiment and write its report, cases CSV and metadata.
    Run {
        #[arg(long)]
        experiment: String,
        /// JSON config; defaults apply to every missing key.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        /// Finest grid spacing; coarser levels keep their ratio.
        #[arg(long)]
        spacing: Option<f64>,
    },
    /// List the experiments and what they check.
    List,
    /// Parse a config and print the resolved parameters.
    Validate {
        #[arg(long)]
        config: PathBuf,
    },
}

fn fail(e: Error) -> ExitCode {
    eprintln!("fraclap: {e}");
    match e {
        Error::Config(_) => ExitCode::from(2),
        _ => ExitCode::from(1),
    }
}

fn unix_seconds(t: SystemTime) -> f64 {
    t.duration_since(UNIX_EPOCH).map_or(0.0, |d| d.as_secs_f64())
}

fn run(experiment: String, config: Option<PathBuf>, out: Option<PathBuf>, seed: Option<u64>, spacing: Option<f64>) -> Result<bool, Error> {
    let cfg = match &config {
        Some(path) => ExperimentConfig::load(path)?,
        None => ExperimentConfig::new(&experiment),
    };
    if cfg.experiment != experiment {
        return Err(Error::Config(format!(
            "config names experiment `{}` but --experiment is `{experiment}`",
            cfg.experiment
        )));
    }
    experiments::validate(&cfg, spacing)?;
    let dir = out.or_else(|| cfg.out.clone()).unwrap_or_else(|| PathBuf::from("out"));
    let started = SystemTime::now();
    let clock = Instant::now();
    let report = experiments::run(&cfg, seed, spacing)?;
    let elapsed = clock.elapsed().as_secs_f64();
    let json = write_report(&report, Format::Json, &dir)?;
    let csv = write_report(&report, Format::Csv, &dir)?;
    let meta = serde_json::json!({
        "experiment": report.experiment,
        "seed": report.seed,
        "started_unix": unix_seconds(started),
        "finished_unix": unix_seconds(SystemTime::now()),
        "elapsed_seconds": elapsed,
        "version": env!("CARGO_PKG_VERSION"),
    });
    std::fs::write(dir.join(format!("{}.meta.json", report.experiment)), serde_json::to_string_pretty(&meta)? + "\n")?;
    for c in &report.checks {
        let value = c.value.map_or("none".to_string(), |v| format!("{v:e}"));
        println!("{} {} {} {} {:e}", if c.pass { "ok  " } else { "FAIL" }, c.name, value, c.op, c.threshold);
    }
    println!("{}: {:?} ({} records) -> {}, {}", report.experiment, report.verdict, report.records.len(), json.display(), csv.display());
    Ok(report.verdict.passed())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::List => {
            for e in experiments::registry() {
                println!("{:<18} {}", e.name, e.summary);
            }
            ExitCode::SUCCESS
        }
        Command::Validate { config } => {
            let resolved = ExperimentConfig::load(&config).and_then(|c| {
                let params = experiments::validate(&c, None)?;
                Ok((c, params))
            });
            match resolved {
                Ok((c, params)) => {
                    let v = serde_json::json!({ "experiment": c.experiment, "seed": c.seed(), "params": params });
                    println!("{}", serde_json::to_string_pretty(&v).expect("json value serializes"));
                    ExitCode::SUCCESS
                }
                Err(e) => fail(e),
            }
        }
        Command::Run { experiment, config, out, seed, spacing } => match run(experiment, config, out, seed, spacing) {
            Ok(true) => ExitCode::SUCCESS,
            Ok(false) => ExitCode::from(1),
            Err(e) => fail(e),
        },
    }
}
