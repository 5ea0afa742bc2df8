//! Registered experiments. Each one parses its own parameter block, runs its
//! cases in index order and returns records plus threshold checks.

use serde_json::Value;

use crate::config::{parse_params, ExperimentConfig, Params};
use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::report::{Check, ExperimentReport, Record};

mod analysis;
mod maxfun;
mod reduce;
mod solving;

pub use analysis::{EmbeddingParams, HardyParams, OperatorSanityParams, SecondDiffParams, SliceKernelParams};
pub use maxfun::{FeffermanSteinParams, HolderDecayParams, ReflectionParams, SharpMaxParams};
pub use reduce::ReductionParams;
pub use solving::{CutoffParams, ScalingParams, SolveParams, TangentialParams};

/// Records and checks of one run.
#[derive(Debug, Default)]
pub struct Outcome {
    pub records: Vec<Record>,
    pub checks: Vec<Check>,
}

pub trait Experiment: Params {
    const NAME: &'static str;
    /// What the experiment checks, printed by `fraclap list`.
    const SUMMARY: &'static str;
    fn execute(&self, seed: u64) -> Result<Outcome>;
}

pub struct Entry {
    pub name: &'static str,
    pub summary: &'static str,
    validate: fn(&Value, Option<f64>) -> Result<Value>,
    run: fn(&Value, Option<f64>, u64) -> Result<ExperimentReport>,
}

fn validate_as<P: Experiment>(v: &Value, h: Option<f64>) -> Result<Value> {
    let p: P = parse_params(v, h)?;
    Ok(serde_json::to_value(&p)?)
}

fn run_as<P: Experiment>(v: &Value, h: Option<f64>, seed: u64) -> Result<ExperimentReport> {
    let p: P = parse_params(v, h)?;
    let out = p.execute(seed)?;
    Ok(ExperimentReport::new(P::NAME, seed, serde_json::to_value(&p)?, out.records, out.checks))
}

fn entry<P: Experiment>() -> Entry {
    Entry { name: P::NAME, summary: P::SUMMARY, validate: validate_as::<P>, run: run_as::<P> }
}

pub fn registry() -> Vec<Entry> {
    vec![
        entry::<HardyParams>(),
        entry::<EmbeddingParams>(),
        entry::<SecondDiffParams>(),
        entry::<SliceKernelParams>(),
        entry::<ReflectionParams>(),
        entry::<FeffermanSteinParams>(),
        entry::<SolveParams>(),
        entry::<ScalingParams>(),
        entry::<CutoffParams>(),
        entry::<SharpMaxParams>(),
        entry::<HolderDecayParams>(),
        entry::<TangentialParams>(),
        entry::<ReductionParams>(),
        entry::<OperatorSanityParams>(),
    ]
}

fn lookup(name: &str) -> Result<Entry> {
    registry()
        .into_iter()
        .find(|e| e.name == name)
        .ok_or_else(|| Error::Config(format!("unknown experiment `{name}`")))
}

/// Resolved parameter block (defaults filled in) or a config error.
pub fn validate(config: &ExperimentConfig, spacing: Option<f64>) -> Result<Value> {
    (lookup(&config.experiment)?.validate)(&config.params, spacing)
}

pub fn run(config: &ExperimentConfig, seed: Option<u64>, spacing: Option<f64>) -> Result<ExperimentReport> {
    let e = lookup(&config.experiment)?;
    (e.run)(&config.params, spacing, seed.unwrap_or_else(|| config.seed()))
}

/// Boxes in configs are lists of [lo, hi] pairs.
pub(crate) type BoxSpec = Vec<[f64; 2]>;

pub(crate) fn bounds(b: &BoxSpec) -> Vec<(f64, f64)> {
    b.iter().map(|&[a, c]| (a, c)).collect()
}

pub(crate) fn grid(spacing: f64, b: &BoxSpec, half: bool) -> Result<Grid> {
    Grid::new(b.len(), spacing, &bounds(b), half)
}

/// max / min of positive values; None without a positive value.
pub(crate) fn spread(values: impl IntoIterator<Item = f64>) -> Option<f64> {
    let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
    for v in values {
        if v > 0.0 && v.is_finite() {
            lo = lo.min(v);
            hi = hi.max(v);
        }
    }
    (hi > 0.0).then(|| hi / lo)
}

pub(crate) fn max_of(values: impl IntoIterator<Item = f64>) -> f64 {
    values.into_iter().fold(f64::NEG_INFINITY, f64::max)
}

/// Values of ok records matching a predicate.
pub(crate) fn values_where<'a>(records: &'a [Record], pred: impl Fn(&Record) -> bool + 'a) -> impl Iterator<Item = f64> + 'a {
    records
        .iter()
        .filter(move |r| r.status == crate::report::Status::Ok && pred(r))
        .filter_map(|r| r.value)
}

/// Record a degenerate sample as skipped instead of failing the run.
pub(crate) fn or_skip(rec: Record, res: Result<Record>) -> Record {
    res.unwrap_or_else(|e| rec.skipped(e.to_string()))
}

/// Relative change |a/b − 1| of the finest level against the next one.
pub(crate) fn stability(records: &[Record], group: &str, spacings: &[f64]) -> Option<f64> {
    let mut hs = spacings.to_vec();
    hs.sort_by(f64::total_cmp);
    if hs.len() < 2 {
        return None;
    }
    let level = |h: f64| max_of(values_where(records, |r| r.group == group && r.spacing == Some(h)));
    let (a, b) = (level(hs[0]), level(hs[1]));
    (a.is_finite() && b.is_finite() && b != 0.0).then(|| (a / b - 1.0).abs())
}
