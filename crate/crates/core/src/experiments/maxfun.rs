//! Maximal-function experiments: reflection domination, censored
//! Fefferman–Stein ratios, sharp-maximal bounds for solutions and Hölder
//! oscillation decay.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{bounds, grid, max_of, or_skip, spread, stability, values_where, BoxSpec, Experiment, Outcome};
use crate::config::{ladder, require, Params};
use crate::error::Result;
use crate::grid::{difference, sample, CellMask, Grid, GridFunction};
use crate::kernel::KernelSpec;
use crate::maximal::{dyadic_radii, fefferman_stein_ratio, maximal, reflection_domination, sharp_maximal};
use crate::random::{rng, BumpField};
use crate::report::{Check, Record};
use crate::solver::{load_vector, local_datum_size, solve_constrained, solve_system, DirichletProblem, System};

fn fields(count: usize, seed: u64, window: &BoxSpec, vanish: bool) -> Result<Vec<BumpField>> {
    let mut r = rng(seed);
    let w = bounds(window);
    (0..count).map(|_| BumpField::random(&mut r, &w, vanish)).collect()
}

// ---------------------------------------------------------------- reflection

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ReflectionParams {
    pub spacing: f64,
    pub domain: BoxSpec,
    pub window: BoxSpec,
    pub samples: usize,
    pub bound: f64,
}

impl Default for ReflectionParams {
    fn default() -> Self {
        ReflectionParams {
            spacing: 0.0625,
            domain: vec![[-1.0, 1.0], [0.0, 1.0]],
            window: vec![[-0.75, 0.75], [-0.75, 0.75]],
            samples: 30,
            bound: 4.0 + 1e-12,
        }
    }
}

impl Params for ReflectionParams {
    fn check(&self) -> Result<()> {
        require(self.spacing > 0.0, "spacing must be positive")?;
        require(self.domain.len() == 2 && self.window.len() == 2, "reflection runs on 2D half-space boxes")
    }

    fn set_spacing(&mut self, h: f64) {
        self.spacing = h;
    }
}

impl Experiment for ReflectionParams {
    const NAME: &'static str = "reflection";
    const SUMMARY: &'static str = "reflection domination: sharp maximal function of the even reflection is at most 4 times the censored one, on both sides of the boundary";

    fn execute(&self, seed: u64) -> Result<Outcome> {
        let g = grid(self.spacing, &self.domain, true)?;
        let radii = dyadic_radii(&g);
        let mut recs = Vec::new();
        for (k, field) in fields(self.samples, seed, &self.window, false)?.iter().enumerate() {
            let f = field.sample(&g)?;
            let rec = Record::new("reflection").spacing(self.spacing).sample(k);
            let res = reflection_domination(&f, &radii).map(|rep| {
                let mut r = rec.clone().value(rep.max_ratio_upper.max(rep.max_ratio_lower)).note(format!(
                    "upper={},lower={},compared={},skipped={}",
                    rep.max_ratio_upper, rep.max_ratio_lower, rep.compared, rep.skipped
                ));
                r.lhs = Some(rep.max_ratio_upper);
                r.rhs = Some(rep.max_ratio_lower);
                r
            });
            recs.push(or_skip(rec, res));
        }
        let worst = max_of(values_where(&recs, |_| true));
        Ok(Outcome { checks: vec![Check::at_most("max ratio", worst, self.bound)], records: recs })
    }
}

// ---------------------------------------------------------------- fefferman-stein

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FeffermanSteinParams {
    pub spacings: Vec<f64>,
    pub domain: BoxSpec,
    pub window: BoxSpec,
    pub samples: usize,
    pub p: f64,
    pub censored: bool,
    pub stability: f64,
}

impl Default for FeffermanSteinParams {
    fn default() -> Self {
        FeffermanSteinParams {
            spacings: vec![0.125, 0.0625, 0.03125],
            domain: vec![[-1.0, 1.0], [0.0, 1.0]],
            window: vec![[-0.75, 0.75], [-0.75, 0.75]],
            samples: 30,
            p: 2.0,
            censored: true,
            stability: 0.1,
        }
    }
}

impl Params for FeffermanSteinParams {
    fn check(&self) -> Result<()> {
        require(!self.spacings.is_empty(), "need at least one spacing")?;
        require(self.p > 1.0 && self.p.is_finite(), "p must lie in (1, ∞)")
    }

    fn set_spacing(&mut self, h: f64) {
        self.spacings = ladder(self.spacings.len(), h);
    }
}

impl Experiment for FeffermanSteinParams {
    const NAME: &'static str = "fefferman-stein";
    const SUMMARY: &'static str = "censored Fefferman–Stein ratio ‖f‖_{L^p(ℝⁿ₊)} / ‖M#₊f‖_{L^p(ℝⁿ₊)}, stability of the max ratio under refinement";

    fn execute(&self, seed: u64) -> Result<Outcome> {
        let fs = fields(self.samples, seed, &self.window, false)?;
        let mut recs = Vec::new();
        for &h in &self.spacings {
            let g = grid(h, &self.domain, true)?;
            for (k, field) in fs.iter().enumerate() {
                let rec = Record::new("fefferman-stein").spacing(h).sample(k);
                let res = field
                    .sample(&g)
                    .and_then(|f| fefferman_stein_ratio(&f, self.p, self.censored))
                    .map(|q| rec.clone().value(q));
                recs.push(or_skip(rec, res));
            }
        }
        let mut checks = Vec::new();
        if let Some(d) = stability(&recs, "fefferman-stein", &self.spacings) {
            checks.push(Check::at_most("max-ratio change between finest levels", d, self.stability));
        }
        Ok(Outcome { records: recs, checks })
    }
}

// ---------------------------------------------------------------- sharp-max

/// Data shared by the solution-based experiments: a 2D half-space box with a
/// support box for the solution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Geometry {
    pub domain: BoxSpec,
    pub support: BoxSpec,
}

impl Geometry {
    pub(crate) fn problem(&self, spec: KernelSpec, datum: GridFunction) -> Result<DirichletProblem> {
        let support = CellMask::from_box(&datum.grid, &bounds(&self.support));
        DirichletProblem::new(spec, datum, support)
    }

    pub(crate) fn check(&self) -> Result<()> {
        require(self.domain.len() == self.support.len(), "support and domain dimensions differ")?;
        for (d, s) in self.domain.iter().zip(&self.support) {
            require(s[0] >= d[0] && s[1] <= d[1] && s[0] < s[1], "support box must lie in the domain")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SharpMaxParams {
    pub s: f64,
    pub t: f64,
    pub spacings: Vec<f64>,
    pub geometry: Geometry,
    pub window: BoxSpec,
    pub kappas: Vec<f64>,
    pub alpha: f64,
    /// Tangential steps as multiples of the grid spacing.
    pub steps: Vec<u32>,
    pub probe_center: [f64; 2],
    pub probe_radius: f64,
    /// Bound on max/min over spacings of the max ratio, per κ.
    pub spread_bound: f64,
}

impl Default for SharpMaxParams {
    fn default() -> Self {
        SharpMaxParams {
            s: 0.75,
            t: 0.0,
            spacings: vec![0.125, 0.0625],
            geometry: Geometry { domain: vec![[-1.0, 1.0], [0.0, 1.0]], support: vec![[-0.75, 0.75], [0.0, 0.75]] },
            window: vec![[-0.7, 0.7], [-0.7, 0.7]],
            kappas: vec![2.0, 4.0, 8.0],
            alpha: 0.5,
            steps: vec![1, 2],
            probe_center: [0.0, 0.0],
            probe_radius: 0.25,
            spread_bound: 4.0,
        }
    }
}

impl Params for SharpMaxParams {
    fn check(&self) -> Result<()> {
        KernelSpec::new(self.s, self.t, 2.0, 0.5 * (self.s + (2.0 * self.s - self.t).min(1.0)))?;
        self.geometry.check()?;
        require(self.kappas.iter().all(|&k| k >= 2.0), "κ must be at least 2")?;
        require(!self.steps.is_empty() && self.steps.iter().all(|&k| k > 0), "steps must be positive multiples")
    }

    fn set_spacing(&mut self, h: f64) {
        self.spacings = ladder(self.spacings.len(), h);
    }
}

impl Experiment for SharpMaxParams {
    const NAME: &'static str = "sharp-max";
    const SUMMARY: &'static str = "sharp maximal bound for second differences of solutions: M#₊δ_{2,h}u vs κ^{−α}(M₊|δ_{2,h}u|²)^{1/2} + |h|^{2s−t}Σ(M|G|²)^{1/2}(x₀, x₀±h), boundedness across spacings";

    fn execute(&self, seed: u64) -> Result<Outcome> {
        let spec = KernelSpec::new(self.s, self.t, 2.0, 0.5 * (self.s + (2.0 * self.s - self.t).min(1.0)))?;
        let field = fields(1, seed, &self.window, false)?.remove(0);
        let mut recs = Vec::new();
        for &h in &self.spacings {
            let g = grid(h, &self.geometry.domain, true)?;
            let big_g = field.sample(&g)?;
            let u = solve_constrained(&self.geometry.problem(spec, big_g.clone())?, 1e-10)?.w;
            let radii = dyadic_radii(&g);
            let probes: Vec<usize> = (0..g.node_count())
                .filter(|&a| {
                    let x = g.node_coords(a);
                    x[1] > 0.0 && (x[0] - self.probe_center[0]).hypot(x[1] - self.probe_center[1]) <= self.probe_radius
                })
                .collect();
            for &m in &self.steps {
                let step = m as f64 * h;
                let d = difference(&u, &[step, 0.0], 2)?;
                let sharp = sharp_maximal(&d, true, &radii)?;
                let sq = GridFunction { grid: g, values: d.values.iter().map(|v| v * v).collect() };
                let mx = maximal(&sq, true, &radii)?;
                for &kappa in &self.kappas {
                    let mut worst = 0.0f64;
                    for &a in &probes {
                        let x = g.node_coords(a);
                        let datum: f64 = [0.0, step, -step]
                            .iter()
                            .map(|sh| local_datum_size(&big_g, &[x[0] + sh, x[1]]).unwrap_or(0.0))
                            .sum();
                        let rhs = kappa.powf(-self.alpha) * mx.values[a].sqrt() + step.powf(2.0 * self.s - self.t) * datum;
                        if rhs > 1e-300 {
                            worst = worst.max(sharp.values[a] / rhs);
                        }
                    }
                    let rec = Record::new(format!("kappa={kappa}")).spacing(h).note(format!("step={step}"));
                    recs.push(if worst > 0.0 { rec.value(worst) } else { rec.skipped("no probe with a positive bound") });
                }
            }
        }
        let mut checks = Vec::new();
        for &kappa in &self.kappas {
            let group = format!("kappa={kappa}");
            let per_level = self
                .spacings
                .iter()
                .map(|&h| max_of(values_where(&recs, |r| r.group == group && r.spacing == Some(h))));
            if let Some(sp) = spread(per_level) {
                checks.push(Check::at_most(format!("spread across spacings, κ={kappa}"), sp, self.spread_bound));
            }
        }
        Ok(Outcome { records: recs, checks })
    }
}

// ---------------------------------------------------------------- holder-decay

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HolderDecayParams {
    pub s: f64,
    pub spacing: f64,
    pub geometry: Geometry,
    pub patches: usize,
    pub center: [f64; 2],
    /// Datum bumps stay this far from the center.
    pub datum_distance: f64,
    /// Oscillation radii as multiples of the grid spacing.
    pub radii: Vec<u32>,
    /// Every fitted slope must exceed this.
    pub min_slope: f64,
}

impl Default for HolderDecayParams {
    fn default() -> Self {
        HolderDecayParams {
            s: 0.75,
            spacing: 0.03125,
            geometry: Geometry { domain: vec![[-1.0, 1.0], [0.0, 1.0]], support: vec![[-1.0, 1.0], [0.0, 1.0]] },
            patches: 5,
            center: [0.0, 0.0],
            datum_distance: 0.55,
            radii: vec![2, 4, 8],
            min_slope: 0.0,
        }
    }
}

impl Params for HolderDecayParams {
    fn check(&self) -> Result<()> {
        KernelSpec::new(self.s, 0.0, 2.0, 0.5 * (self.s + 1.0))?;
        self.geometry.check()?;
        require(self.radii.len() >= 2, "need at least two radii for a slope")?;
        let top = *self.radii.iter().max().unwrap_or(&0) as f64 * self.spacing;
        require(top < self.datum_distance, "largest radius must stay inside the harmonic region")
    }

    fn set_spacing(&mut self, h: f64) {
        self.spacing = h;
    }
}

/// Mean of |u − ū| over the cells of B(x₀, r)⁺, by cell means.
fn mean_oscillation(u: &GridFunction, center: &[f64], r: f64) -> f64 {
    let mask = CellMask::ball(&u.grid, center, r);
    let means: Vec<f64> = mask.selected().map(|c| u.cell_mean(u.grid.cell_multi(c))).collect();
    if means.is_empty() {
        return 0.0;
    }
    let avg = means.iter().sum::<f64>() / means.len() as f64;
    means.iter().map(|m| (m - avg).abs()).sum::<f64>() / means.len() as f64
}

/// Least-squares slope of log y against log x.
fn loglog_slope(pts: &[(f64, f64)]) -> f64 {
    let n = pts.len() as f64;
    let (lx, ly): (Vec<f64>, Vec<f64>) = pts.iter().map(|&(x, y)| (x.ln(), y.ln())).unzip();
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = lx.iter().map(|a| (a - mx).powi(2)).sum();
    sxy / sxx
}

impl HolderDecayParams {
    fn datum(&self, g: &Grid, r: &mut impl Rng) -> Result<GridFunction> {
        let d = self.datum_distance;
        let [cx, cy] = self.center;
        let side = if r.random_bool(0.5) { 1.0 } else { -1.0 };
        let bx = cx + side * r.random_range(d + 0.1..d + 0.3);
        let by = cy + r.random_range(0.2..0.6);
        let width = r.random_range(0.05..0.1);
        let amp = r.random_range(0.5..1.0);
        sample(
            |x| {
                let q = ((x[0] - bx).powi(2) + (x[1] - by).powi(2)) / (width * width);
                if (x[0] - cx).hypot(x[1] - cy) < d || q > 9.0 {
                    0.0
                } else {
                    amp * (-q).exp()
                }
            },
            g,
        )
    }
}

impl Experiment for HolderDecayParams {
    const NAME: &'static str = "holder-decay";
    const SUMMARY: &'static str = "Hölder oscillation decay at the boundary for regional-harmonic patches: log-log slope of mean oscillation vs radius is positive";

    fn execute(&self, seed: u64) -> Result<Outcome> {
        let spec = KernelSpec::new(self.s, 0.0, 2.0, 0.5 * (self.s + 1.0))?;
        let g = grid(self.spacing, &self.geometry.domain, true)?;
        let support = CellMask::from_box(&g, &bounds(&self.geometry.support));
        let form = crate::form::assemble_regional_form(&g, self.s, &support, true)?;
        let rhs = nalgebra::DVector::zeros(form.size());
        let mut system = System { form, rhs };
        let mut r = rng(seed);
        let mut recs = Vec::new();
        for k in 0..self.patches {
            let big_g = self.datum(&g, &mut r)?;
            let problem = DirichletProblem::new(spec, big_g, support.clone())?;
            system.rhs = load_vector(&problem, &system.form)?;
            let u = solve_system(&system, 1e-10)?.w;
            let pts: Vec<(f64, f64)> = self
                .radii
                .iter()
                .map(|&m| {
                    let rad = m as f64 * self.spacing;
                    (rad, mean_oscillation(&u, &self.center, rad))
                })
                .collect();
            let rec = Record::new("slope").spacing(self.spacing).sample(k);
            recs.push(if pts.iter().all(|p| p.1 > 0.0) {
                rec.value(loglog_slope(&pts)).note(
                    pts.iter().map(|(a, b)| format!("osc({a})={b:e}")).collect::<Vec<_>>().join(";"),
                )
            } else {
                rec.skipped("vanishing oscillation")
            });
        }
        let low = values_where(&recs, |_| true).fold(f64::INFINITY, f64::min);
        Ok(Outcome { checks: vec![Check::greater("min fitted slope", low, self.min_slope)], records: recs })
    }
}
