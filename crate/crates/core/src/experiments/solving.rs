//! Solver experiments: correctness of the discrete minimizer, the scaling
//! law, the cutoff commutator and tangential regularity ratios.

use nalgebra::DVector;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::maxfun::Geometry;
use super::{bounds, grid, max_of, spread, values_where, BoxSpec, Experiment, Outcome};
use crate::config::{ladder, require, Params};
use crate::error::Result;
use crate::grid::{lp_norm, sample, CellMask, Grid, GridFunction};
use crate::kernel::KernelSpec;
use crate::random::{rng, BumpField};
use crate::report::{Check, Record};
use crate::seminorm::{seminorm, tangential_seminorm, Region};
use crate::solver::{
    assemble_system, commutator_remainder, golden_line_problem, load_vector, local_datum_size, solve_cutoff_localized,
    solve_direct, solve_system, DirichletProblem, System, GOLDEN_LINE,
};

fn kernel_spec(s: f64, t: f64, p: f64, s_tilde: Option<f64>) -> Result<KernelSpec> {
    let st = s_tilde.unwrap_or(0.5 * (s + (2.0 * s - t).min(1.0)));
    KernelSpec::new(s, t, p, st)
}

// ---------------------------------------------------------------- solve

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolveParams {
    /// D^t orders of the 1D reference problems.
    pub line_t: Vec<f64>,
    /// Small 2D problem.
    pub spacing: f64,
    pub geometry: Geometry,
    pub psd_vectors: usize,
    pub residual_tol: f64,
    pub golden_tol: f64,
    pub psd_tol: f64,
    pub symmetry_tol: f64,
}

impl Default for SolveParams {
    fn default() -> Self {
        SolveParams {
            line_t: vec![0.0, 0.4],
            spacing: 0.125,
            geometry: Geometry { domain: vec![[-1.0, 1.0], [0.0, 1.0]], support: vec![[-0.75, 0.75], [0.0, 0.75]] },
            psd_vectors: 100,
            residual_tol: 1e-8,
            golden_tol: 1e-8,
            psd_tol: 1e-12,
            symmetry_tol: 1e-14,
        }
    }
}

impl Params for SolveParams {
    fn check(&self) -> Result<()> {
        require(self.line_t.iter().all(|&t| (0.0..0.75).contains(&t)), "line_t must lie in [0, 0.75)")?;
        self.geometry.check()
    }

    fn set_spacing(&mut self, h: f64) {
        self.spacing = h;
    }
}

impl SolveParams {
    fn system_records(&self, label: &str, system: &System, seed: u64, recs: &mut Vec<Record>) -> Result<()> {
        let cg = solve_system(system, 1e-13)?;
        let direct = solve_direct(system)?;
        recs.push(Record::new("el-residual").value(cg.el_residual).note(format!("{label},cg")));
        recs.push(Record::new("el-residual").value(direct.el_residual).note(format!("{label},direct")));
        let gap = cg.w.combine(1.0, &direct.w, -1.0)?.max_abs() / direct.w.max_abs().max(1e-300);
        recs.push(Record::new("cg-vs-direct").value(gap).note(label));
        let a = &system.form.matrix;
        let asym = (a - a.transpose()).amax() / a.amax();
        recs.push(Record::new("asymmetry").value(asym).note(label));
        let norm = system.form.norm();
        let mut r = rng(seed);
        let mut worst = f64::INFINITY;
        for _ in 0..self.psd_vectors {
            let x = DVector::from_iterator(a.nrows(), (0..a.nrows()).map(|_| r.random_range(-1.0..1.0)));
            worst = worst.min(x.dot(&(a * &x)) / (norm * x.norm_squared()));
        }
        recs.push(Record::new("psd").value(worst).note(label));
        Ok(())
    }
}

impl Experiment for SolveParams {
    const NAME: &'static str = "solve";
    const SUMMARY: &'static str = "discrete minimizer: Euler–Lagrange residual, CG vs dense factorization, stiffness symmetry and positivity, golden nodal values";

    fn execute(&self, seed: u64) -> Result<Outcome> {
        let mut recs = Vec::new();
        let golden = assemble_system(&golden_line_problem(0.0, 1.0)?)?;
        let w = solve_direct(&golden)?.w;
        for &(x, want) in &GOLDEN_LINE {
            let got = w.eval(&[x]);
            let mut r = Record::new("golden").value((got - want).abs() / want.abs()).note(format!("x={x}"));
            r.lhs = Some(got);
            r.rhs = Some(want);
            recs.push(r);
        }
        for &t in &self.line_t {
            let sys = assemble_system(&golden_line_problem(t, 1.0)?)?;
            self.system_records(&format!("line,t={t}"), &sys, seed, &mut recs)?;
        }
        let g = grid(self.spacing, &self.geometry.domain, true)?;
        let datum = sample(|x| (-8.0 * ((x[0] - 0.1).powi(2) + (x[1] - 0.4).powi(2))).exp(), &g)?;
        let sys = assemble_system(&self.geometry.problem(kernel_spec(0.75, 0.0, 2.0, None)?, datum)?)?;
        self.system_records("box", &sys, seed, &mut recs)?;

        let pick = |grp: &'static str| max_of(values_where(&recs, move |r| r.group == grp));
        let psd = values_where(&recs, |r| r.group == "psd").fold(f64::INFINITY, f64::min);
        let checks = vec![
            Check::at_most("max EL residual", pick("el-residual"), self.residual_tol),
            Check::at_most("max golden relative error", pick("golden"), self.golden_tol),
            Check::at_most("max CG vs direct gap", pick("cg-vs-direct"), self.golden_tol),
            Check::at_most("max relative asymmetry", pick("asymmetry"), self.symmetry_tol),
            Check::at_least("min xᵀAx / (‖A‖‖x‖²)", psd, -self.psd_tol),
        ];
        Ok(Outcome { records: recs, checks })
    }
}

// ---------------------------------------------------------------- solver-scaling

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScalingParams {
    pub s: f64,
    pub t: f64,
    pub spacing: f64,
    /// The line grid is (0, length); support [0, λ].
    pub length: f64,
    pub lambdas: Vec<f64>,
    pub samples: usize,
    /// Window of the unit-scale data Ḡ.
    pub window: [f64; 2],
    pub tolerance: f64,
    /// Scales of the estimate ratio (λ^{−n/2}‖w‖ + λ^{s−n/2}[w]) / (λ^{2s−t}(M|G|²)^{1/2}(λ/2)).
    pub estimate_lambdas: Vec<f64>,
    pub estimate_spread: f64,
}

impl Default for ScalingParams {
    fn default() -> Self {
        ScalingParams {
            s: 0.75,
            t: 0.4,
            spacing: 1.0 / 64.0,
            length: 8.0,
            lambdas: vec![2.0, 4.0],
            samples: 5,
            window: [0.0, 1.0],
            tolerance: 0.05,
            estimate_lambdas: vec![1.0, 2.0, 4.0],
            estimate_spread: 10.0,
        }
    }
}

impl Params for ScalingParams {
    fn check(&self) -> Result<()> {
        kernel_spec(self.s, self.t, 2.0, None)?;
        require(self.lambdas.iter().all(|&l| l >= 1.0 && l < self.length), "λ must lie in [1, length)")?;
        require(self.estimate_lambdas.iter().all(|&l| l > 0.0 && l < self.length), "estimate λ must lie in (0, length)")?;
        require(self.window[1] <= 1.0 && self.window[0] < self.window[1], "window must lie in the unit support")
    }

    fn set_spacing(&mut self, h: f64) {
        self.spacing = h;
    }
}

impl ScalingParams {
    /// Direct solution for the datum λ^{t−2s}Ḡ(x/λ) and support [0, λ].
    fn solve(&self, spec: KernelSpec, lambda: f64, field: &BumpField) -> Result<GridFunction> {
        let scale = lambda.powf(spec.t - 2.0 * spec.s);
        Ok(self.solve_datum(spec, lambda, |x| scale * field.eval(&[x / lambda]))?.1)
    }

    fn solve_datum(&self, spec: KernelSpec, lambda: f64, big_g: impl Fn(f64) -> f64) -> Result<(GridFunction, GridFunction)> {
        let g = Grid::new(1, self.spacing, &[(0.0, self.length)], true)?;
        let datum = sample(|x| big_g(x[0]), &g)?;
        let support = CellMask::from_box(&g, &[(0.0, lambda)]);
        let sys = assemble_system(&DirichletProblem::new(spec, datum.clone(), support)?)?;
        Ok((datum, solve_direct(&sys)?.w))
    }

    /// The estimate ratio for the datum G on (0, λ), with x₀ the node nearest λ/2.
    fn estimate(&self, spec: KernelSpec, lambda: f64, field: &BumpField) -> Result<Record> {
        let (datum, w) = self.solve_datum(spec, lambda, |x| field.eval(&[x / lambda]))?;
        let x0 = (0.5 * lambda / self.spacing).round() * self.spacing;
        let size = local_datum_size(&datum, &[x0])?;
        let all = CellMask::all(&w.grid);
        let lhs = lambda.powf(-0.5) * lp_norm(&w, 2.0, &all)? + lambda.powf(spec.s - 0.5) * seminorm(&w, spec.s, 2.0, &Region::HalfSpace)?;
        Ok(Record::new("estimate").spacing(self.spacing).ratio(lhs, lambda.powf(2.0 * spec.s - spec.t) * size).note(format!("lambda={lambda}")))
    }
}

impl Experiment for ScalingParams {
    const NAME: &'static str = "solver-scaling";
    const SUMMARY: &'static str = "scaling law: the solution for datum λ^{t−2s}Ḡ(x/λ) on [0, λ] equals the unit solution evaluated at x/λ";

    fn execute(&self, seed: u64) -> Result<Outcome> {
        let spec = kernel_spec(self.s, self.t, 2.0, None)?;
        let mut r = rng(seed);
        let mut recs = Vec::new();
        for k in 0..self.samples {
            let field = BumpField::random(&mut r, &[(self.window[0], self.window[1])], false)?;
            let unit = self.solve(spec, 1.0, &field)?;
            for &lambda in &self.lambdas {
                let w = self.solve(spec, lambda, &field)?;
                let g = w.grid;
                let rescaled = sample(|x| if x[0] <= 1.0 * lambda { unit.eval(&[x[0] / lambda]) } else { 0.0 }, &g)?;
                let all = CellMask::all(&g);
                let diff = lp_norm(&w.combine(1.0, &rescaled, -1.0)?, 2.0, &all)?;
                recs.push(
                    Record::new(format!("lambda={lambda}"))
                        .spacing(self.spacing)
                        .sample(k)
                        .ratio(diff, lp_norm(&w, 2.0, &all)?),
                );
            }
        }
        let mut r = rng(seed.wrapping_add(1));
        for k in 0..self.samples {
            let field = BumpField::random(&mut r, &[(self.window[0], self.window[1])], false)?;
            for &lambda in &self.estimate_lambdas {
                let rec = self.estimate(spec, lambda, &field)?;
                recs.push(rec.sample(k));
            }
        }
        let worst = max_of(values_where(&recs, |r| r.group.starts_with("lambda=")));
        let mut checks = vec![Check::at_most("max relative L2 difference", worst, self.tolerance)];
        if let Some(sp) = spread(values_where(&recs, |r| r.group == "estimate")) {
            checks.push(Check::at_most("estimate ratio spread across λ and data", sp, self.estimate_spread));
        }
        Ok(Outcome { checks, records: recs })
    }
}

// ---------------------------------------------------------------- cutoff-commutator

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CutoffParams {
    pub s: f64,
    pub t: f64,
    pub spacing: f64,
    pub domain: BoxSpec,
    pub center: [f64; 2],
    pub lambda: f64,
    pub window: BoxSpec,
    pub steps: Vec<f64>,
    /// The ratio may not grow by more than this factor as |h| shrinks.
    pub growth_bound: f64,
}

impl Default for CutoffParams {
    fn default() -> Self {
        CutoffParams {
            s: 0.75,
            t: 0.0,
            spacing: 0.0625,
            domain: vec![[-2.75, 2.75], [0.0, 3.0]],
            center: [0.0, 0.0],
            lambda: 0.275,
            window: vec![[-2.0, 2.0], [-2.0, 2.0]],
            steps: vec![0.25, 0.125, 0.0625],
            growth_bound: 2.0,
        }
    }
}

impl Params for CutoffParams {
    fn check(&self) -> Result<()> {
        kernel_spec(self.s, self.t, 2.0, None)?;
        require(self.lambda > 0.0, "λ must be positive")?;
        require(self.steps.iter().all(|&h| h > 0.0 && h < self.lambda), "steps must lie in (0, λ)")
    }

    fn set_spacing(&mut self, h: f64) {
        self.spacing = h;
    }
}

impl Experiment for CutoffParams {
    const NAME: &'static str = "cutoff-commutator";
    const SUMMARY: &'static str = "cutoff-localized solution: w = ηw̃ support, and ‖δ_{2,h}[L, η]w̃‖_∞ / (|h|^{2s−t}(M|G|²)^{1/2}(x₀)) bounded across steps";

    fn execute(&self, seed: u64) -> Result<Outcome> {
        let spec = kernel_spec(self.s, self.t, 2.0, None)?;
        let g = grid(self.spacing, &self.domain, true)?;
        let datum = BumpField::random(&mut rng(seed), &bounds(&self.window), false)?.sample(&g)?;
        let loc = solve_cutoff_localized(&datum, spec, &self.center, self.lambda, 1e-10)?;
        let size = local_datum_size(&datum, &self.center)?;
        let mut recs = Vec::new();
        let outside = (0..g.node_count())
            .filter(|&a| {
                let x = g.node_coords(a);
                (x[0] - self.center[0]).hypot(x[1] - self.center[1]) >= 5.0 * self.lambda
            })
            .map(|a| loc.w.values[a].abs())
            .fold(0.0, f64::max);
        recs.push(Record::new("support").value(outside).note("max |w| outside B(x0, 5λ)"));
        for &step in &self.steps {
            let rem = commutator_remainder(&loc, self.s, step)?;
            let sup = rem.iter().map(|(_, v)| v.abs()).fold(0.0, f64::max);
            recs.push(
                Record::new("commutator")
                    .spacing(self.spacing)
                    .ratio(sup, step.powf(2.0 * self.s - self.t) * size)
                    .note(format!("step={step}")),
            );
        }
        let mut checks = vec![Check::at_most("max |w| outside B(x0, 5λ)", outside, 0.0)];
        let ratios: Vec<(f64, f64)> = self
            .steps
            .iter()
            .zip(recs.iter().skip(1))
            .filter_map(|(&h, r)| r.value.map(|v| (h, v)))
            .collect();
        if let Some(&(_, base)) = ratios.iter().max_by(|a, b| a.0.total_cmp(&b.0)) {
            let top = max_of(ratios.iter().map(|r| r.1));
            checks.push(Check::at_most("max ratio / ratio at the largest step", top / base, self.growth_bound));
        }
        Ok(Outcome { records: recs, checks })
    }
}

// ---------------------------------------------------------------- tangential

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TangentialParams {
    pub s: f64,
    pub t: f64,
    pub p: f64,
    pub s_tilde: f64,
    pub spacings: Vec<f64>,
    pub geometry: Geometry,
    pub window: BoxSpec,
    pub samples: usize,
    /// Allowed growth of the ratio from the second finest to the finest level.
    pub growth: f64,
}

impl Default for TangentialParams {
    fn default() -> Self {
        TangentialParams {
            s: 0.75,
            t: 0.0,
            p: 4.0,
            s_tilde: 0.9,
            spacings: vec![0.03125, 0.015625],
            geometry: Geometry { domain: vec![[-1.0, 1.0], [0.0, 1.0]], support: vec![[-0.75, 0.75], [0.0, 0.75]] },
            window: vec![[-0.6, 0.6], [-0.6, 0.6]],
            samples: 5,
            growth: 0.1,
        }
    }
}

impl Params for TangentialParams {
    fn check(&self) -> Result<()> {
        KernelSpec::new(self.s, self.t, self.p, self.s_tilde)?;
        require(self.spacings.len() >= 2, "need two spacings")?;
        self.geometry.check()
    }

    fn set_spacing(&mut self, h: f64) {
        self.spacings = ladder(self.spacings.len(), h);
    }
}

impl Experiment for TangentialParams {
    const NAME: &'static str = "tangential";
    const SUMMARY: &'static str = "tangential regularity of solutions: [u]_{W_T^{s̃,p}} / ‖G‖_{L^p} for seeded data, growth between the two finest spacings";

    fn execute(&self, seed: u64) -> Result<Outcome> {
        let spec = KernelSpec::new(self.s, self.t, self.p, self.s_tilde)?;
        let mut r = rng(seed);
        let w = bounds(&self.window);
        let fields: Vec<BumpField> = (0..self.samples).map(|_| BumpField::random(&mut r, &w, false)).collect::<Result<_>>()?;
        let mut recs = Vec::new();
        for &h in &self.spacings {
            let g = grid(h, &self.geometry.domain, true)?;
            let support = CellMask::from_box(&g, &bounds(&self.geometry.support));
            let form = crate::form::assemble_regional_form(&g, self.s, &support, true)?;
            let mut system = System { rhs: DVector::zeros(form.size()), form };
            for (k, field) in fields.iter().enumerate() {
                let big_g = field.sample(&g)?;
                let problem = DirichletProblem::new(spec, big_g.clone(), support.clone())?;
                system.rhs = load_vector(&problem, &system.form)?;
                let u = solve_system(&system, 1e-10)?.w;
                let num = tangential_seminorm(&u, self.s_tilde, self.p, false)?;
                let den = lp_norm(&big_g, self.p, &CellMask::all(&g))?;
                recs.push(Record::new("tangential").spacing(h).sample(k).ratio(num, den));
            }
        }
        let mut hs = self.spacings.clone();
        hs.sort_by(f64::total_cmp);
        let mut growth = Vec::new();
        for k in 0..self.samples {
            let at = |h: f64| values_where(&recs, move |r| r.sample == Some(k) && r.spacing == Some(h)).next();
            if let (Some(fine), Some(coarse)) = (at(hs[0]), at(hs[1])) {
                growth.push(fine / coarse - 1.0);
            }
        }
        Ok(Outcome { checks: vec![Check::at_most("max ratio growth between finest levels", max_of(growth), self.growth)], records: recs })
    }
}
