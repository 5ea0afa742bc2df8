//! Dimension reduction: the split identity C′E¹(v, ψ) = H̃(ψ) − X(ψ) for
//! solved u, and boundedness of the duality ratios.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{bounds, grid, max_of, spread, values_where, BoxSpec, Experiment, Outcome};
use crate::config::{ladder, require, Params};
use crate::error::Result;
use crate::grid::{sample, CellMask, GridFunction};
use crate::kernel::KernelSpec;
use crate::random::{rng, BumpField};
use crate::reduction::{normal_line, reduction_report, tangential_line, Datum, ReductionInstance};
use crate::report::{Check, Record};
use crate::solver::{solve_constrained, DirichletProblem};

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ReductionParams {
    pub s: f64,
    pub t: f64,
    pub p: f64,
    pub s_tilde: f64,
    pub spacings: Vec<f64>,
    pub domain: BoxSpec,
    /// Box B = [a, b] × [0, c] carrying u.
    pub support: BoxSpec,
    pub window: BoxSpec,
    /// Number of solved u per spacing.
    pub solutions: usize,
    /// Number of ψ per solution.
    pub test_functions: usize,
    /// η(x′) = (1 − (x′/eta_radius)²)₊.
    pub eta_radius: f64,
    pub residual_tol: f64,
    pub spread_bound: f64,
}

impl Default for ReductionParams {
    fn default() -> Self {
        ReductionParams {
            s: 0.75,
            t: 0.0,
            p: 2.0,
            s_tilde: 0.85,
            spacings: vec![0.0625, 0.03125],
            domain: vec![[-1.25, 1.25], [0.0, 1.25]],
            support: vec![[-1.0, 1.0], [0.0, 1.0]],
            window: vec![[-0.8, 0.8], [-0.8, 0.8]],
            solutions: 2,
            test_functions: 5,
            eta_radius: 0.6,
            residual_tol: 1e-5,
            spread_bound: 3.0,
        }
    }
}

impl Params for ReductionParams {
    fn check(&self) -> Result<()> {
        KernelSpec::new(self.s, self.t, self.p, self.s_tilde)?;
        require(2.0 * self.s - self.s_tilde > self.t.max(0.5), "2s − s̃ must exceed max(t, 1/2)")?;
        require(self.domain.len() == 2 && self.support.len() == 2, "reduction runs in 2D")?;
        require(self.support[1][0] == 0.0, "support box must rest on x_n = 0")?;
        let h = self.spacings.iter().cloned().fold(0.0, f64::max);
        require(
            self.eta_radius + 2.0 * h <= self.support[0][1].min(-self.support[0][0]),
            "η must stay two cells inside the support box",
        )?;
        require(self.support[1][1] - 2.0 * h > 0.3, "support box too shallow for the test functions")
    }

    fn set_spacing(&mut self, h: f64) {
        self.spacings = ladder(self.spacings.len(), h);
    }
}

impl Experiment for ReductionParams {
    const NAME: &'static str = "reduction";
    const SUMMARY: &'static str = "dimension reduction by fiber averages: split identity C′E¹(v, ψ) = H̃(ψ) − X(ψ) for solved u, duality ratio spread across ψ and spacings";

    fn execute(&self, seed: u64) -> Result<Outcome> {
        let spec = KernelSpec::new(self.s, self.t, self.p, self.s_tilde)?;
        let mut r = rng(seed);
        let w = bounds(&self.window);
        let fields: Vec<BumpField> = (0..self.solutions).map(|_| BumpField::random(&mut r, &w, false)).collect::<Result<_>>()?;
        let coarse = self.spacings.iter().cloned().fold(0.0, f64::max);
        let top = self.support[1][1] - 2.0 * coarse;
        let shapes: Vec<(f64, f64)> = (0..self.test_functions).map(|_| test_function_shape(top, &mut r)).collect();
        let mut recs = Vec::new();
        for &h in &self.spacings {
            let g = grid(h, &self.domain, true)?;
            let support = CellMask::from_box(&g, &bounds(&self.support));
            let eta_r = self.eta_radius;
            let eta = sample(|x| (1.0 - (x[0] / eta_r).powi(2)).max(0.0), &tangential_line(&g)?)?;
            let line = normal_line(&g)?;
            let psis: Vec<GridFunction> = shapes
                .iter()
                .map(|&(l, beta)| sample(|x| (x[0] * (l - x[0])).max(0.0) * (1.0 + beta * x[0]), &line))
                .collect::<Result<_>>()?;
            for (k, field) in fields.iter().enumerate() {
                let big_g = field.sample(&g)?;
                let u = solve_constrained(&DirichletProblem::new(spec, big_g.clone(), support.clone())?, 1e-12)?.w;
                let inst = ReductionInstance::new(u, Datum::Solver { big_g, t: self.t }, eta.clone(), spec, support.clone())?;
                let rep = reduction_report(&inst, &psis)?;
                for c in &rep.cases {
                    let mut rec = Record::new("identity").spacing(h).sample(k).value(c.relative_residual).note(format!("psi={}", c.index));
                    rec.lhs = Some(c.reduced);
                    rec.rhs = Some(c.htilde - c.cross);
                    recs.push(rec);
                    recs.push(Record::new("duality").spacing(h).sample(k).value(c.duality_ratio).note(format!("psi={}", c.index)));
                }
            }
        }
        let mut checks = vec![Check::at_most(
            "max relative residual",
            max_of(values_where(&recs, |r| r.group == "identity")),
            self.residual_tol,
        )];
        if let Some(sp) = spread(values_where(&recs, |r| r.group == "duality")) {
            checks.push(Check::at_most("duality ratio spread", sp, self.spread_bound));
        }
        Ok(Outcome { records: recs, checks })
    }
}

/// Shape (L, β) of ψ(x_n) = (x_n(L − x_n))₊(1 + βx_n).
fn test_function_shape(top: f64, r: &mut impl Rng) -> (f64, f64) {
    (r.random_range(0.3..top), r.random_range(-1.0..2.0))
}
