//! Kernel constants, difference quotients, Hardy and embedding ratios, and
//! operator calculus checks.

use serde::{Deserialize, Serialize};
use statrs::function::gamma::gamma;

use super::{grid, max_of, or_skip, stability, values_where, BoxSpec, Experiment, Outcome};
use crate::config::{ladder, require, Params};
use crate::error::Result;
use crate::form::assemble_regional_form;
use crate::frac::{frac_laplacian, frac_laplacian_with, riesz_potential, RayOptions};
use crate::grid::{boundary_weighted_norm, difference, lp_norm, sample, CellMask, Grid, GridFunction};
use crate::kernel::{c_lap, c_riesz, slice_integral, slice_kernel_closed_form, slice_kernel_constant};
use crate::quadrature::adaptive_to_inf;
use crate::random::{rng, BumpField};
use crate::report::{Check, Record};
use crate::seminorm::{exterior_term, seminorm, seminorm_pow, seminorm_pow_pointwise, Region};

fn check_s(s: f64) -> Result<()> {
    require(s > 0.5 && s < 1.0, format!("s = {s} must lie in (1/2, 1)"))
}

fn fields(count: usize, seed: u64, window: &BoxSpec, vanish: bool) -> Result<Vec<BumpField>> {
    let mut r = rng(seed);
    let w = super::bounds(window);
    (0..count).map(|_| BumpField::random(&mut r, &w, vanish)).collect()
}

// ---------------------------------------------------------------- slice-kernel

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SliceKernelParams {
    /// (n, t, p) triples compared between quadrature and the Beta closed form.
    pub cases: Vec<(usize, f64, f64)>,
    pub slice_a: Vec<f64>,
    pub half_line_xn: Vec<f64>,
    pub tolerance: f64,
}

impl Default for SliceKernelParams {
    fn default() -> Self {
        SliceKernelParams {
            cases: vec![(2, 0.5, 2.0), (2, 0.0, 2.0), (2, 0.0, 4.0), (1, 0.5, 2.0), (2, 0.3, 4.0), (2, 0.75, 2.0)],
            slice_a: vec![0.5, 1.0, 2.0],
            half_line_xn: vec![0.1, 0.5, 1.0, 2.0, 5.0],
            tolerance: 1e-8,
        }
    }
}

impl Params for SliceKernelParams {
    fn check(&self) -> Result<()> {
        for &(n, t, p) in &self.cases {
            require((1..=2).contains(&n), format!("n = {n} must be 1 or 2"))?;
            require(n as f64 + t * p > 1.0, format!("n + tp must exceed 1 for ({n}, {t}, {p})"))?;
        }
        require(self.slice_a.iter().all(|&a| a > 0.0), "slice offsets must be positive")?;
        require(self.tolerance > 0.0, "tolerance must be positive")
    }

    fn set_spacing(&mut self, _: f64) {}
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

impl Experiment for SliceKernelParams {
    const NAME: &'static str = "slice-kernel";
    const SUMMARY: &'static str = "slice-kernel constant C(n,t,p) = ∫(1+z²)^{−(n+tp)/2}: Beta closed form vs quadrature, full-line slice identity, half-line bound";

    fn execute(&self, _seed: u64) -> Result<Outcome> {
        let mut recs = Vec::new();
        for &(n, t, p) in &self.cases {
            let q = slice_kernel_constant(n, t, p)?;
            let c = slice_kernel_closed_form(n, t, p)?;
            let mut r = Record::new(format!("closed-form n={n},t={t},p={p}")).value(rel(q, c));
            r.lhs = Some(q);
            r.rhs = Some(c);
            recs.push(r);
        }
        for (label, (n, t, p), exact) in [("C(2,0.5,2)=2", (2, 0.5, 2.0), 2.0), ("C(2,0,2)=pi", (2, 0.0, 2.0), std::f64::consts::PI), ("C(2,0,4)=pi", (2, 0.0, 4.0), std::f64::consts::PI)] {
            let q = slice_kernel_constant(n, t, p)?;
            let mut r = Record::new(label).value(rel(q, exact));
            r.lhs = Some(q);
            r.rhs = Some(exact);
            recs.push(r);
        }
        let (n, t, p) = (2, 0.5, 2.0);
        let c = slice_kernel_closed_form(n, t, p)?;
        let expo = (n as f64 - 1.0) + t * p;
        for &a in &self.slice_a {
            let lhs = slice_integral(a, n, t, p, f64::NEG_INFINITY);
            let rhs = c * a.powf(-expo);
            let mut r = Record::new(format!("full-line a={a}")).value(rel(lhs, rhs));
            r.lhs = Some(lhs);
            r.rhs = Some(rhs);
            recs.push(r);
        }
        for &a in &self.slice_a {
            for &xn in &self.half_line_xn {
                let lhs = slice_integral(a, n, t, p, -xn);
                recs.push(Record::new("half-line").ratio(lhs, c * a.powf(-expo)).note(format!("a={a},x_n={xn}")));
            }
        }
        let err = max_of(values_where(&recs, |r| r.group != "half-line"));
        let half = max_of(values_where(&recs, |r| r.group == "half-line"));
        let checks = vec![
            Check::at_most("max relative error", err, self.tolerance),
            Check::at_most("max half-line ratio", half, 1.0),
        ];
        Ok(Outcome { records: recs, checks })
    }
}

// ---------------------------------------------------------------- second-diff

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SecondDiffParams {
    pub spacing: f64,
    /// Full-space box holding every shifted copy of the samples.
    pub domain: BoxSpec,
    pub window: BoxSpec,
    pub samples: usize,
    /// (t, p) pairs.
    pub pairs: Vec<(f64, f64)>,
    /// Offsets h = spacing·2^k, k = 0..=max_level, along the first axis.
    pub max_level: u32,
    pub slack: f64,
}

impl Default for SecondDiffParams {
    fn default() -> Self {
        SecondDiffParams {
            spacing: 1.0 / 32.0,
            domain: vec![[-2.0, 2.0], [-2.0, 2.0]],
            window: vec![[-1.0, 1.0], [-1.0, 1.0]],
            samples: 30,
            pairs: vec![(0.3, 2.0), (0.5, 4.0)],
            max_level: 5,
            slack: 0.05,
        }
    }
}

impl Params for SecondDiffParams {
    fn check(&self) -> Result<()> {
        require(self.spacing > 0.0, "spacing must be positive")?;
        require(self.domain.len() == self.window.len(), "window and domain dimensions differ")?;
        for &(t, p) in &self.pairs {
            require(t > 0.0 && t < 1.0, format!("t = {t} must lie in (0, 1)"))?;
            require(p >= 1.0, format!("p = {p} must be at least 1"))?;
        }
        let reach = self.spacing * 2f64.powi(self.max_level as i32);
        require(
            self.window[0][0] - reach >= self.domain[0][0] && self.window[0][1] + reach <= self.domain[0][1],
            "largest offset pushes the window out of the domain",
        )?;
        require(self.slack >= 0.0, "slack must be nonnegative")
    }

    fn set_spacing(&mut self, h: f64) {
        self.spacing = h;
    }
}

impl Experiment for SecondDiffParams {
    const NAME: &'static str = "second-diff";
    const SUMMARY: &'static str = "first vs second differences: sup_h |h|^{−t}‖δ_h f‖_p ≤ (2−2^t)^{−1} sup_h |h|^{−t}‖δ_{2,h} f‖_p on dyadic lattice offsets";

    fn execute(&self, seed: u64) -> Result<Outcome> {
        let g = grid(self.spacing, &self.domain, false)?;
        let all = CellMask::all(&g);
        let fs = fields(self.samples, seed, &self.window, false)?;
        let dim = g.dim();
        let mut recs = Vec::new();
        for (k, field) in fs.iter().enumerate() {
            let f = field.sample(&g)?;
            let offsets: Vec<f64> = (0..=self.max_level).map(|l| self.spacing * 2f64.powi(l as i32)).collect();
            let mut norms = Vec::new();
            for &h in &offsets {
                let mut v = vec![0.0; dim];
                v[0] = h;
                norms.push((h, difference(&f, &v, 1)?, difference(&f, &v, 2)?));
            }
            for &(t, p) in &self.pairs {
                let rec = Record::new(format!("t={t},p={p}")).spacing(self.spacing).sample(k);
                let res = (|| -> Result<Record> {
                    let mut first = 0.0f64;
                    let mut second = 0.0f64;
                    for (h, d1, d2) in &norms {
                        first = first.max(h.powf(-t) * lp_norm(d1, p, &all)?);
                        second = second.max(h.powf(-t) * lp_norm(d2, p, &all)?);
                    }
                    Ok(rec.clone().ratio(first, second / (2.0 - 2f64.powf(t))))
                })();
                recs.push(or_skip(rec, res));
            }
        }
        let worst = max_of(values_where(&recs, |_| true));
        Ok(Outcome { checks: vec![Check::at_most("max ratio", worst, 1.0 + self.slack)], records: recs })
    }
}

// ---------------------------------------------------------------- hardy

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HardyParams {
    pub s: f64,
    pub spacings: Vec<f64>,
    pub domain: BoxSpec,
    pub window: BoxSpec,
    pub samples: usize,
    /// Allowed relative change of the max ratio between the two finest levels.
    pub stability: f64,
}

impl Default for HardyParams {
    fn default() -> Self {
        HardyParams {
            s: 0.75,
            spacings: vec![0.125, 0.0625, 0.03125],
            domain: vec![[-1.0, 1.0], [0.0, 1.0]],
            window: vec![[-0.75, 0.75], [-0.75, 0.75]],
            samples: 30,
            stability: 0.1,
        }
    }
}

impl Params for HardyParams {
    fn check(&self) -> Result<()> {
        check_s(self.s)?;
        require(!self.spacings.is_empty(), "need at least one spacing")?;
        require(self.domain.len() == 2 && self.window.len() == 2, "hardy runs on 2D half-space boxes")
    }

    fn set_spacing(&mut self, h: f64) {
        self.spacings = ladder(self.spacings.len(), h);
    }
}

impl Experiment for HardyParams {
    const NAME: &'static str = "hardy";
    const SUMMARY: &'static str = "fractional Hardy inequality ‖v/x_n^s‖_{L²} ≲ [v]_{W^{s,2}(ℝⁿ₊)} for boundary-vanishing bumps, ratio stability under refinement";

    fn execute(&self, seed: u64) -> Result<Outcome> {
        let fs = fields(self.samples, seed, &self.window, true)?;
        let mut recs = Vec::new();
        for &h in &self.spacings {
            let g = grid(h, &self.domain, true)?;
            for (k, field) in fs.iter().enumerate() {
                let v = field.sample(&g)?;
                let base = |grp: &str| Record::new(grp).spacing(h).sample(k);
                let res = (|| -> Result<(Record, Record)> {
                    let pairs = seminorm_pow(&v, self.s, 2.0, &Region::Cells(CellMask::all(&g)))?;
                    let half = (pairs + exterior_term(&v, 2.0, 2.0 * self.s, true)?).sqrt();
                    let full = (pairs + exterior_term(&v, 2.0, 2.0 * self.s, false)?).sqrt();
                    let weighted = boundary_weighted_norm(&v, self.s)?;
                    Ok((base("hardy").ratio(weighted, half), base("full-over-half").ratio(full, half)))
                })();
                match res {
                    Ok((a, b)) => {
                        recs.push(a);
                        recs.push(b);
                    }
                    Err(e) => recs.push(base("hardy").skipped(e.to_string())),
                }
            }
        }
        let mut checks = Vec::new();
        if let Some(d) = stability(&recs, "hardy", &self.spacings) {
            checks.push(Check::at_most("max-ratio change between finest levels", d, self.stability));
        }
        let low = values_where(&recs, |r| r.group == "full-over-half").fold(f64::INFINITY, f64::min);
        if low.is_finite() {
            checks.push(Check::at_least("min [v]_full / [v]_half", low, 1.0));
        }
        Ok(Outcome { records: recs, checks })
    }
}

// ---------------------------------------------------------------- embedding

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EmbeddingParams {
    pub s: f64,
    pub spacing: f64,
    pub domain: BoxSpec,
    pub window: BoxSpec,
    pub samples: usize,
    /// Tangential offsets h = spacing·2^k, k = 0..=max_level.
    pub max_level: u32,
    /// Local variant: ‖δ_h f‖ over B(0,R)⁺ against [f] over B(0,R_outer)⁺.
    pub inner_radius: f64,
    pub outer_radius: f64,
    /// Bound on ratio(h_min) / ratio(h_max) per sample.
    pub growth_bound: f64,
}

impl Default for EmbeddingParams {
    fn default() -> Self {
        EmbeddingParams {
            s: 0.75,
            spacing: 0.03125,
            domain: vec![[-1.0, 1.0], [0.0, 1.0]],
            window: vec![[-0.75, 0.75], [-0.75, 0.75]],
            samples: 10,
            max_level: 3,
            inner_radius: 0.4,
            outer_radius: 0.9,
            growth_bound: 1.5,
        }
    }
}

impl Params for EmbeddingParams {
    fn check(&self) -> Result<()> {
        check_s(self.s)?;
        require(self.inner_radius > 0.0 && self.outer_radius > self.inner_radius, "need 0 < inner_radius < outer_radius")?;
        let reach = self.spacing * 2f64.powi(self.max_level as i32);
        require(
            self.window[0][0] - reach >= self.domain[0][0] && self.window[0][1] + reach <= self.domain[0][1],
            "largest offset pushes the window out of the domain",
        )
    }

    fn set_spacing(&mut self, h: f64) {
        self.spacing = h;
    }
}

impl Experiment for EmbeddingParams {
    const NAME: &'static str = "embedding";
    const SUMMARY: &'static str = "difference-quotient embedding ‖δ_h f‖_{L²(ℝⁿ₊)} ≲ |h|^s [f]_{W^{s,2}(ℝⁿ₊)} for tangential h, plus the local half-ball variant";

    fn execute(&self, seed: u64) -> Result<Outcome> {
        let g = grid(self.spacing, &self.domain, true)?;
        let fs = fields(self.samples, seed, &self.window, false)?;
        let all = CellMask::all(&g);
        let inner = CellMask::ball(&g, &[0.0, 0.0], self.inner_radius);
        let outer = Region::ball(&g, &[0.0, 0.0], self.outer_radius);
        let mut recs = Vec::new();
        let mut growth = Vec::new();
        for (k, field) in fs.iter().enumerate() {
            let f = field.sample(&g)?;
            let semi = seminorm(&f, self.s, 2.0, &Region::HalfSpace)?;
            let local = seminorm(&f, self.s, 2.0, &outer)?;
            let mut ratios = Vec::new();
            for l in 0..=self.max_level {
                let h = self.spacing * 2f64.powi(l as i32);
                let d = difference(&f, &[h, 0.0], 1)?;
                let r = Record::new("global").spacing(self.spacing).sample(k).ratio(lp_norm(&d, 2.0, &all)?, h.powf(self.s) * semi).note(format!("h={h}"));
                if let Some(v) = r.value {
                    ratios.push(v);
                }
                recs.push(r);
                recs.push(
                    Record::new("local")
                        .spacing(self.spacing)
                        .sample(k)
                        .ratio(lp_norm(&d, 2.0, &inner)?, h.powf(self.s) * local)
                        .note(format!("h={h}")),
                );
            }
            if let (Some(first), Some(last)) = (ratios.first(), ratios.last()) {
                growth.push(first / last);
            }
        }
        let checks = vec![Check::at_most("max ratio(h_min) / ratio(h_max)", max_of(growth), self.growth_bound)];
        Ok(Outcome { records: recs, checks })
    }
}

// ---------------------------------------------------------------- operator-sanity

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OperatorSanityParams {
    pub t: f64,
    /// Composition D^{−t}D^t e^{−x²/2} on [−half_width, half_width].
    pub spacing: f64,
    pub half_width: f64,
    /// L² error measured on [−eval_width, eval_width].
    pub eval_width: f64,
    pub composition_tol: f64,
    /// D^{1/2} of the normalized Gaussian at 0.
    pub oracle_value: f64,
    /// c_lap(1, 1/2) = 1/(2√(2π)) to six digits, relative tolerance.
    pub c_lap_tol: f64,
    pub oracle_tol: f64,
    pub oracle_spacing: f64,
    pub constant_tol: f64,
    /// p = 2 seminorm against the assembled form on random functions.
    pub seminorm_samples: usize,
    pub seminorm_tol: f64,
}

impl Default for OperatorSanityParams {
    fn default() -> Self {
        OperatorSanityParams {
            t: 0.5,
            spacing: 1.0 / 128.0,
            half_width: 20.0,
            eval_width: 4.0,
            composition_tol: 1e-3,
            oracle_value: 0.327987,
            c_lap_tol: 1e-5,
            oracle_tol: 1e-4,
            oracle_spacing: 1.0 / 256.0,
            constant_tol: 1e-6,
            seminorm_samples: 20,
            seminorm_tol: 1e-6,
        }
    }
}

impl Params for OperatorSanityParams {
    fn check(&self) -> Result<()> {
        require(self.t > 0.0 && self.t < 1.0, format!("t = {} must lie in (0, 1)", self.t))?;
        require(self.eval_width < self.half_width, "eval_width must be inside the domain")?;
        require(self.spacing > 0.0 && self.oracle_spacing > 0.0, "spacings must be positive")
    }

    fn set_spacing(&mut self, h: f64) {
        self.spacing = h;
    }
}

/// Two-term large-|x| expansion of D^t e^{−x²/2} in 1D.
fn gaussian_frac_tail(x: f64, t: f64) -> f64 {
    let a = 0.5 * (1.0 + t);
    let k = 2f64.powf(0.5 * t) * gamma(a) / std::f64::consts::PI.sqrt();
    let z = 0.5 * x * x;
    k * std::f64::consts::PI.sqrt() / gamma(0.5 - a) * z.powf(-a) * (1.0 + a * (a + 0.5) / z)
}

impl OperatorSanityParams {
    fn composition(&self) -> Result<Record> {
        let t = self.t;
        let l = self.half_width;
        let g = Grid::new(1, self.spacing, &[(-l, l)], false)?;
        let gauss = sample(|x| (-0.5 * x[0] * x[0]).exp(), &g)?;
        let nodes: Vec<Vec<f64>> = (0..g.node_count()).map(|i| vec![g.node_coords(i)[0]]).collect();
        let dg = GridFunction::new(&g, frac_laplacian(&gauss, t, &nodes)?)?;
        let e = self.eval_width;
        let sub = Grid::new(1, self.spacing, &[(-e, e)], false)?;
        let pts: Vec<Vec<f64>> = (0..sub.node_count()).map(|i| vec![sub.node_coords(i)[0]]).collect();
        let inner = riesz_potential(&dg, t, &pts)?;
        let cr = c_riesz(1, t)?;
        let back: Vec<f64> = pts
            .iter()
            .zip(&inner)
            .map(|(x, v)| {
                let x = x[0];
                let tail = |y: f64| (y - x).abs().powf(t - 1.0) * gaussian_frac_tail(y, t);
                let far = adaptive_to_inf(tail, l, 1e-12, 0.0) + adaptive_to_inf(|y| tail(-y), l, 1e-12, 0.0);
                v + cr * far
            })
            .collect();
        let back = GridFunction::new(&sub, back)?;
        let exact = sample(|x| (-0.5 * x[0] * x[0]).exp(), &sub)?;
        let all = CellMask::all(&sub);
        let err = lp_norm(&back.combine(1.0, &exact, -1.0)?, 2.0, &all)?;
        Ok(Record::new("composition").spacing(self.spacing).ratio(err, lp_norm(&exact, 2.0, &all)?))
    }

    fn oracle(&self) -> Result<Record> {
        let g = Grid::new(1, self.oracle_spacing, &[(-10.0, 10.0)], false)?;
        let c = 1.0 / (2.0 * std::f64::consts::PI).sqrt();
        let f = sample(|x| c * (-0.5 * x[0] * x[0]).exp(), &g)?;
        let v = frac_laplacian(&f, 0.5, &[vec![0.0]])?[0];
        let mut r = Record::new("D^0.5 gaussian(0)").spacing(self.oracle_spacing).value((v - self.oracle_value).abs());
        r.lhs = Some(v);
        r.rhs = Some(self.oracle_value);
        Ok(r)
    }

    fn constant(&self) -> Result<Record> {
        let g = Grid::new(1, 0.125, &[(-4.0, 4.0)], false)?;
        let one = sample(|_| 3.0, &g)?;
        let opts = RayOptions { max_radius: Some(2.0) };
        let v = frac_laplacian_with(&one, self.t, &[vec![0.3], vec![-1.1], vec![0.0]], &opts)?;
        Ok(Record::new("constant").value(max_of(v.iter().map(|x| x.abs()))))
    }

    fn seminorms(&self, seed: u64) -> Result<Vec<Record>> {
        let g = Grid::new(2, 0.125, &[(-1.0, 1.0), (0.0, 1.0)], true)?;
        let s = 0.75;
        let form = assemble_regional_form(&g, s, &CellMask::all(&g), true)?;
        let fs = fields(self.seminorm_samples, seed, &vec![[-0.75, 0.75], [-0.75, 0.75]], false)?;
        let mut out = Vec::new();
        for (k, field) in fs.iter().enumerate() {
            let f = field.sample(&g)?;
            let direct = seminorm_pow_pointwise(&f, s, 2.0, &Region::HalfSpace)?;
            let matrix = form.quadratic(&f);
            let mut r = Record::new("seminorm-vs-matrix").spacing(0.125).sample(k).value(rel(direct, matrix));
            r.lhs = Some(direct);
            r.rhs = Some(matrix);
            out.push(r);
        }
        Ok(out)
    }
}

impl Experiment for OperatorSanityParams {
    const NAME: &'static str = "operator-sanity";
    const SUMMARY: &'static str = "operator calculus: D^{−t}D^t on a Gaussian, D^{1/2} Gaussian oracle, D^t of constants, constants c_lap/c_riesz, p = 2 seminorm vs Galerkin form";

    fn execute(&self, seed: u64) -> Result<Outcome> {
        let mut recs = Vec::new();
        let cl = c_lap(1, 0.5)?;
        let mut r = Record::new("c_lap(1,0.5)").value(rel(cl, 0.199471));
        r.lhs = Some(cl);
        r.rhs = Some(0.199471);
        recs.push(r);
        let cr = c_riesz(2, self.t)?;
        recs.push(Record::new("c_riesz(2,t)>0").value(cr));
        recs.push(self.composition()?);
        recs.push(self.oracle()?);
        recs.push(self.constant()?);
        recs.extend(self.seminorms(seed)?);
        let pick = |g: &str| max_of(values_where(&recs, |r| r.group == g));
        let checks = vec![
            Check::at_most("c_lap(1,0.5) relative error", pick("c_lap(1,0.5)"), self.c_lap_tol),
            Check::greater("c_riesz(2,t)", pick("c_riesz(2,t)>0"), 0.0),
            Check::at_most("composition relative L2 error", pick("composition"), self.composition_tol),
            Check::at_most("|D^0.5 gaussian(0) - oracle|", pick("D^0.5 gaussian(0)"), self.oracle_tol),
            Check::at_most("|D^t const| inside halo", pick("constant"), self.constant_tol),
            Check::at_most("seminorm vs matrix relative gap", pick("seminorm-vs-matrix"), self.seminorm_tol),
        ];
        Ok(Outcome { records: recs, checks })
    }
}
