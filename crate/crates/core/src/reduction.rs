//! Reduction of the half-space problem to the half-line: fiber averages,
//! the split functionals G̃, H̃ and the cross term.
//!
//! All double integrals run over ℝ²₊ × ℝ²₊. The function u is supported in a
//! box B = [a, b] × [0, c] of cells and η, ψ stay at least two cells inside
//! B; pairs with a point outside B reduce to layer integrals against the
//! kernels Z(d, e) = ∫_e^∞ (d² + z²)^{−m} dz and ∫_{e}^∞ Z(·, d) de with
//! m = (n + 2s)/2, which are evaluated in closed form.

use serde::Serialize;
use statrs::function::beta::{beta, beta_reg};

use crate::error::{Error, Result};
use crate::form::{exterior_weight, mask_box, tail_points};
use crate::frac::duality_rhs;
use crate::grid::{lp_norm, CellMask, Grid, GridFunction};
use crate::kernel::{slice_kernel_closed_form, KernelSpec};
use crate::quadrature::{gauss_jacobi, gauss_legendre};
use crate::seminorm::{pair_bilinear, pair_sum_many, seminorm, support_cells, tangential_seminorm, Region};

const LAYER_POINTS: usize = 6;

/// Source of the functional g in the equation E(u, φ) = g[φ].
#[derive(Debug, Clone)]
pub enum Datum {
    /// g[φ] := E(u, φ), the functional u induces.
    Induced,
    /// g[φ] = −∫G D^tφ, the datum of the minimization problem.
    Solver { big_g: GridFunction, t: f64 },
}

#[derive(Debug, Clone)]
pub struct ReductionInstance {
    pub u: GridFunction,
    pub datum: Datum,
    /// η on the tangential line grid.
    pub eta: GridFunction,
    pub spec: KernelSpec,
    /// The box B carrying u.
    pub support: CellMask,
    /// C′ = ∫(1 + z²)^{−(n+2s)/2} dz.
    pub slice_constant: f64,
}

/// Tangential line grid of a 2D grid.
pub fn tangential_line(g: &Grid) -> Result<Grid> {
    Grid::new(1, g.spacing(), &[(g.lower(0), g.upper(0))], false)
}

/// Normal half-line grid of a 2D half-space grid.
pub fn normal_line(g: &Grid) -> Result<Grid> {
    Grid::new(1, g.spacing(), &[(0.0, g.upper(1))], true)
}

fn nonzero_range(f: &GridFunction) -> Option<(f64, f64)> {
    let g = &f.grid;
    let idx: Vec<usize> = (0..g.node_count()).filter(|&i| f.values[i] != 0.0).collect();
    Some((g.node_coords(*idx.first()?)[0], g.node_coords(*idx.last()?)[0]))
}

impl ReductionInstance {
    pub fn new(u: GridFunction, datum: Datum, eta: GridFunction, spec: KernelSpec, support: CellMask) -> Result<Self> {
        spec.validate()?;
        let (s, st, t) = (spec.s, spec.s_tilde, spec.t);
        if !(2.0 * s - st > t.max(0.5)) {
            return Err(Error::Parameter(format!("2s − s̃ = {} must exceed max(t, 1/2)", 2.0 * s - st)));
        }
        let g = &u.grid;
        if g.dim() != 2 || !g.halfspace() {
            return Err(Error::Domain("reduction needs a 2D half-space grid".into()));
        }
        if eta.grid != tangential_line(g)? {
            return Err(Error::Grid("η is not on the tangential axis of u".into()));
        }
        if support.grid != *g {
            return Err(Error::Grid("support mask grid differs".into()));
        }
        let bx = mask_box(&support).ok_or_else(|| Error::Domain("support must be a box".into()))?;
        if bx[1].0 != 0.0 {
            return Err(Error::Domain("support box must rest on x_n = 0".into()));
        }
        let inside = support.nodes();
        let h = g.spacing();
        for a in 0..g.node_count() {
            let x = g.node_coords(a);
            let interior = x[0] > bx[0].0 && x[0] < bx[0].1 && x[1] < bx[1].1;
            if u.values[a] != 0.0 && !(inside[a] && interior) {
                return Err(Error::Domain("u does not vanish outside the open support box".into()));
            }
        }
        if let Some((lo, hi)) = nonzero_range(&eta) {
            if lo < bx[0].0 + 2.0 * h - 1e-9 || hi > bx[0].1 - 2.0 * h + 1e-9 {
                return Err(Error::Domain("η must stay two cells inside the box".into()));
            }
        }
        if let Datum::Solver { big_g, .. } = &datum {
            if big_g.grid != *g {
                return Err(Error::Grid("datum grid differs from u".into()));
            }
        }
        let slice_constant = slice_kernel_closed_form(2, 2.0 * s, 1.0)?;
        Ok(ReductionInstance { u, datum, eta, spec, support, slice_constant })
    }

    fn bounds(&self) -> Vec<(f64, f64)> {
        mask_box(&self.support).expect("validated box")
    }
}

/// v(x_n) = ∫ u(z′, x_n) η(z′) dz′ on the half-line grid.
pub fn fiber_average(u: &GridFunction, eta: &GridFunction) -> Result<GridFunction> {
    let g = &u.grid;
    if g.dim() != 2 || eta.grid != tangential_line(g)? {
        return Err(Error::Grid("η is not on the tangential axis of u".into()));
    }
    let line = normal_line(g)?;
    let rule = gauss_legendre(3);
    let h = g.spacing();
    let values = (0..g.nodes(1))
        .map(|j| {
            let xn = g.lower(1) + j as f64 * h;
            (0..g.cells(0))
                .map(|i| {
                    let o = g.cell_origin([i, 0])[0];
                    rule.integrate(o, o + h, |z| u.eval(&[z, xn]) * eta.eval(&[z]))
                })
                .sum()
        })
        .collect();
    GridFunction::new(&line, values)
}

/// ψ̃(x) = ψ(x_n)η(x′) on the grid of u.
pub fn tensor(psi: &GridFunction, eta: &GridFunction, grid: &Grid) -> Result<GridFunction> {
    if psi.grid != normal_line(grid)? || eta.grid != tangential_line(grid)? {
        return Err(Error::Grid("factors are not on the axes of the grid".into()));
    }
    let values = (0..grid.node_count())
        .map(|a| {
            let k = grid.node_multi(a);
            psi.values[k[1]] * eta.values[k[0]]
        })
        .collect();
    GridFunction::new(grid, values)
}

/// Z(d, e) = ∫_e^∞ (d² + z²)^{−m} dz for e ≥ 0.
pub fn z_kernel(d: f64, e: f64, m: f64) -> f64 {
    let d = d.abs();
    if d == 0.0 {
        return e.powf(1.0 - 2.0 * m) / (2.0 * m - 1.0);
    }
    let x = d * d / (d * d + e * e);
    d.powf(1.0 - 2.0 * m) * 0.5 * beta(m - 0.5, 0.5) * beta_reg(m - 0.5, 0.5, x)
}

/// ∫_{e0}^∞ ∫_d^∞ (z² + e²)^{−m} dz de for d, e0 > 0, m = 1 + s.
pub fn corner_kernel(d: f64, e0: f64, s: f64) -> f64 {
    let th = e0.atan2(d);
    let rule = gauss_jacobi(12, 2.0 * s);
    // ∫_0^θ sin^{2s} = θ^{2s+1} ∫_0^1 u^{2s} (sin θu / θu)^{2s} du
    let part = |th: f64| -> f64 {
        if th <= 0.0 {
            return 0.0;
        }
        th.powf(2.0 * s + 1.0)
            * rule.nodes.iter().zip(&rule.weights).map(|(&u, &w)| w * ((th * u).sin() / (th * u)).powf(2.0 * s)).sum::<f64>()
    };
    (e0.powf(-2.0 * s) * part(th) + d.powf(-2.0 * s) * part(std::f64::consts::FRAC_PI_2 - th)) / (2.0 * s)
}

/// E(u, φ) = ∫∫_{ℝⁿ₊×ℝⁿ₊}(u(x)−u(y))(φ(x)−φ(y))|x−y|^{−n−2s} for u, φ supported in the box.
pub fn regional_energy(u: &GridFunction, phi: &GridFunction, s: f64, support: &CellMask) -> Result<f64> {
    let g = &u.grid;
    if phi.grid != *g || support.grid != *g {
        return Err(Error::Grid("grid mismatch".into()));
    }
    let bx = mask_box(support).ok_or_else(|| Error::Domain("support must be a box".into()))?;
    let dim = g.dim();
    let active = support_cells(phi);
    let inner = pair_bilinear(g, &support.cells, u, phi, dim as f64 + 2.0 * s);
    let h = g.spacing();
    let vol = h.powi(dim as i32);
    let mut outer = 0.0;
    for ci in support.selected() {
        if !active[ci] {
            continue;
        }
        let c = g.cell_multi(ci);
        let o = g.cell_origin(c);
        for (xi, w) in tail_points(g, &bx, c, true) {
            let v = u.eval_local(c, &xi) * phi.eval_local(c, &xi);
            if v == 0.0 {
                continue;
            }
            let x = [o[0] + xi[0] * h, o[1] + xi[1] * h];
            outer += w * v * exterior_weight(&x[..dim], 2.0 * s, &bx, true)?;
        }
    }
    Ok(inner + 2.0 * outer * vol)
}

/// E¹(v, ψ) over (0, ∞)², v and ψ supported in [0, c] with c the top of the box.
pub fn oned_regional_form(v: &GridFunction, psi: &GridFunction, s: f64) -> Result<f64> {
    if v.grid != psi.grid {
        return Err(Error::Grid("v and ψ live on different grids".into()));
    }
    if v.grid.dim() != 1 || !v.grid.halfspace() {
        return Err(Error::Domain("1D form needs a half-line grid".into()));
    }
    regional_energy(v, psi, s, &CellMask::all(&v.grid))
}

/// Gauss points of the box cells along one axis: (coordinate, weight).
fn layer_points(g: &Grid, axis: usize, range: (f64, f64)) -> Vec<(f64, f64)> {
    let rule = gauss_legendre(LAYER_POINTS);
    let h = g.spacing();
    let mut out = Vec::new();
    for i in 0..g.cells(axis) {
        let o = g.lower(axis) + i as f64 * h;
        if o >= range.0 - 1e-9 * h && o + h <= range.1 + 1e-9 * h {
            out.extend(rule.on(o, o + h));
        }
    }
    out
}

/// Layer tables shared by the exterior parts of T and the cross term.
struct Layers {
    xs: Vec<(f64, f64)>,
    ys: Vec<(f64, f64)>,
    /// u at (xs[i], ys[j]).
    u: Vec<Vec<f64>>,
    a: f64,
    b: f64,
    c: f64,
    m: f64,
    s: f64,
}

impl Layers {
    fn new(u: &GridFunction, bx: &[(f64, f64)], s: f64) -> Self {
        let g = &u.grid;
        let xs = layer_points(g, 0, bx[0]);
        let ys = layer_points(g, 1, bx[1]);
        let uu = xs.iter().map(|&(x, _)| ys.iter().map(|&(y, _)| u.eval(&[x, y])).collect()).collect();
        Layers { xs, ys, u: uu, a: bx[0].0, b: bx[0].1, c: bx[1].1, m: 1.0 + s, s }
    }

    /// Index of the difference of layer points a − b along an axis with `n` cells.
    fn key(a: usize, b: usize, n: usize) -> usize {
        let p = LAYER_POINTS;
        ((a / p + n - 1 - b / p) * p + a % p) * p + b % p
    }

    /// Z(x′_a − x′_b, c − y_n[j]) keyed by `key(a, b)`.
    fn top_table(&self, j: usize) -> Vec<f64> {
        let n = self.xs.len() / LAYER_POINTS;
        let mut t = vec![0.0; (2 * n - 1) * LAYER_POINTS * LAYER_POINTS];
        let e = self.c - self.ys[j].0;
        for a in 0..LAYER_POINTS.min(self.xs.len()) {
            for b in 0..self.xs.len() {
                let d = self.xs[a].0 - self.xs[b].0;
                t[Self::key(a, b, n)] = z_kernel(d, e, self.m);
                let d2 = self.xs[b].0 - self.xs[a].0;
                t[Self::key(b, a, n)] = z_kernel(d2, e, self.m);
            }
        }
        t
    }

    /// Σ over the two sides of ∫_{beside} (z² + (y_n[a] − y_n[b])²)^{−m} at x′ = xs[i].
    fn side_table(&self, i: usize) -> Vec<f64> {
        let n = self.ys.len() / LAYER_POINTS;
        let mut t = vec![0.0; (2 * n - 1) * LAYER_POINTS * LAYER_POINTS];
        let y1 = self.xs[i].0;
        let (da, db) = (y1 - self.a, self.b - y1);
        for a in 0..LAYER_POINTS.min(self.ys.len()) {
            for b in 0..self.ys.len() {
                let e = self.ys[a].0 - self.ys[b].0;
                let v = z_kernel(e, da, self.m) + z_kernel(e, db, self.m);
                t[Self::key(a, b, n)] = v;
                t[Self::key(b, a, n)] = v;
            }
        }
        t
    }

    fn corner(&self, y1: f64, xn: f64) -> f64 {
        corner_kernel(y1 - self.a, self.c - xn, self.s) + corner_kernel(self.b - y1, self.c - xn, self.s)
    }
}

/// T(u, φ) = ∫∫ (u(x′,x_n) − u(y′,x_n))(φ(x) − φ(y))|x−y|^{−n−2s}.
pub fn tangential_term(u: &GridFunction, phi: &GridFunction, s: f64, support: &CellMask) -> Result<f64> {
    Ok(tangential_terms(u, std::slice::from_ref(phi), s, support)?[0])
}

/// `tangential_term` for several φ in one pass over the cell pairs.
pub fn tangential_terms(u: &GridFunction, phis: &[GridFunction], s: f64, support: &CellMask) -> Result<Vec<f64>> {
    let g = &u.grid;
    let bx = mask_box(support).ok_or_else(|| Error::Domain("support must be a box".into()))?;
    let mut active = vec![false; g.cell_count()];
    for phi in phis {
        for (a, b) in active.iter_mut().zip(support_cells(phi)) {
            *a |= b;
        }
    }
    let h = g.spacing();
    let inner = pair_sum_many(g, &support.cells, &active, 2.0 + 2.0 * s, 2.0, false, phis.len(), |c1, c2, p, _, out| {
        let (m1, m2) = (g.cell_multi(c1), g.cell_multi(c2));
        let xn = g.cell_origin(m1)[1] + p.x[1] * h;
        let y1 = g.cell_origin(m2)[0] + p.y[0] * h;
        let du = u.eval_local(m1, &p.x) - u.eval(&[y1, xn]);
        for (o, phi) in out.iter_mut().zip(phis) {
            *o = du * (phi.eval_local(m1, &p.x) - phi.eval_local(m2, &p.y));
        }
    });
    let l = Layers::new(u, &bx, s);
    let (nx, ny) = (l.xs.len() / LAYER_POINTS, l.ys.len() / LAYER_POINTS);
    let fvs: Vec<Vec<Vec<f64>>> = phis
        .iter()
        .map(|phi| l.xs.iter().map(|&(x, _)| l.ys.iter().map(|&(y, _)| phi.eval(&[x, y])).collect()).collect())
        .collect();
    let mut ext = vec![0.0; phis.len()];
    // x ∈ B, y ∉ B
    for (j, &(xn, wy)) in l.ys.iter().enumerate() {
        if fvs.iter().all(|fv| fv.iter().all(|r| r[j] == 0.0)) {
            continue;
        }
        let zt = l.top_table(j);
        for (i, &(x1, wx)) in l.xs.iter().enumerate() {
            if fvs.iter().all(|fv| fv[i][j] == 0.0) {
                continue;
            }
            let rho = exterior_weight(&[x1, xn], 2.0 * s, &bx, true)?;
            let top: f64 = (0..l.xs.len()).map(|k| l.xs[k].1 * l.u[k][j] * zt[Layers::key(i, k, nx)]).sum();
            for (e, fv) in ext.iter_mut().zip(&fvs) {
                *e += wx * wy * fv[i][j] * (l.u[i][j] * rho - top);
            }
        }
    }
    // x beside B, y ∈ B
    for (i, &(_, wx)) in l.xs.iter().enumerate() {
        if fvs.iter().all(|fv| fv[i].iter().all(|&v| v == 0.0)) {
            continue;
        }
        let zs = l.side_table(i);
        for (j, &(_, wy)) in l.ys.iter().enumerate() {
            if fvs.iter().all(|fv| fv[i][j] == 0.0) {
                continue;
            }
            let side: f64 = (0..l.ys.len()).map(|k| l.ys[k].1 * l.u[i][k] * zs[Layers::key(j, k, ny)]).sum();
            for (e, fv) in ext.iter_mut().zip(&fvs) {
                *e += wx * wy * fv[i][j] * side;
            }
        }
    }
    Ok(inner.iter().zip(&ext).map(|(a, b)| a + b).collect())
}

/// g[φ] of the instance.
pub fn datum_functional(inst: &ReductionInstance, phi: &GridFunction) -> Result<f64> {
    match &inst.datum {
        Datum::Induced => regional_energy(&inst.u, phi, inst.spec.s, &inst.support),
        Datum::Solver { big_g, t } => Ok(-duality_rhs(big_g, *t, phi)?),
    }
}

fn check_test_function(phi: &GridFunction) -> Result<()> {
    let g = &phi.grid;
    let n = g.normal_axis();
    for a in 0..g.node_count() {
        if g.node_multi(a)[n] == 0 && phi.values[a] != 0.0 {
            return Err(Error::Domain("test function touches the boundary layer".into()));
        }
    }
    Ok(())
}

/// G̃[φ] = g[φ] − T(u, φ).
pub fn gtilde(inst: &ReductionInstance, phi: &GridFunction) -> Result<f64> {
    check_test_function(phi)?;
    Ok(datum_functional(inst, phi)? - tangential_term(&inst.u, phi, inst.spec.s, &inst.support)?)
}

/// H̃(ψ) = G̃(ψ ⊗ η).
pub fn htilde(inst: &ReductionInstance, psi: &GridFunction) -> Result<f64> {
    gtilde(inst, &tensor(psi, &inst.eta, &inst.u.grid)?)
}

/// H̃ for several ψ, sharing the pair pass of T.
pub fn htildes(inst: &ReductionInstance, psis: &[GridFunction]) -> Result<Vec<f64>> {
    let phis: Vec<GridFunction> = psis.iter().map(|psi| tensor(psi, &inst.eta, &inst.u.grid)).collect::<Result<_>>()?;
    for phi in &phis {
        check_test_function(phi)?;
    }
    let t = tangential_terms(&inst.u, &phis, inst.spec.s, &inst.support)?;
    phis.iter().zip(t).map(|(phi, t)| Ok(datum_functional(inst, phi)? - t)).collect()
}

fn check_psi(inst: &ReductionInstance, psi: &GridFunction) -> Result<()> {
    let c = inst.bounds()[1].1;
    let h = inst.u.grid.spacing();
    if let Some((lo, hi)) = nonzero_range(psi) {
        if lo <= 0.0 || hi > c - 2.0 * h + 1e-9 {
            return Err(Error::Domain("ψ must vanish at 0 and stay two cells below the box top".into()));
        }
    }
    Ok(())
}

/// X(ψ) = ∫∫ (u(y′,x_n) − u(y′,y_n)) ψ(x_n)(η(x′) − η(y′))|x−y|^{−n−2s}.
pub fn cross_term(inst: &ReductionInstance, psi: &GridFunction) -> Result<f64> {
    Ok(cross_terms(inst, std::slice::from_ref(psi))?[0])
}

/// `cross_term` for several ψ in one pass over the cell pairs.
pub fn cross_terms(inst: &ReductionInstance, psis: &[GridFunction]) -> Result<Vec<f64>> {
    for psi in psis {
        check_psi(inst, psi)?;
    }
    let u = &inst.u;
    let g = &u.grid;
    let s = inst.spec.s;
    let bx = inst.bounds();
    let eta = &inst.eta;
    let mut psi_rows = vec![false; g.cells(1)];
    for psi in psis {
        for (a, b) in psi_rows.iter_mut().zip(support_cells(psi)) {
            *a |= b;
        }
    }
    let eta_cols = support_cells(eta);
    let active: Vec<bool> = (0..g.cell_count())
        .map(|ci| {
            let c = g.cell_multi(ci);
            psi_rows[c[1]] || eta_cols[c[0]]
        })
        .collect();
    let h = g.spacing();
    let inner = pair_sum_many(g, &inst.support.cells, &active, 2.0 + 2.0 * s, 2.0, false, psis.len(), |c1, c2, p, _, out| {
        let (m1, m2) = (g.cell_multi(c1), g.cell_multi(c2));
        let o1 = g.cell_origin(m1);
        let (x1, xn) = (o1[0] + p.x[0] * h, o1[1] + p.x[1] * h);
        let y1 = g.cell_origin(m2)[0] + p.y[0] * h;
        let de = eta.eval(&[x1]) - eta.eval(&[y1]);
        if de == 0.0 || !psi_rows[m1[1]] {
            out.iter_mut().for_each(|o| *o = 0.0);
            return;
        }
        let common = (u.eval(&[y1, xn]) - u.eval_local(m2, &p.y)) * de;
        for (o, psi) in out.iter_mut().zip(psis) {
            *o = common * psi.eval(&[xn]);
        }
    });
    let l = Layers::new(u, &bx, s);
    let pss: Vec<Vec<f64>> = psis.iter().map(|psi| l.ys.iter().map(|&(y, _)| psi.eval(&[y])).collect()).collect();
    let et: Vec<f64> = l.xs.iter().map(|&(x, _)| eta.eval(&[x])).collect();
    let mut ext = vec![0.0; psis.len()];
    let (nx, ny) = (l.xs.len() / LAYER_POINTS, l.ys.len() / LAYER_POINTS);
    // x ∈ B, y above B
    for (j, &(_, wy)) in l.ys.iter().enumerate() {
        if pss.iter().all(|ps| ps[j] == 0.0) {
            continue;
        }
        let zt = l.top_table(j);
        for (i, &(_, wx)) in l.xs.iter().enumerate() {
            let mut acc = 0.0;
            for (k, &(_, wk)) in l.xs.iter().enumerate() {
                let de = et[i] - et[k];
                if de != 0.0 {
                    acc += wk * l.u[k][j] * de * zt[Layers::key(i, k, nx)];
                }
            }
            for (e, ps) in ext.iter_mut().zip(&pss) {
                *e += wx * wy * ps[j] * acc;
            }
        }
    }
    // x beside B (η(x′) = 0), y ∈ B; and x beside, y above
    for (i, &(y1, wx)) in l.xs.iter().enumerate() {
        if et[i] == 0.0 {
            continue;
        }
        let zs = l.side_table(i);
        for (e, ps) in ext.iter_mut().zip(&pss) {
            let mut acc = 0.0;
            for (j, &(_, wy)) in l.ys.iter().enumerate() {
                for (k, &(_, wk)) in l.ys.iter().enumerate() {
                    if ps[k] != 0.0 {
                        acc += wy * wk * ps[k] * (l.u[i][k] - l.u[i][j]) * zs[Layers::key(j, k, ny)];
                    }
                }
            }
            for (k, &(xn, wk)) in l.ys.iter().enumerate() {
                if ps[k] != 0.0 {
                    acc += wk * ps[k] * l.u[i][k] * l.corner(y1, xn);
                }
            }
            *e -= wx * et[i] * acc;
        }
    }
    Ok(inner.iter().zip(&ext).map(|(a, b)| a + b).collect())
}

#[derive(Debug, Clone, Serialize)]
pub struct ReductionCase {
    pub index: usize,
    /// C′·E¹(v, ψ).
    pub reduced: f64,
    pub htilde: f64,
    pub cross: f64,
    pub residual: f64,
    pub relative_residual: f64,
    pub duality_ratio: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ReductionReport {
    pub slice_constant: f64,
    pub cases: Vec<ReductionCase>,
    pub max_relative_residual: f64,
    pub ratio_spread: f64,
}

fn full_norm(f: &GridFunction, sigma: f64, p: f64, region: &Region) -> Result<f64> {
    Ok(seminorm(f, sigma, p, region)? + lp_norm(f, p, &CellMask::all(&f.grid))?)
}

/// Split identity C′E¹(v, ψ) = H̃(ψ) − X(ψ) and duality ratios
/// |H̃(ψ)| / ((‖G‖_p + [u]_{W_T^{s̃,p}})‖η‖_{W^{2s−s̃,p′}}‖ψ‖_{W^{2s−s̃,p′}}).
pub fn reduction_report(inst: &ReductionInstance, psis: &[GridFunction]) -> Result<ReductionReport> {
    if psis.is_empty() {
        return Err(Error::Parameter("empty ψ list".into()));
    }
    let spec = inst.spec;
    let v = fiber_average(&inst.u, &inst.eta)?;
    let order = 2.0 * spec.s - spec.s_tilde;
    let pc = spec.p_conj();
    let g_norm = match &inst.datum {
        Datum::Solver { big_g, .. } => lp_norm(big_g, spec.p, &CellMask::all(&big_g.grid))?,
        Datum::Induced => 0.0,
    };
    let ut = tangential_seminorm(&inst.u, spec.s_tilde, spec.p, false)?;
    let eta_norm = full_norm(&inst.eta, order, pc, &Region::FullSpace)?;
    let hts = htildes(inst, psis)?;
    let crosses = cross_terms(inst, psis)?;
    let mut cases = Vec::with_capacity(psis.len());
    for (index, psi) in psis.iter().enumerate() {
        let reduced = inst.slice_constant * oned_regional_form(&v, psi, spec.s)?;
        let (ht, cross) = (hts[index], crosses[index]);
        let residual = (reduced - (ht - cross)).abs();
        let scale = ht.abs() + reduced.abs();
        let rhs = (g_norm + ut) * eta_norm * full_norm(psi, order, pc, &Region::HalfSpace)?;
        cases.push(ReductionCase {
            index,
            reduced,
            htilde: ht,
            cross,
            residual,
            relative_residual: if scale > 0.0 { residual / scale } else { 0.0 },
            duality_ratio: if rhs > 0.0 { ht.abs() / rhs } else { 0.0 },
        });
    }
    let max_relative_residual = cases.iter().map(|c| c.relative_residual).fold(0.0, f64::max);
    let ratios: Vec<f64> = cases.iter().map(|c| c.duality_ratio).filter(|r| *r > 0.0).collect();
    let ratio_spread = if ratios.is_empty() {
        0.0
    } else {
        ratios.iter().cloned().fold(0.0, f64::max) / ratios.iter().cloned().fold(f64::INFINITY, f64::min)
    };
    Ok(ReductionReport { slice_constant: inst.slice_constant, cases, max_relative_residual, ratio_spread })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::sample;
    use crate::quadrature::{adaptive, adaptive_to_inf};

    fn setup(h: f64) -> (Grid, CellMask) {
        let g = Grid::new(2, h, &[(-1.5, 1.5), (0.0, 1.5)], true).unwrap();
        let m = CellMask::from_box(&g, &[(-1.0, 1.0), (0.0, 1.0)]);
        (g, m)
    }

    fn instance(h: f64, s: f64) -> ReductionInstance {
        let (g, m) = setup(h);
        let u = sample(
            |x| {
                if x[0].abs() < 1.0 && x[1] < 1.0 {
                    (1.0 - x[0] * x[0]) * (1.0 - x[1] * x[1]) * (1.0 + 0.5 * x[0])
                } else {
                    0.0
                }
            },
            &g,
        )
        .unwrap();
        let eta = sample(|x| (1.0 - (x[0] / 0.6).powi(2)).max(0.0), &tangential_line(&g).unwrap()).unwrap();
        let spec = KernelSpec::new(s, 0.0, 2.0, 0.85).unwrap();
        ReductionInstance::new(u, Datum::Induced, eta, spec, m).unwrap()
    }

    fn psi(g: &Grid, k: f64) -> GridFunction {
        sample(|x| (x[0] * (0.7 - x[0])).max(0.0) * (1.0 + k * x[0]), &normal_line(g).unwrap()).unwrap()
    }

    #[test]
    fn z_kernel_matches_quadrature() {
        let m = 1.7;
        for &(d, e) in &[(0.3, 0.2), (0.0, 0.5), (2.0, 0.01), (0.05, 1.0)] {
            let f = |z: f64| (d * d + z * z).powf(-m);
            let num = adaptive_to_inf(f, e, 1e-13, 0.0);
            assert!((z_kernel(d, e, m) - num).abs() < 1e-9 * num, "{d} {e}");
        }
    }

    #[test]
    fn corner_kernel_matches_quadrature() {
        let s: f64 = 0.7;
        for &(d, e0) in &[(0.25, 0.25), (0.1, 0.6), (1.0, 0.2)] {
            let num = adaptive_to_inf(|e| z_kernel(e, d, 1.0 + s), e0, 1e-12, 0.0);
            let v = corner_kernel(d, e0, s);
            assert!((v - num).abs() < 1e-8 * num, "{d} {e0}: {v} vs {num}");
        }
    }

    #[test]
    fn separable_fiber_average() {
        let (g, _) = setup(0.125);
        let u = sample(|x| (x[0] + 2.0) * x[1] * x[1], &g).unwrap();
        let eta = sample(|x| (1.0 - x[0].abs()).max(0.0), &tangential_line(&g).unwrap()).unwrap();
        let v = fiber_average(&u, &eta).unwrap();
        // ∫(x+2)(1−|x|) = 2; nodal interpolant of x² at the nodes
        for j in 0..v.grid.node_count() {
            let xn = v.grid.node_coords(j)[0];
            assert!((v.values[j] - 2.0 * xn * xn).abs() < 1e-12);
        }
        let _ = adaptive(|x| x, 0.0, 1.0, 1e-10, 0.0);
    }

    #[test]
    fn vanishing_u_gives_zero_terms() {
        let inst0 = instance(0.25, 0.75);
        let u = GridFunction::zeros(&inst0.u.grid);
        let inst = ReductionInstance::new(u, Datum::Induced, inst0.eta.clone(), inst0.spec, inst0.support.clone()).unwrap();
        let p = psi(&inst.u.grid, 0.0);
        assert_eq!(cross_term(&inst, &p).unwrap(), 0.0);
        assert_eq!(htilde(&inst, &p).unwrap(), 0.0);
    }

    #[test]
    fn oned_form_is_symmetric() {
        let line = Grid::new(1, 0.0625, &[(0.0, 1.0)], true).unwrap();
        let a = sample(|x| x[0] * (1.0 - x[0]), &line).unwrap();
        let b = sample(|x| (x[0] * (0.8 - x[0])).max(0.0), &line).unwrap();
        let ab = oned_regional_form(&a, &b, 0.7).unwrap();
        let ba = oned_regional_form(&b, &a, 0.7).unwrap();
        assert!((ab - ba).abs() < 1e-12 * ab.abs());
        assert!(oned_regional_form(&a, &a, 0.7).unwrap() > 0.0);
    }

    #[test]
    fn split_identity_holds() {
        let inst = instance(0.125, 0.75);
        let rep = reduction_report(&inst, &[psi(&inst.u.grid, 0.0), psi(&inst.u.grid, 2.0)]).unwrap();
        for c in &rep.cases {
            assert!(c.relative_residual < 1e-5, "{c:?}");
            assert!(c.cross.abs() > 1e-6);
        }
    }

    #[test]
    fn rejects_bad_inputs() {
        let inst = instance(0.25, 0.75);
        let bad = sample(|x| 1.0 - x[0], &normal_line(&inst.u.grid).unwrap()).unwrap();
        assert!(cross_term(&inst, &bad).is_err());
        assert!(htilde(&inst, &bad).is_err());
        let spec = KernelSpec::new(0.6, 0.0, 2.0, 0.8).unwrap();
        assert!(ReductionInstance::new(inst.u.clone(), Datum::Induced, inst.eta.clone(), spec, inst.support.clone()).is_err());
    }
}
