//! Gagliardo seminorms by cell-pair quadrature, with exact treatment of the
//! region outside the box, and the tangential/normal slice seminorms.

use statrs::function::beta::{beta, beta_reg};

use crate::error::{Error, Result};
use crate::form::{element_matrix, exterior_weight, tail_points};
use crate::grid::{CellMask, Grid, GridFunction};
use crate::pairs::{all_offsets, half_offsets, pair_rule, pairs_at, PairPoint};
use crate::quadrature::gauss_legendre;

/// Integration region of a seminorm.
#[derive(Debug, Clone, PartialEq)]
pub enum Region {
    /// ℝⁿ₊ × ℝⁿ₊ (half-space grids).
    HalfSpace,
    /// ℝⁿ × ℝⁿ, the function extended by zero.
    FullSpace,
    /// Union of selected cells, no exterior interaction.
    Cells(CellMask),
}

impl Region {
    /// Cells whose centers lie in B(c, r) (intersected with the grid box).
    pub fn ball(grid: &Grid, center: &[f64], r: f64) -> Region {
        Region::Cells(CellMask::ball(grid, center, r))
    }
}

/// Σ over ordered cell pairs (c1, c2) of selected cells of Σ w F, scaled to
/// physical units, for the kernel |x−y|^{−β}. With `symmetric` only one
/// orientation per unordered pair is visited and doubled. Pairs where neither
/// cell is `active` are skipped.
#[allow(clippy::too_many_arguments)]
pub fn pair_sum<F>(
    grid: &Grid,
    sel: &[bool],
    active: &[bool],
    beta_exp: f64,
    q: f64,
    symmetric: bool,
    mut f: F,
) -> f64
where
    F: FnMut(usize, usize, &PairPoint, [i64; 2]) -> f64,
{
    pair_sum_many(grid, sel, active, beta_exp, q, symmetric, 1, |c1, c2, p, d, out| out[0] = f(c1, c2, p, d))[0]
}

/// `pair_sum` for `count` integrands sharing one pass over the pairs; `f`
/// writes the integrand values into its output slice.
#[allow(clippy::too_many_arguments)]
pub fn pair_sum_many<F>(
    grid: &Grid,
    sel: &[bool],
    active: &[bool],
    beta_exp: f64,
    q: f64,
    symmetric: bool,
    count: usize,
    mut f: F,
) -> Vec<f64>
where
    F: FnMut(usize, usize, &PairPoint, [i64; 2], &mut [f64]),
{
    let dim = grid.dim();
    let h = grid.spacing();
    let scale = h.powf(2.0 * dim as f64 - beta_exp);
    let offsets = if symmetric { half_offsets(grid) } else { all_offsets(grid) };
    let mut total = vec![0.0; count];
    let mut sub = vec![0.0; count];
    let mut vals = vec![0.0; count];
    for delta in offsets {
        let pairs: Vec<(usize, usize)> = pairs_at(grid, sel, delta)
            .into_iter()
            .filter(|&(a, b)| active[a] || active[b])
            .collect();
        if pairs.is_empty() {
            continue;
        }
        let rule = pair_rule(dim, delta, beta_exp, q);
        let factor = if symmetric && delta != [0, 0] { 2.0 } else { 1.0 };
        sub.iter_mut().for_each(|v| *v = 0.0);
        for (c1, c2) in pairs {
            for p in &rule {
                f(c1, c2, p, delta, &mut vals);
                for (a, v) in sub.iter_mut().zip(&vals) {
                    *a += p.w * v;
                }
            }
        }
        for (t, v) in total.iter_mut().zip(&sub) {
            *t += factor * v;
        }
    }
    total.iter_mut().for_each(|t| *t *= scale);
    total
}

/// Σ over selected cell pairs of ∫∫(u(x)−u(y))(v(x)−v(y))|x−y|^{−β}, contracted
/// against the element matrices. Same rules as `pair_sum` with q = 2.
pub fn pair_bilinear(grid: &Grid, sel: &[bool], u: &GridFunction, v: &GridFunction, beta_exp: f64) -> f64 {
    let dim = grid.dim();
    let k = 1 << dim;
    let l = 2 * k;
    let scale = grid.spacing().powf(2.0 * dim as f64 - beta_exp);
    let (su, sv) = (support_cells(u), support_cells(v));
    let mut total = 0.0;
    for delta in half_offsets(grid) {
        let pairs: Vec<(usize, usize)> = pairs_at(grid, sel, delta)
            .into_iter()
            .filter(|&(a, b)| (su[a] || su[b]) && (sv[a] || sv[b]))
            .collect();
        if pairs.is_empty() {
            continue;
        }
        let e = element_matrix(dim, delta, beta_exp);
        let factor = if delta == [0, 0] { 1.0 } else { 2.0 };
        let mut sub = 0.0;
        let (mut a, mut b) = ([0.0; 8], [0.0; 8]);
        for (c1, c2) in pairs {
            let (m1, m2) = (grid.cell_multi(c1), grid.cell_multi(c2));
            a[..k].copy_from_slice(&u.cell_values(m1)[..k]);
            a[k..l].copy_from_slice(&u.cell_values(m2)[..k]);
            b[..k].copy_from_slice(&v.cell_values(m1)[..k]);
            b[k..l].copy_from_slice(&v.cell_values(m2)[..k]);
            for i in 0..l {
                if a[i] == 0.0 {
                    continue;
                }
                let row = &e[i * l..(i + 1) * l];
                sub += a[i] * row.iter().zip(&b[..l]).map(|(x, y)| x * y).sum::<f64>();
            }
        }
        total += factor * sub;
    }
    total * scale
}

/// Cells on which a function is not identically zero.
pub fn support_cells(f: &GridFunction) -> Vec<bool> {
    let g = &f.grid;
    (0..g.cell_count())
        .map(|ci| f.cell_values(g.cell_multi(ci))[..g.corners()].iter().any(|&v| v != 0.0))
        .collect()
}

/// 2∫_box |f|^p ρ_γ with ρ_γ(x) = ∫_{U∖box}|x−y|^{−n−γ} dy.
pub fn exterior_term(f: &GridFunction, p: f64, gamma: f64, half: bool) -> Result<f64> {
    let g = &f.grid;
    let b = g.bounds();
    let h = g.spacing();
    let vol = h.powi(g.dim() as i32);
    let active = support_cells(f);
    let mut sum = 0.0;
    for ci in 0..g.cell_count() {
        if !active[ci] {
            continue;
        }
        let c = g.cell_multi(ci);
        let o = g.cell_origin(c);
        for (xi, w) in tail_points(g, &b, c, half) {
            let v = f.eval_local(c, &xi).abs();
            if v == 0.0 {
                continue;
            }
            let x = [o[0] + xi[0] * h, o[1] + xi[1] * h];
            sum += w * v.powf(p) * exterior_weight(&x[..g.dim()], gamma, &b, half)?;
        }
    }
    Ok(2.0 * sum * vol)
}

/// p-th power of [f]_{W^{σ,p}(region)}.
pub fn seminorm_pow(f: &GridFunction, sigma: f64, p: f64, region: &Region) -> Result<f64> {
    seminorm_pow_impl(f, sigma, p, region, true)
}

/// As `seminorm_pow` but always summing |f(x) − f(y)|^p pointwise, without
/// the element-matrix shortcut for p = 2.
pub fn seminorm_pow_pointwise(f: &GridFunction, sigma: f64, p: f64, region: &Region) -> Result<f64> {
    seminorm_pow_impl(f, sigma, p, region, false)
}

fn seminorm_pow_impl(f: &GridFunction, sigma: f64, p: f64, region: &Region, fast: bool) -> Result<f64> {
    if !(sigma > 0.0 && sigma < 1.0) {
        return Err(Error::Parameter(format!("σ = {sigma} outside (0, 1)")));
    }
    if !(p >= 1.0 && p.is_finite()) {
        return Err(Error::Parameter(format!("p = {p} outside [1, ∞)")));
    }
    let g = &f.grid;
    let dim = g.dim();
    let beta_exp = dim as f64 + sigma * p;
    let all = vec![true; g.cell_count()];
    let sel: &[bool] = match region {
        Region::Cells(m) => {
            if m.grid != *g {
                return Err(Error::Domain("region not cell-aligned with the grid".into()));
            }
            &m.cells
        }
        _ => &all,
    };
    if matches!(region, Region::HalfSpace) && !g.halfspace() {
        return Err(Error::Domain("half-space region needs a half-space grid".into()));
    }
    let active = support_cells(f);
    let inner = if fast && p == 2.0 {
        pair_bilinear(g, sel, f, f, beta_exp)
    } else {
        pair_sum(g, sel, &active, beta_exp, p, true, |c1, c2, pt, _| {
        let a = f.eval_local(g.cell_multi(c1), &pt.x);
        let b = f.eval_local(g.cell_multi(c2), &pt.y);
        (a - b).abs().powf(p)
    })
    };
    let outer = match region {
        Region::HalfSpace => exterior_term(f, p, sigma * p, true)?,
        Region::FullSpace => exterior_term(f, p, sigma * p, false)?,
        Region::Cells(_) => 0.0,
    };
    Ok(inner + outer)
}

/// [f]_{W^{σ,p}(region)}.
pub fn seminorm(f: &GridFunction, sigma: f64, p: f64, region: &Region) -> Result<f64> {
    Ok(seminorm_pow(f, sigma, p, region)?.powf(1.0 / p))
}

/// Trapezoidal weights of the nodes along an axis.
pub fn trapezoid_weights(count: usize, h: f64) -> Vec<f64> {
    let mut w = vec![h; count];
    w[0] = 0.5 * h;
    w[count - 1] = 0.5 * h;
    w
}

fn line_grid(g: &Grid, axis: usize, half: bool) -> Result<Grid> {
    Grid::new(1, g.spacing(), &[(g.lower(axis), g.upper(axis))], half)
}

fn node_line(f: &GridFunction, axis: usize, fixed: usize, line: &Grid) -> GridFunction {
    let g = &f.grid;
    let values = (0..g.nodes(axis))
        .map(|k| {
            let m = if axis == 0 { [k, fixed] } else { [fixed, k] };
            f.values[g.node_index(m)]
        })
        .collect();
    GridFunction { grid: *line, values }
}

/// φ(c) = ∫_{−c}^{∞}(1+u²)^{−m} du = ½B(½, m−½)(1 + I_{c²/(1+c²)}(½, m−½)).
fn half_line_factor(c: f64, m: f64) -> f64 {
    let b = beta(0.5, m - 0.5);
    if c <= 0.0 {
        return 0.5 * b;
    }
    let t = c * c / (1.0 + c * c);
    0.5 * b * (1.0 + beta_reg(0.5, m - 0.5, t))
}

/// Tangential seminorm [f]_{W_T^{σ,p}} (n = 2, half-space grid). The slice
/// form integrates tangential differences on each x_n-layer with the kernel
/// |x′−y′|^{−1−σp}; `double` switches to the full double integral over
/// ℝⁿ₊ × ℝⁿ₊ whose kernel after integrating y_n is |a|^{−1−σp}φ(x_n/|a|).
pub fn tangential_seminorm(f: &GridFunction, sigma: f64, p: f64, double: bool) -> Result<f64> {
    let g = &f.grid;
    if g.dim() != 2 {
        return Err(Error::Domain("tangential seminorm is void for n = 1".into()));
    }
    if !g.halfspace() {
        return Err(Error::Domain("tangential seminorm needs a half-space grid".into()));
    }
    let line = line_grid(g, 0, false)?;
    let wts = trapezoid_weights(g.nodes(1), g.spacing());
    let m = 0.5 * (2.0 + sigma * p);
    let mut total = 0.0;
    for (j, wj) in wts.iter().enumerate() {
        let row = node_line(f, 0, j, &line);
        if row.values.iter().all(|&v| v == 0.0) {
            continue;
        }
        let layer = if double {
            let xn = j as f64 * g.spacing();
            double_layer(&row, sigma, p, xn, m)?
        } else {
            seminorm_pow(&row, sigma, p, &Region::FullSpace)?
        };
        total += wj * layer;
    }
    Ok(total.powf(1.0 / p))
}

fn double_layer(row: &GridFunction, sigma: f64, p: f64, xn: f64, m: f64) -> Result<f64> {
    let g = &row.grid;
    let h = g.spacing();
    let gamma = sigma * p;
    let all = vec![true; g.cell_count()];
    let active = support_cells(row);
    let inner = pair_sum(g, &all, &active, 1.0 + gamma, p, true, |c1, c2, pt, d| {
        let a = ((d[0] as f64 + pt.x[0] - pt.y[0]) * h).abs();
        let u = row.eval_local([c1, 0], &pt.x);
        let v = row.eval_local([c2, 0], &pt.y);
        (u - v).abs().powf(p) * half_line_factor(xn / a, m)
    });
    // exterior in x′: ∫_d^∞ a^{−1−γ}φ(x_n/a) da = (d^{−γ}/γ)∫₀¹ φ(x_n τ^{1/γ}/d) dτ
    let tau = gauss_legendre(16);
    let ext = |d: f64| {
        d.powf(-gamma) / gamma
            * tau.integrate(0.0, 1.0, |t| half_line_factor(xn * t.powf(1.0 / gamma) / d, m))
    };
    let (lo, hi) = (g.lower(0), g.upper(0));
    let b = g.bounds();
    let mut outer = 0.0;
    for c in 0..g.cell_count() {
        if !active[c] {
            continue;
        }
        let o = g.cell_origin([c, 0])[0];
        for (xi, w) in tail_points(g, &b, [c, 0], false) {
            let v = row.eval_local([c, 0], &xi).abs();
            if v == 0.0 {
                continue;
            }
            let x = o + xi[0] * h;
            outer += w * h * v.powf(p) * (ext(hi - x) + ext(x - lo));
        }
    }
    Ok(inner + 2.0 * outer)
}

/// Normal seminorm [f]_{W_N^{σ,p}}: half-line seminorms of the x_n-columns,
/// summed with trapezoidal weights in x′.
pub fn normal_seminorm(f: &GridFunction, sigma: f64, p: f64) -> Result<f64> {
    let g = &f.grid;
    if g.dim() != 2 || !g.halfspace() {
        return Err(Error::Domain("normal seminorm needs a 2D half-space grid".into()));
    }
    let line = line_grid(g, 1, true)?;
    let wts = trapezoid_weights(g.nodes(0), g.spacing());
    let mut total = 0.0;
    for (i, wi) in wts.iter().enumerate() {
        let col = node_line(f, 1, i, &line);
        if col.values.iter().all(|&v| v == 0.0) {
            continue;
        }
        total += wi * seminorm_pow(&col, sigma, p, &Region::HalfSpace)?;
    }
    Ok(total.powf(1.0 / p))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::form::assemble_regional_form;
    use crate::grid::sample;

    fn bump(x: &[f64]) -> f64 {
        let r2: f64 = x.iter().map(|v| (v - 0.5).powi(2)).sum();
        (-8.0 * r2).exp() * x[1] * (1.0 - x[1]) * (x[0] + 0.5) * (1.5 - x[0])
    }

    #[test]
    fn p2_matches_matrix_form() {
        let g = Grid::new(2, 0.125, &[(-0.5, 1.5), (0.0, 1.0)], true).unwrap();
        let f = sample(bump, &g).unwrap();
        let mask = CellMask::all(&g);
        let form = assemble_regional_form(&g, 0.75, &mask, false).unwrap();
        let a = seminorm_pow(&f, 0.75, 2.0, &Region::Cells(mask)).unwrap();
        let b = form.quadratic(&f);
        assert!((a - b).abs() < 1e-10 * b, "{a} vs {b}");
        let tf = assemble_regional_form(&g, 0.75, &CellMask::all(&g), true).unwrap();
        let c = seminorm_pow(&f, 0.75, 2.0, &Region::HalfSpace).unwrap();
        let d = tf.quadratic(&f);
        assert!((c - d).abs() < 1e-8 * d, "{c} vs {d}");
    }

    #[test]
    fn zero_function() {
        let g = Grid::new(1, 0.25, &[(0.0, 2.0)], true).unwrap();
        let f = GridFunction::zeros(&g);
        assert_eq!(seminorm(&f, 0.5, 3.0, &Region::HalfSpace).unwrap(), 0.0);
    }

    #[test]
    fn scaling_law_one_dim() {
        // f(λx) on a grid with spacing h/λ is the exact rescaling of the interpolant
        let (s, p) = (0.6, 3.0);
        let g = Grid::new(1, 0.125, &[(-2.0, 2.0)], false).unwrap();
        let f = sample(|x| (-x[0] * x[0] * 2.0).exp() * (4.0 - x[0] * x[0]), &g).unwrap();
        for &lam in &[0.5, 2.0] {
            let gl = Grid::new(1, 0.125 / lam, &[(-2.0 / lam, 2.0 / lam)], false).unwrap();
            let fl = GridFunction { grid: gl, values: f.values.clone() };
            let a = seminorm(&fl, s, p, &Region::FullSpace).unwrap();
            let b = seminorm(&f, s, p, &Region::FullSpace).unwrap();
            let expect = lam.powf(s - 1.0 / p);
            assert!((a / b / expect - 1.0).abs() < 1e-9, "λ={lam}");
        }
    }

    #[test]
    fn separable_factorization() {
        let g = Grid::new(2, 0.125, &[(-1.0, 1.0), (0.0, 1.0)], true).unwrap();
        let eta = |x: f64| (1.0 - x * x).powi(2);
        let psi = |y: f64| y * (1.0 - y) * (1.0 + y);
        let f = sample(|x| eta(x[0]) * psi(x[1]), &g).unwrap();
        let (s, p) = (0.7, 3.0);
        let t = tangential_seminorm(&f, s, p, false).unwrap();
        let lx = Grid::new(1, 0.125, &[(-1.0, 1.0)], false).unwrap();
        let ly = Grid::new(1, 0.125, &[(0.0, 1.0)], true).unwrap();
        let e = sample(|x| eta(x[0]), &lx).unwrap();
        let q = sample(|x| psi(x[0]), &ly).unwrap();
        let trap = |v: &GridFunction| -> f64 {
            let w = trapezoid_weights(v.values.len(), 0.125);
            v.values.iter().zip(w).map(|(a, b)| a.abs().powf(p) * b).sum::<f64>().powf(1.0 / p)
        };
        let expect = trap(&q) * seminorm(&e, s, p, &Region::FullSpace).unwrap();
        assert!((t - expect).abs() < 1e-10 * expect);
        let nrm = normal_seminorm(&f, s, p).unwrap();
        let expect = trap(&e) * seminorm(&q, s, p, &Region::HalfSpace).unwrap();
        assert!((nrm - expect).abs() < 1e-10 * expect);
    }

    #[test]
    fn double_form_is_comparable_to_slice_form() {
        let g = Grid::new(2, 0.125, &[(-1.0, 1.0), (0.0, 1.0)], true).unwrap();
        let f = sample(|x| (1.0 - x[0] * x[0]) * x[1] * (1.0 - x[1]) * (1.0 + x[0]), &g).unwrap();
        let (s, p) = (0.8, 2.0);
        let a = tangential_seminorm(&f, s, p, false).unwrap().powf(p);
        let b = tangential_seminorm(&f, s, p, true).unwrap().powf(p);
        let c = crate::kernel::slice_kernel_closed_form(2, s, p).unwrap();
        let r = b / a;
        assert!(r >= 0.5 * c - 1e-9 && r <= c + 1e-9, "ratio {r} vs C = {c}");
    }

    #[test]
    fn half_line_factor_limits() {
        let m = 0.5 * (2.0 + 1.6);
        let c = crate::kernel::slice_kernel_closed_form(2, 0.8, 2.0).unwrap();
        assert!((half_line_factor(0.0, m) - 0.5 * c).abs() < 1e-12);
        assert!((half_line_factor(1e8, m) - c).abs() < 1e-9);
    }
}
