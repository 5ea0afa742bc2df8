//! Discrete Hardy–Littlewood and sharp maximal functions and their censored
//! versions. The integrand is the piecewise constant function given by cell
//! means, extended by zero outside the box; ball–cell intersection volumes are
//! exact, so every average is an exact integral of that function.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::grid::{even_reflect, lp_norm, CellMask, Grid, GridFunction};

#[derive(Debug, Clone, PartialEq)]
pub struct MaximalField {
    pub grid: Grid,
    pub values: Vec<f64>,
    pub radii: Vec<f64>,
    pub censored: bool,
    pub sharp: bool,
}

impl MaximalField {
    pub fn as_function(&self) -> GridFunction {
        GridFunction { grid: self.grid, values: self.values.clone() }
    }
}

/// Dyadic radii h, 2h, 4h, ... not exceeding the box diameter.
pub fn dyadic_radii(grid: &Grid) -> Vec<f64> {
    let diam = grid.bounds().iter().map(|(a, b)| (b - a).powi(2)).sum::<f64>().sqrt();
    let mut r = grid.spacing();
    let mut out = Vec::new();
    while r <= diam * (1.0 + 1e-12) {
        out.push(r);
        r *= 2.0;
    }
    out
}

// ∫_0^u √(r² − v²) dv
fn chord_antiderivative(u: f64, r: f64) -> f64 {
    let u = u.clamp(-r, r);
    0.5 * (u * (r * r - u * u).max(0.0).sqrt() + r * r * (u / r).asin())
}

/// Exact area of the disk B((cx, cy), r) ∩ [x0, x1] × [y0, y1].
pub fn disk_rect_area(c: [f64; 2], r: f64, x: (f64, f64), y: (f64, f64)) -> f64 {
    let lo = x.0.max(c[0] - r);
    let hi = x.1.min(c[0] + r);
    if hi <= lo || y.1 <= y.0 {
        return 0.0;
    }
    // breakpoints where the chord ends cross y0 or y1
    let mut br = vec![lo, hi];
    for yy in [y.0, y.1] {
        let d = yy - c[1];
        if d.abs() < r {
            let w = (r * r - d * d).sqrt();
            for u in [c[0] - w, c[0] + w] {
                if u > lo && u < hi {
                    br.push(u);
                }
            }
        }
    }
    br.sort_by(f64::total_cmp);
    let mut area = 0.0;
    for w in br.windows(2) {
        let (a, b) = (w[0], w[1]);
        if b <= a {
            continue;
        }
        let m = 0.5 * (a + b);
        let s = (r * r - (m - c[0]).powi(2)).max(0.0).sqrt();
        let top_clipped = c[1] + s >= y.1;
        let bot_clipped = c[1] - s <= y.0;
        if c[1] + s <= y.0 || c[1] - s >= y.1 {
            continue;
        }
        let chord = |u: f64| chord_antiderivative(u - c[0], r);
        let sint = chord(b) - chord(a);
        let len = b - a;
        let top = if top_clipped { y.1 * len } else { c[1] * len + sint };
        let bot = if bot_clipped { y.0 * len } else { c[1] * len - sint };
        area += top - bot;
    }
    area
}

/// |B(x, r) ∩ U| with U = ℝⁿ₊ if `half`, else ℝⁿ.
fn ball_volume(dim: usize, x: &[f64; 2], r: f64, half: bool) -> f64 {
    let n = dim - 1;
    if dim == 1 {
        return if half { (x[0] + r).max(0.0) - (x[0] - r).max(0.0) } else { 2.0 * r };
    }
    if !half {
        return std::f64::consts::PI * r * r;
    }
    // segment of the disk above x_n = 0
    let d = x[n].clamp(-r, r);
    let full = std::f64::consts::PI * r * r;
    let below = 0.5 * full - (r * r * (d / r).asin() + d * (r * r - d * d).sqrt());
    full - below.max(0.0)
}

/// (cell index, |B ∩ cell|) for cells meeting the ball.
fn ball_cells(g: &Grid, x: &[f64; 2], r: f64) -> Vec<(usize, f64)> {
    let h = g.spacing();
    let dim = g.dim();
    let mut range = [(0usize, 0usize); 2];
    for i in 0..dim {
        let lo = ((x[i] - r - g.lower(i)) / h).floor().max(0.0) as usize;
        let hi = (((x[i] + r - g.lower(i)) / h).ceil().max(0.0) as usize).min(g.cells(i));
        range[i] = (lo, hi);
    }
    if dim == 1 {
        range[1] = (0, 1);
    }
    let mut out = Vec::new();
    for j in range[1].0..range[1].1 {
        for i in range[0].0..range[0].1 {
            let c = [i, j];
            let o = g.cell_origin(c);
            let w = if dim == 1 {
                ((o[0] + h).min(x[0] + r) - o[0].max(x[0] - r)).max(0.0)
            } else {
                // whole cell inside when the farthest corner is within r
                let fx = (x[0] - o[0]).abs().max((x[0] - o[0] - h).abs());
                let fy = (x[1] - o[1]).abs().max((x[1] - o[1] - h).abs());
                if fx * fx + fy * fy <= r * r {
                    h * h
                } else {
                    disk_rect_area(*x, r, (o[0], o[0] + h), (o[1], o[1] + h))
                }
            };
            if w > 0.0 {
                out.push((g.cell_index(c), w));
            }
        }
    }
    out
}

/// ΣΣ wᵢwⱼ|vᵢ − vⱼ| by sorting.
fn pair_spread(items: &mut [(f64, f64)]) -> f64 {
    items.sort_by(|a, b| a.0.total_cmp(&b.0));
    let (mut wsum, mut vsum, mut total) = (0.0, 0.0, 0.0);
    for &(v, w) in items.iter() {
        total += w * (v * wsum - vsum);
        wsum += w;
        vsum += w * v;
    }
    2.0 * total
}

fn check(f: &GridFunction, censored: bool, radii: &[f64]) -> Result<()> {
    if radii.is_empty() {
        return Err(Error::Parameter("empty radius set".into()));
    }
    if radii.iter().any(|&r| !(r > 0.0 && r.is_finite())) {
        return Err(Error::Parameter("radii must be positive".into()));
    }
    if censored && !f.grid.halfspace() {
        return Err(Error::Domain("censored maximal function needs a half-space grid".into()));
    }
    Ok(())
}

fn field(f: &GridFunction, censored: bool, radii: &[f64], sharp: bool) -> Result<MaximalField> {
    check(f, censored, radii)?;
    let g = &f.grid;
    let cells: Vec<f64> = (0..g.cell_count())
        .map(|ci| {
            let c = g.cell_multi(ci);
            if sharp {
                f.cell_mean(c)
            } else {
                let v = f.cell_values(c);
                v[..g.corners()].iter().map(|x| x.abs()).sum::<f64>() / g.corners() as f64
            }
        })
        .collect();
    let mut values = vec![0.0; g.node_count()];
    let mut items = Vec::new();
    for (idx, out) in values.iter_mut().enumerate() {
        let x = g.node_coords(idx);
        let mut best: f64 = 0.0;
        for &r in radii {
            let vol = ball_volume(g.dim(), &x, r, censored);
            let hits = ball_cells(g, &x, r);
            let inside: f64 = hits.iter().map(|h| h.1).sum();
            let zero = (vol - inside).max(0.0);
            let v = if sharp {
                items.clear();
                items.extend(hits.iter().map(|&(c, w)| (cells[c], w)));
                if zero > 0.0 {
                    items.push((0.0, zero));
                }
                pair_spread(&mut items) / (vol * vol)
            } else {
                hits.iter().map(|&(c, w)| w * cells[c]).sum::<f64>() / vol
            };
            best = best.max(v);
        }
        *out = best;
    }
    Ok(MaximalField { grid: *g, values, radii: radii.to_vec(), censored, sharp })
}

/// M f (or M₊f): largest ball average of |f| over the radius set.
pub fn maximal(f: &GridFunction, censored: bool, radii: &[f64]) -> Result<MaximalField> {
    field(f, censored, radii, false)
}

/// M#f (or M#₊f): largest double average of |f(y) − f(z)| over the radius set.
pub fn sharp_maximal(f: &GridFunction, censored: bool, radii: &[f64]) -> Result<MaximalField> {
    field(f, censored, radii, true)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ReflectionReport {
    pub max_ratio_upper: f64,
    pub max_ratio_lower: f64,
    pub compared: usize,
    pub skipped: usize,
}

/// Ratios M#f̃(x)/M#₊f(x) on ℝⁿ₊ and M#f̃(x)/M#₊f(x*) on ℝⁿ₋ for the even
/// reflection f̃, with one radius set for both sides.
pub fn reflection_domination(f: &GridFunction, radii: &[f64]) -> Result<ReflectionReport> {
    reflection_domination_with(f, radii, radii)
}

pub fn reflection_domination_with(
    f: &GridFunction,
    radii_full: &[f64],
    radii_half: &[f64],
) -> Result<ReflectionReport> {
    if radii_full != radii_half {
        return Err(Error::Parameter("radius sets of the two sides differ".into()));
    }
    let refl = even_reflect(f)?;
    let full = sharp_maximal(&refl, false, radii_full)?;
    let half = sharp_maximal(f, true, radii_half)?;
    let g = &refl.grid;
    let hg = &f.grid;
    let n = g.normal_axis();
    let mid = hg.nodes(n) - 1;
    let mut rep = ReflectionReport { max_ratio_upper: 0.0, max_ratio_lower: 0.0, compared: 0, skipped: 0 };
    for idx in 0..g.node_count() {
        let mut k = g.node_multi(idx);
        let lower = k[n] < mid;
        k[n] = if lower { mid - k[n] } else { k[n] - mid };
        let a = full.values[idx];
        let b = half.values[hg.node_index(k)];
        if a < 1e-14 && b < 1e-14 {
            rep.skipped += 1;
            continue;
        }
        rep.compared += 1;
        let r = a / b;
        if lower {
            rep.max_ratio_lower = rep.max_ratio_lower.max(r);
        } else {
            rep.max_ratio_upper = rep.max_ratio_upper.max(r);
        }
    }
    Ok(rep)
}

/// ‖f‖_{L^p} / ‖M#f‖_{L^p} over the grid box (censored on half-space grids).
pub fn fefferman_stein_ratio(f: &GridFunction, p: f64, censored: bool) -> Result<f64> {
    if !(p > 1.0 && p.is_finite()) {
        return Err(Error::Parameter(format!("p = {p} outside (1, ∞)")));
    }
    if f.max_abs() == 0.0 {
        return Err(Error::Domain("f vanishes identically".into()));
    }
    let radii = dyadic_radii(&f.grid);
    let m = sharp_maximal(f, censored, &radii)?;
    let all = CellMask::all(&f.grid);
    Ok(lp_norm(f, p, &all)? / lp_norm(&m.as_function(), p, &all)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::sample;

    /// Ball averages of the cell-mean function by midpoint sampling.
    fn brute(f: &GridFunction, x: [f64; 2], r: f64, half: bool, sharp: bool, m: usize) -> f64 {
        let g = &f.grid;
        let mut vals = Vec::new();
        let d = g.dim();
        let steps = if d == 1 { 1 } else { m };
        for j in 0..steps {
            for i in 0..m {
                let y0 = x[0] - r + (i as f64 + 0.5) * 2.0 * r / m as f64;
                let y1 = if d == 1 { 0.0 } else { x[1] - r + (j as f64 + 0.5) * 2.0 * r / m as f64 };
                let dist = if d == 1 { (y0 - x[0]).abs() } else { (y0 - x[0]).hypot(y1 - x[1]) };
                if dist >= r || (half && [y0, y1][d - 1] < 0.0) {
                    continue;
                }
                let v = match g.locate(&[y0, y1]) {
                    Some((c, _)) => {
                        if sharp {
                            f.cell_mean(c)
                        } else {
                            let cv = f.cell_values(c);
                            cv[..g.corners()].iter().map(|a| a.abs()).sum::<f64>() / g.corners() as f64
                        }
                    }
                    None => 0.0,
                };
                vals.push(v);
            }
        }
        let n = vals.len() as f64;
        if sharp {
            let mut items: Vec<(f64, f64)> = vals.iter().map(|&v| (v, 1.0)).collect();
            pair_spread(&mut items) / (n * n)
        } else {
            vals.iter().sum::<f64>() / n
        }
    }

    #[test]
    fn rectangle_area_matches_pieces() {
        let c = [0.3, 0.2];
        let r = 1.1;
        let total = disk_rect_area(c, r, (-5.0, 5.0), (-5.0, 5.0));
        assert!((total - std::f64::consts::PI * r * r).abs() < 1e-12);
        let a = disk_rect_area(c, r, (-5.0, 0.7), (-5.0, 5.0));
        let b = disk_rect_area(c, r, (0.7, 5.0), (-0.1, 5.0));
        let e = disk_rect_area(c, r, (0.7, 5.0), (-5.0, -0.1));
        assert!((a + b + e - total).abs() < 1e-12);
        assert!((ball_volume(2, &[0.0, 0.3], r, true) - disk_rect_area([0.0, 0.3], r, (-9.0, 9.0), (0.0, 9.0))).abs() < 1e-12);
    }

    #[test]
    fn constant_gives_constant_inside() {
        let g = Grid::new(2, 0.25, &[(-2.0, 2.0), (0.0, 2.0)], true).unwrap();
        let f = sample(|_| -1.5, &g).unwrap();
        let m = maximal(&f, true, &dyadic_radii(&g)).unwrap();
        let s = sharp_maximal(&f, true, &[0.25, 0.5]).unwrap();
        for idx in 0..g.node_count() {
            let x = g.node_coords(idx);
            if x[0].abs() <= 1.5 && x[1] <= 1.5 {
                assert!((m.values[idx] - 1.5).abs() < 1e-12);
            }
            if x[0].abs() <= 1.5 && x[1] <= 1.5 {
                assert!(s.values[idx].abs() < 1e-12);
            }
        }
    }

    #[test]
    fn indicator_probes_match_scan() {
        let g = Grid::new(2, 1.0, &[(-8.0, 8.0), (-8.0, 8.0)], false).unwrap();
        let f = sample(|x| if x[0] >= 0.0 && x[0] <= 1.0 && x[1] >= 0.0 && x[1] <= 1.0 { 1.0 } else { 0.0 }, &g).unwrap();
        let radii = [1.0, 2.0, 4.0];
        let m = maximal(&f, false, &radii).unwrap();
        let ms = sharp_maximal(&f, false, &radii).unwrap();
        for k in [[8usize, 8usize], [10, 9], [4, 12]] {
            let idx = g.node_index(k);
            let x = g.node_coords(idx);
            let a = radii.iter().map(|&r| brute(&f, x, r, false, false, 1200)).fold(0.0, f64::max);
            let b = radii.iter().map(|&r| brute(&f, x, r, false, true, 400)).fold(0.0, f64::max);
            assert!((m.values[idx] - a).abs() < 2e-3 * a.max(1e-3), "{k:?}: {} vs {a}", m.values[idx]);
            assert!((ms.values[idx] - b).abs() < 1e-2 * b.max(1e-3), "{k:?}: {} vs {b}", ms.values[idx]);
        }
    }

    #[test]
    fn one_dim_step_probes() {
        let g = Grid::new(1, 0.25, &[(0.0, 4.0)], true).unwrap();
        let f = sample(|x| if x[0] < 1.6 { 1.0 } else { -0.5 }, &g).unwrap();
        let radii = dyadic_radii(&g);
        let ms = sharp_maximal(&f, true, &radii).unwrap();
        for k in [0usize, 6, 11] {
            let x = g.node_coords(k);
            let b = radii.iter().map(|&r| brute(&f, x, r, true, true, 40000)).fold(0.0, f64::max);
            assert!((ms.values[k] - b).abs() < 1e-3 * b, "{k}: {} vs {b}", ms.values[k]);
        }
    }

    #[test]
    fn sharp_bounded_by_twice_maximal_and_sublinear() {
        let g = Grid::new(2, 0.25, &[(-2.0, 2.0), (0.0, 2.0)], true).unwrap();
        let f = sample(|x| (3.0 * x[0]).sin() * x[1], &g).unwrap();
        let h = sample(|x| (x[0] - x[1]).cos(), &g).unwrap();
        let radii = dyadic_radii(&g);
        let m = maximal(&f, true, &radii).unwrap();
        let s = sharp_maximal(&f, true, &radii).unwrap();
        let sh = sharp_maximal(&h, true, &radii).unwrap();
        let sum = sharp_maximal(&f.combine(1.0, &h, 1.0).unwrap(), true, &radii).unwrap();
        let few = sharp_maximal(&f, true, &radii[..2]).unwrap();
        for i in 0..g.node_count() {
            assert!(s.values[i] <= 2.0 * m.values[i] + 1e-12);
            assert!(sum.values[i] <= s.values[i] + sh.values[i] + 1e-12);
            assert!(few.values[i] <= s.values[i]);
        }
        assert!(maximal(&f, true, &[]).is_err());
    }

    #[test]
    fn reflection_factor_four() {
        let g = Grid::new(2, 0.25, &[(-2.0, 2.0), (0.0, 2.0)], true).unwrap();
        let f = sample(|x| (2.0 * x[0] + x[1]).sin() + x[1] * x[1], &g).unwrap();
        let radii = dyadic_radii(&g);
        let rep = reflection_domination(&f, &radii).unwrap();
        assert!(rep.max_ratio_upper <= 4.0 + 1e-12 && rep.max_ratio_lower <= 4.0 + 1e-12, "{rep:?}");
        assert!(rep.compared > 0);
        assert!(reflection_domination_with(&f, &radii, &radii[..2]).is_err());
    }

    #[test]
    fn reflection_of_height_matches_scan() {
        let g = Grid::new(1, 0.25, &[(0.0, 2.0)], true).unwrap();
        let f = sample(|x| x[0], &g).unwrap();
        let radii = [0.25, 0.5];
        let refl = even_reflect(&f).unwrap();
        let full = sharp_maximal(&refl, false, &radii).unwrap();
        let half = sharp_maximal(&f, true, &radii).unwrap();
        // node x_n = 0.25 sits at index 9 of the reflected grid
        let x = [0.25, 0.0];
        let a = radii.iter().map(|&r| brute(&refl, x, r, false, true, 40000)).fold(0.0, f64::max);
        let b = radii.iter().map(|&r| brute(&f, x, r, true, true, 40000)).fold(0.0, f64::max);
        assert!((full.values[9] - a).abs() < 1e-3 * a);
        assert!((half.values[1] - b).abs() < 1e-3 * b);
    }

    #[test]
    fn fefferman_stein_homogeneous_and_translation_invariant() {
        let g = Grid::new(2, 0.25, &[(-3.0, 3.0), (0.0, 4.0)], true).unwrap();
        let bump = |c: f64| move |x: &[f64]| (-4.0 * ((x[0] - c).powi(2) + (x[1] - 2.0).powi(2))).exp();
        let f = sample(bump(-0.5), &g).unwrap();
        let a = fefferman_stein_ratio(&f, 2.0, true).unwrap();
        let b = fefferman_stein_ratio(&f.scaled(-3.0), 2.0, true).unwrap();
        assert!((a - b).abs() < 1e-12 * a);
        let t = fefferman_stein_ratio(&sample(bump(0.5), &g).unwrap(), 2.0, true).unwrap();
        assert!((a - t).abs() < 1e-2 * a, "{a} vs {t}");
        assert!(fefferman_stein_ratio(&GridFunction::zeros(&g), 2.0, true).is_err());
    }
}
