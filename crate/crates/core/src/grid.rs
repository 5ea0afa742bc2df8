//! Uniform Cartesian grids on (half-)space boxes and continuous piecewise
//! multilinear grid functions that vanish outside their box.

use crate::error::{Error, Result};
use crate::quadrature::{gauss_legendre, Rule};

/// Uniform isotropic mesh of a box in one or two dimensions.
///
/// With `halfspace` set, the last axis starts at 0 and the function
/// semantics extend by zero to the rest of the upper half-space.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    dim: usize,
    spacing: f64,
    lower: [f64; 2],
    cells: [usize; 2],
    halfspace: bool,
}

impl Grid {
    pub fn new(dim: usize, spacing: f64, bounds: &[(f64, f64)], halfspace: bool) -> Result<Self> {
        if !(1..=2).contains(&dim) {
            return Err(Error::Grid(format!("dimension {dim} not in {{1, 2}}")));
        }
        if !(spacing > 0.0 && spacing.is_finite()) {
            return Err(Error::Grid(format!("spacing {spacing} must be positive")));
        }
        if bounds.len() != dim {
            return Err(Error::Grid(format!("{} bounds given for dimension {dim}", bounds.len())));
        }
        let mut lower = [0.0; 2];
        let mut cells = [1; 2];
        for (i, &(a, b)) in bounds.iter().enumerate() {
            let q = (b - a) / spacing;
            let k = q.round();
            if !(q.is_finite() && (q - k).abs() <= 1e-9 * q.abs().max(1.0)) {
                return Err(Error::Grid(format!(
                    "axis {i} length {} is not a multiple of spacing {spacing}",
                    b - a
                )));
            }
            if k < 2.0 {
                return Err(Error::Grid(format!("axis {i} has fewer than 2 cells")));
            }
            lower[i] = a;
            cells[i] = k as usize;
        }
        if halfspace && bounds[dim - 1].0 != 0.0 {
            return Err(Error::Grid("half-space grid needs a_n = 0".into()));
        }
        Ok(Grid { dim, spacing, lower, cells, halfspace })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    pub fn halfspace(&self) -> bool {
        self.halfspace
    }

    /// Index of the normal axis x_n.
    pub fn normal_axis(&self) -> usize {
        self.dim - 1
    }

    pub fn lower(&self, axis: usize) -> f64 {
        self.lower[axis]
    }

    pub fn upper(&self, axis: usize) -> f64 {
        self.lower[axis] + self.cells[axis] as f64 * self.spacing
    }

    pub fn bounds(&self) -> Vec<(f64, f64)> {
        (0..self.dim).map(|i| (self.lower(i), self.upper(i))).collect()
    }

    /// Cells along `axis` (1 for axes beyond the dimension).
    pub fn cells(&self, axis: usize) -> usize {
        if axis < self.dim {
            self.cells[axis]
        } else {
            1
        }
    }

    /// Nodes along `axis` (1 for axes beyond the dimension).
    pub fn nodes(&self, axis: usize) -> usize {
        if axis < self.dim {
            self.cells[axis] + 1
        } else {
            1
        }
    }

    pub fn node_count(&self) -> usize {
        self.nodes(0) * self.nodes(1)
    }

    pub fn cell_count(&self) -> usize {
        self.cells(0) * self.cells(1)
    }

    pub fn node_index(&self, k: [usize; 2]) -> usize {
        k[0] + self.nodes(0) * k[1]
    }

    pub fn node_multi(&self, idx: usize) -> [usize; 2] {
        [idx % self.nodes(0), idx / self.nodes(0)]
    }

    pub fn cell_index(&self, c: [usize; 2]) -> usize {
        c[0] + self.cells(0) * c[1]
    }

    pub fn cell_multi(&self, idx: usize) -> [usize; 2] {
        [idx % self.cells(0), idx / self.cells(0)]
    }

    pub fn node_coords(&self, idx: usize) -> [f64; 2] {
        let k = self.node_multi(idx);
        let mut x = [0.0; 2];
        for i in 0..self.dim {
            x[i] = self.lower[i] + k[i] as f64 * self.spacing;
        }
        x
    }

    /// Lower corner of a cell.
    pub fn cell_origin(&self, c: [usize; 2]) -> [f64; 2] {
        let mut x = [0.0; 2];
        for i in 0..self.dim {
            x[i] = self.lower[i] + c[i] as f64 * self.spacing;
        }
        x
    }

    /// Number of cell corners, 2^n.
    pub fn corners(&self) -> usize {
        1 << self.dim
    }

    /// Global node indices of the corners of a cell; bit i of the local
    /// index selects the upper node along axis i.
    pub fn cell_nodes(&self, c: [usize; 2]) -> [usize; 4] {
        let mut out = [0; 4];
        for (b, o) in out.iter_mut().enumerate().take(self.corners()) {
            let k = [c[0] + (b & 1), c[1] + ((b >> 1) & 1) * usize::from(self.dim > 1)];
            *o = self.node_index(k);
        }
        out
    }

    /// Cell containing `x` and local coordinates in [0,1]^n, or None outside the box.
    pub fn locate(&self, x: &[f64]) -> Option<([usize; 2], [f64; 2])> {
        let mut c = [0; 2];
        let mut xi = [0.0; 2];
        for i in 0..self.dim {
            let u = (x[i] - self.lower[i]) / self.spacing;
            let n = self.cells[i] as f64;
            if !(u >= -1e-12 && u <= n + 1e-12) {
                return None;
            }
            let k = (u.floor().max(0.0) as usize).min(self.cells[i] - 1);
            c[i] = k;
            xi[i] = (u - k as f64).clamp(0.0, 1.0);
        }
        Some((c, xi))
    }

    /// Lattice steps of an offset vector, if it lies on the lattice.
    pub fn lattice_steps(&self, h: &[f64]) -> Result<[i64; 2]> {
        if h.len() != self.dim {
            return Err(Error::Grid(format!("offset has {} components", h.len())));
        }
        let mut k = [0i64; 2];
        for i in 0..self.dim {
            let q = h[i] / self.spacing;
            let r = q.round();
            if (q - r).abs() > 1e-9 * q.abs().max(1.0) {
                return Err(Error::Grid(format!("offset {:?} is not a lattice vector", h)));
            }
            k[i] = r as i64;
        }
        Ok(k)
    }

    /// Shifted grid with the same cell counts.
    pub fn translated(&self, shift: &[f64]) -> Result<Grid> {
        let b: Vec<(f64, f64)> =
            self.bounds().iter().zip(shift).map(|(&(a, b), s)| (a + s, b + s)).collect();
        Grid::new(self.dim, self.spacing, &b, self.halfspace)
    }
}

/// Reference multilinear basis value of corner `b` at local point `xi`.
pub fn corner_basis(dim: usize, b: usize, xi: &[f64; 2]) -> f64 {
    let mut v = 1.0;
    for i in 0..dim {
        v *= if (b >> i) & 1 == 1 { xi[i] } else { 1.0 - xi[i] };
    }
    v
}

/// Whole-cell selection on a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct CellMask {
    pub grid: Grid,
    pub cells: Vec<bool>,
}

impl CellMask {
    pub fn all(grid: &Grid) -> Self {
        CellMask { grid: *grid, cells: vec![true; grid.cell_count()] }
    }

    /// Cells contained in the given sub-box.
    pub fn from_box(grid: &Grid, bounds: &[(f64, f64)]) -> Self {
        let h = grid.spacing();
        let cells = (0..grid.cell_count())
            .map(|ci| {
                let o = grid.cell_origin(grid.cell_multi(ci));
                (0..grid.dim()).all(|i| {
                    o[i] >= bounds[i].0 - 1e-9 * h && o[i] + h <= bounds[i].1 + 1e-9 * h
                })
            })
            .collect();
        CellMask { grid: *grid, cells }
    }

    /// Cells whose centers lie in the closed ball B(c, r).
    pub fn ball(grid: &Grid, center: &[f64], r: f64) -> Self {
        let h = grid.spacing();
        let cells = (0..grid.cell_count())
            .map(|ci| {
                let o = grid.cell_origin(grid.cell_multi(ci));
                let d2: f64 =
                    (0..grid.dim()).map(|i| (o[i] + 0.5 * h - center[i]).powi(2)).sum();
                d2 <= r * r
            })
            .collect();
        CellMask { grid: *grid, cells }
    }

    pub fn count(&self) -> usize {
        self.cells.iter().filter(|&&c| c).count()
    }

    pub fn is_empty(&self) -> bool {
        self.count() == 0
    }

    pub fn selected(&self) -> impl Iterator<Item = usize> + '_ {
        self.cells.iter().enumerate().filter(|(_, &c)| c).map(|(i, _)| i)
    }

    /// Nodes touched by a selected cell.
    pub fn nodes(&self) -> Vec<bool> {
        let g = &self.grid;
        let mut n = vec![false; g.node_count()];
        for ci in self.selected() {
            for &a in g.cell_nodes(g.cell_multi(ci)).iter().take(g.corners()) {
                n[a] = true;
            }
        }
        n
    }

    /// Bounding box of the selected cells.
    pub fn bounding_box(&self) -> Option<Vec<(f64, f64)>> {
        let g = &self.grid;
        let h = g.spacing();
        let mut b = vec![(f64::INFINITY, f64::NEG_INFINITY); g.dim()];
        for ci in self.selected() {
            let o = g.cell_origin(g.cell_multi(ci));
            for (i, bi) in b.iter_mut().enumerate() {
                bi.0 = bi.0.min(o[i]);
                bi.1 = bi.1.max(o[i] + h);
            }
        }
        if self.is_empty() {
            None
        } else {
            Some(b)
        }
    }
}

/// Nodal values of a continuous piecewise multilinear function, zero
/// outside the grid box.
#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction {
    pub grid: Grid,
    pub values: Vec<f64>,
}

impl GridFunction {
    pub fn new(grid: &Grid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.node_count() {
            return Err(Error::Grid(format!(
                "{} values for {} nodes",
                values.len(),
                grid.node_count()
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!("node {i}")));
        }
        Ok(GridFunction { grid: *grid, values })
    }

    pub fn zeros(grid: &Grid) -> Self {
        GridFunction { grid: *grid, values: vec![0.0; grid.node_count()] }
    }

    pub fn cell_values(&self, c: [usize; 2]) -> [f64; 4] {
        let nodes = self.grid.cell_nodes(c);
        let mut v = [0.0; 4];
        for b in 0..self.grid.corners() {
            v[b] = self.values[nodes[b]];
        }
        v
    }

    /// Interpolant at local coordinates of a cell.
    pub fn eval_local(&self, c: [usize; 2], xi: &[f64; 2]) -> f64 {
        let v = self.cell_values(c);
        let d = self.grid.dim();
        (0..self.grid.corners()).map(|b| v[b] * corner_basis(d, b, xi)).sum()
    }

    /// Interpolant at a global point (zero outside the box).
    pub fn eval(&self, x: &[f64]) -> f64 {
        match self.grid.locate(x) {
            Some((c, xi)) => self.eval_local(c, &xi),
            None => 0.0,
        }
    }

    /// Mean of the corner values, the exact cell average of the interpolant.
    pub fn cell_mean(&self, c: [usize; 2]) -> f64 {
        let v = self.cell_values(c);
        let k = self.grid.corners();
        v[..k].iter().sum::<f64>() / k as f64
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn scaled(&self, c: f64) -> Self {
        GridFunction { grid: self.grid, values: self.values.iter().map(|v| c * v).collect() }
    }

    /// a·self + b·other on the same grid.
    pub fn combine(&self, a: f64, other: &GridFunction, b: f64) -> Result<Self> {
        if self.grid != other.grid {
            return Err(Error::Grid("grid mismatch".into()));
        }
        let values = self.values.iter().zip(&other.values).map(|(x, y)| a * x + b * y).collect();
        Ok(GridFunction { grid: self.grid, values })
    }

    /// Values on another grid with the same spacing whose nodes are a subset
    /// or superset of ours (copied by lattice position, zero elsewhere).
    pub fn transfer(&self, target: &Grid) -> Result<Self> {
        let h = self.grid.spacing();
        if (target.spacing() - h).abs() > 1e-12 * h || target.dim() != self.grid.dim() {
            return Err(Error::Grid("transfer needs matching spacing and dimension".into()));
        }
        let mut off = [0i64; 2];
        for (i, o) in off.iter_mut().enumerate().take(target.dim()) {
            let q = (target.lower(i) - self.grid.lower(i)) / h;
            if (q - q.round()).abs() > 1e-9 {
                return Err(Error::Grid("grids are not lattice aligned".into()));
            }
            *o = q.round() as i64;
        }
        let mut values = vec![0.0; target.node_count()];
        for (idx, v) in values.iter_mut().enumerate() {
            let k = target.node_multi(idx);
            let src = [k[0] as i64 + off[0], k[1] as i64 + off[1]];
            if let Some(j) = node_at(&self.grid, src) {
                *v = self.values[j];
            }
        }
        Ok(GridFunction { grid: *target, values })
    }
}

/// Node index at signed lattice position, if inside the grid.
pub fn node_at(grid: &Grid, k: [i64; 2]) -> Option<usize> {
    for (i, &ki) in k.iter().enumerate() {
        if ki < 0 || ki >= grid.nodes(i) as i64 {
            return None;
        }
    }
    Some(grid.node_index([k[0] as usize, k[1] as usize]))
}

/// Sample a pointwise field at the grid nodes.
pub fn sample(field: impl Fn(&[f64]) -> f64, grid: &Grid) -> Result<GridFunction> {
    let values: Vec<f64> = (0..grid.node_count())
        .map(|i| field(&grid.node_coords(i)[..grid.dim()]))
        .collect();
    GridFunction::new(grid, values)
}

/// First (δ_h f = f(x+h) − f(x)) or second (f(x+h) + f(x−h) − 2f(x))
/// difference at a lattice offset, reading zero outside the box.
pub fn difference(f: &GridFunction, h: &[f64], order: u8) -> Result<GridFunction> {
    let g = &f.grid;
    let k = g.lattice_steps(h)?;
    let read = |idx: usize, sign: i64| -> f64 {
        let m = g.node_multi(idx);
        node_at(g, [m[0] as i64 + sign * k[0], m[1] as i64 + sign * k[1]])
            .map_or(0.0, |j| f.values[j])
    };
    let values = match order {
        1 => (0..g.node_count()).map(|i| read(i, 1) - f.values[i]).collect(),
        2 => (0..g.node_count())
            .map(|i| read(i, 1) + read(i, -1) - 2.0 * f.values[i])
            .collect(),
        _ => return Err(Error::Parameter(format!("difference order {order} not in {{1, 2}}"))),
    };
    Ok(GridFunction { grid: *g, values })
}

/// Even reflection f̃(x′, x_n) = f(x′, |x_n|) onto the doubled full-space box.
pub fn even_reflect(f: &GridFunction) -> Result<GridFunction> {
    let g = &f.grid;
    if !g.halfspace() {
        return Err(Error::Domain("even reflection needs a half-space grid".into()));
    }
    let n = g.normal_axis();
    let mut bounds = g.bounds();
    bounds[n].0 = -bounds[n].1;
    let full = Grid::new(g.dim(), g.spacing(), &bounds, false)?;
    let nn = g.cells(n) as i64;
    let values = (0..full.node_count())
        .map(|idx| {
            let mut k = full.node_multi(idx);
            k[n] = (k[n] as i64 - nn).unsigned_abs() as usize;
            f.values[g.node_index(k)]
        })
        .collect();
    Ok(GridFunction { grid: full, values })
}

/// Upper-half restriction of a reflected function (inverse of `even_reflect`).
pub fn restrict_upper(f: &GridFunction) -> Result<GridFunction> {
    let g = &f.grid;
    let n = g.normal_axis();
    let mut bounds = g.bounds();
    if bounds[n].0 >= 0.0 {
        return Err(Error::Domain("grid has no lower half".into()));
    }
    bounds[n].0 = 0.0;
    let half = Grid::new(g.dim(), g.spacing(), &bounds, true)?;
    f.transfer(&half)
}

/// Tensor Gauss points over a cell: (local coordinates, weight in units of h^n).
pub fn cell_rule(dim: usize, rule: &Rule) -> Vec<([f64; 2], f64)> {
    let m = rule.len();
    let mut out = Vec::with_capacity(m.pow(dim as u32));
    if dim == 1 {
        for i in 0..m {
            out.push(([rule.nodes[i], 0.0], rule.weights[i]));
        }
    } else {
        for j in 0..m {
            for i in 0..m {
                out.push(([rule.nodes[i], rule.nodes[j]], rule.weights[i] * rule.weights[j]));
            }
        }
    }
    out
}

/// ‖f‖_{L^p} of the interpolant over the selected cells (6-point Gauss per axis).
pub fn lp_norm(f: &GridFunction, p: f64, mask: &CellMask) -> Result<f64> {
    if !(p >= 1.0 && p.is_finite()) {
        return Err(Error::Parameter(format!("p = {p} outside [1, ∞)")));
    }
    if mask.grid != f.grid {
        return Err(Error::Grid("mask grid differs from function grid".into()));
    }
    if mask.is_empty() {
        return Err(Error::Domain("empty region".into()));
    }
    let g = &f.grid;
    let pts = cell_rule(g.dim(), &gauss_legendre(6));
    let vol = g.spacing().powi(g.dim() as i32);
    let mut sum = 0.0;
    for ci in mask.selected() {
        let c = g.cell_multi(ci);
        let v = f.cell_values(c);
        if v[..g.corners()].iter().all(|&x| x == 0.0) {
            continue;
        }
        for (xi, w) in &pts {
            let val: f64 = (0..g.corners()).map(|b| v[b] * corner_basis(g.dim(), b, xi)).sum();
            sum += w * val.abs().powf(p);
        }
    }
    Ok((sum * vol).powf(1.0 / p))
}

/// Geometric grading of [0, 1] toward 0: (node, weight) pairs.
pub fn graded_rule(rule: &Rule, depth: usize) -> Vec<(f64, f64)> {
    let mut out = Vec::new();
    let mut hi = 1.0;
    for _ in 0..depth {
        let lo = 0.5 * hi;
        out.extend(rule.on(lo, hi));
        hi = lo;
    }
    out.extend(rule.on(0.0, hi));
    out
}

/// (∫ f² x_n^{−2s} dx)^{1/2} with graded quadrature in the first cell layer.
pub fn boundary_weighted_norm(f: &GridFunction, s: f64) -> Result<f64> {
    let g = &f.grid;
    if !g.halfspace() {
        return Err(Error::Domain("boundary-weighted norm needs a half-space grid".into()));
    }
    let n = g.normal_axis();
    let tol = 1e-12 * f.max_abs();
    for idx in 0..g.node_count() {
        if g.node_multi(idx)[n] == 0 && f.values[idx].abs() > tol {
            return Err(Error::Domain("function does not vanish on the boundary layer".into()));
        }
    }
    let rule = gauss_legendre(6);
    let plain: Vec<(f64, f64)> = rule.on(0.0, 1.0).collect();
    let graded = graded_rule(&rule, 12);
    let h = g.spacing();
    let mut sum = 0.0;
    for ci in 0..g.cell_count() {
        let c = g.cell_multi(ci);
        let v = f.cell_values(c);
        if v[..g.corners()].iter().all(|&x| x == 0.0) {
            continue;
        }
        let normal = if c[n] == 0 { &graded } else { &plain };
        let tang: &[(f64, f64)] = if g.dim() == 2 { &plain } else { &[(0.0, 1.0)] };
        for &(xn, wn) in normal {
            let height = (c[n] as f64 + xn) * h;
            let weight = height.powf(-2.0 * s);
            for &(xt, wt) in tang {
                let xi = if g.dim() == 2 { [xt, xn] } else { [xn, 0.0] };
                let val: f64 =
                    (0..g.corners()).map(|b| v[b] * corner_basis(g.dim(), b, &xi)).sum();
                sum += wn * wt * val * val * weight;
            }
        }
    }
    Ok((sum * h.powi(g.dim() as i32)).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_examples() {
        let g = Grid::new(1, 0.25, &[(0.0, 1.0)], true).unwrap();
        assert_eq!(g.node_count(), 5);
        let g = Grid::new(2, 0.5, &[(-1.0, 1.0), (0.0, 1.0)], true).unwrap();
        assert_eq!(g.node_count(), 15);
        assert!(Grid::new(1, 0.5, &[(0.0, 0.5)], false).is_err());
        assert!(Grid::new(2, 0.3, &[(0.0, 1.0), (0.0, 1.0)], false).is_err());
        assert!(Grid::new(1, 0.25, &[(0.5, 1.5)], true).is_err());
    }

    #[test]
    fn sample_and_eval_are_consistent() {
        let g = Grid::new(2, 0.25, &[(-1.0, 1.0), (0.0, 1.0)], true).unwrap();
        let f = sample(|x| x[0] * x[1] + 2.0 * x[1], &g).unwrap();
        assert!((f.eval(&[0.1, 0.3]) - (0.1 * 0.3 + 0.6)).abs() < 1e-14);
        assert_eq!(f.eval(&[1.5, 0.3]), 0.0);
        assert!(sample(|_| f64::NAN, &g).is_err());
    }

    #[test]
    fn hat_norm() {
        let g = Grid::new(1, 0.25, &[(0.0, 2.0)], false).unwrap();
        let f = sample(|x| (1.0 - (x[0] - 0.25).abs() / 0.25).max(0.0), &g).unwrap();
        for &p in &[1.0, 2.0, 3.0, 4.0, 8.0] {
            let v = lp_norm(&f, p, &CellMask::all(&g)).unwrap().powf(p);
            assert!((v - 0.5 / (p + 1.0)).abs() < 1e-10 * v, "p={p}");
        }
    }

    #[test]
    fn weighted_norm_of_linear() {
        let g = Grid::new(2, 0.125, &[(0.0, 1.0), (0.0, 1.0)], true).unwrap();
        let f = sample(|x| x[1], &g).unwrap();
        for &s in &[0.0, 0.3, 0.6, 0.9] {
            let v = boundary_weighted_norm(&f, s).unwrap().powi(2);
            assert!((v - 1.0 / (3.0 - 2.0 * s)).abs() < 1e-6, "s={s} v={v}");
        }
        let plain = lp_norm(&f, 2.0, &CellMask::all(&g)).unwrap();
        assert!((boundary_weighted_norm(&f, 0.0).unwrap() - plain).abs() < 1e-12);
        let bad = sample(|x| 1.0 + x[1], &g).unwrap();
        assert!(boundary_weighted_norm(&bad, 0.5).is_err());
    }

    #[test]
    fn differences() {
        let g = Grid::new(1, 0.125, &[(0.0, 2.0)], false).unwrap();
        let f = sample(|x| x[0] * x[0], &g).unwrap();
        let d2 = difference(&f, &[0.25], 2).unwrap();
        for i in 2..(g.node_count() - 2) {
            assert!((d2.values[i] - 2.0 * 0.0625).abs() < 1e-13);
        }
        let c = sample(|_| 3.0, &g).unwrap();
        let d1 = difference(&c, &[0.25], 1).unwrap();
        assert_eq!(d1.values[0], 0.0);
        assert_eq!(*d1.values.last().unwrap(), -3.0);
        assert!(difference(&f, &[0.1], 1).is_err());
    }

    #[test]
    fn reflection_round_trip() {
        let g = Grid::new(2, 0.25, &[(-1.0, 1.0), (0.0, 1.0)], true).unwrap();
        let f = sample(|x| x[1] + 0.1 * x[0], &g).unwrap();
        let r = even_reflect(&f).unwrap();
        assert!((r.eval(&[0.3, -0.4]) - r.eval(&[0.3, 0.4])).abs() < 1e-14);
        assert_eq!(restrict_upper(&r).unwrap(), f);
        let full = Grid::new(2, 0.25, &[(-1.0, 1.0), (-1.0, 1.0)], false).unwrap();
        let h = sample(|x| x[1], &full).unwrap();
        assert!(even_reflect(&h).is_err());
    }
}
