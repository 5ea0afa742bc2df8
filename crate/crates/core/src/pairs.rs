//! Cell-pair quadrature for hypersingular double integrals on uniform grids.
//!
//! On a uniform grid the integral over a pair of cells only depends on their
//! integer offset δ, so one rule per offset is built on the reference cell:
//! points (ξ, η, w) with Σ w F(ξ, η) ≈ ∫∫ F(ξ, η) |δ + ξ − η|^{−β} dξ dη.
//! Physical integrals pick up the factor h^{2n−β}.
//!
//! Offsets with |δ_i| ≤ 1 on every axis are integrated in the difference
//! variable z = δ + ξ − η. Pieces of the z-box with the singularity at a
//! corner are Duffy-split; the radial variable uses Gauss–Jacobi for the
//! weight ρ^{n−1−β+q}, which is exact when F/ρ^q is a polynomial. Separated
//! offsets use tensor Gauss rules whose order decreases with distance.

use crate::grid::Grid;
use crate::quadrature::{gauss_jacobi, gauss_legendre, Rule};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairPoint {
    pub x: [f64; 2],
    pub y: [f64; 2],
    pub w: f64,
}

const INNER: usize = 3;
const RADIAL: usize = 6;
const ANGULAR: usize = 12;
const PIECE: usize = 8;

/// True when the rule for δ is built in the difference variable.
pub fn is_near(dim: usize, delta: [i64; 2]) -> bool {
    (0..dim).all(|i| delta[i].abs() <= 1)
}

/// Gauss order per axis for separated cell pairs at Chebyshev distance `d` ≥ 2.
fn far_order(dim: usize, d: i64) -> usize {
    if dim == 1 {
        return match d {
            0..=3 => 10,
            4..=8 => 6,
            _ => 4,
        };
    }
    match d {
        0..=2 => 6,
        3..=4 => 4,
        5..=8 => 3,
        _ => 2,
    }
}

/// Rule for the reference pair at offset δ, kernel exponent β and numerator
/// vanishing order q at the diagonal.
pub fn pair_rule(dim: usize, delta: [i64; 2], beta: f64, q: f64) -> Vec<PairPoint> {
    if is_near(dim, delta) {
        z_rule(dim, delta, beta, q)
    } else {
        let d = (0..dim).map(|i| delta[i].abs()).max().unwrap_or(0);
        tensor_rule(dim, delta, beta, &gauss_legendre(far_order(dim, d)))
    }
}

/// Plain tensor Gauss rule in (ξ, η).
pub fn tensor_rule(dim: usize, delta: [i64; 2], beta: f64, g: &Rule) -> Vec<PairPoint> {
    let pts = crate::grid::cell_rule(dim, g);
    let mut out = Vec::with_capacity(pts.len() * pts.len());
    for (x, wx) in &pts {
        for (y, wy) in &pts {
            let r2: f64 = (0..dim).map(|i| (delta[i] as f64 + x[i] - y[i]).powi(2)).sum();
            out.push(PairPoint { x: *x, y: *y, w: wx * wy * r2.powf(-0.5 * beta) });
        }
    }
    out
}

/// Rule in the difference variable; valid for every offset, used for near ones.
pub fn z_rule(dim: usize, delta: [i64; 2], beta: f64, q: f64) -> Vec<PairPoint> {
    let inner = gauss_legendre(INNER);
    let piece = gauss_legendre(PIECE);
    let radial = gauss_jacobi(RADIAL, dim as f64 - 1.0 - beta + q);
    let angular = gauss_legendre(ANGULAR);
    let mut out = Vec::new();
    // Each axis splits ζ = ξ − η into [−1, 0] and [0, 1].
    for sides in 0..(1usize << dim) {
        let mut lo = [0.0; 2];
        let mut hi = [0.0; 2];
        let mut corner = true;
        for i in 0..dim {
            let d = delta[i] as f64;
            if (sides >> i) & 1 == 0 {
                lo[i] = d - 1.0;
                hi[i] = d;
            } else {
                lo[i] = d;
                hi[i] = d + 1.0;
            }
            corner &= lo[i] == 0.0 || hi[i] == 0.0;
        }
        let mut zs: Vec<([f64; 2], f64)> = Vec::new();
        if corner {
            // sign of z_i on this piece
            let mut sg = [1.0; 2];
            for i in 0..dim {
                if hi[i] == 0.0 {
                    sg[i] = -1.0;
                }
            }
            for (rho, wr) in radial.on(0.0, 1.0) {
                let base = wr * rho.powf(-q);
                if dim == 1 {
                    zs.push(([sg[0] * rho, 0.0], base));
                    continue;
                }
                for (t, wt) in angular.on(0.0, 1.0) {
                    let k = (1.0 + t * t).powf(-0.5 * beta);
                    zs.push(([sg[0] * rho, sg[1] * rho * t], base * wt * k));
                    zs.push(([sg[0] * rho * t, sg[1] * rho], base * wt * k));
                }
            }
        } else {
            let g = crate::grid::cell_rule(dim, &piece);
            for (u, w) in g {
                let mut z = [0.0; 2];
                let mut r2 = 0.0;
                for i in 0..dim {
                    z[i] = lo[i] + u[i];
                    r2 += z[i] * z[i];
                }
                zs.push((z, w * r2.powf(-0.5 * beta)));
            }
        }
        let ig = crate::grid::cell_rule(dim, &inner);
        for (z, wz) in zs {
            let mut a = [0.0; 2];
            let mut len = [1.0; 2];
            for i in 0..dim {
                let zeta = z[i] - delta[i] as f64;
                a[i] = (-zeta).max(0.0);
                len[i] = (1.0 - zeta.abs()).max(0.0);
            }
            for (v, wv) in &ig {
                let mut y = [0.0; 2];
                let mut x = [0.0; 2];
                let mut w = wz * wv;
                for i in 0..dim {
                    y[i] = a[i] + len[i] * v[i];
                    x[i] = y[i] + z[i] - delta[i] as f64;
                    w *= len[i];
                }
                if w != 0.0 {
                    out.push(PairPoint { x, y, w });
                }
            }
        }
    }
    out
}

/// All offsets between cells of the grid, δ = c1 − c2.
pub fn all_offsets(grid: &Grid) -> Vec<[i64; 2]> {
    let n0 = grid.cells(0) as i64;
    let n1 = grid.cells(1) as i64;
    let mut v = Vec::new();
    for d1 in -(n1 - 1)..n1 {
        for d0 in -(n0 - 1)..n0 {
            v.push([d0, d1]);
        }
    }
    v
}

/// Offsets with δ ≥ 0 in lexicographic (axis 1, then axis 0) order.
pub fn half_offsets(grid: &Grid) -> Vec<[i64; 2]> {
    all_offsets(grid)
        .into_iter()
        .filter(|d| d[1] > 0 || (d[1] == 0 && d[0] >= 0))
        .collect()
}

/// Ordered pairs (c1, c2) of cell indices with c1 = c2 + δ among selected cells.
pub fn pairs_at(grid: &Grid, sel: &[bool], delta: [i64; 2]) -> Vec<(usize, usize)> {
    let n0 = grid.cells(0) as i64;
    let n1 = grid.cells(1) as i64;
    let mut out = Vec::new();
    for j in 0..n1 {
        let j1 = j + delta[1];
        if j1 < 0 || j1 >= n1 {
            continue;
        }
        for i in 0..n0 {
            let i1 = i + delta[0];
            if i1 < 0 || i1 >= n0 {
                continue;
            }
            let c2 = (i + n0 * j) as usize;
            let c1 = (i1 + n0 * j1) as usize;
            if sel[c1] && sel[c2] {
                out.push((c1, c2));
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::adaptive;

    fn apply(rule: &[PairPoint], f: impl Fn(&[f64; 2], &[f64; 2]) -> f64) -> f64 {
        rule.iter().map(|p| p.w * f(&p.x, &p.y)).sum()
    }

    #[test]
    fn one_dim_self_pair_exact() {
        for &beta in &[1.6, 2.0, 2.5, 2.9] {
            let r = pair_rule(1, [0, 0], beta, 2.0);
            let v = apply(&r, |x, y| (x[0] - y[0]).powi(2));
            let exact = 2.0 / ((3.0 - beta) * (4.0 - beta));
            assert!((v - exact).abs() < 1e-12 * exact, "beta={beta}");
        }
    }

    #[test]
    fn one_dim_touching_pair_exact() {
        // x ∈ [1,2], y ∈ [0,1]: ∫∫ (x−y)^{2−β}
        let beta = 2.5;
        let r = pair_rule(1, [1, 0], beta, 2.0);
        let v = apply(&r, |x, y| (1.0 + x[0] - y[0]).powi(2));
        let e = 3.0 - beta;
        let exact = (2f64.powf(e + 1.0) - 2.0) / (e * (e + 1.0));
        assert!((v - exact).abs() < 1e-12 * exact);
    }

    #[test]
    fn two_dim_self_pair_matches_oracle() {
        let beta = 3.5;
        let r = pair_rule(2, [0, 0], beta, 2.0);
        let v = apply(&r, |x, y| (x[0] - y[0]).powi(2) + (x[1] - y[1]).powi(2));
        // density of ζ is (1−|ζ1|)(1−|ζ2|); polar in the first quadrant
        let e = 2.0 - beta;
        let oracle = 4.0
            * 2.0
            * adaptive(
                |th: f64| {
                    let (c, s) = (th.cos(), th.sin());
                    let rmax = 1.0 / c;
                    adaptive(
                        |r| (1.0 - r * c) * (1.0 - r * s) * r.powf(e) * r,
                        0.0,
                        rmax,
                        1e-13,
                        0.0,
                    )
                },
                0.0,
                std::f64::consts::FRAC_PI_4,
                1e-13,
                0.0,
            );
        assert!((v - oracle).abs() < 1e-9 * oracle, "{v} vs {oracle}");
    }

    #[test]
    fn near_and_far_rules_agree_on_separated_pairs() {
        for delta in [[2, 0], [2, 1], [-3, 2]] {
            let a = z_rule(2, delta, 3.5, 2.0);
            let b = pair_rule(2, delta, 3.5, 2.0);
            let f = |x: &[f64; 2], y: &[f64; 2]| (1.0 + x[0] * y[1]) * (2.0 - x[1] + y[0]);
            let (va, vb) = (apply(&a, f), apply(&b, f));
            assert!((va - vb).abs() < 1e-6 * va.abs(), "{delta:?}: {va} {vb}");
        }
    }

    #[test]
    fn rule_masses_sum_to_cell_volume_without_kernel() {
        // β = 0, q = 0 leaves plain volume
        for dim in 1..=2 {
            for delta in [[0, 0], [1, 0], [1, 1], [0, -1]] {
                let r = pair_rule(dim, delta, 0.0, 0.0);
                let v: f64 = r.iter().map(|p| p.w).sum();
                assert!((v - 1.0).abs() < 1e-12, "dim={dim} {delta:?} v={v}");
            }
        }
    }
}
