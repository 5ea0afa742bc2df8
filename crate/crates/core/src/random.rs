//! Seeded random grid functions: sums of Gaussian bumps times a smooth window.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::grid::{sample, Grid, GridFunction};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bump {
    pub center: [f64; 2],
    pub width: f64,
    pub amplitude: f64,
}

/// Random field Σ a_k exp(−|x−c_k|²/w_k²) · W(x) where W is a C^∞ window
/// vanishing outside `window`.
#[derive(Debug, Clone, PartialEq)]
pub struct BumpField {
    pub bumps: Vec<Bump>,
    pub window: Vec<(f64, f64)>,
    /// Multiply by x_n/(x_n + 0.1) so the field vanishes on {x_n = 0}.
    pub boundary_vanishing: bool,
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn window_factor(x: &[f64], window: &[(f64, f64)]) -> f64 {
    let mut w = 1.0;
    for (xi, &(a, b)) in x.iter().zip(window) {
        let tau = (2.0 * xi - a - b) / (b - a);
        if tau.abs() >= 1.0 {
            return 0.0;
        }
        w *= (1.0 - 1.0 / (1.0 - tau * tau)).exp();
    }
    w
}

impl BumpField {
    /// 3 to 6 bumps, centers at least 15% of the window inside it, widths
    /// 0.15 to 0.4 of the shortest window side, amplitudes in [−1, 1].
    pub fn random(r: &mut impl Rng, window: &[(f64, f64)], boundary_vanishing: bool) -> Result<Self> {
        if window.is_empty() || window.len() > 2 || window.iter().any(|&(a, b)| !(b > a)) {
            return Err(Error::Parameter("window must be a nonempty box in 1 or 2 dimensions".into()));
        }
        let size = window.iter().map(|&(a, b)| b - a).fold(f64::INFINITY, f64::min);
        let count = r.random_range(3..=6);
        let bumps = (0..count)
            .map(|_| {
                let mut center = [0.0; 2];
                for (c, &(a, b)) in center.iter_mut().zip(window) {
                    let m = 0.15 * (b - a);
                    *c = r.random_range(a + m..b - m);
                }
                Bump {
                    center,
                    width: size * r.random_range(0.15..0.4),
                    amplitude: r.random_range(-1.0..1.0),
                }
            })
            .collect();
        Ok(BumpField { bumps, window: window.to_vec(), boundary_vanishing })
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        let w = window_factor(x, &self.window);
        if w == 0.0 {
            return 0.0;
        }
        let mut v = 0.0;
        for b in &self.bumps {
            let r2: f64 = x.iter().zip(&b.center).map(|(a, c)| (a - c) * (a - c)).sum();
            v += b.amplitude * (-r2 / (b.width * b.width)).exp();
        }
        if self.boundary_vanishing {
            let xn = x[x.len() - 1];
            v *= xn / (xn + 0.1);
        }
        v * w
    }

    pub fn sample(&self, grid: &Grid) -> Result<GridFunction> {
        if grid.dim() != self.window.len() {
            return Err(Error::Grid("window dimension differs from grid".into()));
        }
        sample(|x| self.eval(x), grid)
    }
}

/// Convenience: one seeded random grid function.
pub fn random_function(grid: &Grid, seed: u64, window: &[(f64, f64)], boundary_vanishing: bool) -> Result<GridFunction> {
    BumpField::random(&mut rng(seed), window, boundary_vanishing)?.sample(grid)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seeded_and_windowed() {
        let g = Grid::new(2, 0.125, &[(-1.0, 1.0), (0.0, 1.0)], true).unwrap();
        let w = [(-0.8, 0.8), (-0.5, 0.75)];
        let a = random_function(&g, 7, &w, true).unwrap();
        let b = random_function(&g, 7, &w, true).unwrap();
        let c = random_function(&g, 8, &w, true).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
        for i in 0..g.node_count() {
            let x = g.node_coords(i);
            if x[0].abs() >= 0.8 || x[1] >= 0.75 || x[1] == 0.0 {
                assert_eq!(a.values[i], 0.0);
            }
        }
        assert!(a.max_abs() > 0.0);
    }

    #[test]
    fn rejects_bad_windows() {
        assert!(BumpField::random(&mut rng(1), &[(1.0, 0.0)], false).is_err());
        assert!(BumpField::random(&mut rng(1), &[], false).is_err());
        let f = BumpField::random(&mut rng(1), &[(0.0, 1.0)], false).unwrap();
        assert!((3..=6).contains(&f.bumps.len()));
    }
}
