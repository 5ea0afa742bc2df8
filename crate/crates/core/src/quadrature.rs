//! One-dimensional quadrature rules on the unit interval and an adaptive
//! Gauss–Kronrod integrator used by oracles and exterior kernels.

use nalgebra::{DMatrix, SymmetricEigen};
use statrs::function::gamma::ln_gamma;

/// Nodes and weights on [0, 1].
#[derive(Debug, Clone, PartialEq)]
pub struct Rule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl Rule {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Map onto [a, b].
    pub fn on(&self, a: f64, b: f64) -> impl Iterator<Item = (f64, f64)> + '_ {
        let l = b - a;
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(move |(x, w)| (a + l * x, l * w))
    }

    pub fn integrate(&self, a: f64, b: f64, f: impl Fn(f64) -> f64) -> f64 {
        self.on(a, b).map(|(x, w)| w * f(x)).sum()
    }
}

/// Gauss–Legendre rule with `n` points on [0, 1].
pub fn gauss_legendre(n: usize) -> Rule {
    assert!(n > 0);
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            let p = if n == 1 { x } else { p1 };
            let pm = if n == 1 { 1.0 } else { p0 };
            dp = n as f64 * (x * p - pm) / (x * x - 1.0);
            let dx = p / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = 0.5 * (1.0 - x);
        nodes[n - 1 - i] = 0.5 * (1.0 + x);
        weights[i] = 0.5 * w;
        weights[n - 1 - i] = 0.5 * w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.5;
    }
    Rule { nodes, weights }
}

/// Gauss–Jacobi rule with `n` points on [0, 1] for the weight `x^alpha`,
/// alpha > −1, via Golub–Welsch.
pub fn gauss_jacobi(n: usize, alpha: f64) -> Rule {
    assert!(n > 0 && alpha > -1.0);
    // Jacobi (a, b) = (0, alpha) on [−1, 1], weight (1 + ξ)^alpha.
    let (a, b) = (0.0_f64, alpha);
    let mut j = DMatrix::<f64>::zeros(n, n);
    for k in 0..n {
        let kf = k as f64;
        let d = 2.0 * kf + a + b;
        j[(k, k)] = if k == 0 {
            (b - a) / (a + b + 2.0)
        } else {
            (b * b - a * a) / (d * (d + 2.0))
        };
        if k + 1 < n {
            let m = kf + 1.0;
            let e = 2.0 * m + a + b;
            let beta = 4.0 * m * (m + a) * (m + b) * (m + a + b) / (e * e * (e + 1.0) * (e - 1.0));
            j[(k, k + 1)] = beta.sqrt();
            j[(k + 1, k)] = beta.sqrt();
        }
    }
    let mu0 = ((a + b + 1.0) * 2f64.ln() + ln_gamma(a + 1.0) + ln_gamma(b + 1.0)
        - ln_gamma(a + b + 2.0))
    .exp();
    let eig = SymmetricEigen::new(j);
    let mut pts: Vec<(f64, f64)> = (0..n)
        .map(|i| {
            let v = eig.eigenvectors[(0, i)];
            let xi = eig.eigenvalues[i];
            // ∫₀¹ x^b g dx = 2^{−b−1} ∫ (1+ξ)^b g dξ
            (0.5 * (1.0 + xi), mu0 * v * v * 2f64.powf(-b - 1.0))
        })
        .collect();
    pts.sort_by(|p, q| p.0.total_cmp(&q.0));
    Rule {
        nodes: pts.iter().map(|p| p.0).collect(),
        weights: pts.iter().map(|p| p.1).collect(),
    }
}

const GK_X: [f64; 8] = [
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.0,
];
const GK_WK: [f64; 8] = [
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
];
const GK_WG: [f64; 4] = [
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
];

fn gk15(f: &impl Fn(f64) -> f64, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut k = GK_WK[7] * fc;
    let mut g = GK_WG[3] * fc;
    for i in 0..7 {
        let s = f(c - h * GK_X[i]) + f(c + h * GK_X[i]);
        k += GK_WK[i] * s;
        if i % 2 == 1 {
            g += GK_WG[i / 2] * s;
        }
    }
    (k * h, ((k - g) * h).abs())
}

/// Globally adaptive Gauss–Kronrod integration of `f` over [a, b]: the
/// interval with the largest error estimate is bisected until the summed
/// estimate drops below max(abs, rel·|integral|).
pub fn adaptive(f: impl Fn(f64) -> f64, a: f64, b: f64, rel: f64, abs: f64) -> f64 {
    const MAX_INTERVALS: usize = 4000;
    let (v0, e0) = gk15(&f, a, b);
    let mut parts = vec![(a, b, v0, e0)];
    let (mut total, mut err) = (v0, e0);
    while err > abs.max(rel * total.abs()) && parts.len() < MAX_INTERVALS {
        let (k, _) = parts
            .iter()
            .enumerate()
            .fold((0, -1.0), |best, (i, p)| if p.3 > best.1 { (i, p.3) } else { best });
        let (l, r, v, e) = parts.swap_remove(k);
        let m = 0.5 * (l + r);
        if m <= l || m >= r {
            parts.push((l, r, v, 0.0));
            err -= e;
            continue;
        }
        let (v1, e1) = gk15(&f, l, m);
        let (v2, e2) = gk15(&f, m, r);
        total += v1 + v2 - v;
        err += e1 + e2 - e;
        parts.push((l, m, v1, e1));
        parts.push((m, r, v2, e2));
    }
    parts.iter().map(|p| p.2).sum()
}

/// ∫_a^∞ f via the substitution x = a + (1 − u)/u.
pub fn adaptive_to_inf(f: impl Fn(f64) -> f64, a: f64, rel: f64, abs: f64) -> f64 {
    adaptive(
        |u| {
            if u <= 0.0 {
                return 0.0;
            }
            let x = a + (1.0 - u) / u;
            f(x) / (u * u)
        },
        0.0,
        1.0,
        rel,
        abs,
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn legendre_exact_for_polynomials() {
        for n in 1..12 {
            let r = gauss_legendre(n);
            for k in 0..(2 * n) {
                let v: f64 = r.integrate(0.0, 1.0, |x| x.powi(k as i32));
                assert!((v - 1.0 / (k as f64 + 1.0)).abs() < 1e-14, "n={n} k={k}");
            }
        }
    }

    #[test]
    fn jacobi_exact_for_weighted_polynomials() {
        for &alpha in &[-0.5, -0.9, 0.0, 0.3, 1.7] {
            for n in 1..9 {
                let r = gauss_jacobi(n, alpha);
                for k in 0..(2 * n) {
                    let v: f64 = r.integrate(0.0, 1.0, |x| x.powi(k as i32));
                    let exact = 1.0 / (alpha + k as f64 + 1.0);
                    assert!((v - exact).abs() < 1e-12 * exact.max(1.0), "a={alpha} n={n} k={k}");
                }
            }
        }
    }

    #[test]
    fn adaptive_handles_endpoint_singularity() {
        let v = adaptive(|x| x.powf(-0.5), 0.0, 1.0, 1e-12, 1e-15);
        assert!((v - 2.0).abs() < 1e-9);
        let w = adaptive_to_inf(|x| (1.0 + x * x).recip(), 0.0, 1e-12, 1e-15);
        assert!((w - std::f64::consts::FRAC_PI_2).abs() < 1e-10);
    }
}
