//! Exponents and normalization constants of the fractional kernels.

use serde::{Deserialize, Serialize};
use statrs::function::gamma::{gamma, ln_gamma};
use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::quadrature::{adaptive, adaptive_to_inf};

/// Orders and exponents shared by the operators of one experiment.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KernelSpec {
    pub s: f64,
    pub t: f64,
    pub p: f64,
    pub s_tilde: f64,
}

impl KernelSpec {
    pub fn new(s: f64, t: f64, p: f64, s_tilde: f64) -> Result<Self> {
        let k = KernelSpec { s, t, p, s_tilde };
        k.validate()?;
        Ok(k)
    }

    pub fn validate(&self) -> Result<()> {
        let KernelSpec { s, t, p, s_tilde } = *self;
        if !(s > 0.5 && s < 1.0) {
            return Err(Error::Parameter(format!("s = {s} must lie in (1/2, 1)")));
        }
        if !(t >= 0.0 && t < s) {
            return Err(Error::Parameter(format!("t = {t} must lie in [0, s)")));
        }
        if !(p >= 2.0 && p.is_finite()) {
            return Err(Error::Parameter(format!("p = {p} must lie in [2, ∞)")));
        }
        if !(s_tilde > s && s_tilde < 1.0 && s_tilde < 2.0 * s - t) {
            return Err(Error::Parameter(format!(
                "s_tilde = {s_tilde} must lie in (s, min(1, 2s − t))"
            )));
        }
        Ok(())
    }

    /// Conjugate exponent p/(p − 1).
    pub fn p_conj(&self) -> f64 {
        self.p / (self.p - 1.0)
    }
}

/// Constant of the second-difference representation of D^t with symbol |ξ|^t:
/// D^t f(x) = (c_lap/2) ∫ (2f(x) − f(x+h) − f(x−h)) |h|^{−n−t} dh.
pub fn c_lap(n: usize, t: f64) -> Result<f64> {
    if !(t > 0.0 && t < 2.0) {
        return Err(Error::Parameter(format!("t = {t} outside (0, 2)")));
    }
    let nf = n as f64;
    // |Γ(−t/2)| = Γ(1 − t/2)/(t/2)
    let g_neg = gamma(1.0 - 0.5 * t) / (0.5 * t);
    Ok(2f64.powf(t) * gamma(0.5 * (nf + t)) / (PI.powf(0.5 * nf) * g_neg))
}

/// Constant of the Riesz potential D^{−t} f = c_riesz ∫ |x−y|^{t−n} f(y) dy.
pub fn c_riesz(n: usize, t: f64) -> Result<f64> {
    let nf = n as f64;
    if !(t > 0.0 && t < nf) {
        return Err(Error::Parameter(format!("t = {t} outside (0, {n})")));
    }
    Ok(gamma(0.5 * (nf - t)) / (2f64.powf(t) * PI.powf(0.5 * nf) * gamma(0.5 * t)))
}

/// Both constants; requires t ∈ (0, min(2, n)).
pub fn kernel_constants(n: usize, t: f64) -> Result<(f64, f64)> {
    if !(1..=2).contains(&n) {
        return Err(Error::Parameter(format!("dimension {n} not in {{1, 2}}")));
    }
    Ok((c_lap(n, t)?, c_riesz(n, t)?))
}

/// Closed form √π Γ((n−1+tp)/2)/Γ((n+tp)/2).
pub fn slice_kernel_closed_form(n: usize, t: f64, p: f64) -> Result<f64> {
    let m = n as f64 + t * p;
    if m <= 1.0 {
        return Err(Error::Parameter(format!("n + tp = {m} must exceed 1")));
    }
    Ok((0.5 * PI.ln() + ln_gamma(0.5 * (m - 1.0)) - ln_gamma(0.5 * m)).exp())
}

/// C(n,t,p) = ∫_ℝ (1+z²)^{−(n+tp)/2} dz by adaptive quadrature.
pub fn slice_kernel_constant(n: usize, t: f64, p: f64) -> Result<f64> {
    let m = n as f64 + t * p;
    if m <= 1.0 {
        return Err(Error::Parameter(format!("n + tp = {m} must exceed 1")));
    }
    let f = |z: f64| (1.0 + z * z).powf(-0.5 * m);
    Ok(2.0 * (adaptive(f, 0.0, 1.0, 1e-14, 0.0) + adaptive_to_inf(f, 1.0, 1e-14, 0.0)))
}

/// ∫_{z > lower} (a² + z²)^{−(n+tp)/2} dz; `lower = −∞` gives the full line.
pub fn slice_integral(a: f64, n: usize, t: f64, p: f64, lower: f64) -> f64 {
    let m = n as f64 + t * p;
    let f = |z: f64| (a * a + z * z).powf(-0.5 * m);
    let right = adaptive(f, 0.0, a, 1e-14, 0.0) + adaptive_to_inf(f, a, 1e-14, 0.0);
    if lower == f64::NEG_INFINITY {
        2.0 * right
    } else if lower <= 0.0 {
        right + adaptive(f, lower, 0.0, 1e-14, 0.0)
    } else {
        right - adaptive(f, 0.0, lower, 1e-14, 0.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lap_constant_value() {
        assert!((c_lap(1, 0.5).unwrap() - 0.199471).abs() < 1e-6);
        assert!(c_riesz(1, 0.5).unwrap() > 0.0);
        assert!(c_lap(2, 2.0).is_err());
        assert!(c_riesz(1, 1.0).is_err());
    }

    #[test]
    fn slice_constants() {
        let c = slice_kernel_constant(2, 0.5, 2.0).unwrap();
        assert!((c - 2.0).abs() < 1e-10);
        for &p in &[2.0, 3.0, 7.5] {
            assert!((slice_kernel_constant(2, 0.0, p).unwrap() - PI).abs() < 1e-10);
        }
        for &(n, t, p) in &[(1, 0.3, 2.0), (2, 0.9, 4.0), (1, 0.75, 2.0)] {
            let a = slice_kernel_constant(n, t, p).unwrap();
            let b = slice_kernel_closed_form(n, t, p).unwrap();
            assert!((a - b).abs() < 1e-10 * b);
        }
        assert!(slice_kernel_constant(1, 0.0, 2.0).is_err());
    }

    #[test]
    fn spec_validation() {
        assert!(KernelSpec::new(0.75, 0.0, 4.0, 0.9).is_ok());
        assert!(KernelSpec::new(0.4, 0.0, 4.0, 0.9).is_err());
        assert!(KernelSpec::new(0.75, 0.6, 4.0, 0.95).is_err());
        assert!((KernelSpec::new(0.75, 0.0, 4.0, 0.9).unwrap().p_conj() - 4.0 / 3.0).abs() < 1e-15);
    }
}
