//! The argument of Z_n on the unit circle: exact piecewise-linear evaluation,
//! the zero-counting formula, the index identity, argument suprema, and the
//! moment generating function of X_n with its Chernoff bound.
//!
//! The branch of log Z_n is the continuous determination on the plane cut
//! along the eigenvalue rays, normalized so that log Z_n(0) is purely
//! imaginary in i(-pi, pi]. On the closed unit disc the decomposition
//! log Z_n(z) = log Z_n(0) + sum_k log(1 - z/lambda_k) holds with principal
//! branches termwise, which makes the circle evaluation exact: each term
//! contributes (psi_k - pi)/2 with psi_k = (phi - theta_k) mod 2pi.

use num_complex::Complex64;
use std::f64::consts::{PI, TAU};

use crate::special::ln_gamma;
use crate::spectrum::Spectrum;
use crate::{Error, Result};

const CUT_TOL: f64 = 1e-13;
const COUNT_RESIDUAL_TOL: f64 = 1e-6;

/// Chernoff constant C = pi^2/6 + 1.
pub const CHERNOFF_C: f64 = PI * PI / 6.0 + 1.0;

fn wrap_to_pi(mut x: f64) -> f64 {
    x = x.rem_euclid(TAU);
    if x > PI {
        x -= TAU;
    }
    x
}

/// Im log Z_n(0): principal argument of (-1)^n det U_n, in (-pi, pi].
pub fn base_value(spec: &Spectrum) -> f64 {
    wrap_to_pi(spec.n() as f64 * PI + spec.theta_sum())
}

/// Im log Z_n(e^{i phi}), exact from the closed-form branch decomposition.
pub fn im_log_z(spec: &Spectrum, phi: f64) -> Result<f64> {
    let mut sum = 0.0;
    for &t in spec.theta() {
        let psi = (phi - t).rem_euclid(TAU);
        if psi < CUT_TOL || TAU - psi < CUT_TOL {
            return Err(Error::OnBranchCut { dist: psi.min(TAU - psi) });
        }
        sum += (psi - PI) / 2.0;
    }
    Ok(base_value(spec) + sum)
}

/// X_n = Im(log Z_n(1) - log Z_n(0)) = sum_k (pi - theta_k)/2.
pub fn x_n(spec: &Spectrum) -> f64 {
    spec.theta().iter().map(|&t| (PI - t) / 2.0).sum()
}

/// Number of zeros on the counterclockwise arc from phi_a to phi_b, from the
/// argument-variation formula. The pre-round residual must be below 1e-6.
pub fn count_zeros_arc(spec: &Spectrum, phi_a: f64, phi_b: f64) -> Result<i64> {
    let len = (phi_b - phi_a).rem_euclid(TAU);
    let fa = im_log_z(spec, phi_a)?;
    let fb = im_log_z(spec, phi_b)?;
    let raw = spec.n() as f64 * len / TAU - (fb - fa) / PI;
    let rounded = raw.round();
    let residual = (raw - rounded).abs();
    if residual >= COUNT_RESIDUAL_TOL {
        return Err(Error::FormulaInconsistency { residual });
    }
    Ok(rounded as i64)
}

/// Residual of the identity k = y_k - (1/pi)[Im log Z(e^{i(theta_k + eps)}) -
/// Im log Z(e^{i eps})], with eps half the smaller adjacent gap.
pub fn index_identity_residual(spec: &Spectrum, k: i64) -> Result<f64> {
    let n = spec.n();
    let theta_k = spec.periodized_angle(k);
    // Gap above theta_k (periodized) and above 0.
    let gap_after_k = spec.periodized_angle(k + 1) - theta_k;
    let gap_after_zero = spec.theta()[0];
    let eps = 0.5 * gap_after_k.min(gap_after_zero);
    let y_k = n as f64 * theta_k / TAU;
    let fa = im_log_z(spec, eps)?;
    let fb = im_log_z(spec, theta_k + eps)?;
    Ok((k as f64 - y_k + (fb - fa) / PI).abs())
}

/// Exact supremum of |Im log Z_n| over the circle.
///
/// The profile is piecewise linear with positive slope n/2 and jump -pi at
/// each eigenangle, so every extremum is a one-sided limit at an eigenangle.
pub fn arg_supremum(spec: &Spectrum) -> f64 {
    let base = base_value(spec);
    let theta = spec.theta();
    let mut sup = 0.0f64;
    for (j, &tj) in theta.iter().enumerate() {
        let mut sum = 0.0;
        for (k, &tk) in theta.iter().enumerate() {
            if k != j {
                sum += ((tj - tk).rem_euclid(TAU) - PI) / 2.0;
            }
        }
        let g = base + sum;
        sup = sup.max((g + PI / 2.0).abs()).max((g - PI / 2.0).abs());
    }
    sup
}

/// Exact MGF E[e^{lambda X_n}] = prod_{k=1..n} Gamma(k)^2 /
/// (Gamma(k + i lambda/2) Gamma(k - i lambda/2)). The two conjugate factors
/// make the result real and positive.
pub fn mgf_exact(n: usize, lambda: f64) -> f64 {
    assert!(n >= 1);
    if lambda == 0.0 {
        return 1.0;
    }
    let mut log_sum = 0.0;
    for k in 1..=n {
        let real = ln_gamma(Complex64::new(k as f64, 0.0)).re;
        let shifted = ln_gamma(Complex64::new(k as f64, lambda / 2.0)).re;
        log_sum += 2.0 * real - 2.0 * shifted;
    }
    log_sum.exp()
}

/// Chernoff tail bound P(|X_n| >= x) <= 2 exp(-x^2 / (C + log n)).
pub fn chernoff_bound(n: usize, x: f64) -> f64 {
    assert!(x > 0.0);
    2.0 * (-x * x / (CHERNOFF_C + (n as f64).ln())).exp()
}
