//! The rescaled characteristic-polynomial ratio xi_n and its limit approximant.
//!
//! xi_n(z) = Z_n(e^{2 i pi z / n}) / Z_n(1) is evaluated two ways: directly
//! from the spectrum, and through the regrouped infinite product over the
//! rescaled points. Factors are accumulated in log space so that n = 512
//! factors cannot overflow for large |Im z|.

use num_complex::Complex64;
use std::f64::consts::{PI, TAU};

use crate::spectrum::{RescaledPointSet, Spectrum};
use crate::{Error, Result};

const GAP_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum XiMethod {
    Direct,
    Product,
}

/// One evaluation of xi_n or the xi_infinity approximant.
#[derive(Debug, Clone)]
pub struct XiEvaluation {
    pub z: Complex64,
    pub value: Complex64,
    pub method: XiMethod,
    /// Symmetric truncation level; None for the direct method.
    pub truncation: Option<usize>,
    /// Heuristic truncation envelope c * log(2+A)/A with recorded constant c.
    pub tail_bound: Option<f64>,
    pub tail_constant: Option<f64>,
}

/// xi_n(z) = prod_k (e^{2 pi i z / n} - lambda_k) / (1 - lambda_k).
pub fn xi_direct(spec: &Spectrum, z: Complex64) -> Result<XiEvaluation> {
    if spec.gap_to_one() <= GAP_TOL {
        return Err(Error::NearUnityEigenvalue { gap: spec.gap_to_one() });
    }
    let n = spec.n() as f64;
    let value = if z == Complex64::new(0.0, 0.0) {
        Complex64::new(1.0, 0.0)
    } else {
        let w = (Complex64::new(0.0, 1.0) * TAU * z / n).exp();
        let mut log_sum = Complex64::new(0.0, 0.0);
        let mut zero = false;
        for lambda in spec.eigenvalues() {
            let num = w - lambda;
            if num.norm() == 0.0 {
                zero = true;
                break;
            }
            log_sum += num.ln() - (Complex64::new(1.0, 0.0) - lambda).ln();
        }
        if zero {
            Complex64::new(0.0, 0.0)
        } else {
            log_sum.exp()
        }
    };
    Ok(XiEvaluation {
        z,
        value,
        method: XiMethod::Direct,
        truncation: None,
        tail_bound: None,
        tail_constant: None,
    })
}

/// Regrouped product e^{i pi z} (1 - z/y_0) prod_{k=1..A} (1 - z/y_k)(1 - z/y_{-k}).
///
/// The symmetric (k, -k) pairing is what makes the product converge; the
/// unpaired ordering is only conditionally convergent.
pub fn xi_product(points: &RescaledPointSet, z: Complex64, trunc: usize) -> Result<XiEvaluation> {
    let a = trunc as i64;
    let (lo, hi) = points.index_range();
    if a > hi || -a < lo {
        return Err(Error::WindowTooSmall { min_k: lo, max_k: hi });
    }
    let mut log_sum = Complex64::new(0.0, 1.0) * PI * z;
    let mut zero = false;
    let mut push = |yk: f64, k: i64| -> Result<()> {
        if yk == 0.0 {
            return Err(Error::InvalidPoints { k });
        }
        let f = Complex64::new(1.0, 0.0) - z / yk;
        if f.norm() == 0.0 {
            zero = true;
        } else {
            log_sum += f.ln();
        }
        Ok(())
    };
    push(points.y(0)?, 0)?;
    for k in 1..=a {
        push(points.y(k)?, k)?;
        push(points.y(-k)?, -k)?;
    }
    let value = if zero {
        Complex64::new(0.0, 0.0)
    } else if z == Complex64::new(0.0, 0.0) {
        Complex64::new(1.0, 0.0)
    } else {
        log_sum.exp()
    };
    let c = (1.0 + z.norm()) * (1.0 + z.norm());
    Ok(XiEvaluation {
        z,
        value,
        method: XiMethod::Product,
        truncation: Some(trunc),
        tail_bound: Some(c * (2.0 + trunc as f64).ln() / trunc as f64),
        tail_constant: Some(c),
    })
}

/// xi_infinity approximant: the same product over the terminal snapshot's
/// points, which stand in for the limit points of the coupled chain.
pub fn xi_infinity_approx(
    terminal_points: &RescaledPointSet,
    z: Complex64,
    trunc: usize,
) -> Result<XiEvaluation> {
    xi_product(terminal_points, z, trunc)
}

/// |Zbar_n(1/z) - z^{-n} (-1)^n det(U_n^{-1}) Z_n(z)| where Zbar has
/// conjugated coefficients, both sides computed from the spectrum.
pub fn functional_equation_residual(spec: &Spectrum, z: Complex64) -> f64 {
    assert!(z.norm() > 0.0, "functional equation undefined at z = 0");
    let n = spec.n();
    let inv = 1.0 / z;
    let mut lhs = Complex64::new(1.0, 0.0);
    let mut zn = Complex64::new(1.0, 0.0);
    let mut det_inv = Complex64::new(1.0, 0.0);
    for lambda in spec.eigenvalues() {
        lhs *= inv - lambda.conj();
        zn *= z - lambda;
        det_inv *= lambda.conj(); // 1/lambda = conj(lambda) on the circle
    }
    let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
    let rhs = z.powi(-(n as i32)) * sign * det_inv * zn;
    (lhs - rhs).norm()
}

/// One row of the imaginary-axis growth table.
#[derive(Debug, Clone)]
pub struct GrowthRow {
    pub x: f64,
    pub log_abs_xi: f64,
    pub lower_envelope: f64,
    pub upper_envelope: f64,
}

#[derive(Debug, Clone)]
pub struct GrowthProfile {
    pub rows: Vec<GrowthRow>,
    /// Fitted c with log|xi(ix)| >= c |x| on the sampled axis points.
    pub lower_constant: f64,
    /// Fitted C with log|xi(ix)| <= C |x| log(2 + |x|).
    pub upper_constant: f64,
}

/// log|xi(ix)| = (1/2) sum_{|k| <= A} log(1 + x^2 / y_k^2), with the fitted
/// envelopes c|x| and C|x|log(2+|x|) of the order-one growth bounds.
pub fn growth_profile(points: &RescaledPointSet, xs: &[f64], trunc: usize) -> Result<GrowthProfile> {
    let a = trunc as i64;
    let mut logs = Vec::with_capacity(xs.len());
    for &x in xs {
        let x2 = x * x;
        let mut sum = 0.0;
        for k in -a..=a {
            let y = points.y(k)?;
            sum += (x2 / (y * y)).ln_1p();
        }
        logs.push(0.5 * sum);
    }
    let mut c_low = f64::INFINITY;
    let mut c_up = 0.0f64;
    for (&x, &l) in xs.iter().zip(&logs) {
        if x.abs() > 0.0 {
            c_low = c_low.min(l / x.abs());
            c_up = c_up.max(l / (x.abs() * (2.0 + x.abs()).ln()));
        }
    }
    if !c_low.is_finite() {
        c_low = 0.0;
    }
    let rows = xs
        .iter()
        .zip(&logs)
        .map(|(&x, &l)| GrowthRow {
            x,
            log_abs_xi: l,
            lower_envelope: c_low * x.abs(),
            upper_envelope: c_up * x.abs() * (2.0 + x.abs()).ln(),
        })
        .collect();
    Ok(GrowthProfile { rows, lower_constant: c_low, upper_constant: c_up })
}
