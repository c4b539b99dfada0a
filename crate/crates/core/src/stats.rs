//! Sine-kernel statistics of the rescaled points: interval counts and their
//! variance, correlation determinants, deviation and coupling-rate profiles,
//! and power sums with their exact finite-n closed forms.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::ratfn::r_alpha;
use crate::spectrum::{RescaledPointSet, Spectrum};
use crate::{Error, Result};

/// Exact count of points y_k in [a, b].
pub fn count_in_interval(points: &RescaledPointSet, a: f64, b: f64) -> Result<usize> {
    assert!(a <= b);
    let (min_k, max_k) = points.index_range();
    // For explicit sets the materialized window must cover the interval.
    if points.source_n().is_none() {
        let lo = points.y(min_k)?;
        let hi = points.y(max_k)?;
        if a < lo || b > hi {
            return Err(Error::WindowTooSmall { min_k, max_k });
        }
    }
    let pad = points.source_n().unwrap_or(0) as i64 + 2;
    let lo_k = ((a.floor() as i64) - pad).max(min_k);
    let hi_k = ((b.ceil() as i64) + pad).min(max_k);
    let first = lower_bound(points, a, lo_k, hi_k)?;
    let mut count = 0usize;
    let mut k = first;
    while k <= hi_k && points.y(k)? <= b {
        count += 1;
        k += 1;
    }
    Ok(count)
}

/// Smallest k in [lo, hi] with y(k) >= a (hi + 1 if none).
fn lower_bound(points: &RescaledPointSet, a: f64, lo: i64, hi: i64) -> Result<i64> {
    let (mut lo, mut hi) = (lo, hi + 1);
    while lo < hi {
        let mid = lo + (hi - lo) / 2;
        if points.y(mid)? < a {
            lo = mid + 1;
        } else {
            hi = mid;
        }
    }
    Ok(lo)
}

/// Per-interval count statistics across an ensemble, with the fitted
/// variance-versus-log-length slope.
#[derive(Debug, Clone)]
pub struct CountStatistics {
    pub interval_lengths: Vec<f64>,
    /// counts[i][r] = count for interval length i in replica r.
    pub counts: Vec<Vec<usize>>,
    pub mean: Vec<f64>,
    pub variance: Vec<f64>,
    pub stderr: Vec<f64>,
    /// OLS slope of variance against log length, with its standard error.
    pub slope: f64,
    pub slope_stderr: f64,
}

/// Count variance profile over [0, A] for each A in `a_list`.
pub fn variance_profile(replicas: &[RescaledPointSet], a_list: &[f64]) -> Result<CountStatistics> {
    if replicas.len() < 100 {
        return Err(Error::InsufficientReplicas { needed: 100, got: replicas.len() });
    }
    let m = replicas.len() as f64;
    let mut counts = Vec::with_capacity(a_list.len());
    let mut mean = Vec::new();
    let mut variance = Vec::new();
    let mut stderr = Vec::new();
    for &a in a_list {
        if let Some(n) = replicas[0].source_n() {
            assert!(a <= n as f64 / 8.0, "interval length {a} exceeds n/8 edge-effect guard");
        }
        let row: Vec<usize> = replicas
            .iter()
            .map(|pts| count_in_interval(pts, 0.0, a))
            .collect::<Result<_>>()?;
        let mu = row.iter().sum::<usize>() as f64 / m;
        let var = row.iter().map(|&c| (c as f64 - mu).powi(2)).sum::<f64>() / (m - 1.0);
        mean.push(mu);
        variance.push(var);
        stderr.push((var / m).sqrt());
        counts.push(row);
    }
    let xs: Vec<f64> = a_list.iter().map(|&a| a.ln()).collect();
    let (slope, slope_stderr) = ols_slope(&xs, &variance);
    Ok(CountStatistics {
        interval_lengths: a_list.to_vec(),
        counts,
        mean,
        variance,
        stderr,
        slope,
        slope_stderr,
    })
}

/// OLS slope and its standard error.
pub fn ols_slope(xs: &[f64], ys: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let rss: f64 = xs
        .iter()
        .zip(ys)
        .map(|(x, y)| (y - intercept - slope * x).powi(2))
        .sum();
    let dof = (n - 2.0).max(1.0);
    let se = (rss / dof / sxx).sqrt();
    (slope, se)
}

/// max over 1 <= |k| <= k_max of |y_k - k| / log(2 + |k|).
pub fn deviation_profile(points: &RescaledPointSet, k_max: i64) -> Result<f64> {
    assert!(k_max >= 1);
    let mut worst = 0.0f64;
    for k in 1..=k_max {
        for signed in [k, -k] {
            let y = points.y(signed)?;
            let dev = (y - signed as f64).abs() / (2.0 + k as f64).ln();
            worst = worst.max(dev);
        }
    }
    Ok(worst)
}

#[derive(Debug, Clone)]
pub struct CouplingRow {
    pub k: i64,
    pub error: f64,
    pub envelope: f64,
}

#[derive(Debug, Clone)]
pub struct CouplingProfile {
    pub rows: Vec<CouplingRow>,
    /// Twice the median error/envelope ratio; the true constant is random
    /// across chains, so it is fitted per run and only reported.
    pub fitted_constant: f64,
    pub fraction_under: f64,
}

/// |y_k^{(n)} - y_k^{(N)}| against the envelope (1 + k^2) n^{-1/3 + eps},
/// for two snapshots of the same coupled chain.
pub fn coupling_error_profile(
    spec_n: &Spectrum,
    spec_big: &Spectrum,
    k_max: i64,
    eps: f64,
) -> Result<CouplingProfile> {
    match (spec_n.provenance(), spec_big.provenance()) {
        (Some(a), Some(b)) if a == b => {}
        _ => return Err(Error::NotCoupled),
    }
    let n = spec_n.n() as f64;
    let pts_n = spec_n.rescaled_points(k_max.max(1));
    let pts_big = spec_big.rescaled_points(k_max.max(1));
    let scale = n.powf(-1.0 / 3.0 + eps);
    let mut rows = Vec::new();
    for k in -k_max..=k_max {
        let error = (pts_n.y(k)? - pts_big.y(k)?).abs();
        let envelope = (1.0 + (k * k) as f64) * scale;
        rows.push(CouplingRow { k, error, envelope });
    }
    let mut ratios: Vec<f64> = rows.iter().map(|r| r.error / r.envelope).collect();
    ratios.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let median = ratios[ratios.len() / 2];
    let fitted = 2.0 * median;
    let under = rows
        .iter()
        .filter(|r| r.error <= fitted * r.envelope)
        .count() as f64
        / rows.len() as f64;
    Ok(CouplingProfile { rows, fitted_constant: fitted, fraction_under: under })
}

fn sinc_kernel(d: f64) -> f64 {
    if d == 0.0 {
        1.0
    } else {
        (PI * d).sin() / (PI * d)
    }
}

/// r-point sine-kernel correlation determinant det[ S(x_j - x_k) ].
pub fn sine_kernel_determinant(x: &[f64]) -> f64 {
    let r = x.len();
    assert!(r >= 1);
    let mut m: Vec<Vec<f64>> = (0..r)
        .map(|j| (0..r).map(|k| sinc_kernel(x[j] - x[k])).collect())
        .collect();
    // LU with partial pivoting
    let mut det = 1.0f64;
    for col in 0..r {
        let (pivot_row, _) = (col..r)
            .map(|row| (row, m[row][col].abs()))
            .max_by(|a, b| a.1.partial_cmp(&b.1).unwrap())
            .unwrap();
        if pivot_row != col {
            m.swap(pivot_row, col);
            det = -det;
        }
        let pivot = m[col][col];
        if pivot == 0.0 {
            return 0.0;
        }
        det *= pivot;
        for row in col + 1..r {
            let factor = m[row][col] / pivot;
            for c in col..r {
                let v = m[col][c];
                m[row][c] -= factor * v;
            }
        }
    }
    det
}

/// Two-point sine-kernel correlation rho_2(0, s) = 1 - (sin(pi s)/(pi s))^2.
pub fn rho2(s: f64) -> f64 {
    1.0 - sinc_kernel(s).powi(2)
}

#[derive(Debug, Clone)]
pub struct PairCorrelation {
    pub bin_centers: Vec<f64>,
    pub density: Vec<f64>,
    pub stderr: Vec<f64>,
    /// Bin-averaged rho_2 prediction (Simpson over each bin).
    pub theory: Vec<f64>,
}

/// Normalized histogram of pairwise gaps within a centered window, compared
/// bin-by-bin to the sine-kernel two-point function.
pub fn empirical_pair_correlation(
    replicas: &[RescaledPointSet],
    window: f64,
    bins: usize,
    s_max: f64,
) -> Result<PairCorrelation> {
    if replicas.len() < 200 {
        return Err(Error::InsufficientReplicas { needed: 200, got: replicas.len() });
    }
    if let Some(n) = replicas[0].source_n() {
        assert!(window <= n as f64 / 8.0, "window exceeds n/8 edge-effect guard");
    }
    let ds = s_max / bins as f64;
    let half = window / 2.0;
    let m = replicas.len() as f64;
    let mut per_replica: Vec<Vec<f64>> = Vec::with_capacity(replicas.len());
    for pts in replicas {
        let (min_k, max_k) = pts.index_range();
        let pad = pts.source_n().unwrap_or(0) as i64 + 2;
        let lo_k = ((-half).floor() as i64 - pad).max(min_k);
        let hi_k = (half.ceil() as i64 + pad).min(max_k);
        let first = lower_bound(pts, -half, lo_k, hi_k)?;
        let mut ys = Vec::new();
        let mut k = first;
        while k <= hi_k {
            let y = pts.y(k)?;
            if y > half {
                break;
            }
            ys.push(y);
            k += 1;
        }
        let mut hist = vec![0usize; bins];
        for i in 0..ys.len() {
            for j in i + 1..ys.len() {
                let s = ys[j] - ys[i];
                if s < s_max {
                    hist[(s / ds) as usize] += 1;
                }
            }
        }
        let dens: Vec<f64> = hist
            .iter()
            .enumerate()
            .map(|(b, &c)| {
                let s_c = (b as f64 + 0.5) * ds;
                c as f64 / ((window - s_c) * ds)
            })
            .collect();
        per_replica.push(dens);
    }
    let mut density = vec![0.0; bins];
    let mut stderr = vec![0.0; bins];
    for b in 0..bins {
        let mu = per_replica.iter().map(|d| d[b]).sum::<f64>() / m;
        let var = per_replica.iter().map(|d| (d[b] - mu).powi(2)).sum::<f64>() / (m - 1.0);
        density[b] = mu;
        stderr[b] = (var / m).sqrt();
    }
    let theory: Vec<f64> = (0..bins)
        .map(|b| {
            let a = b as f64 * ds;
            let c = a + ds;
            let mid = a + ds / 2.0;
            (rho2(a) + 4.0 * rho2(mid) + rho2(c)) / 6.0
        })
        .collect();
    let bin_centers = (0..bins).map(|b| (b as f64 + 0.5) * ds).collect();
    Ok(PairCorrelation { bin_centers, density, stderr, theory })
}

/// Chi-squared statistic and p-value of the histogram against theory.
pub fn pair_correlation_chi2(pc: &PairCorrelation) -> (f64, usize, f64) {
    let chi2: f64 = pc
        .density
        .iter()
        .zip(&pc.theory)
        .zip(&pc.stderr)
        .map(|((d, t), se)| ((d - t) / se).powi(2))
        .sum();
    let df = pc.density.len();
    let dist = statrs::distribution::ChiSquared::new(df as f64).unwrap();
    let p = 1.0 - statrs::distribution::ContinuousCDF::cdf(&dist, chi2);
    (chi2, df, p)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PowerSumMethod {
    Direct,
    ClosedForm,
}

/// A power sum sum_k y_k^{-exponent}.
#[derive(Debug, Clone)]
pub struct PowerSumResult {
    pub exponent: usize,
    pub value: f64,
    pub method: PowerSumMethod,
    pub truncation: Option<i64>,
    pub tail_bound: Option<f64>,
}

/// Truncated power sum sum_{|k| <= K} y_k^{-alpha}. For alpha = 1 the sum is
/// only conditionally convergent and the symmetric (k, -k) pairing is
/// mandatory; for alpha >= 2 a tail bound ~ 2/((alpha-1) K^{alpha-1}) is
/// recorded.
pub fn power_sum_direct(points: &RescaledPointSet, alpha: usize, k_max: i64) -> Result<PowerSumResult> {
    assert!(alpha >= 1);
    assert!(k_max >= 1);
    let (lo, hi) = points.index_range();
    if k_max > hi || -k_max < lo {
        return Err(Error::WindowTooSmall { min_k: lo, max_k: hi });
    }
    let pow = -(alpha as i32);
    let mut sum = points.y(0)?.powi(pow);
    for k in 1..=k_max {
        sum += points.y(k)?.powi(pow) + points.y(-k)?.powi(pow);
    }
    // Integral-test estimate anchored at the actual boundary points: beyond
    // the window the points have unit mean spacing, so the tail is bounded by
    // the integral of t^{-alpha} starting just inside |y(+-K)|.
    let tail = if alpha >= 2 {
        let a1 = alpha as f64 - 1.0;
        let edge = |y: f64| (y.abs() - 2.0).max(1.0).powf(-a1) / a1;
        Some(edge(points.y(k_max)?) + edge(points.y(-k_max)?))
    } else {
        None
    };
    Ok(PowerSumResult {
        exponent: alpha,
        value: sum,
        method: PowerSumMethod::Direct,
        truncation: Some(k_max),
        tail_bound: tail,
    })
}

/// Exact finite-n power sum of exponent alpha + 1 over the periodized points:
/// sum_{k in Z} (y_k^{(n)})^{-(alpha+1)}
///   = -(1/(2 alpha!)) (-2 i pi / n)^{alpha+1} sum_k R_alpha(e^{i theta_k}).
pub fn power_sum_closed_form(spec: &Spectrum, alpha: usize) -> Result<PowerSumResult> {
    assert!(alpha >= 1);
    // |e^{i theta} - 1| = 2 sin(theta/2) ~ theta near the pole at X = 1.
    if spec.gap_to_one() < 1e-10 {
        return Err(Error::PoleProximity { dist: spec.gap_to_one() });
    }
    let r = r_alpha(alpha)?;
    let mut acc = Complex64::new(0.0, 0.0);
    for lambda in spec.eigenvalues() {
        acc += r.eval(lambda);
    }
    let n = spec.n() as f64;
    let factorial: f64 = (1..=alpha).map(|i| i as f64).product();
    let prefactor = Complex64::new(0.0, -2.0 * PI / n).powu(alpha as u32 + 1);
    let value = -prefactor * acc / (2.0 * factorial);
    if value.im.abs() > 1e-10 * (1.0 + value.re.abs()) {
        return Err(Error::FormulaInconsistency { residual: value.im.abs() });
    }
    Ok(PowerSumResult {
        exponent: alpha + 1,
        value: value.re,
        method: PowerSumMethod::ClosedForm,
        truncation: None,
        tail_bound: None,
    })
}
