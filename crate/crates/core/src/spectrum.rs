//! Eigenangle extraction, periodized indexing, and rescaled points y_k.

use ndarray::Array2;
use num_complex::Complex64;
use std::f64::consts::TAU;

use crate::{Error, Result};

const MODULUS_TOL: f64 = 1e-6;
const TIE_TOL: f64 = 1e-12;
const GAP_TOL: f64 = 1e-12;

/// Identifies the chain a spectrum came from; coupled-only estimators
/// refuse spectra from different replicas.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Provenance {
    pub master_seed: u64,
    pub replica_id: u32,
}

/// Sorted eigenangles of one U_n, all in the open interval (0, 2pi).
#[derive(Debug, Clone)]
pub struct Spectrum {
    n: usize,
    theta: Vec<f64>,
    gap_to_one: f64,
    provenance: Option<Provenance>,
}

impl Spectrum {
    /// Validates and wraps a sorted angle table; used by fixtures and loaders.
    pub fn from_angles(theta: Vec<f64>, provenance: Option<Provenance>) -> Result<Spectrum> {
        assert!(!theta.is_empty());
        let mut gap = f64::INFINITY;
        for (i, &t) in theta.iter().enumerate() {
            assert!(t > 0.0 && t < TAU, "eigenangle {t} outside (0, 2pi)");
            gap = gap.min(t.min(TAU - t));
            if i > 0 && t - theta[i - 1] < TIE_TOL {
                return Err(Error::NearDegenerate { a: theta[i - 1], b: t });
            }
        }
        if gap < GAP_TOL {
            return Err(Error::NearUnityEigenvalue { gap });
        }
        Ok(Spectrum { n: theta.len(), theta, gap_to_one: gap, provenance })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn theta(&self) -> &[f64] {
        &self.theta
    }

    pub fn gap_to_one(&self) -> f64 {
        self.gap_to_one
    }

    pub fn provenance(&self) -> Option<Provenance> {
        self.provenance
    }

    pub fn theta_sum(&self) -> f64 {
        self.theta.iter().sum()
    }

    /// Eigenvalues on the circle, base period.
    pub fn eigenvalues(&self) -> impl Iterator<Item = Complex64> + '_ {
        self.theta.iter().map(|&t| Complex64::from_polar(1.0, t))
    }

    /// theta_k for any k in Z via theta_{k+n} = theta_k + 2pi.
    pub fn periodized_angle(&self, k: i64) -> f64 {
        let n = self.n as i64;
        let q = (k - 1).div_euclid(n);
        let idx = (k - 1).rem_euclid(n) as usize;
        self.theta[idx] + TAU * q as f64
    }

    /// Rescaled points y_k = n theta_k / (2pi), periodized over Z.
    pub fn rescaled_points(&self, window: i64) -> RescaledPointSet {
        assert!(window >= 1);
        let n = self.n;
        let base: Vec<f64> = self.theta.iter().map(|&t| n as f64 * t / TAU).collect();
        RescaledPointSet {
            repr: PointsRepr::Periodic { n, base },
            window,
            provenance: self.provenance,
            infinity_proxy: false,
        }
    }
}

/// Extracts the spectrum of a dense unitary.
///
/// Any dense eigensolver is permitted; eigenvalues are projected radially to
/// the circle and the projection error is checked, not silently absorbed.
pub fn eigenangles(u: &Array2<Complex64>) -> Result<Spectrum> {
    eigenangles_with_provenance(u, None)
}

pub fn eigenangles_with_provenance(
    u: &Array2<Complex64>,
    provenance: Option<Provenance>,
) -> Result<Spectrum> {
    let n = u.nrows();
    assert_eq!(n, u.ncols());
    let m = faer::Mat::<Complex64>::from_fn(n, n, |i, j| u[[i, j]]);
    let vals: Vec<Complex64> = m
        .eigenvalues()
        .map_err(|_| Error::SolverFailure { deviation: f64::NAN })?;
    let mut theta: Vec<f64> = Vec::with_capacity(n);
    for v in vals {
        let deviation = (v.norm() - 1.0).abs();
        if deviation > MODULUS_TOL {
            return Err(Error::SolverFailure { deviation });
        }
        let mut t = v.arg();
        if t <= 0.0 {
            t += TAU;
        }
        if t >= TAU {
            t -= TAU;
        }
        theta.push(t);
    }
    theta.sort_by(|a, b| a.partial_cmp(b).unwrap());
    Spectrum::from_angles(theta, provenance)
}

/// Rescaled eigenangle points with Z-periodized indexing and unit mean spacing.
#[derive(Debug, Clone)]
pub struct RescaledPointSet {
    repr: PointsRepr,
    window: i64,
    provenance: Option<Provenance>,
    infinity_proxy: bool,
}

#[derive(Debug, Clone)]
enum PointsRepr {
    /// Backed by a spectrum: y_k = base[(k-1) mod n] + n * floor((k-1)/n).
    /// The integer shift keeps y_{k+n} = y_k + n exact by construction.
    Periodic { n: usize, base: Vec<f64> },
    /// Materialized values for k in [k_min, k_min + len); test fixtures and
    /// loaded artifacts.
    Explicit { k_min: i64, values: Vec<f64> },
}

impl RescaledPointSet {
    /// Fixture/loader constructor from explicit values, increasing in k.
    pub fn from_explicit(k_min: i64, values: Vec<f64>) -> RescaledPointSet {
        assert!(!values.is_empty());
        for w in values.windows(2) {
            assert!(w[0] < w[1], "points must be strictly increasing in k");
        }
        let k_max = k_min + values.len() as i64 - 1;
        let window = (-k_min).max(k_max).max(1);
        RescaledPointSet {
            repr: PointsRepr::Explicit { k_min, values },
            window,
            provenance: None,
            infinity_proxy: false,
        }
    }

    /// Marks a terminal-snapshot point set as the limit proxy.
    pub fn into_infinity_proxy(mut self) -> RescaledPointSet {
        self.infinity_proxy = true;
        self
    }

    pub fn is_infinity_proxy(&self) -> bool {
        self.infinity_proxy
    }

    /// Source dimension, when backed by a finite spectrum.
    pub fn source_n(&self) -> Option<usize> {
        match &self.repr {
            PointsRepr::Periodic { n, .. } => Some(*n),
            PointsRepr::Explicit { .. } => None,
        }
    }

    pub fn provenance(&self) -> Option<Provenance> {
        self.provenance
    }

    /// Requested index window K (points materialized for |k| <= K at least).
    pub fn window(&self) -> i64 {
        self.window
    }

    /// Smallest and largest addressable index.
    pub fn index_range(&self) -> (i64, i64) {
        match &self.repr {
            PointsRepr::Periodic { .. } => (i64::MIN / 4, i64::MAX / 4),
            PointsRepr::Explicit { k_min, values } => (*k_min, k_min + values.len() as i64 - 1),
        }
    }

    /// y_k for k in Z.
    pub fn y(&self, k: i64) -> Result<f64> {
        match &self.repr {
            PointsRepr::Periodic { n, base } => {
                let n_i = *n as i64;
                let q = (k - 1).div_euclid(n_i);
                let idx = (k - 1).rem_euclid(n_i) as usize;
                Ok(base[idx] + (q * n_i) as f64)
            }
            PointsRepr::Explicit { k_min, values } => {
                let off = k - k_min;
                if off < 0 || off >= values.len() as i64 {
                    Err(Error::WindowTooSmall {
                        min_k: *k_min,
                        max_k: k_min + values.len() as i64 - 1,
                    })
                } else {
                    Ok(values[off as usize])
                }
            }
        }
    }

    /// Periodized decomposition (base index, period offset), when periodic.
    /// y_{k+n} decomposes as (idx, q+1), so the shift is an exact integer.
    pub fn decompose(&self, k: i64) -> Option<(usize, i64)> {
        match &self.repr {
            PointsRepr::Periodic { n, .. } => {
                let n_i = *n as i64;
                Some(((k - 1).rem_euclid(n_i) as usize, (k - 1).div_euclid(n_i)))
            }
            PointsRepr::Explicit { .. } => None,
        }
    }
}
