//! The coupled chain U_n = R_n (U_{n-1} ⊕ 1) of exactly-Haar unitaries.
//!
//! Each growth step samples a uniform sphere point x_n and left-multiplies
//! by the unique unitary R_n fixing R_n e_n = x_n with R_n - I of rank one.
//! Reflections are kept in factored form (w, kappa), so a step costs O(n^2)
//! and the dense R is only materialized for tests.

use ndarray::Array2;
use num_complex::Complex64;

use crate::rng::{derive_stream, sample_unit_sphere, RngStream, UnitVector, TAG_CHAIN};
use crate::{Error, Result};

const KAPPA_TOL: f64 = 1e-12;
const DRIFT_TOL: f64 = 1e-8;

/// Rank-one-deviation unitary mapping e_n to a target unit vector:
/// R = I - w w† / kappa with w = x - e_n, kappa = 1 - conj(x_n).
#[derive(Debug, Clone)]
pub struct Reflection {
    w: Vec<Complex64>,
    kappa: Complex64,
}

impl Reflection {
    /// Builds the unique reflection with R e_n = x.
    pub fn from_target(x: &UnitVector) -> Result<Reflection> {
        let n = x.dim();
        let last = x.entries[n - 1];
        let kappa = Complex64::new(1.0, 0.0) - last.conj();
        if kappa.norm() < KAPPA_TOL {
            return Err(Error::DegenerateTarget { kappa: kappa.norm() });
        }
        let mut w = x.entries.clone();
        w[n - 1] -= 1.0;
        Ok(Reflection { w, kappa })
    }

    pub fn dim(&self) -> usize {
        self.w.len()
    }

    /// det R = 1 - w†w / kappa (rank-one update of the identity).
    pub fn det(&self) -> Complex64 {
        let wtw: f64 = self.w.iter().map(|z| z.norm_sqr()).sum();
        Complex64::new(1.0, 0.0) - wtw / self.kappa
    }

    /// In-place left multiplication M <- R M = M - w (w† M) / kappa.
    pub fn apply_left(&self, m: &mut Array2<Complex64>) -> Result<()> {
        let n = self.dim();
        if m.nrows() != n {
            return Err(Error::DimensionMismatch { expected: n, got: m.nrows() });
        }
        let cols = m.ncols();
        // v = w† M
        let mut v = vec![Complex64::new(0.0, 0.0); cols];
        for i in 0..n {
            let wc = self.w[i].conj();
            let row = m.row(i);
            for j in 0..cols {
                v[j] += wc * row[j];
            }
        }
        for x in v.iter_mut() {
            *x /= self.kappa;
        }
        for i in 0..n {
            let wi = self.w[i];
            let mut row = m.row_mut(i);
            for j in 0..cols {
                row[j] -= wi * v[j];
            }
        }
        Ok(())
    }

    /// Dense R; O(n^2) memory, intended for verification.
    pub fn dense(&self) -> Array2<Complex64> {
        let n = self.dim();
        let mut r = Array2::eye(n);
        self.apply_left(&mut r).expect("identity has matching dims");
        r
    }
}

/// One replica of the coupled chain, grown by rank-one reflections.
#[derive(Debug, Clone)]
pub struct VirtualIsometryChain {
    master_seed: u64,
    replica_id: u32,
    stream: RngStream,
    u: Array2<Complex64>,
    det: Complex64,
}

impl VirtualIsometryChain {
    /// Fresh chain at dimension 0; the first growth step sets U_1 = x_1.
    pub fn new(master_seed: u64, replica_id: u32) -> Self {
        VirtualIsometryChain {
            master_seed,
            replica_id,
            stream: derive_stream(master_seed, replica_id, TAG_CHAIN),
            u: Array2::zeros((0, 0)),
            det: Complex64::new(1.0, 0.0),
        }
    }

    pub fn master_seed(&self) -> u64 {
        self.master_seed
    }

    pub fn replica_id(&self) -> u32 {
        self.replica_id
    }

    pub fn current_dim(&self) -> usize {
        self.u.nrows()
    }

    pub fn current(&self) -> &Array2<Complex64> {
        &self.u
    }

    /// Running determinant (product of det R_n), modulus 1 up to roundoff.
    pub fn det(&self) -> Complex64 {
        self.det
    }

    pub fn det_phase(&self) -> f64 {
        self.det.arg()
    }

    /// max |(U†U - I)_{ij}|.
    pub fn unitarity_residual(&self) -> f64 {
        let n = self.current_dim();
        let mut worst = 0.0f64;
        for i in 0..n {
            let ci = self.u.column(i);
            for j in i..n {
                let cj = self.u.column(j);
                let mut dot = Complex64::new(0.0, 0.0);
                for k in 0..n {
                    dot += ci[k].conj() * cj[k];
                }
                if i == j {
                    dot -= 1.0;
                }
                worst = worst.max(dot.norm());
            }
        }
        worst
    }

    /// One induction step: sample x_n, embed U ⊕ 1, left-apply R_n.
    pub fn step(&mut self) -> Result<()> {
        let n = self.current_dim() + 1;
        let mut x = sample_unit_sphere(&mut self.stream, n)?;
        let r = match Reflection::from_target(&x) {
            Ok(r) => r,
            Err(Error::DegenerateTarget { .. }) => {
                // x_n = e_n happens with probability zero; resample once.
                x = sample_unit_sphere(&mut self.stream, n)?;
                Reflection::from_target(&x)?
            }
            Err(e) => return Err(e),
        };
        let mut next = Array2::zeros((n, n));
        next.slice_mut(ndarray::s![..n - 1, ..n - 1]).assign(&self.u);
        next[[n - 1, n - 1]] = Complex64::new(1.0, 0.0);
        r.apply_left(&mut next)?;
        self.det *= r.det();
        self.u = next;
        Ok(())
    }

    /// Grows to `dim`, erroring if unitarity has drifted beyond tolerance.
    pub fn grow_to(&mut self, dim: usize) -> Result<()> {
        while self.current_dim() < dim {
            self.step()?;
        }
        let residual = self.unitarity_residual();
        if residual > DRIFT_TOL {
            return Err(Error::NumericalDriftFailure { dim: self.current_dim(), residual });
        }
        Ok(())
    }

    /// Grows through an increasing list of dimensions, visiting the dense
    /// snapshot at each one.
    pub fn grow_through<F>(&mut self, target_dims: &[usize], mut visit: F) -> Result<()>
    where
        F: FnMut(&VirtualIsometryChain) -> Result<()>,
    {
        let mut prev = self.current_dim();
        for &d in target_dims {
            assert!(d > prev, "target dims must be strictly increasing");
            prev = d;
            self.grow_to(d)?;
            visit(self)?;
        }
        Ok(())
    }
}
