//! Simulation of the coupled-CUE characteristic polynomial ratio and its limit.
//!
//! The library grows sequences of Haar unitary matrices coupled through
//! rank-one reflections ("virtual isometries"), extracts periodized
//! eigenangle spectra, evaluates the rescaled characteristic-polynomial
//! ratio both directly and through its regrouped infinite product, and
//! estimates sine-kernel statistics of the rescaled points.

pub mod argcount;
pub mod ensemble;
pub mod isometry;
pub mod ratfn;
pub mod rng;
pub mod special;
pub mod spectrum;
pub mod stats;
pub mod xi;

pub use argcount::{arg_supremum, chernoff_bound, count_zeros_arc, im_log_z, index_identity_residual, mgf_exact};
pub use isometry::{Reflection, VirtualIsometryChain};
pub use rng::{derive_stream, sample_unit_sphere, RngStream, UnitVector};
pub use spectrum::{eigenangles, RescaledPointSet, Spectrum};
pub use xi::{functional_equation_residual, xi_direct, xi_infinity_approx, xi_product, XiEvaluation, XiMethod};

use thiserror::Error;

/// Error type shared by all modules.
#[derive(Debug, Error)]
pub enum Error {
    #[error("target vector is numerically equal to e_n (|kappa| = {kappa:.3e})")]
    DegenerateTarget { kappa: f64 },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("unitarity drift {residual:.3e} exceeds tolerance at dim {dim}")]
    NumericalDriftFailure { dim: usize, residual: f64 },
    #[error("eigenvalue modulus deviates from 1 by {deviation:.3e}")]
    SolverFailure { deviation: f64 },
    #[error("eigenvalue within {gap:.3e} of 1; downstream ratio unstable")]
    NearUnityEigenvalue { gap: f64 },
    #[error("degenerate spectrum: eigenangles {a:.17} and {b:.17} coincide below tie tolerance")]
    NearDegenerate { a: f64, b: f64 },
    #[error("evaluation point lies on a branch cut (distance {dist:.3e} to an eigenangle)")]
    OnBranchCut { dist: f64 },
    #[error("counting formula pre-round residual {residual:.3e} >= 1e-6; branch bug")]
    FormulaInconsistency { residual: f64 },
    #[error("point at index {k} is zero; invalid rescaled point set")]
    InvalidPoints { k: i64 },
    #[error("materialized window [{min_k}, {max_k}] does not cover the request")]
    WindowTooSmall { min_k: i64, max_k: i64 },
    #[error("{got} replicas provided, at least {needed} required")]
    InsufficientReplicas { needed: usize, got: usize },
    #[error("spectra come from different replicas; coupling estimates need one chain")]
    NotCoupled,
    #[error("eigenangle within {dist:.3e} of 0; rational-function pole too close")]
    PoleProximity { dist: f64 },
    #[error("derivative order {alpha} outside supported range 0..={max}")]
    AlphaOutOfRange { alpha: usize, max: usize },
    #[error("invalid manifest: {0}")]
    InvalidManifest(String),
    #[error("incomplete run: {0}")]
    IncompleteRun(String),
    #[error("manifest hash mismatch: run was produced by a different manifest")]
    ManifestHashMismatch,
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
