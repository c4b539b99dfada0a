//! Deterministic, splittable randomness and uniform sampling on complex spheres.
//!
//! Each `(master_seed, replica_id, purpose_tag)` triple is hashed into a
//! ChaCha key, so streams for distinct replicas or purposes never overlap
//! and a run is a pure function of its manifest.

use num_complex::Complex64;
use rand::RngCore;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rand_distr::{Distribution, StandardNormal};
use sha2::{Digest, Sha256};

use crate::{Error, Result};

/// Purpose tag for the sphere draws that drive chain growth.
pub const TAG_CHAIN: &str = "chain";
/// Purpose tag for auxiliary statistical draws (random arcs, grid jitter, ...).
pub const TAG_STATS: &str = "stats";

/// A deterministic random stream keyed by (master_seed, replica_id, purpose_tag).
#[derive(Debug, Clone)]
pub struct RngStream {
    pub master_seed: u64,
    pub replica_id: u32,
    pub purpose_tag: String,
    rng: ChaCha12Rng,
}

/// A unit vector in C^n (Euclidean norm 1 within 1e-12).
#[derive(Debug, Clone)]
pub struct UnitVector {
    pub entries: Vec<Complex64>,
}

impl UnitVector {
    pub fn dim(&self) -> usize {
        self.entries.len()
    }

    pub fn norm(&self) -> f64 {
        self.entries.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }
}

/// Derives an independent stream from the keyed hash of the triple.
pub fn derive_stream(master_seed: u64, replica_id: u32, purpose_tag: &str) -> RngStream {
    let mut hasher = Sha256::new();
    hasher.update(b"xi-limit.stream.v1");
    hasher.update(master_seed.to_le_bytes());
    hasher.update(replica_id.to_le_bytes());
    hasher.update((purpose_tag.len() as u64).to_le_bytes());
    hasher.update(purpose_tag.as_bytes());
    let key: [u8; 32] = hasher.finalize().into();
    RngStream {
        master_seed,
        replica_id,
        purpose_tag: purpose_tag.to_string(),
        rng: ChaCha12Rng::from_seed(key),
    }
}

impl RngStream {
    pub fn next_u64(&mut self) -> u64 {
        self.rng.next_u64()
    }

    /// Standard real normal draw.
    pub fn normal(&mut self) -> f64 {
        StandardNormal.sample(&mut self.rng)
    }

    /// Standard complex normal, variance 1: (g1 + i g2)/sqrt(2).
    pub fn complex_normal(&mut self) -> Complex64 {
        let g1: f64 = self.normal();
        let g2: f64 = self.normal();
        Complex64::new(g1, g2) / std::f64::consts::SQRT_2
    }

    /// Uniform in [0, 1).
    pub fn uniform(&mut self) -> f64 {
        (self.rng.next_u64() >> 11) as f64 / (1u64 << 53) as f64
    }
}

/// Uniform sample on the unit sphere of C^n via normalized complex Gaussians.
pub fn sample_unit_sphere(stream: &mut RngStream, n: usize) -> Result<UnitVector> {
    assert!(n >= 1, "sphere dimension must be >= 1");
    for _attempt in 0..2 {
        let entries: Vec<Complex64> = (0..n).map(|_| stream.complex_normal()).collect();
        let norm = entries.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if norm > 0.0 {
            return Ok(UnitVector {
                entries: entries.into_iter().map(|z| z / norm).collect(),
            });
        }
    }
    // Two zero-norm Gaussian draws in a row: not reachable in practice.
    Err(Error::DegenerateTarget { kappa: 0.0 })
}
