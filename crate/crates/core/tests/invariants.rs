//! Cross-module invariants too heavy for unit tests: distributional checks
//! on the chain and numerical health at larger dimensions.

use num_complex::Complex64;
use rayon::prelude::*;

use xi_limit::ensemble::thread_pool;
use xi_limit::isometry::VirtualIsometryChain;
use xi_limit::spectrum::eigenangles;

const PI: f64 = std::f64::consts::PI;

/// det U_n is uniform on the circle under Haar measure; two-sided KS test of
/// the chain's tracked determinant phase at n = 8 over 2000 replicas.
#[test]
fn det_phase_is_uniform_on_the_circle() {
    let m = 2000u32;
    let pool = thread_pool();
    let mut phases: Vec<f64> = pool.install(|| {
        (0..m)
            .into_par_iter()
            .map(|r| {
                let mut chain = VirtualIsometryChain::new(33, r);
                chain.grow_to(8).unwrap();
                chain.det_phase()
            })
            .collect()
    });
    phases.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mf = m as f64;
    let mut ks = 0.0f64;
    for (i, &p) in phases.iter().enumerate() {
        let u = (p + PI) / (2.0 * PI);
        ks = ks.max((u - i as f64 / mf).abs());
        ks = ks.max(((i + 1) as f64 / mf - u).abs());
    }
    // alpha = 0.001 critical value c = 1.95
    let threshold = 1.95 / mf.sqrt();
    assert!(ks <= threshold, "KS = {ks:.4} > {threshold:.4}");
}

/// The incrementally tracked determinant matches the eigenvalue product.
#[test]
fn tracked_determinant_matches_spectrum() {
    for r in 0..5 {
        let mut chain = VirtualIsometryChain::new(34, r);
        chain.grow_to(64).unwrap();
        let spec = eigenangles(chain.current()).unwrap();
        let prod = spec
            .eigenvalues()
            .fold(Complex64::new(1.0, 0.0), |acc, l| acc * l);
        assert!(
            (prod - chain.det()).norm() <= 1e-10,
            "replica {r}: |eig product - tracked det| = {:.3e}",
            (prod - chain.det()).norm()
        );
    }
}

/// Unitarity does not drift through 512 rank-one updates.
#[test]
fn no_drift_at_512() {
    for r in 0..3 {
        let mut chain = VirtualIsometryChain::new(35, r);
        chain.grow_to(512).unwrap();
        let res = chain.unitarity_residual();
        assert!(res <= 1e-11, "replica {r}: residual {res:.3e}");
        let spec = eigenangles(chain.current()).unwrap();
        // rescaled points have exactly unit mean spacing across one period
        let pts = spec.rescaled_points(2);
        let span = pts.y(513).unwrap() - pts.y(1).unwrap();
        assert!((span / 512.0 - 1.0).abs() <= 1e-12);
    }
}

/// Coupling: growing one chain to 64 and another to 128 gives bit-identical
/// 64-dimensional prefixes regardless of how far either was grown.
#[test]
fn coupled_prefixes_are_bit_identical() {
    let mut a = VirtualIsometryChain::new(36, 0);
    a.grow_to(64).unwrap();
    let frozen = a.current().clone();
    let mut b = VirtualIsometryChain::new(36, 0);
    b.grow_to(128).unwrap();
    // the 128-dim chain passed through the same 64-dim state
    let mut c = VirtualIsometryChain::new(36, 0);
    c.grow_through(&[64, 128], |chain| {
        if chain.current_dim() == 64 {
            assert_eq!(chain.current(), &frozen);
        }
        Ok(())
    })
    .unwrap();
    assert_eq!(b.current_dim(), c.current_dim());
    assert_eq!(b.current(), c.current());
}
