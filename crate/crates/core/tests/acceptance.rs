//! Acceptance suite: one test per criterion, each printing a single
//! machine-greppable PASS/FAIL line before asserting.
//!
//! Heavy ensembles are shared between criteria through lazy statics; with
//! the default single test binary they are built once.

use std::collections::BTreeMap;

use num_complex::Complex64;
use once_cell::sync::Lazy;
use rayon::prelude::*;

use xi_limit::argcount::{self, CHERNOFF_C};
use xi_limit::ensemble::{sample_x_n, thread_pool, GridSpec};
use xi_limit::isometry::VirtualIsometryChain;
use xi_limit::ratfn::r_alpha;
use xi_limit::rng::{derive_stream, TAG_STATS};
use xi_limit::spectrum::{eigenangles_with_provenance, Provenance, Spectrum};
use xi_limit::stats;
use xi_limit::xi::{functional_equation_residual, growth_profile, xi_direct, xi_product};

const TAU: f64 = std::f64::consts::TAU;
const PI: f64 = std::f64::consts::PI;

fn report(id: &str, pass: bool, detail: &str) -> bool {
    println!("[{id}] {} - {detail}", if pass { "PASS" } else { "FAIL" });
    pass
}

fn grow_replicas(seed: u64, replicas: u32, dims: &[usize]) -> Vec<BTreeMap<usize, Spectrum>> {
    let pool = thread_pool();
    pool.install(|| {
        (0..replicas)
            .into_par_iter()
            .map(|r| {
                let mut chain = VirtualIsometryChain::new(seed, r);
                let mut out = BTreeMap::new();
                chain
                    .grow_through(dims, |c| {
                        let spec = eigenangles_with_provenance(
                            c.current(),
                            Some(Provenance { master_seed: seed, replica_id: r }),
                        )?;
                        out.insert(c.current_dim(), spec);
                        Ok(())
                    })
                    .unwrap();
                out
            })
            .collect()
    })
}

/// 50 coupled chains snapshotted along powers of two up to 512.
static COUPLED: Lazy<Vec<BTreeMap<usize, Spectrum>>> =
    Lazy::new(|| grow_replicas(11, 50, &[32, 64, 128, 256, 512]));

/// 400 independent replicas at n = 512 for the count statistics.
static BIG: Lazy<Vec<Spectrum>> = Lazy::new(|| {
    grow_replicas(12, 400, &[512])
        .into_iter()
        .map(|mut m| m.remove(&512).unwrap())
        .collect()
});

/// 2e4 samples of X_n at n = 16 for the MGF and Chernoff checks.
static X_SAMPLES: Lazy<Vec<f64>> = Lazy::new(|| sample_x_n(13, 20_000, 16).unwrap());

fn grid_points() -> Vec<Complex64> {
    GridSpec::default().points()
}

fn fmt_vec(v: &[f64]) -> String {
    let parts: Vec<String> = v.iter().map(|x| format!("{x:.3e}")).collect();
    format!("[{}]", parts.join(", "))
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    v[v.len() / 2]
}

#[test]
fn criterion_01_exact_counting() {
    let replicas = grow_replicas(14, 20, &[16, 64, 256]);
    let mut checked = 0usize;
    let mut mismatches = 0usize;
    for (r, snaps) in replicas.iter().enumerate() {
        let mut stream = derive_stream(14, r as u32, TAG_STATS);
        for spec in snaps.values() {
            for _ in 0..1000 {
                let a = stream.uniform() * TAU;
                let b = stream.uniform() * TAU;
                let (a, b) = if a <= b { (a, b) } else { (b, a) };
                // count_zeros_arc itself enforces the 1e-6 pre-round residual
                match argcount::count_zeros_arc(spec, a, b) {
                    Ok(formula) => {
                        let direct =
                            spec.theta().iter().filter(|&&t| t > a && t <= b).count() as i64;
                        checked += 1;
                        if formula != direct {
                            mismatches += 1;
                        }
                    }
                    Err(_) => mismatches += 1,
                }
            }
        }
    }
    let pass = mismatches == 0 && checked == 60_000;
    assert!(report(
        "criterion 01 counting",
        pass,
        &format!("{checked} arcs checked, {mismatches} mismatches")
    ));
}

#[test]
fn criterion_02_index_identity() {
    let replicas = grow_replicas(15, 20, &[32]);
    let mut worst = 0.0f64;
    for snaps in &replicas {
        let spec = &snaps[&32];
        for k in -32i64..=64 {
            worst = worst.max(argcount::index_identity_residual(spec, k).unwrap());
        }
    }
    assert!(report(
        "criterion 02 index identity",
        worst <= 1e-8,
        &format!("worst residual {worst:.3e} over k in [-32, 64], 20 replicas")
    ));
}

#[test]
fn criterion_03_functional_equation() {
    let replicas = grow_replicas(16, 20, &[16, 64]);
    let mut pass = true;
    let mut detail = String::new();
    for &n in &[16usize, 64] {
        let mut worst = 0.0f64;
        for (r, snaps) in replicas.iter().enumerate() {
            let mut stream = derive_stream(16, r as u32, TAG_STATS);
            for _ in 0..100 {
                let z = Complex64::from_polar(1.0, stream.uniform() * TAU);
                worst = worst.max(functional_equation_residual(&snaps[&n], z));
            }
        }
        pass &= worst <= 1e-10 * n as f64;
        detail.push_str(&format!("n = {n}: worst {worst:.3e} (tol {:.1e}); ", 1e-10 * n as f64));
    }
    assert!(report("criterion 03 functional equation", pass, &detail));
}

#[test]
fn criterion_04_mgf_and_chernoff() {
    let samples = &*X_SAMPLES;
    let m = samples.len() as f64;
    let mut pass = true;
    let mut detail = String::new();
    for &lambda in &[0.5f64, 1.0, 2.0] {
        let vals: Vec<f64> = samples.iter().map(|&x| (lambda * x).exp()).collect();
        let mean = vals.iter().sum::<f64>() / m;
        let var = vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (m - 1.0);
        let se = (var / m).sqrt();
        let exact = argcount::mgf_exact(16, lambda);
        let z = (mean - exact) / se;
        pass &= z.abs() <= 3.0;
        detail.push_str(&format!("lambda {lambda}: z = {z:+.2}; "));
    }
    let log_n = 16f64.ln();
    let mut worst_excess = 0.0f64;
    for i in 1..=10 {
        let x = 0.5 * i as f64;
        let frac = samples.iter().filter(|&&s| s.abs() > x).count() as f64 / m;
        let bound = 2.0 * (-x * x / (CHERNOFF_C + log_n)).exp();
        worst_excess = worst_excess.max(frac - bound);
    }
    pass &= worst_excess <= 0.0;
    detail.push_str(&format!("Chernoff excess {worst_excess:.3e}"));
    assert!(report("criterion 04 mgf", pass, &detail));
}

#[test]
fn criterion_05_product_representation() {
    let spec = &COUPLED[0][&256];
    let pts = spec.rescaled_points(300);
    let zs = grid_points();
    let sup = |a: usize| -> f64 {
        zs.iter()
            .map(|&z| {
                let d = xi_direct(spec, z).unwrap().value;
                let p = xi_product(&pts, z, a).unwrap().value;
                (d - p).norm()
            })
            .fold(0.0, f64::max)
    };
    let sup_full = sup(256);
    let clause1 = sup_full <= 1e-6;
    report(
        "criterion 05a product sup",
        clause1,
        &format!("sup |direct - product(A=n)| = {sup_full:.3e} at n = 256 (tol 1e-6)"),
    );
    let a_list = [8usize, 16, 32, 64, 128];
    let sups: Vec<f64> = a_list.iter().map(|&a| sup(a)).collect();
    let decreasing = sups.windows(2).all(|w| w[1] < w[0]);
    // constants of the fitted log A / A rate should stay within a small band
    let consts: Vec<f64> = a_list
        .iter()
        .zip(&sups)
        .map(|(&a, &s)| s * a as f64 / (2.0 + a as f64).ln())
        .collect();
    let spread = consts.iter().cloned().fold(0.0, f64::max)
        / consts.iter().cloned().fold(f64::INFINITY, f64::min);
    let clause2 = decreasing && spread <= 5.0;
    report(
        "criterion 05b truncation rate",
        clause2,
        &format!("sups {}, rate-constant spread {spread:.2}", fmt_vec(&sups)),
    );
    assert!(clause2);
    assert!(clause1, "sup {sup_full:.3e} exceeds 1e-6; see decisions ledger");
}

#[test]
fn criterion_06_xi_convergence() {
    let zs = grid_points();
    let dims = [32usize, 64, 128, 256];
    let mut medians = Vec::new();
    for &n in &dims {
        let sups: Vec<f64> = COUPLED
            .iter()
            .map(|snaps| {
                zs.iter()
                    .map(|&z| {
                        let v = xi_direct(&snaps[&n], z).unwrap().value;
                        let r = xi_direct(&snaps[&512], z).unwrap().value;
                        (v - r).norm()
                    })
                    .fold(0.0, f64::max)
            })
            .collect();
        medians.push(median(sups));
    }
    let pass = medians.windows(2).all(|w| w[1] < w[0]);
    assert!(report(
        "criterion 06 xi convergence",
        pass,
        &format!("median sup gaps to n = 512 over {dims:?}: {}", fmt_vec(&medians))
    ));
}

#[test]
fn criterion_07_count_variance() {
    let pts: Vec<_> = BIG.iter().map(|s| s.rescaled_points(128)).collect();
    let mut a_list = Vec::new();
    let mut a = 2.0f64;
    while a <= 64.0 {
        a_list.push(a);
        a *= 2.0f64.sqrt();
    }
    let profile = stats::variance_profile(&pts, &a_list).unwrap();
    let target = 1.0 / (PI * PI);
    let rel = (profile.slope - target).abs() / target;
    assert!(report(
        "criterion 07 count variance",
        rel <= 0.25,
        &format!(
            "slope {:.5} +- {:.5} vs 1/pi^2 = {target:.5} ({:.1}% off)",
            profile.slope,
            profile.slope_stderr,
            100.0 * rel
        )
    ));
}

#[test]
fn criterion_08_pair_correlation() {
    let pts: Vec<_> = BIG.iter().map(|s| s.rescaled_points(128)).collect();
    let pc = stats::empirical_pair_correlation(&pts, 64.0, 40, 4.0).unwrap();
    let (chi2, df, p) = stats::pair_correlation_chi2(&pc);
    assert!(report(
        "criterion 08 pair correlation",
        p > 0.001,
        &format!("chi2 = {chi2:.1}, df = {df}, p = {p:.4}")
    ));
}

#[test]
fn criterion_09_deviation_and_coupling() {
    // deviation statistic stability under doubling n
    let pct99 = |n: usize| -> f64 {
        let mut devs: Vec<f64> = COUPLED
            .iter()
            .map(|snaps| {
                stats::deviation_profile(&snaps[&n].rescaled_points(66), 64).unwrap()
            })
            .collect();
        devs.sort_by(|a, b| a.partial_cmp(b).unwrap());
        devs[(devs.len() * 99 / 100).min(devs.len() - 1)]
    };
    let (d256, d512) = (pct99(256), pct99(512));
    let ratio = d512 / d256;
    let clause1 = d256.is_finite() && d512.is_finite() && ratio <= 2.0 && ratio >= 0.5;
    report(
        "criterion 09a deviation stability",
        clause1,
        &format!("99th pct: {d256:.3} at n = 256, {d512:.3} at n = 512 (ratio {ratio:.2})"),
    );
    // coupling rate: median |y_1^(n) - y_1^(512)| should decay at least n^{-1/4}
    let dims = [32usize, 64, 128, 256];
    let med: Vec<f64> = dims
        .iter()
        .map(|&n| {
            median(
                COUPLED
                    .iter()
                    .map(|snaps| {
                        let yn = snaps[&n].rescaled_points(2).y(1).unwrap();
                        let yb = snaps[&512].rescaled_points(2).y(1).unwrap();
                        (yn - yb).abs()
                    })
                    .collect(),
            )
        })
        .collect();
    let xs: Vec<f64> = dims.iter().map(|&n| (n as f64).ln()).collect();
    let ys: Vec<f64> = med.iter().map(|m| m.ln()).collect();
    let (slope, _) = stats::ols_slope(&xs, &ys);
    let clause2 = slope <= -0.25;
    report(
        "criterion 09b coupling rate",
        clause2,
        &format!("median |y_1 gap| {}, log-log slope {slope:.3}", fmt_vec(&med)),
    );
    assert!(clause1 && clause2);
}

#[test]
fn criterion_10_power_sums() {
    // lattice identity at eigenangles of a Haar spectrum, brute force |k| <= 1e6
    let spec32 = &COUPLED[0][&32];
    let mut worst_lattice = 0.0f64;
    for alpha in 0..=3usize {
        for &x in &spec32.theta()[..3] {
            let mut sum = x.powi(-(alpha as i32 + 1));
            for k in 1..=1_000_000i64 {
                let p = x + TAU * k as f64;
                let m = x - TAU * k as f64;
                sum += p.powi(-(alpha as i32 + 1)) + m.powi(-(alpha as i32 + 1));
            }
            let i_pow = Complex64::new(0.0, 1.0).powu(alpha as u32 + 1);
            let sign = if alpha % 2 == 0 { 1.0 } else { -1.0 };
            let factorial: f64 = (1..=alpha).map(|i| i as f64).product::<f64>().max(1.0);
            let rhs = i_pow / 2.0 * sign / factorial
                * r_alpha(alpha).unwrap().eval(Complex64::from_polar(1.0, x));
            worst_lattice = worst_lattice.max((sum - rhs.re).abs());
        }
    }
    let clause1 = worst_lattice <= 1e-6;
    report(
        "criterion 10a lattice identity",
        clause1,
        &format!("worst |brute - R_alpha| = {worst_lattice:.3e} for alpha <= 3"),
    );
    let mut clause2 = true;
    let mut detail = String::new();
    for snaps in COUPLED.iter().take(3) {
        let spec = &snaps[&64];
        let pts = spec.rescaled_points(100_000);
        for alpha in [1usize, 2, 3] {
            let cf = stats::power_sum_closed_form(spec, alpha).unwrap();
            let direct = stats::power_sum_direct(&pts, alpha + 1, 100_000).unwrap();
            let gap = (cf.value - direct.value).abs();
            let tol = direct.tail_bound.unwrap() + 1e-12 * cf.value.abs();
            if gap > tol {
                clause2 = false;
                detail.push_str(&format!("alpha {alpha}: gap {gap:.3e} > {tol:.3e}; "));
            }
        }
    }
    if clause2 {
        detail.push_str("closed form within tail bounds for alpha in {1,2,3}");
    }
    report("criterion 10b closed form", clause2, &detail);
    assert!(clause1 && clause2);
}

#[test]
fn criterion_11_growth_bounds() {
    let mut worst_lower = f64::INFINITY;
    let mut worst_upper = 0.0f64;
    let xs: Vec<f64> = (2..=16).map(|i| i as f64 * 2.5).collect(); // [5, 40]
    for snaps in COUPLED.iter().take(5) {
        let pts = snaps[&512].rescaled_points(4096);
        let profile = growth_profile(&pts, &xs, 4096).unwrap();
        worst_lower = worst_lower.min(profile.lower_constant);
        worst_upper = worst_upper.max(profile.upper_constant);
    }
    let clause1 = worst_lower > 0.0;
    report(
        "criterion 11a imaginary-axis growth",
        clause1,
        &format!("fitted lower c = {worst_lower:.3}, upper C = {worst_upper:.3} on x in [5, 40]"),
    );
    // real axis: log|xi(x)| <= C |x| log(2+|x|) with a finite fitted C
    let mut c_real = 0.0f64;
    for snaps in COUPLED.iter().take(5) {
        let pts = snaps[&512].rescaled_points(4096);
        for i in 1..=26 {
            let x = 1.5 * i as f64; // up to 39, off the integer lattice
            let v = xi_product(&pts, Complex64::new(x, 0.0), 2048).unwrap().value;
            let l = v.norm().ln();
            if l > 0.0 {
                c_real = c_real.max(l / (x * (2.0 + x).ln()));
            }
        }
    }
    let clause2 = c_real.is_finite() && c_real > 0.0;
    report(
        "criterion 11b real-axis growth",
        clause2,
        &format!("fitted real-axis C = {c_real:.3} on |z| <= 40"),
    );
    assert!(clause1 && clause2);
}
