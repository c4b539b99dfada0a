//! Experiment orchestration: manifests, replica scheduling, persistence, and
//! the verification-suite runner. Chains are persisted as (seed, replica,
//! dims) plus derived spectra; a run can always be reconstructed exactly.

use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::argcount::{self, x_n};
use crate::isometry::VirtualIsometryChain;
use crate::rng::{derive_stream, TAG_STATS};
use crate::spectrum::{eigenangles_with_provenance, Provenance, Spectrum};
use crate::stats;
use crate::xi::{functional_equation_residual, xi_direct, xi_product};
use crate::{Error, Result};

/// Dense matrices are kept below this dimension even without --keep-dense.
const DENSE_DEFAULT_MAX_DIM: usize = 64;

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct GridSpec {
    pub re_min: f64,
    pub re_max: f64,
    pub im_min: f64,
    pub im_max: f64,
    pub steps: usize,
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec { re_min: -2.0, re_max: 2.0, im_min: -2.0, im_max: 2.0, steps: 21 }
    }
}

impl GridSpec {
    pub fn points(&self) -> Vec<Complex64> {
        let step = |lo: f64, hi: f64, i: usize| {
            if self.steps == 1 {
                (lo + hi) / 2.0
            } else {
                lo + (hi - lo) * i as f64 / (self.steps - 1) as f64
            }
        };
        let mut pts = Vec::with_capacity(self.steps * self.steps);
        for i in 0..self.steps {
            for j in 0..self.steps {
                pts.push(Complex64::new(
                    step(self.re_min, self.re_max, i),
                    step(self.im_min, self.im_max, j),
                ));
            }
        }
        pts
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct ExperimentManifest {
    pub seed: u64,
    pub replicas: u32,
    /// Snapshot dimensions, strictly increasing.
    pub dims: Vec<usize>,
    /// Default product truncation for xi evaluations (None = one period, A = n).
    pub truncation_a: Option<usize>,
    /// Default index window for power sums and profiles.
    pub truncation_k: i64,
    pub grid: GridSpec,
    pub out_dir: PathBuf,
    pub keep_dense: bool,
}

impl ExperimentManifest {
    pub fn new(seed: u64, replicas: u32, dims: Vec<usize>, out_dir: PathBuf) -> Self {
        ExperimentManifest {
            seed,
            replicas,
            dims,
            truncation_a: None,
            truncation_k: 10_000,
            grid: GridSpec::default(),
            out_dir,
            keep_dense: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.replicas < 1 {
            return Err(Error::InvalidManifest("replica count must be >= 1".into()));
        }
        if self.dims.is_empty() {
            return Err(Error::InvalidManifest("dims list is empty".into()));
        }
        if !self.dims.windows(2).all(|w| w[0] < w[1]) {
            return Err(Error::InvalidManifest(format!(
                "dims must be strictly increasing, got {:?}",
                self.dims
            )));
        }
        if self.dims[0] < 1 {
            return Err(Error::InvalidManifest("dims must be >= 1".into()));
        }
        let g = &self.grid;
        if ![g.re_min, g.re_max, g.im_min, g.im_max].iter().all(|v| v.is_finite()) {
            return Err(Error::InvalidManifest("grid bounds must be finite".into()));
        }
        if g.steps < 1 {
            return Err(Error::InvalidManifest("grid steps must be >= 1".into()));
        }
        Ok(())
    }

    /// SHA-256 over the scientific content (everything but the output path),
    /// so a run moved on disk keeps its identity.
    pub fn hash(&self) -> String {
        let mut h = Sha256::new();
        h.update(b"xi-limit.manifest.v1");
        h.update(self.seed.to_le_bytes());
        h.update(self.replicas.to_le_bytes());
        for &d in &self.dims {
            h.update((d as u64).to_le_bytes());
        }
        h.update((self.truncation_a.unwrap_or(0) as u64).to_le_bytes());
        h.update(self.truncation_k.to_le_bytes());
        for v in [self.grid.re_min, self.grid.re_max, self.grid.im_min, self.grid.im_max] {
            h.update(v.to_le_bytes());
        }
        h.update((self.grid.steps as u64).to_le_bytes());
        h.update([self.keep_dense as u8]);
        hex(&h.finalize())
    }
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

/// Full-precision decimal form that round-trips through f64.
fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SnapshotRecord {
    pub replica_id: u32,
    pub seed: u64,
    pub n: usize,
    pub unitarity_residual: f64,
    pub det_phase: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ReplicaIndex {
    pub replica_id: u32,
    pub spectra_file: String,
    pub dims: Vec<usize>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EnsembleRun {
    pub manifest: ExperimentManifest,
    pub manifest_hash: String,
    pub replicas: Vec<ReplicaIndex>,
    pub snapshots: Vec<SnapshotRecord>,
    pub wall_clock_seconds: f64,
}

/// Worker count: XI_LIMIT_THREADS if set, otherwise rayon's default.
pub fn thread_pool() -> rayon::ThreadPool {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Ok(v) = std::env::var("XI_LIMIT_THREADS") {
        if let Ok(n) = v.trim().parse::<usize>() {
            builder = builder.num_threads(n.max(1));
        }
    }
    builder.build().expect("thread pool")
}

struct ReplicaArtifacts {
    index: ReplicaIndex,
    snapshots: Vec<SnapshotRecord>,
}

fn grow_one_replica(manifest: &ExperimentManifest, hash: &str, r: u32) -> Result<ReplicaArtifacts> {
    let mut chain = VirtualIsometryChain::new(manifest.seed, r);
    let file_name = format!("spectra_r{r:04}.csv");
    let mut csv = String::new();
    csv.push_str(&format!("# manifest_hash: {hash}\n"));
    csv.push_str("replica_id,n,k,theta_k,y_k\n");
    let mut snapshots = Vec::new();
    let keep_dense = manifest.keep_dense;
    let out_dir = manifest.out_dir.clone();
    chain.grow_through(&manifest.dims, |c| {
        let n = c.current_dim();
        let spec = eigenangles_with_provenance(
            c.current(),
            Some(Provenance { master_seed: manifest.seed, replica_id: r }),
        )?;
        let scale = n as f64 / std::f64::consts::TAU;
        for (i, &theta) in spec.theta().iter().enumerate() {
            let k = i + 1;
            csv.push_str(&format!(
                "{r},{n},{k},{},{}\n",
                fmt_f64(theta),
                fmt_f64(theta * scale)
            ));
        }
        snapshots.push(SnapshotRecord {
            replica_id: r,
            seed: manifest.seed,
            n,
            unitarity_residual: c.unitarity_residual(),
            det_phase: c.det_phase(),
        });
        if keep_dense || n <= DENSE_DEFAULT_MAX_DIM {
            write_dense(&out_dir, r, n, c.current())?;
        }
        Ok(())
    })?;
    fs::write(manifest.out_dir.join(&file_name), csv)?;
    Ok(ReplicaArtifacts {
        index: ReplicaIndex { replica_id: r, spectra_file: file_name, dims: manifest.dims.clone() },
        snapshots,
    })
}

fn write_dense(dir: &Path, r: u32, n: usize, u: &ndarray::Array2<Complex64>) -> Result<()> {
    let mut buf = Vec::with_capacity(8 + 16 * n * n);
    buf.extend_from_slice(&(n as u64).to_le_bytes());
    for col in 0..n {
        for row in 0..n {
            let v = u[(row, col)];
            buf.extend_from_slice(&v.re.to_le_bytes());
            buf.extend_from_slice(&v.im.to_le_bytes());
        }
    }
    fs::write(dir.join(format!("dense_r{r:04}_n{n:05}.bin")), buf)?;
    Ok(())
}

/// Grow every replica chain through the manifest dims and persist spectra,
/// snapshots, and the run index. Deterministic and idempotent.
pub fn run_grow(manifest: &ExperimentManifest) -> Result<EnsembleRun> {
    manifest.validate()?;
    fs::create_dir_all(&manifest.out_dir)?;
    let hash = manifest.hash();
    fs::write(
        manifest.out_dir.join("manifest.json"),
        serde_json::to_string_pretty(manifest)?,
    )?;
    let started = std::time::Instant::now();
    let pool = thread_pool();
    let results: Vec<Result<ReplicaArtifacts>> = pool.install(|| {
        (0..manifest.replicas)
            .into_par_iter()
            .map(|r| grow_one_replica(manifest, &hash, r))
            .collect()
    });
    let mut replicas = Vec::new();
    let mut snapshots = Vec::new();
    for res in results {
        let art = res?;
        replicas.push(art.index);
        snapshots.extend(art.snapshots);
    }
    let run = EnsembleRun {
        manifest: manifest.clone(),
        manifest_hash: hash.clone(),
        replicas,
        snapshots: snapshots.clone(),
        wall_clock_seconds: started.elapsed().as_secs_f64(),
    };
    fs::write(
        manifest.out_dir.join("snapshots.json"),
        serde_json::to_string_pretty(&serde_json::json!({
            "manifest_hash": hash,
            "snapshots": snapshots,
        }))?,
    )?;
    fs::write(manifest.out_dir.join("index.json"), serde_json::to_string_pretty(&run)?)?;
    Ok(run)
}

impl EnsembleRun {
    /// Load a persisted run and check that every indexed artifact is present
    /// and carries the manifest hash.
    pub fn load(dir: &Path) -> Result<EnsembleRun> {
        let index_path = dir.join("index.json");
        if !index_path.exists() {
            return Err(Error::IncompleteRun(format!("{} is missing", index_path.display())));
        }
        let mut run: EnsembleRun = serde_json::from_str(&fs::read_to_string(index_path)?)?;
        // the run may have been moved; trust the directory we were given
        run.manifest.out_dir = dir.to_path_buf();
        if run.manifest.hash() != run.manifest_hash {
            return Err(Error::ManifestHashMismatch);
        }
        for rep in &run.replicas {
            if !dir.join(&rep.spectra_file).exists() {
                return Err(Error::IncompleteRun(format!(
                    "replica {} spectra file {} is missing",
                    rep.replica_id, rep.spectra_file
                )));
            }
        }
        Ok(run)
    }

    /// Reconstruct the Spectrum of one (replica, n) snapshot from its CSV.
    pub fn load_spectrum(&self, replica_id: u32, n: usize) -> Result<Spectrum> {
        let rep = self
            .replicas
            .iter()
            .find(|r| r.replica_id == replica_id)
            .ok_or_else(|| Error::IncompleteRun(format!("replica {replica_id} not in index")))?;
        if !rep.dims.contains(&n) {
            return Err(Error::IncompleteRun(format!(
                "replica {replica_id} has no snapshot at n = {n} (dims: {:?})",
                rep.dims
            )));
        }
        let text = fs::read_to_string(self.manifest.out_dir.join(&rep.spectra_file))?;
        let mut theta = Vec::with_capacity(n);
        let mut hash_seen = false;
        for line in text.lines() {
            if let Some(rest) = line.strip_prefix("# manifest_hash:") {
                if rest.trim() != self.manifest_hash {
                    return Err(Error::ManifestHashMismatch);
                }
                hash_seen = true;
                continue;
            }
            if line.starts_with("replica_id") || line.is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split(',').collect();
            let parse = |i: usize| -> Result<f64> {
                fields
                    .get(i)
                    .and_then(|s| s.parse().ok())
                    .ok_or_else(|| Error::IncompleteRun(format!("malformed spectra row: {line}")))
            };
            if parse(1)? as usize == n {
                theta.push(parse(3)?);
            }
        }
        if !hash_seen {
            return Err(Error::ManifestHashMismatch);
        }
        if theta.len() != n {
            return Err(Error::IncompleteRun(format!(
                "expected {n} rows for replica {replica_id} at n = {n}, found {}",
                theta.len()
            )));
        }
        Spectrum::from_angles(
            theta,
            Some(Provenance { master_seed: self.manifest.seed, replica_id }),
        )
    }

    pub fn max_dim(&self) -> usize {
        *self.manifest.dims.last().unwrap()
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct CheckResult {
    pub name: String,
    pub passed: bool,
    pub residual: f64,
    pub tolerance: f64,
    pub detail: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct VerifyReport {
    pub manifest_hash: String,
    pub suite: String,
    pub checks: Vec<CheckResult>,
    pub passed: bool,
}

fn push_check(checks: &mut Vec<CheckResult>, name: &str, residual: f64, tol: f64, detail: String) {
    checks.push(CheckResult {
        name: name.to_string(),
        passed: residual <= tol,
        residual,
        tolerance: tol,
        detail,
    });
}

/// Exact finite-n identities on every stored snapshot: zero counting, the
/// index identity, the functional equation, power sums, and the product
/// representation of xi against direct evaluation.
fn verify_identities(run: &EnsembleRun, checks: &mut Vec<CheckResult>) -> Result<()> {
    for rep in &run.replicas {
        let r = rep.replica_id;
        let mut stream = derive_stream(run.manifest.seed, r, TAG_STATS);
        for &n in &rep.dims {
            let spec = run.load_spectrum(r, n)?;
            let tag = format!("r{r} n{n}");

            let mut worst_count = 0.0f64;
            for _ in 0..50 {
                let a = stream.uniform() * std::f64::consts::TAU;
                let b = stream.uniform() * std::f64::consts::TAU;
                let (a, b) = if a <= b { (a, b) } else { (b, a) };
                match argcount::count_zeros_arc(&spec, a, b) {
                    Ok(formula) => {
                        let direct =
                            spec.theta().iter().filter(|&&t| t > a && t <= b).count() as i64;
                        worst_count = worst_count.max((formula - direct).abs() as f64);
                    }
                    Err(Error::OnBranchCut { .. }) => {}
                    Err(e) => return Err(e),
                }
            }
            push_check(checks, "counting", worst_count, 0.0, tag.clone());

            let mut worst_index = 0.0f64;
            let stride = (n / 8).max(1) as i64;
            let mut k = -(n as i64);
            while k <= 2 * n as i64 {
                worst_index = worst_index.max(argcount::index_identity_residual(&spec, k)?);
                k += stride;
            }
            push_check(checks, "index_identity", worst_index, 1e-8, tag.clone());

            let mut worst_fe = 0.0f64;
            for _ in 0..20 {
                let phi = stream.uniform() * std::f64::consts::TAU;
                let z = Complex64::from_polar(1.0, phi);
                worst_fe = worst_fe.max(functional_equation_residual(&spec, z));
            }
            push_check(checks, "functional_equation", worst_fe, 1e-10 * n as f64, tag.clone());

            let k_window = run.manifest.truncation_k.max(1000);
            let pts = spec.rescaled_points(k_window);
            for alpha in [1usize, 2] {
                let cf = stats::power_sum_closed_form(&spec, alpha)?;
                let direct = stats::power_sum_direct(&pts, alpha + 1, k_window)?;
                push_check(
                    checks,
                    &format!("power_sum_alpha{alpha}"),
                    (cf.value - direct.value).abs(),
                    direct.tail_bound.unwrap() + 1e-12 * cf.value.abs(),
                    tag.clone(),
                );
            }

            let a = run.manifest.truncation_a.unwrap_or(n);
            let period_pts = spec.rescaled_points(2 * a as i64 + 2);
            let mut worst_prod = 0.0f64;
            let mut bound = 0.0f64;
            for z in [Complex64::new(1.0, 1.0), Complex64::new(-1.5, 0.5)] {
                let d = xi_direct(&spec, z)?;
                let p = xi_product(&period_pts, z, a)?;
                worst_prod = worst_prod.max((d.value - p.value).norm());
                bound = bound.max(p.tail_bound.unwrap());
            }
            push_check(checks, "product_vs_direct", worst_prod, 10.0 * bound, tag.clone());
        }
    }
    Ok(())
}

/// Statistical desk checks on the ensemble at the terminal dimension.
fn verify_statistics(run: &EnsembleRun, checks: &mut Vec<CheckResult>) -> Result<()> {
    let n = run.max_dim();
    let window = (n / 4) as i64;
    let points: Vec<_> = run
        .replicas
        .iter()
        .map(|rep| Ok(run.load_spectrum(rep.replica_id, n)?.rescaled_points(window)))
        .collect::<Result<Vec<_>>>()?;
    let a_max = (n as f64 / 8.0).min(64.0);
    let mut a_list = Vec::new();
    let mut a = 2.0;
    while a <= a_max {
        a_list.push(a);
        a *= 2.0f64.sqrt();
    }
    let profile = stats::variance_profile(&points, &a_list)?;
    let target = 1.0 / (std::f64::consts::PI * std::f64::consts::PI);
    push_check(
        checks,
        "variance_slope",
        (profile.slope - target).abs(),
        0.25 * target,
        format!("slope {:.5} vs 1/pi^2 (n = {n}, {} replicas)", profile.slope, points.len()),
    );
    let pc = stats::empirical_pair_correlation(&points, n as f64 / 8.0, 40, 4.0)?;
    let (chi2, df, p) = stats::pair_correlation_chi2(&pc);
    checks.push(CheckResult {
        name: "pair_correlation".into(),
        passed: p > 0.001,
        residual: chi2,
        tolerance: df as f64,
        detail: format!("chi2 = {chi2:.1}, df = {df}, p = {p:.4}"),
    });
    Ok(())
}

pub fn run_verify(run: &EnsembleRun, suite: &str) -> Result<VerifyReport> {
    let mut checks = Vec::new();
    match suite {
        "identities" => verify_identities(run, &mut checks)?,
        "statistics" => verify_statistics(run, &mut checks)?,
        "all" => {
            verify_identities(run, &mut checks)?;
            verify_statistics(run, &mut checks)?;
        }
        other => {
            return Err(Error::InvalidManifest(format!(
                "unknown suite {other:?}; expected identities, statistics, or all"
            )))
        }
    }
    let passed = checks.iter().all(|c| c.passed);
    let report = VerifyReport {
        manifest_hash: run.manifest_hash.clone(),
        suite: suite.to_string(),
        checks,
        passed,
    };
    let mut f = fs::File::create(run.manifest.out_dir.join(format!("verify_{suite}.json")))?;
    f.write_all(serde_json::to_string_pretty(&report)?.as_bytes())?;
    Ok(report)
}

#[derive(Debug, Clone, Serialize)]
pub struct ConvergenceRow {
    pub replica_id: u32,
    pub n: usize,
    pub reference_n: usize,
    pub sup_gap: f64,
}

/// Evaluate xi on the grid for each (replica, n), persist per-snapshot CSVs,
/// and summarize the sup-norm gap to the terminal snapshot per replica.
pub fn run_xi_grid(
    run: &EnsembleRun,
    grid: &GridSpec,
    dims: &[usize],
) -> Result<Vec<ConvergenceRow>> {
    for &n in dims {
        if !run.manifest.dims.contains(&n) {
            return Err(Error::IncompleteRun(format!(
                "requested n = {n} is not a snapshot dimension of this run (dims: {:?})",
                run.manifest.dims
            )));
        }
    }
    let reference_n = run.max_dim();
    let zs = grid.points();
    let pool = thread_pool();
    let rows: Vec<Result<Vec<ConvergenceRow>>> = pool.install(|| {
        run.replicas
            .par_iter()
            .map(|rep| {
                let r = rep.replica_id;
                let ref_spec = run.load_spectrum(r, reference_n)?;
                let ref_vals: Vec<Complex64> = zs
                    .iter()
                    .map(|&z| Ok(xi_direct(&ref_spec, z)?.value))
                    .collect::<Result<_>>()?;
                let mut out = Vec::new();
                for &n in dims {
                    let spec = run.load_spectrum(r, n)?;
                    let mut csv = String::new();
                    csv.push_str(&format!("# manifest_hash: {}\n", run.manifest_hash));
                    csv.push_str("re_z,im_z,re_xi,im_xi,abs_xi,method,n,A\n");
                    let mut sup = 0.0f64;
                    for (&z, &rv) in zs.iter().zip(&ref_vals) {
                        let v = xi_direct(&spec, z)?.value;
                        sup = sup.max((v - rv).norm());
                        csv.push_str(&format!(
                            "{},{},{},{},{},direct,{n},\n",
                            fmt_f64(z.re),
                            fmt_f64(z.im),
                            fmt_f64(v.re),
                            fmt_f64(v.im),
                            fmt_f64(v.norm()),
                        ));
                    }
                    fs::write(run.manifest.out_dir.join(format!("xi_r{r:04}_n{n:05}.csv")), csv)?;
                    out.push(ConvergenceRow { replica_id: r, n, reference_n, sup_gap: sup });
                }
                Ok(out)
            })
            .collect()
    });
    let mut all = Vec::new();
    for rows in rows {
        all.extend(rows?);
    }
    let mut csv = String::new();
    csv.push_str(&format!("# manifest_hash: {}\n", run.manifest_hash));
    csv.push_str("replica_id,n,reference_n,sup_gap\n");
    for row in &all {
        csv.push_str(&format!(
            "{},{},{},{}\n",
            row.replica_id,
            row.n,
            row.reference_n,
            fmt_f64(row.sup_gap)
        ));
    }
    fs::write(run.manifest.out_dir.join("xi_convergence.csv"), csv)?;
    Ok(all)
}

/// One `stats` CLI subcommand worth of work; returns the path written.
pub enum StatsCommand {
    Variance { n: usize },
    PairCorr { n: usize },
    Deviation { n: usize, k_max: i64 },
    Coupling { n: usize, k_max: i64, eps: f64 },
    Mgf { n: usize, lambda: f64 },
}

pub fn run_stats(run: &EnsembleRun, cmd: &StatsCommand) -> Result<PathBuf> {
    let dir = &run.manifest.out_dir;
    match *cmd {
        StatsCommand::Variance { n } => {
            let pts: Vec<_> = run
                .replicas
                .iter()
                .map(|rep| Ok(run.load_spectrum(rep.replica_id, n)?.rescaled_points((n / 4) as i64)))
                .collect::<Result<Vec<_>>>()?;
            let a_max = n as f64 / 8.0;
            let mut a_list = Vec::new();
            let mut a = 2.0;
            while a <= a_max {
                a_list.push(a);
                a *= 2.0f64.sqrt();
            }
            let profile = stats::variance_profile(&pts, &a_list)?;
            let mut csv = String::new();
            csv.push_str(&format!("# manifest_hash: {}\n", run.manifest_hash));
            csv.push_str(&format!(
                "# slope: {} stderr: {}\n",
                fmt_f64(profile.slope),
                fmt_f64(profile.slope_stderr)
            ));
            csv.push_str("A,mean,var,stderr,n_replicas\n");
            for (i, &a) in profile.interval_lengths.iter().enumerate() {
                csv.push_str(&format!(
                    "{},{},{},{},{}\n",
                    fmt_f64(a),
                    fmt_f64(profile.mean[i]),
                    fmt_f64(profile.variance[i]),
                    fmt_f64(profile.stderr[i]),
                    pts.len()
                ));
            }
            let path = dir.join(format!("variance_n{n:05}.csv"));
            fs::write(&path, csv)?;
            Ok(path)
        }
        StatsCommand::PairCorr { n } => {
            let pts: Vec<_> = run
                .replicas
                .iter()
                .map(|rep| Ok(run.load_spectrum(rep.replica_id, n)?.rescaled_points((n / 4) as i64)))
                .collect::<Result<Vec<_>>>()?;
            let pc = stats::empirical_pair_correlation(&pts, n as f64 / 8.0, 40, 4.0)?;
            let mut csv = String::new();
            csv.push_str(&format!("# manifest_hash: {}\n", run.manifest_hash));
            csv.push_str("s_bin_center,density,stderr,rho2_theory\n");
            for i in 0..pc.bin_centers.len() {
                csv.push_str(&format!(
                    "{},{},{},{}\n",
                    fmt_f64(pc.bin_centers[i]),
                    fmt_f64(pc.density[i]),
                    fmt_f64(pc.stderr[i]),
                    fmt_f64(pc.theory[i])
                ));
            }
            let path = dir.join(format!("paircorr_n{n:05}.csv"));
            fs::write(&path, csv)?;
            Ok(path)
        }
        StatsCommand::Deviation { n, k_max } => {
            let mut rows = Vec::new();
            for rep in &run.replicas {
                let spec = run.load_spectrum(rep.replica_id, n)?;
                let pts = spec.rescaled_points(k_max + 2);
                rows.push(serde_json::json!({
                    "replica_id": rep.replica_id,
                    "n": n,
                    "k_max": k_max,
                    "deviation": stats::deviation_profile(&pts, k_max)?,
                }));
            }
            let path = dir.join(format!("deviation_n{n:05}.json"));
            fs::write(
                &path,
                serde_json::to_string_pretty(&serde_json::json!({
                    "manifest_hash": run.manifest_hash,
                    "rows": rows,
                }))?,
            )?;
            Ok(path)
        }
        StatsCommand::Coupling { n, k_max, eps } => {
            let big = run.max_dim();
            let mut rows = Vec::new();
            for rep in &run.replicas {
                let spec_n = run.load_spectrum(rep.replica_id, n)?;
                let spec_big = run.load_spectrum(rep.replica_id, big)?;
                let profile = stats::coupling_error_profile(&spec_n, &spec_big, k_max, eps)?;
                rows.push(serde_json::json!({
                    "replica_id": rep.replica_id,
                    "n": n,
                    "reference_n": big,
                    "fitted_constant": profile.fitted_constant,
                    "fraction_under": profile.fraction_under,
                    "k1_error": profile.rows.iter().find(|r| r.k == 1).map(|r| r.error),
                }));
            }
            let path = dir.join(format!("coupling_n{n:05}.json"));
            fs::write(
                &path,
                serde_json::to_string_pretty(&serde_json::json!({
                    "manifest_hash": run.manifest_hash,
                    "eps": eps,
                    "rows": rows,
                }))?,
            )?;
            Ok(path)
        }
        StatsCommand::Mgf { n, lambda } => {
            // X_n samples double as the per-replica argument statistics CSV.
            let mut csv = String::new();
            csv.push_str(&format!("# manifest_hash: {}\n", run.manifest_hash));
            csv.push_str("replica_id,n,X_n,arg_sup,arg_sup_over_log_n\n");
            let mut samples = Vec::new();
            for rep in &run.replicas {
                let spec = run.load_spectrum(rep.replica_id, n)?;
                let x = x_n(&spec);
                let sup = argcount::arg_supremum(&spec);
                csv.push_str(&format!(
                    "{},{n},{},{},{}\n",
                    rep.replica_id,
                    fmt_f64(x),
                    fmt_f64(sup),
                    fmt_f64(sup / (n as f64).ln())
                ));
                samples.push((lambda * x).exp());
            }
            fs::write(dir.join(format!("args_n{n:05}.csv")), csv)?;
            let m = samples.len() as f64;
            let mean = samples.iter().sum::<f64>() / m;
            let var = samples.iter().map(|s| (s - mean).powi(2)).sum::<f64>() / (m - 1.0);
            let stderr = (var / m).sqrt();
            let exact = argcount::mgf_exact(n, lambda);
            let path = dir.join(format!("mgf_n{n:05}_lambda{lambda}.json"));
            fs::write(
                &path,
                serde_json::to_string_pretty(&serde_json::json!({
                    "manifest_hash": run.manifest_hash,
                    "n": n,
                    "lambda": lambda,
                    "exact": exact,
                    "mc_mean": mean,
                    "mc_stderr": stderr,
                    "z_score": (mean - exact) / stderr,
                }))?,
            )?;
            Ok(path)
        }
    }
}

/// Draw fresh X_n samples without persisting matrices; used by the MGF
/// acceptance check, where 2e4 replicas would be wasteful to store.
pub fn sample_x_n(seed: u64, replicas: u32, n: usize) -> Result<Vec<f64>> {
    let pool = thread_pool();
    pool.install(|| {
        (0..replicas)
            .into_par_iter()
            .map(|r| {
                let mut chain = VirtualIsometryChain::new(seed, r);
                chain.grow_to(n)?;
                let spec = eigenangles_with_provenance(
                    chain.current(),
                    Some(Provenance { master_seed: seed, replica_id: r }),
                )?;
                Ok(x_n(&spec))
            })
            .collect()
    })
}
