use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use xi_limit::ensemble::{
    run_grow, run_stats, run_verify, run_xi_grid, EnsembleRun, ExperimentManifest, GridSpec,
    StatsCommand,
};

#[derive(Parser)]
#[command(name = "xi-limit", about = "Coupled Haar-unitary chains and the microscopic limit of their characteristic-polynomial ratio", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Grow replica chains through the given dimensions and persist spectra.
    Grow {
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        replicas: u32,
        /// Comma-separated snapshot dimensions, strictly increasing.
        #[arg(long, value_delimiter = ',')]
        dims: Vec<usize>,
        #[arg(long)]
        out: PathBuf,
        /// Also persist dense matrices above dim 64.
        #[arg(long)]
        keep_dense: bool,
    },
    /// Run a verification suite against a persisted run.
    Verify {
        #[arg(long)]
        run: PathBuf,
        /// identities | statistics | all
        #[arg(long, default_value = "all")]
        suite: String,
    },
    /// Evaluate xi on a complex grid for each stored snapshot.
    XiGrid {
        #[arg(long)]
        run: PathBuf,
        #[command(flatten)]
        grid: GridArgs,
        /// Snapshot dimensions to evaluate (default: all in the run).
        #[arg(long, value_delimiter = ',')]
        dims: Vec<usize>,
    },
    /// Ensemble statistics from stored spectra.
    Stats {
        #[arg(long)]
        run: PathBuf,
        /// variance | paircorr | deviation | coupling | mgf
        which: String,
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 1.0)]
        lambda: f64,
        #[arg(long, default_value_t = 64)]
        k_max: i64,
        #[arg(long, default_value_t = 0.05)]
        eps: f64,
    },
}

#[derive(Args)]
struct GridArgs {
    /// re_min,re_max,im_min,im_max
    #[arg(long = "box", value_delimiter = ',', default_values_t = [-2.0, 2.0, -2.0, 2.0], allow_hyphen_values = true)]
    bounds: Vec<f64>,
    #[arg(long, default_value_t = 21)]
    steps: usize,
}

fn run() -> xi_limit::Result<bool> {
    match Cli::parse().command {
        Command::Grow { seed, replicas, dims, out, keep_dense } => {
            let mut manifest = ExperimentManifest::new(seed, replicas, dims, out);
            manifest.keep_dense = keep_dense;
            let run = run_grow(&manifest)?;
            println!(
                "grew {} replicas through dims {:?} in {:.1}s (hash {})",
                manifest.replicas, manifest.dims, run.wall_clock_seconds, run.manifest_hash
            );
            Ok(true)
        }
        Command::Verify { run, suite } => {
            let run = EnsembleRun::load(&run)?;
            let report = run_verify(&run, &suite)?;
            for c in &report.checks {
                println!(
                    "{} {:<22} residual {:>12.3e} tol {:>12.3e}  {}",
                    if c.passed { "PASS" } else { "FAIL" },
                    c.name,
                    c.residual,
                    c.tolerance,
                    c.detail
                );
            }
            println!("suite {}: {}", report.suite, if report.passed { "PASS" } else { "FAIL" });
            Ok(report.passed)
        }
        Command::XiGrid { run, grid, dims } => {
            let run = EnsembleRun::load(&run)?;
            if grid.bounds.len() != 4 {
                return Err(xi_limit::Error::InvalidManifest(
                    "--box needs re_min,re_max,im_min,im_max".into(),
                ));
            }
            let spec = GridSpec {
                re_min: grid.bounds[0],
                re_max: grid.bounds[1],
                im_min: grid.bounds[2],
                im_max: grid.bounds[3],
                steps: grid.steps,
            };
            let dims = if dims.is_empty() { run.manifest.dims.clone() } else { dims };
            let rows = run_xi_grid(&run, &spec, &dims)?;
            for &n in &dims {
                let mut gaps: Vec<f64> =
                    rows.iter().filter(|r| r.n == n).map(|r| r.sup_gap).collect();
                gaps.sort_by(|a, b| a.partial_cmp(b).unwrap());
                println!("n = {n:5}: median sup |xi_n - xi_N| = {:.3e}", gaps[gaps.len() / 2]);
            }
            Ok(true)
        }
        Command::Stats { run, which, n, lambda, k_max, eps } => {
            let run = EnsembleRun::load(&run)?;
            let cmd = match which.as_str() {
                "variance" => StatsCommand::Variance { n },
                "paircorr" => StatsCommand::PairCorr { n },
                "deviation" => StatsCommand::Deviation { n, k_max },
                "coupling" => StatsCommand::Coupling { n, k_max, eps },
                "mgf" => StatsCommand::Mgf { n, lambda },
                other => {
                    return Err(xi_limit::Error::InvalidManifest(format!(
                        "unknown stats command {other:?}"
                    )))
                }
            };
            let path = run_stats(&run, &cmd)?;
            println!("wrote {}", path.display());
            Ok(true)
        }
    }
}

fn main() -> ExitCode {
    match run() {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
