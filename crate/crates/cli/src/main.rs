use clap::{Args, Parser, Subcommand};
use qgleason_cli::{exit_code, resolve_seed, run, Report, RunConfig, DEFAULT_FIT_TOL};

#[derive(Parser)]
#[command(
    name = "qgleason",
    version,
    about = "Verification suites for measures over projectors, affine-measure \
             fitting, finite-context model checking and EPR simulation",
    after_help = "Exit codes: 0 all checks passed, 1 a check failed, 2 usage error.\n\
                  The default seed comes from QGLEASON_SEED when --seed is absent."
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct CommonArgs {
    /// RNG seed (defaults to $QGLEASON_SEED, then 0).
    #[arg(long)]
    seed: Option<u64>,
    /// Worker count echoed in reports; only 1 is supported.
    #[arg(long, default_value_t = 1)]
    workers: usize,
    /// Write the JSON report to this path as well as stdout.
    #[arg(long)]
    out: Option<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Verify the frame-function identities and the affine fit of a measure.
    VerifyGleason {
        /// Measure definition file (text DSL).
        #[arg(long)]
        measure: String,
        /// Hilbert-space dimension (at least 3).
        #[arg(long)]
        dim: usize,
        /// Sampled sections / fit samples.
        #[arg(long, default_value_t = 200)]
        samples: usize,
        /// Central-difference step.
        #[arg(long, default_value_t = 1e-3)]
        h: f64,
        /// Rms residual tolerance for the affine fit.
        #[arg(long, default_value_t = DEFAULT_FIT_TOL)]
        fit_tol: f64,
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Fit tr(ηE) + K_r to samples of a measure or to a sample file.
    Fit {
        /// Measure definition file (text DSL).
        #[arg(long, conflicts_with = "data")]
        measure: Option<String>,
        /// Previously generated sample file.
        #[arg(long)]
        data: Option<String>,
        #[arg(long)]
        dim: usize,
        /// Number of samples to draw (measure mode).
        #[arg(long, default_value_t = 120)]
        samples: usize,
        /// Comma-separated rank classes to sample (measure mode).
        #[arg(long, value_delimiter = ',', default_value = "1")]
        ranks: Vec<usize>,
        #[arg(long, default_value_t = DEFAULT_FIT_TOL)]
        fit_tol: f64,
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Reconstruct the density operator of a globally defined measure.
    Reconstruct {
        #[arg(long)]
        measure: String,
        #[arg(long)]
        dim: usize,
        #[arg(long, default_value_t = 150)]
        samples: usize,
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Run the consistency suite on a named model.
    CheckModel {
        /// Model name; unknown names list the available ones.
        #[arg(long)]
        model: String,
        #[arg(long)]
        dim: usize,
        /// Monte-Carlo trials for the Born-reproduction check.
        #[arg(long, default_value_t = 100_000)]
        trials: usize,
        /// Sampled measurements per structural check.
        #[arg(long, default_value_t = 40)]
        samples: usize,
        #[arg(long, default_value_t = DEFAULT_FIT_TOL)]
        fit_tol: f64,
        /// z-score threshold for the Born check.
        #[arg(long, default_value_t = 4.0)]
        z_max: f64,
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Simulate the one-bit EPR protocol against the singlet oracle.
    SimulateEpr {
        /// Rounds per direction pair.
        #[arg(long, default_value_t = 1_000_000)]
        rounds: usize,
        /// Number of (a, b) grid points when --a/--b are absent.
        #[arg(long, default_value_t = 20)]
        grid: usize,
        /// Fixed direction for Alice, e.g. --a 0,0,1 (normalized).
        #[arg(long, value_delimiter = ',', num_args = 3)]
        a: Option<Vec<f64>>,
        /// Fixed direction for Bob.
        #[arg(long, value_delimiter = ',', num_args = 3)]
        b: Option<Vec<f64>>,
        /// Write per-pair results as CSV to this path.
        #[arg(long)]
        csv: Option<String>,
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Generate a (projector, value) sample file from a measure.
    GenData {
        #[arg(long)]
        measure: String,
        #[arg(long)]
        dim: usize,
        /// Comma-separated rank classes to cycle through.
        #[arg(long, value_delimiter = ',', default_value = "1")]
        ranks: Vec<usize>,
        #[arg(long, default_value_t = 100)]
        count: usize,
        /// Output sample file path.
        #[arg(long)]
        out: String,
        /// RNG seed (defaults to $QGLEASON_SEED, then 0).
        #[arg(long)]
        seed: Option<u64>,
        /// Worker count echoed in reports; only 1 is supported.
        #[arg(long, default_value_t = 1)]
        workers: usize,
    },
}

fn triple(v: Vec<f64>) -> [f64; 3] {
    [v[0], v[1], v[2]]
}

fn to_config(command: Command) -> RunConfig {
    match command {
        Command::VerifyGleason {
            measure,
            dim,
            samples,
            h,
            fit_tol,
            common,
        } => RunConfig::VerifyGleason {
            measure,
            dim,
            samples,
            h,
            fit_tol,
            seed: resolve_seed(common.seed),
            workers: common.workers,
            out: common.out,
        },
        Command::Fit {
            measure,
            data,
            dim,
            samples,
            ranks,
            fit_tol,
            common,
        } => RunConfig::Fit {
            measure,
            data,
            dim,
            samples,
            ranks,
            fit_tol,
            seed: resolve_seed(common.seed),
            workers: common.workers,
            out: common.out,
        },
        Command::Reconstruct {
            measure,
            dim,
            samples,
            common,
        } => RunConfig::Reconstruct {
            measure,
            dim,
            samples,
            seed: resolve_seed(common.seed),
            workers: common.workers,
            out: common.out,
        },
        Command::CheckModel {
            model,
            dim,
            trials,
            samples,
            fit_tol,
            z_max,
            common,
        } => RunConfig::CheckModel {
            model,
            dim,
            trials,
            samples,
            fit_tol,
            z_max,
            seed: resolve_seed(common.seed),
            workers: common.workers,
            out: common.out,
        },
        Command::SimulateEpr {
            rounds,
            grid,
            a,
            b,
            csv,
            common,
        } => RunConfig::SimulateEpr {
            rounds,
            grid,
            a: a.map(triple),
            b: b.map(triple),
            seed: resolve_seed(common.seed),
            workers: common.workers,
            out: common.out,
            csv,
        },
        Command::GenData {
            measure,
            dim,
            ranks,
            count,
            out,
            seed,
            workers,
        } => RunConfig::GenData {
            measure,
            dim,
            ranks,
            count,
            seed: resolve_seed(seed),
            workers,
            out,
        },
    }
}

fn main() {
    let cli = Cli::parse();
    let config = to_config(cli.command);
    let outcome = run(&config);
    match &outcome {
        Ok(report) => print_summary(report),
        Err(e) => eprintln!("error: {e}"),
    }
    std::process::exit(exit_code(&outcome));
}

fn print_summary(report: &Report) {
    println!("{}", report.to_pretty_json());
    for check in &report.checks {
        eprintln!(
            "{}: {} (residual {:.3e}, tolerance {:.3e}, {} samples)",
            check.check,
            if check.pass { "pass" } else { "FAIL" },
            check.max_residual,
            check.tolerance,
            check.samples
        );
    }
}
