use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use exsum::harness::{
    float_range, run_experiment, write_csv_atomic, write_records, ExperimentConfig, Format, HarnessError, KernelSpec,
    SimpsonReference,
};
use exsum::kernels::Integrand;
use exsum::parallel::thread_cap_from_env;
use exsum::summation::SummationStrategy;

/// Accuracy, convergence, reproducibility and timing sweeps over summation
/// strategies. Writes one CSV row per (strategy, P, parameter, seed).
#[derive(Parser, Debug)]
#[command(name = "exsum", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct Common {
    /// Summation strategy (repeatable).
    #[arg(long = "strategy", value_name = "NAME", default_values_t = [SummationStrategy::Naive, SummationStrategy::Bucketed])]
    strategies: Vec<SummationStrategy>,
    /// Worker count P (repeatable).
    #[arg(long = "procs", value_name = "P", default_values_t = [1usize])]
    procs: Vec<usize>,
    /// Working precision.
    #[arg(long, value_name = "FMT", default_value_t = Format::B32)]
    fmt: Format,
    /// Data seed (repeatable).
    #[arg(long = "seed", value_name = "S", default_values_t = [1u64])]
    seeds: Vec<u64>,
    /// Output file; CSV goes to stdout when absent.
    #[arg(long, value_name = "PATH")]
    csv: Option<PathBuf>,
    /// Timed repetitions per row; the median is reported.
    #[arg(long, default_value_t = 5)]
    reps: usize,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Sum a generated or loaded vector.
    Sum {
        #[command(flatten)]
        common: Common,
        /// Vector length (repeatable).
        #[arg(long = "n", default_values_t = [100_000usize])]
        sizes: Vec<usize>,
        /// Share of large-magnitude values.
        #[arg(long, default_value_t = 0.3)]
        frac_large: f64,
        /// Sum this dataset file instead of generating data.
        #[arg(long, value_name = "PATH", conflicts_with = "dump")]
        input: Option<PathBuf>,
        /// Also write the generated vector as a dataset file.
        #[arg(long, value_name = "PATH")]
        dump: Option<PathBuf>,
    },
    /// Composite Simpson rule for C·∫₀ᵇ f.
    Simpson {
        #[command(flatten)]
        common: Common,
        /// Integrand (repeatable): cos, inv-sq-plus or tanh.
        #[arg(long = "func", default_values_t = [Integrand::Cos])]
        funcs: Vec<Integrand>,
        /// Upper bound of integration (repeatable).
        #[arg(long = "b", default_values_t = [2.0, 3.0, 4.0, 5.0])]
        bs: Vec<f64>,
        /// Number of subintervals (even).
        #[arg(long, default_value_t = 1_000_000)]
        m: usize,
        #[arg(long = "capital-c", default_value_t = 1e6)]
        capital_c: f64,
        /// Measure against the single-worker run of the same strategy instead
        /// of the closed form.
        #[arg(long)]
        vs_single: bool,
    },
    /// LU factorisation without pivoting.
    Lu {
        #[command(flatten)]
        common: Common,
        /// Matrix order (repeatable).
        #[arg(long = "n", default_values_t = [100usize])]
        sizes: Vec<usize>,
        /// Make every row strictly diagonally dominant.
        #[arg(long)]
        diag_boost: bool,
    },
    /// Jacobi iteration on near-unstable systems.
    Jacobi {
        #[command(flatten)]
        common: Common,
        #[arg(long = "n", default_values_t = [10usize])]
        sizes: Vec<usize>,
        /// Stopping tolerance (repeatable).
        #[arg(long = "eps", default_values_t = [1e-2, 1e-3, 1e-4, 1e-5])]
        eps: Vec<f64>,
        #[arg(long, default_value_t = 1_000_000)]
        max_iter: usize,
        /// Diagonal margin over the off-diagonal row sum.
        #[arg(long, default_value_t = 1e-3)]
        delta: f64,
    },
    /// Power method on (d − 0.01)·I + 0.01·J.
    Power {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 100)]
        n: usize,
        #[arg(long, default_value_t = 300.0)]
        d_from: f64,
        #[arg(long, default_value_t = 500.0)]
        d_to: f64,
        #[arg(long, default_value_t = 20.0)]
        d_step: f64,
        #[arg(long, default_value_t = 1e-6)]
        eps: f64,
        #[arg(long, default_value_t = 1_000_000)]
        max_iter: usize,
    },
    /// Matrix product with the inner dimension split across workers.
    Matmul {
        #[command(flatten)]
        common: Common,
        #[arg(long = "n", default_values_t = [200usize])]
        sizes: Vec<usize>,
        #[arg(long, default_value_t = 0.5)]
        frac_large: f64,
        #[arg(long)]
        diag_boost: bool,
    },
}

fn config(command: Command) -> Result<(ExperimentConfig, Option<PathBuf>), HarnessError> {
    let (common, kernel) = match command {
        Command::Sum {
            common,
            sizes,
            frac_large,
            input,
            dump,
        } => (
            common,
            KernelSpec::Sum {
                sizes,
                frac_large,
                input,
                dump,
            },
        ),
        Command::Simpson {
            common,
            funcs,
            bs,
            m,
            capital_c,
            vs_single,
        } => (
            common,
            KernelSpec::Simpson {
                funcs,
                bs,
                m,
                c: capital_c,
                reference: if vs_single {
                    SimpsonReference::SingleWorker
                } else {
                    SimpsonReference::Analytic
                },
            },
        ),
        Command::Lu {
            common,
            sizes,
            diag_boost,
        } => (common, KernelSpec::Lu { sizes, diag_boost }),
        Command::Jacobi {
            common,
            sizes,
            eps,
            max_iter,
            delta,
        } => (
            common,
            KernelSpec::Jacobi {
                sizes,
                delta,
                eps,
                max_iter,
            },
        ),
        Command::Power {
            common,
            n,
            d_from,
            d_to,
            d_step,
            eps,
            max_iter,
        } => (
            common,
            KernelSpec::Power {
                n,
                ds: float_range(d_from, d_to, d_step)?,
                eps,
                max_iter,
            },
        ),
        Command::Matmul {
            common,
            sizes,
            frac_large,
            diag_boost,
        } => (
            common,
            KernelSpec::Matmul {
                sizes,
                frac_large,
                diag_boost,
            },
        ),
    };
    let config = ExperimentConfig {
        kernel,
        strategies: common.strategies,
        procs: common.procs,
        fmt: common.fmt,
        seeds: common.seeds,
        reps: common.reps,
        threads: thread_cap_from_env(),
    };
    Ok((config, common.csv))
}

fn run(command: Command) -> Result<(), HarnessError> {
    let (config, csv) = config(command)?;
    let records = run_experiment(&config)?;
    match csv {
        Some(path) => write_csv_atomic(&path, &records)?,
        None => write_records(std::io::stdout().lock(), &records)?,
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("exsum: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
