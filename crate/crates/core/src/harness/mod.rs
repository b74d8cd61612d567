//! Experiment sweeps: build inputs, run kernels over the cartesian product of
//! strategies, worker counts, parameters and seeds, and collect CSV rows.

mod metrics;
mod record;

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;
use std::time::Instant;

use thiserror::Error;

use crate::datagen::{
    gen_jacobi_system, gen_matrix, gen_power_matrix, gen_vector, power_matrix_eigenvalue,
    read_dataset, write_dataset, DatasetError, MagnitudeProfile,
};
use crate::float_core::WorkingFloat;
use crate::kernels::{
    jacobi_solve, lu_factorize, matmul, power_method, simpson_integrate, Integrand, IterationOutcome, KernelError,
    Matrix,
};
use crate::parallel::{parallel_sum, ExecPlan};
use crate::summation::{sum_exact, SumError, SummationStrategy};

pub use metrics::{
    abs_error, abs_error_vec, exact_matmul, iteration_gap, lu_residual, repro_pct, residual_inf, NotConverged,
    ShapeMismatch,
};
pub use record::{parse_hex, read_records, to_hex, write_csv_atomic, write_records, CsvError, ExperimentRecord, CSV_HEADER};

/// Seed stream for the LU test vector, kept apart from the matrix stream.
const LU_X_STREAM: u64 = 0x2545_F491_4F6C_DD1D;
/// Seed stream for the right-hand matmul operand.
const MATMUL_B_STREAM: u64 = 0x9E37_79B9_7F4A_7C15;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("I/O failure: {0}")]
    Io(String),
}

impl HarnessError {
    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::InvalidConfig(_) => 1,
            HarnessError::Io(_) => 2,
        }
    }
}

impl From<CsvError> for HarnessError {
    fn from(e: CsvError) -> Self {
        HarnessError::Io(e.to_string())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    B32,
    B64,
}

impl Format {
    pub fn name(self) -> &'static str {
        match self {
            Format::B32 => "b32",
            Format::B64 => "b64",
        }
    }
}

impl fmt::Display for Format {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Format {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "b32" => Ok(Format::B32),
            "b64" => Ok(Format::B64),
            _ => Err(format!("unknown format `{s}` (expected b32 or b64)")),
        }
    }
}

/// What the Simpson error is measured against.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SimpsonReference {
    /// `C` times the closed-form antiderivative.
    Analytic,
    /// The same strategy on a single worker.
    SingleWorker,
}

#[derive(Debug, Clone, PartialEq)]
pub enum KernelSpec {
    Sum {
        sizes: Vec<usize>,
        frac_large: f64,
        /// Sum this dataset instead of generating one; `sizes` is then ignored.
        input: Option<PathBuf>,
        /// Write the generated vector here; needs a single size and seed.
        dump: Option<PathBuf>,
    },
    Simpson {
        funcs: Vec<Integrand>,
        bs: Vec<f64>,
        m: usize,
        c: f64,
        reference: SimpsonReference,
    },
    Lu {
        sizes: Vec<usize>,
        diag_boost: bool,
    },
    Jacobi {
        sizes: Vec<usize>,
        delta: f64,
        eps: Vec<f64>,
        max_iter: usize,
    },
    Power {
        n: usize,
        ds: Vec<f64>,
        eps: f64,
        max_iter: usize,
    },
    Matmul {
        sizes: Vec<usize>,
        frac_large: f64,
        diag_boost: bool,
    },
}

impl KernelSpec {
    pub fn name(&self) -> &'static str {
        match self {
            KernelSpec::Sum { .. } => "sum",
            KernelSpec::Simpson { .. } => "simpson",
            KernelSpec::Lu { .. } => "lu",
            KernelSpec::Jacobi { .. } => "jacobi",
            KernelSpec::Power { .. } => "power",
            KernelSpec::Matmul { .. } => "matmul",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub kernel: KernelSpec,
    pub strategies: Vec<SummationStrategy>,
    pub procs: Vec<usize>,
    pub fmt: Format,
    pub seeds: Vec<u64>,
    /// Timed repetitions per record; the median is reported.
    pub reps: usize,
    pub threads: usize,
}

/// `from, from+step, ...` up to `to`, computed by multiplication so the grid
/// does not drift.
pub fn float_range(from: f64, to: f64, step: f64) -> Result<Vec<f64>, HarnessError> {
    if !(from.is_finite() && to.is_finite() && step.is_finite()) || step <= 0.0 || from > to {
        return Err(HarnessError::InvalidConfig(format!(
            "range {from}..={to} step {step} is empty or malformed"
        )));
    }
    let count = ((to - from) / step * (1.0 + 1e-12)).floor() as usize;
    Ok((0..=count).map(|i| from + i as f64 * step).collect())
}

fn invalid(msg: impl Into<String>) -> HarnessError {
    HarnessError::InvalidConfig(msg.into())
}

fn require_nonempty<T>(v: &[T], what: &str) -> Result<(), HarnessError> {
    if v.is_empty() {
        Err(invalid(format!("empty {what} list")))
    } else {
        Ok(())
    }
}

fn require_positive(v: f64, what: &str) -> Result<(), HarnessError> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(invalid(format!("{what} must be positive and finite, got {v}")))
    }
}

fn require_sizes(sizes: &[usize]) -> Result<(), HarnessError> {
    require_nonempty(sizes, "size")?;
    if sizes.contains(&0) {
        return Err(invalid("sizes must be at least 1"));
    }
    Ok(())
}

fn require_fraction(f: f64) -> Result<(), HarnessError> {
    if (0.0..=1.0).contains(&f) {
        Ok(())
    } else {
        Err(invalid(format!("large-value fraction must lie in [0, 1], got {f}")))
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<(), HarnessError> {
        require_nonempty(&self.strategies, "strategy")?;
        require_nonempty(&self.procs, "worker count")?;
        require_nonempty(&self.seeds, "seed")?;
        if self.procs.contains(&0) {
            return Err(invalid("worker counts must be at least 1"));
        }
        if self.reps == 0 {
            return Err(invalid("at least one repetition is required"));
        }
        if self.threads == 0 {
            return Err(invalid("thread cap must be at least 1"));
        }
        match &self.kernel {
            KernelSpec::Sum {
                sizes,
                frac_large,
                input,
                dump,
            } => {
                require_fraction(*frac_large)?;
                if input.is_some() && dump.is_some() {
                    return Err(invalid("--input and --dump are mutually exclusive"));
                }
                if input.is_none() {
                    require_nonempty(sizes, "size")?;
                }
                if dump.is_some() && (sizes.len() != 1 || self.seeds.len() != 1) {
                    return Err(invalid("--dump needs exactly one size and one seed"));
                }
            }
            KernelSpec::Simpson { funcs, bs, m, c, .. } => {
                require_nonempty(funcs, "integrand")?;
                require_nonempty(bs, "upper bound")?;
                for b in bs {
                    require_positive(*b, "b")?;
                }
                if *m < 2 || m % 2 == 1 {
                    return Err(invalid(format!("m must be even and at least 2, got {m}")));
                }
                require_positive(*c, "C")?;
            }
            KernelSpec::Lu { sizes, .. } => require_sizes(sizes)?,
            KernelSpec::Matmul { sizes, frac_large, .. } => {
                require_sizes(sizes)?;
                require_fraction(*frac_large)?;
            }
            KernelSpec::Jacobi {
                sizes,
                delta,
                eps,
                max_iter,
            } => {
                require_sizes(sizes)?;
                require_positive(*delta, "delta")?;
                require_nonempty(eps, "eps")?;
                for e in eps {
                    require_positive(*e, "eps")?;
                }
                if *max_iter == 0 {
                    return Err(invalid("max-iter must be at least 1"));
                }
            }
            KernelSpec::Power { n, ds, eps, max_iter } => {
                if *n == 0 {
                    return Err(invalid("n must be at least 1"));
                }
                require_nonempty(ds, "d")?;
                for d in ds {
                    require_positive(*d, "d")?;
                }
                require_positive(*eps, "eps")?;
                if *max_iter == 0 {
                    return Err(invalid("max-iter must be at least 1"));
                }
            }
        }
        Ok(())
    }
}

/// Runs the sweep. Kernel failures become rows with `error_flag` set; only
/// configuration and I/O problems abort.
pub fn run_experiment(config: &ExperimentConfig) -> Result<Vec<ExperimentRecord>, HarnessError> {
    config.validate()?;
    match config.fmt {
        Format::B32 => Runner::<f32>::new(config).run(),
        Format::B64 => Runner::<f64>::new(config).run(),
    }
}

pub fn error_flag(e: &KernelError) -> &'static str {
    match e {
        KernelError::OddSubintervalCount(_) => "odd-subintervals",
        KernelError::NotSquare { .. } => "not-square",
        KernelError::DimensionMismatch(_) => "dimension-mismatch",
        KernelError::ZeroPivot { .. } => "zero-pivot",
        KernelError::NotDiagonallyDominant { .. } => "not-diagonally-dominant",
        KernelError::ZeroNormalizer { .. } => "zero-normalizer",
        KernelError::NonFiniteInput | KernelError::Sum(SumError::NonFiniteInput { .. }) => "non-finite",
        KernelError::Sum(SumError::Overflow) => "overflow",
    }
}

const NOT_CONVERGED: &str = "not-converged";

type RunOutcome<T> = (SummationStrategy, usize, Result<IterationOutcome<T>, KernelError>);

fn format_param(pairs: &[(&str, String)]) -> String {
    pairs
        .iter()
        .map(|(k, v)| format!("{k}={v}"))
        .collect::<Vec<_>>()
        .join(" ")
}

struct Runner<'a, T> {
    config: &'a ExperimentConfig,
    records: Vec<ExperimentRecord>,
    _t: std::marker::PhantomData<T>,
}

impl<'a, T: WorkingFloat> Runner<'a, T> {
    fn new(config: &'a ExperimentConfig) -> Self {
        Self {
            config,
            records: Vec::new(),
            _t: std::marker::PhantomData,
        }
    }

    fn plan(&self, strategy: SummationStrategy, procs: usize) -> ExecPlan {
        ExecPlan {
            strategy,
            procs,
            threads: self.config.threads,
        }
    }

    /// Runs `f` `reps` times and returns the last result with the median time.
    fn timed<R>(&self, mut f: impl FnMut() -> R) -> (R, u64) {
        let mut times = Vec::with_capacity(self.config.reps);
        let mut out = None;
        for _ in 0..self.config.reps {
            let start = Instant::now();
            let r = f();
            times.push(start.elapsed().as_nanos() as u64);
            out = Some(r);
        }
        times.sort_unstable();
        (out.expect("reps >= 1"), times[times.len() / 2])
    }

    fn push(
        &mut self,
        strategy: &str,
        procs: usize,
        param: &str,
        seed: u64,
        fill: impl FnOnce(&mut ExperimentRecord),
    ) {
        let mut r = ExperimentRecord {
            kernel: self.config.kernel.name().to_owned(),
            strategy: strategy.to_owned(),
            fmt: self.config.fmt.name().to_owned(),
            procs,
            param: param.to_owned(),
            seed,
            abs_error: None,
            iterations: None,
            repro_pct: None,
            wall_ns: 0,
            error_flag: String::new(),
        };
        fill(&mut r);
        self.records.push(r);
    }

    fn run(mut self) -> Result<Vec<ExperimentRecord>, HarnessError> {
        let config = self.config;
        match &config.kernel {
            KernelSpec::Sum {
                sizes,
                frac_large,
                input,
                dump,
            } => {
                let profile = MagnitudeProfile::with_large_fraction(*frac_large);
                if let Some(path) = input {
                    let file = std::fs::File::open(path).map_err(|e| HarnessError::Io(format!("{}: {e}", path.display())))?;
                    let xs: Vec<T> = read_dataset(std::io::BufReader::new(file)).map_err(|e| match e {
                        DatasetError::Io(e) => HarnessError::Io(format!("{}: {e}", path.display())),
                        other => invalid(format!("{}: {other}", path.display())),
                    })?;
                    for &seed in &config.seeds {
                        self.sum_rows(&xs, seed);
                    }
                } else {
                    for &n in sizes {
                        for &seed in &config.seeds {
                            let xs: Vec<T> = gen_vector(n, &profile, seed);
                            if let Some(path) = dump {
                                let file = std::fs::File::create(path)
                                    .map_err(|e| HarnessError::Io(format!("{}: {e}", path.display())))?;
                                let mut w = std::io::BufWriter::new(file);
                                write_dataset(&mut w, &xs)
                                    .and_then(|_| std::io::Write::flush(&mut w))
                                    .map_err(|e| HarnessError::Io(format!("{}: {e}", path.display())))?;
                            }
                            self.sum_rows(&xs, seed);
                        }
                    }
                }
            }
            KernelSpec::Simpson {
                funcs,
                bs,
                m,
                c,
                reference,
            } => {
                for &f in funcs {
                    for &b in bs {
                        for &seed in &config.seeds {
                            self.simpson_rows(f, b, *m, *c, *reference, seed);
                        }
                    }
                }
            }
            KernelSpec::Lu { sizes, diag_boost } => {
                for &n in sizes {
                    for &seed in &config.seeds {
                        self.lu_rows(n, *diag_boost, seed);
                    }
                }
            }
            KernelSpec::Jacobi {
                sizes,
                delta,
                eps,
                max_iter,
            } => {
                for &n in sizes {
                    for &e in eps {
                        for &seed in &config.seeds {
                            self.jacobi_rows(n, *delta, e, *max_iter, seed);
                        }
                    }
                }
            }
            KernelSpec::Power { n, ds, eps, max_iter } => {
                for &d in ds {
                    for &seed in &config.seeds {
                        self.power_rows(*n, d, *eps, *max_iter, seed);
                    }
                }
            }
            KernelSpec::Matmul {
                sizes,
                frac_large,
                diag_boost,
            } => {
                let profile = MagnitudeProfile::with_large_fraction(*frac_large);
                for &n in sizes {
                    for &seed in &config.seeds {
                        self.matmul_rows(n, &profile, *diag_boost, seed);
                    }
                }
            }
        }
        Ok(self.records)
    }

    fn sum_rows(&mut self, xs: &[T], seed: u64) {
        let param = format_param(&[("n", xs.len().to_string())]);
        let exact = sum_exact(xs);
        for &s in &self.config.strategies {
            for &p in &self.config.procs {
                let plan = self.plan(s, p);
                let (res, ns) = self.timed(|| parallel_sum(xs, &plan));
                self.push(s.name(), p, &param, seed, |r| {
                    r.wall_ns = ns;
                    match (&res, &exact) {
                        (Ok(v), Ok(e)) => r.abs_error = Some(e.abs_diff(v.to_f64()).expect("finite")),
                        (Err(e), _) | (_, Err(e)) => r.error_flag = error_flag(&KernelError::Sum(*e)).into(),
                    }
                });
            }
        }
    }

    fn simpson_rows(&mut self, f: Integrand, b: f64, m: usize, c: f64, reference: SimpsonReference, seed: u64) {
        let param = format_param(&[("f", f.name().into()), ("b", b.to_string()), ("m", m.to_string())]);
        for &s in &self.config.strategies {
            let single = match reference {
                SimpsonReference::Analytic => Ok(c * f.integral(b)),
                SimpsonReference::SingleWorker => {
                    simpson_integrate::<T>(f, b, m, c, &self.plan(s, 1)).map(|v| v.to_f64())
                }
            };
            for &p in &self.config.procs {
                let plan = self.plan(s, p);
                let (res, ns) = self.timed(|| simpson_integrate::<T>(f, b, m, c, &plan));
                self.push(s.name(), p, &param, seed, |r| {
                    r.wall_ns = ns;
                    match (&res, &single) {
                        (Ok(v), Ok(reference)) => r.abs_error = Some(abs_error(v.to_f64(), *reference)),
                        (Err(e), _) | (_, Err(e)) => r.error_flag = error_flag(e).into(),
                    }
                });
            }
        }
    }

    fn lu_rows(&mut self, n: usize, diag_boost: bool, seed: u64) {
        let profile = MagnitudeProfile::ill_conditioned();
        let a: Matrix<T> = gen_matrix(n, &profile, seed, diag_boost);
        let x: Vec<T> = gen_vector(n, &profile, seed ^ LU_X_STREAM);
        let param = format_param(&[("n", n.to_string())]);
        for &s in &self.config.strategies {
            for &p in &self.config.procs {
                let plan = self.plan(s, p);
                let (res, ns) = self.timed(|| lu_factorize(&a, &plan));
                self.push(s.name(), p, &param, seed, |r| {
                    r.wall_ns = ns;
                    match res {
                        Ok(f) => r.abs_error = Some(lu_residual(&f, &a, &x).expect("shapes agree")),
                        Err(e) => r.error_flag = error_flag(&e).into(),
                    }
                });
            }
        }
    }

    fn jacobi_rows(&mut self, n: usize, delta: f64, eps: f64, max_iter: usize, seed: u64) {
        let sys = gen_jacobi_system::<T>(n, delta, seed);
        let x_true: Vec<f64> = sys.x_true.iter().map(|v| v.to_f64()).collect();
        let param = format_param(&[("n", n.to_string()), ("eps", eps.to_string())]);
        let mut outcomes: Vec<RunOutcome<T>> = Vec::new();
        for &s in &self.config.strategies {
            for &p in &self.config.procs {
                let plan = self.plan(s, p);
                let (res, ns) = self.timed(|| jacobi_solve(&sys.a, &sys.b, eps, max_iter, &plan));
                self.push(s.name(), p, &param, seed, |r| {
                    r.wall_ns = ns;
                    match &res {
                        Ok(out) => {
                            r.abs_error = Some(abs_error_vec(&out.solution, &x_true).expect("shapes agree"));
                            r.iterations = Some(out.iterations as i64);
                            if !out.converged {
                                r.error_flag = NOT_CONVERGED.into();
                            }
                        }
                        Err(e) => r.error_flag = error_flag(e).into(),
                    }
                });
                outcomes.push((s, p, res));
            }
        }
        self.gap_rows(&param, seed, &outcomes);
    }

    fn power_rows(&mut self, n: usize, d: f64, eps: f64, max_iter: usize, seed: u64) {
        let a: Matrix<T> = gen_power_matrix(n, d);
        let lambda = power_matrix_eigenvalue(n, d);
        let param = format_param(&[("n", n.to_string()), ("d", d.to_string())]);
        let mut outcomes = Vec::new();
        for &s in &self.config.strategies {
            for &p in &self.config.procs {
                let plan = self.plan(s, p);
                let (res, ns) = self.timed(|| power_method(&a, eps, max_iter, &plan));
                self.push(s.name(), p, &param, seed, |r| {
                    r.wall_ns = ns;
                    match &res {
                        Ok(out) => {
                            r.abs_error = Some(abs_error(out.eigenvalue.to_f64(), lambda));
                            r.iterations = Some(out.outcome.iterations as i64);
                            if !out.outcome.converged {
                                r.error_flag = NOT_CONVERGED.into();
                            }
                        }
                        Err(e) => r.error_flag = error_flag(e).into(),
                    }
                });
                outcomes.push((s, p, res.map(|o| o.outcome)));
            }
        }
        self.gap_rows(&param, seed, &outcomes);
    }

    /// One `gap:<strategy>` row per non-naive strategy and worker count,
    /// holding `naive − strategy` iterations.
    fn gap_rows(
        &mut self,
        param: &str,
        seed: u64,
        outcomes: &[RunOutcome<T>],
    ) {
        for (s, p, acc) in outcomes {
            if *s == SummationStrategy::Naive {
                continue;
            }
            let Some((_, _, orig)) = outcomes
                .iter()
                .find(|(os, op, _)| *os == SummationStrategy::Naive && op == p)
            else {
                continue;
            };
            let name = format!("gap:{}", s.name());
            self.push(&name, *p, param, seed, |r| match (orig, acc) {
                (Ok(o), Ok(a)) => match iteration_gap(o, a) {
                    Ok(g) => r.iterations = Some(g),
                    Err(_) => r.error_flag = NOT_CONVERGED.into(),
                },
                (Err(e), _) | (_, Err(e)) => r.error_flag = error_flag(e).into(),
            });
        }
    }

    fn matmul_rows(&mut self, n: usize, profile: &MagnitudeProfile, diag_boost: bool, seed: u64) {
        let a: Matrix<T> = gen_matrix(n, profile, seed, diag_boost);
        let b: Matrix<T> = gen_matrix(n, profile, seed ^ MATMUL_B_STREAM, diag_boost);
        let exact = exact_matmul(&a, &b).expect("square operands");
        let param = format_param(&[("n", n.to_string())]);
        for &s in &self.config.strategies {
            let single = matmul(&a, &b, &self.plan(s, 1));
            for &p in &self.config.procs {
                let plan = self.plan(s, p);
                let (res, ns) = self.timed(|| matmul(&a, &b, &plan));
                self.push(s.name(), p, &param, seed, |r| {
                    r.wall_ns = ns;
                    match (&res, &single) {
                        (Ok(c), Ok(c1)) => {
                            r.abs_error = Some(abs_error_vec(c.as_slice(), &exact).expect("shapes agree"));
                            r.repro_pct = Some(repro_pct(c, c1).expect("shapes agree"));
                        }
                        (Err(e), _) | (_, Err(e)) => r.error_flag = error_flag(e).into(),
                    }
                });
            }
        }
    }
}
