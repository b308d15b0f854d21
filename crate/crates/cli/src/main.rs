use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use tensorpca::extensions::PartialSymmetricTensor;
use tensorpca::{GeneralTensor, Method, SolverConfig, SuperSymmetricTensor};
use tensorpca_cli::experiment::{run_experiment, to_csv, Distribution, ExperimentSpec, Family};
use tensorpca_cli::format::{read_tensor, write_tensor, TensorData};
use tensorpca_cli::solve::{oracle_tensor, solve_tensor};
use thiserror::Error;

#[derive(Debug, Error)]
enum CliError {
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("{path}: {source}")]
    Parse {
        path: String,
        source: tensorpca_cli::format::ParseError,
    },
    #[error(transparent)]
    Solver(#[from] tensorpca::Error),
    #[error("{0}")]
    Usage(String),
}

#[derive(Parser)]
#[command(
    name = "tensorpca",
    version,
    about = "Leading principal components of symmetric tensors via convex relaxation"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve for the leading component of the tensor in FILE.
    ///
    /// Exit status: 0 when the relaxation certified a global solution,
    /// 2 when the result came from the local fallback, 1 on error.
    Solve {
        file: PathBuf,
        #[arg(long, value_enum, default_value_t = MethodArg::Nnp)]
        method: MethodArg,
        #[command(flatten)]
        solver: SolverArgs,
        /// Print a JSON report instead of plain text.
        #[arg(long)]
        json: bool,
    },
    /// Write a random tensor file.
    Gen {
        #[arg(long, value_enum, default_value_t = KindArg::SuperSymmetric)]
        kind: KindArg,
        /// Dimension (first dimension for partial_symmetric).
        #[arg(long)]
        n: Option<usize>,
        /// Second dimension for partial_symmetric.
        #[arg(long)]
        m: Option<usize>,
        #[arg(long, default_value_t = 4)]
        order: usize,
        /// Comma-separated dimensions for general tensors.
        #[arg(long, value_delimiter = ',')]
        dims: Vec<usize>,
        #[arg(long, value_enum, default_value_t = DistArg::Gaussian)]
        dist: DistArg,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Output path; standard output when omitted.
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Run a batch of random instances and print a CSV summary.
    Experiment {
        #[arg(long, value_enum, default_value_t = FamilyArg::SuperSymmetric)]
        family: FamilyArg,
        /// Comma-separated list of dimensions; one block of rows per value.
        #[arg(long, value_delimiter = ',', required = true)]
        n: Vec<usize>,
        /// Second dimension for the biquadratic family.
        #[arg(long)]
        m: Option<usize>,
        #[arg(long, default_value_t = 4)]
        order: usize,
        #[arg(long, value_enum, default_value_t = DistArg::Gaussian)]
        dist: DistArg,
        #[arg(long, value_enum, value_delimiter = ',', default_values_t = [MethodArg::Nnp, MethodArg::Sdp])]
        methods: Vec<MethodArg>,
        #[arg(long, default_value_t = 100)]
        trials: usize,
        /// Trial i uses seed `seed + i`.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Compare each solve with a brute-force reference value.
        #[arg(long)]
        oracle: bool,
        /// Worker threads; all available cores when unset.
        #[arg(long, env = "TENSORPCA_THREADS")]
        threads: Option<usize>,
        #[command(flatten)]
        solver: SolverArgs,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Brute-force reference maximum of the form in FILE.
    Oracle {
        file: PathBuf,
        /// Grid points per angle.
        #[arg(long)]
        resolution: Option<usize>,
        /// Local-search restarts when the dimension is too large for a grid.
        #[arg(long, default_value_t = 50)]
        restarts: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        json: bool,
    },
}

#[derive(Args)]
struct SolverArgs {
    #[arg(long, default_value_t = 10.0)]
    rho: f64,
    #[arg(long, default_value_t = 0.5)]
    mu: f64,
    #[arg(long, default_value_t = 1e-6)]
    tol: f64,
    #[arg(long, default_value_t = 50_000)]
    max_iter: usize,
    #[arg(long, default_value_t = 1e-6)]
    rank_tol: f64,
    /// Seed for the fallback restarts.
    #[arg(long = "solver-seed", default_value_t = 0)]
    solver_seed: u64,
}

impl SolverArgs {
    fn config(&self) -> SolverConfig {
        SolverConfig {
            rho: self.rho,
            mu: self.mu,
            tol: self.tol,
            max_iter: self.max_iter,
            rank_tol: self.rank_tol,
            seed: self.solver_seed,
            record_history: false,
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum MethodArg {
    Nnp,
    Sdp,
}

impl From<MethodArg> for Method {
    fn from(m: MethodArg) -> Method {
        match m {
            MethodArg::Nnp => Method::Nnp,
            MethodArg::Sdp => Method::Sdp,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum KindArg {
    SuperSymmetric,
    General,
    PartialSymmetric,
}

#[derive(Clone, Copy, ValueEnum)]
enum DistArg {
    Gaussian,
    Uniform,
}

impl From<DistArg> for Distribution {
    fn from(d: DistArg) -> Distribution {
        match d {
            DistArg::Gaussian => Distribution::Gaussian,
            DistArg::Uniform => Distribution::Uniform,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum FamilyArg {
    SuperSymmetric,
    Biquadratic,
}

fn read_file(path: &Path) -> Result<TensorData, CliError> {
    let text = std::fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.display().to_string(),
        source,
    })?;
    read_tensor(&text).map_err(|source| CliError::Parse {
        path: path.display().to_string(),
        source,
    })
}

fn emit(output: Option<&Path>, text: &str) -> Result<(), CliError> {
    match output {
        Some(p) => std::fs::write(p, text).map_err(|source| CliError::Io {
            path: p.display().to_string(),
            source,
        }),
        None => {
            use std::io::Write;
            match std::io::stdout().lock().write_all(text.as_bytes()) {
                Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => Err(CliError::Io {
                    path: "<stdout>".into(),
                    source: e,
                }),
                _ => Ok(()),
            }
        }
    }
}

fn fmt_vec(v: &[f64]) -> String {
    let parts: Vec<String> = v.iter().map(|x| format!("{x:.8}")).collect();
    format!("[{}]", parts.join(", "))
}

fn generate(
    kind: KindArg,
    n: Option<usize>,
    m: Option<usize>,
    order: usize,
    dims: Vec<usize>,
    dist: DistArg,
    seed: u64,
) -> Result<TensorData, CliError> {
    let need =
        |v: Option<usize>, name: &str| v.ok_or_else(|| CliError::Usage(format!("--{name} is required for this kind")));
    let uniform = matches!(dist, DistArg::Uniform);
    Ok(match kind {
        KindArg::SuperSymmetric => {
            let n = need(n, "n")?;
            TensorData::SuperSymmetric(if uniform {
                SuperSymmetricTensor::random_uniform(n, order, seed)?
            } else {
                SuperSymmetricTensor::random_gaussian(n, order, seed)?
            })
        }
        KindArg::General => {
            if dims.is_empty() {
                return Err(CliError::Usage("--dims is required for general tensors".into()));
            }
            TensorData::General(if uniform {
                GeneralTensor::random_uniform(dims, seed)?
            } else {
                GeneralTensor::random_gaussian(dims, seed)?
            })
        }
        KindArg::PartialSymmetric => {
            let (n, m) = (need(n, "n")?, need(m, "m")?);
            TensorData::PartialSymmetric(if uniform {
                PartialSymmetricTensor::symmetrize(&GeneralTensor::random_uniform(vec![n, m, n, m], seed)?)?
            } else {
                PartialSymmetricTensor::random_gaussian(n, m, seed)?
            })
        }
    })
}

fn run(cli: Cli) -> Result<ExitCode, CliError> {
    match cli.command {
        Command::Solve {
            file,
            method,
            solver,
            json,
        } => {
            let t = read_file(&file)?;
            let cfg = solver.config();
            cfg.validate()?;
            let out = solve_tensor(&t, method.into(), &cfg)?;
            let mut text = String::new();
            if json {
                text = serde_json::to_string_pretty(&out).expect("report serializes") + "\n";
            } else {
                let _ = writeln!(text, "kind        {}", out.kind);
                let _ = writeln!(text, "route       {}", out.route);
                let _ = writeln!(text, "method      {}", out.method);
                let _ = writeln!(text, "lambda      {:.10}", out.lambda);
                for (i, x) in out.x.iter().enumerate() {
                    let _ = writeln!(text, "x[{i}]        {}", fmt_vec(x));
                }
                let _ = writeln!(text, "certified   {}", out.certified);
                let _ = writeln!(text, "iterations  {}", out.iterations);
                let _ = writeln!(text, "converged   {}", out.converged);
                if let Some(r) = out.rank_one_ratio {
                    let _ = writeln!(text, "rank ratio  {r:.3e}");
                }
                if let Some(o) = out.relaxation_objective {
                    let _ = writeln!(text, "relaxation  {o:.10}");
                }
            }
            emit(None, &text)?;
            Ok(if out.certified {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(2)
            })
        }
        Command::Gen {
            kind,
            n,
            m,
            order,
            dims,
            dist,
            seed,
            output,
        } => {
            let t = generate(kind, n, m, order, dims, dist, seed)?;
            emit(output.as_deref(), &write_tensor(&t))?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Experiment {
            family,
            n,
            m,
            order,
            dist,
            methods,
            trials,
            seed,
            oracle,
            threads,
            solver,
            output,
        } => {
            let mut builder = rayon::ThreadPoolBuilder::new();
            if let Some(t) = threads {
                builder = builder.num_threads(t);
            }
            let pool = builder.build().map_err(|e| CliError::Usage(e.to_string()))?;
            let mut rows = Vec::new();
            for &n in &n {
                let fam = match family {
                    FamilyArg::SuperSymmetric => Family::SuperSymmetric { n, order },
                    FamilyArg::Biquadratic => Family::Biquadratic {
                        n,
                        m: m.ok_or_else(|| CliError::Usage("--m is required for the biquadratic family".into()))?,
                    },
                };
                let spec = ExperimentSpec {
                    family: fam,
                    dist: dist.into(),
                    methods: methods.iter().map(|&m| m.into()).collect(),
                    trials,
                    seed_base: seed,
                    cfg: solver.config(),
                    oracle,
                };
                rows.extend(pool.install(|| run_experiment(&spec))?);
            }
            emit(output.as_deref(), &to_csv(&rows))?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Oracle {
            file,
            resolution,
            restarts,
            seed,
            json,
        } => {
            let t = read_file(&file)?;
            let out = oracle_tensor(&t, resolution, restarts, seed)?;
            let mut text = String::new();
            if json {
                text = serde_json::to_string_pretty(&out).expect("report serializes") + "\n";
            } else {
                let _ = writeln!(text, "strategy    {}", out.strategy);
                let _ = writeln!(text, "value       {:.10}", out.value);
                for (i, x) in out.argmax.iter().enumerate() {
                    let _ = writeln!(text, "x[{i}]        {}", fmt_vec(x));
                }
            }
            emit(None, &text)?;
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
