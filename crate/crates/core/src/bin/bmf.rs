//! `bmf`: exact and mean-field computations on model files.
//!
//! Exit status: 0 on success (non-converged solves included), 1 for usage
//! errors, 2 for invalid input, 3 for numerical failures.  `BMF_THREADS`
//! sets the worker thread count.

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::process::ExitCode;

use boltzmann_mf::harness::{
    self, emit, gen_random_model, read_model, run_compare, run_exact, run_meanfield, run_sweep,
    Format, ModelFile, ModelKind, Scales,
};
use boltzmann_mf::{Error, Init, SolverConfig};
use clap::{Args, Parser, Subcommand};

#[derive(Parser)]
#[command(name = "bmf", version, about = "Exact and naive mean-field Boltzmann machine computations")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Exact log-partition and first moments of a model.
    Exact {
        #[command(flatten)]
        model: ModelArgs,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Naive mean-field (e-projection) magnetizations.
    Meanfield {
        #[command(flatten)]
        model: ModelArgs,
        #[command(flatten)]
        solver: SolverArgs,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Exact moments against both projections.
    Compare {
        #[command(flatten)]
        model: ModelArgs,
        #[command(flatten)]
        solver: SolverArgs,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// `compare` over a grid of coupling rescalings.
    Sweep {
        #[command(flatten)]
        model: ModelArgs,
        #[command(flatten)]
        solver: SolverArgs,
        /// Comma-separated, strictly ascending coupling factors.
        #[arg(long, value_delimiter = ',', required = true)]
        grid: Vec<f64>,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Write a seeded random model file.
    Gen {
        #[arg(long)]
        kind: ModelKind,
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[command(flatten)]
        scales: ScaleArgs,
        /// Output path; standard output if absent.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

/// A model from `--model`, or generated from `--kind`, `--n`, `--seed` and the scales.
#[derive(Args)]
struct ModelArgs {
    #[arg(long, conflicts_with_all = ["kind", "n"])]
    model: Option<PathBuf>,
    #[arg(long, requires = "n")]
    kind: Option<ModelKind>,
    #[arg(long, requires = "kind")]
    n: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[command(flatten)]
    scales: ScaleArgs,
}

#[derive(Args)]
struct ScaleArgs {
    #[arg(long, default_value_t = 1.0)]
    scale_h: f64,
    #[arg(long, default_value_t = 0.5)]
    scale_w: f64,
    #[arg(long, default_value_t = 0.25)]
    scale_v: f64,
}

impl ScaleArgs {
    fn scales(&self) -> Scales {
        Scales {
            h: self.scale_h,
            w: self.scale_w,
            v: self.scale_v,
        }
    }
}

#[derive(Args)]
struct SolverArgs {
    #[arg(long, default_value_t = 0.5)]
    damping: f64,
    #[arg(long, default_value_t = 1e-10)]
    tol: f64,
    #[arg(long, default_value_t = 10_000)]
    max_iter: usize,
    /// Extra seeded random starts.
    #[arg(long, default_value_t = 0)]
    restarts: usize,
    /// Base seed of the random starts.
    #[arg(long, default_value_t = 0)]
    restart_seed: u64,
}

impl SolverArgs {
    fn config(&self) -> SolverConfig {
        SolverConfig {
            damping: self.damping,
            tol: self.tol,
            max_iter: self.max_iter,
            init: Init::LocalField,
            restarts: self.restarts,
            seed: self.restart_seed,
        }
    }
}

#[derive(Args)]
struct OutputArgs {
    #[arg(long, default_value = "csv")]
    format: Format,
    /// Output path; standard output if absent.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Include wall-clock times (makes output run dependent).
    #[arg(long)]
    timing: bool,
}

enum Failure {
    Usage(String),
    Lib(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Lib(e)
    }
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::NotHermitian { .. }
        | Error::NotPositive { .. }
        | Error::TraceNotOne { .. }
        | Error::DimensionMismatch { .. } => 3,
        _ => 2,
    }
}

fn load(args: &ModelArgs) -> Result<(ModelFile, BTreeMap<String, String>), Failure> {
    let model = match (&args.model, args.kind, args.n) {
        (Some(path), _, _) => read_model(path)?,
        (None, Some(kind), Some(n)) => gen_random_model(kind, n, args.scales.scales(), args.seed)?,
        _ => return Err(Failure::Usage("either --model or --kind with --n is required".into())),
    };
    let mut meta = model.metadata.clone();
    if let Some(path) = &args.model {
        meta.insert("model".into(), path.display().to_string());
    }
    Ok((model, meta))
}

fn write(out: &Option<PathBuf>, text: &str) -> Result<(), Failure> {
    match out {
        Some(path) => std::fs::write(path, text).map_err(|e| Failure::Lib(e.into())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Exact { model, output } => {
            let (m, meta) = load(&model)?;
            let r = run_exact(&m)?;
            write(&output.out, &harness::write_exact(&r, &meta, output.format)?)
        }
        Command::Meanfield {
            model,
            solver,
            output,
        } => {
            let (m, meta) = load(&model)?;
            let r = run_meanfield(&m, &solver.config())?;
            write(&output.out, &harness::write_meanfield(&r, &meta, output.format)?)
        }
        Command::Compare {
            model,
            solver,
            output,
        } => {
            let (m, meta) = load(&model)?;
            let mut r = run_compare(&m, &solver.config())?;
            if !output.timing {
                r.wall_time = None;
            }
            write(&output.out, &harness::write_reports(&[r], &meta, output.format)?)
        }
        Command::Sweep {
            model,
            solver,
            grid,
            output,
        } => {
            let (m, meta) = load(&model)?;
            let mut rs = run_sweep(&m, &grid, &solver.config())?;
            if !output.timing {
                rs.iter_mut().for_each(|r| r.wall_time = None);
            }
            write(&output.out, &harness::write_reports(&rs, &meta, output.format)?)
        }
        Command::Gen {
            kind,
            n,
            seed,
            scales,
            out,
        } => {
            let m = gen_random_model(kind, n, scales.scales(), seed)?;
            write(&out, &emit(&m))
        }
    }
}

fn configure_threads() -> Result<(), String> {
    let Ok(value) = std::env::var("BMF_THREADS") else {
        return Ok(());
    };
    let threads: usize = value
        .parse()
        .ok()
        .filter(|&t| t > 0)
        .ok_or_else(|| format!("BMF_THREADS must be a positive integer, got `{value}`"))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| e.to_string())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    if let Err(msg) = configure_threads() {
        eprintln!("error: {msg}");
        return ExitCode::from(1);
    }
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Lib(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
