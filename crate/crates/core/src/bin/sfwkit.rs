use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use sfwkit::bench::{self, BenchConfig, DataFormat, Dataset, OutFormat, DATA_DIR_ENV};
use sfwkit::solvers::run_solver;
use sfwkit::{ConstraintSet, LossKind, RunConfig, SolverKind};

#[derive(Parser)]
#[command(name = "sfwkit", version, about = "Stochastic Frank-Wolfe for constrained finite sums")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run every solver for every seed and write traces plus summary.json.
    Run(RunArgs),
    /// Run one solver with one seed and print its trace.
    Solve(RunArgs),
    /// Run the self-check battery and print a JSON report.
    Verify {
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Print kappa, diameters and smoothness for a dataset and constraint.
    Stats(DataArgs),
}

#[derive(Args)]
struct DataArgs {
    /// Dataset path, or a synthetic spec such as `n=683,d=10,density=0.5` for `--format synth`.
    #[arg(long)]
    data: String,
    #[arg(long, default_value = "libsvm")]
    format: DataFormat,
    /// Root for relative dataset paths.
    #[arg(long, env = DATA_DIR_ENV)]
    data_dir: Option<PathBuf>,
    #[arg(long, default_value = "logistic")]
    loss: LossKind,
    #[arg(long, default_value = "l1:1")]
    constraint: ConstraintSet,
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    data: DataArgs,
    #[arg(long, value_delimiter = ',', default_value = "sfw")]
    solver: Vec<SolverKind>,
    /// Defaults to 1% of the samples.
    #[arg(long)]
    batch_size: Option<usize>,
    /// Defaults to 50 passes over the data.
    #[arg(long)]
    grad_budget: Option<u64>,
    #[arg(long, value_delimiter = ',', default_value = "0")]
    seeds: Vec<u64>,
    #[arg(long, default_value_t = 1)]
    trace_every: u64,
    #[arg(long)]
    gap_stop: Option<f64>,
    #[arg(long)]
    exact_diagnostics: bool,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, default_value = "csv")]
    out_format: OutFormat,
    /// Gradient budget of the deterministic run behind the reference optimum.
    #[arg(long, default_value_t = 1_000_000)]
    reference_budget: u64,
}

fn load(args: &DataArgs) -> sfwkit::Result<Dataset> {
    bench::load_dataset(&args.data, args.format, args.data_dir.as_deref())
}

fn run(args: RunArgs) -> sfwkit::Result<()> {
    let data = load(&args.data)?;
    let config = BenchConfig {
        loss: args.data.loss,
        constraint: args.data.constraint,
        solvers: args.solver,
        batch_size: args.batch_size,
        grad_budget: args.grad_budget.unwrap_or(50 * data.n() as u64),
        seeds: args.seeds,
        trace_every: args.trace_every,
        gap_stop: args.gap_stop,
        exact_diagnostics: args.exact_diagnostics,
        out_dir: args.out.unwrap_or_else(|| PathBuf::from("sfwkit-out")),
        out_format: args.out_format,
        reference_budget: args.reference_budget,
    };
    let summary = bench::run_benchmark(&data, &config)?;
    for r in &summary.runs {
        match (&r.error, r.final_relative_suboptimality) {
            (Some(e), _) => eprintln!("{} seed {}: failed: {e}", r.solver, r.seed),
            (None, rel) => eprintln!(
                "{} seed {}: f = {:.6e}, relative = {}",
                r.solver,
                r.seed,
                r.final_objective.unwrap_or(f64::NAN),
                rel.map_or_else(|| "n/a".to_string(), |v| format!("{v:.4e}"))
            ),
        }
    }
    eprintln!("wrote {}", config.out_dir.join("summary.json").display());
    Ok(())
}

fn solve(args: RunArgs) -> sfwkit::Result<()> {
    let data = load(&args.data)?;
    let (&[kind], &[seed]) = (args.solver.as_slice(), args.seeds.as_slice()) else {
        return Err(sfwkit::Error::Usage("solve takes exactly one solver and one seed".into()));
    };
    let problem = data.problem(args.data.loss)?;
    let b = args.batch_size.unwrap_or_else(|| bench::default_batch_size(data.n()));
    let mut cfg = RunConfig::new(kind, b, args.grad_budget.unwrap_or(50 * data.n() as u64), seed);
    cfg.trace_every = args.trace_every;
    cfg.gap_stop = args.gap_stop;
    cfg.exact_diagnostics = args.exact_diagnostics;
    let out = run_solver(&problem, &args.data.constraint, &cfg)?;
    match args.out {
        Some(dir) => {
            std::fs::create_dir_all(&dir).map_err(|e| io_err(&dir, e))?;
            let path = dir.join(format!("{kind}_seed{seed}.{}", args.out_format));
            let file = std::fs::File::create(&path).map_err(|e| io_err(&path, e))?;
            bench::write_trace(&out.rows, args.out_format, std::io::BufWriter::new(file))?;
        }
        None => bench::write_trace(&out.rows, args.out_format, std::io::stdout().lock())?,
    }
    Ok(())
}

fn io_err(path: &std::path::Path, e: std::io::Error) -> sfwkit::Error {
    sfwkit::Error::Io { path: path.to_path_buf(), source: e }
}

fn print_json<T: serde::Serialize>(value: &T) -> sfwkit::Result<()> {
    let mut out = std::io::stdout().lock();
    serde_json::to_writer_pretty(&mut out, value)?;
    writeln!(out).map_err(serde_json::Error::io)?;
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run(args) => run(args),
        Command::Solve(args) => solve(args),
        Command::Verify { seed } => {
            let report = sfwkit::verify::run_battery(seed);
            let passed = report.passed;
            match print_json(&report) {
                Ok(()) if passed => Ok(()),
                Ok(()) => return ExitCode::FAILURE,
                Err(e) => Err(e),
            }
        }
        Command::Stats(args) => load(&args).and_then(|data| print_json(&bench::stats(&data, args.loss, &args.constraint))),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("sfwkit: {e}");
            ExitCode::from(2)
        }
    }
}
