//! Command-line front end: recovery benchmarks, scaling benchmarks, and
//! one-off solves on matrices from CSV files.

use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use hardthresh::dsm::{compute_dsm, BmParams, DsmModel};
use hardthresh::solvers::SolverConfig;
use hardthresh::sparsity::SparseIterate;
use hardthresh::{LeastSquares, Objective};
use hardthresh_bench::algs::{AlgorithmId, ScalingBundle};
use hardthresh_bench::config::{self, FileConfig};
use hardthresh_bench::dsm_bench::{
    dsm_records_csv, run_dsm_benchmark, trajectory_csv, trajectory_stem, DsmBenchSpec, SweepMode,
};
use hardthresh_bench::files;
use hardthresh_bench::grid::{self, termination_name, GridSpec};

/// Environment variable naming the rayon worker count.
const WORKERS_ENV: &str = "HARDTHRESH_WORKERS";

#[derive(Parser)]
#[command(
    name = "hardthresh",
    version,
    about = "Sparse-recovery solver benchmarks and one-off solves"
)]
struct Cli {
    /// TOML config file supplying defaults for any flag.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,
    /// Worker threads (default: the HARDTHRESH_WORKERS variable, then all cores).
    #[arg(long, global = true)]
    workers: Option<usize>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run a benchmark suite.
    #[command(subcommand)]
    Bench(BenchCmd),
    /// Solve one sparse least-squares instance from CSV files.
    Solve(SolveArgs),
    /// Compute a diagonal scaling for a curvature matrix from a CSV file.
    Dsm(DsmArgs),
}

#[derive(Subcommand)]
enum BenchCmd {
    /// Recovery-rate grid over sparsity levels.
    Cs(CsArgs),
    /// Cost and quality of the scaling solver across sizes.
    Dsm(DsmBenchArgs),
}

#[derive(Args)]
struct CsArgs {
    /// Measurement count (rows).
    #[arg(long)]
    m: Option<usize>,
    /// Signal dimension (columns).
    #[arg(long)]
    n: Option<usize>,
    /// Smallest sparsity level.
    #[arg(long)]
    s_min: Option<usize>,
    /// Largest sparsity level.
    #[arg(long)]
    s_max: Option<usize>,
    /// Spacing between levels.
    #[arg(long)]
    s_step: Option<usize>,
    /// Explicit comma-separated levels; overrides the range flags.
    #[arg(long, value_delimiter = ',')]
    levels: Option<Vec<usize>>,
    /// Instances per level.
    #[arg(long)]
    trials: Option<usize>,
    /// Comma-separated algorithms (see `--algs help` for names).
    #[arg(long, value_delimiter = ',')]
    algs: Option<Vec<String>>,
    /// Master seed; every cell derives its own stream from it.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory for records.csv, timings.csv, summary.json.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Iteration budget override.
    #[arg(long)]
    max_iters: Option<usize>,
    /// Suppress per-cell progress on stderr.
    #[arg(long)]
    quiet: bool,
}

#[derive(Args)]
struct DsmBenchArgs {
    /// Comma-separated signal dimensions; measurements are size/8.
    #[arg(long, value_delimiter = ',')]
    sizes: Option<Vec<usize>>,
    /// Comma-separated cost models: linear,quadratic.
    #[arg(long, value_delimiter = ',')]
    models: Option<Vec<String>>,
    /// Comma-separated sweep modes: sequential,parallel.
    #[arg(long, value_delimiter = ',')]
    modes: Option<Vec<String>>,
    #[arg(long)]
    seed: Option<u64>,
    /// Sweep budget per run.
    #[arg(long)]
    sweeps: Option<usize>,
    /// Factor rank (default: automatic).
    #[arg(long)]
    rank: Option<usize>,
    /// Output directory for dsm_records.csv and trajectory files.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SolveArgs {
    /// Measurement matrix CSV (row-major, no header).
    #[arg(long)]
    matrix: PathBuf,
    /// Right-hand-side vector CSV.
    #[arg(long)]
    rhs: PathBuf,
    /// Sparsity budget.
    #[arg(long)]
    s: usize,
    /// Algorithm name.
    #[arg(long, default_value = "gpnp-l")]
    alg: AlgorithmId,
    /// Seed for the scaling computation.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Write the solution vector here.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Write the per-iteration trajectory CSV here.
    #[arg(long)]
    trace: Option<PathBuf>,
    /// Iteration budget override.
    #[arg(long)]
    max_iters: Option<usize>,
}

#[derive(Args)]
struct DsmArgs {
    /// Cost model: linear, quadratic, or lipschitz.
    #[arg(long)]
    model: DsmModel,
    /// Symmetric curvature matrix CSV (row-major, no header).
    #[arg(long)]
    input: PathBuf,
    /// Factor rank (default: automatic).
    #[arg(long)]
    rank: Option<usize>,
    /// Sweep budget.
    #[arg(long)]
    sweeps: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Use the snapshot (parallelizable) sweep.
    #[arg(long)]
    parallel: bool,
    /// Write the weight vector here.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    let file = config::load(cli.config.as_deref())?;
    install_worker_pool(cli.workers.or(file.workers))?;
    match cli.cmd {
        Cmd::Bench(BenchCmd::Cs(args)) => bench_cs(args, &file),
        Cmd::Bench(BenchCmd::Dsm(args)) => bench_dsm(args, &file),
        Cmd::Solve(args) => solve(args, &file),
        Cmd::Dsm(args) => dsm(args),
    }
}

/// Installs a fixed-size global pool when a count is given by flag, config,
/// or environment; otherwise leaves rayon's default (all cores).
fn install_worker_pool(requested: Option<usize>) -> Result<()> {
    let from_env = match std::env::var(WORKERS_ENV) {
        Ok(v) => Some(
            v.parse::<usize>()
                .with_context(|| format!("{WORKERS_ENV} must be a positive integer, got {v:?}"))?,
        ),
        Err(_) => None,
    };
    if let Some(workers) = requested.or(from_env) {
        if workers == 0 {
            bail!("worker count must be at least 1");
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(workers)
            .build_global()
            .context("installing the worker pool")?;
    }
    Ok(())
}

fn parse_algorithms(names: &[String]) -> Result<Vec<AlgorithmId>> {
    names.iter().map(|n| n.parse()).collect()
}

fn solver_config(file: &FileConfig, max_iters: Option<usize>) -> SolverConfig {
    let mut solver = SolverConfig::default();
    if let Some(overrides) = &file.solver {
        overrides.apply(&mut solver);
    }
    if let Some(v) = max_iters {
        solver.max_iters = v;
    }
    solver
}

fn bench_cs(args: CsArgs, file: &FileConfig) -> Result<()> {
    let sparsity_levels = match args.levels.or_else(|| file.levels.clone()) {
        Some(levels) => levels,
        None => {
            let s_min = config::pick(args.s_min, file.s_min, 5);
            let s_max = config::pick(args.s_max, file.s_max, 35);
            let s_step = config::pick(args.s_step, file.s_step, 5);
            if s_step == 0 {
                bail!("--s-step must be at least 1");
            }
            if s_min > s_max {
                bail!("--s-min {s_min} exceeds --s-max {s_max}");
            }
            (s_min..=s_max).step_by(s_step).collect()
        }
    };
    let alg_names = args
        .algs
        .or_else(|| file.algs.clone())
        .unwrap_or_else(|| vec!["gpnp-l".into(), "gpnp-dql".into()]);
    let spec = GridSpec {
        m: config::pick(args.m, file.m, 64),
        n: config::pick(args.n, file.n, 256),
        sparsity_levels,
        trials: config::pick(args.trials, file.trials, 50),
        algorithms: parse_algorithms(&alg_names)?,
        master_seed: config::pick(args.seed, file.seed, 7),
        solver: solver_config(file, args.max_iters),
        progress: !args.quiet,
    };
    let out_dir = config::pick(args.out, file.out.clone(), PathBuf::from("results"));

    let results = grid::run_grid(&spec)?;
    files::write_text(&out_dir.join("records.csv"), &grid::records_csv(&results.records))?;
    files::write_text(&out_dir.join("timings.csv"), &grid::timings_csv(&results.timings))?;
    files::write_text(&out_dir.join("summary.json"), &grid::summary_json(&spec, &results.records)?)?;

    println!("recovery rate (% of {} trials), {}x{}:", spec.trials, spec.m, spec.n);
    print!("{:>12}", "algorithm");
    for &s in &spec.sparsity_levels {
        print!("{s:>8}");
    }
    println!();
    for &alg in &spec.algorithms {
        print!("{:>12}", alg.name());
        for &s in &spec.sparsity_levels {
            print!("{:>8.1}", grid::recovery_rate(&results.records, alg, s));
        }
        println!();
    }
    println!("files written to {}", out_dir.display());
    Ok(())
}

fn bench_dsm(args: DsmBenchArgs, file: &FileConfig) -> Result<()> {
    let models = match args.models {
        Some(names) => names
            .iter()
            .map(|n| n.parse::<DsmModel>().map_err(anyhow::Error::from))
            .collect::<Result<Vec<_>>>()?,
        None => vec![DsmModel::Linear, DsmModel::Quadratic],
    };
    let modes = match args.modes {
        Some(names) => names
            .iter()
            .map(|n| match n.as_str() {
                "sequential" => Ok(SweepMode::Sequential),
                "parallel" => Ok(SweepMode::Parallel),
                other => bail!("unknown sweep mode {other:?}; expected sequential or parallel"),
            })
            .collect::<Result<Vec<_>>>()?,
        None => vec![SweepMode::Sequential, SweepMode::Parallel],
    };
    let mut params = BmParams { seed: config::pick(args.seed, file.seed, 0), ..BmParams::default() };
    if let Some(sweeps) = args.sweeps {
        params.sweeps = sweeps;
    }
    params.rank = args.rank.or(params.rank);
    let spec = DsmBenchSpec {
        sizes: args.sizes.or_else(|| file.sizes.clone()).unwrap_or_else(|| vec![250, 500]),
        models,
        modes,
        seed: params.seed,
        params,
    };
    let out_dir = config::pick(args.out, file.out.clone(), PathBuf::from("results"));

    let results = run_dsm_benchmark(&spec)?;
    files::write_text(&out_dir.join("dsm_records.csv"), &dsm_records_csv(&results.records))?;
    for rec in &results.records {
        let name = format!("{}.csv", trajectory_stem(rec));
        files::write_text(&out_dir.join(&name), &trajectory_csv(rec))?;
        println!(
            "n={} model={} mode={}: sweeps={} gap={:.3e} wall={:.1}ms",
            rec.n, rec.model, rec.mode, rec.sweeps, rec.gap, rec.wall_millis
        );
    }
    for (n, err) in &results.failures {
        eprintln!("size {n} failed: {err}");
    }
    if results.records.is_empty() {
        bail!("every size failed");
    }
    println!("files written to {}", out_dir.display());
    Ok(())
}

fn solve(args: SolveArgs, file: &FileConfig) -> Result<()> {
    let a = files::read_matrix_csv(&args.matrix)?;
    let b = files::read_vector_csv(&args.rhs)?;
    let n = a.cols();
    if args.s > n.min(a.rows()) {
        bail!("sparsity {} exceeds min({}, {})", args.s, a.rows(), n);
    }
    let model = LeastSquares::new(a, b).context("building the least-squares model")?;
    let bundle = ScalingBundle::prepare(&model, &[args.alg], args.seed)?;
    let x0 = SparseIterate::zeros(n, args.s);
    let solver = solver_config(file, args.max_iters);
    let trace = args.alg.run(&model, &x0, &bundle, &solver);

    let x = trace.final_point();
    let report = serde_json::json!({
        "algorithm": args.alg.name(),
        "s": args.s,
        "f": trace.final_f(),
        "residual": model.residual_norm(x.x()),
        "iterations": trace.iters(),
        "termination": termination_name(trace.termination),
        "support": x.support().as_slice(),
    });
    println!("{}", serde_json::to_string_pretty(&report)?);
    if let Some(out) = &args.out {
        files::write_vector_csv(out, x.x())?;
    }
    if let Some(path) = &args.trace {
        files::write_text(path, &trace.to_csv_string())?;
    }
    Ok(())
}

fn dsm(args: DsmArgs) -> Result<()> {
    let c = files::read_matrix_csv(&args.input)?;
    let mut params = BmParams { seed: args.seed, parallel: args.parallel, ..BmParams::default() };
    if let Some(sweeps) = args.sweeps {
        params.sweeps = sweeps;
    }
    params.rank = args.rank.or(params.rank);
    let solution = compute_dsm(&c, args.model, &params)?;
    println!("{}", serde_json::to_string_pretty(&solution)?);
    if let Some(out) = &args.out {
        files::write_vector_csv(out, &solution.w)?;
    }
    Ok(())
}
