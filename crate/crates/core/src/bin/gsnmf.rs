use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use gsnmf::bench::{
    emit_figure_data, log_space, run_single, run_sweep, Algorithm, Generator, RankSpec, RunOptions,
    SolverParams, SweepConfig,
};
use gsnmf::datagen::{
    example1_matrix, gen_fully_random, gen_middle_point, read_truth, write_instance,
};
use gsnmf::decomposition::{
    accuracy, assemble_factors, distance_to_ground_truth, fit_weights_default, read_decomposition,
    write_decomposition,
};
use gsnmf::fgm::lambda_tilde_grid;
use gsnmf::io::{read_matrix, write_matrix};
use gsnmf::matrix::{sinkhorn_scale, SINKHORN_MAX_ITER, SINKHORN_TOL};
use gsnmf::{GsError, IndexSets};

#[derive(Parser)]
#[command(name = "gsnmf", version, about = "Generalized separable NMF")]
struct Cli {
    /// Worker threads for sweeps (defaults to all cores).
    #[arg(long, env = "GSNMF_WORKERS", global = true)]
    workers: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic instance into a directory.
    Synth(SynthArgs),
    /// Run one algorithm on a matrix file.
    Run(RunArgs),
    /// Noise sweep with repeated trials; writes plot-ready CSVs.
    Sweep(SweepArgs),
    /// Equilibrate a matrix (row sums n, column sums m by default).
    Scale(ScaleArgs),
    /// Score index sets or a saved decomposition against a matrix.
    Metrics(MetricsArgs),
}

#[derive(Args)]
struct SolverArgs {
    #[arg(long, default_value_t = 0.25)]
    lambda_tilde: f64,
    #[arg(long, default_value_t = 1e-4)]
    delta: f64,
    #[arg(long, default_value_t = 1000)]
    max_iter: usize,
}

impl SolverArgs {
    fn params(&self) -> SolverParams {
        SolverParams {
            lambda_tilde: self.lambda_tilde,
            delta: self.delta,
            max_iter: self.max_iter,
            ..SolverParams::default()
        }
    }
}

#[derive(Args)]
struct SynthArgs {
    /// fully-random, middle-point or example1.
    #[arg(long, default_value = "fully-random")]
    generator: String,
    #[arg(long, default_value_t = 60)]
    m: usize,
    #[arg(long, default_value_t = 60)]
    n: usize,
    #[arg(long, default_value_t = 10)]
    r1: usize,
    #[arg(long, default_value_t = 10)]
    r2: usize,
    /// Noise level ε.
    #[arg(long, default_value_t = 0.0)]
    eps: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct RunArgs {
    /// Matrix file (CSV, or MatrixMarket with .mtx/.mm).
    input: PathBuf,
    #[arg(long, default_value = "gspa")]
    algo: Algorithm,
    /// Total rank, for algorithms that do not need a split.
    #[arg(long, conflicts_with_all = ["r1", "r2"])]
    rank: Option<usize>,
    #[arg(long, requires = "r2")]
    r1: Option<usize>,
    #[arg(long, requires = "r1")]
    r2: Option<usize>,
    /// GS-FGM: try 10 log-spaced λ̃ in [1e-3, 10] and keep the best fit.
    #[arg(long)]
    lambda_grid: bool,
    #[arg(long)]
    no_scale: bool,
    /// NMF initialization seed.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[command(flatten)]
    solver: SolverArgs,
    /// Directory for report.json and the fitted decomposition.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SweepArgs {
    #[arg(long, default_value = "fully-random")]
    generator: Generator,
    #[arg(long, default_value_t = 60)]
    m: usize,
    #[arg(long, default_value_t = 60)]
    n: usize,
    #[arg(long, default_value_t = 10)]
    r1: usize,
    #[arg(long, default_value_t = 10)]
    r2: usize,
    /// Comma-separated ε values (default: 20 log-spaced in [1e-3, 1]).
    #[arg(long, value_delimiter = ',')]
    eps_grid: Option<Vec<f64>>,
    #[arg(long, default_value_t = 25)]
    trials: usize,
    /// Comma-separated algorithms (default: all).
    #[arg(long, value_delimiter = ',')]
    algo: Option<Vec<Algorithm>>,
    /// Base seed of the per-trial seed chain.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[command(flatten)]
    solver: SolverArgs,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct ScaleArgs {
    input: PathBuf,
    /// Target column sum (default: number of rows).
    #[arg(long)]
    k1: Option<f64>,
    /// Target row sum (default: number of columns).
    #[arg(long)]
    k2: Option<f64>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct MetricsArgs {
    input: PathBuf,
    /// 1-based column indices.
    #[arg(long, value_delimiter = ',', conflicts_with = "decomposition")]
    cols: Vec<usize>,
    /// 1-based row indices.
    #[arg(long, value_delimiter = ',', conflicts_with = "decomposition")]
    rows: Vec<usize>,
    /// Decomposition JSON written by `run --out`.
    #[arg(long)]
    decomposition: Option<PathBuf>,
    /// Instance directory written by `synth`, for accuracy and distance.
    #[arg(long)]
    truth: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Synth(a) => synth(a),
        Command::Run(a) => run(a),
        Command::Sweep(a) => sweep(a, cli.workers),
        Command::Scale(a) => scale(a),
        Command::Metrics(a) => metrics(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                GsError::Parse(_) | GsError::EmptyMatrix | GsError::Csv(_) => ExitCode::from(2),
                _ => ExitCode::FAILURE,
            }
        }
    }
}

fn synth(a: SynthArgs) -> gsnmf::Result<()> {
    if a.generator == "example1" {
        fs::create_dir_all(&a.out)?;
        let eps = if a.eps > 0.0 { a.eps } else { 1e-3 };
        let (m, _) = example1_matrix(eps);
        let path = a.out.join("matrix.csv");
        write_matrix(&path, m.as_array())?;
        println!("wrote {}", path.display());
        return Ok(());
    }
    let inst = match a.generator.parse::<Generator>()? {
        Generator::FullyRandom => gen_fully_random(a.m, a.n, a.r1, a.r2, a.eps, a.seed)?,
        Generator::MiddlePoint => gen_middle_point(a.eps, a.seed)?,
    };
    write_instance(&a.out, &inst)?;
    println!(
        "wrote {}x{} instance to {} (truth {})",
        inst.m.rows(),
        inst.m.cols(),
        a.out.display(),
        inst.truth.sets.one_based()
    );
    Ok(())
}

fn run(a: RunArgs) -> gsnmf::Result<()> {
    let m = read_matrix(&a.input)?;
    let ranks = match (a.rank, a.r1, a.r2) {
        (Some(r), _, _) => RankSpec::Total(r),
        (None, Some(r1), Some(r2)) => RankSpec::Split(r1, r2),
        _ => return Err(GsError::InvalidArgument("give --rank or --r1/--r2".into())),
    };
    let opts = RunOptions {
        scale: !a.no_scale,
        solver: a.solver.params(),
        seed: a.seed,
        lambda_grid: a.lambda_grid.then(lambda_tilde_grid),
    };
    let (dec, report) = run_single(&m, a.algo, ranks, &opts)?;
    if let Some(dec) = &dec {
        println!("{}", dec.sets.one_based());
    }
    println!("relative error: {:.6e}", report.relative_error);
    println!("time: {:.3} s", report.wall_time_seconds);
    if let Some(dir) = &a.out {
        fs::create_dir_all(dir)?;
        fs::write(
            dir.join("report.json"),
            serde_json::to_string_pretty(&report)?,
        )?;
        if let Some(dec) = &dec {
            write_decomposition(dir, "decomposition", dec)?;
        }
    }
    Ok(())
}

fn sweep(a: SweepArgs, workers: Option<usize>) -> gsnmf::Result<()> {
    let base = match a.generator {
        Generator::FullyRandom => SweepConfig::default(),
        Generator::MiddlePoint => SweepConfig::middle_point(),
    };
    let cfg = SweepConfig {
        m: if a.generator == Generator::FullyRandom {
            a.m
        } else {
            base.m
        },
        n: if a.generator == Generator::FullyRandom {
            a.n
        } else {
            base.n
        },
        r1: if a.generator == Generator::FullyRandom {
            a.r1
        } else {
            base.r1
        },
        r2: if a.generator == Generator::FullyRandom {
            a.r2
        } else {
            base.r2
        },
        noise_levels: a.eps_grid.unwrap_or_else(|| log_space(1e-3, 1.0, 20)),
        trials: a.trials,
        algorithms: a.algo.unwrap_or_else(|| Algorithm::ALL.to_vec()),
        base_seed: a.seed,
        solver: a.solver.params(),
        ..base
    };
    let records = run_sweep(&cfg, workers)?;
    let failed = records.iter().filter(|r| r.failed()).count();
    emit_figure_data(&records, Some(&cfg), &a.out)?;
    println!(
        "{} records ({failed} failed) written to {}",
        records.len(),
        a.out.display()
    );
    Ok(())
}

fn scale(a: ScaleArgs) -> gsnmf::Result<()> {
    let m = read_matrix(&a.input)?;
    let k1 = a.k1.unwrap_or(m.rows() as f64);
    let k2 = a.k2.unwrap_or(m.cols() as f64);
    let res = sinkhorn_scale(&m, k1, k2, SINKHORN_TOL, SINKHORN_MAX_ITER)?;
    if !res.converged {
        return Err(GsError::NotScalable(format!(
            "no convergence after {} iterations",
            res.iterations
        )));
    }
    write_matrix(&a.out, res.scaled.as_array())?;
    println!(
        "scaled in {} iterations, wrote {}",
        res.iterations,
        a.out.display()
    );
    Ok(())
}

fn to_zero_based(idx: &[usize], what: &str) -> gsnmf::Result<Vec<usize>> {
    idx.iter()
        .map(|&i| {
            i.checked_sub(1)
                .ok_or_else(|| GsError::InvalidArgument(format!("{what} indices are 1-based")))
        })
        .collect()
}

fn metrics(a: MetricsArgs) -> gsnmf::Result<()> {
    let m = read_matrix(&a.input)?;
    let dec = match &a.decomposition {
        Some(path) => read_decomposition(path)?,
        None => {
            let sets = IndexSets::new(
                to_zero_based(&a.cols, "column")?,
                to_zero_based(&a.rows, "row")?,
            )?;
            fit_weights_default(&m, &sets)?
        }
    };
    println!("{}", dec.sets.one_based());
    println!(
        "relative error: {:.6e}",
        gsnmf::decomposition::relative_error(&m, &dec)?
    );
    if let Some(dir) = &a.truth {
        let truth = read_truth(Path::new(dir))?;
        println!("accuracy: {:.6}", accuracy(&dec.sets, &truth.sets)?);
        let (w, h) = assemble_factors(&m, &dec);
        if w.ncols() == truth.rank() {
            println!(
                "distance: {:.6e}",
                distance_to_ground_truth(w.view(), h.view(), &truth)?
            );
        }
    }
    Ok(())
}
