use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use fokker_planck::cli::{
    cmd_certify, cmd_convergence, cmd_run, ProblemSource, RunConfig, StopChoice, DEFAULT_CELLS,
    DEFAULT_MAX_STEPS, OUT_ENV,
};
use fokker_planck::config::ConfigFile;
use fokker_planck::convergence::TABLE_POINTS;
use fokker_planck::problem::{AccuracySource, Model};
use fokker_planck::simulate::Entropy;
use fokker_planck::{Error, Order, Result};

#[derive(Parser)]
#[command(name = "fokker-planck", version, about = "Structure-preserving Fokker-Planck solver")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Time-step a problem and write fields, trace, certificate and summary.
    Run(ProblemArgs),
    /// Grid-refinement study against the manufactured solution.
    Convergence(ConvergenceArgs),
    /// Print the monotonicity certificate of a problem's system matrix.
    Certify(ProblemArgs),
}

#[derive(Args)]
struct ProblemArgs {
    /// Catalog problem: accuracy, smile, cross, uniform.
    #[arg(long, conflicts_with = "table")]
    problem: Option<String>,
    /// Tabulated problem (CSV with x,y,M,u,v,rho0 or x,M,u,rho0).
    #[arg(long)]
    table: Option<PathBuf>,
    /// 1 (prescribed measure) or 2 (general drift).
    #[arg(long)]
    model: Option<String>,
    /// Scheme order: 2 or 4.
    #[arg(long)]
    order: Option<u32>,
    /// Cells per axis.
    #[arg(long)]
    cells: Option<usize>,
    #[arg(long)]
    dt: Option<f64>,
    #[arg(long = "t-final", conflicts_with = "steady")]
    t_final: Option<f64>,
    /// Run until the density stops changing.
    #[arg(long)]
    steady: bool,
    /// Step cap for --steady.
    #[arg(long = "max-steps")]
    max_steps: Option<usize>,
    /// Output directory (default: $FOKKER_PLANCK_OUT, else ./output).
    #[arg(long)]
    out: Option<PathBuf>,
    /// chi2 or kl.
    #[arg(long)]
    entropy: Option<String>,
    /// Also compute the dense inverse (at most 4096 unknowns).
    #[arg(long)]
    oracle: bool,
    /// Dimension of the uniform problem.
    #[arg(long)]
    dimension: Option<usize>,
    #[arg(long)]
    diffusion: Option<f64>,
    #[arg(long = "snapshot-every")]
    snapshot_every: Option<usize>,
    /// Source of the accuracy problem: conservative or advective.
    #[arg(long)]
    source: Option<String>,
    /// key = value file; flags win on conflict.
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args)]
struct ConvergenceArgs {
    #[arg(long, default_value_t = 2)]
    order: u32,
    /// Points per axis, comma separated.
    #[arg(long, value_delimiter = ',')]
    points: Option<Vec<usize>>,
    #[arg(long = "t-final", default_value_t = 1.0)]
    t_final: f64,
    #[arg(long, default_value = "conservative")]
    source: String,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn out_dir(flag: Option<PathBuf>, file: Option<PathBuf>) -> PathBuf {
    flag.or_else(|| std::env::var_os(OUT_ENV).map(PathBuf::from))
        .or(file)
        .unwrap_or_else(|| PathBuf::from("output"))
}

fn resolve(args: ProblemArgs) -> Result<RunConfig> {
    let file = match &args.config {
        Some(p) => ConfigFile::load(p)?,
        None => ConfigFile::default(),
    };
    let problem = match (args.problem, args.table) {
        (Some(name), _) => ProblemSource::Catalog(name),
        (None, Some(path)) => ProblemSource::Table(path),
        (None, None) => match (file.get_str("problem"), file.get_str("table")) {
            (Some(name), _) => ProblemSource::Catalog(name.to_string()),
            (None, Some(path)) => ProblemSource::Table(PathBuf::from(path)),
            (None, None) => return Err(Error::Config("give --problem or --table".into())),
        },
    };
    let out = out_dir(args.out, file.get::<PathBuf>("out")?);
    let mut cfg = RunConfig::new(problem, out);
    if let Some(m) = file.pick(args.model, "model")? {
        cfg.model = Some(Model::parse(&m)?);
    }
    if let Some(o) = file.pick(args.order, "order")? {
        cfg.order = Order::from_u32(o)?;
    }
    cfg.cells = file.pick(args.cells, "cells")?.unwrap_or(DEFAULT_CELLS);
    cfg.dt = file.pick(args.dt, "dt")?;
    let steady = file.switch(args.steady, "steady")?;
    let t_final = file.pick(args.t_final, "t_final")?;
    cfg.stop = if steady && args.t_final.is_none() {
        StopChoice::Steady {
            max_steps: file.pick(args.max_steps, "max_steps")?.unwrap_or(DEFAULT_MAX_STEPS),
        }
    } else {
        StopChoice::FinalTime(t_final)
    };
    if let Some(e) = file.pick(args.entropy, "entropy")? {
        cfg.entropy = Entropy::parse(&e)?;
    }
    cfg.oracle = file.switch(args.oracle, "oracle")?;
    cfg.dimension = file.pick(args.dimension, "dimension")?.unwrap_or(2);
    cfg.diffusion = file.pick(args.diffusion, "diffusion")?;
    cfg.snapshot_every = file.pick(args.snapshot_every, "snapshot_every")?.unwrap_or(0);
    if let Some(s) = file.pick(args.source, "source")? {
        cfg.source = AccuracySource::parse(&s)?;
    }
    Ok(cfg)
}

fn execute(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Run(args) => {
            let cfg = resolve(args)?;
            let s = cmd_run(&cfg)?;
            println!(
                "{} steps to t = {:.6}; max mass drift {:.3e}; min density {:.6e}; verdict {}",
                s.steps, s.final_time, s.max_mass_drift, s.min_density, s.report.verdict
            );
            println!("output written to {}", cfg.out.display());
        }
        Command::Certify(args) => {
            let cfg = resolve(args)?;
            let report = cmd_certify(&cfg)?;
            print!("{}", report.to_text());
        }
        Command::Convergence(args) => {
            let order = Order::from_u32(args.order)?;
            let points = args.points.unwrap_or_else(|| TABLE_POINTS.to_vec());
            let source = AccuracySource::parse(&args.source)?;
            let out = out_dir(args.out, None);
            let rows = cmd_convergence(order, &points, args.t_final, source, &out)?;
            println!("{:>5} {:>12} {:>8} {:>12} {:>8}", "N", "l2", "order", "linf", "order");
            let fmt = |o: Option<f64>| o.map_or_else(|| "-".to_string(), |v| format!("{v:.2}"));
            for r in rows {
                println!(
                    "{:>5} {:>12.3e} {:>8} {:>12.3e} {:>8}",
                    r.points,
                    r.l2_error,
                    fmt(r.l2_order),
                    r.linf_error,
                    fmt(r.linf_order)
                );
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
