//! Subcommand implementations behind the `fokker-planck` binary.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use crate::assembly::assemble;
use crate::convergence::{convergence_study, write_csv, ConvergenceRow};
use crate::error::{Error, Result};
use crate::grid::{Grid, Order};
use crate::krylov::SolveOptions;
use crate::monotonicity::{certify, MonotonicityReport};
use crate::problem::{catalog, load_table, sample, AccuracySource, Model, ProblemSpec, SampledFields, CATALOG};
use crate::simulate::{mass, run_with_observer, Entropy, RunTrace, State, StopRule};

/// Environment variable overriding the output directory when `--out` is absent.
pub const OUT_ENV: &str = "FOKKER_PLANCK_OUT";
pub const DEFAULT_CELLS: usize = 32;
pub const DEFAULT_MAX_STEPS: usize = 100_000;

#[derive(Clone, Debug, PartialEq)]
pub enum ProblemSource {
    Catalog(String),
    /// CSV with `x,y,M,u,v,rho0` (2D) or `x,M,u,rho0` (1D).
    Table(PathBuf),
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum StopChoice {
    /// Final time; `None` uses the problem's own.
    FinalTime(Option<f64>),
    Steady { max_steps: usize },
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub problem: ProblemSource,
    pub model: Option<Model>,
    pub order: Order,
    /// Ignored for tables, whose size fixes the grid.
    pub cells: usize,
    pub dt: Option<f64>,
    pub stop: StopChoice,
    pub out: PathBuf,
    pub entropy: Entropy,
    pub oracle: bool,
    pub dimension: usize,
    pub diffusion: Option<f64>,
    /// Write a field snapshot every this many steps (0: first and last only).
    pub snapshot_every: usize,
    pub source: AccuracySource,
}

impl RunConfig {
    pub fn new(problem: ProblemSource, out: PathBuf) -> Self {
        RunConfig {
            problem,
            model: None,
            order: Order::Second,
            cells: DEFAULT_CELLS,
            dt: None,
            stop: StopChoice::FinalTime(None),
            out,
            entropy: Entropy::Chi2,
            oracle: false,
            dimension: 2,
            diffusion: None,
            snapshot_every: 0,
            source: AccuracySource::Conservative,
        }
    }
}

/// Problem, grid and sampled fields described by a configuration.
pub struct Prepared {
    pub problem: ProblemSpec,
    pub grid: Grid,
    pub fields: SampledFields,
    pub dt: f64,
}

pub fn prepare(cfg: &RunConfig) -> Result<Prepared> {
    let mut problem = match &cfg.problem {
        ProblemSource::Catalog(name) => {
            let mut p = if name == "accuracy" {
                crate::problem::accuracy(cfg.source)
            } else {
                catalog(name, cfg.dimension).map_err(|_| {
                    Error::config(format!("unknown problem '{name}'; available: {}", CATALOG.join(", ")))
                })?
            };
            if let Some(m) = cfg.model {
                p.model = m;
            }
            if let Some(d) = cfg.diffusion {
                p.diffusion = d;
            }
            p
        }
        ProblemSource::Table(path) => {
            let d = cfg
                .diffusion
                .ok_or_else(|| Error::config("tabulated problems need --diffusion"))?;
            load_table(path, cfg.model.unwrap_or(Model::Model1), d)?
        }
    };
    if let Some(dt) = cfg.dt {
        problem.time_step = dt;
    } else if matches!(cfg.problem, ProblemSource::Table(_)) {
        return Err(Error::config("tabulated problems need --dt"));
    }
    if let StopChoice::FinalTime(Some(t)) = cfg.stop {
        problem.final_time = t;
    }
    if cfg.cells == 0 {
        return Err(Error::config("cells per axis must be positive"));
    }
    problem.validate()?;
    let grid = match problem.points_per_axis {
        Some(_) => problem.table_grid(cfg.order)?,
        None => problem.grid(cfg.cells, cfg.order)?,
    };
    let fields = sample(&problem, &grid)?;
    let dt = problem.time_step;
    Ok(Prepared { problem, grid, fields, dt })
}

#[derive(Clone, Debug)]
pub struct RunSummary {
    pub steps: usize,
    pub final_time: f64,
    pub max_mass_drift: f64,
    pub min_density: f64,
    pub report: MonotonicityReport,
    pub trace: RunTrace,
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path).map_err(|e| {
        Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display())))
    })?))
}

pub fn write_field(path: &Path, grid: &Grid, rho: &[f64]) -> Result<()> {
    let mut w = create(path)?;
    if grid.dimension() == 1 {
        writeln!(w, "x,rho")?;
    } else {
        writeln!(w, "x,y,rho")?;
    }
    for (k, r) in rho.iter().enumerate() {
        let (x, y) = grid.point(k);
        if grid.dimension() == 1 {
            writeln!(w, "{x:.16e},{r:.16e}")?;
        } else {
            writeln!(w, "{x:.16e},{y:.16e},{r:.16e}")?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Time loop with snapshots, trace, certificate and summary in `cfg.out`.
pub fn cmd_run(cfg: &RunConfig) -> Result<RunSummary> {
    let p = prepare(cfg)?;
    fs::create_dir_all(&cfg.out)?;
    let report = certify(
        &p.grid,
        &p.fields,
        p.problem.diffusion,
        p.dt,
        p.problem.measure_gradient.as_ref(),
        cfg.oracle,
    )?;
    let scheme = assemble(&p.grid, &p.fields, p.problem.diffusion, p.dt)?;
    let stop = match cfg.stop {
        StopChoice::FinalTime(_) => StopRule::FinalTime(p.problem.final_time),
        StopChoice::Steady { max_steps } => StopRule::steady(max_steps),
    };
    let every = cfg.snapshot_every;
    let mut last_written = None;
    let out = run_with_observer(&scheme, &p.fields, stop, cfg.entropy, &SolveOptions::default(), |s: &State| {
        if s.step == 0 || (every > 0 && s.step % every == 0) {
            write_field(&cfg.out.join(format!("field_{}.csv", s.step)), &p.grid, &s.rho)?;
            last_written = Some(s.step);
        }
        Ok(())
    })?;
    if last_written != Some(out.state.step) {
        write_field(&cfg.out.join(format!("field_{}.csv", out.state.step)), &p.grid, &out.state.rho)?;
    }
    let mut w = create(&cfg.out.join("trace.csv"))?;
    out.trace.write_csv(&mut w)?;
    w.flush()?;
    write_report(&cfg.out, &report)?;

    let source_rate = mass(&p.fields.source, &scheme.weights);
    let summary = RunSummary {
        steps: out.state.step,
        final_time: out.state.time,
        max_mass_drift: out.trace.max_mass_drift(source_rate, p.dt),
        min_density: out.trace.rows.iter().map(|r| r.min_rho).fold(f64::INFINITY, f64::min),
        report,
        trace: out.trace,
    };
    let mut w = create(&cfg.out.join("summary.txt"))?;
    write!(w, "{}", summary_text(&p, &summary))?;
    w.flush()?;
    Ok(summary)
}

fn summary_text(p: &Prepared, s: &RunSummary) -> String {
    format!(
        "problem = {}\nmodel = {:?}\norder = {}\ndimension = {}\npoints_per_axis = {}\n\
         diffusion = {:.16e}\ndt = {:.16e}\nsteps = {}\nfinal_time = {:.16e}\nreached_steady = {}\n\
         max_mass_drift = {:.16e}\nmin_density = {:.16e}\nfinal_chi2 = {:.16e}\nverdict = {}\n",
        p.problem.name,
        p.problem.model,
        p.grid.order(),
        p.grid.dimension(),
        p.grid.points_per_axis(),
        p.problem.diffusion,
        p.dt,
        s.steps,
        s.final_time,
        s.trace.reached_steady,
        s.max_mass_drift,
        s.min_density,
        s.trace.rows.last().map_or(0.0, |r| r.chi2),
        s.report.verdict,
    )
}

fn write_report(dir: &Path, report: &MonotonicityReport) -> Result<()> {
    fs::write(dir.join("report.txt"), report.to_text())?;
    fs::write(dir.join("report.csv"), report.to_csv())?;
    Ok(())
}

/// Monotonicity certificate for the configured problem.
pub fn cmd_certify(cfg: &RunConfig) -> Result<MonotonicityReport> {
    let p = prepare(cfg)?;
    let report = certify(
        &p.grid,
        &p.fields,
        p.problem.diffusion,
        p.dt,
        p.problem.measure_gradient.as_ref(),
        cfg.oracle,
    )?;
    fs::create_dir_all(&cfg.out)?;
    write_report(&cfg.out, &report)?;
    Ok(report)
}

/// Refinement study written to `convergence.csv` in `out`.
pub fn cmd_convergence(
    order: Order,
    points: &[usize],
    final_time: f64,
    source: AccuracySource,
    out: &Path,
) -> Result<Vec<ConvergenceRow>> {
    let rows = convergence_study(order, points, final_time, source)?;
    fs::create_dir_all(out)?;
    let mut w = create(&out.join("convergence.csv"))?;
    write_csv(&rows, &mut w)?;
    w.flush()?;
    Ok(rows)
}
